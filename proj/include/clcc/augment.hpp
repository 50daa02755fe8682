// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#pragma once

#include "clcc/color_math.hpp"
#include "clcc/rng.hpp"
#include "clcc/scene_synth.hpp"

namespace clcc {

/// Stochastic illuminant-preserving perturbation t(.) ranges, for images
/// normalized to roughly [0, 1].
struct PerturbConfig {
    double gain_min = 0.8, gain_max = 1.2;
    double gauss_std_min = 0.0, gauss_std_max = 0.04;
    double shot_std_min = 0.02, shot_std_max = 0.06;

    void validate() const;
    static PerturbConfig disabled(); // gain [1,1], both noise ranges [0,0]
};

/// Mixing weight w for novel illuminant synthesis, sampled uniformly from
/// [-5.0, -0.3] or [+0.3, +5.0] with equal probability per range. Zero is
/// excluded so a synthesized negative never collapses onto the anchor.
struct MixWeightConfig {
    double neg_min = -5.0, neg_max = -0.3;
    double pos_min = 0.3, pos_max = 5.0;

    void validate() const;
    double sample(Rng& rng) const;
};

/// out = clamp0(gain*img + sqrt(max(img,0))*shot_std*e1 + gauss_std*e2),
/// with one gain/shot_std/gauss_std draw per image and per-value standard
/// normals. The ground-truth illuminant label is unchanged by contract.
RawImage perturb(const RawImage& img, const PerturbConfig& cfg, Rng& rng);

/// C_C = (1-w) C_A + w C_B elementwise, negatives clamped to 0.
CheckerColors synth_novel_checker(const CheckerColors& c_a, const CheckerColors& c_b, double w);

enum class InterpDirection {
    AtoC, // (1-w) I + w M_AB
    BtoC, // w I + (1-w) M_BA   (caller passes M_BA)
};

/// Interpolated color transform toward the novel illuminant, computed from
/// the identity and a fitted mapping without re-solving least squares.
ColorMatrix3 interpolate_transform(const ColorMatrix3& m, double w, InterpDirection dir);

struct RelightResult {
    RawImage image;
    IlluminantRGB illuminant; // direction of the relit neutral ramp
    CheckerColors checker;    // relit checker colors
    double fit_residual = 0.0;
};

/// Full (3x3) relighting: fits M = lsq(c_src -> c_dst) and applies it. The
/// returned ground truth is computed from the relit neutral checker ramp.
/// Throws RankDeficientError when c_src does not span RGB; callers treat
/// that as a fall-back-to-WB signal.
RelightResult relight_full(const RawImage& img, const CheckerColors& c_src,
                           const CheckerColors& c_dst);

/// Same, but toward the novel checker at weight w: applies
/// (1-w) I + w lsq(c_src -> c_other).
RelightResult relight_full(const RawImage& img, const CheckerColors& c_src,
                           const CheckerColors& c_other, double w);

/// Diagonal (WB-only) relighting: white-balance with l_src, then inverse
/// white-balance with l_dst. Neutral colors map exactly; chromatic colors
/// only approximately.
RawImage relight_wb(const RawImage& img, const IlluminantRGB& l_src, const IlluminantRGB& l_dst);

enum class AugMode { FullAug, WBAug };

/// The four contrastive views around one anchor, plus provenance.
/// anchor, easy_pos and hard_pos carry illuminant L_A = anchor_illuminant;
/// easy_neg and hard_neg carry the novel illuminant L_C, synthesized at one
/// shared weight w. angular(L_A, L_C) > 0.1 degrees by construction.
struct ContrastiveQuadruple {
    RawImage anchor;   // t(I_XA)
    RawImage easy_pos; // t'(I_XA)
    RawImage hard_pos; // t'(I_YA)
    RawImage easy_neg; // t'(I_YC)
    RawImage hard_neg; // t'(I_XC)

    IlluminantRGB anchor_illuminant; // L_A
    IlluminantRGB novel_illuminant;  // L_C

    int scene_a = 0, scene_b = 0;
    double w = 0.0;
    AugMode mode_requested = AugMode::FullAug;
    AugMode mode_used = AugMode::FullAug; // FullAug falls back on rank-deficient checkers
};

/// Builds the quadruple with an explicit mixing weight. Preconditions:
/// distinct scene ids and angular(L_A, L_B) > 0.1 degrees, otherwise
/// IlluminantsTooCloseError / DomainError. If the synthesized L_C lands
/// within 0.1 degrees of L_A the same error is raised (resample w).
ContrastiveQuadruple build_quadruple(const LabeledImage& sample_a, const LabeledImage& sample_b,
                                     AugMode mode, double w, const PerturbConfig& perturb_cfg,
                                     Rng& rng);

/// Samples w from the mix config, retrying until the novel illuminant is a
/// valid negative (bounded retries, then IlluminantsTooCloseError).
ContrastiveQuadruple build_quadruple(const LabeledImage& sample_a, const LabeledImage& sample_b,
                                     AugMode mode, const MixWeightConfig& mix,
                                     const PerturbConfig& perturb_cfg, Rng& rng);

} // namespace clcc
