// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include "clcc/augment.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace clcc {

namespace {

constexpr double kMinNegativeAngleDeg = 0.1;

IlluminantRGB ramp_direction(const CheckerColors& c) {
    const auto mean = c.neutral_ramp_mean();
    return IlluminantRGB(mean[0], mean[1], mean[2]).normalized();
}

// Novel illuminant for the WB-Aug reduction: the checkers degrade to the
// neutral colors, so C_C's ramp degrades to (1-w) L_A + w L_B.
std::optional<IlluminantRGB> wb_novel_illuminant(const IlluminantRGB& l_a, const IlluminantRGB& l_b,
                                                 double w) {
    const double r = (1.0 - w) * l_a.r + w * l_b.r;
    const double g = (1.0 - w) * l_a.g + w * l_b.g;
    const double b = (1.0 - w) * l_a.b + w * l_b.b;
    if (!(r > 1e-12 && g > 1e-12 && b > 1e-12)) {
        return std::nullopt; // extrapolated outside the physical gain cone
    }
    return IlluminantRGB(r, g, b);
}

// Same physicality condition as the WB reduction: the interpolated neutral
// ramp must stay positive in every channel, so both modes sample comparable
// weights. Interpolation commutes with the ramp mean, so this is evaluated
// before any clamping.
std::optional<IlluminantRGB> full_novel_illuminant(const CheckerColors& c_a,
                                                   const CheckerColors& c_b, double w) {
    const auto ma = c_a.neutral_ramp_mean();
    const auto mb = c_b.neutral_ramp_mean();
    std::array<double, 3> mc{};
    for (int c = 0; c < 3; ++c) {
        mc[static_cast<std::size_t>(c)] = (1.0 - w) * ma[static_cast<std::size_t>(c)] +
                                          w * mb[static_cast<std::size_t>(c)];
    }
    if (!(mc[0] > 1e-12 && mc[1] > 1e-12 && mc[2] > 1e-12)) {
        return std::nullopt;
    }
    return IlluminantRGB(mc[0], mc[1], mc[2]).normalized();
}

} // namespace

void PerturbConfig::validate() const {
    if (!(gain_min > 0.0) || gain_max < gain_min) {
        throw DomainError("intensity gain range must be positive and well-ordered");
    }
    if (gauss_std_min < 0.0 || gauss_std_max < gauss_std_min || shot_std_min < 0.0 ||
        shot_std_max < shot_std_min) {
        throw DomainError("noise std ranges must be nonnegative and well-ordered");
    }
}

PerturbConfig PerturbConfig::disabled() {
    PerturbConfig cfg;
    cfg.gain_min = cfg.gain_max = 1.0;
    cfg.gauss_std_min = cfg.gauss_std_max = 0.0;
    cfg.shot_std_min = cfg.shot_std_max = 0.0;
    return cfg;
}

void MixWeightConfig::validate() const {
    if (!(neg_min <= neg_max && neg_max < 0.0)) {
        throw DomainError("negative w range must be well-ordered and exclude zero");
    }
    if (!(0.0 < pos_min && pos_min <= pos_max)) {
        throw DomainError("positive w range must be well-ordered and exclude zero");
    }
}

double MixWeightConfig::sample(Rng& rng) const {
    validate();
    if (rng.uniform() < 0.5) {
        return rng.uniform(neg_min, neg_max);
    }
    return rng.uniform(pos_min, pos_max);
}

RawImage perturb(const RawImage& img, const PerturbConfig& cfg, Rng& rng) {
    cfg.validate();
    const double gain = rng.uniform(cfg.gain_min, cfg.gain_max);
    const double shot_std = rng.uniform(cfg.shot_std_min, cfg.shot_std_max);
    const double gauss_std = rng.uniform(cfg.gauss_std_min, cfg.gauss_std_max);

    RawImage out;
    out.width = img.width;
    out.height = img.height;
    out.data.resize(img.data.size());
    const bool noisy = shot_std > 0.0 || gauss_std > 0.0;
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double v = img.data[i];
        double y = gain * v;
        if (noisy) {
            y += std::sqrt(std::max(v, 0.0)) * shot_std * rng.normal();
            y += gauss_std * rng.normal();
        }
        out.data[i] = std::max(y, 0.0);
    }
    return out;
}

CheckerColors synth_novel_checker(const CheckerColors& c_a, const CheckerColors& c_b, double w) {
    if (!std::isfinite(w)) {
        throw DomainError("mixing weight must be finite");
    }
    CheckerColors out;
    for (int p = 0; p < CheckerColors::kPatches; ++p) {
        for (int c = 0; c < 3; ++c) {
            const double v = (1.0 - w) * c_a.colors[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)] +
                             w * c_b.colors[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)];
            out.colors[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)] = std::max(v, 0.0);
        }
    }
    return out;
}

ColorMatrix3 interpolate_transform(const ColorMatrix3& m, double w, InterpDirection dir) {
    if (!m.finite() || !std::isfinite(w)) {
        throw DomainError("interpolate_transform requires finite inputs");
    }
    const ColorMatrix3 eye = ColorMatrix3::identity();
    if (dir == InterpDirection::AtoC) {
        return eye.scaled(1.0 - w) + m.scaled(w);
    }
    return eye.scaled(w) + m.scaled(1.0 - w);
}

namespace {

RelightResult relight_with_matrix(const RawImage& img, const CheckerColors& c_src,
                                  const ColorMatrix3& m, double fit_residual) {
    RelightResult out;
    out.image = apply_color_matrix(img, m, /*clamp_negative=*/true);
    for (int p = 0; p < CheckerColors::kPatches; ++p) {
        const auto& s = c_src.colors[static_cast<std::size_t>(p)];
        for (int c = 0; c < 3; ++c) {
            const double v = s[0] * m.at(0, c) + s[1] * m.at(1, c) + s[2] * m.at(2, c);
            out.checker.colors[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)] =
                std::max(v, 0.0);
        }
    }
    out.illuminant = ramp_direction(out.checker);
    out.fit_residual = fit_residual;
    return out;
}

} // namespace

RelightResult relight_full(const RawImage& img, const CheckerColors& c_src,
                           const CheckerColors& c_dst) {
    const FitResult fit = fit_color_transform(c_src, c_dst);
    return relight_with_matrix(img, c_src, fit.m, fit.residual);
}

RelightResult relight_full(const RawImage& img, const CheckerColors& c_src,
                           const CheckerColors& c_other, double w) {
    const FitResult fit = fit_color_transform(c_src, c_other);
    const ColorMatrix3 m = interpolate_transform(fit.m, w, InterpDirection::AtoC);
    return relight_with_matrix(img, c_src, m, fit.residual);
}

RawImage relight_wb(const RawImage& img, const IlluminantRGB& l_src, const IlluminantRGB& l_dst) {
    if (!(l_src.r > 0.0 && l_src.g > 0.0 && l_src.b > 0.0 && l_dst.r > 0.0 && l_dst.g > 0.0 &&
          l_dst.b > 0.0)) {
        throw DomainError("relight_wb requires strictly positive illuminant components");
    }
    const ColorMatrix3 m = wb_matrix(l_src) * invert(wb_matrix(l_dst));
    return apply_color_matrix(img, m, /*clamp_negative=*/true);
}

ContrastiveQuadruple build_quadruple(const LabeledImage& sample_a, const LabeledImage& sample_b,
                                     AugMode mode, double w, const PerturbConfig& perturb_cfg,
                                     Rng& rng) {
    if (sample_a.scene_id == sample_b.scene_id) {
        throw DomainError("contrastive pair needs distinct scenes");
    }
    if (angular_error_degrees(sample_a.illuminant, sample_b.illuminant) <= kMinNegativeAngleDeg) {
        throw IlluminantsTooCloseError("pair illuminants are angularly too close; resample");
    }

    const IlluminantRGB& l_a = sample_a.illuminant;
    const IlluminantRGB& l_b = sample_b.illuminant;

    ContrastiveQuadruple quad;
    quad.scene_a = sample_a.scene_id;
    quad.scene_b = sample_b.scene_id;
    quad.w = w;
    quad.mode_requested = mode;
    quad.mode_used = mode;
    quad.anchor_illuminant = l_a;

    RawImage hard_pos_base, easy_neg_base, hard_neg_base;

    if (mode == AugMode::FullAug) {
        try {
            const FitResult fit_ab = fit_color_transform(sample_a.checker, sample_b.checker);
            const ColorMatrix3 m_ba = invert(fit_ab.m);
            const ColorMatrix3 m_ac = interpolate_transform(fit_ab.m, w, InterpDirection::AtoC);
            const ColorMatrix3 m_bc = interpolate_transform(m_ba, w, InterpDirection::BtoC);

            const auto l_c = full_novel_illuminant(sample_a.checker, sample_b.checker, w);
            if (!l_c || angular_error_degrees(l_a, *l_c) <= kMinNegativeAngleDeg) {
                throw IlluminantsTooCloseError("novel illuminant too close to the anchor; resample w");
            }
            quad.novel_illuminant = *l_c;

            hard_pos_base = apply_color_matrix(sample_b.image, m_ba);
            easy_neg_base = apply_color_matrix(sample_b.image, m_bc);
            hard_neg_base = apply_color_matrix(sample_a.image, m_ac);
        } catch (const RankDeficientError&) {
            quad.mode_used = AugMode::WBAug; // the WB-Aug reduction of the paper
        }
    }

    if (quad.mode_used == AugMode::WBAug || mode == AugMode::WBAug) {
        quad.mode_used = AugMode::WBAug;
        const auto l_c = wb_novel_illuminant(l_a, l_b, w);
        if (!l_c || angular_error_degrees(l_a, *l_c) <= kMinNegativeAngleDeg) {
            throw IlluminantsTooCloseError("novel illuminant too close to the anchor; resample w");
        }
        quad.novel_illuminant = *l_c;

        hard_pos_base = relight_wb(sample_b.image, l_b, l_a);
        easy_neg_base = relight_wb(sample_b.image, l_b, *l_c);
        hard_neg_base = relight_wb(sample_a.image, l_a, *l_c);
    }

    quad.anchor = perturb(sample_a.image, perturb_cfg, rng);
    quad.easy_pos = perturb(sample_a.image, perturb_cfg, rng);
    quad.hard_pos = perturb(hard_pos_base, perturb_cfg, rng);
    quad.easy_neg = perturb(easy_neg_base, perturb_cfg, rng);
    quad.hard_neg = perturb(hard_neg_base, perturb_cfg, rng);
    return quad;
}

ContrastiveQuadruple build_quadruple(const LabeledImage& sample_a, const LabeledImage& sample_b,
                                     AugMode mode, const MixWeightConfig& mix,
                                     const PerturbConfig& perturb_cfg, Rng& rng) {
    constexpr int kMaxTries = 16;
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
        const double w = mix.sample(rng);
        try {
            return build_quadruple(sample_a, sample_b, mode, w, perturb_cfg, rng);
        } catch (const IlluminantsTooCloseError&) {
            if (angular_error_degrees(sample_a.illuminant, sample_b.illuminant) <=
                kMinNegativeAngleDeg) {
                throw; // the pair itself is bad, a new w cannot fix it
            }
        }
    }
    throw IlluminantsTooCloseError("could not sample a usable mixing weight for this pair");
}

} // namespace clcc
