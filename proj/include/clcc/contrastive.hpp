// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#pragma once

#include <vector>

#include "clcc/errors.hpp"

namespace clcc {

/// A latent projection on the unit hypersphere.
struct Projection {
    std::vector<double> z;

    /// Validates unit norm within 1e-6.
    static Projection unit(std::vector<double> z);
    std::size_t dim() const { return z.size(); }
};

struct NceConfig {
    double temperature = 0.87;
    int n_negatives = 12;

    void validate() const;
};

/// Cosine similarity of two unit projections (a plain dot product).
double cosine_similarity(const Projection& a, const Projection& b);

struct NceResult {
    double loss = 0.0;
    double d_s_pos = 0.0;              // d loss / d s_pos
    std::vector<double> d_s_negs;      // d loss / d s_neg[i]
};

/// InfoNCE as an (N+1)-way cross entropy over similarity scores, computed
/// with max-subtraction. Throws DomainError on an empty negative list or a
/// nonpositive temperature.
NceResult info_nce(double s_pos, const std::vector<double>& s_negs, double temperature);

struct ClccGrads {
    std::vector<double> d_xa, d_xa_pos, d_ya_pos, d_xc_neg, d_yc_neg;
    std::vector<std::vector<double>> d_extra;
};

struct ClccResult {
    double loss = 0.0;
    ClccGrads grads;
};

/// The four-term contrastive objective around one anchor:
///   NCE(z_xa, z_xa+, {z_yc-} u extras) + NCE(z_xa, z_xa+, {z_xc-} u extras)
/// + NCE(z_xa, z_ya+, {z_yc-} u extras) + NCE(z_xa, z_ya+, {z_xc-} u extras)
/// Each term's negative set is the designated negative plus the first
/// N-1 extra negatives (fewer when the batch cannot supply them).
/// Returns the loss and gradients with respect to every projection.
ClccResult clcc_loss(const Projection& z_xa, const Projection& z_xa_pos,
                     const Projection& z_ya_pos, const Projection& z_xc_neg,
                     const Projection& z_yc_neg, const std::vector<Projection>& extra_negs,
                     const NceConfig& cfg);

} // namespace clcc
