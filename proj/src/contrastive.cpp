// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include "clcc/contrastive.hpp"

#include <algorithm>
#include <cmath>

namespace clcc {

Projection Projection::unit(std::vector<double> z) {
    double n2 = 0.0;
    for (double v : z) {
        if (!std::isfinite(v)) {
            throw DomainError("projection has non-finite entries");
        }
        n2 += v * v;
    }
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-6) {
        throw DomainError("projection must lie on the unit hypersphere");
    }
    Projection p;
    p.z = std::move(z);
    return p;
}

void NceConfig::validate() const {
    if (!(temperature > 0.0)) {
        throw DomainError("temperature must be positive");
    }
    if (n_negatives < 1) {
        throw DomainError("need at least one negative");
    }
}

double cosine_similarity(const Projection& a, const Projection& b) {
    if (a.dim() != b.dim() || a.dim() == 0) {
        throw DomainError("projection dimensions do not match");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.z.size(); ++i) {
        s += a.z[i] * b.z[i];
    }
    return s;
}

NceResult info_nce(double s_pos, const std::vector<double>& s_negs, double temperature) {
    if (!(temperature > 0.0)) {
        throw DomainError("temperature must be positive");
    }
    if (s_negs.empty()) {
        throw DomainError("InfoNCE needs at least one negative score");
    }

    const double a_pos = s_pos / temperature;
    double a_max = a_pos;
    for (double s : s_negs) {
        a_max = std::max(a_max, s / temperature);
    }
    double denom = std::exp(a_pos - a_max);
    std::vector<double> exps(s_negs.size());
    for (std::size_t i = 0; i < s_negs.size(); ++i) {
        exps[i] = std::exp(s_negs[i] / temperature - a_max);
        denom += exps[i];
    }

    NceResult out;
    const double p_pos = std::exp(a_pos - a_max) / denom;
    out.loss = -(a_pos - a_max) + std::log(denom);
    out.d_s_pos = (p_pos - 1.0) / temperature;
    out.d_s_negs.resize(s_negs.size());
    for (std::size_t i = 0; i < s_negs.size(); ++i) {
        out.d_s_negs[i] = (exps[i] / denom) / temperature;
    }
    return out;
}

namespace {

void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] += a * x[i];
    }
}

} // namespace

ClccResult clcc_loss(const Projection& z_xa, const Projection& z_xa_pos,
                     const Projection& z_ya_pos, const Projection& z_xc_neg,
                     const Projection& z_yc_neg, const std::vector<Projection>& extra_negs,
                     const NceConfig& cfg) {
    cfg.validate();
    const std::size_t d = z_xa.dim();
    for (const Projection* p : {&z_xa_pos, &z_ya_pos, &z_xc_neg, &z_yc_neg}) {
        if (p->dim() != d) {
            throw DomainError("projection dimensions do not match");
        }
    }
    for (const Projection& p : extra_negs) {
        if (p.dim() != d) {
            throw DomainError("projection dimensions do not match");
        }
    }

    const std::size_t n_extra =
        std::min(extra_negs.size(), static_cast<std::size_t>(cfg.n_negatives - 1));

    ClccResult out;
    out.grads.d_xa.assign(d, 0.0);
    out.grads.d_xa_pos.assign(d, 0.0);
    out.grads.d_ya_pos.assign(d, 0.0);
    out.grads.d_xc_neg.assign(d, 0.0);
    out.grads.d_yc_neg.assign(d, 0.0);
    out.grads.d_extra.assign(extra_negs.size(), std::vector<double>(d, 0.0));

    struct Term {
        const Projection* pos;
        std::vector<double>* d_pos;
        const Projection* neg;
        std::vector<double>* d_neg;
    };
    const Term terms[4] = {
        {&z_xa_pos, &out.grads.d_xa_pos, &z_yc_neg, &out.grads.d_yc_neg},
        {&z_xa_pos, &out.grads.d_xa_pos, &z_xc_neg, &out.grads.d_xc_neg},
        {&z_ya_pos, &out.grads.d_ya_pos, &z_yc_neg, &out.grads.d_yc_neg},
        {&z_ya_pos, &out.grads.d_ya_pos, &z_xc_neg, &out.grads.d_xc_neg},
    };

    for (const Term& term : terms) {
        std::vector<double> s_negs;
        s_negs.reserve(1 + n_extra);
        s_negs.push_back(cosine_similarity(z_xa, *term.neg));
        for (std::size_t i = 0; i < n_extra; ++i) {
            s_negs.push_back(cosine_similarity(z_xa, extra_negs[i]));
        }
        const NceResult nce = info_nce(cosine_similarity(z_xa, *term.pos), s_negs, cfg.temperature);
        out.loss += nce.loss;

        axpy(out.grads.d_xa, nce.d_s_pos, term.pos->z);
        axpy(*term.d_pos, nce.d_s_pos, z_xa.z);
        axpy(out.grads.d_xa, nce.d_s_negs[0], term.neg->z);
        axpy(*term.d_neg, nce.d_s_negs[0], z_xa.z);
        for (std::size_t i = 0; i < n_extra; ++i) {
            axpy(out.grads.d_xa, nce.d_s_negs[i + 1], extra_negs[i].z);
            axpy(out.grads.d_extra[i], nce.d_s_negs[i + 1], z_xa.z);
        }
    }
    return out;
}

} // namespace clcc
