// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include "clcc/model.hpp"

#include <algorithm>
#include <cmath>

#include "clcc/errors.hpp"

namespace clcc {

namespace {

// C[m,n] += A[m,k] * B[k,n], row-major. The j loop is contiguous on both
// sides, which is what the compiler needs to vectorize it.
template <class T>
void gemm_acc(int m, int k, int n, const T* A, const T* B, T* C) {
    for (int i = 0; i < m; ++i) {
        const T* a = A + static_cast<std::size_t>(i) * k;
        T* c = C + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const T av = a[p];
            const T* b = B + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) {
                c[j] += av * b[j];
            }
        }
    }
}

// C[m,k] += A[m,n] * B[k,n]^T (contraction over the fast axis of both).
// Four independent accumulators break the serial dependency of the dot
// product, which the compiler cannot reassociate on its own.
template <class T>
void gemm_abt(int m, int n, int k, const T* A, const T* B, T* C) {
    const int n4 = n & ~3;
    for (int i = 0; i < m; ++i) {
        const T* a = A + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const T* b = B + static_cast<std::size_t>(p) * n;
            T s0 = T(0), s1 = T(0), s2 = T(0), s3 = T(0);
            for (int j = 0; j < n4; j += 4) {
                s0 += a[j] * b[j];
                s1 += a[j + 1] * b[j + 1];
                s2 += a[j + 2] * b[j + 2];
                s3 += a[j + 3] * b[j + 3];
            }
            T acc = (s0 + s1) + (s2 + s3);
            for (int j = n4; j < n; ++j) {
                acc += a[j] * b[j];
            }
            C[static_cast<std::size_t>(i) * k + p] += acc;
        }
    }
}

// C[k,n] += A[m,k]^T * B[m,n].
template <class T>
void gemm_atb(int m, int k, int n, const T* A, const T* B, T* C) {
    for (int i = 0; i < m; ++i) {
        const T* a = A + static_cast<std::size_t>(i) * k;
        const T* b = B + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const T av = a[p];
            T* c = C + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) {
                c[j] += av * b[j];
            }
        }
    }
}

constexpr int kKernel = 3;
constexpr int kStride = 2;
constexpr int kPad = 1;

int conv_out_size(int n) { return (n - 1) / kStride + 1; }

// Valid output range [lo, hi) for one kernel offset: positions whose sampled
// input index k + o * stride - pad lands inside [0, h).
struct TapRange {
    int lo, hi;
};

TapRange tap_range(int k, int h, int ho) {
    const int lo = (k < kPad) ? (kPad - k + kStride - 1) / kStride : 0;
    const int num = h - 1 + kPad - k;
    int hi = (num < 0) ? 0 : num / kStride + 1; // guard: C++ division truncates toward zero
    if (hi > ho) {
        hi = ho;
    }
    return {lo, hi};
}

// x: [C, H, H] -> cols: [C*9, Ho*Ho]
template <class T>
void im2col(const T* x, int channels, int h, std::vector<T>& cols) {
    const int ho = conv_out_size(h);
    cols.assign(static_cast<std::size_t>(channels) * 9 * ho * ho, T(0));
    for (int c = 0; c < channels; ++c) {
        const T* xc = x + static_cast<std::size_t>(c) * h * h;
        for (int ky = 0; ky < kKernel; ++ky) {
            const TapRange ry = tap_range(ky, h, ho);
            for (int kx = 0; kx < kKernel; ++kx) {
                const TapRange rx = tap_range(kx, h, ho);
                T* row = cols.data() +
                         (static_cast<std::size_t>(c) * 9 + static_cast<std::size_t>(ky) * 3 + kx) *
                             ho * ho;
                const int dx_off = kx - kPad;
                for (int oy = ry.lo; oy < ry.hi; ++oy) {
                    const int iy = oy * kStride - kPad + ky;
                    const T* src = xc + static_cast<std::size_t>(iy) * h;
                    T* dst = row + static_cast<std::size_t>(oy) * ho;
                    for (int ox = rx.lo; ox < rx.hi; ++ox) {
                        dst[ox] = src[ox * kStride + dx_off];
                    }
                }
            }
        }
    }
}

// Scatter-add of the cols gradient back onto the input image.
template <class T>
void col2im_acc(const std::vector<T>& dcols, int channels, int h, T* dx) {
    const int ho = conv_out_size(h);
    for (int c = 0; c < channels; ++c) {
        T* dxc = dx + static_cast<std::size_t>(c) * h * h;
        for (int ky = 0; ky < kKernel; ++ky) {
            const TapRange ry = tap_range(ky, h, ho);
            for (int kx = 0; kx < kKernel; ++kx) {
                const TapRange rx = tap_range(kx, h, ho);
                const T* row = dcols.data() +
                               (static_cast<std::size_t>(c) * 9 + static_cast<std::size_t>(ky) * 3 +
                                kx) *
                                   ho * ho;
                const int dx_off = kx - kPad;
                for (int oy = ry.lo; oy < ry.hi; ++oy) {
                    const int iy = oy * kStride - kPad + ky;
                    T* dst = dxc + static_cast<std::size_t>(iy) * h;
                    const T* src = row + static_cast<std::size_t>(oy) * ho;
                    for (int ox = rx.lo; ox < rx.hi; ++ox) {
                        dst[ox * kStride + dx_off] += src[ox];
                    }
                }
            }
        }
    }
}

template <class T>
T softplus(T x) {
    if (x > T(0)) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

template <class T>
T sigmoid(T x) {
    if (x >= T(0)) {
        return T(1) / (T(1) + std::exp(-x));
    }
    const T e = std::exp(x);
    return e / (T(1) + e);
}

// y = W x + b with W: [out, in]
template <class T>
void linear_forward(const Ten<T>& w, const Ten<T>& b, const T* x, int in, int out, T* y) {
    for (int i = 0; i < out; ++i) {
        const T* wi = w.v.data() + static_cast<std::size_t>(i) * in;
        T acc = b.v[static_cast<std::size_t>(i)];
        for (int j = 0; j < in; ++j) {
            acc += wi[j] * x[j];
        }
        y[i] = acc;
    }
}

template <class T>
void linear_backward(const Ten<T>& w, const T* x, const T* dy, int in, int out, Ten<T>& dw,
                     Ten<T>& db, T* dx) {
    for (int i = 0; i < out; ++i) {
        const T g = dy[i];
        db.v[static_cast<std::size_t>(i)] += g;
        T* dwi = dw.v.data() + static_cast<std::size_t>(i) * in;
        const T* wi = w.v.data() + static_cast<std::size_t>(i) * in;
        for (int j = 0; j < in; ++j) {
            dwi[j] += g * x[j];
            if (dx) {
                dx[j] += wi[j] * g;
            }
        }
    }
}

} // namespace

void NetConfig::validate() const {
    if (conv_channels < 1 || proj_hidden < 1 || proj_dim < 1) {
        throw DomainError("network widths must be positive");
    }
    if (crop < 4) {
        throw DomainError("crop too small for four stride-2 convolutions");
    }
    if (dropout < 0.0 || dropout >= 1.0) {
        throw DomainError("dropout must be in [0, 1)");
    }
}

template <class T>
ModelParams<T> ModelParams<T>::zeros(const NetConfig& cfg) {
    cfg.validate();
    const auto widths = cfg.conv_widths();
    ModelParams<T> p;
    int in_ch = 3;
    for (int l = 0; l < 4; ++l) {
        p.conv_w[static_cast<std::size_t>(l)] = Ten<T>::zeros({widths[static_cast<std::size_t>(l)], in_ch * 9});
        p.conv_b[static_cast<std::size_t>(l)] = Ten<T>::zeros({widths[static_cast<std::size_t>(l)]});
        in_ch = widths[static_cast<std::size_t>(l)];
    }
    const int f = cfg.feature_dim();
    p.fc_w = Ten<T>::zeros({3, f});
    p.fc_b = Ten<T>::zeros({3});
    p.p1_w = Ten<T>::zeros({cfg.proj_hidden, f});
    p.p1_b = Ten<T>::zeros({cfg.proj_hidden});
    p.p2_w = Ten<T>::zeros({cfg.proj_hidden, cfg.proj_hidden});
    p.p2_b = Ten<T>::zeros({cfg.proj_hidden});
    p.p3_w = Ten<T>::zeros({cfg.proj_dim, cfg.proj_hidden});
    p.p3_b = Ten<T>::zeros({cfg.proj_dim});
    return p;
}

template <class T>
ModelParams<T> ModelParams<T>::init(const NetConfig& cfg, Rng rng) {
    ModelParams<T> p = zeros(cfg);
    auto he_fill = [&rng](Ten<T>& w, int fan_in) {
        const double std = std::sqrt(2.0 / fan_in);
        for (T& v : w.v) {
            v = static_cast<T>(rng.normal() * std);
        }
    };
    int in_ch = 3;
    const auto widths = cfg.conv_widths();
    for (int l = 0; l < 4; ++l) {
        he_fill(p.conv_w[static_cast<std::size_t>(l)], in_ch * 9);
        in_ch = widths[static_cast<std::size_t>(l)];
    }
    he_fill(p.fc_w, cfg.feature_dim());
    he_fill(p.p1_w, cfg.feature_dim());
    he_fill(p.p2_w, cfg.proj_hidden);
    he_fill(p.p3_w, cfg.proj_hidden);
    return p;
}

template <class T>
std::vector<Ten<T>*> ModelParams<T>::tensors() {
    return {&conv_w[0], &conv_b[0], &conv_w[1], &conv_b[1], &conv_w[2], &conv_b[2],
            &conv_w[3], &conv_b[3], &fc_w,     &fc_b,      &p1_w,      &p1_b,
            &p2_w,      &p2_b,      &p3_w,     &p3_b};
}

template <class T>
std::vector<const Ten<T>*> ModelParams<T>::tensors() const {
    return {&conv_w[0], &conv_b[0], &conv_w[1], &conv_b[1], &conv_w[2], &conv_b[2],
            &conv_w[3], &conv_b[3], &fc_w,     &fc_b,      &p1_w,      &p1_b,
            &p2_w,      &p2_b,      &p3_w,     &p3_b};
}

template <class T>
const std::vector<std::string>& ModelParams<T>::tensor_names() {
    static const std::vector<std::string> names = {
        "conv1.w", "conv1.b", "conv2.w", "conv2.b", "conv3.w", "conv3.b", "conv4.w", "conv4.b",
        "illum.w", "illum.b", "proj1.w", "proj1.b", "proj2.w", "proj2.b", "proj3.w", "proj3.b"};
    return names;
}

template <class T>
ForwardCache<T> forward(const ModelParams<T>& params, const NetConfig& cfg,
                        const std::vector<T>& input_chw, bool train_mode, Rng* dropout_rng) {
    cfg.validate();
    const int h0 = cfg.crop;
    if (input_chw.size() != static_cast<std::size_t>(3) * h0 * h0) {
        throw DomainError("input does not match the configured crop size");
    }

    ForwardCache<T> cache;
    cache.train_mode = train_mode;
    cache.input = input_chw;
    cache.spatial[0] = h0;

    const auto widths = cfg.conv_widths();
    const T* x = cache.input.data();
    int in_ch = 3;
    int h = h0;
    for (int l = 0; l < 4; ++l) {
        const int out_ch = widths[static_cast<std::size_t>(l)];
        const int ho = conv_out_size(h);
        im2col(x, in_ch, h, cache.cols[static_cast<std::size_t>(l)]);
        auto& act = cache.act[static_cast<std::size_t>(l)];
        act.assign(static_cast<std::size_t>(out_ch) * ho * ho, T(0));
        gemm_acc(out_ch, in_ch * 9, ho * ho, params.conv_w[static_cast<std::size_t>(l)].v.data(),
                 cache.cols[static_cast<std::size_t>(l)].data(), act.data());
        for (int oc = 0; oc < out_ch; ++oc) {
            const T b = params.conv_b[static_cast<std::size_t>(l)].v[static_cast<std::size_t>(oc)];
            T* a = act.data() + static_cast<std::size_t>(oc) * ho * ho;
            for (int i = 0; i < ho * ho; ++i) {
                a[i] = std::max(a[i] + b, T(0)); // bias + ReLU
            }
        }
        x = act.data();
        in_ch = out_ch;
        h = ho;
        cache.spatial[static_cast<std::size_t>(l + 1)] = ho;
    }

    // Global average pool.
    const int f = cfg.feature_dim();
    const int npix = h * h;
    cache.feat.assign(static_cast<std::size_t>(f), T(0));
    for (int c = 0; c < f; ++c) {
        const T* a = cache.act[3].data() + static_cast<std::size_t>(c) * npix;
        T acc = T(0);
        for (int i = 0; i < npix; ++i) {
            acc += a[i];
        }
        cache.feat[static_cast<std::size_t>(c)] = acc / static_cast<T>(npix);
    }

    // Illuminant head: dropout -> linear -> softplus -> L2 normalize.
    std::vector<T> feat_in = cache.feat;
    if (train_mode && cfg.dropout > 0.0) {
        if (dropout_rng == nullptr) {
            throw DomainError("train-mode forward with dropout needs an RNG");
        }
        const double keep = 1.0 - cfg.dropout;
        cache.dropout_mask.assign(static_cast<std::size_t>(f), T(0));
        for (int c = 0; c < f; ++c) {
            if (dropout_rng->uniform() < keep) {
                cache.dropout_mask[static_cast<std::size_t>(c)] = static_cast<T>(1.0 / keep);
            }
            feat_in[static_cast<std::size_t>(c)] *= cache.dropout_mask[static_cast<std::size_t>(c)];
        }
    }
    T fc_out[3];
    linear_forward(params.fc_w, params.fc_b, feat_in.data(), f, 3, fc_out);
    T norm2 = T(0);
    for (int i = 0; i < 3; ++i) {
        cache.fc_pre[static_cast<std::size_t>(i)] = fc_out[i];
        cache.softplus_out[static_cast<std::size_t>(i)] = softplus(fc_out[i]);
        norm2 += cache.softplus_out[static_cast<std::size_t>(i)] * cache.softplus_out[static_cast<std::size_t>(i)];
    }
    const T inv_norm = T(1) / std::sqrt(norm2);
    for (int i = 0; i < 3; ++i) {
        cache.est[static_cast<std::size_t>(i)] = cache.softplus_out[static_cast<std::size_t>(i)] * inv_norm;
    }

    // Projection head: three-layer MLP, unit-norm output.
    cache.mlp_h1.assign(static_cast<std::size_t>(cfg.proj_hidden), T(0));
    linear_forward(params.p1_w, params.p1_b, cache.feat.data(), f, cfg.proj_hidden,
                   cache.mlp_h1.data());
    for (T& v : cache.mlp_h1) {
        v = std::max(v, T(0));
    }
    cache.mlp_h2.assign(static_cast<std::size_t>(cfg.proj_hidden), T(0));
    linear_forward(params.p2_w, params.p2_b, cache.mlp_h1.data(), cfg.proj_hidden, cfg.proj_hidden,
                   cache.mlp_h2.data());
    for (T& v : cache.mlp_h2) {
        v = std::max(v, T(0));
    }
    cache.proj_pre.assign(static_cast<std::size_t>(cfg.proj_dim), T(0));
    linear_forward(params.p3_w, params.p3_b, cache.mlp_h2.data(), cfg.proj_hidden, cfg.proj_dim,
                   cache.proj_pre.data());
    T pnorm2 = T(0);
    for (T v : cache.proj_pre) {
        pnorm2 += v * v;
    }
    // Guard against an exactly dead MLP (all-zero projection).
    const T pnorm = std::sqrt(std::max(pnorm2, T(1e-24)));
    cache.proj.resize(cache.proj_pre.size());
    for (std::size_t i = 0; i < cache.proj_pre.size(); ++i) {
        cache.proj[i] = cache.proj_pre[i] / pnorm;
    }
    return cache;
}

template <class T>
void backward(const ModelParams<T>& params, const NetConfig& cfg, const ForwardCache<T>& cache,
              const std::array<double, 3>& d_est, const std::vector<T>& d_proj,
              ModelParams<T>& grads) {
    const int f = cfg.feature_dim();
    std::vector<T> d_feat(static_cast<std::size_t>(f), T(0));

    // Illuminant head.
    const bool have_est_grad = d_est[0] != 0.0 || d_est[1] != 0.0 || d_est[2] != 0.0;
    if (have_est_grad) {
        // Through L2 normalization: d_sp = (g - (g . est) est) / ||sp||.
        T norm = T(0);
        for (int i = 0; i < 3; ++i) {
            norm += cache.softplus_out[static_cast<std::size_t>(i)] *
                    cache.softplus_out[static_cast<std::size_t>(i)];
        }
        norm = std::sqrt(norm);
        T gdot = T(0);
        for (int i = 0; i < 3; ++i) {
            gdot += static_cast<T>(d_est[static_cast<std::size_t>(i)]) * cache.est[static_cast<std::size_t>(i)];
        }
        T d_fc[3];
        for (int i = 0; i < 3; ++i) {
            const T d_sp =
                (static_cast<T>(d_est[static_cast<std::size_t>(i)]) - gdot * cache.est[static_cast<std::size_t>(i)]) / norm;
            d_fc[i] = d_sp * sigmoid(cache.fc_pre[static_cast<std::size_t>(i)]);
        }
        std::vector<T> feat_in = cache.feat;
        if (!cache.dropout_mask.empty()) {
            for (int c = 0; c < f; ++c) {
                feat_in[static_cast<std::size_t>(c)] *= cache.dropout_mask[static_cast<std::size_t>(c)];
            }
        }
        std::vector<T> d_feat_in(static_cast<std::size_t>(f), T(0));
        linear_backward(params.fc_w, feat_in.data(), d_fc, f, 3, grads.fc_w, grads.fc_b,
                        d_feat_in.data());
        if (!cache.dropout_mask.empty()) {
            for (int c = 0; c < f; ++c) {
                d_feat_in[static_cast<std::size_t>(c)] *= cache.dropout_mask[static_cast<std::size_t>(c)];
            }
        }
        for (int c = 0; c < f; ++c) {
            d_feat[static_cast<std::size_t>(c)] += d_feat_in[static_cast<std::size_t>(c)];
        }
    }

    // Projection head.
    if (!d_proj.empty()) {
        if (d_proj.size() != cache.proj.size()) {
            throw DomainError("projection gradient dimension mismatch");
        }
        T pnorm2 = T(0);
        for (T v : cache.proj_pre) {
            pnorm2 += v * v;
        }
        const T pnorm = std::sqrt(std::max(pnorm2, T(1e-24)));
        T gdot = T(0);
        for (std::size_t i = 0; i < d_proj.size(); ++i) {
            gdot += d_proj[i] * cache.proj[i];
        }
        std::vector<T> d_pre(cache.proj_pre.size());
        for (std::size_t i = 0; i < d_pre.size(); ++i) {
            d_pre[i] = (d_proj[i] - gdot * cache.proj[i]) / pnorm;
        }
        std::vector<T> d_h2(static_cast<std::size_t>(cfg.proj_hidden), T(0));
        linear_backward(params.p3_w, cache.mlp_h2.data(), d_pre.data(), cfg.proj_hidden,
                        cfg.proj_dim, grads.p3_w, grads.p3_b, d_h2.data());
        for (int i = 0; i < cfg.proj_hidden; ++i) {
            if (cache.mlp_h2[static_cast<std::size_t>(i)] <= T(0)) {
                d_h2[static_cast<std::size_t>(i)] = T(0);
            }
        }
        std::vector<T> d_h1(static_cast<std::size_t>(cfg.proj_hidden), T(0));
        linear_backward(params.p2_w, cache.mlp_h1.data(), d_h2.data(), cfg.proj_hidden,
                        cfg.proj_hidden, grads.p2_w, grads.p2_b, d_h1.data());
        for (int i = 0; i < cfg.proj_hidden; ++i) {
            if (cache.mlp_h1[static_cast<std::size_t>(i)] <= T(0)) {
                d_h1[static_cast<std::size_t>(i)] = T(0);
            }
        }
        std::vector<T> d_feat_proj(static_cast<std::size_t>(f), T(0));
        linear_backward(params.p1_w, cache.feat.data(), d_h1.data(), f, cfg.proj_hidden, grads.p1_w,
                        grads.p1_b, d_feat_proj.data());
        for (int c = 0; c < f; ++c) {
            d_feat[static_cast<std::size_t>(c)] += d_feat_proj[static_cast<std::size_t>(c)];
        }
    }

    // Un-pool: every surviving pixel of the last activation shares d_feat / npix.
    const int h4 = cache.spatial[4];
    const int npix = h4 * h4;
    const auto widths = cfg.conv_widths();
    std::vector<T> d_act(static_cast<std::size_t>(f) * npix, T(0));
    for (int c = 0; c < f; ++c) {
        const T g = d_feat[static_cast<std::size_t>(c)] / static_cast<T>(npix);
        T* d = d_act.data() + static_cast<std::size_t>(c) * npix;
        for (int i = 0; i < npix; ++i) {
            d[i] = g;
        }
    }

    // Conv stack, last layer to first.
    for (int l = 3; l >= 0; --l) {
        const int out_ch = widths[static_cast<std::size_t>(l)];
        const int in_ch = (l == 0) ? 3 : widths[static_cast<std::size_t>(l - 1)];
        const int ho = cache.spatial[static_cast<std::size_t>(l + 1)];
        const int h = cache.spatial[static_cast<std::size_t>(l)];
        auto& act = cache.act[static_cast<std::size_t>(l)];

        // ReLU mask.
        for (std::size_t i = 0; i < d_act.size(); ++i) {
            if (act[i] <= T(0)) {
                d_act[i] = T(0);
            }
        }
        // Bias gradient.
        for (int oc = 0; oc < out_ch; ++oc) {
            const T* d = d_act.data() + static_cast<std::size_t>(oc) * ho * ho;
            T acc = T(0);
            for (int i = 0; i < ho * ho; ++i) {
                acc += d[i];
            }
            grads.conv_b[static_cast<std::size_t>(l)].v[static_cast<std::size_t>(oc)] += acc;
        }
        // Weight gradient: dW += dY * cols^T.
        gemm_abt(out_ch, ho * ho, in_ch * 9, d_act.data(),
                 cache.cols[static_cast<std::size_t>(l)].data(),
                 grads.conv_w[static_cast<std::size_t>(l)].v.data());
        // Input gradient: dcols = W^T * dY, then scatter.
        std::vector<T> d_cols(static_cast<std::size_t>(in_ch) * 9 * ho * ho, T(0));
        gemm_atb(out_ch, in_ch * 9, ho * ho, params.conv_w[static_cast<std::size_t>(l)].v.data(),
                 d_act.data(), d_cols.data());
        std::vector<T> d_input(static_cast<std::size_t>(in_ch) * h * h, T(0));
        col2im_acc(d_cols, in_ch, h, d_input.data());
        d_act = std::move(d_input);
    }
}

template <class T>
void add_weight_decay(const ModelParams<T>& params, double wd, ModelParams<T>& grads) {
    auto ps = params.tensors();
    auto gs = grads.tensors();
    for (std::size_t t = 0; t < ps.size(); ++t) {
        for (std::size_t i = 0; i < ps[t]->v.size(); ++i) {
            gs[t]->v[i] += static_cast<T>(wd) * ps[t]->v[i];
        }
    }
}

template <class T>
double weight_decay_penalty(const ModelParams<T>& params, double wd) {
    double acc = 0.0;
    for (const Ten<T>* t : params.tensors()) {
        for (T v : t->v) {
            acc += static_cast<double>(v) * static_cast<double>(v);
        }
    }
    return 0.5 * wd * acc;
}

AngularLossResult illuminant_loss(const std::array<double, 3>& est, const IlluminantRGB& gt) {
    const double ne = std::sqrt(est[0] * est[0] + est[1] * est[1] + est[2] * est[2]);
    const double ng = gt.norm();
    if (!(ne > 0.0) || !(ng > 0.0)) {
        throw DomainError("illuminant loss of zero vector");
    }
    const std::array<double, 3> ghat{gt.r / ng, gt.g / ng, gt.b / ng};
    const std::array<double, 3> ehat{est[0] / ne, est[1] / ne, est[2] / ne};
    double u = ehat[0] * ghat[0] + ehat[1] * ghat[1] + ehat[2] * ghat[2];
    u = std::clamp(u, -1.0, 1.0);

    AngularLossResult out;
    out.radians = std::acos(u);
    const double denom2 = 1.0 - u * u;
    if (denom2 < 1e-12) {
        // Zero-gradient guard at the clamp boundary (0 or 180 degrees).
        out.d_est = {0.0, 0.0, 0.0};
        return out;
    }
    const double scale = -1.0 / std::sqrt(denom2);
    for (int i = 0; i < 3; ++i) {
        out.d_est[static_cast<std::size_t>(i)] =
            scale * (ghat[static_cast<std::size_t>(i)] - u * ehat[static_cast<std::size_t>(i)]) / ne;
    }
    return out;
}

template <class T>
AdamState<T> AdamState<T>::init(const ModelParams<T>& params) {
    AdamState<T> s;
    for (const Ten<T>* t : params.tensors()) {
        s.m.push_back(Ten<T>::zeros(t->shape));
        s.v.push_back(Ten<T>::zeros(t->shape));
    }
    s.t = 0;
    return s;
}

template <class T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg) {
    auto ps = params.tensors();
    auto gs = grads.tensors();
    if (state.m.size() != ps.size()) {
        throw DomainError("adam state does not match the parameter set");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t t = 0; t < ps.size(); ++t) {
        T* p = ps[t]->v.data();
        const T* g = gs[t]->v.data();
        T* m = state.m[t].v.data();
        T* v = state.v[t].v.data();
        const std::size_t n = ps[t]->v.size();
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = static_cast<T>(cfg.beta1) * m[i] + static_cast<T>(1.0 - cfg.beta1) * g[i];
            v[i] = static_cast<T>(cfg.beta2) * v[i] + static_cast<T>(1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = static_cast<double>(m[i]) / bc1;
            const double vhat = static_cast<double>(v[i]) / bc2;
            p[i] = static_cast<T>(static_cast<double>(p[i]) -
                                  cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
}

ModelParams<double> widen(const ModelParams<float>& p) {
    ModelParams<double> out;
    auto src = p.tensors();
    // Rebuild shape-for-shape.
    std::vector<Ten<double>*> dst = out.tensors();
    for (std::size_t t = 0; t < src.size(); ++t) {
        dst[t]->shape = src[t]->shape;
        dst[t]->v.assign(src[t]->v.begin(), src[t]->v.end());
    }
    return out;
}

ModelParams<float> narrow(const ModelParams<double>& p) {
    ModelParams<float> out;
    auto src = p.tensors();
    std::vector<Ten<float>*> dst = out.tensors();
    for (std::size_t t = 0; t < src.size(); ++t) {
        dst[t]->shape = src[t]->shape;
        dst[t]->v.resize(src[t]->v.size());
        for (std::size_t i = 0; i < src[t]->v.size(); ++i) {
            dst[t]->v[i] = static_cast<float>(src[t]->v[i]);
        }
    }
    return out;
}

// Explicit instantiations: float for training, double for gradient checks.
template struct ModelParams<float>;
template struct ModelParams<double>;
template struct AdamState<float>;
template struct AdamState<double>;
template ForwardCache<float> forward(const ModelParams<float>&, const NetConfig&,
                                     const std::vector<float>&, bool, Rng*);
template ForwardCache<double> forward(const ModelParams<double>&, const NetConfig&,
                                      const std::vector<double>&, bool, Rng*);
template void backward(const ModelParams<float>&, const NetConfig&, const ForwardCache<float>&,
                       const std::array<double, 3>&, const std::vector<float>&,
                       ModelParams<float>&);
template void backward(const ModelParams<double>&, const NetConfig&, const ForwardCache<double>&,
                       const std::array<double, 3>&, const std::vector<double>&,
                       ModelParams<double>&);
template void add_weight_decay(const ModelParams<float>&, double, ModelParams<float>&);
template void add_weight_decay(const ModelParams<double>&, double, ModelParams<double>&);
template double weight_decay_penalty(const ModelParams<float>&, double);
template double weight_decay_penalty(const ModelParams<double>&, double);
template void adam_step(ModelParams<float>&, const ModelParams<float>&, AdamState<float>&,
                        const AdamConfig&);
template void adam_step(ModelParams<double>&, const ModelParams<double>&, AdamState<double>&,
                        const AdamConfig&);

} // namespace clcc
