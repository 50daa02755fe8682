// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "clcc/color_math.hpp"
#include "clcc/rng.hpp"

namespace clcc {

/// Dense tensor; shape is metadata, storage is flat row-major.
template <class T>
struct Ten {
    std::vector<int> shape;
    std::vector<T> v;

    static Ten zeros(std::vector<int> s) {
        Ten t;
        t.shape = std::move(s);
        std::size_t n = 1;
        for (int d : t.shape) {
            n *= static_cast<std::size_t>(d);
        }
        t.v.assign(n, T(0));
        return t;
    }
    std::size_t numel() const { return v.size(); }
};

/// Architecture hyperparameters. The conv stack is four 3x3 stride-2 layers
/// with widths {c, 2c, 4c, 4c}; the feature dimension is 4c.
struct NetConfig {
    int conv_channels = 16;
    int proj_hidden = 64;
    int proj_dim = 64;
    int crop = 64;
    double dropout = 0.5;

    int feature_dim() const { return 4 * conv_channels; }
    std::array<int, 4> conv_widths() const {
        return {conv_channels, 2 * conv_channels, 4 * conv_channels, 4 * conv_channels};
    }
    void validate() const;
};

/// Weights of the feature extractor, illuminant head, and projection head.
template <class T>
struct ModelParams {
    std::array<Ten<T>, 4> conv_w; // [out, in*9]
    std::array<Ten<T>, 4> conv_b; // [out]
    Ten<T> fc_w, fc_b;            // illuminant head: [3, F], [3]
    Ten<T> p1_w, p1_b;            // projection MLP
    Ten<T> p2_w, p2_b;
    Ten<T> p3_w, p3_b;

    static ModelParams init(const NetConfig& cfg, Rng rng);
    static ModelParams zeros(const NetConfig& cfg);

    std::vector<Ten<T>*> tensors();
    std::vector<const Ten<T>*> tensors() const;
    static const std::vector<std::string>& tensor_names();
};

/// Activations retained by forward() for the backward pass.
template <class T>
struct ForwardCache {
    std::vector<T> input;                // [3, H, W]
    std::array<std::vector<T>, 4> cols;  // im2col buffers
    std::array<std::vector<T>, 4> act;   // post-ReLU activations
    std::array<int, 5> spatial{};        // H at input and after each conv
    std::vector<T> feat;                 // [F], global average pool
    std::vector<T> dropout_mask;         // empty when dropout is off
    std::array<T, 3> fc_pre{};           // softplus input
    std::array<T, 3> softplus_out{};     // positive gains before normalization
    std::array<T, 3> est{};              // unit-norm illuminant estimate
    std::vector<T> mlp_h1, mlp_h2;       // post-ReLU MLP hiddens
    std::vector<T> proj_pre;             // projection before normalization
    std::vector<T> proj;                 // unit-norm projection
    bool train_mode = false;
};

/// Forward pass on one crop in CHW layout ([3, crop, crop]).
/// The illuminant estimate is strictly positive (softplus) and unit-norm;
/// the projection is unit-norm. dropout_rng is only consulted in train mode
/// with cfg.dropout > 0.
template <class T>
ForwardCache<T> forward(const ModelParams<T>& params, const NetConfig& cfg,
                        const std::vector<T>& input_chw, bool train_mode, Rng* dropout_rng);

/// Backpropagates d(est) and/or d(proj) through the cached forward pass and
/// accumulates parameter gradients into grads. Pass a zero d_est or an empty
/// d_proj to skip a head. Weight decay is applied separately, once per
/// optimization step (see add_weight_decay).
template <class T>
void backward(const ModelParams<T>& params, const NetConfig& cfg, const ForwardCache<T>& cache,
              const std::array<double, 3>& d_est, const std::vector<T>& d_proj,
              ModelParams<T>& grads);

/// grads += wd * params.
template <class T>
void add_weight_decay(const ModelParams<T>& params, double wd, ModelParams<T>& grads);

/// 0.5 * wd * sum of squared parameters; the term the decay gradient matches.
template <class T>
double weight_decay_penalty(const ModelParams<T>& params, double wd);

struct AngularLossResult {
    double radians = 0.0;
    std::array<double, 3> d_est{}; // gradient w.r.t. the (possibly unnormalized) estimate
};

/// Angular error loss in radians with its analytic gradient. The arccos
/// argument is clamped to [-1, 1]; at near-zero error the gradient is
/// guarded to zero. Throws DomainError on zero vectors.
AngularLossResult illuminant_loss(const std::array<double, 3>& est, const IlluminantRGB& gt);

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class T>
struct AdamState {
    std::vector<Ten<T>> m, v;
    long t = 0;

    static AdamState init(const ModelParams<T>& params);
};

/// Standard Adam update with bias correction.
template <class T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg);

/// float <-> double parameter conversion (checkpoints store f32).
ModelParams<double> widen(const ModelParams<float>& p);
ModelParams<float> narrow(const ModelParams<double>& p);

} // namespace clcc
