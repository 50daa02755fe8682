// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#pragma once

#include <array>
#include <string>
#include <vector>

#include "clcc/scene_synth.hpp"
#include "clcc/training.hpp"

namespace clcc {

/// Angular-error statistics in degrees. Conventions, stated once: the median
/// averages the middle two for even n; the trimean is (Q1 + 2 Q2 + Q3) / 4
/// with linearly interpolated quantiles at positions q * (n - 1); the
/// best/worst 25% tails average the ceil(n/4) smallest/largest errors.
struct MetricsReport {
    double mean = 0.0;
    double median = 0.0;
    double trimean = 0.0;
    double best25_mean = 0.0;
    double worst25_mean = 0.0;
    int n = 0;
    std::vector<double> errors; // per-sample, input order
};

MetricsReport compute_metrics(const std::vector<double>& errors_deg);

/// Evaluation method: the four learning-free estimators by name, or one of
/// the trained modes (baseline, clcc-wb, clcc-full) driven by train_cfg.
struct MethodSpec {
    std::string name = "gray-world";
    double minkowski_p = 6.0; // shades-of-gray / gray-edge order
    TrainConfig train_cfg;    // learned methods only

    bool learned() const;
    void validate() const;
};

/// Estimate with a learning-free method (learned methods need a model).
IlluminantRGB estimate_learning_free(const MethodSpec& method, const LabeledImage& img);

struct FoldResult {
    std::vector<int> test_indices;
    std::vector<double> errors; // aligned with test_indices
    MetricsReport metrics;
};

struct CvResult {
    std::vector<FoldResult> folds;
    MetricsReport pooled;                  // over the union of all test folds
    std::vector<double> per_sample_errors; // aligned with the dataset order
};

/// Seeded shuffle into k near-equal disjoint folds; train on k-1, test on 1.
/// Learning-free methods skip training. Learned methods train with seed
/// mix(train_cfg.seed, fold) so folds are independent but reproducible.
CvResult cross_validate(const std::vector<LabeledImage>& data, const MethodSpec& method,
                        int k_folds, std::uint64_t seed);

/// Fold index assignment alone (exposed for partition tests).
std::vector<int> fold_assignment(int n, int k_folds, std::uint64_t seed);

struct ClusterReport {
    std::vector<std::array<double, 2>> centroids; // (r/g, b/g) chromaticities
    std::vector<int> assignment;                  // per sample
    std::vector<int> counts;
    std::vector<MetricsReport> per_cluster;
    double inertia = 0.0;
};

/// K-means (k-means++ seeding, at most 100 Lloyd iterations, 10 restarts,
/// best inertia kept) on the ground-truth illuminant chromaticities, with a
/// per-cluster MetricsReport. Throws DomainError when there are fewer
/// distinct illuminants than clusters.
ClusterReport cluster_robustness(const std::vector<LabeledImage>& data,
                                 const std::vector<double>& per_sample_errors, int k,
                                 std::uint64_t seed);

/// Same, over precomputed (r/g, b/g) chromaticity points.
ClusterReport cluster_robustness_points(const std::vector<std::array<double, 2>>& chroma,
                                        const std::vector<double>& per_sample_errors, int k,
                                        std::uint64_t seed);

/// K-means core on 2-d points (exposed for oracle tests).
struct KMeansResult {
    std::vector<std::array<double, 2>> centroids;
    std::vector<int> assignment;
    double inertia = 0.0;
};
KMeansResult kmeans_2d(const std::vector<std::array<double, 2>>& points, int k, std::uint64_t seed);

} // namespace clcc
