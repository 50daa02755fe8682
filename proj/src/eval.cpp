// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include "clcc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "clcc/baselines.hpp"

namespace clcc {

namespace {

double quantile_linear(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1) {
        return sorted[0];
    }
    const double pos = q * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

} // namespace

MetricsReport compute_metrics(const std::vector<double>& errors_deg) {
    if (errors_deg.empty()) {
        throw DomainError("compute_metrics needs at least one error");
    }
    MetricsReport rep;
    rep.errors = errors_deg;
    rep.n = static_cast<int>(errors_deg.size());

    std::vector<double> sorted = errors_deg;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    double sum = 0.0;
    for (double e : sorted) {
        sum += e;
    }
    rep.mean = sum / static_cast<double>(n);

    rep.median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    const double q1 = quantile_linear(sorted, 0.25);
    const double q2 = quantile_linear(sorted, 0.50);
    const double q3 = quantile_linear(sorted, 0.75);
    rep.trimean = (q1 + 2.0 * q2 + q3) / 4.0;

    const std::size_t tail = (n + 3) / 4; // ceil(n / 4)
    double best = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < tail; ++i) {
        best += sorted[i];
        worst += sorted[n - 1 - i];
    }
    rep.best25_mean = best / static_cast<double>(tail);
    rep.worst25_mean = worst / static_cast<double>(tail);
    return rep;
}

bool MethodSpec::learned() const {
    return name == "baseline" || name == "clcc-wb" || name == "clcc-full";
}

void MethodSpec::validate() const {
    static const std::set<std::string> known = {"gray-world", "white-patch", "shades-of-gray",
                                                "gray-edge",  "baseline",    "clcc-wb",
                                                "clcc-full"};
    if (known.find(name) == known.end()) {
        throw DomainError("unknown method: " + name);
    }
    if (learned()) {
        train_cfg.validate();
    }
}

IlluminantRGB estimate_learning_free(const MethodSpec& method, const LabeledImage& img) {
    if (method.name == "gray-world") {
        return gray_world(img.image);
    }
    if (method.name == "white-patch") {
        return white_patch(img.image);
    }
    if (method.name == "shades-of-gray") {
        return shades_of_gray(img.image, method.minkowski_p);
    }
    if (method.name == "gray-edge") {
        return gray_edge(img.image, method.minkowski_p);
    }
    throw DomainError("not a learning-free method: " + method.name);
}

std::vector<int> fold_assignment(int n, int k_folds, std::uint64_t seed) {
    if (k_folds < 2 || n < k_folds) {
        throw DomainError("dataset too small for the requested fold count");
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    Rng rng(seed);
    rng.shuffle(order.begin(), order.end());

    // Contiguous blocks of the shuffled order; the first (n mod k) folds get
    // one extra sample.
    std::vector<int> fold_of(static_cast<std::size_t>(n), -1);
    const int base = n / k_folds;
    const int extra = n % k_folds;
    int at = 0;
    for (int f = 0; f < k_folds; ++f) {
        const int size = base + (f < extra ? 1 : 0);
        for (int i = 0; i < size; ++i) {
            fold_of[static_cast<std::size_t>(order[static_cast<std::size_t>(at++)])] = f;
        }
    }
    return fold_of;
}

CvResult cross_validate(const std::vector<LabeledImage>& data, const MethodSpec& method,
                        int k_folds, std::uint64_t seed) {
    method.validate();
    const int n = static_cast<int>(data.size());
    const std::vector<int> fold_of = fold_assignment(n, k_folds, seed);

    CvResult result;
    result.per_sample_errors.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(n));

    for (int f = 0; f < k_folds; ++f) {
        FoldResult fold;
        for (int i = 0; i < n; ++i) {
            if (fold_of[static_cast<std::size_t>(i)] == f) {
                fold.test_indices.push_back(i);
            }
        }

        if (method.learned()) {
            std::vector<const LabeledImage*> train_split;
            for (int i = 0; i < n; ++i) {
                if (fold_of[static_cast<std::size_t>(i)] != f) {
                    train_split.push_back(&data[static_cast<std::size_t>(i)]);
                }
            }
            TrainConfig cfg = method.train_cfg;
            cfg.seed = mix64(cfg.seed ^ mix64(static_cast<std::uint64_t>(f) + 1));
            const TrainResult trained =
                train(train_split, {}, cfg, parse_train_mode(method.name));
            for (int i : fold.test_indices) {
                const IlluminantRGB est =
                    estimate_illuminant(trained.params, cfg, data[static_cast<std::size_t>(i)]);
                fold.errors.push_back(
                    angular_error_degrees(est, data[static_cast<std::size_t>(i)].illuminant));
            }
        } else {
            for (int i : fold.test_indices) {
                const IlluminantRGB est =
                    estimate_learning_free(method, data[static_cast<std::size_t>(i)]);
                fold.errors.push_back(
                    angular_error_degrees(est, data[static_cast<std::size_t>(i)].illuminant));
            }
        }

        for (std::size_t t = 0; t < fold.test_indices.size(); ++t) {
            result.per_sample_errors[static_cast<std::size_t>(fold.test_indices[t])] =
                fold.errors[t];
            pooled.push_back(fold.errors[t]);
        }
        fold.metrics = compute_metrics(fold.errors);
        result.folds.push_back(std::move(fold));
    }
    result.pooled = compute_metrics(pooled);
    return result;
}

// ---------------------------------------------------------------------------
// K-means
// ---------------------------------------------------------------------------

namespace {

double sq_dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

KMeansResult lloyd_once(const std::vector<std::array<double, 2>>& pts, int k, Rng& rng) {
    const int n = static_cast<int>(pts.size());
    KMeansResult res;
    res.centroids.reserve(static_cast<std::size_t>(k));

    // k-means++ seeding.
    res.centroids.push_back(pts[static_cast<std::size_t>(rng.uniform_int(n))]);
    std::vector<double> d2(static_cast<std::size_t>(n));
    while (static_cast<int>(res.centroids.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& c : res.centroids) {
                best = std::min(best, sq_dist(pts[static_cast<std::size_t>(i)], c));
            }
            d2[static_cast<std::size_t>(i)] = best;
            total += best;
        }
        if (!(total > 0.0)) {
            // All remaining points coincide with a centroid; duplicates were
            // rejected earlier, so this cannot happen with k <= distinct.
            res.centroids.push_back(pts[static_cast<std::size_t>(rng.uniform_int(n))]);
            continue;
        }
        double pick = rng.uniform() * total;
        int chosen = n - 1;
        for (int i = 0; i < n; ++i) {
            pick -= d2[static_cast<std::size_t>(i)];
            if (pick <= 0.0) {
                chosen = i;
                break;
            }
        }
        res.centroids.push_back(pts[static_cast<std::size_t>(chosen)]);
    }

    res.assignment.assign(static_cast<std::size_t>(n), 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool moved = false;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            int who = 0;
            for (int c = 0; c < k; ++c) {
                const double d = sq_dist(pts[static_cast<std::size_t>(i)],
                                         res.centroids[static_cast<std::size_t>(c)]);
                if (d < best) {
                    best = d;
                    who = c;
                }
            }
            if (res.assignment[static_cast<std::size_t>(i)] != who) {
                res.assignment[static_cast<std::size_t>(i)] = who;
                moved = true;
            }
        }
        std::vector<std::array<double, 2>> sums(static_cast<std::size_t>(k), {0.0, 0.0});
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int i = 0; i < n; ++i) {
            const int c = res.assignment[static_cast<std::size_t>(i)];
            sums[static_cast<std::size_t>(c)][0] += pts[static_cast<std::size_t>(i)][0];
            sums[static_cast<std::size_t>(c)][1] += pts[static_cast<std::size_t>(i)][1];
            counts[static_cast<std::size_t>(c)] += 1;
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                res.centroids[static_cast<std::size_t>(c)] = {
                    sums[static_cast<std::size_t>(c)][0] / counts[static_cast<std::size_t>(c)],
                    sums[static_cast<std::size_t>(c)][1] / counts[static_cast<std::size_t>(c)]};
            } else {
                // Re-seed an empty cluster at the point farthest from its centroid.
                double far = -1.0;
                int who = 0;
                for (int i = 0; i < n; ++i) {
                    const double d = sq_dist(
                        pts[static_cast<std::size_t>(i)],
                        res.centroids[static_cast<std::size_t>(
                            res.assignment[static_cast<std::size_t>(i)])]);
                    if (d > far) {
                        far = d;
                        who = i;
                    }
                }
                res.centroids[static_cast<std::size_t>(c)] = pts[static_cast<std::size_t>(who)];
                moved = true;
            }
        }
        if (!moved && iter > 0) {
            break;
        }
    }

    res.inertia = 0.0;
    for (int i = 0; i < n; ++i) {
        res.inertia += sq_dist(pts[static_cast<std::size_t>(i)],
                               res.centroids[static_cast<std::size_t>(
                                   res.assignment[static_cast<std::size_t>(i)])]);
    }
    return res;
}

} // namespace

KMeansResult kmeans_2d(const std::vector<std::array<double, 2>>& points, int k,
                       std::uint64_t seed) {
    if (k < 1 || points.empty()) {
        throw DomainError("kmeans needs k >= 1 and a nonempty point set");
    }
    std::set<std::pair<double, double>> distinct;
    for (const auto& p : points) {
        distinct.insert({p[0], p[1]});
    }
    if (static_cast<int>(distinct.size()) < k) {
        throw DomainError("fewer distinct points than clusters");
    }

    const Rng root(seed);
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::max();
    for (int restart = 0; restart < 10; ++restart) {
        Rng rng = root.fork(7, static_cast<std::uint64_t>(restart));
        KMeansResult cand = lloyd_once(points, k, rng);
        if (cand.inertia < best.inertia) {
            best = std::move(cand);
        }
    }
    return best;
}

ClusterReport cluster_robustness(const std::vector<LabeledImage>& data,
                                 const std::vector<double>& per_sample_errors, int k,
                                 std::uint64_t seed) {
    std::vector<std::array<double, 2>> chroma;
    chroma.reserve(data.size());
    for (const auto& img : data) {
        if (!(img.illuminant.g > 0.0)) {
            throw DomainError("illuminant needs positive green for chromaticity");
        }
        chroma.push_back({img.illuminant.r / img.illuminant.g, img.illuminant.b / img.illuminant.g});
    }
    return cluster_robustness_points(chroma, per_sample_errors, k, seed);
}

ClusterReport cluster_robustness_points(const std::vector<std::array<double, 2>>& chroma,
                                        const std::vector<double>& per_sample_errors, int k,
                                        std::uint64_t seed) {
    if (chroma.size() != per_sample_errors.size()) {
        throw DomainError("error list does not match the dataset");
    }
    if (static_cast<int>(chroma.size()) < k) {
        throw DomainError("dataset smaller than the cluster count");
    }
    const KMeansResult km = kmeans_2d(chroma, k, seed);

    ClusterReport rep;
    rep.centroids = km.centroids;
    rep.assignment = km.assignment;
    rep.inertia = km.inertia;
    rep.counts.assign(static_cast<std::size_t>(k), 0);
    std::vector<std::vector<double>> buckets(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < chroma.size(); ++i) {
        const int c = km.assignment[i];
        rep.counts[static_cast<std::size_t>(c)] += 1;
        buckets[static_cast<std::size_t>(c)].push_back(per_sample_errors[i]);
    }
    for (int c = 0; c < k; ++c) {
        if (buckets[static_cast<std::size_t>(c)].empty()) {
            throw DomainError("kmeans produced an empty cluster");
        }
        rep.per_cluster.push_back(compute_metrics(buckets[static_cast<std::size_t>(c)]));
    }
    return rep;
}

} // namespace clcc
