// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#include "ktv/keyframe_selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ktv/error.hpp"
#include "ktv/parallel.hpp"
#include "ktv/rng.hpp"

namespace ktv {

namespace {

void check_points(const Matrix& points) {
    require(points.rows() >= 1, ErrorCode::Validation, "kmeans: need at least one point");
    require(points.cols() >= 1, ErrorCode::Validation, "kmeans: points must have at least one dimension");
    for (float v : points.values()) {
        require(std::isfinite(v), ErrorCode::NonFinite, "kmeans: non-finite value in points");
    }
}

void copy_point(const Matrix& points, std::size_t i, std::span<double> dst) {
    const auto src = points.row(i);
    for (std::size_t d = 0; d < dst.size(); ++d) {
        dst[d] = src[d];
    }
}

std::vector<double> distances_to(const Matrix& points, std::span<const double> center, std::size_t workers) {
    std::vector<double> out(points.rows());
    parallel_for(points.rows(), workers, [&](std::size_t i) { out[i] = squared_distance(points.row(i), center); });
    return out;
}

// Greedy k-means++: each round samples 2 + floor(ln k) candidates by D^2
// weighting and keeps the one with the lowest resulting potential.
MatrixD seed_centroids(const Matrix& points, std::size_t k, Xoshiro256& rng, std::size_t workers) {
    const std::size_t n = points.rows();
    MatrixD centers(k, points.cols());
    const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));

    copy_point(points, static_cast<std::size_t>(rng.below(n)), centers.row(0));
    std::vector<double> closest = distances_to(points, centers.row(0), workers);
    std::vector<double> candidate(points.cols());

    for (std::size_t c = 1; c < k; ++c) {
        double potential = 0.0;
        for (double v : closest) {
            potential += v;
        }
        require(potential > 0.0, ErrorCode::Internal, "kmeans: seeding ran out of distinct points");

        std::vector<double> best_closest;
        std::size_t best_index = 0;
        double best_potential = std::numeric_limits<double>::infinity();
        for (std::size_t trial = 0; trial < trials; ++trial) {
            const double target = rng.uniform() * potential;
            double cumulative = 0.0;
            std::size_t pick = n;
            for (std::size_t i = 0; i < n; ++i) {
                cumulative += closest[i];
                if (cumulative > target) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) {
                // Rounding left target at the very top; take the last positive weight.
                for (std::size_t i = n; i-- > 0;) {
                    if (closest[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
            copy_point(points, pick, candidate);
            auto trial_closest = distances_to(points, candidate, workers);
            double trial_potential = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                trial_closest[i] = std::min(trial_closest[i], closest[i]);
                trial_potential += trial_closest[i];
            }
            if (trial_potential < best_potential) {
                best_potential = trial_potential;
                best_index = pick;
                best_closest = std::move(trial_closest);
            }
        }
        copy_point(points, best_index, centers.row(c));
        closest = std::move(best_closest);
    }
    return centers;
}

// Moves the globally farthest point (from its own centroid) into each empty
// cluster, only taking points from clusters that keep at least one member.
bool repair_empty_clusters(const Matrix& points, std::vector<std::size_t>& assignments, MatrixD& centroids) {
    const std::size_t k = centroids.rows();
    std::vector<std::size_t> counts(k, 0);
    for (auto a : assignments) {
        ++counts[a];
    }
    bool repaired = false;
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] != 0) {
            continue;
        }
        std::size_t farthest = assignments.size();
        double farthest_d = -1.0;
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            if (counts[assignments[i]] < 2) {
                continue;
            }
            const double d = squared_distance(points.row(i), centroids.row(assignments[i]));
            if (d > farthest_d) {
                farthest_d = d;
                farthest = i;
            }
        }
        require(farthest < assignments.size(), ErrorCode::Internal, "kmeans: no point available to refill an empty cluster");
        --counts[assignments[farthest]];
        assignments[farthest] = c;
        counts[c] = 1;
        copy_point(points, farthest, centroids.row(c));
        repaired = true;
    }
    return repaired;
}

}  // namespace

double squared_distance(std::span<const float> point, std::span<const double> centroid) {
    double s = 0.0;
    for (std::size_t d = 0; d < point.size(); ++d) {
        const double diff = static_cast<double>(point[d]) - centroid[d];
        s += diff * diff;
    }
    return s;
}

std::vector<std::size_t> assign_to_nearest(const Matrix& points, const MatrixD& centroids, std::size_t workers) {
    std::vector<std::size_t> out(points.rows());
    parallel_for(points.rows(), workers, [&](std::size_t i) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centroids.rows(); ++c) {
            const double d = squared_distance(points.row(i), centroids.row(c));
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        out[i] = best;
    });
    return out;
}

MatrixD cluster_means(const Matrix& points, std::span<const std::size_t> assignments, std::size_t cluster_count) {
    MatrixD sums(cluster_count, points.cols(), 0.0);
    std::vector<std::size_t> counts(cluster_count, 0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        auto dst = sums.row(assignments[i]);
        const auto src = points.row(i);
        for (std::size_t d = 0; d < src.size(); ++d) {
            dst[d] += src[d];
        }
        ++counts[assignments[i]];
    }
    for (std::size_t c = 0; c < cluster_count; ++c) {
        if (counts[c] == 0) {
            continue;
        }
        for (auto& v : sums.row(c)) {
            v /= static_cast<double>(counts[c]);
        }
    }
    return sums;
}

double sum_squared_error(const Matrix& points, std::span<const std::size_t> assignments, const MatrixD& centroids) {
    double sse = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        sse += squared_distance(points.row(i), centroids.row(assignments[i]));
    }
    return sse;
}

std::size_t distinct_row_count(const Matrix& points) {
    std::vector<std::size_t> order(points.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto less = [&](std::size_t a, std::size_t b) {
        const auto ra = points.row(a);
        const auto rb = points.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    };
    std::sort(order.begin(), order.end(), less);
    std::size_t distinct = order.empty() ? 0 : 1;
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (less(order[i - 1], order[i])) {
            ++distinct;
        }
    }
    return distinct;
}

namespace {

ClusterModel lloyd(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
    Xoshiro256 rng(seed);

    ClusterModel model;
    MatrixD centroids = seed_centroids(points, k, rng, options.workers);
    std::vector<std::size_t> assignments = assign_to_nearest(points, centroids, options.workers);
    repair_empty_clusters(points, assignments, centroids);

    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        centroids = cluster_means(points, assignments, k);
        const double sse = sum_squared_error(points, assignments, centroids);
        model.sse_history.push_back(sse);
        model.iterations_run = it;

        auto next = assign_to_nearest(points, centroids, options.workers);
        const bool repaired = repair_empty_clusters(points, next, centroids);
        const bool changed = next != assignments;
        assignments = std::move(next);
        if (!changed && !repaired) {
            model.converged = true;
            break;
        }
        if (!repaired && std::isfinite(previous) && previous - sse <= options.tolerance * previous) {
            model.converged = true;
            break;
        }
        previous = sse;
    }

    model.sse = sum_squared_error(points, assignments, centroids);
    model.assignments = std::move(assignments);
    model.centroids = std::move(centroids);
    return model;
}

}  // namespace

ClusterModel kmeans(const Matrix& points, std::size_t m, const KMeansOptions& options) {
    check_points(points);
    require(m >= 1, ErrorCode::Validation, "kmeans: m must be >= 1");
    require(options.restarts >= 1, ErrorCode::Validation, "kmeans: restarts must be >= 1");
    require(std::isfinite(options.tolerance) && options.tolerance >= 0.0, ErrorCode::Validation,
            "kmeans: tolerance must be a finite non-negative number");

    const std::size_t k = std::min(m, distinct_row_count(points));
    ClusterModel best;
    for (std::size_t r = 0; r < options.restarts; ++r) {
        ClusterModel model = lloyd(points, k, Xoshiro256::stream_seed(options.seed, r), options);
        if (r == 0 || model.sse < best.sse) {
            best = std::move(model);
        }
    }
    return best;
}

std::vector<std::size_t> nearest_to_centroid(const ClusterModel& model, const Matrix& points) {
    require(model.assignments.size() == points.rows(), ErrorCode::Validation,
            "nearest_to_centroid: assignment count does not match point count");
    require(model.centroids.cols() == points.cols(), ErrorCode::Validation,
            "nearest_to_centroid: centroid dimension does not match point dimension");
    const std::size_t k = model.cluster_count();
    std::vector<std::size_t> best(k, points.rows());
    std::vector<double> best_d(k, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const std::size_t c = model.assignments[i];
        require(c < k, ErrorCode::Validation, "nearest_to_centroid: assignment out of range");
        const double d = squared_distance(points.row(i), model.centroids.row(c));
        if (d < best_d[c]) {
            best_d[c] = d;
            best[c] = i;
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        require(best[c] < points.rows(), ErrorCode::Validation,
                "nearest_to_centroid: cluster " + std::to_string(c) + " has no members");
    }
    return best;
}

KeyframeSelection select_keyframes(const FeatureBundle& bundle, std::size_t m, const KMeansOptions& options,
                                   ClusterModel* model_out) {
    bundle.validate();
    const Matrix& points = bundle.cluster_embeddings;
    ClusterModel model = kmeans(points, m, options);
    const std::size_t k = model.cluster_count();

    // Members of each cluster ranked by distance to the centroid, so a cluster
    // whose representative is already taken can fall back to its next member.
    std::vector<std::vector<std::pair<double, std::size_t>>> ranked(k);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const std::size_t c = model.assignments[i];
        ranked[c].emplace_back(squared_distance(points.row(i), model.centroids.row(c)), i);
    }
    std::vector<std::pair<std::size_t, std::size_t>> chosen; // (frame, cluster)
    std::vector<bool> taken(points.rows(), false);
    for (std::size_t c = 0; c < k; ++c) {
        std::sort(ranked[c].begin(), ranked[c].end());
        for (const auto& [d, frame] : ranked[c]) {
            if (!taken[frame]) {
                taken[frame] = true;
                chosen.emplace_back(frame, c);
                break;
            }
        }
    }
    std::sort(chosen.begin(), chosen.end());

    KeyframeSelection selection;
    for (const auto& [frame, cluster] : chosen) {
        selection.keyframe_indices.push_back(frame);
        selection.cluster_of_keyframe.push_back(cluster);
    }
    if (model_out != nullptr) {
        *model_out = std::move(model);
    }
    return selection;
}

}  // namespace ktv
