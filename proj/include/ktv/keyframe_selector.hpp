// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ktv/feature_store.hpp"
#include "ktv/matrix.hpp"

namespace ktv {

struct KMeansOptions {
    std::uint64_t seed = 0;
    std::size_t max_iterations = 100;
    std::size_t restarts = 10; // independent seedings; the lowest SSE wins
    /// Stop once (prev_sse - sse) <= tolerance * prev_sse.
    double tolerance = 1e-4;
    /// Threads for the assignment step; 0 = hardware concurrency. Results do
    /// not depend on this value.
    std::size_t workers = 1;
};

struct ClusterModel {
    std::vector<std::size_t> assignments; // [T], values in [0, m)
    MatrixD centroids;                    // [m x d_f]
    double sse = 0.0;                     // of `assignments` against `centroids`
    std::size_t iterations_run = 0;
    bool converged = false;
    /// SSE after each centroid update, one entry per iteration.
    std::vector<double> sse_history;

    std::size_t cluster_count() const noexcept { return centroids.rows(); }
};

struct KeyframeSelection {
    std::vector<std::size_t> keyframe_indices;    // strictly increasing
    std::vector<std::size_t> cluster_of_keyframe; // parallel to keyframe_indices

    std::size_t effective_m() const noexcept { return keyframe_indices.size(); }
};

double squared_distance(std::span<const float> point, std::span<const double> centroid);

/// Index of the nearest centroid for every point (ties to the lowest index).
std::vector<std::size_t> assign_to_nearest(const Matrix& points, const MatrixD& centroids, std::size_t workers = 1);

/// Cluster means of `assignments`, summed in ascending point order.
MatrixD cluster_means(const Matrix& points, std::span<const std::size_t> assignments, std::size_t cluster_count);

double sum_squared_error(const Matrix& points, std::span<const std::size_t> assignments, const MatrixD& centroids);

/// Number of pairwise distinct rows.
std::size_t distinct_row_count(const Matrix& points);

/// Best of `restarts` runs of Lloyd's algorithm from greedy k-means++ seeding. Clusters with
/// min(m, distinct rows) centers; empty clusters are reseeded with the
/// point farthest from its centroid.
ClusterModel kmeans(const Matrix& points, std::size_t m, const KMeansOptions& options = {});

/// Per cluster, the member closest to the centroid (ties to the lowest frame
/// index).
std::vector<std::size_t> nearest_to_centroid(const ClusterModel& model, const Matrix& points);

/// Clusters the bundle's frame embeddings and returns one representative per
/// cluster in temporal order.
KeyframeSelection select_keyframes(const FeatureBundle& bundle, std::size_t m, const KMeansOptions& options = {},
                                   ClusterModel* model_out = nullptr);

}  // namespace ktv
