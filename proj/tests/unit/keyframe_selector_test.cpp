// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "ktv/error.hpp"
#include "ktv/keyframe_selector.hpp"
#include "ktv/synthetic.hpp"
#include "test_support.hpp"

namespace {

using ktv::testing::adjusted_rand_index;

ktv::Matrix column(std::vector<float> values) {
    const std::size_t n = values.size();
    return ktv::Matrix(n, 1, std::move(values));
}

struct BestPartition {
    double sse = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> labels;
};

// Exhaustive search over every labelling of 1-D points into two non-empty groups.
BestPartition brute_force_two_partition(const std::vector<double>& x) {
    BestPartition best;
    const std::size_t n = x.size();
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        double sum[2] = {0, 0}, cnt[2] = {0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            const int g = (mask >> i) & 1u;
            sum[g] += x[i];
            cnt[g] += 1;
        }
        double sse = 0;
        std::vector<std::size_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int g = (mask >> i) & 1u;
            labels[i] = g;
            const double d = x[i] - sum[g] / cnt[g];
            sse += d * d;
        }
        if (sse < best.sse) {
            best = {sse, labels};
        }
    }
    return best;
}

ktv::FeatureBundle bundle_of(ktv::Matrix m) {
    ktv::FeatureBundle b;
    b.cluster_embeddings = std::move(m);
    return b;
}

void expect_model_invariants(const ktv::ClusterModel& model, const ktv::Matrix& points) {
    const std::size_t k = model.cluster_count();
    std::vector<std::size_t> counts(k, 0);
    for (auto a : model.assignments) {
        ASSERT_LT(a, k);
        ++counts[a];
    }
    for (auto c : counts) EXPECT_GT(c, 0u);
    for (std::size_t i = 1; i < model.sse_history.size(); ++i) {
        EXPECT_LE(model.sse_history[i], model.sse_history[i - 1]) << "iteration " << i;
    }
    if (!model.sse_history.empty()) {
        EXPECT_LE(model.sse, model.sse_history.back());
    }
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const double own = ktv::squared_distance(points.row(i), model.centroids.row(model.assignments[i]));
        for (std::size_t c = 0; c < k; ++c) {
            EXPECT_LE(own, ktv::squared_distance(points.row(i), model.centroids.row(c)));
        }
    }
}

TEST(KMeans, SinglePoint) {
    const auto pts = ktv::Matrix(1, 3, {1.f, 2.f, 3.f});
    const auto model = ktv::kmeans(pts, 1);
    EXPECT_EQ(model.assignments, std::vector<std::size_t>{0});
    EXPECT_EQ(model.centroids(0, 0), 1.0);
    EXPECT_EQ(model.centroids(0, 2), 3.0);
    EXPECT_EQ(model.sse, 0.0);
    EXPECT_TRUE(model.converged);
}

TEST(KMeans, OneDimensionalFourPointsMatchesBruteForce) {
    const std::vector<float> xs = {0.f, 0.1f, 10.f, 10.1f};
    const auto oracle = brute_force_two_partition({xs.begin(), xs.end()});
    EXPECT_NEAR(oracle.sse, 0.01, 1e-6);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto model = ktv::kmeans(column(xs), 2, {.seed = seed});
        EXPECT_DOUBLE_EQ(adjusted_rand_index(model.assignments, oracle.labels), 1.0);
        EXPECT_EQ(model.assignments[0], model.assignments[1]);
        EXPECT_NE(model.assignments[1], model.assignments[2]);
        EXPECT_NEAR(model.sse, oracle.sse, 1e-6);
        std::vector<double> c = {model.centroids(0, 0), model.centroids(1, 0)};
        std::sort(c.begin(), c.end());
        EXPECT_NEAR(c[0], 0.05, 1e-6);
        EXPECT_NEAR(c[1], 10.05, 1e-6);
    }
}

TEST(KMeans, RandomSmallSetsMatchBruteForceOptimumWhenSeparated) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> noise(0.0, 0.1);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<float> xs;
        const int left = 2 + trial % 4, right = 2 + (trial / 4) % 4;
        for (int i = 0; i < left; ++i) xs.push_back(static_cast<float>(noise(rng)));
        for (int i = 0; i < right; ++i) xs.push_back(static_cast<float>(5.0 + noise(rng)));
        const auto oracle = brute_force_two_partition({xs.begin(), xs.end()});
        const auto model = ktv::kmeans(column(xs), 2, {.seed = static_cast<std::uint64_t>(trial)});
        EXPECT_NEAR(model.sse, oracle.sse, 1e-6);
        EXPECT_DOUBLE_EQ(adjusted_rand_index(model.assignments, oracle.labels), 1.0);
    }
}

TEST(KMeans, PlantedBlobsRecovered) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ktv::SyntheticSpec spec;
        spec.seed = seed;
        spec.frame_count = 120;
        spec.cluster_count = 3;
        spec.blob_separation = 50.0;
        const auto fx = ktv::generate_synthetic(spec);
        const auto model = ktv::kmeans(fx.bundle.cluster_embeddings, 3, {.seed = seed});
        EXPECT_DOUBLE_EQ(adjusted_rand_index(model.assignments, fx.truth.frame_labels), 1.0);
        expect_model_invariants(model, fx.bundle.cluster_embeddings);
    }
}

TEST(KMeans, InvariantsOnUnstructuredData) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = ktv::testing::random_matrix(rng, 50 + trial, 4);
        const auto model = ktv::kmeans(pts, 1 + trial % 6, {.seed = static_cast<std::uint64_t>(trial), .tolerance = 0.0});
        expect_model_invariants(model, pts);
    }
}

TEST(KMeans, ConvergedModelIsALloydFixedPoint) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = ktv::testing::random_matrix(rng, 80, 3);
        const auto model = ktv::kmeans(pts, 5, {.seed = 1, .max_iterations = 1000, .tolerance = 0.0});
        ASSERT_TRUE(model.converged);
        const auto means = ktv::cluster_means(pts, model.assignments, model.cluster_count());
        EXPECT_EQ(ktv::assign_to_nearest(pts, means), model.assignments);
    }
}

TEST(KMeans, DeterministicAcrossWorkerCounts) {
    std::mt19937_64 rng(21);
    const auto pts = ktv::testing::random_matrix(rng, 500, 16);
    const auto base = ktv::kmeans(pts, 6, {.seed = 3, .workers = 1});
    for (std::size_t workers : {2u, 4u, 8u}) {
        const auto other = ktv::kmeans(pts, 6, {.seed = 3, .workers = workers});
        EXPECT_EQ(other.assignments, base.assignments);
        EXPECT_EQ(other.centroids, base.centroids);
        EXPECT_EQ(other.sse, base.sse);
        EXPECT_EQ(other.sse_history, base.sse_history);
        EXPECT_EQ(other.iterations_run, base.iterations_run);
    }
}

TEST(KMeans, MoreRestartsNeverRaiseSse) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const auto pts = ktv::testing::random_matrix(rng, 60, 5);
        const auto seed = static_cast<std::uint64_t>(trial);
        double previous = std::numeric_limits<double>::infinity();
        for (std::size_t r = 1; r <= 6; ++r) {
            const auto model = ktv::kmeans(pts, 4, {.seed = seed, .restarts = r});
            EXPECT_LE(model.sse, previous);
            expect_model_invariants(model, pts);
            previous = model.sse;
        }
    }
}

TEST(KMeans, FewerDistinctPointsThanClusters) {
    const auto pts = ktv::Matrix(5, 2, {1.f, 1.f, 1.f, 1.f, 2.f, 2.f, 1.f, 1.f, 2.f, 2.f});
    const auto model = ktv::kmeans(pts, 4);
    EXPECT_EQ(model.cluster_count(), 2u);
    EXPECT_EQ(model.sse, 0.0);
    expect_model_invariants(model, pts);
    EXPECT_EQ(ktv::distinct_row_count(pts), 2u);
}

TEST(KMeans, HeavyDuplicatesKeepEveryClusterPopulated) {
    std::vector<float> xs(100, 0.f);
    xs.push_back(1.f);
    xs.push_back(2.f);
    const auto model = ktv::kmeans(column(xs), 3);
    expect_model_invariants(model, column(xs));
    EXPECT_NEAR(model.sse, 0.0, 1e-12);
}

TEST(KMeans, Errors) {
    EXPECT_THROW(ktv::kmeans(ktv::Matrix(), 2), ktv::Error);
    EXPECT_THROW(ktv::kmeans(ktv::Matrix(3, 2, 1.f), 0), ktv::Error);
    EXPECT_THROW(ktv::kmeans(ktv::Matrix(3, 2, 1.f), 2, {.restarts = 0}), ktv::Error);
    auto nan = ktv::Matrix(2, 1, {0.f, std::numeric_limits<float>::quiet_NaN()});
    try {
        ktv::kmeans(nan, 1);
        FAIL();
    } catch (const ktv::Error& e) {
        EXPECT_EQ(e.code(), ktv::ErrorCode::NonFinite);
    }
}

TEST(NearestToCentroid, SingleMemberAndTie) {
    ktv::ClusterModel one;
    one.assignments = {0};
    one.centroids = ktv::MatrixD(1, 1, {4.0});
    EXPECT_EQ(ktv::nearest_to_centroid(one, column({4.f})), std::vector<std::size_t>{0});

    ktv::ClusterModel tie;
    const auto pts = column({0.f, 0.1f});
    tie.assignments = {0, 0};
    tie.centroids = ktv::cluster_means(pts, tie.assignments, 1);
    EXPECT_EQ(ktv::nearest_to_centroid(tie, pts), std::vector<std::size_t>{0});
}

TEST(NearestToCentroid, MatchesExhaustiveScan) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const auto pts = ktv::testing::random_matrix(rng, 6, 3);
        ktv::ClusterModel model;
        model.assignments.assign(6, 0);
        model.centroids = ktv::cluster_means(pts, model.assignments, 1);
        std::size_t best = 0;
        long double best_d = std::numeric_limits<long double>::infinity();
        for (std::size_t i = 0; i < 6; ++i) {
            long double d = 0;
            for (std::size_t c = 0; c < 3; ++c) {
                const long double diff = static_cast<long double>(pts(i, c)) - model.centroids(0, c);
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        EXPECT_EQ(ktv::nearest_to_centroid(model, pts), std::vector<std::size_t>{best});
    }
}

TEST(NearestToCentroid, ShapeErrors) {
    ktv::ClusterModel model;
    model.assignments = {0, 0};
    model.centroids = ktv::MatrixD(1, 2);
    EXPECT_THROW(ktv::nearest_to_centroid(model, ktv::Matrix(3, 2)), ktv::Error);
    EXPECT_THROW(ktv::nearest_to_centroid(model, ktv::Matrix(2, 3)), ktv::Error);
}

TEST(SelectKeyframes, EachFrameItsOwnCluster) {
    std::mt19937_64 rng(1);
    const auto sel = ktv::select_keyframes(bundle_of(ktv::testing::random_matrix(rng, 6, 4)), 6);
    EXPECT_EQ(sel.keyframe_indices, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
    EXPECT_EQ(sel.effective_m(), 6u);
}

TEST(SelectKeyframes, ShortVideoUsesEveryFrame) {
    std::mt19937_64 rng(2);
    const auto sel = ktv::select_keyframes(bundle_of(ktv::testing::random_matrix(rng, 3, 4)), 6);
    EXPECT_EQ(sel.keyframe_indices, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(SelectKeyframes, IdenticalFramesCollapse) {
    const auto sel = ktv::select_keyframes(bundle_of(ktv::Matrix(4, 3, 0.7f)), 2);
    EXPECT_EQ(sel.effective_m(), 1u);
    EXPECT_EQ(sel.keyframe_indices, std::vector<std::size_t>{0});
}

TEST(SelectKeyframes, OneKeyframePerPlantedBlob) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ktv::SyntheticSpec spec;
        spec.seed = seed;
        spec.frame_count = 90;
        const auto fx = ktv::generate_synthetic(spec);
        ktv::ClusterModel model;
        const auto sel = ktv::select_keyframes(fx.bundle, 3, {.seed = seed}, &model);
        ASSERT_EQ(sel.effective_m(), 3u);
        std::set<std::size_t> blobs;
        for (auto f : sel.keyframe_indices) blobs.insert(fx.truth.frame_labels[f]);
        EXPECT_EQ(blobs.size(), 3u);
        EXPECT_TRUE(std::is_sorted(sel.keyframe_indices.begin(), sel.keyframe_indices.end()));

        // representative optimality
        for (std::size_t i = 0; i < sel.effective_m(); ++i) {
            const auto c = sel.cluster_of_keyframe[i];
            EXPECT_EQ(model.assignments[sel.keyframe_indices[i]], c);
            const double chosen = ktv::squared_distance(fx.bundle.cluster_embeddings.row(sel.keyframe_indices[i]),
                                                        model.centroids.row(c));
            for (std::size_t t = 0; t < fx.bundle.frame_count(); ++t) {
                if (model.assignments[t] == c) {
                    EXPECT_LE(chosen, ktv::squared_distance(fx.bundle.cluster_embeddings.row(t), model.centroids.row(c)));
                }
            }
        }
    }
}

TEST(SelectKeyframes, PermutationCovariance) {
    ktv::SyntheticSpec spec;
    spec.frame_count = 60;
    spec.seed = 4;
    const auto fx = ktv::generate_synthetic(spec);
    const auto& pts = fx.bundle.cluster_embeddings;

    std::vector<std::size_t> perm(pts.rows());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(9);
    std::shuffle(perm.begin(), perm.end(), rng);
    ktv::Matrix shuffled(pts.rows(), pts.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        std::copy(pts.row(perm[i]).begin(), pts.row(perm[i]).end(), shuffled.row(i).begin());
    }

    const auto base = ktv::kmeans(pts, 3);
    const auto moved = ktv::kmeans(shuffled, 3);
    std::vector<std::size_t> pulled_back(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) pulled_back[perm[i]] = moved.assignments[i];
    EXPECT_DOUBLE_EQ(adjusted_rand_index(base.assignments, pulled_back), 1.0);

    const auto sel_base = ktv::select_keyframes(bundle_of(pts), 3);
    const auto sel_moved = ktv::select_keyframes(bundle_of(shuffled), 3);
    EXPECT_TRUE(std::is_sorted(sel_moved.keyframe_indices.begin(), sel_moved.keyframe_indices.end()));
    std::set<std::size_t> a(sel_base.keyframe_indices.begin(), sel_base.keyframe_indices.end());
    std::set<std::size_t> b;
    for (auto f : sel_moved.keyframe_indices) b.insert(perm[f]);
    EXPECT_EQ(a, b);
}

}  // namespace
