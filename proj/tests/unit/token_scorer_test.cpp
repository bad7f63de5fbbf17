// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ktv/error.hpp"
#include "ktv/synthetic.hpp"
#include "ktv/token_scorer.hpp"
#include "test_support.hpp"

namespace {

using ktv::testing::argsort_desc;

ktv::TokenFrameRecord with_logits(ktv::Matrix features, std::vector<float> logits) {
    ktv::TokenFrameRecord r;
    r.token_features = std::move(features);
    r.attention = ktv::ImportanceLogits{std::move(logits)};
    return r;
}

TEST(Importance, UniformLogits) {
    const auto r = with_logits(ktv::Matrix(4, 2, 1.f), {0.3f, 0.3f, 0.3f, 0.3f});
    for (double v : ktv::importance_scores(r)) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Importance, ClosedFormTwoTokens) {
    const auto r = with_logits(ktv::Matrix(2, 2, 1.f), {0.f, static_cast<float>(std::log(3.0))});
    const auto s = ktv::importance_scores(r);
    EXPECT_NEAR(s[0], 0.25, 1e-7);
    EXPECT_NEAR(s[1], 0.75, 1e-7);
}

TEST(Importance, ScaledDotMatchesExtendedPrecision) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        ktv::TokenFrameRecord r;
        r.token_features = ktv::testing::random_matrix(rng, 16, 8);
        auto q = ktv::testing::random_matrix(rng, 1, 8, 2.0);
        ktv::QueryKeys qk{{q.values().begin(), q.values().end()}, ktv::testing::random_matrix(rng, 16, 8, 2.0)};
        const auto ref = ktv::testing::softmax_scaled_dot_reference(qk.cls_query, qk.token_keys);
        r.attention = std::move(qk);
        const auto s = ktv::importance_scores(r);
        for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(s[j], ref[j], 1e-6);
    }
}

TEST(Importance, SumsToOneAndShiftInvariant) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const auto logits = ktv::testing::random_vector(rng, 1 + trial % 40, -20.0, 20.0);
        const auto s = ktv::softmax(logits);
        EXPECT_NEAR(std::accumulate(s.begin(), s.end(), 0.0), 1.0, 1e-6);
        for (double v : s) EXPECT_GT(v, 0.0);
        auto shifted = logits;
        for (auto& v : shifted) v += 123.5;
        const auto t = ktv::softmax(shifted);
        for (std::size_t j = 0; j < s.size(); ++j) EXPECT_NEAR(s[j], t[j], 1e-6);
    }
    // stable for large magnitudes
    const auto big = ktv::softmax(std::vector<double>{1000.0, 1000.0});
    EXPECT_DOUBLE_EQ(big[0], 0.5);
}

TEST(Redundancy, IdenticalTokens) {
    const auto s = ktv::redundancy_scores(ktv::Matrix(3, 4, 0.3f));
    for (double v : s) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Redundancy, OrthonormalExample) {
    const auto s = ktv::redundancy_scores(ktv::Matrix(3, 2, {1.f, 0.f, 1.f, 0.f, 0.f, 1.f}));
    EXPECT_NEAR(s[0], 0.5, 1e-12);
    EXPECT_NEAR(s[1], 0.5, 1e-12);
    EXPECT_NEAR(s[2], 0.0, 1e-12);
}

TEST(Redundancy, MatchesPairwiseOracle) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const auto m = ktv::testing::random_matrix(rng, 12, 8);
        const auto fast = ktv::redundancy_scores(m);
        const auto ref = ktv::testing::redundancy_bruteforce(m);
        for (std::size_t j = 0; j < 12; ++j) EXPECT_NEAR(fast[j], ref[j], 1e-6);
    }
}

TEST(Redundancy, ScaleInvariant) {
    std::mt19937_64 rng(4);
    auto m = ktv::testing::random_matrix(rng, 10, 5);
    const auto before = ktv::redundancy_scores(m);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    for (std::size_t j = 0; j < 10; ++j) {
        const auto s = static_cast<float>(scale(rng));
        for (auto& v : m.row(j)) v *= s;
    }
    const auto after = ktv::redundancy_scores(m);
    for (std::size_t j = 0; j < 10; ++j) EXPECT_NEAR(before[j], after[j], 1e-6);
}

TEST(Redundancy, DegenerateAndErrors) {
    EXPECT_EQ(ktv::redundancy_scores(ktv::Matrix(1, 3, 2.f)), std::vector<double>{0.0});
    auto zero = ktv::Matrix(3, 2, 1.f);
    zero(1, 0) = 0.f;
    zero(1, 1) = 0.f;
    try {
        ktv::redundancy_scores(zero);
        FAIL();
    } catch (const ktv::Error& e) {
        EXPECT_EQ(e.code(), ktv::ErrorCode::ZeroNorm);
        EXPECT_NE(std::string(e.what()).find("zero-norm token"), std::string::npos);
    }
}

TEST(MinMax, ClosedForms) {
    EXPECT_EQ(ktv::minmax_normalize(std::vector<double>{2, 4, 6}), (std::vector<double>{0, 0.5, 1}));
    EXPECT_EQ(ktv::minmax_normalize(std::vector<double>{5, 5, 5}), (std::vector<double>{0.5, 0.5, 0.5}));
    EXPECT_EQ(ktv::minmax_normalize(std::vector<double>{-1, 0, 3}), (std::vector<double>{0, 0.25, 1}));
    EXPECT_TRUE(ktv::minmax_normalize(std::vector<double>{}).empty());
}

TEST(Combined, Extremes) {
    std::mt19937_64 rng(6);
    const auto imp = ktv::testing::random_vector(rng, 20, 0, 1);
    const auto red = ktv::testing::random_vector(rng, 20, -1, 1);
    const auto imp_n = ktv::minmax_normalize(imp);
    const auto red_n = ktv::minmax_normalize(red);
    const auto at1 = ktv::combined_scores(imp, red, 1.0);
    const auto at0 = ktv::combined_scores(imp, red, 0.0);
    for (std::size_t j = 0; j < 20; ++j) {
        EXPECT_EQ(at1[j], imp_n[j]);
        EXPECT_EQ(at0[j], 1.0 - red_n[j]);
    }
}

TEST(Combined, DirectSubstitution) {
    const auto s = ktv::combined_scores(std::vector<double>{0.0, 1.0}, std::vector<double>{0.0, 1.0}, 0.8);
    EXPECT_DOUBLE_EQ(s[1], 0.8);
    EXPECT_DOUBLE_EQ(s[0], 1.0 - 0.8);
}

TEST(Combined, Errors) {
    EXPECT_THROW(ktv::combined_scores(std::vector<double>{1, 2}, std::vector<double>{1}, 0.5), ktv::Error);
    EXPECT_THROW(ktv::combined_scores(std::vector<double>{1}, std::vector<double>{1}, 1.5), ktv::Error);
    EXPECT_THROW(ktv::combined_scores(std::vector<double>{1}, std::vector<double>{1}, -0.1), ktv::Error);
}

TEST(ScoreTokens, InvariantsOnRandomRecords) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> alpha_dist(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t L = 2 + trial % 30;
        auto logits = ktv::testing::random_vector(rng, L, -3, 3);
        const auto r = with_logits(ktv::testing::random_matrix(rng, L, 6), {logits.begin(), logits.end()});
        const double alpha = alpha_dist(rng);
        const auto s = ktv::score_tokens(r, alpha);
        EXPECT_NEAR(std::accumulate(s.importance.begin(), s.importance.end(), 0.0), 1.0, 1e-6);
        for (std::size_t j = 0; j < L; ++j) {
            EXPECT_GE(s.redundancy[j], -1.0);
            EXPECT_LE(s.redundancy[j], 1.0);
            EXPECT_GE(s.importance_norm[j], 0.0);
            EXPECT_LE(s.importance_norm[j], 1.0);
            EXPECT_GE(s.redundancy_norm[j], 0.0);
            EXPECT_LE(s.redundancy_norm[j], 1.0);
            EXPECT_GE(s.combined[j], 0.0);
            EXPECT_LE(s.combined[j], 1.0);
            EXPECT_EQ(s.combined[j], s.importance_norm[j] * alpha + (1.0 - s.redundancy_norm[j]) * (1.0 - alpha));
        }
        const auto at1 = ktv::score_tokens(r, 1.0);
        EXPECT_EQ(argsort_desc(at1.combined), argsort_desc(at1.importance));
    }
}

TEST(ScoreTokens, PlantedSalientTokensRankFirst) {
    ktv::SyntheticSpec spec;
    spec.frame_count = 10;
    spec.planted_salient_tokens = 8;
    spec.token_count = 64;
    const auto fx = ktv::generate_synthetic(spec);
    for (std::size_t t = 0; t < fx.frames.size(); ++t) {
        const auto s = ktv::score_tokens(fx.frames[t], 0.8);
        EXPECT_EQ(ktv::testing::topk_by_full_sort(s.combined, 8), fx.truth.salient_tokens[t]) << "frame " << t;
    }
}

// Ten copies of one token plus one distinct token, all with equal logits:
// importance carries no signal, so the distinct token must win on redundancy.
TEST(ScoreTokens, DuplicatesScoreBelowDistinctToken) {
    ktv::Matrix tokens(11, 3, 0.f);
    for (std::size_t j = 0; j < 10; ++j) tokens(j, 0) = 1.f;
    tokens(10, 1) = 1.f;
    const auto r = with_logits(tokens, std::vector<float>(11, 0.5f));
    const auto s = ktv::score_tokens(r, 0.5);

    // independent evaluation of the fusion: copies have redundancy 9/10,
    // the distinct token 0, importance is constant (normalized to 0.5)
    const double copy_expected = 0.5 * 0.5 + (1.0 - 1.0) * 0.5;
    const double distinct_expected = 0.5 * 0.5 + (1.0 - 0.0) * 0.5;
    for (std::size_t j = 0; j < 10; ++j) {
        EXPECT_NEAR(s.redundancy[j], 0.9, 1e-12);
        EXPECT_NEAR(s.combined[j], copy_expected, 1e-12);
        EXPECT_LT(s.combined[j], s.combined[10]);
    }
    EXPECT_NEAR(s.combined[10], distinct_expected, 1e-12);
}

TEST(ScoreTokens, SingleTokenFrame) {
    const auto s = ktv::score_tokens(with_logits(ktv::Matrix(1, 2, 1.f), {3.f}), 0.8);
    EXPECT_EQ(s.importance, std::vector<double>{1.0});
    EXPECT_EQ(s.redundancy, std::vector<double>{0.0});
    EXPECT_DOUBLE_EQ(s.combined[0], 0.5 * 0.8 + 0.5 * 0.2);
}

TEST(RankDescending, TiesToLowerIndex) {
    EXPECT_EQ(ktv::rank_descending(std::vector<double>{0.2, 0.9, 0.9, 0.1}), (std::vector<std::size_t>{1, 2, 0, 3}));
}

}  // namespace
