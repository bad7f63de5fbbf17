// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ktv/feature_store.hpp"
#include "ktv/keyframe_selector.hpp"
#include "ktv/token_scorer.hpp"

namespace ktv {

enum class BudgetMode { Counts, Fractions };

/// Per-rank retention quotas, most relevant keyframe first.
struct BudgetSchedule {
    BudgetMode mode = BudgetMode::Counts;
    std::vector<double> values;
    std::string preset_name = "custom";

    /// Non-increasing; counts are integers >= 1, fractions lie in (0, 1].
    void validate() const;

    /// "sparse", "normal" or "dense": six descending counts for 576-token
    /// frames totalling 504, 936 and 1872 tokens.
    static BudgetSchedule preset(std::string_view name);
    static bool is_preset(std::string_view name);
};

struct RelevanceRanking {
    std::vector<double> similarity;            // cosine per keyframe; empty for the fallback
    std::vector<std::size_t> rank_of_keyframe; // 0 = most relevant
    bool question_driven = true;
};

double cosine_similarity(std::span<const float> a, std::span<const float> b);

/// Ranks keyframes by cosine similarity to the question; ties go to the
/// earlier keyframe.
RelevanceRanking relevance_ranking(const Matrix& keyframe_embeddings, const QuestionEmbedding& question);

/// Ranking used when no question is available: temporal order.
RelevanceRanking temporal_ranking(std::size_t keyframe_count);

/// Integer budget per relevance rank. Counts are clamped to [1, L];
/// fractions use largest-remainder rounding of beta_i * L toward the more
/// relevant frames. Schedules longer than `keyframe_count` are truncated.
std::vector<std::size_t> resolve_budgets(const BudgetSchedule& schedule, std::size_t tokens_per_frame,
                                         std::size_t keyframe_count);

/// floor(total / m) each, the remainder one apiece to the earliest frames.
std::vector<std::size_t> uniform_budgets(std::size_t total, std::size_t keyframe_count);

/// Indices of the k highest scores (ties to the lower index), ascending.
std::vector<std::size_t> select_topk(std::span<const double> combined, std::size_t k);

struct PlannedKeyframe {
    std::size_t frame_index = 0;
    std::size_t cluster_id = 0;
    std::size_t relevance_rank = 0;
    std::optional<double> similarity;
    std::size_t budget = 0;
    std::vector<std::size_t> retained_token_indices;
    std::vector<double> retained_scores; // combined score per retained token
};

struct PruningPlan {
    std::vector<PlannedKeyframe> keyframes; // temporal order
    std::size_t tokens_per_frame = 0;
    std::size_t total_retained = 0;
};

/// Assigns budgets by relevance rank and keeps each keyframe's top-k tokens.
/// Without a ranking the budgets are split uniformly in temporal order.
PruningPlan build_plan(const KeyframeSelection& selection, std::span<const TokenScores> scores,
                       const std::optional<RelevanceRanking>& ranking, const BudgetSchedule& schedule,
                       std::size_t tokens_per_frame);

}  // namespace ktv
