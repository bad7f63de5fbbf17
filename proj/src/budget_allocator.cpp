// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#include "ktv/budget_allocator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ktv/error.hpp"

namespace ktv {

void BudgetSchedule::validate() const {
    require(!values.empty(), ErrorCode::Validation, "budget schedule: needs at least one value");
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        require(std::isfinite(v), ErrorCode::Validation, "budget schedule: non-finite value");
        if (mode == BudgetMode::Counts) {
            require(v >= 1.0 && v == std::floor(v), ErrorCode::Validation,
                    "budget schedule: counts must be integers >= 1");
        } else {
            require(v > 0.0 && v <= 1.0, ErrorCode::Validation, "budget schedule: fractions must lie in (0, 1]");
        }
        if (i > 0) {
            require(v <= values[i - 1], ErrorCode::Validation, "budget schedule: values must be non-increasing");
        }
    }
}

bool BudgetSchedule::is_preset(std::string_view name) {
    return name == "sparse" || name == "normal" || name == "dense";
}

BudgetSchedule BudgetSchedule::preset(std::string_view name) {
    BudgetSchedule s;
    s.mode = BudgetMode::Counts;
    s.preset_name = std::string(name);
    if (name == "sparse") {
        s.values = {144, 108, 84, 72, 60, 36};
    } else if (name == "normal") {
        s.values = {216, 180, 162, 144, 126, 108};
    } else if (name == "dense") {
        s.values = {432, 360, 324, 288, 252, 216};
    } else {
        fail(ErrorCode::Validation, "unknown preset '" + std::string(name) + "' (expected sparse, normal or dense)");
    }
    return s;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    require(a.size() == b.size(), ErrorCode::Validation, "cosine: dimension mismatch");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        dot += static_cast<double>(a[d]) * b[d];
        na += static_cast<double>(a[d]) * a[d];
        nb += static_cast<double>(b[d]) * b[d];
    }
    require(na > 0.0 && nb > 0.0, ErrorCode::ZeroNorm, "cosine: zero-norm embedding");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

RelevanceRanking relevance_ranking(const Matrix& keyframe_embeddings, const QuestionEmbedding& question) {
    question.validate();
    require(keyframe_embeddings.cols() == question.embedding.size(), ErrorCode::Validation,
            "relevance_ranking: keyframe embedding dimension " + std::to_string(keyframe_embeddings.cols()) +
                " does not match question dimension " + std::to_string(question.embedding.size()));
    RelevanceRanking r;
    r.similarity.reserve(keyframe_embeddings.rows());
    for (std::size_t i = 0; i < keyframe_embeddings.rows(); ++i) {
        r.similarity.push_back(cosine_similarity(keyframe_embeddings.row(i), question.embedding));
    }
    const auto order = rank_descending(r.similarity);
    r.rank_of_keyframe.resize(order.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        r.rank_of_keyframe[order[rank]] = rank;
    }
    return r;
}

RelevanceRanking temporal_ranking(std::size_t keyframe_count) {
    RelevanceRanking r;
    r.question_driven = false;
    r.rank_of_keyframe.resize(keyframe_count);
    std::iota(r.rank_of_keyframe.begin(), r.rank_of_keyframe.end(), std::size_t{0});
    return r;
}

std::vector<std::size_t> resolve_budgets(const BudgetSchedule& schedule, std::size_t tokens_per_frame,
                                         std::size_t keyframe_count) {
    schedule.validate();
    require(tokens_per_frame >= 1, ErrorCode::Validation, "resolve_budgets: tokens per frame must be >= 1");
    require(keyframe_count >= 1, ErrorCode::Validation, "resolve_budgets: need at least one keyframe");
    require(schedule.values.size() >= keyframe_count, ErrorCode::Validation,
            "resolve_budgets: schedule has " + std::to_string(schedule.values.size()) + " entries for " +
                std::to_string(keyframe_count) + " keyframes");

    const std::size_t m = keyframe_count;
    const double L = static_cast<double>(tokens_per_frame);
    std::vector<std::size_t> budgets(m);

    if (schedule.mode == BudgetMode::Counts) {
        for (std::size_t i = 0; i < m; ++i) {
            budgets[i] = std::clamp<std::size_t>(static_cast<std::size_t>(schedule.values[i]), 1, tokens_per_frame);
        }
        return budgets;
    }

    // Largest remainder. Ranks whose floor is below the one-token minimum are
    // lifted to 1 and take no part in the remainder distribution.
    std::vector<double> raw(m);
    double raw_total = 0.0;
    std::size_t assigned = 0;
    std::vector<bool> lifted(m, false);
    for (std::size_t i = 0; i < m; ++i) {
        raw[i] = schedule.values[i] * L;
        raw_total += raw[i];
        budgets[i] = static_cast<std::size_t>(std::floor(raw[i]));
        if (budgets[i] < 1) {
            budgets[i] = 1;
            lifted[i] = true;
        }
        assigned += budgets[i];
    }
    const auto target = static_cast<std::size_t>(std::llround(raw_total));
    std::size_t remainder = target > assigned ? target - assigned : 0;

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < m; ++i) {
        if (!lifted[i]) {
            order.push_back(i);
        }
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return raw[a] - std::floor(raw[a]) > raw[b] - std::floor(raw[b]);
    });
    for (std::size_t i = 0; i < order.size() && remainder > 0; ++i, --remainder) {
        ++budgets[order[i]];
    }
    for (auto& b : budgets) {
        b = std::clamp<std::size_t>(b, 1, tokens_per_frame);
    }
    for (std::size_t i = 1; i < m; ++i) {
        require(budgets[i] <= budgets[i - 1], ErrorCode::Internal, "resolve_budgets: budgets not non-increasing");
    }
    return budgets;
}

std::vector<std::size_t> uniform_budgets(std::size_t total, std::size_t keyframe_count) {
    require(keyframe_count >= 1, ErrorCode::Validation, "uniform_budgets: need at least one keyframe");
    std::vector<std::size_t> out(keyframe_count, total / keyframe_count);
    for (std::size_t i = 0; i < total % keyframe_count; ++i) {
        ++out[i];
    }
    return out;
}

std::vector<std::size_t> select_topk(std::span<const double> combined, std::size_t k) {
    require(k >= 1 && k <= combined.size(), ErrorCode::Validation,
            "select_topk: k = " + std::to_string(k) + " outside [1, " + std::to_string(combined.size()) + "]");
    std::vector<std::size_t> idx(combined.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto better = [&](std::size_t a, std::size_t b) {
        return combined[a] > combined[b] || (combined[a] == combined[b] && a < b);
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(), better);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

PruningPlan build_plan(const KeyframeSelection& selection, std::span<const TokenScores> scores,
                       const std::optional<RelevanceRanking>& ranking, const BudgetSchedule& schedule,
                       std::size_t tokens_per_frame) {
    const std::size_t m = selection.effective_m();
    require(m >= 1, ErrorCode::Validation, "build_plan: no keyframes selected");
    require(selection.cluster_of_keyframe.size() == m, ErrorCode::Internal,
            "build_plan: keyframe/cluster cardinality mismatch");
    require(scores.size() == m, ErrorCode::Internal,
            "build_plan: " + std::to_string(scores.size()) + " score sets for " + std::to_string(m) + " keyframes");
    for (const auto& s : scores) {
        require(s.combined.size() == tokens_per_frame, ErrorCode::Validation,
                "build_plan: keyframe token count differs from tokens per frame");
    }

    const RelevanceRanking order = ranking ? *ranking : temporal_ranking(m);
    require(order.rank_of_keyframe.size() == m, ErrorCode::Internal, "build_plan: ranking cardinality mismatch");

    std::vector<std::size_t> by_rank = resolve_budgets(schedule, tokens_per_frame, m);
    if (!ranking) {
        by_rank = uniform_budgets(std::accumulate(by_rank.begin(), by_rank.end(), std::size_t{0}), m);
    }

    PruningPlan plan;
    plan.tokens_per_frame = tokens_per_frame;
    for (std::size_t i = 0; i < m; ++i) {
        PlannedKeyframe kf;
        kf.frame_index = selection.keyframe_indices[i];
        kf.cluster_id = selection.cluster_of_keyframe[i];
        kf.relevance_rank = order.rank_of_keyframe[i];
        require(kf.relevance_rank < m, ErrorCode::Internal, "build_plan: relevance rank out of range");
        if (order.question_driven) {
            kf.similarity = order.similarity.at(i);
        }
        kf.budget = by_rank[kf.relevance_rank];
        kf.retained_token_indices = select_topk(scores[i].combined, kf.budget);
        for (auto j : kf.retained_token_indices) {
            kf.retained_scores.push_back(scores[i].combined[j]);
        }
        plan.total_retained += kf.budget;
        plan.keyframes.push_back(std::move(kf));
    }
    for (std::size_t i = 1; i < m; ++i) {
        require(plan.keyframes[i].frame_index > plan.keyframes[i - 1].frame_index, ErrorCode::Internal,
                "build_plan: keyframes not in temporal order");
    }
    return plan;
}

}  // namespace ktv
