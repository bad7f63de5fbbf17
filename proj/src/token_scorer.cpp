// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#include "ktv/token_scorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ktv/error.hpp"

namespace ktv {

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) {
        return out;
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        out[j] = std::exp(logits[j] - peak);
        total += out[j];
    }
    for (auto& v : out) {
        v /= total;
    }
    return out;
}

std::vector<double> attention_logits(const TokenFrameRecord& record) {
    record.validate();
    if (const auto* il = std::get_if<ImportanceLogits>(&record.attention)) {
        return {il->logits.begin(), il->logits.end()};
    }
    const auto& qk = std::get<QueryKeys>(record.attention);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(record.token_dim()));
    std::vector<double> logits(record.token_count());
    for (std::size_t j = 0; j < logits.size(); ++j) {
        const auto key = qk.token_keys.row(j);
        double dot = 0.0;
        for (std::size_t d = 0; d < key.size(); ++d) {
            dot += static_cast<double>(qk.cls_query[d]) * key[d];
        }
        logits[j] = dot * inv_sqrt_d;
    }
    return logits;
}

std::vector<double> importance_scores(const TokenFrameRecord& record) {
    return softmax(attention_logits(record));
}

std::vector<double> redundancy_scores(const Matrix& token_features) {
    const std::size_t L = token_features.rows();
    const std::size_t D = token_features.cols();
    require(L >= 1 && D >= 1, ErrorCode::Validation, "redundancy_scores: token matrix must be non-empty");

    MatrixD unit(L, D);
    for (std::size_t j = 0; j < L; ++j) {
        const auto row = token_features.row(j);
        double norm2 = 0.0;
        for (float v : row) {
            norm2 += static_cast<double>(v) * v;
        }
        if (!(norm2 > 0.0)) {
            fail(ErrorCode::ZeroNorm, "zero-norm token at index " + std::to_string(j));
        }
        const double inv = 1.0 / std::sqrt(norm2);
        auto dst = unit.row(j);
        for (std::size_t d = 0; d < D; ++d) {
            dst[d] = row[d] * inv;
        }
    }
    std::vector<double> out(L, 0.0);
    if (L == 1) {
        return out;
    }

    std::vector<double> total(D, 0.0);
    for (std::size_t j = 0; j < L; ++j) {
        const auto u = unit.row(j);
        for (std::size_t d = 0; d < D; ++d) {
            total[d] += u[d];
        }
    }
    const double denom = static_cast<double>(L - 1);
    for (std::size_t j = 0; j < L; ++j) {
        const auto u = unit.row(j);
        double dot = 0.0;
        for (std::size_t d = 0; d < D; ++d) {
            dot += u[d] * total[d];
        }
        out[j] = std::clamp((dot - 1.0) / denom, -1.0, 1.0);
    }
    return out;
}

std::vector<double> minmax_normalize(std::span<const double> values) {
    std::vector<double> out(values.size());
    if (values.empty()) {
        return out;
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double min = *lo;
    const double range = *hi - min;
    if (!(range > 0.0)) {
        std::fill(out.begin(), out.end(), 0.5);
        return out;
    }
    for (std::size_t j = 0; j < values.size(); ++j) {
        out[j] = std::clamp((values[j] - min) / range, 0.0, 1.0);
    }
    return out;
}

namespace {

std::vector<double> fuse(const std::vector<double>& imp_norm, const std::vector<double>& red_norm, double alpha) {
    std::vector<double> out(imp_norm.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = imp_norm[j] * alpha + (1.0 - red_norm[j]) * (1.0 - alpha);
    }
    return out;
}

}  // namespace

std::vector<double> combined_scores(std::span<const double> importance, std::span<const double> redundancy,
                                    double alpha) {
    require(importance.size() == redundancy.size(), ErrorCode::Validation,
            "combined_scores: importance and redundancy lengths differ");
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::Validation, "combined_scores: alpha must lie in [0, 1]");
    return fuse(minmax_normalize(importance), minmax_normalize(redundancy), alpha);
}

TokenScores score_tokens(const TokenFrameRecord& record, double alpha) {
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::Validation, "score_tokens: alpha must lie in [0, 1]");
    TokenScores s;
    s.alpha = alpha;
    s.importance = importance_scores(record);
    s.redundancy = redundancy_scores(record.token_features);
    s.importance_norm = minmax_normalize(s.importance);
    s.redundancy_norm = minmax_normalize(s.redundancy);
    s.combined = fuse(s.importance_norm, s.redundancy_norm, alpha);
    return s;
}

std::vector<std::size_t> rank_descending(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace ktv
