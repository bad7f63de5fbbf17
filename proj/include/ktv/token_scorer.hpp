// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ktv/feature_store.hpp"

namespace ktv {

inline constexpr double kDefaultAlpha = 0.8;

struct TokenScores {
    std::vector<double> importance;      // softmax of CLS-attention logits
    std::vector<double> redundancy;      // mean cosine to the other tokens
    std::vector<double> importance_norm; // min-max normalized
    std::vector<double> redundancy_norm;
    std::vector<double> combined;
    double alpha = kDefaultAlpha;
};

/// Numerically stable softmax (max subtracted first).
std::vector<double> softmax(std::span<const double> logits);

/// Scaled dot products dot(cls_query, key_j) / sqrt(d_t), or the stored logits.
std::vector<double> attention_logits(const TokenFrameRecord& record);

std::vector<double> importance_scores(const TokenFrameRecord& record);

/// Mean cosine similarity of each token to every other token of the frame,
/// evaluated in O(L d) as (u_j . sum_k u_k - 1) / (L - 1) over unit vectors.
/// A single-token frame has redundancy 0. Throws ZeroNorm on a zero token.
std::vector<double> redundancy_scores(const Matrix& token_features);

/// (v - min) / (max - min); a constant vector maps to all 0.5.
std::vector<double> minmax_normalize(std::span<const double> values);

std::vector<double> combined_scores(std::span<const double> importance, std::span<const double> redundancy,
                                    double alpha);

TokenScores score_tokens(const TokenFrameRecord& record, double alpha = kDefaultAlpha);

/// Token indices ordered by descending score, ties to the lower index.
std::vector<std::size_t> rank_descending(std::span<const double> scores);

}  // namespace ktv
