// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ktv/ktvf.hpp"
#include "ktv/matrix.hpp"

namespace ktv {

/// Frame-level embeddings of one video.
struct FeatureBundle {
    std::string video_id;
    Matrix cluster_embeddings;                  // [T x d_f]
    std::optional<Matrix> relevance_embeddings; // [T x d_q]
    std::optional<double> fps_hint;

    std::size_t frame_count() const noexcept { return cluster_embeddings.rows(); }

    /// Throws Validation/NonFinite naming the offending field.
    void validate() const;
    bool operator==(const FeatureBundle&) const = default;
};

/// Precomputed CLS-attention logits, one per token.
struct ImportanceLogits {
    std::vector<float> logits;
    bool operator==(const ImportanceLogits&) const = default;
};

/// Projected CLS query and projected token keys; logits are
/// dot(cls_query, key_j) / sqrt(d_t).
struct QueryKeys {
    std::vector<float> cls_query; // [d_t]
    Matrix token_keys;            // [L x d_t]
    bool operator==(const QueryKeys&) const = default;
};

using AttentionInputs = std::variant<ImportanceLogits, QueryKeys>;

struct TokenFrameRecord {
    std::string video_id;
    std::size_t frame_index = 0;
    Matrix token_features; // [L x d_t]
    AttentionInputs attention;

    std::size_t token_count() const noexcept { return token_features.rows(); }
    std::size_t token_dim() const noexcept { return token_features.cols(); }

    void validate() const;
    bool operator==(const TokenFrameRecord&) const = default;
};

struct QuestionEmbedding {
    std::vector<float> embedding; // [d_q]
    std::optional<std::string> question_text;

    void validate() const;
    bool operator==(const QuestionEmbedding&) const = default;
};

/// Canonical per-frame token file name, `frame_{index:06}.ktvf`.
std::string token_frame_filename(std::size_t frame_index);

inline constexpr const char* kBundleFilename = "bundle.ktvf";
inline constexpr const char* kQuestionFilename = "question.ktvf";

KtvfFile to_ktvf(const FeatureBundle& bundle);
KtvfFile to_ktvf(const TokenFrameRecord& record);
KtvfFile to_ktvf(const QuestionEmbedding& question, const std::string& video_id = "");

FeatureBundle bundle_from_ktvf(const KtvfFile& file);
TokenFrameRecord token_frame_from_ktvf(const KtvfFile& file);
QuestionEmbedding question_from_ktvf(const KtvfFile& file);

void write_bundle(const FeatureBundle& bundle, const std::filesystem::path& path);
FeatureBundle read_bundle(const std::filesystem::path& path);

void write_token_frame(const TokenFrameRecord& record, const std::filesystem::path& path);
TokenFrameRecord read_token_frame(const std::filesystem::path& path);

void write_question(const QuestionEmbedding& question, const std::filesystem::path& path);
QuestionEmbedding read_question(const std::filesystem::path& path);

}  // namespace ktv
