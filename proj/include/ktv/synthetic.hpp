// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ktv/feature_store.hpp"

namespace ktv {

/// Parameters of a planted synthetic video.
///
/// Frames are split into `cluster_count` contiguous scenes. Scene c draws its
/// clustering embeddings from an isotropic unit-variance Gaussian around a
/// center; centers are pairwise `blob_separation` standard deviations apart
/// (scaled basis vectors when frame_dim >= cluster_count, otherwise evenly
/// spaced on the first axis, where only adjacent centers are that far apart).
///
/// Inside each frame, `planted_salient_tokens` tokens get logits boosted by
/// `salient_logit_boost` and independent random directions; the remaining
/// tokens are small perturbations of one shared background direction.
struct SyntheticSpec {
    std::size_t frame_count = 60;
    std::size_t cluster_count = 3;
    double blob_separation = 50.0;
    std::size_t token_count = 64;
    std::size_t token_dim = 16;
    std::size_t frame_dim = 32;
    std::size_t relevance_dim = 16;
    std::size_t planted_salient_tokens = 8;
    std::uint64_t seed = 0;

    /// Emit (cls_query, token_keys) instead of precomputed logits.
    bool query_keys = true;
    double salient_logit_boost = 6.0;
    std::string video_id = "synthetic";

    void validate() const;
};

struct GroundTruth {
    std::vector<std::size_t> frame_labels;                // planted scene per frame
    std::vector<std::vector<std::size_t>> salient_tokens; // ascending, per frame
    std::size_t question_target_cluster = 0;              // scene the question points at
};

struct SyntheticFixture {
    FeatureBundle bundle;
    std::vector<TokenFrameRecord> frames;
    QuestionEmbedding question;
    GroundTruth truth;
};

/// Everything in memory; intended for small specs.
SyntheticFixture generate_synthetic(const SyntheticSpec& spec);

/// Frame-level pieces only. Fills labels and target cluster of `truth`.
FeatureBundle synthesize_bundle(const SyntheticSpec& spec, QuestionEmbedding& question, GroundTruth& truth);

/// One token frame; each frame uses its own PRNG stream so frames can be
/// produced independently and in any order.
TokenFrameRecord synthesize_token_frame(const SyntheticSpec& spec, std::size_t frame_index,
                                        std::vector<std::size_t>* salient = nullptr);

nlohmann::ordered_json ground_truth_json(const SyntheticSpec& spec, const GroundTruth& truth);

/// Writes bundle.ktvf, question.ktvf, frame_{index:06}.ktvf for every frame and
/// ground_truth.json into `out_dir`, streaming frames one at a time.
void generate_fixture(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

}  // namespace ktv
