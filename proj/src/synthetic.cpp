// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#include "ktv/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ktv/error.hpp"
#include "ktv/rng.hpp"

namespace ktv {

namespace {

constexpr std::uint64_t kBundleStream = 0;
constexpr std::uint64_t kRelevanceStream = 1;
constexpr std::uint64_t kFirstFrameStream = 2;

std::vector<double> random_unit(Xoshiro256& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            norm2 += x * x;
        }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) {
        x *= inv;
    }
    return v;
}

}  // namespace

void SyntheticSpec::validate() const {
    require(frame_count >= 1 && cluster_count >= 1 && token_count >= 1 && token_dim >= 1 && frame_dim >= 1 &&
                relevance_dim >= 1,
            ErrorCode::Validation, "synthetic spec: all counts must be >= 1");
    require(planted_salient_tokens <= token_count, ErrorCode::Validation,
            "synthetic spec: planted_salient_tokens must not exceed token_count");
    require(std::isfinite(blob_separation) && blob_separation >= 0.0, ErrorCode::Validation,
            "synthetic spec: blob_separation must be finite and >= 0");
    require(std::isfinite(salient_logit_boost), ErrorCode::Validation,
            "synthetic spec: salient_logit_boost must be finite");
}

FeatureBundle synthesize_bundle(const SyntheticSpec& spec, QuestionEmbedding& question, GroundTruth& truth) {
    spec.validate();
    const std::size_t T = spec.frame_count;
    const std::size_t K = spec.cluster_count;

    truth.frame_labels.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        truth.frame_labels[t] = t * K / T;
    }

    std::vector<std::vector<double>> centers(K, std::vector<double>(spec.frame_dim, 0.0));
    for (std::size_t c = 0; c < K; ++c) {
        if (spec.frame_dim >= K) {
            centers[c][c] = spec.blob_separation / std::sqrt(2.0);
        } else {
            centers[c][0] = static_cast<double>(c) * spec.blob_separation;
        }
    }

    FeatureBundle bundle;
    bundle.video_id = spec.video_id;
    bundle.cluster_embeddings = Matrix(T, spec.frame_dim);
    Xoshiro256 rng(Xoshiro256::stream_seed(spec.seed, kBundleStream));
    for (std::size_t t = 0; t < T; ++t) {
        auto row = bundle.cluster_embeddings.row(t);
        const auto& center = centers[truth.frame_labels[t]];
        for (std::size_t d = 0; d < spec.frame_dim; ++d) {
            row[d] = static_cast<float>(center[d] + rng.normal());
        }
    }

    Xoshiro256 rel(Xoshiro256::stream_seed(spec.seed, kRelevanceStream));
    std::vector<std::vector<double>> directions;
    directions.reserve(K);
    for (std::size_t c = 0; c < K; ++c) {
        directions.push_back(random_unit(rel, spec.relevance_dim));
    }
    truth.question_target_cluster = static_cast<std::size_t>(rel.below(K));

    const double noise = 0.1 / std::sqrt(static_cast<double>(spec.relevance_dim));
    Matrix relevance(T, spec.relevance_dim);
    for (std::size_t t = 0; t < T; ++t) {
        auto row = relevance.row(t);
        const auto& dir = directions[truth.frame_labels[t]];
        for (std::size_t d = 0; d < spec.relevance_dim; ++d) {
            row[d] = static_cast<float>(dir[d] + noise * rel.normal());
        }
    }
    bundle.relevance_embeddings = std::move(relevance);

    question.embedding.resize(spec.relevance_dim);
    const auto& target = directions[truth.question_target_cluster];
    for (std::size_t d = 0; d < spec.relevance_dim; ++d) {
        question.embedding[d] = static_cast<float>(target[d] + noise * rel.normal());
    }
    question.question_text = "synthetic question targeting scene " + std::to_string(truth.question_target_cluster);
    return bundle;
}

TokenFrameRecord synthesize_token_frame(const SyntheticSpec& spec, std::size_t frame_index,
                                        std::vector<std::size_t>* salient) {
    spec.validate();
    const std::size_t L = spec.token_count;
    const std::size_t D = spec.token_dim;
    Xoshiro256 rng(Xoshiro256::stream_seed(spec.seed, kFirstFrameStream + frame_index));

    // Partial Fisher-Yates picks the salient positions.
    std::vector<std::size_t> order(L);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < spec.planted_salient_tokens; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(L - i));
        std::swap(order[i], order[j]);
    }
    std::vector<std::size_t> planted(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.planted_salient_tokens));
    std::sort(planted.begin(), planted.end());
    std::vector<bool> is_salient(L, false);
    for (auto idx : planted) {
        is_salient[idx] = true;
    }

    const auto background = random_unit(rng, D);
    const double jitter = 0.1 / std::sqrt(static_cast<double>(D));

    TokenFrameRecord record;
    record.video_id = spec.video_id;
    record.frame_index = frame_index;
    record.token_features = Matrix(L, D);
    std::vector<double> logits(L);
    for (std::size_t j = 0; j < L; ++j) {
        auto row = record.token_features.row(j);
        if (is_salient[j]) {
            const auto dir = random_unit(rng, D);
            for (std::size_t d = 0; d < D; ++d) {
                row[d] = static_cast<float>(dir[d]);
            }
            logits[j] = spec.salient_logit_boost + 0.5 * rng.normal();
        } else {
            for (std::size_t d = 0; d < D; ++d) {
                row[d] = static_cast<float>(background[d] + jitter * rng.normal());
            }
            logits[j] = 0.5 * rng.normal();
        }
    }

    if (spec.query_keys) {
        // cls_query = sqrt(D) * u and key_j = logit_j * u + (noise orthogonal to u),
        // so dot(cls_query, key_j) / sqrt(D) reproduces logit_j.
        const auto u = random_unit(rng, D);
        QueryKeys qk;
        qk.cls_query.resize(D);
        const double scale = std::sqrt(static_cast<double>(D));
        for (std::size_t d = 0; d < D; ++d) {
            qk.cls_query[d] = static_cast<float>(scale * u[d]);
        }
        qk.token_keys = Matrix(L, D);
        std::vector<double> n(D);
        for (std::size_t j = 0; j < L; ++j) {
            double along = 0.0;
            for (std::size_t d = 0; d < D; ++d) {
                n[d] = rng.normal();
                along += n[d] * u[d];
            }
            auto key = qk.token_keys.row(j);
            for (std::size_t d = 0; d < D; ++d) {
                key[d] = static_cast<float>(logits[j] * u[d] + (n[d] - along * u[d]));
            }
        }
        record.attention = std::move(qk);
    } else {
        ImportanceLogits il;
        il.logits.reserve(L);
        for (double v : logits) {
            il.logits.push_back(static_cast<float>(v));
        }
        record.attention = std::move(il);
    }

    if (salient != nullptr) {
        *salient = std::move(planted);
    }
    return record;
}

SyntheticFixture generate_synthetic(const SyntheticSpec& spec) {
    SyntheticFixture fx;
    fx.bundle = synthesize_bundle(spec, fx.question, fx.truth);
    fx.frames.reserve(spec.frame_count);
    fx.truth.salient_tokens.resize(spec.frame_count);
    for (std::size_t t = 0; t < spec.frame_count; ++t) {
        fx.frames.push_back(synthesize_token_frame(spec, t, &fx.truth.salient_tokens[t]));
    }
    return fx;
}

nlohmann::ordered_json ground_truth_json(const SyntheticSpec& spec, const GroundTruth& truth) {
    nlohmann::ordered_json spec_json;
    spec_json["frame_count"] = spec.frame_count;
    spec_json["cluster_count"] = spec.cluster_count;
    spec_json["blob_separation"] = spec.blob_separation;
    spec_json["token_count"] = spec.token_count;
    spec_json["token_dim"] = spec.token_dim;
    spec_json["frame_dim"] = spec.frame_dim;
    spec_json["relevance_dim"] = spec.relevance_dim;
    spec_json["planted_salient_tokens"] = spec.planted_salient_tokens;
    spec_json["seed"] = spec.seed;
    spec_json["query_keys"] = spec.query_keys;

    nlohmann::ordered_json out;
    out["spec"] = std::move(spec_json);
    out["question_target_cluster"] = truth.question_target_cluster;
    out["frame_labels"] = truth.frame_labels;
    out["salient_tokens"] = truth.salient_tokens;
    return out;
}

void generate_fixture(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        fail(ErrorCode::Io, "cannot create directory '" + out_dir.string() + "'");
    }
    QuestionEmbedding question;
    GroundTruth truth;
    const FeatureBundle bundle = synthesize_bundle(spec, question, truth);
    write_bundle(bundle, out_dir / kBundleFilename);
    write_ktvf(to_ktvf(question, spec.video_id), out_dir / kQuestionFilename);

    truth.salient_tokens.resize(spec.frame_count);
    for (std::size_t t = 0; t < spec.frame_count; ++t) {
        const auto record = synthesize_token_frame(spec, t, &truth.salient_tokens[t]);
        write_token_frame(record, out_dir / token_frame_filename(t));
    }
    write_file_atomic(out_dir / "ground_truth.json", ground_truth_json(spec, truth).dump(2) + "\n");
}

}  // namespace ktv
