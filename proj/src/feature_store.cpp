// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#include "ktv/feature_store.hpp"

#include <cmath>
#include <cstdio>

#include "ktv/error.hpp"

namespace ktv {

namespace {

void require_finite(std::span<const float> values, const std::string& field) {
    for (float v : values) {
        if (!std::isfinite(v)) {
            fail(ErrorCode::NonFinite, "non-finite value in " + field);
        }
    }
}

NamedTensor matrix_tensor(const char* name, const Matrix& m) {
    return {name, {m.rows(), m.cols()}, std::vector<float>(m.values().begin(), m.values().end())};
}

NamedTensor vector_tensor(const char* name, const std::vector<float>& v) {
    return {name, {v.size()}, v};
}

Matrix tensor_matrix(const NamedTensor& t) {
    if (t.shape.size() != 2) {
        fail(ErrorCode::Validation, "tensor '" + t.name + "' must be rank 2");
    }
    return Matrix(t.shape[0], t.shape[1], t.data);
}

std::vector<float> tensor_vector(const NamedTensor& t) {
    if (t.shape.size() != 1) {
        fail(ErrorCode::Validation, "tensor '" + t.name + "' must be rank 1");
    }
    return t.data;
}

const NamedTensor& require_tensor(const KtvfFile& file, const char* name) {
    const auto* t = file.find(name);
    if (t == nullptr) {
        fail(ErrorCode::MissingTensor, std::string("missing tensor '") + name + "'");
    }
    return *t;
}

}  // namespace

void FeatureBundle::validate() const {
    require(cluster_embeddings.rows() >= 1, ErrorCode::Validation, "cluster_embeddings: frame_count must be >= 1");
    require(cluster_embeddings.cols() >= 1, ErrorCode::Validation, "cluster_embeddings: d_f must be >= 1");
    require_finite(cluster_embeddings.values(), "cluster_embeddings");
    if (relevance_embeddings) {
        require(relevance_embeddings->rows() == frame_count(), ErrorCode::Validation,
                "relevance_embeddings: row count must equal frame_count");
        require(relevance_embeddings->cols() >= 1, ErrorCode::Validation, "relevance_embeddings: d_q must be >= 1");
        require_finite(relevance_embeddings->values(), "relevance_embeddings");
    }
    if (fps_hint) {
        require(std::isfinite(*fps_hint), ErrorCode::NonFinite, "non-finite value in fps_hint");
    }
}

void TokenFrameRecord::validate() const {
    require(token_features.rows() >= 1, ErrorCode::Validation, "token_features: L must be >= 1");
    require(token_features.cols() >= 1, ErrorCode::Validation, "token_features: d_t must be >= 1");
    require_finite(token_features.values(), "token_features");
    if (const auto* logits = std::get_if<ImportanceLogits>(&attention)) {
        require(logits->logits.size() == token_count(), ErrorCode::Validation,
                "importance_logits: length must equal token count");
        require_finite(logits->logits, "importance_logits");
    } else {
        const auto& qk = std::get<QueryKeys>(attention);
        require(qk.cls_query.size() == token_dim(), ErrorCode::Validation, "cls_query: length must equal d_t");
        require(qk.token_keys.rows() == token_count() && qk.token_keys.cols() == token_dim(), ErrorCode::Validation,
                "token_keys: shape must be [L x d_t]");
        require_finite(qk.cls_query, "cls_query");
        require_finite(qk.token_keys.values(), "token_keys");
    }
}

void QuestionEmbedding::validate() const {
    require(!embedding.empty(), ErrorCode::Validation, "question_embedding: d_q must be >= 1");
    require_finite(embedding, "question_embedding");
}

std::string token_frame_filename(std::size_t frame_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06zu.ktvf", frame_index);
    return buf;
}

KtvfFile to_ktvf(const FeatureBundle& bundle) {
    bundle.validate();
    KtvfFile file;
    file.video_id = bundle.video_id;
    file.tensors.push_back(matrix_tensor(ktvf::kClusterEmbeddings, bundle.cluster_embeddings));
    if (bundle.relevance_embeddings) {
        file.tensors.push_back(matrix_tensor(ktvf::kRelevanceEmbeddings, *bundle.relevance_embeddings));
    }
    file.meta["frame_count"] = bundle.frame_count();
    if (bundle.fps_hint) {
        file.meta["fps_hint"] = *bundle.fps_hint;
    }
    return file;
}

KtvfFile to_ktvf(const TokenFrameRecord& record) {
    record.validate();
    KtvfFile file;
    file.video_id = record.video_id;
    file.tensors.push_back(matrix_tensor(ktvf::kTokenFeatures, record.token_features));
    if (const auto* logits = std::get_if<ImportanceLogits>(&record.attention)) {
        file.tensors.push_back(vector_tensor(ktvf::kImportanceLogits, logits->logits));
    } else {
        const auto& qk = std::get<QueryKeys>(record.attention);
        file.tensors.push_back(vector_tensor(ktvf::kClsQuery, qk.cls_query));
        file.tensors.push_back(matrix_tensor(ktvf::kTokenKeys, qk.token_keys));
    }
    file.meta["frame_index"] = record.frame_index;
    return file;
}

KtvfFile to_ktvf(const QuestionEmbedding& question, const std::string& video_id) {
    question.validate();
    KtvfFile file;
    file.video_id = video_id;
    file.tensors.push_back(vector_tensor(ktvf::kQuestionEmbedding, question.embedding));
    if (question.question_text) {
        file.meta["question_text"] = *question.question_text;
    }
    return file;
}

FeatureBundle bundle_from_ktvf(const KtvfFile& file) {
    FeatureBundle bundle;
    bundle.video_id = file.video_id;
    bundle.cluster_embeddings = tensor_matrix(require_tensor(file, ktvf::kClusterEmbeddings));
    if (const auto* rel = file.find(ktvf::kRelevanceEmbeddings)) {
        bundle.relevance_embeddings = tensor_matrix(*rel);
    }
    if (file.meta.contains("frame_count")) {
        const auto& fc = file.meta["frame_count"];
        require(fc.is_number_unsigned() && fc.get<std::uint64_t>() == bundle.frame_count(), ErrorCode::Validation,
                "meta.frame_count disagrees with cluster_embeddings rows");
    }
    if (file.meta.contains("fps_hint") && file.meta["fps_hint"].is_number()) {
        bundle.fps_hint = file.meta["fps_hint"].get<double>();
    }
    bundle.validate();
    return bundle;
}

TokenFrameRecord token_frame_from_ktvf(const KtvfFile& file) {
    TokenFrameRecord record;
    record.video_id = file.video_id;
    record.token_features = tensor_matrix(require_tensor(file, ktvf::kTokenFeatures));

    const auto* logits = file.find(ktvf::kImportanceLogits);
    const auto* query = file.find(ktvf::kClsQuery);
    const auto* keys = file.find(ktvf::kTokenKeys);
    const bool has_qk = query != nullptr || keys != nullptr;
    if (logits != nullptr && has_qk) {
        fail(ErrorCode::AmbiguousAttentionInputs, "ambiguous attention inputs: both logits and query/keys present");
    }
    if (logits != nullptr) {
        record.attention = ImportanceLogits{tensor_vector(*logits)};
    } else if (query != nullptr && keys != nullptr) {
        record.attention = QueryKeys{tensor_vector(*query), tensor_matrix(*keys)};
    } else if (has_qk) {
        fail(ErrorCode::MissingTensor, "cls_query and token_keys must be provided together");
    } else {
        fail(ErrorCode::MissingTensor, "missing attention inputs: need importance_logits or cls_query + token_keys");
    }

    if (file.meta.contains("frame_index")) {
        const auto& fi = file.meta["frame_index"];
        require(fi.is_number_unsigned(), ErrorCode::Validation, "meta.frame_index must be a non-negative integer");
        record.frame_index = fi.get<std::size_t>();
    }
    record.validate();
    return record;
}

QuestionEmbedding question_from_ktvf(const KtvfFile& file) {
    QuestionEmbedding q;
    q.embedding = tensor_vector(require_tensor(file, ktvf::kQuestionEmbedding));
    if (file.meta.contains("question_text") && file.meta["question_text"].is_string()) {
        q.question_text = file.meta["question_text"].get<std::string>();
    }
    q.validate();
    return q;
}

void write_bundle(const FeatureBundle& bundle, const std::filesystem::path& path) {
    write_ktvf(to_ktvf(bundle), path);
}

FeatureBundle read_bundle(const std::filesystem::path& path) { return bundle_from_ktvf(read_ktvf(path)); }

void write_token_frame(const TokenFrameRecord& record, const std::filesystem::path& path) {
    write_ktvf(to_ktvf(record), path);
}

TokenFrameRecord read_token_frame(const std::filesystem::path& path) {
    return token_frame_from_ktvf(read_ktvf(path));
}

void write_question(const QuestionEmbedding& question, const std::filesystem::path& path) {
    write_ktvf(to_ktvf(question), path);
}

QuestionEmbedding read_question(const std::filesystem::path& path) { return question_from_ktvf(read_ktvf(path)); }

}  // namespace ktv
