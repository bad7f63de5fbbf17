// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <cstdlib>

#include "ktv/error.hpp"
#include "ktv/pipeline.hpp"

namespace ktv {

namespace {

nlohmann::ordered_json rounded(const std::vector<double>& values) {
    auto out = nlohmann::ordered_json::array();
    for (double v : values) {
        out.push_back(round_sig9(v));
    }
    return out;
}

const char* mode_name(BudgetMode mode) { return mode == BudgetMode::Counts ? "counts" : "fractions"; }

}  // namespace

double round_sig9(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return std::strtod(buf, nullptr);
}

nlohmann::ordered_json config_echo(const PipelineConfig& config) {
    nlohmann::ordered_json j;
    j["features_dir"] = config.features_dir.generic_string();
    if (config.question_embedding_path) {
        j["question"] = config.question_embedding_path->generic_string();
    } else {
        j["question"] = nullptr;
    }
    j["m"] = config.m;
    j["alpha"] = round_sig9(config.alpha);
    nlohmann::ordered_json schedule;
    schedule["preset"] = config.schedule.preset_name;
    schedule["mode"] = mode_name(config.schedule.mode);
    schedule["values"] = rounded(config.schedule.values);
    j["schedule"] = std::move(schedule);
    j["seed"] = config.kmeans.seed;
    j["max_iterations"] = config.kmeans.max_iterations;
    j["restarts"] = config.kmeans.restarts;
    j["tolerance"] = round_sig9(config.kmeans.tolerance);
    return j;
}

nlohmann::ordered_json result_to_json(const ResultDocument& doc) {
    nlohmann::ordered_json j;
    j["format"] = "ktv-result";
    j["version"] = 1;
    j["video_id"] = doc.video_id;
    j["config"] = doc.config_echo;

    const auto& s = doc.summary;
    nlohmann::ordered_json summary;
    summary["frame_count"] = s.frame_count;
    summary["tokens_per_frame"] = s.tokens_per_frame;
    summary["effective_m"] = s.effective_m;
    summary["total_retained"] = s.total_retained;
    summary["question_driven"] = s.question_driven;
    summary["kmeans_iterations"] = s.kmeans_iterations;
    summary["kmeans_converged"] = s.kmeans_converged;
    summary["kmeans_sse"] = round_sig9(s.kmeans_sse);
    summary["token_files_opened"] = s.token_files_opened;
    j["summary"] = std::move(summary);

    auto keyframes = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < doc.plan.keyframes.size(); ++i) {
        const auto& kf = doc.plan.keyframes[i];
        nlohmann::ordered_json k;
        k["frame_index"] = kf.frame_index;
        k["cluster_id"] = kf.cluster_id;
        k["relevance_rank"] = kf.relevance_rank;
        if (kf.similarity) {
            k["similarity"] = round_sig9(*kf.similarity);
        } else {
            k["similarity"] = nullptr;
        }
        k["budget"] = kf.budget;
        k["retained_token_indices"] = kf.retained_token_indices;
        nlohmann::ordered_json scores;
        if (i < doc.keyframe_scores.size()) {
            scores["importance"] = rounded(doc.keyframe_scores[i].importance);
            scores["redundancy"] = rounded(doc.keyframe_scores[i].redundancy);
            scores["combined"] = rounded(doc.keyframe_scores[i].combined);
        } else {
            scores["combined"] = rounded(kf.retained_scores);
        }
        k["retained_scores"] = std::move(scores);
        keyframes.push_back(std::move(k));
    }
    j["keyframes"] = std::move(keyframes);
    return j;
}

std::string serialize_result(const ResultDocument& doc) { return result_to_json(doc).dump(2) + "\n"; }

nlohmann::ordered_json timings_to_json(const StageTimings& t) {
    nlohmann::ordered_json j;
    j["read_bundle_ms"] = t.read_bundle_ms;
    j["keyframe_selection_ms"] = t.keyframe_selection_ms;
    j["token_loading_ms"] = t.token_loading_ms;
    j["token_scoring_ms"] = t.token_scoring_ms;
    j["planning_ms"] = t.planning_ms;
    j["total_ms"] = t.total_ms;
    return j;
}

std::filesystem::path timing_sidecar_path(const std::filesystem::path& output) {
    auto p = output;
    p += ".timing.json";
    return p;
}

void write_result(const ResultDocument& doc, const std::filesystem::path& output) {
    const std::string text = serialize_result(doc);
    const std::string timing = timings_to_json(doc.timings).dump(2) + "\n";
    write_file_atomic(output, text);
    write_file_atomic(timing_sidecar_path(output), timing);
}

PruningPlan plan_from_result_json(const nlohmann::json& j) {
    PruningPlan plan;
    try {
        require(j.is_object() && j.value("format", std::string()) == "ktv-result", ErrorCode::Validation,
                "not a ktv result document");
        plan.tokens_per_frame = j.at("summary").at("tokens_per_frame").get<std::size_t>();
        for (const auto& k : j.at("keyframes")) {
            PlannedKeyframe kf;
            kf.frame_index = k.at("frame_index").get<std::size_t>();
            kf.cluster_id = k.at("cluster_id").get<std::size_t>();
            kf.relevance_rank = k.at("relevance_rank").get<std::size_t>();
            if (!k.at("similarity").is_null()) {
                kf.similarity = k["similarity"].get<double>();
            }
            kf.budget = k.at("budget").get<std::size_t>();
            kf.retained_token_indices = k.at("retained_token_indices").get<std::vector<std::size_t>>();
            kf.retained_scores = k.at("retained_scores").at("combined").get<std::vector<double>>();
            require(kf.retained_token_indices.size() == kf.budget, ErrorCode::Validation,
                    "result: keyframe " + std::to_string(kf.frame_index) + " retains a different count than its budget");
            for (auto idx : kf.retained_token_indices) {
                require(idx < plan.tokens_per_frame, ErrorCode::Validation, "result: retained token index out of range");
            }
            plan.total_retained += kf.budget;
            plan.keyframes.push_back(std::move(kf));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Validation, std::string("result: ") + e.what());
    }
    return plan;
}

}  // namespace ktv
