// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#include "ktv/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "ktv/error.hpp"
#include "ktv/feature_store.hpp"
#include "ktv/parallel.hpp"

namespace ktv {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
    if (p.empty() || p.is_absolute() || base.empty()) {
        return p;
    }
    return base / p;
}

BudgetSchedule schedule_from_json(const nlohmann::json& j) {
    require(j.is_object(), ErrorCode::Validation, "config: 'schedule' must be an object");
    BudgetSchedule s;
    const std::string mode = j.value("mode", std::string("counts"));
    if (mode == "counts") {
        s.mode = BudgetMode::Counts;
    } else if (mode == "fractions") {
        s.mode = BudgetMode::Fractions;
    } else {
        fail(ErrorCode::Validation, "config: schedule mode must be 'counts' or 'fractions'");
    }
    require(j.contains("values") && j["values"].is_array(), ErrorCode::Validation,
            "config: schedule needs a 'values' array");
    for (const auto& v : j["values"]) {
        require(v.is_number(), ErrorCode::Validation, "config: schedule values must be numbers");
        s.values.push_back(v.get<double>());
    }
    s.preset_name = "custom";
    s.validate();
    return s;
}

}  // namespace

void PipelineConfig::validate() const {
    require(m >= 1, ErrorCode::Validation, "config: m must be >= 1");
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::Validation, "config: alpha must lie in [0, 1]");
    require(kmeans.restarts >= 1, ErrorCode::Validation, "config: restarts must be >= 1");
    require(std::isfinite(kmeans.tolerance) && kmeans.tolerance >= 0.0, ErrorCode::Validation,
            "config: tolerance must be a finite non-negative number");
    require(!features_dir.empty(), ErrorCode::Validation, "config: features_dir is required");
    schedule.validate();
}

PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    require(j.is_object(), ErrorCode::Validation, "config: top level must be an object");
    PipelineConfig c;
    try {
        if (j.contains("features_dir")) {
            c.features_dir = resolve(j["features_dir"].get<std::string>(), base_dir);
        }
        if (j.contains("question") && !j["question"].is_null()) {
            c.question_embedding_path = resolve(j["question"].get<std::string>(), base_dir);
        }
        if (j.contains("output")) {
            c.output_path = resolve(j["output"].get<std::string>(), base_dir);
        }
        c.m = j.value("m", c.m);
        c.alpha = j.value("alpha", c.alpha);
        c.kmeans.seed = j.value("seed", c.kmeans.seed);
        c.kmeans.max_iterations = j.value("max_iterations", c.kmeans.max_iterations);
        c.kmeans.restarts = j.value("restarts", c.kmeans.restarts);
        c.kmeans.tolerance = j.value("tolerance", c.kmeans.tolerance);
        c.workers = j.value("workers", c.workers);
        if (j.contains("preset") && j.contains("schedule")) {
            fail(ErrorCode::Validation, "config: give either 'preset' or 'schedule', not both");
        }
        if (j.contains("preset")) {
            c.schedule = BudgetSchedule::preset(j["preset"].get<std::string>());
        } else if (j.contains("schedule")) {
            c.schedule = schedule_from_json(j["schedule"]);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Validation, std::string("config: ") + e.what());
    }
    return c;
}

ResultDocument run_pipeline(const PipelineConfig& config) {
    config.validate();
    const auto start = Clock::now();
    ResultDocument doc;
    doc.config_echo = config_echo(config);

    auto t = Clock::now();
    const FeatureBundle bundle = read_bundle(config.features_dir / kBundleFilename);
    doc.video_id = bundle.video_id;
    doc.timings.read_bundle_ms = elapsed_ms(t);

    std::optional<QuestionEmbedding> question;
    if (config.question_embedding_path) {
        question = read_question(*config.question_embedding_path);
        require(bundle.relevance_embeddings.has_value(), ErrorCode::Validation,
                "question given but bundle has no relevance_embeddings");
    }

    t = Clock::now();
    KMeansOptions km = config.kmeans;
    km.workers = config.workers;
    ClusterModel model;
    const KeyframeSelection selection = select_keyframes(bundle, config.m, km, &model);
    const std::size_t m = selection.effective_m();
    doc.timings.keyframe_selection_ms = elapsed_ms(t);

    t = Clock::now();
    std::vector<TokenFrameRecord> records;
    records.reserve(m);
    for (auto frame : selection.keyframe_indices) {
        const auto path = config.features_dir / token_frame_filename(frame);
        if (!std::filesystem::exists(path)) {
            fail(ErrorCode::Io, "missing token file for keyframe " + std::to_string(frame) + ": " + path.string());
        }
        records.push_back(read_token_frame(path));
        ++doc.summary.token_files_opened;
        require(records.back().frame_index == frame, ErrorCode::Validation,
                path.string() + " declares frame_index " + std::to_string(records.back().frame_index));
        require(records.back().token_count() == records.front().token_count(), ErrorCode::Validation,
                "keyframe " + std::to_string(frame) + " has a different token count than keyframe " +
                    std::to_string(selection.keyframe_indices.front()));
    }
    const std::size_t L = records.front().token_count();
    doc.timings.token_loading_ms = elapsed_ms(t);

    t = Clock::now();
    std::vector<TokenScores> scores(m);
    parallel_for(m, config.workers, [&](std::size_t i) { scores[i] = score_tokens(records[i], config.alpha); });
    doc.timings.token_scoring_ms = elapsed_ms(t);

    t = Clock::now();
    std::optional<RelevanceRanking> ranking;
    if (question) {
        const Matrix& rel = *bundle.relevance_embeddings;
        Matrix keyframe_rel(m, rel.cols());
        for (std::size_t i = 0; i < m; ++i) {
            const auto src = rel.row(selection.keyframe_indices[i]);
            std::copy(src.begin(), src.end(), keyframe_rel.row(i).begin());
        }
        ranking = relevance_ranking(keyframe_rel, *question);
    }
    doc.plan = build_plan(selection, scores, ranking, config.schedule, L);
    for (std::size_t i = 0; i < m; ++i) {
        KeyframeScores ks;
        for (auto j : doc.plan.keyframes[i].retained_token_indices) {
            ks.importance.push_back(scores[i].importance[j]);
            ks.redundancy.push_back(scores[i].redundancy[j]);
            ks.combined.push_back(scores[i].combined[j]);
        }
        doc.keyframe_scores.push_back(std::move(ks));
    }
    doc.timings.planning_ms = elapsed_ms(t);

    doc.summary.frame_count = bundle.frame_count();
    doc.summary.tokens_per_frame = L;
    doc.summary.effective_m = m;
    doc.summary.total_retained = doc.plan.total_retained;
    doc.summary.kmeans_iterations = model.iterations_run;
    doc.summary.kmeans_converged = model.converged;
    doc.summary.kmeans_sse = model.sse;
    doc.summary.question_driven = ranking.has_value();
    doc.timings.total_ms = elapsed_ms(start);
    return doc;
}

}  // namespace ktv
