// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ktv/budget_allocator.hpp"
#include "ktv/keyframe_selector.hpp"
#include "ktv/token_scorer.hpp"

namespace ktv {

inline constexpr std::size_t kDefaultKeyframes = 6;

struct PipelineConfig {
    /// Holds bundle.ktvf and frame_{index:06}.ktvf files.
    std::filesystem::path features_dir;
    std::optional<std::filesystem::path> question_embedding_path;
    std::size_t m = kDefaultKeyframes;
    double alpha = kDefaultAlpha;
    BudgetSchedule schedule = BudgetSchedule::preset("normal");
    KMeansOptions kmeans;
    /// Scoring and assignment threads; 0 = hardware concurrency. Never
    /// affects the result document.
    std::size_t workers = 0;
    std::filesystem::path output_path;

    void validate() const;
};

/// Parses a JSON config. Recognized keys: features_dir, question, m, alpha,
/// preset, schedule {mode, values}, seed, max_iterations, tolerance,
/// workers, output. Relative paths resolve against `base_dir`.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

struct KeyframeScores {
    std::vector<double> importance; // retained tokens only, parallel to retained_token_indices
    std::vector<double> redundancy;
    std::vector<double> combined;
};

struct StageTimings {
    double read_bundle_ms = 0.0;
    double keyframe_selection_ms = 0.0;
    double token_loading_ms = 0.0;
    double token_scoring_ms = 0.0;
    double planning_ms = 0.0;
    double total_ms = 0.0;
};

struct ResultSummary {
    std::size_t frame_count = 0;
    std::size_t tokens_per_frame = 0;
    std::size_t effective_m = 0;
    std::size_t total_retained = 0;
    std::size_t kmeans_iterations = 0;
    bool kmeans_converged = false;
    double kmeans_sse = 0.0;
    bool question_driven = false;
    std::size_t token_files_opened = 0;
};

struct ResultDocument {
    std::string video_id;
    nlohmann::ordered_json config_echo;
    PruningPlan plan;
    std::vector<KeyframeScores> keyframe_scores; // parallel to plan.keyframes
    ResultSummary summary;
    StageTimings timings; // serialized to the sidecar only
};

/// Keyframe selection, lazy loading of the selected token frames, scoring,
/// relevance ranking (or the uniform fallback) and top-k planning.
ResultDocument run_pipeline(const PipelineConfig& config);

nlohmann::ordered_json config_echo(const PipelineConfig& config);

/// Result document as JSON: fixed key order, reals rounded to 9
/// significant digits, no timings.
nlohmann::ordered_json result_to_json(const ResultDocument& doc);
std::string serialize_result(const ResultDocument& doc);
nlohmann::ordered_json timings_to_json(const StageTimings& timings);

/// Sidecar path for timings: `<output>.timing.json`.
std::filesystem::path timing_sidecar_path(const std::filesystem::path& output);

/// Writes the result document and its timing sidecar, each atomically.
void write_result(const ResultDocument& doc, const std::filesystem::path& output);

/// Recovers the plan (frame indices, budgets, retained tokens) from a result document.
PruningPlan plan_from_result_json(const nlohmann::json& j);

/// Rounds to 9 significant decimal digits.
double round_sig9(double value);

// masks

/// Binary PGM (P5) of one keyframe: retained token cells 255, pruned 64,
/// tokens mapped to cells row-major.
std::string render_mask_pgm(const PlannedKeyframe& keyframe, std::size_t grid_rows, std::size_t grid_cols,
                            std::size_t tokens_per_frame);

/// `mask_frame_{index:06}.pgm`.
std::string mask_filename(std::size_t frame_index);

/// One mask per keyframe into `out_dir`; returns the written paths.
std::vector<std::filesystem::path> visualize(const PruningPlan& plan, std::size_t grid_rows, std::size_t grid_cols,
                                             const std::filesystem::path& out_dir);

// inspection

struct InspectReport {
    std::string text;
    std::vector<std::string> warnings;
};

/// Human-readable header and tensor summary. Throws the container's typed
/// errors on malformed files; unknown tensor names only produce warnings.
InspectReport inspect(const std::filesystem::path& path);

}  // namespace ktv
