// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ktv/error.hpp"
#include "ktv/feature_store.hpp"
#include "ktv/pipeline.hpp"
#include "ktv/synthetic.hpp"

namespace {

using ktv::ErrorCode;

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        ktv::fail(ErrorCode::Io, "cannot open '" + path + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        ktv::fail(ErrorCode::Validation, "'" + path + "' is not valid JSON: " + e.what());
    }
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            ktv::fail(ErrorCode::Validation, "schedule: '" + item + "' is not a number");
        }
    }
    return out;
}

struct RunFlags {
    std::string config;
    std::string features;
    std::string question;
    bool no_question = false;
    std::optional<std::size_t> m;
    std::optional<double> alpha;
    std::string preset;
    std::string schedule;
    std::string schedule_mode = "counts";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> max_iterations;
    std::optional<std::size_t> restarts;
    std::optional<double> tolerance;
    std::optional<std::size_t> workers;
    std::string output;
};

ktv::PipelineConfig build_config(const RunFlags& f) {
    ktv::PipelineConfig c;
    if (!f.config.empty()) {
        const std::filesystem::path cfg(f.config);
        c = ktv::config_from_json(load_json(f.config), cfg.parent_path());
    }
    if (!f.features.empty()) c.features_dir = f.features;
    if (!f.question.empty()) c.question_embedding_path = f.question;
    if (f.no_question) c.question_embedding_path.reset();
    if (f.m) c.m = *f.m;
    if (f.alpha) c.alpha = *f.alpha;
    if (f.seed) c.kmeans.seed = *f.seed;
    if (f.max_iterations) c.kmeans.max_iterations = *f.max_iterations;
    if (f.restarts) c.kmeans.restarts = *f.restarts;
    if (f.tolerance) c.kmeans.tolerance = *f.tolerance;
    if (f.workers) c.workers = *f.workers;
    if (!f.output.empty()) c.output_path = f.output;
    if (!f.preset.empty() && !f.schedule.empty()) {
        ktv::fail(ErrorCode::Validation, "give either --preset or --schedule, not both");
    }
    if (!f.preset.empty()) {
        c.schedule = ktv::BudgetSchedule::preset(f.preset);
    } else if (!f.schedule.empty()) {
        ktv::BudgetSchedule s;
        if (f.schedule_mode == "fractions") {
            s.mode = ktv::BudgetMode::Fractions;
        } else if (f.schedule_mode != "counts") {
            ktv::fail(ErrorCode::Validation, "--schedule-mode must be counts or fractions");
        }
        s.values = parse_list(f.schedule);
        s.validate();
        c.schedule = std::move(s);
    }
    return c;
}

void add_pipeline_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("-c,--config", f.config, "JSON config file; flags override its values");
    cmd->add_option("-f,--features", f.features, "features directory (bundle.ktvf + frame_*.ktvf)");
    cmd->add_option("--m", f.m, "number of keyframes (default 6)");
    cmd->add_option("--seed", f.seed, "k-means seed (default 0)");
    cmd->add_option("--max-iterations", f.max_iterations, "k-means iteration cap (default 100)");
    cmd->add_option("--restarts", f.restarts, "k-means seedings, best SSE kept (default 10)");
    cmd->add_option("--tolerance", f.tolerance, "relative SSE improvement stop (default 1e-4)");
    cmd->add_option("--workers", f.workers, "worker threads, 0 = all cores");
}

void print_json(const nlohmann::ordered_json& j) { std::cout << j.dump(2) << "\n"; }

int run(const RunFlags& flags) {
    const auto config = build_config(flags);
    const auto doc = ktv::run_pipeline(config);
    if (config.output_path.empty()) {
        std::cout << ktv::serialize_result(doc);
    } else {
        ktv::write_result(doc, config.output_path);
        std::cerr << "wrote " << config.output_path.string() << " (" << doc.summary.total_retained
                  << " tokens over " << doc.summary.effective_m << " keyframes)\n";
    }
    return 0;
}

int keyframes(const RunFlags& flags) {
    const auto config = build_config(flags);
    ktv::require(!config.features_dir.empty(), ErrorCode::Validation, "--features is required");
    const auto bundle = ktv::read_bundle(config.features_dir / ktv::kBundleFilename);
    auto km = config.kmeans;
    km.workers = config.workers;
    ktv::ClusterModel model;
    const auto sel = ktv::select_keyframes(bundle, config.m, km, &model);
    nlohmann::ordered_json j;
    j["video_id"] = bundle.video_id;
    j["frame_count"] = bundle.frame_count();
    j["effective_m"] = sel.effective_m();
    j["keyframe_indices"] = sel.keyframe_indices;
    j["cluster_of_keyframe"] = sel.cluster_of_keyframe;
    j["kmeans_iterations"] = model.iterations_run;
    j["kmeans_converged"] = model.converged;
    j["kmeans_sse"] = ktv::round_sig9(model.sse);
    print_json(j);
    return 0;
}

int score(const std::string& frame, double alpha, std::optional<std::size_t> k) {
    const auto record = ktv::read_token_frame(frame);
    const auto s = ktv::score_tokens(record, alpha);
    auto rounded = [](const std::vector<double>& v) {
        auto a = nlohmann::ordered_json::array();
        for (double x : v) a.push_back(ktv::round_sig9(x));
        return a;
    };
    nlohmann::ordered_json j;
    j["frame_index"] = record.frame_index;
    j["tokens"] = record.token_count();
    j["alpha"] = ktv::round_sig9(alpha);
    j["importance"] = rounded(s.importance);
    j["redundancy"] = rounded(s.redundancy);
    j["importance_norm"] = rounded(s.importance_norm);
    j["redundancy_norm"] = rounded(s.redundancy_norm);
    j["combined"] = rounded(s.combined);
    if (k) {
        j["top_k"] = ktv::select_topk(s.combined, *k);
    }
    print_json(j);
    return 0;
}

int visualize(const std::string& result, std::size_t rows, std::size_t cols, const std::string& out) {
    const auto plan = ktv::plan_from_result_json(load_json(result));
    for (const auto& p : ktv::visualize(plan, rows, cols, out)) {
        std::cout << p.string() << "\n";
    }
    return 0;
}

int inspect(const std::string& path) {
    const auto report = ktv::inspect(path);
    std::cout << report.text;
    for (const auto& w : report.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ktv: keyframe and key visual token pruning over exported feature files"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run_cmd = app.add_subcommand("run", "full pipeline: keyframes, token scoring, budgeted top-k");
    add_pipeline_flags(run_cmd, run_flags);
    run_cmd->add_option("-q,--question", run_flags.question, "question embedding file (question.ktvf)");
    run_cmd->add_flag("--no-question", run_flags.no_question, "ignore any configured question (uniform budgets)");
    run_cmd->add_option("--alpha", run_flags.alpha, "importance weight in [0, 1] (default 0.8)");
    run_cmd->add_option("--preset", run_flags.preset, "sparse | normal | dense (default normal)");
    run_cmd->add_option("--schedule", run_flags.schedule, "custom descending schedule, comma separated");
    run_cmd->add_option("--schedule-mode", run_flags.schedule_mode, "counts | fractions (default counts)");
    run_cmd->add_option("-o,--output", run_flags.output, "result JSON path (default: stdout)");

    RunFlags kf_flags;
    auto* kf_cmd = app.add_subcommand("keyframes", "stage 1 only: cluster frames and print keyframes");
    add_pipeline_flags(kf_cmd, kf_flags);

    ktv::SyntheticSpec spec;
    std::string gen_out;
    bool logits = false;
    auto* gen_cmd = app.add_subcommand("gen-synthetic", "write a planted synthetic features directory");
    gen_cmd->add_option("-o,--out", gen_out, "output directory")->required();
    gen_cmd->add_option("--frames", spec.frame_count, "frame count T");
    gen_cmd->add_option("--clusters", spec.cluster_count, "planted scenes");
    gen_cmd->add_option("--separation", spec.blob_separation, "center separation in standard deviations");
    gen_cmd->add_option("--tokens", spec.token_count, "tokens per frame L");
    gen_cmd->add_option("--token-dim", spec.token_dim, "token feature dimension");
    gen_cmd->add_option("--frame-dim", spec.frame_dim, "clustering embedding dimension");
    gen_cmd->add_option("--relevance-dim", spec.relevance_dim, "relevance embedding dimension");
    gen_cmd->add_option("--salient", spec.planted_salient_tokens, "planted salient tokens per frame");
    gen_cmd->add_option("--seed", spec.seed, "generator seed");
    gen_cmd->add_option("--video-id", spec.video_id, "video id written into every file");
    gen_cmd->add_flag("--logits", logits, "emit importance_logits instead of cls_query + token_keys");

    std::string score_frame;
    double score_alpha = ktv::kDefaultAlpha;
    std::optional<std::size_t> score_k;
    auto* score_cmd = app.add_subcommand("score", "stage 2 on one token frame file");
    score_cmd->add_option("frame", score_frame, "frame_*.ktvf file")->required();
    score_cmd->add_option("--alpha", score_alpha, "importance weight in [0, 1]");
    score_cmd->add_option("--k", score_k, "also report the top-k token indices");

    std::string vis_result;
    std::string vis_out;
    std::size_t grid_rows = 24;
    std::size_t grid_cols = 24;
    auto* vis_cmd = app.add_subcommand("visualize", "write PGM pruning masks from a result document");
    vis_cmd->add_option("result", vis_result, "result JSON")->required();
    vis_cmd->add_option("-o,--out", vis_out, "output directory")->required();
    vis_cmd->add_option("--rows", grid_rows, "token grid rows (default 24)");
    vis_cmd->add_option("--cols", grid_cols, "token grid columns (default 24)");

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "print a KTVF file's header and tensor shapes");
    inspect_cmd->add_option("path", inspect_path, "KTVF file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run_cmd) return run(run_flags);
        if (*kf_cmd) return keyframes(kf_flags);
        if (*gen_cmd) {
            spec.query_keys = !logits;
            ktv::generate_fixture(spec, gen_out);
            std::cerr << "wrote " << spec.frame_count << " frames to " << gen_out << "\n";
            return 0;
        }
        if (*score_cmd) return score(score_frame, score_alpha, score_k);
        if (*vis_cmd) return visualize(vis_result, grid_rows, grid_cols, vis_out);
        if (*inspect_cmd) return inspect(inspect_path);
    } catch (const ktv::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ktv::exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 4;
}
