// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>

#include "ktv/error.hpp"
#include "ktv/ktvf.hpp"
#include "ktv/pipeline.hpp"

namespace ktv {

namespace {

constexpr unsigned char kRetained = 255;
constexpr unsigned char kPruned = 64;

}  // namespace

std::string mask_filename(std::size_t frame_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "mask_frame_%06zu.pgm", frame_index);
    return buf;
}

std::string render_mask_pgm(const PlannedKeyframe& keyframe, std::size_t grid_rows, std::size_t grid_cols,
                            std::size_t tokens_per_frame) {
    require(grid_rows >= 1 && grid_cols >= 1 && grid_rows * grid_cols == tokens_per_frame, ErrorCode::Validation,
            "grid mismatch: " + std::to_string(grid_rows) + "x" + std::to_string(grid_cols) + " != " +
                std::to_string(tokens_per_frame) + " tokens");
    std::string image = "P5\n" + std::to_string(grid_cols) + " " + std::to_string(grid_rows) + "\n255\n";
    const std::size_t header = image.size();
    image.append(tokens_per_frame, static_cast<char>(kPruned));
    for (auto idx : keyframe.retained_token_indices) {
        require(idx < tokens_per_frame, ErrorCode::Validation, "retained token index out of range");
        image[header + idx] = static_cast<char>(kRetained);
    }
    return image;
}

std::vector<std::filesystem::path> visualize(const PruningPlan& plan, std::size_t grid_rows, std::size_t grid_cols,
                                             const std::filesystem::path& out_dir) {
    // Render everything before touching the disk so a grid mismatch writes nothing.
    std::vector<std::string> images;
    images.reserve(plan.keyframes.size());
    for (const auto& kf : plan.keyframes) {
        images.push_back(render_mask_pgm(kf, grid_rows, grid_cols, plan.tokens_per_frame));
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        fail(ErrorCode::Io, "cannot create directory '" + out_dir.string() + "'");
    }
    std::vector<std::filesystem::path> written;
    for (std::size_t i = 0; i < images.size(); ++i) {
        auto path = out_dir / mask_filename(plan.keyframes[i].frame_index);
        write_file_atomic(path, images[i]);
        written.push_back(std::move(path));
    }
    return written;
}

}  // namespace ktv
