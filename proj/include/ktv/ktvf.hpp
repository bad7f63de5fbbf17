// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ktv {

/// KTVF named-tensor container.
///
/// Layout (all integers little-endian):
///   [0, 4)    magic "KTVF"
///   [4, 8)    u32 version, currently 1
///   [8, 16)   u64 header_length
///   [16, 16 + header_length)  UTF-8 JSON header
///       {"video_id": str,
///        "tensors": [{"name": str, "shape": [int...], "dtype": "f32", "offset": int}],
///        "meta": {...}}
///   data section: tensors packed back to back in listed order, binary32
///   little-endian, row-major. `offset` is relative to the data section start.
namespace ktvf {

inline constexpr char kMagic[4] = {'K', 'T', 'V', 'F'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kPreambleBytes = 16;

inline constexpr const char* kClusterEmbeddings = "cluster_embeddings";
inline constexpr const char* kRelevanceEmbeddings = "relevance_embeddings";
inline constexpr const char* kTokenFeatures = "token_features";
inline constexpr const char* kImportanceLogits = "importance_logits";
inline constexpr const char* kClsQuery = "cls_query";
inline constexpr const char* kTokenKeys = "token_keys";
inline constexpr const char* kQuestionEmbedding = "question_embedding";

bool is_known_tensor_name(std::string_view name);

}  // namespace ktvf

struct NamedTensor {
    std::string name;
    std::vector<std::uint64_t> shape;
    std::vector<float> data;

    std::uint64_t element_count() const;
    bool operator==(const NamedTensor&) const = default;
};

struct KtvfFile {
    std::string video_id;
    std::vector<NamedTensor> tensors;
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();

    const NamedTensor* find(std::string_view name) const;
};

/// Header-level facts about a parsed container, for diagnostics.
struct KtvfLayout {
    std::uint32_t version = 0;
    std::uint64_t header_length = 0;
    std::uint64_t data_length = 0;
};

/// Serializes to bytes. Throws Validation/NonFinite if a tensor's shape does
/// not match its data or any entry is NaN/Inf.
std::vector<std::byte> encode_ktvf(const KtvfFile& file);

/// Parses bytes. Each malformation maps to its own ErrorCode: BadMagic,
/// UnsupportedVersion, Truncated, BadHeader, UnsupportedDtype,
/// PayloadLengthMismatch, NonFinite.
KtvfFile decode_ktvf(std::span<const std::byte> bytes, KtvfLayout* layout = nullptr);

/// Writes through a temporary sibling and renames, so a failed write never
/// leaves a partial file at `path`.
void write_ktvf(const KtvfFile& file, const std::filesystem::path& path);
KtvfFile read_ktvf(const std::filesystem::path& path, KtvfLayout* layout = nullptr);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace ktv
