// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#include "ktv/ktvf.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "ktv/error.hpp"

namespace ktv {

namespace ktvf {

bool is_known_tensor_name(std::string_view name) {
    static constexpr std::string_view known[] = {
        kClusterEmbeddings, kRelevanceEmbeddings, kTokenFeatures, kImportanceLogits,
        kClsQuery,          kTokenKeys,           kQuestionEmbedding,
    };
    return std::find(std::begin(known), std::end(known), name) != std::end(known);
}

}  // namespace ktvf

namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
    }
}

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
    }
}

std::uint64_t get_le(std::span<const std::byte> bytes, std::size_t offset, int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
        v |= static_cast<std::uint64_t>(bytes[offset + i]) << (8 * i);
    }
    return v;
}

void put_f32(std::byte* dst, float value) {
    auto bits = std::bit_cast<std::uint32_t>(value);
    for (int i = 0; i < 4; ++i) {
        dst[i] = static_cast<std::byte>((bits >> (8 * i)) & 0xFFu);
    }
}

float get_f32(const std::byte* src) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) {
        bits |= static_cast<std::uint32_t>(src[i]) << (8 * i);
    }
    return std::bit_cast<float>(bits);
}

std::uint64_t checked_product(const std::vector<std::uint64_t>& shape, const std::string& name) {
    std::uint64_t n = 1;
    for (auto extent : shape) {
        if (extent != 0 && n > std::numeric_limits<std::uint64_t>::max() / 4 / extent) {
            fail(ErrorCode::BadHeader, "tensor '" + name + "' shape overflows");
        }
        n *= extent;
    }
    return n;
}

}  // namespace

std::uint64_t NamedTensor::element_count() const {
    std::uint64_t n = 1;
    for (auto extent : shape) {
        n *= extent;
    }
    return n;
}

const NamedTensor* KtvfFile::find(std::string_view name) const {
    for (const auto& t : tensors) {
        if (t.name == name) {
            return &t;
        }
    }
    return nullptr;
}

std::vector<std::byte> encode_ktvf(const KtvfFile& file) {
    nlohmann::ordered_json header;
    header["video_id"] = file.video_id;
    header["tensors"] = nlohmann::ordered_json::array();

    std::uint64_t offset = 0;
    for (const auto& t : file.tensors) {
        if (t.element_count() != t.data.size()) {
            fail(ErrorCode::Validation, "tensor '" + t.name + "' shape does not match its data length");
        }
        for (float v : t.data) {
            if (!std::isfinite(v)) {
                fail(ErrorCode::NonFinite, "non-finite value in tensor '" + t.name + "'");
            }
        }
        nlohmann::ordered_json entry;
        entry["name"] = t.name;
        entry["shape"] = t.shape;
        entry["dtype"] = "f32";
        entry["offset"] = offset;
        header["tensors"].push_back(std::move(entry));
        offset += t.data.size() * sizeof(float);
    }
    header["meta"] = file.meta.is_null() ? nlohmann::ordered_json::object() : file.meta;

    const std::string text = header.dump();
    std::vector<std::byte> out;
    out.reserve(ktvf::kPreambleBytes + text.size() + offset);
    for (char c : ktvf::kMagic) {
        out.push_back(static_cast<std::byte>(c));
    }
    put_u32(out, ktvf::kVersion);
    put_u64(out, text.size());
    for (char c : text) {
        out.push_back(static_cast<std::byte>(c));
    }
    const std::size_t data_start = out.size();
    out.resize(data_start + offset);
    std::byte* cursor = out.data() + data_start;
    for (const auto& t : file.tensors) {
        for (float v : t.data) {
            put_f32(cursor, v);
            cursor += 4;
        }
    }
    return out;
}

KtvfFile decode_ktvf(std::span<const std::byte> bytes, KtvfLayout* layout) {
    if (bytes.size() < 4) {
        fail(ErrorCode::Truncated, "truncated file: missing magic");
    }
    if (std::memcmp(bytes.data(), ktvf::kMagic, 4) != 0) {
        fail(ErrorCode::BadMagic, "bad magic");
    }
    if (bytes.size() < ktvf::kPreambleBytes) {
        fail(ErrorCode::Truncated, "truncated file: incomplete preamble");
    }
    const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
    if (version != ktvf::kVersion) {
        fail(ErrorCode::UnsupportedVersion, "unsupported version " + std::to_string(version));
    }
    const std::uint64_t header_length = get_le(bytes, 8, 8);
    if (header_length > bytes.size() - ktvf::kPreambleBytes) {
        fail(ErrorCode::Truncated, "truncated file: header declares " + std::to_string(header_length) +
                                       " bytes but only " +
                                       std::to_string(bytes.size() - ktvf::kPreambleBytes) + " remain");
    }

    const auto* text_begin = reinterpret_cast<const char*>(bytes.data() + ktvf::kPreambleBytes);
    nlohmann::ordered_json header;
    try {
        header = nlohmann::ordered_json::parse(text_begin, text_begin + header_length);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::BadHeader, std::string("bad header: ") + e.what());
    }

    KtvfFile file;
    std::vector<std::uint64_t> offsets;
    try {
        if (!header.is_object()) {
            fail(ErrorCode::BadHeader, "bad header: not a JSON object");
        }
        if (!header.contains("video_id") || !header["video_id"].is_string()) {
            fail(ErrorCode::BadHeader, "bad header: 'video_id' must be a string");
        }
        if (!header.contains("tensors") || !header["tensors"].is_array()) {
            fail(ErrorCode::BadHeader, "bad header: 'tensors' must be an array");
        }
        file.video_id = header["video_id"].get<std::string>();
        if (header.contains("meta")) {
            if (!header["meta"].is_object()) {
                fail(ErrorCode::BadHeader, "bad header: 'meta' must be an object");
            }
            file.meta = header["meta"];
        }
        for (const auto& entry : header["tensors"]) {
            if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string() ||
                !entry.contains("shape") || !entry["shape"].is_array() || !entry.contains("dtype") ||
                !entry["dtype"].is_string() || !entry.contains("offset") ||
                !entry["offset"].is_number_unsigned()) {
                fail(ErrorCode::BadHeader, "bad header: malformed tensor entry");
            }
            NamedTensor t;
            t.name = entry["name"].get<std::string>();
            for (const auto& extent : entry["shape"]) {
                if (!extent.is_number_unsigned()) {
                    fail(ErrorCode::BadHeader, "bad header: tensor '" + t.name + "' has a non-integer extent");
                }
                t.shape.push_back(extent.get<std::uint64_t>());
            }
            if (entry["dtype"].get<std::string>() != "f32") {
                fail(ErrorCode::UnsupportedDtype,
                     "unsupported dtype '" + entry["dtype"].get<std::string>() + "' for tensor '" + t.name + "'");
            }
            if (file.find(t.name) != nullptr) {
                fail(ErrorCode::BadHeader, "bad header: duplicate tensor '" + t.name + "'");
            }
            offsets.push_back(entry["offset"].get<std::uint64_t>());
            file.tensors.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::BadHeader, std::string("bad header: ") + e.what());
    }

    std::uint64_t expected_offset = 0;
    for (std::size_t i = 0; i < file.tensors.size(); ++i) {
        if (offsets[i] != expected_offset) {
            fail(ErrorCode::BadHeader, "bad header: tensor '" + file.tensors[i].name + "' offset " +
                                           std::to_string(offsets[i]) + ", expected " +
                                           std::to_string(expected_offset));
        }
        expected_offset += checked_product(file.tensors[i].shape, file.tensors[i].name) * 4;
    }
    const std::uint64_t data_length = bytes.size() - ktvf::kPreambleBytes - header_length;
    if (data_length != expected_offset) {
        fail(ErrorCode::PayloadLengthMismatch, "payload length mismatch: header declares " +
                                                   std::to_string(expected_offset) + " bytes, data section holds " +
                                                   std::to_string(data_length));
    }

    const std::byte* cursor = bytes.data() + ktvf::kPreambleBytes + header_length;
    for (auto& t : file.tensors) {
        t.data.resize(t.element_count());
        for (auto& v : t.data) {
            v = get_f32(cursor);
            cursor += 4;
            if (!std::isfinite(v)) {
                fail(ErrorCode::NonFinite, "non-finite value in tensor '" + t.name + "'");
            }
        }
    }
    if (layout != nullptr) {
        *layout = {version, header_length, data_length};
    }
    return file;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
    }
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<std::byte> bytes(size);
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
        fail(ErrorCode::Io, "failed reading '" + path.string() + "'");
    }
    return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorCode::Io, "cannot open '" + tmp.string() + "' for writing");
        }
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            fail(ErrorCode::Io, "failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorCode::Io, "cannot move output into place at '" + path.string() + "'");
    }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
    write_file_atomic(path, std::as_bytes(std::span(text.data(), text.size())));
}

void write_ktvf(const KtvfFile& file, const std::filesystem::path& path) {
    write_file_atomic(path, encode_ktvf(file));
}

KtvfFile read_ktvf(const std::filesystem::path& path, KtvfLayout* layout) {
    return decode_ktvf(read_file_bytes(path), layout);
}

}  // namespace ktv
