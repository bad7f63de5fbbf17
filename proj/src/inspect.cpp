// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include "ktv/ktvf.hpp"
#include "ktv/pipeline.hpp"

namespace ktv {

InspectReport inspect(const std::filesystem::path& path) {
    KtvfLayout layout;
    const KtvfFile file = read_ktvf(path, &layout);

    InspectReport report;
    std::ostringstream out;
    out << "file:          " << path.string() << "\n";
    out << "version:       " << layout.version << "\n";
    out << "header_length: " << layout.header_length << "\n";
    out << "data_length:   " << layout.data_length << "\n";
    out << "video_id:      " << file.video_id << "\n";
    out << "tensors:       " << file.tensors.size() << "\n";
    std::uint64_t offset = 0;
    for (const auto& t : file.tensors) {
        out << "  " << t.name << " f32 [";
        for (std::size_t i = 0; i < t.shape.size(); ++i) {
            out << (i ? ", " : "") << t.shape[i];
        }
        out << "] offset=" << offset << "\n";
        offset += t.data.size() * sizeof(float);
        if (!ktvf::is_known_tensor_name(t.name)) {
            report.warnings.push_back("unknown tensor name '" + t.name + "'");
        }
    }
    out << "meta:          " << file.meta.dump() << "\n";
    report.text = out.str();
    return report;
}

}  // namespace ktv
