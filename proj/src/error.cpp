// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#include "ktv/error.hpp"

namespace ktv {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::Validation: return "validation";
    case ErrorCode::NonFinite: return "non-finite value";
    case ErrorCode::BadMagic: return "bad magic";
    case ErrorCode::UnsupportedVersion: return "unsupported version";
    case ErrorCode::BadHeader: return "bad header";
    case ErrorCode::UnsupportedDtype: return "unsupported dtype";
    case ErrorCode::PayloadLengthMismatch: return "payload length mismatch";
    case ErrorCode::Truncated: return "truncated file";
    case ErrorCode::MissingTensor: return "missing tensor";
    case ErrorCode::AmbiguousAttentionInputs: return "ambiguous attention inputs";
    case ErrorCode::ZeroNorm: return "zero-norm vector";
    case ErrorCode::Io: return "i/o";
    case ErrorCode::Internal: return "internal";
    }
    return "unknown";
}

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::Io: return 3;
    case ErrorCode::Internal: return 4;
    default: return 2;
    }
}

}  // namespace ktv
