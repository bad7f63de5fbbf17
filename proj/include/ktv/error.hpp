// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ktv {

enum class ErrorCode {
    Validation,
    NonFinite,
    BadMagic,
    UnsupportedVersion,
    BadHeader,
    UnsupportedDtype,
    PayloadLengthMismatch,
    Truncated,
    MissingTensor,
    AmbiguousAttentionInputs,
    ZeroNorm,
    Io,
    Internal,
};

std::string_view to_string(ErrorCode code);

/// Process exit code used by the CLI for an error category:
/// 2 validation/format, 3 I/O, 4 internal inconsistency.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) {
        fail(code, message);
    }
}

}  // namespace ktv
