//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace winforge {

enum class ErrorKind {
    DimensionMismatch,
    NonFinite,
    InvalidArgument,
    InvalidConfig,
    Parse,
    VersionMismatch,
    MalformedArray,
    DimensionChain,
    Io,
    NotConverged,
    PatternMismatch,
    Diverged,
    Integrity,
};

std::string_view to_string(ErrorKind kind);

/// The one exception type thrown by the library. `kind()` is stable and is
/// what callers (and the CLI's error JSON) should switch on; the message is
/// for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool ok, ErrorKind kind, const std::string& message) {
    if (!ok) fail(kind, message);
}

} // namespace winforge
