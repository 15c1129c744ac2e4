// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace d2p {

enum class ErrorCode {
    kInvalidArgument,
    kOutOfRange,
    kDimensionMismatch,
    kNonFinite,
    kNegativeValue,
    kEmptyInput,
    kBadMagic,
    kUnsupportedVersion,
    kTruncated,
    kTrailingData,
    kIoFailure,
    kEnumerationLimit,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code so
/// callers (and the CLI exit-code mapping) can tell error classes apart.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), m_code(code) {}

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace d2p
