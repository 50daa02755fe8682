// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clcc {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A numeric or structural precondition was violated (zero illuminant
/// channel, empty input, mismatched shapes, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// The source colors of a least-squares fit do not span RGB. Callers may
/// fall back to the diagonal (white-balance only) mapping.
class RankDeficientError : public Error {
public:
    using Error::Error;
};

/// A 3x3 matrix is numerically singular.
class SingularError : public Error {
public:
    using Error::Error;
};

/// The two illuminants of a candidate contrastive pair are angularly too
/// close to form a valid negative; the caller should resample.
class IlluminantsTooCloseError : public Error {
public:
    using Error::Error;
};

/// Malformed or truncated file. Carries the byte offset where parsing failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t byte_offset)
        : Error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
          byte_offset_(byte_offset) {}

    std::size_t byte_offset() const { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

/// File carries a recognized family magic but an unsupported version.
class UnsupportedVersionError : public FormatError {
public:
    using FormatError::FormatError;
};

} // namespace clcc
