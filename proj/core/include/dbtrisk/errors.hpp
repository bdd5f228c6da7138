#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dbtrisk {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (shape mismatch, empty mask, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

class MalformedRecord : public Error {
public:
    using Error::Error;
};

/// AUROC / Youden on input with a single class.
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

class DegenerateSampler : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class Divergence : public Error {
public:
    using Error::Error;
};

/// Filesystem-level failures: missing file, unreadable, short write.
class IoError : public Error {
public:
    using Error::Error;
};

/// Structural problems in a binary or text file.
class FormatError : public Error {
public:
    using Error::Error;
};

class BadMagic : public FormatError {
public:
    using FormatError::FormatError;
};

class VersionMismatch : public FormatError {
public:
    using FormatError::FormatError;
};

class TruncatedPayload : public FormatError {
public:
    using FormatError::FormatError;
};

class SizeOverflow : public FormatError {
public:
    using FormatError::FormatError;
};

/// Header fields that are individually out of range, or bytes after the payload.
class InvalidHeader : public FormatError {
public:
    using FormatError::FormatError;
};

/// Row-level manifest or table error. `line()` is 1-based and counts the header.
class TableError : public FormatError {
public:
    TableError(std::size_t line, const std::string& what)
        : FormatError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace dbtrisk
