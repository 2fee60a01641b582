#pragma once

#include <stdexcept>
#include <string>

namespace abac {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ── Data errors (CLI exit code 2) ───────────────────────────────────────────

class DataError : public Error {
public:
    using Error::Error;
};

/// A rule or entity references an attribute the schema does not declare.
class SchemaMismatch : public DataError {
public:
    using DataError::DataError;
};

class AmbiguousFormat : public DataError {
public:
    using DataError::DataError;
};

class ConflictingExamples : public DataError {
public:
    using DataError::DataError;
};

class FileKindMismatch : public DataError {
public:
    using DataError::DataError;
};

class MissingFile : public DataError {
public:
    explicit MissingFile(std::string path)
        : DataError("missing file: " + path), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Malformed textual rule / policy document.
class PolicySyntaxError : public DataError {
public:
    using DataError::DataError;
};

class EmptyLog : public DataError {
public:
    using DataError::DataError;
};

/// The ground-truth policy grants nothing, so no Allow entry can be produced.
class AllDeny : public DataError {
public:
    using DataError::DataError;
};

class RatioUnreachable : public DataError {
public:
    using DataError::DataError;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

// ── External-service errors (CLI exit code 3) ───────────────────────────────

class ExternalError : public Error {
public:
    using Error::Error;
};

class TransportError : public ExternalError {
public:
    using ExternalError::ExternalError;
};

class HttpError : public ExternalError {
public:
    HttpError(int status, const std::string& message)
        : ExternalError(message), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

class InvalidResponse : public ExternalError {
public:
    using ExternalError::ExternalError;
};

// ── Programming errors ──────────────────────────────────────────────────────

/// A documented precondition was violated by the caller.
class ContractViolation : public Error {
public:
    using Error::Error;
};

}  // namespace abac
