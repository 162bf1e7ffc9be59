#pragma once

#include <stdexcept>
#include <string>

namespace influence {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two entropy estimates that cannot be compared (different N or estimator).
class InvalidComparison : public Error {
public:
    using Error::Error;
};

/// A precondition on a numeric or structural argument was violated.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Transport-level failure talking to a remote provider. Retryable.
class GatewayError : public Error {
public:
    GatewayError(const std::string& what, int attempts)
        : Error(what + " (after " + std::to_string(attempts) + " attempt" +
                (attempts == 1 ? "" : "s") + ")"),
          attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

/// The endpoint answered, but the reply violates the wire contract. Never retried.
class ProtocolError : public Error {
public:
    ProtocolError(const std::string& what, std::string raw_body)
        : Error(what), raw_body_(std::move(raw_body)) {}

    const std::string& raw_body() const noexcept { return raw_body_; }

private:
    std::string raw_body_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Ingestion produced no valid rows.
class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

/// Bad or missing configuration (maps to CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace influence
