#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace heimdall {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value violates a domain invariant. `field()` names the offending field
/// when one can be identified.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message, std::string field = {})
        : Error(message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Raised when an action is not legal for the current state of an object.
class ConflictError : public Error {
public:
    ConflictError(const std::string& message, std::string current_state)
        : Error(message), current_state_(std::move(current_state)) {}

    const std::string& current_state() const noexcept { return current_state_; }

private:
    std::string current_state_;
};

/// Wire-level decode failure. Either a field is named or, for malformed
/// JSON, the byte offset at which parsing stopped.
class ProtocolError : public Error {
public:
    ProtocolError(const std::string& message, std::string field,
                  std::optional<std::size_t> byte_offset = std::nullopt)
        : Error(message), field_(std::move(field)), byte_offset_(byte_offset) {}

    const std::string& field() const noexcept { return field_; }
    std::optional<std::size_t> byte_offset() const noexcept { return byte_offset_; }

private:
    std::string field_;
    std::optional<std::size_t> byte_offset_;
};

}  // namespace heimdall
