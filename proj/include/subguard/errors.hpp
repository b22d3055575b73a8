#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace subguard {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition violated: bad dimension, empty input, index out of range.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value. `field()` names the offending knob.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// File does not follow the declared format (magic, version, header fields).
class FormatError : public Error {
public:
    using Error::Error;
};

/// File is structurally damaged; `offset()` is the byte where reading failed.
class CorruptionError : public Error {
public:
    CorruptionError(const std::string& what, std::uint64_t offset)
        : Error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Optimisation failed (non-finite loss, memorisation target missed).
class TrainingError : public Error {
public:
    TrainingError(const std::string& what, int epoch)
        : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

}  // namespace subguard

namespace subguard {

/// Text contains a character outside the model vocabulary.
class TokenizationError : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace subguard
