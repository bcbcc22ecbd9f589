#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace plugsense {

/// Base class for every failure raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument or violated precondition (empty input, length mismatch, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Simulation failures.
class NonConvergence : public Error {
public:
    using Error::Error;
};

class NumericalOverflow : public Error {
public:
    using Error::Error;
};

// Persistence failures.
class IoError : public Error {
public:
    using Error::Error;
};

class SchemaVersionMismatch : public Error {
public:
    using Error::Error;
};

class CorruptRecord : public Error {
public:
    CorruptRecord(std::size_t line, const std::string& what)
        : Error("corrupt record at line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class InsufficientSamples : public Error {
public:
    InsufficientSamples(std::string combo_id, std::size_t have, std::size_t need)
        : Error("insufficient samples for '" + combo_id + "': have " + std::to_string(have) +
                ", need " + std::to_string(need)),
          combo_id_(std::move(combo_id)) {}

    [[nodiscard]] const std::string& combo_id() const noexcept { return combo_id_; }

private:
    std::string combo_id_;
};

// Network failures.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class DivergedToNaN : public Error {
public:
    using Error::Error;
};

// Evaluation failures.
class LengthMismatch : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

}  // namespace plugsense
