#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smartconf {

// Bad input to a pure function (non-finite values, out-of-range arguments).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Controller synthesis cannot produce a usable controller from the data.
class SynthesisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientData : public SynthesisError {
public:
    using SynthesisError::SynthesisError;
};

// The fitted gain is numerically zero: the knob does not move the metric.
class DegenerateGain : public SynthesisError {
public:
    using SynthesisError::SynthesisError;
};

// Missing or inconsistent system/goal configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public ConfigError {
public:
    ParseError(std::size_t line, const std::string& what)
        : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace smartconf
