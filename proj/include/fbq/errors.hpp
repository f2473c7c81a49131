#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fbq {

// Invalid user input: bad parameters, malformed specs, unstable models.
// The CLI maps this family to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ParseError : public ConfigError {
public:
    ParseError(const std::string &input, std::size_t position, const std::string &what)
        : ConfigError(format(input, position, what)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    static std::string format(const std::string &input, std::size_t position,
                              const std::string &what) {
        return "at position " + std::to_string(position) + " in '" + input + "': " + what;
    }

    std::size_t position_;
};

class UnstableModel : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// A documented precondition of an operation does not hold for the given input.
class PreconditionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Numerical failures (bracketing, convergence). Never expected for valid input.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SimulationAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fbq
