#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mobench {

/// Base class for every error raised by the harness.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input could not be parsed (malformed JSON, bad CSV, unknown enum literal).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Input parsed but broke one or more invariants. All violations are kept.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> violations);

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

/// Bad configuration or command-line usage (exit code 2 territory).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mobench
