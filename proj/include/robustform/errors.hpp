#pragma once

#include <stdexcept>
#include <string>

namespace robustform {

/// Raised on malformed or inconsistent user input (config files, spec values).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a numerical contract is violated at run time
/// (e.g. a decomposition residual above tolerance).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace robustform
