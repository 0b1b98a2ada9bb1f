#pragma once

#include <stdexcept>
#include <string>

namespace adequate {

// Base for every failure raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or unusable input (bad files, invalid specs, degenerate labels).
// The CLI maps this to exit code 1; every other Error maps to 2.
class InputError : public Error {
public:
    explicit InputError(const std::string& msg) : Error(msg) {}
};

// Numerical breakdown inside a solver.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

}  // namespace adequate
