#pragma once

#include <stdexcept>
#include <string>

namespace hyperent {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ZeroStateError : public Error { using Error::Error; };
class BasisError : public Error { using Error::Error; };
class RangeError : public Error { using Error::Error; };
class UnitarityError : public Error { using Error::Error; };
class LayoutError : public Error { using Error::Error; };
class FitError : public Error { using Error::Error; };
class InsufficientCounts : public Error { using Error::Error; };

// Carries the 1-based line of the offending entry when one is known.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

} // namespace hyperent
