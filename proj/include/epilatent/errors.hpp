#ifndef EPILATENT_ERRORS_HPP
#define EPILATENT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace epilatent {

// Error taxonomy. Every throw carries a human-readable message naming the
// offending index/line/field; callers that need machine dispatch catch by type.

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (non-finite value, divergent trajectory, eigenvalue
// outside the admissible domain).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace epilatent

#endif
