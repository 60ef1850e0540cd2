#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace mgstab {

using Complex = std::complex<double>;

enum class ErrorKind {
    Parse,       // malformed input file or argument text
    Validation,  // case violates a schema rule
    Numeric,     // singular matrix, overflow, divergence of an inner solve
    Domain,      // request is well-formed but has no answer (no bracket, no convergence)
    Io,          // file system failure
};

/// Single exception type for the whole library; `kind()` tells the C API
/// and the CLI which exit path to take.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace mgstab
