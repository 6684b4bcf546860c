// Shared basics: numeric constants, argument checking, solver failure type.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace ehd {

inline constexpr double pi = 3.14159265358979323846;

/// Thrown when a numerical procedure (elliptic solve, Newton corrector,
/// branch switch, ...) fails for reasons that are not a caller error.
class SolverError : public std::runtime_error {
  public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond)
        throw std::invalid_argument(msg);
}

inline void require_mode(int k) {
    require(k >= 1, "mode index must satisfy k >= 1, got " + std::to_string(k));
}

}  // namespace detail

}  // namespace ehd
