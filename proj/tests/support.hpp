#pragma once

#include <cmath>
#include <cstdlib>
#include <string>

namespace testing {

/// Five-point central difference of f at x.
template <class F>
double derivative(F&& f, double x, double h) {
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

/// Richardson extrapolation of the five-point rule (error O(h^6)).
template <class F>
double derivative_fine(F&& f, double x, double h) {
    const double coarse = derivative(f, x, h);
    const double fine = derivative(f, x, 0.5 * h);
    return fine + (fine - coarse) / 63.0;
}

inline double rel_error(double approx, double exact, double floor = 1e-12) {
    return std::abs(approx - exact) / std::max(std::abs(exact), floor);
}

inline std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

}  // namespace testing
