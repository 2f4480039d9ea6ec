#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scwave {

using Real = double;
using Complex = std::complex<double>;
using RealBuffer = std::vector<double>;
using ComplexBuffer = std::vector<Complex>;

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(std::span<const Complex> v) {
    for (const Complex& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

// Post-condition guard for buffer-producing operations.
inline void check_finite(std::span<const double> v, const char* what) {
    if (!all_finite(v)) throw std::runtime_error(std::string(what) + ": non-finite entries");
}

inline void check_finite(std::span<const Complex> v, const char* what) {
    if (!all_finite(v)) throw std::runtime_error(std::string(what) + ": non-finite entries");
}

inline double wrap_angle(double a) {
    // Wrap to (-pi, pi].
    a = std::remainder(a, 2.0 * M_PI);
    if (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

}  // namespace scwave
