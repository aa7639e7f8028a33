#pragma once

#include <array>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dynelab {

using Mat2c = std::array<std::array<std::complex<double>, 2>, 2>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double inf = std::numeric_limits<double>::infinity();

/// Closed interval on the time axis. lo > hi denotes the empty interval.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty() const { return !(lo < hi); }
    double length() const { return empty() ? 0.0 : hi - lo; }
};

struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigurationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Requested closed form is outside its validity range (rectangular tau >= T/2).
struct ClosedFormOutOfRange : std::domain_error {
    using std::domain_error::domain_error;
};

} // namespace dynelab
