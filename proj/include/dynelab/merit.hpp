#pragma once

#include <array>
#include <cmath>
#include <complex>

#include <dynelab/common.hpp>

namespace dynelab {

/// F for homodyne detection: sqrt(2/pi).
inline double homodyne_exact() { return std::sqrt(2.0 / pi); }

/// F for heterodyne detection: sqrt(pi)/2.
inline double heterodyne_exact() { return 0.5 * std::sqrt(pi); }

/// F~ = (9 - <|R|^4>)/8.  Deliberately not clipped to [0, 1]; the raw affine
/// map keeps Monte Carlo estimator algebra transparent.
inline double approx_merit_from_m4(double m4) {
    if (!(m4 >= 0.0)) throw InvalidParameter("fourth moment must be >= 0");
    return (9.0 - m4) / 8.0;
}

/// Quality of the prepared 50:50 qubit for a measurement with merit f.
struct QubitMetrics {
    double f = 0.0;
    double fidelity = 0.0; // (1+f)/2
    double purity = 0.0;   // (1+f^2)/2
    Mat2c rho2{};
};

inline QubitMetrics qubit_metrics(double f) {
    if (!(f >= 0.0 && f <= 1.0)) throw InvalidParameter("merit f must lie in [0, 1]");
    QubitMetrics q;
    q.f = f;
    q.fidelity = 0.5 * (1.0 + f);
    q.purity = 0.5 * (1.0 + f * f);
    q.rho2[0][0] = q.rho2[1][1] = 0.5;
    q.rho2[0][1] = q.rho2[1][0] = 0.5 * f;
    return q;
}

struct Table1Row {
    const char* measurement;
    double exact_f;
    double approx_f;
};

/// Exact vs approximated performances of the three dyne schemes.
inline std::array<Table1Row, 3> table1() {
    return {{{"homodyne", homodyne_exact(), 0.75},
             {"heterodyne", heterodyne_exact(), 0.875},
             {"adaptive", 1.0, 1.0}}};
}

} // namespace dynelab
