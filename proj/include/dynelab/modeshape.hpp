#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <dynelab/common.hpp>

namespace dynelab {

enum class ShapeKind { Rectangular, BilateralExp, FallingExp, RisingExp };

/// Normalized single-photon temporal mode u(t) with unit total mass.
///
/// The rate parameter is the duration T for Rectangular, kappa for
/// BilateralExp and k for the two unilateral exponentials.  Rectangular
/// support is the half-open interval [0, T), so the density is
/// right-continuous at the pulse start.
struct ModeShape {
    ShapeKind kind = ShapeKind::Rectangular;
    double rate = 1.0;

    ModeShape() = default;
    ModeShape(ShapeKind kind_, double rate_) : kind(kind_), rate(rate_) {
        if (!(rate > 0.0) || !std::isfinite(rate))
            throw InvalidParameter("mode-shape rate must be positive and finite");
    }

    static ModeShape rectangular(double T = 1.0) { return {ShapeKind::Rectangular, T}; }
    static ModeShape bilateral(double kappa = 4.0) { return {ShapeKind::BilateralExp, kappa}; }
    static ModeShape falling(double k = 2.0) { return {ShapeKind::FallingExp, k}; }
    static ModeShape rising(double k = 2.0) { return {ShapeKind::RisingExp, k}; }
};

/// u(t); exactly zero outside the support.
inline double density(const ModeShape& s, double t) {
    switch (s.kind) {
    case ShapeKind::Rectangular:
        return (t >= 0.0 && t < s.rate) ? 1.0 / s.rate : 0.0;
    case ShapeKind::BilateralExp:
        return 0.5 * s.rate * std::exp(-s.rate * std::abs(t));
    case ShapeKind::FallingExp:
        return t >= 0.0 ? s.rate * std::exp(-s.rate * t) : 0.0;
    case ShapeKind::RisingExp:
        return t <= 0.0 ? s.rate * std::exp(s.rate * t) : 0.0;
    }
    return 0.0;
}

/// U(t) = integral of u up to t.  Closed form per shape; U(inf) = 1.
inline double cumulative(const ModeShape& s, double t) {
    switch (s.kind) {
    case ShapeKind::Rectangular:
        if (t <= 0.0) return 0.0;
        if (t >= s.rate) return 1.0;
        return t / s.rate;
    case ShapeKind::BilateralExp:
        return t < 0.0 ? 0.5 * std::exp(s.rate * t) : 1.0 - 0.5 * std::exp(-s.rate * t);
    case ShapeKind::FallingExp:
        return t <= 0.0 ? 0.0 : -std::expm1(-s.rate * t);
    case ShapeKind::RisingExp:
        return t >= 0.0 ? 1.0 : std::exp(s.rate * t);
    }
    return 0.0;
}

/// ln U(t), stable near both tails.  -inf where U(t) = 0.
inline double log_cumulative(const ModeShape& s, double t) {
    switch (s.kind) {
    case ShapeKind::Rectangular:
        if (t <= 0.0) return -inf;
        if (t >= s.rate) return 0.0;
        return std::log(t / s.rate);
    case ShapeKind::BilateralExp:
        return t < 0.0 ? s.rate * t - std::log(2.0)
                       : std::log1p(-0.5 * std::exp(-s.rate * t));
    case ShapeKind::FallingExp:
        return t <= 0.0 ? -inf : std::log(-std::expm1(-s.rate * t));
    case ShapeKind::RisingExp:
        return t >= 0.0 ? 0.0 : s.rate * t;
    }
    return -inf;
}

/// Characteristic duration w = [int u^2]^-1: T, 4/kappa, 2/k, 2/k.
inline double characteristic_width(const ModeShape& s) {
    switch (s.kind) {
    case ShapeKind::Rectangular: return s.rate;
    case ShapeKind::BilateralExp: return 4.0 / s.rate;
    case ShapeKind::FallingExp:
    case ShapeKind::RisingExp: return 2.0 / s.rate;
    }
    return 0.0;
}

/// Shape of the given kind with rate chosen so characteristic_width == 1
/// (T = 1, kappa = 4, k = 2).
inline ModeShape normalized(ShapeKind kind) {
    switch (kind) {
    case ShapeKind::Rectangular: return ModeShape::rectangular(1.0);
    case ShapeKind::BilateralExp: return ModeShape::bilateral(4.0);
    case ShapeKind::FallingExp: return ModeShape::falling(2.0);
    case ShapeKind::RisingExp: return ModeShape::rising(2.0);
    }
    return ModeShape::rectangular(1.0);
}

/// True support of the density (possibly half-infinite).
inline Interval support(const ModeShape& s) {
    switch (s.kind) {
    case ShapeKind::Rectangular: return {0.0, s.rate};
    case ShapeKind::BilateralExp: return {-inf, inf};
    case ShapeKind::FallingExp: return {0.0, inf};
    case ShapeKind::RisingExp: return {-inf, 0.0};
    }
    return {0.0, 0.0};
}

/// Time window carrying all but eps of the cumulative mass at each
/// half-infinite end; finite support edges are kept exact.
inline Interval effective_support(const ModeShape& s, double eps = 1e-10) {
    if (!(eps > 0.0) || eps >= 0.5)
        throw InvalidParameter("truncation epsilon must lie in (0, 0.5)");
    switch (s.kind) {
    case ShapeKind::Rectangular:
        return {0.0, s.rate};
    case ShapeKind::BilateralExp:
        return {std::log(2.0 * eps) / s.rate, -std::log(2.0 * eps) / s.rate};
    case ShapeKind::FallingExp:
        return {0.0, -std::log(eps) / s.rate};
    case ShapeKind::RisingExp:
        return {std::log(eps) / s.rate, 0.0};
    }
    return {0.0, 0.0};
}

/// Interior times where the density or its derivative jumps (panel alignment).
inline int shape_kinks(const ModeShape& s, double* out2) {
    switch (s.kind) {
    case ShapeKind::Rectangular:
        out2[0] = 0.0;
        out2[1] = s.rate;
        return 2;
    case ShapeKind::BilateralExp:
    case ShapeKind::FallingExp:
    case ShapeKind::RisingExp:
        out2[0] = 0.0;
        return 1;
    }
    return 0;
}

inline const char* shape_name(ShapeKind kind) {
    switch (kind) {
    case ShapeKind::Rectangular: return "rect";
    case ShapeKind::BilateralExp: return "bilat";
    case ShapeKind::FallingExp: return "fallexp";
    case ShapeKind::RisingExp: return "riseexp";
    }
    return "?";
}

/// Parses "rect", "bilat", "fallexp", "riseexp" with an optional rate
/// override, e.g. "rect:T=2" or "bilat:kappa=4" or "fallexp:k=3".
inline ModeShape parse_shape(std::string_view spec) {
    std::string_view name = spec;
    std::string_view arg;
    if (auto pos = spec.find(':'); pos != std::string_view::npos) {
        name = spec.substr(0, pos);
        arg = spec.substr(pos + 1);
    }
    ShapeKind kind;
    std::string_view rate_key;
    if (name == "rect") { kind = ShapeKind::Rectangular; rate_key = "T"; }
    else if (name == "bilat") { kind = ShapeKind::BilateralExp; rate_key = "kappa"; }
    else if (name == "fallexp") { kind = ShapeKind::FallingExp; rate_key = "k"; }
    else if (name == "riseexp") { kind = ShapeKind::RisingExp; rate_key = "k"; }
    else throw InvalidParameter("unknown shape '" + std::string(spec) +
                                "' (expected rect|bilat|fallexp|riseexp)");
    ModeShape shape = normalized(kind);
    if (!arg.empty()) {
        auto eq = arg.find('=');
        if (eq == std::string_view::npos || arg.substr(0, eq) != rate_key)
            throw InvalidParameter("shape '" + std::string(name) + "' takes rate key '" +
                                   std::string(rate_key) + "=<value>'");
        try {
            shape = ModeShape(kind, std::stod(std::string(arg.substr(eq + 1))));
        } catch (const std::logic_error&) {
            throw InvalidParameter("bad rate in shape spec '" + std::string(spec) + "'");
        }
    }
    return shape;
}

} // namespace dynelab
