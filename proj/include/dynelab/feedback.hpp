#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include <dynelab/common.hpp>
#include <dynelab/modeshape.hpp>

namespace dynelab {

/// Feedback gain law lambda(t) applied to the measurement record.
///
/// OptimalAdaptive is lambda_opt(t) = sqrt(u(t)/U(t)) for the bound mode
/// shape; Constant and PiecewiseConstant are defined on the whole time axis
/// (the local oscillator integrates vacuum noise before the pulse too).
/// The clamp bounds the divergent optimal gain in simulation; analytic
/// phase-variance integrals use the exact unclamped law.
struct GainStrategy {
    enum class Kind { OptimalAdaptive, Constant, PiecewiseConstant };

    Kind kind = Kind::Constant;
    double lambda1 = 0.0;        // the single value for Constant
    double lambda2 = 0.0;
    double t_switch = 0.0;       // lambda1 for t <= t_switch, lambda2 after
    double clamp = 1e3;
    std::optional<ModeShape> shape; // bound shape, OptimalAdaptive only

    static GainStrategy optimal(const ModeShape& s, double clamp = 1e3) {
        if (!(clamp > 0.0)) throw InvalidParameter("gain clamp must be positive");
        GainStrategy g;
        g.kind = Kind::OptimalAdaptive;
        g.clamp = clamp;
        g.shape = s;
        return g;
    }
    static GainStrategy constant(double lambda) {
        if (!(lambda >= 0.0)) throw InvalidParameter("constant gain must be >= 0");
        GainStrategy g;
        g.kind = Kind::Constant;
        g.lambda1 = g.lambda2 = lambda;
        return g;
    }
    static GainStrategy piecewise(double lambda1, double lambda2, double t_switch) {
        if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0))
            throw InvalidParameter("piecewise gains must be >= 0");
        GainStrategy g;
        g.kind = Kind::PiecewiseConstant;
        g.lambda1 = lambda1;
        g.lambda2 = lambda2;
        g.t_switch = t_switch;
        return g;
    }

    double max_gain() const {
        switch (kind) {
        case Kind::OptimalAdaptive: return clamp;
        case Kind::Constant: return lambda1;
        case Kind::PiecewiseConstant: return std::max(lambda1, lambda2);
        }
        return 0.0;
    }
};

/// lambda(t), clamped for the optimal-adaptive law.  Where U(t) = 0 inside
/// the support the divergent gain evaluates to the clamp, not an error.
inline double gain_value(const GainStrategy& g, double t) {
    switch (g.kind) {
    case GainStrategy::Kind::Constant:
        return g.lambda1;
    case GainStrategy::Kind::PiecewiseConstant:
        return t <= g.t_switch ? g.lambda1 : g.lambda2;
    case GainStrategy::Kind::OptimalAdaptive: {
        if (!g.shape) throw InvalidParameter("optimal gain requires a bound mode shape");
        const double u = density(*g.shape, t);
        if (u == 0.0) return 0.0;
        const double U = cumulative(*g.shape, t);
        if (U == 0.0) return g.clamp;
        return std::min(std::sqrt(u / U), g.clamp);
    }
    }
    return 0.0;
}

/// Exact lambda_opt without the clamp; used by the analytic integrands.
inline double gain_value_exact(const GainStrategy& g, double t) {
    if (g.kind != GainStrategy::Kind::OptimalAdaptive) return gain_value(g, t);
    const double u = density(*g.shape, t);
    if (u == 0.0) return 0.0;
    const double U = cumulative(*g.shape, t);
    return U == 0.0 ? inf : std::sqrt(u / U);
}

/// Var[Phi(b') - Phi(a')] = int_a^b lambda^2(s) ds, in closed form.
///
/// For OptimalAdaptive this is ln(U(b)/U(a)) on the support (+inf when the
/// window reaches back to U = 0, i.e. the divergent-gain limit e^{-V} = 0).
inline double phase_variance(const GainStrategy& g, double a, double b) {
    if (!(a <= b)) throw InvalidParameter("phase_variance: interval must have a <= b");
    switch (g.kind) {
    case GainStrategy::Kind::Constant:
        return g.lambda1 * g.lambda1 * (b - a);
    case GainStrategy::Kind::PiecewiseConstant: {
        if (g.lambda1 == g.lambda2) return g.lambda1 * g.lambda1 * (b - a);
        const double left = std::max(0.0, std::min(b, g.t_switch) - a);
        const double right = std::max(0.0, b - std::max(a, g.t_switch));
        return g.lambda1 * g.lambda1 * left + g.lambda2 * g.lambda2 * right;
    }
    case GainStrategy::Kind::OptimalAdaptive: {
        if (!g.shape) throw InvalidParameter("optimal gain requires a bound mode shape");
        const Interval sup = support(*g.shape);
        const double a2 = std::clamp(a, sup.lo, sup.hi);
        const double b2 = std::clamp(b, sup.lo, sup.hi);
        if (!(a2 < b2)) return 0.0;
        const double la = log_cumulative(*g.shape, a2);
        const double lb = log_cumulative(*g.shape, b2);
        if (la == -inf) return lb == -inf ? 0.0 : inf;
        return std::max(0.0, lb - la);
    }
    }
    return 0.0;
}

/// Local-oscillator phase law Phi(t).
///
/// Homodyne holds Phi = phi0; Heterodyne ramps at the detuning rate;
/// AdaptiveIntegral is Phi(t) = pi/2 + int^{t-tau} lambda(s) dW(s).
struct LoPhaseModel {
    enum class Mode { Homodyne, Heterodyne, AdaptiveIntegral };

    Mode mode = Mode::Homodyne;
    double phi0 = 0.5 * pi;      // single source of truth for the phase origin
    double detuning = 400.0 * pi; // heterodyne ramp rate, units of 1/w
    GainStrategy strategy;        // AdaptiveIntegral only
    double tau = 0.0;             // feedback delay >= 0

    static LoPhaseModel homodyne(double phi0 = 0.5 * pi) {
        LoPhaseModel m;
        m.mode = Mode::Homodyne;
        m.phi0 = phi0;
        return m;
    }
    static LoPhaseModel heterodyne(double detuning = 400.0 * pi, double phi0 = 0.5 * pi) {
        if (!(detuning > 0.0)) throw InvalidParameter("heterodyne detuning must be positive");
        LoPhaseModel m;
        m.mode = Mode::Heterodyne;
        m.detuning = detuning;
        m.phi0 = phi0;
        return m;
    }
    static LoPhaseModel adaptive(GainStrategy strategy, double tau = 0.0) {
        if (!(tau >= 0.0)) throw InvalidParameter("feedback delay must be >= 0");
        LoPhaseModel m;
        m.mode = Mode::AdaptiveIntegral;
        m.strategy = std::move(strategy);
        m.tau = tau;
        return m;
    }
};

/// Phase increment applied at time t.  The caller supplies the delayed noise
/// increment dW(t - tau); the delay bookkeeping lives in the trajectory loop.
inline double lo_phase_increment(const LoPhaseModel& m, double t_minus_tau,
                                 double delayed_dW, double dt) {
    switch (m.mode) {
    case LoPhaseModel::Mode::Homodyne: return 0.0;
    case LoPhaseModel::Mode::Heterodyne: return m.detuning * dt;
    case LoPhaseModel::Mode::AdaptiveIntegral:
        return gain_value(m.strategy, t_minus_tau) * delayed_dW;
    }
    return 0.0;
}

/// Parses "opt", "const:<lambda>", "pw:<l1>,<l2>,<t_switch>".
/// The optimal law still needs a shape bound afterwards (bind_shape).
inline GainStrategy parse_strategy(std::string_view spec,
                                   const std::optional<ModeShape>& shape = std::nullopt) {
    auto to_d = [&](std::string_view v) {
        try {
            return std::stod(std::string(v));
        } catch (const std::logic_error&) {
            throw InvalidParameter("bad number in strategy spec '" + std::string(spec) + "'");
        }
    };
    if (spec == "opt") {
        if (!shape) throw InvalidParameter("strategy 'opt' requires a mode shape");
        return GainStrategy::optimal(*shape);
    }
    if (spec.rfind("const:", 0) == 0) return GainStrategy::constant(to_d(spec.substr(6)));
    if (spec.rfind("pw:", 0) == 0) {
        std::string rest(spec.substr(3));
        std::replace(rest.begin(), rest.end(), ',', ' ');
        std::istringstream in(rest);
        double l1, l2, tl;
        if (!(in >> l1 >> l2 >> tl))
            throw InvalidParameter("strategy 'pw' takes pw:<l1>,<l2>,<t_l>");
        return GainStrategy::piecewise(l1, l2, tl);
    }
    throw InvalidParameter("unknown strategy '" + std::string(spec) +
                           "' (expected opt|const:<l>|pw:<l1>,<l2>,<t_l>)");
}

/// Parses "homodyne[:phi0]", "heterodyne[:delta]",
/// "adaptive:<strategy>[:tau=<tau>]".
inline LoPhaseModel parse_lo_model(std::string_view spec,
                                   const std::optional<ModeShape>& shape = std::nullopt) {
    auto to_d = [&](std::string_view v) {
        try {
            return std::stod(std::string(v));
        } catch (const std::logic_error&) {
            throw InvalidParameter("bad number in LO spec '" + std::string(spec) + "'");
        }
    };
    if (spec == "homodyne") return LoPhaseModel::homodyne();
    if (spec.rfind("homodyne:", 0) == 0)
        return LoPhaseModel::homodyne(to_d(spec.substr(9)));
    if (spec == "heterodyne") return LoPhaseModel::heterodyne();
    if (spec.rfind("heterodyne:", 0) == 0)
        return LoPhaseModel::heterodyne(to_d(spec.substr(11)));
    if (spec.rfind("adaptive:", 0) == 0) {
        std::string_view rest = spec.substr(9);
        double tau = 0.0;
        if (auto pos = rest.rfind(":tau="); pos != std::string_view::npos) {
            tau = to_d(rest.substr(pos + 5));
            rest = rest.substr(0, pos);
        }
        return LoPhaseModel::adaptive(parse_strategy(rest, shape), tau);
    }
    throw InvalidParameter("unknown LO model '" + std::string(spec) +
                           "' (expected homodyne|heterodyne|adaptive:...)");
}

} // namespace dynelab
