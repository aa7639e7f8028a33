#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <dynelab/common.hpp>
#include <dynelab/feedback.hpp>
#include <dynelab/modeshape.hpp>
#include <dynelab/quadrature.hpp>

namespace dynelab {

enum class MeritMethod { QuadratureZeroDelay, QuadratureDelay, ClosedForm };

struct AnalyticMerit {
    double f_tilde = 0.0;
    double error_estimate = 0.0;
    MeritMethod method = MeritMethod::ClosedForm;
};

/// Panel refinement exhausted without reaching the requested tolerance.
class ToleranceNotMet : public std::runtime_error {
public:
    ToleranceNotMet(AnalyticMerit best_, double tol)
        : std::runtime_error("quadrature tolerance " + std::to_string(tol) +
                             " not met (best error estimate " +
                             std::to_string(best_.error_estimate) + ")"),
          best(best_) {}
    AnalyticMerit best;
};

namespace detail {

inline const char* method_name(MeritMethod m) {
    switch (m) {
    case MeritMethod::QuadratureZeroDelay: return "quad0";
    case MeritMethod::QuadratureDelay: return "quad";
    case MeritMethod::ClosedForm: return "closed";
    }
    return "?";
}

/// Shared pieces of the approximate-merit integrands.
struct MeritIntegrand {
    const ModeShape& shape;
    const GainStrategy& strategy;
    Interval sup;          // truncated effective support
    std::vector<double> time_breaks; // kinks of u and lambda (plus tau images)
    bool edge_singular;    // lambda_opt diverges at the support start

    MeritIntegrand(const ModeShape& shape_, const GainStrategy& strategy_, double tau,
                   double trunc_eps)
        : shape(shape_), strategy(strategy_) {
        sup = effective_support(shape, trunc_eps);
        double kinks[2];
        const int nk = shape_kinks(shape, kinks);
        std::vector<double> base(kinks, kinks + nk);
        if (strategy.kind == GainStrategy::Kind::PiecewiseConstant)
            base.push_back(strategy.t_switch);
        for (double x : base)
            for (double off : {0.0, tau, -tau, 2.0 * tau})
                time_breaks.push_back(x + off);
        edge_singular = strategy.kind == GainStrategy::Kind::OptimalAdaptive &&
                        std::isfinite(support(shape).lo) &&
                        cumulative(shape, support(shape).lo) == 0.0;
    }

    // sqrt(u(x)) * lambda(x) with the exact (unclamped) optimal gain
    double g(double x) const {
        const double u = density(shape, x);
        if (u <= 0.0) return 0.0;
        return std::sqrt(u) * gain_value_exact(strategy, x);
    }

    // exp(-c * int_a^b lambda^2); zero when the window reaches U = 0
    double expv(double c, double a, double b) const {
        const double v = phase_variance(strategy, a, b);
        return std::isinf(v) ? 0.0 : std::exp(-c * v);
    }

    // boundary-layer width for exp(-rate * lambda^2 * x) anchored at x0
    double layer(double rate, double x0) const {
        double l = gain_value(strategy, x0); // clamped value is fine for grading
        return 0.5 / (1.0 + rate * l * l);
    }

    double edge_grade(double range) const { return edge_singular ? 1e-4 * range : 0.0; }
};

template <typename Eval>
AnalyticMerit refine_to_tolerance(Eval&& eval, const QuadratureConfig& cfg, MeritMethod method) {
    cfg.validate();
    const int max_level = std::max(1, cfg.max_refine);
    double prev = eval(0);
    AnalyticMerit best{prev, inf, method};
    for (int level = 1; level <= max_level; ++level) {
        const double cur = eval(level);
        best.f_tilde = cur;
        best.error_estimate = std::abs(cur - prev);
        prev = cur;
        if (best.error_estimate < cfg.tol) return best;
    }
    throw ToleranceNotMet(best, cfg.tol);
}

} // namespace detail

/// F~ by quadrature of the zero-delay double/triple integrals.  The inner
/// exponent integrals int lambda^2 come from feedback::phase_variance in
/// closed form, so only the (t, s) and (v, s, t) time axes are numeric;
/// the innermost and outermost factors are separable per s and the triple
/// term costs O(N^2).
inline AnalyticMerit merit_quadrature_zero_delay(const ModeShape& shape,
                                                 const GainStrategy& strategy,
                                                 const QuadratureConfig& cfg = {}) {
    const detail::MeritIntegrand mi(shape, strategy, 0.0, cfg.trunc_eps);
    const double slo = mi.sup.lo, shi = mi.sup.hi;
    const GaussRule& rule = gauss_legendre(cfg.nodes);

    auto eval = [&](int splits) {
        // T1 = int dt u_t int_{s<t} u_s (1 + e^{-2 int_s^t l^2})/4
        PanelAxis t_axis(slo, shi, mi.time_breaks, mi.edge_grade(shi - slo), 0.0, splits);
        const double T1 = t_axis.integrate(
            [&](double t) {
                const double ut = density(shape, t);
                if (ut <= 0.0) return 0.0;
                PanelAxis s_axis(slo, t, mi.time_breaks, 0.0, mi.layer(2.0, t), splits);
                const double inner = s_axis.integrate(
                    [&](double s) {
                        return density(shape, s) * 0.25 * (1.0 + mi.expv(2.0, s, t));
                    },
                    rule);
                return ut * inner;
            },
            rule);

        // T2 = int ds g(s) J(s) B(s) with
        //   J(s) = int_{v<s} g(v) e^{-int_v^s l^2 / 2},
        //   B(s) = int_{t>s} u_t e^{-2 int_s^t l^2}
        PanelAxis s_axis(slo, shi, mi.time_breaks, mi.edge_grade(shi - slo), 0.0, splits);
        const double T2 = s_axis.integrate(
            [&](double s) {
                const double gs = mi.g(s);
                if (gs == 0.0) return 0.0;
                PanelAxis v_axis(slo, s, mi.time_breaks, mi.edge_grade(s - slo),
                                 mi.layer(0.5, s), splits);
                const double J = v_axis.integrate(
                    [&](double v) { return mi.g(v) * mi.expv(0.5, v, s); }, rule);
                PanelAxis b_axis(s, shi, mi.time_breaks, mi.layer(2.0, s), 0.0, splits);
                const double B = b_axis.integrate(
                    [&](double t) { return density(shape, t) * mi.expv(2.0, s, t); }, rule);
                return gs * J * B;
            },
            rule);

        return 1.0 - T1 + T2;
    };

    return detail::refine_to_tolerance(eval, cfg, MeritMethod::QuadratureZeroDelay);
}

namespace detail {

/// Single evaluation of the delay expression at one panel-splitting level;
/// the public operation wraps this in the refinement loop and the optimizer
/// calls it directly as its fast search path.
inline double merit_delay_value(const ModeShape& shape, const GainStrategy& strategy,
                                double tau, const QuadratureConfig& cfg, int splits) {
    const detail::MeritIntegrand mi(shape, strategy, tau, cfg.trunc_eps);
    const double slo = mi.sup.lo, shi = mi.sup.hi;
    const GaussRule& rule = gauss_legendre(cfg.nodes);

    {
        PanelAxis t_axis(slo, shi, mi.time_breaks, mi.edge_grade(shi - slo), 0.0, splits);
        const double T1 = t_axis.integrate(
            [&](double t) {
                const double ut = density(shape, t);
                if (ut <= 0.0) return 0.0;
                PanelAxis s_axis(slo, t, mi.time_breaks, 0.0, mi.layer(2.0, t - tau), splits);
                const double inner = s_axis.integrate(
                    [&](double s) {
                        return density(shape, s) * 0.25 * (1.0 + mi.expv(2.0, s - tau, t - tau));
                    },
                    rule);
                return ut * inner;
            },
            rule);

        double T23 = 0.0;
        if (shi - tau > slo) {
            // delta-axis breakpoints relative to s, reused per outer node
            auto delta_breaks = [&](double s) {
                std::vector<double> d;
                d.reserve(2 * mi.time_breaks.size());
                for (double x : mi.time_breaks) {
                    d.push_back(s - x);
                    d.push_back(s - tau - x);
                }
                return d;
            };
            PanelAxis s_axis(slo, shi - tau, mi.time_breaks, mi.edge_grade(shi - tau - slo),
                             0.0, splits);
            T23 = s_axis.integrate(
                [&](double s) {
                    const double gs = mi.g(s);
                    if (gs == 0.0) return 0.0;

                    PanelAxis b_axis(s + tau, shi, mi.time_breaks, mi.layer(2.0, s), 0.0,
                                     splits);
                    const double B = b_axis.integrate(
                        [&](double t) {
                            return density(shape, t) * mi.expv(2.0, s - tau, t - tau);
                        },
                        rule);
                    if (B == 0.0) return 0.0;

                    const auto dbreaks = delta_breaks(s);
                    auto w_integrand = [&](double d) {
                        return mi.g(s - d) * mi.expv(0.5, s - d - tau, s - tau);
                    };
                    const double dmax = s - slo;
                    double W2 = 0.0, W3 = 0.0;
                    if (tau > 0.0 && dmax > 0.0) {
                        PanelAxis w2_axis(0.0, std::min(tau, dmax), dbreaks,
                                          mi.layer(0.5, s - tau), 0.0, splits);
                        W2 = w2_axis.integrate(w_integrand, rule);
                    }
                    if (dmax > tau) {
                        PanelAxis w3_axis(tau, dmax, dbreaks, mi.layer(0.5, s - 2.0 * tau),
                                          0.0, splits);
                        W3 = w3_axis.integrate(w_integrand, rule);
                    }
                    return gs * (2.0 * W2 + W3) * B;
                },
                rule);
        }

        return 1.0 - T1 + T23;
    }
}

} // namespace detail

/// F~ by quadrature of the delayed-feedback expression: exponent windows are
/// shifted by tau exactly as written, the delta integral splits at delta =
/// tau (weight 2 below, 1 above), and the (t, Delta, delta) domain is
/// integrated as s = t - Delta with the delta and t factors cached per s.
inline AnalyticMerit merit_quadrature_delay(const ModeShape& shape,
                                            const GainStrategy& strategy, double tau,
                                            const QuadratureConfig& cfg = {}) {
    if (!(tau >= 0.0)) throw InvalidParameter("delay tau must be >= 0");
    auto eval = [&](int splits) {
        return detail::merit_delay_value(shape, strategy, tau, cfg, splits);
    };
    return detail::refine_to_tolerance(eval, cfg, MeritMethod::QuadratureDelay);
}

namespace detail {

// Direct evaluation of the rectangular closed form; cancels catastrophically
// for small lambda^2 T, see rect_series below.
inline double rect_direct(double T, double g, double tau) {
    const double T2 = T * T;
    return 7.0 / 8.0 - 1.0 / (8.0 * T * g) + 1.0 / (16.0 * T2 * g * g)
         + std::exp(-2.0 * g * tau) * (2.0 / (T * g) - 2.0 * tau / (T2 * g) - 5.0 / (T2 * g * g))
         + std::exp(-2.5 * g * tau) * (-1.0 / (T * g) + 2.0 * tau / (T2 * g) + 2.5 / (T2 * g * g))
         + std::exp(-2.0 * T * g + 1.5 * g * tau) / (6.0 * T2 * g * g)
         + 8.0 * std::exp(-0.5 * T * g - 1.5 * g * tau) / (3.0 * T2 * g * g)
         - 19.0 * std::exp(-2.0 * T * g) / (48.0 * T2 * g * g);
}

// Taylor series of the same expression in g = lambda^2 (exact through g^4).
inline double rect_series(double T, double g, double tau) {
    const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T, T6 = T5 * T;
    const double u = tau, u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u, u6 = u5 * u;
    const double c1 = (T3 - 4.0 * T * u2 + 4.0 * u3) / (4.0 * T2);
    const double c2 = -(7.0 * T4 + 12.0 * T3 * u - 36.0 * T2 * u2 - 24.0 * T * u3 + 58.0 * u4) /
                      (48.0 * T2);
    const double c3 = (29.0 * T5 + 75.0 * T4 * u - 150.0 * T3 * u2 - 310.0 * T * u4 +
                       510.0 * u5) / (480.0 * T2);
    const double c4 = -(117.0 * T6 + 378.0 * T5 * u - 765.0 * T4 * u2 + 540.0 * T3 * u3 -
                        810.0 * T2 * u4 - 1980.0 * T * u5 + 3722.0 * u6) / (5760.0 * T2);
    return 0.75 + g * (c1 + g * (c2 + g * (c3 + g * c4)));
}

} // namespace detail

/// F~ for constant gain in closed form, one expression per mode shape.
///
/// These are the Appendix-B results re-derived from the delay expression and
/// corrected where the printed versions are garbled: the falling-exponential
/// bracket is [1 - 2 e^{-(k+2l^2)tau} + e^{-(5/2)(k+l^2)tau}] and the
/// bilateral form's final term enters with a plus sign.  Quadrature of the
/// delay expression is the ground truth the tests hold these to.
inline AnalyticMerit merit_closed_form_constant(const ModeShape& shape, double lambda,
                                                double tau) {
    if (!(lambda > 0.0)) throw InvalidParameter("closed form requires lambda > 0");
    if (!(tau >= 0.0)) throw InvalidParameter("delay tau must be >= 0");
    const double g = lambda * lambda;
    const double r = shape.rate;
    double f = 0.0;
    switch (shape.kind) {
    case ShapeKind::Rectangular: {
        if (!(tau < 0.5 * r))
            throw ClosedFormOutOfRange(
                "rectangular closed form is valid for tau < T/2; use quadrature");
        f = (g * r < 0.01) ? detail::rect_series(r, g, tau) : detail::rect_direct(r, g, tau);
        break;
    }
    case ShapeKind::BilateralExp: {
        const double K = r, K2 = K * K, K3 = K2 * K, K4 = K3 * K;
        const double g2 = g * g, g3 = g2 * g, g4 = g3 * g;
        const double N = 6.0 * K4 + 23.0 * K3 * g + 34.0 * K2 * g2 + 21.0 * K * g3 + 4.0 * g4
            - 2.0 * K * g * (K2 + 3.0 * K * g + 2.0 * g2) * std::exp(-2.5 * tau * (K + g))
            - 8.0 * K * g *
                  (3.0 * K3 * tau + 7.0 * K2 * (g * tau + 1.0) + 2.0 * K * g * (g * tau + 5.0) +
                   2.0 * g2) * std::exp(-tau * (K + 2.0 * g))
            + 2.0 * K * g * (3.0 * K + g) *
                  (2.0 * K2 * tau + K * (4.0 * g * tau + 5.0) + 6.0 * g) *
                  std::exp(-0.5 * tau * (3.0 * K + 5.0 * g));
        const double den = K + 2.0 * g;
        f = 1.0 - N / (8.0 * den * den * (3.0 * K2 + 4.0 * K * g + g2));
        break;
    }
    case ShapeKind::FallingExp: {
        const double k = r;
        const double num = 3.0 * k * k +
                           4.0 * k * g *
                               (1.0 - 2.0 * std::exp(-(k + 2.0 * g) * tau) +
                                std::exp(-2.5 * (k + g) * tau)) +
                           g * g;
        f = 1.0 - num / (4.0 * (3.0 * k * k + 7.0 * k * g + 2.0 * g * g));
        break;
    }
    case ShapeKind::RisingExp: {
        const double k = r;
        const double num = k * k +
                           2.0 * k * g *
                               (1.0 - 4.0 * std::exp(-(k + 2.0 * g) * tau) +
                                2.0 * std::exp(-0.5 * (3.0 * k + 5.0 * g) * tau)) +
                           g * g;
        f = 1.0 - num / (4.0 * (k * k + 3.0 * k * g + 2.0 * g * g));
        break;
    }
    }
    return {f, 0.0, MeritMethod::ClosedForm};
}

inline AnalyticMerit merit_closed_form_constant(ShapeKind kind, double lambda, double tau) {
    return merit_closed_form_constant(normalized(kind), lambda, tau);
}

} // namespace dynelab
