#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <dynelab/analytic.hpp>
#include <dynelab/common.hpp>
#include <dynelab/feedback.hpp>
#include <dynelab/modeshape.hpp>

namespace dynelab {

enum class GainFamily { Constant, Piecewise };
enum class ObjectiveKind { ClosedForm, Quadrature };

struct OptimizerOptions {
    QuadratureConfig quad;          // config for final (reported) values
    double lambda_lo = 1e-2;
    double lambda_hi = 1e2;
    int coarse_points = 41;         // log-spaced scan of the constant gain
    double lambda_xtol = 1e-5;      // golden-section termination |dlambda|
    double f_tol = 1e-6;            // simplex objective tolerance
    int nm_max_evals = 220;         // per start
    int widen_rounds = 2;           // bound widening x10, at most twice
    int search_nodes = 12;          // quadrature nodes for in-search evaluations
};

struct OptimizationResult {
    ShapeKind shape = ShapeKind::Rectangular;
    double tau = 0.0;
    GainFamily family = GainFamily::Constant;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double t_switch = 0.0;
    double f_tilde_star = 0.0;
    long evaluations = 0;
    bool converged = false;
    std::string error; // per-point failure note for sweep rows
};

namespace detail {

/// Golden-section maximization on [a, b] to |b - a| < xtol.
template <typename F>
double golden_max(F&& f, double a, double b, double xtol, long& evals) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    evals += 2;
    while (b - a > xtol) {
        if (fc >= fd) { // ties move toward smaller lambda
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
        ++evals;
    }
    return 0.5 * (a + b);
}

/// Nelder-Mead maximization, returns best point found.
template <typename F>
std::pair<std::vector<double>, double> nelder_mead_max(F&& f, std::vector<double> x0,
                                                       const std::vector<double>& step,
                                                       double ftol, int max_evals,
                                                       long& evals) {
    const std::size_t n = x0.size();
    struct Vertex {
        std::vector<double> x;
        double fv;
    };
    std::vector<Vertex> simplex;
    simplex.push_back({x0, f(x0)});
    ++evals;
    for (std::size_t i = 0; i < n; ++i) {
        auto x = x0;
        x[i] += step[i];
        simplex.push_back({x, f(x)});
        ++evals;
    }
    auto order = [&] {
        std::sort(simplex.begin(), simplex.end(),
                  [](const Vertex& a, const Vertex& b) { return a.fv > b.fv; });
    };
    order();
    int used = static_cast<int>(n) + 1;
    while (used < max_evals) {
        if (simplex.front().fv - simplex.back().fv < ftol) break;
        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t v = 0; v + 1 < simplex.size(); ++v) centroid[i] += simplex[v].x[i];
            centroid[i] /= static_cast<double>(n);
        }
        auto blend = [&](double coef) {
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i)
                x[i] = centroid[i] + coef * (centroid[i] - simplex.back().x[i]);
            return x;
        };
        auto xr = blend(1.0);
        double fr = f(xr);
        ++used, ++evals;
        if (fr > simplex.front().fv) {
            auto xe = blend(2.0);
            double fe = f(xe);
            ++used, ++evals;
            simplex.back() = fe > fr ? Vertex{xe, fe} : Vertex{xr, fr};
        } else if (fr > simplex[simplex.size() - 2].fv) {
            simplex.back() = {xr, fr};
        } else {
            auto xc = blend(fr > simplex.back().fv ? 0.5 : -0.5);
            double fc = f(xc);
            ++used, ++evals;
            if (fc > std::max(fr, simplex.back().fv)) {
                simplex.back() = {xc, fc};
            } else { // shrink toward the best vertex
                for (std::size_t v = 1; v < simplex.size(); ++v) {
                    for (std::size_t i = 0; i < n; ++i)
                        simplex[v].x[i] =
                            simplex[0].x[i] + 0.5 * (simplex[v].x[i] - simplex[0].x[i]);
                    simplex[v].fv = f(simplex[v].x);
                    ++used, ++evals;
                }
            }
        }
        order();
    }
    return {simplex.front().x, simplex.front().fv};
}

} // namespace detail

/// Maximizes F~ over a constant gain: coarse log-spaced scan of
/// [lambda_lo, lambda_hi] (widened at most widen_rounds times when the
/// optimum lands on a bound; for large delays the true supremum is the
/// heterodyne plateau at lambda -> inf) followed by golden-section
/// refinement to |dlambda| < lambda_xtol.
inline OptimizationResult optimize_constant_gain(const ModeShape& shape, double tau,
                                                 ObjectiveKind objective,
                                                 const OptimizerOptions& opts = {}) {
    if (!(tau >= 0.0)) throw InvalidParameter("delay tau must be >= 0");
    QuadratureConfig search_cfg = opts.quad;
    search_cfg.nodes = opts.search_nodes;

    long evals = 0;
    auto objective_fn = [&](double lambda) {
        if (objective == ObjectiveKind::ClosedForm)
            return merit_closed_form_constant(shape, lambda, tau).f_tilde;
        // single-level evaluation; the reported optimum is re-evaluated below
        return detail::merit_delay_value(shape, GainStrategy::constant(lambda), tau,
                                         search_cfg, 1);
    };

    double lo = opts.lambda_lo, hi = opts.lambda_hi;
    double best_lambda = lo;
    double best_f = -inf;
    bool flat = true;
    for (int round = 0;; ++round) {
        const int n = std::max(5, opts.coarse_points);
        int best_i = 0;
        best_f = -inf;
        std::vector<double> lams(n), fv(n);
        for (int i = 0; i < n; ++i) {
            lams[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
            fv[i] = objective_fn(lams[i]);
            ++evals;
            if (fv[i] > best_f) {
                best_f = fv[i];
                best_i = i;
            }
        }
        flat = *std::max_element(fv.begin(), fv.end()) -
                   *std::min_element(fv.begin(), fv.end()) <
               1e-12;
        if (flat) {
            best_lambda = lams.front();
            break;
        }
        if (best_i == n - 1 && round < opts.widen_rounds) {
            hi *= 10.0;
            continue;
        }
        if (best_i == 0 && round < opts.widen_rounds) {
            lo /= 10.0;
            continue;
        }
        const double bl = best_i > 0 ? lams[best_i - 1] : lams[best_i];
        const double br = best_i < n - 1 ? lams[best_i + 1] : lams[best_i];
        best_lambda = detail::golden_max(objective_fn, bl, br, opts.lambda_xtol, evals);
        break;
    }

    OptimizationResult res;
    res.shape = shape.kind;
    res.tau = tau;
    res.family = GainFamily::Constant;
    res.lambda1 = res.lambda2 = best_lambda;
    res.t_switch = 0.0;
    res.f_tilde_star = objective == ObjectiveKind::ClosedForm
                           ? merit_closed_form_constant(shape, best_lambda, tau).f_tilde
                           : merit_quadrature_delay(shape, GainStrategy::constant(best_lambda),
                                                    tau, opts.quad)
                                 .f_tilde;
    res.evaluations = evals + 1;
    res.converged = !flat;
    return res;
}

/// Maximizes F~ over (lambda1, lambda2, t_l) against the delay quadrature:
/// multi-start Nelder-Mead in (log lambda1, log lambda2, t_l), starts at the
/// corners and center of the log-gain box plus the constant-gain optimum,
/// best of all starts, lexicographic tie-break toward smaller gains.
inline OptimizationResult optimize_piecewise_gain(const ModeShape& shape, double tau,
                                                  const OptimizerOptions& opts = {},
                                                  const OptimizationResult* warm = nullptr) {
    if (!(tau >= 0.0)) throw InvalidParameter("delay tau must be >= 0");
    QuadratureConfig search_cfg = opts.quad;
    search_cfg.nodes = opts.search_nodes;

    const Interval sup = effective_support(shape, opts.quad.trunc_eps);
    const double t_lo = sup.lo, t_hi = sup.hi + tau;
    const double t_mid = 0.5 * (t_lo + t_hi);

    long evals = 0;
    const double log_min = std::log(1e-3), log_max = std::log(1e3);
    auto objective_fn = [&](const std::vector<double>& x) {
        const double l1 = std::exp(std::clamp(x[0], log_min, log_max));
        const double l2 = std::exp(std::clamp(x[1], log_min, log_max));
        // single-level evaluation; the reported optimum is re-evaluated below
        return detail::merit_delay_value(shape, GainStrategy::piecewise(l1, l2, x[2]), tau,
                                         search_cfg, 0);
    };

    // constant-gain baseline doubles as a start: piecewise can only improve
    ObjectiveKind base_obj = ObjectiveKind::Quadrature;
    if (shape.kind != ShapeKind::Rectangular || tau < 0.5 * shape.rate)
        base_obj = ObjectiveKind::ClosedForm;
    const OptimizationResult base = optimize_constant_gain(shape, tau, base_obj, opts);
    evals += base.evaluations;

    const double llo = std::log(opts.lambda_lo), lhi = std::log(opts.lambda_hi);
    const double lmid = 0.5 * (llo + lhi);
    std::vector<std::vector<double>> starts = {
        {std::log(base.lambda1), std::log(base.lambda1), t_mid},
        {llo, llo, t_mid},
        {llo, lhi, t_mid},
        {lhi, llo, t_mid},
        {lhi, lhi, t_mid},
        {lmid, lmid, t_lo + 0.25 * (t_hi - t_lo)},
        {lmid, lmid, t_mid},
        {lmid, lmid, t_lo + 0.75 * (t_hi - t_lo)},
    };
    if (warm && warm->family == GainFamily::Piecewise && warm->converged)
        starts.push_back({std::log(std::max(warm->lambda1, 1e-3)),
                          std::log(std::max(warm->lambda2, 1e-3)), warm->t_switch});

    const std::vector<double> step = {0.4, 0.4, 0.15 * (t_hi - t_lo)};
    std::vector<double> best_x;
    double best_f = -inf;
    int converged_starts = 0;
    for (const auto& s0 : starts) {
        try {
            auto [x, fv] =
                detail::nelder_mead_max(objective_fn, s0, step, opts.f_tol, opts.nm_max_evals,
                                        evals);
            ++converged_starts;
            const bool better = fv > best_f + 1e-9;
            const bool tie = std::abs(fv - best_f) <= 1e-9;
            if (better || (tie && std::make_pair(x[0], x[1]) <
                                      std::make_pair(best_x[0], best_x[1]))) {
                best_f = fv;
                best_x = x;
            }
        } catch (const std::exception&) {
            // non-convergent start: skip, fatal only if every start fails
        }
    }

    OptimizationResult res;
    res.shape = shape.kind;
    res.tau = tau;
    res.family = GainFamily::Piecewise;
    res.evaluations = evals;
    if (converged_starts == 0) {
        res.converged = false;
        res.error = "no Nelder-Mead start converged";
        return res;
    }
    res.lambda1 = std::exp(std::clamp(best_x[0], log_min, log_max));
    res.lambda2 = std::exp(std::clamp(best_x[1], log_min, log_max));
    res.t_switch = best_x[2];
    res.f_tilde_star =
        merit_quadrature_delay(shape,
                               GainStrategy::piecewise(res.lambda1, res.lambda2, res.t_switch),
                               tau, opts.quad)
            .f_tilde;
    ++res.evaluations;
    res.converged = true;
    return res;
}

/// One optimization per grid point, warm-started from the previous optimum.
/// Per-point failures are recorded in-row; the sweep continues.
inline std::vector<OptimizationResult> delay_sweep(const ModeShape& shape, GainFamily family,
                                                   const std::vector<double>& tau_grid,
                                                   const OptimizerOptions& opts = {}) {
    for (std::size_t i = 0; i + 1 < tau_grid.size(); ++i)
        if (!(tau_grid[i] <= tau_grid[i + 1]))
            throw InvalidParameter("tau grid must be sorted ascending");
    std::vector<OptimizationResult> results;
    results.reserve(tau_grid.size());
    const OptimizationResult* prev = nullptr;
    for (double tau : tau_grid) {
        OptimizationResult row;
        try {
            if (family == GainFamily::Constant) {
                ObjectiveKind obj = ObjectiveKind::Quadrature;
                if (shape.kind != ShapeKind::Rectangular || tau < 0.5 * shape.rate)
                    obj = ObjectiveKind::ClosedForm;
                row = optimize_constant_gain(shape, tau, obj, opts);
            } else {
                row = optimize_piecewise_gain(shape, tau, opts, prev);
            }
        } catch (const std::exception& e) {
            row.shape = shape.kind;
            row.tau = tau;
            row.family = family;
            row.converged = false;
            row.error = e.what();
        }
        results.push_back(std::move(row));
        prev = &results.back();
    }
    return results;
}

} // namespace dynelab
