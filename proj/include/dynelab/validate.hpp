#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <dynelab/analytic.hpp>
#include <dynelab/common.hpp>
#include <dynelab/feedback.hpp>
#include <dynelab/merit.hpp>
#include <dynelab/modeshape.hpp>
#include <dynelab/optimizer.hpp>
#include <dynelab/trajectory.hpp>

namespace dynelab {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline const std::vector<ShapeKind>& all_kinds() {
    static const std::vector<ShapeKind> kinds = {
        ShapeKind::RisingExp, ShapeKind::BilateralExp, ShapeKind::Rectangular,
        ShapeKind::FallingExp};
    return kinds;
}

struct CheckSet {
    bool ok = true;
    std::ostringstream detail;
    int shown = 0;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (shown < 6) detail << (shown ? "; " : "") << what;
            ++shown;
        }
    }
    std::string summary(const std::string& pass_msg) const {
        if (ok) return pass_msg;
        std::string s = detail.str();
        if (shown > 6) s += "; (+" + std::to_string(shown - 6) + " more)";
        return s;
    }
};

inline std::string fmt(double x) {
    std::ostringstream os;
    os.precision(10);
    os << x;
    return os.str();
}

} // namespace detail

/// The full cross-check suite; one entry per acceptance criterion.
/// `log` (when given) receives one PASS/FAIL line per criterion as it runs.
inline std::vector<CriterionResult> run_acceptance_criteria(std::uint64_t base_seed = 0x12345678ULL,
                                                            std::ostream* log = nullptr) {
    using detail::all_kinds;
    using detail::CheckSet;
    using detail::fmt;

    std::vector<CriterionResult> results;
    auto add = [&](int id, const std::string& name, bool pass, const std::string& detail_msg) {
        if (log)
            (*log) << (pass ? "PASS" : "FAIL") << " criterion " << id << " [" << name << "]: "
                   << detail_msg << std::endl;
        results.push_back({id, name, pass, detail_msg});
    };
    auto guarded = [&](int id, const std::string& name, auto&& body) {
        try {
            body();
        } catch (const std::exception& e) {
            add(id, name, false, std::string("exception: ") + e.what());
        }
    };

    // 1. Table 1 reproduction: constants exact, MC homodyne/heterodyne at 3 sigma.
    guarded(1, "table1", [&] {
        CheckSet c;
        const auto rows = table1();
        c.expect(std::abs(rows[0].exact_f - std::sqrt(2.0 / pi)) <= 1e-12, "homodyne exact");
        c.expect(std::abs(rows[1].exact_f - 0.5 * std::sqrt(pi)) <= 1e-12, "heterodyne exact");
        c.expect(std::abs(rows[2].exact_f - 1.0) <= 1e-12, "adaptive exact");
        c.expect(std::abs(rows[0].approx_f - 0.75) <= 1e-12, "homodyne approx");
        c.expect(std::abs(rows[1].approx_f - 0.875) <= 1e-12, "heterodyne approx");
        c.expect(std::abs(rows[2].approx_f - 1.0) <= 1e-12, "adaptive approx");
        c.expect(std::abs(approx_merit_from_m4(3.0) - 0.75) <= 1e-12, "F~(m4=3)");
        c.expect(std::abs(approx_merit_from_m4(2.0) - 0.875) <= 1e-12, "F~(m4=2)");

        const ModeShape rect = normalized(ShapeKind::Rectangular);
        SimulationConfig sim;
        sim.n_traj = 100000;
        sim.dt = 1e-3;
        sim.base_seed = base_seed;
        const auto hom = estimate_merit(rect, LoPhaseModel::homodyne(), sim);
        c.expect(std::abs(hom.f_hat - homodyne_exact()) < 3.0 * hom.f_se,
                 "MC homodyne f_hat=" + fmt(hom.f_hat) + " se=" + fmt(hom.f_se));
        const auto het = estimate_merit(rect, LoPhaseModel::heterodyne(), sim);
        c.expect(std::abs(het.f_hat - heterodyne_exact()) < 3.0 * het.f_se,
                 "MC heterodyne f_hat=" + fmt(het.f_hat) + " se=" + fmt(het.f_se));
        add(1, "table1", c.ok,
            c.summary("constants exact; homodyne " + fmt(hom.f_hat) + "+-" + fmt(hom.f_se) +
                      ", heterodyne " + fmt(het.f_hat) + "+-" + fmt(het.f_se)));
    });

    // 2. Canonical cancellation: zero-delay quadrature with lambda_opt gives 1.
    guarded(2, "canonical-cancellation", [&] {
        CheckSet c;
        QuadratureConfig q;
        q.nodes = 16;
        q.max_refine = 4;
        q.tol = 1e-8;
        std::string vals;
        for (ShapeKind kind : all_kinds()) {
            const ModeShape shape = normalized(kind);
            const auto m = merit_quadrature_zero_delay(shape, GainStrategy::optimal(shape), q);
            vals += std::string(shape_name(kind)) + "=" + fmt(m.f_tilde) + " ";
            c.expect(std::abs(m.f_tilde - 1.0) <= 1e-6,
                     std::string(shape_name(kind)) + " F~=" + fmt(m.f_tilde));
        }
        add(2, "canonical-cancellation", c.ok, c.summary(vals));
    });

    // 3. Rising-exponential constant-gain optimum: lambda* = sqrt(2), F~ = 1.
    guarded(3, "rising-optimum", [&] {
        CheckSet c;
        const auto res = optimize_constant_gain(normalized(ShapeKind::RisingExp), 0.0,
                                                ObjectiveKind::ClosedForm);
        c.expect(std::abs(res.lambda1 - std::sqrt(2.0)) <= 1e-4, "lambda*=" + fmt(res.lambda1));
        c.expect(std::abs(res.f_tilde_star - 1.0) <= 1e-5, "F~*=" + fmt(res.f_tilde_star));
        add(3, "rising-optimum", c.ok,
            c.summary("lambda*=" + fmt(res.lambda1) + " F~*=" + fmt(res.f_tilde_star)));
    });

    // 4. Delay-limit consistency: tau = 0 delay quadrature equals the
    //    zero-delay quadrature for Constant(1).
    guarded(4, "tau0-limit", [&] {
        CheckSet c;
        QuadratureConfig q;
        q.nodes = 16;
        q.max_refine = 5;
        q.tol = 1e-9;
        const GainStrategy one = GainStrategy::constant(1.0);
        double worst = 0.0;
        for (ShapeKind kind : all_kinds()) {
            const ModeShape shape = normalized(kind);
            const double a = merit_quadrature_zero_delay(shape, one, q).f_tilde;
            const double b = merit_quadrature_delay(shape, one, 0.0, q).f_tilde;
            worst = std::max(worst, std::abs(a - b));
            c.expect(std::abs(a - b) < 1e-8,
                     std::string(shape_name(kind)) + " |diff|=" + fmt(std::abs(a - b)));
        }
        add(4, "tau0-limit", c.ok, c.summary("max |diff| = " + fmt(worst)));
    });

    // 5. Appendix-B oracle: corrected closed forms match the delay quadrature
    //    on the lambda x tau grid.
    guarded(5, "closed-vs-quadrature", [&] {
        CheckSet c;
        QuadratureConfig q;
        q.nodes = 14;
        q.max_refine = 4;
        q.tol = 1e-7;
        double worst = 0.0;
        for (ShapeKind kind : all_kinds()) {
            const ModeShape shape = normalized(kind);
            for (double lambda : {0.5, 1.0, 2.0, 4.0})
                for (double tau : {0.0, 0.05, 0.1, 0.2}) {
                    const double cf = merit_closed_form_constant(shape, lambda, tau).f_tilde;
                    const double qu =
                        merit_quadrature_delay(shape, GainStrategy::constant(lambda), tau, q)
                            .f_tilde;
                    const double diff = std::abs(cf - qu);
                    worst = std::max(worst, diff);
                    c.expect(diff < 1e-6, std::string(shape_name(kind)) + " l=" + fmt(lambda) +
                                              " tau=" + fmt(tau) + " diff=" + fmt(diff));
                }
        }
        add(5, "closed-vs-quadrature", c.ok, c.summary("max |diff| = " + fmt(worst)));
    });

    // 6. Asymptote suite: homodyne limit at lambda = 1e-3 and heterodyne
    //    limit at lambda = 1e3, via closed form and quadrature.
    guarded(6, "asymptotes", [&] {
        CheckSet c;
        QuadratureConfig q;
        q.nodes = 12;
        q.max_refine = 3;
        q.tol = 1e-6;
        for (ShapeKind kind : all_kinds()) {
            const ModeShape shape = normalized(kind);
            const std::string nm = shape_name(kind);
            for (double tau : {0.0, 0.1}) {
                const double cf = merit_closed_form_constant(shape, 1e-3, tau).f_tilde;
                c.expect(std::abs(cf - 0.75) <= 1e-3,
                         nm + " closed lam=1e-3 tau=" + fmt(tau) + " F~=" + fmt(cf));
                const double qu =
                    merit_quadrature_delay(shape, GainStrategy::constant(1e-3), tau, q).f_tilde;
                c.expect(std::abs(qu - 0.75) <= 1e-3,
                         nm + " quad lam=1e-3 tau=" + fmt(tau) + " F~=" + fmt(qu));
            }
            const double cf = merit_closed_form_constant(shape, 1e3, 0.1).f_tilde;
            c.expect(std::abs(cf - 0.875) <= 1e-3, nm + " closed lam=1e3 F~=" + fmt(cf));
            const double qu =
                merit_quadrature_delay(shape, GainStrategy::constant(1e3), 0.1, q).f_tilde;
            c.expect(std::abs(qu - 0.875) <= 1e-3, nm + " quad lam=1e3 F~=" + fmt(qu));
        }
        add(6, "asymptotes", c.ok, c.summary("all shapes at 0.75/0.875 within 1e-3"));
    });

    // 7. Completeness invariant: m2 within 3 sigma of 1 across the matrix.
    guarded(7, "completeness", [&] {
        CheckSet c;
        double worst_pull = 0.0;
        for (ShapeKind kind : all_kinds()) {
            const ModeShape shape = normalized(kind);
            const Interval sup = effective_support(shape);
            const double t_mid = 0.5 * (sup.lo + sup.hi);
            for (double tau : {0.0, 0.1}) {
                const std::vector<LoPhaseModel> models = {
                    LoPhaseModel::homodyne(),
                    LoPhaseModel::heterodyne(),
                    LoPhaseModel::adaptive(GainStrategy::constant(1.0), tau),
                    LoPhaseModel::adaptive(GainStrategy::piecewise(2.0, 1.0, t_mid), tau),
                };
                for (const auto& lo : models) {
                    SimulationConfig sim;
                    sim.n_traj = 10000;
                    sim.dt = 1e-3;
                    sim.base_seed = base_seed + 7;
                    sim = configured_for(sim, lo);
                    const auto est = estimate_merit(shape, lo, sim);
                    const double pull = std::abs(est.m2_hat - 1.0) / est.m2_se;
                    worst_pull = std::max(worst_pull, pull);
                    c.expect(pull < 3.0, std::string(shape_name(kind)) + " tau=" + fmt(tau) +
                                             " m2=" + fmt(est.m2_hat) + " pull=" + fmt(pull));
                }
            }
        }
        add(7, "completeness", c.ok, c.summary("worst |m2-1|/se = " + fmt(worst_pull)));
    });

    // 8. Fig. 3 qualitative reproduction: constant-gain delay sweep.
    guarded(8, "constant-gain-sweep", [&] {
        CheckSet c;
        std::vector<double> grid;
        for (int i = 0; i <= 10; ++i) grid.push_back(0.05 * i);
        std::map<ShapeKind, std::vector<OptimizationResult>> sweeps;
        for (ShapeKind kind : all_kinds())
            sweeps[kind] = delay_sweep(normalized(kind), GainFamily::Constant, grid);
        for (ShapeKind kind : all_kinds()) {
            const auto& rows = sweeps[kind];
            const std::string nm = shape_name(kind);
            for (std::size_t i = 0; i + 1 < rows.size(); ++i)
                c.expect(rows[i + 1].f_tilde_star <= rows[i].f_tilde_star + 1e-6,
                         nm + " not monotone at tau=" + fmt(rows[i + 1].tau));
            c.expect(rows[0].f_tilde_star > 0.875, nm + " tau=0 F~*=" + fmt(rows[0].f_tilde_star));
        }
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double rise = sweeps[ShapeKind::RisingExp][i].f_tilde_star;
            const double bil = sweeps[ShapeKind::BilateralExp][i].f_tilde_star;
            const double rect = sweeps[ShapeKind::Rectangular][i].f_tilde_star;
            const double fall = sweeps[ShapeKind::FallingExp][i].f_tilde_star;
            c.expect(rise >= bil - 1e-6 && bil >= rect - 1e-6 && rect >= fall - 1e-6,
                     "ordering broken at tau=" + fmt(grid[i]));
        }
        const double rise_03 = sweeps[ShapeKind::RisingExp][6].f_tilde_star; // tau = 0.3
        c.expect(rise_03 >= 0.875, "rising F~*(0.3)=" + fmt(rise_03));
        add(8, "constant-gain-sweep", c.ok,
            c.summary("monotone, ordered, rising F~*(0.3)=" + fmt(rise_03)));
    });

    // 9. Piecewise dominance and gain ordering at tau = 0.1.
    guarded(9, "piecewise-dominance", [&] {
        CheckSet c;
        for (ShapeKind kind : all_kinds()) {
            const ModeShape shape = normalized(kind);
            const std::string nm = shape_name(kind);
            for (double tau : {0.0, 0.1}) {
                ObjectiveKind obj = (kind != ShapeKind::Rectangular || tau < 0.5)
                                        ? ObjectiveKind::ClosedForm
                                        : ObjectiveKind::Quadrature;
                const auto cons = optimize_constant_gain(shape, tau, obj);
                const auto pw = optimize_piecewise_gain(shape, tau);
                c.expect(pw.converged, nm + " tau=" + fmt(tau) + " pw not converged");
                c.expect(pw.f_tilde_star >= cons.f_tilde_star - 1e-7,
                         nm + " tau=" + fmt(tau) + " pw=" + fmt(pw.f_tilde_star) +
                             " < const=" + fmt(cons.f_tilde_star));
                if (tau == 0.1) {
                    if (kind == ShapeKind::RisingExp)
                        c.expect(pw.lambda1 <= pw.lambda2,
                                 nm + " expected lambda1 <= lambda2, got " + fmt(pw.lambda1) +
                                     " > " + fmt(pw.lambda2));
                    else
                        c.expect(pw.lambda1 > pw.lambda2,
                                 nm + " expected lambda1 > lambda2, got " + fmt(pw.lambda1) +
                                     " <= " + fmt(pw.lambda2));
                }
            }
        }
        add(9, "piecewise-dominance", c.ok, c.summary("pw >= const and gain orderings hold"));
    });

    // 10. Protocol state check: rho2 from ideal adaptive and homodyne runs.
    guarded(10, "protocol-state", [&] {
        CheckSet c;
        const ModeShape rise = normalized(ShapeKind::RisingExp);
        SimulationConfig sim;
        sim.n_traj = 10000;
        sim.dt = 2e-4;
        sim.base_seed = base_seed + 17;
        const auto lo = LoPhaseModel::adaptive(GainStrategy::optimal(rise), 0.0);
        const Mat2c rho = simulate_protocol(rise, lo, sim);
        for (int r = 0; r < 2; ++r)
            for (int s = 0; s < 2; ++s)
                c.expect(std::abs(rho[r][s] - std::complex<double>(0.5, 0.0)) <= 0.02,
                         "ideal rho[" + std::to_string(r) + "][" + std::to_string(s) + "]=" +
                             fmt(rho[r][s].real()) + "+" + fmt(rho[r][s].imag()) + "i");

        const ModeShape rect = normalized(ShapeKind::Rectangular);
        SimulationConfig sim2;
        sim2.n_traj = 100000;
        sim2.dt = 1e-3;
        sim2.base_seed = base_seed + 23;
        const Mat2c rho_h = simulate_protocol(rect, LoPhaseModel::homodyne(), sim2);
        const auto est = estimate_merit(rect, LoPhaseModel::homodyne(), sim2);
        c.expect(std::abs(rho_h[0][1].real() - 0.5 * est.f_hat) <= 3.0 * est.f_se,
                 "homodyne off-diag " + fmt(rho_h[0][1].real()) + " vs f_hat/2 " +
                     fmt(0.5 * est.f_hat));
        double herm = 0.0, tr = 0.0;
        for (int r = 0; r < 2; ++r)
            for (int s = 0; s < 2; ++s)
                herm = std::max(herm, std::abs(rho_h[r][s] - std::conj(rho_h[s][r])));
        tr = (rho_h[0][0] + rho_h[1][1]).real();
        c.expect(herm <= 1e-12, "hermiticity " + fmt(herm));
        c.expect(std::abs(tr - 1.0) <= 3.0 * 2.0 * est.m2_se + 1e-3, "trace " + fmt(tr));
        add(10, "protocol-state", c.ok,
            c.summary("ideal rho01=" + fmt(rho[0][1].real()) + ", homodyne rho01=" +
                      fmt(rho_h[0][1].real()) + " ~ f_hat/2=" + fmt(0.5 * est.f_hat)));
    });

    // 11. MC vs analytic agreement for delayed constant gain at n = 1e5.
    guarded(11, "mc-analytic", [&] {
        CheckSet c;
        QuadratureConfig q;
        q.nodes = 14;
        q.max_refine = 4;
        q.tol = 1e-7;
        struct Point {
            ShapeKind kind;
            double lambda, tau;
        };
        const std::vector<Point> points = {
            {ShapeKind::Rectangular, 0.5, 0.0},  {ShapeKind::Rectangular, 2.0, 0.1},
            {ShapeKind::Rectangular, 1.0, 0.3},  {ShapeKind::BilateralExp, 1.0, 0.05},
            {ShapeKind::BilateralExp, 4.0, 0.2}, {ShapeKind::FallingExp, 0.7, 0.15},
            {ShapeKind::RisingExp, 1.41421356237309515, 0.1}, {ShapeKind::RisingExp, 0.5, 0.0}};
        double worst_pull = 0.0;
        for (const auto& p : points) {
            const ModeShape shape = normalized(p.kind);
            const auto strat = GainStrategy::constant(p.lambda);
            const double ft = merit_quadrature_delay(shape, strat, p.tau, q).f_tilde;
            const auto lo = LoPhaseModel::adaptive(strat, p.tau);
            SimulationConfig sim;
            sim.n_traj = 100000;
            sim.dt = 1e-3;
            sim.base_seed = base_seed + 31;
            sim = configured_for(sim, lo);
            const auto est = estimate_merit(shape, lo, sim);
            const double tol3 = 3.0 * est.m4_se / 8.0;
            const double pull = std::abs(est.f_tilde_hat - ft) / (est.m4_se / 8.0);
            worst_pull = std::max(worst_pull, pull);
            c.expect(std::abs(est.f_tilde_hat - ft) < tol3,
                     std::string(shape_name(p.kind)) + " l=" + fmt(p.lambda) + " tau=" +
                         fmt(p.tau) + " mc=" + fmt(est.f_tilde_hat) + " quad=" + fmt(ft));
        }
        add(11, "mc-analytic", c.ok, c.summary("worst pull = " + fmt(worst_pull) + " sigma"));
    });

    return results;
}

} // namespace dynelab
