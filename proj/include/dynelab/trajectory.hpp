#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include <dynelab/common.hpp>
#include <dynelab/feedback.hpp>
#include <dynelab/modeshape.hpp>
#include <dynelab/rng.hpp>
#include <dynelab/stats.hpp>

namespace dynelab {

struct SimulationConfig {
    double dt = 1e-3;               // time step, units of w
    std::int64_t n_traj = 10000;
    std::uint64_t base_seed = 0x12345678ULL;
    int delay_steps = 0;            // tau = delay_steps * dt
    double trunc_eps = 1e-10;       // support truncation mass

    void validate() const {
        if (!(dt > 0.0)) throw InvalidParameter("time step dt must be positive");
        if (n_traj < 1) throw InvalidParameter("ensemble size must be >= 1");
        if (delay_steps < 0) throw InvalidParameter("delay_steps must be >= 0");
        if (!(trunc_eps > 0.0) || trunc_eps >= 0.5)
            throw InvalidParameter("truncation epsilon must lie in (0, 0.5)");
    }
};

inline int rounded_delay_steps(double tau, double dt) {
    if (!(dt > 0.0)) throw InvalidParameter("time step dt must be positive");
    if (!(tau >= 0.0)) throw InvalidParameter("delay tau must be >= 0");
    return static_cast<int>(std::llround(tau / dt));
}

/// Config with delay_steps matching the model's tau (rounded to the grid).
inline SimulationConfig configured_for(SimulationConfig cfg, const LoPhaseModel& lo) {
    cfg.delay_steps = lo.mode == LoPhaseModel::Mode::AdaptiveIntegral
                          ? rounded_delay_steps(lo.tau, cfg.dt)
                          : 0;
    return cfg;
}

struct TrajectoryOutcome {
    std::complex<double> R{0.0, 0.0};
    double phase_estimate = 0.0;  // arg R in [-pi, pi)
    double final_lo_phase = 0.0;
};

struct MeritEstimate {
    double f_hat = 0.0;       // mean |R|
    double m2_hat = 0.0;      // mean |R|^2
    double m4_hat = 0.0;      // mean |R|^4
    double f_tilde_hat = 0.0; // (9 - m4_hat)/8
    double f_se = 0.0;
    double m2_se = 0.0;
    double m4_se = 0.0;
    double f_tilde_se = 0.0;
    std::int64_t n_traj = 0;
};

namespace detail {

/// Precomputed uniform time grid shared by every trajectory of an ensemble.
///
/// For delayed adaptive feedback the grid starts delay_steps before the
/// truncated support: vacuum noise from [lo - tau, lo) enters the feedback
/// window of early record times, while anything earlier only adds a global
/// phase that |R| is invariant to.
struct SimGrid {
    double t0 = 0.0;
    double dt = 0.0;
    int n_steps = 0;
    int delay_steps = 0;
    std::vector<double> sqrt_u; // sqrt(u(t_j))
    std::vector<double> gain;   // lambda(t_j), adaptive only (clamped)

    SimGrid(const ModeShape& shape, const LoPhaseModel& lo, const SimulationConfig& cfg) {
        cfg.validate();
        const bool adaptive = lo.mode == LoPhaseModel::Mode::AdaptiveIntegral;
        if (adaptive) {
            const double tau_grid = cfg.delay_steps * cfg.dt;
            if (std::abs(tau_grid - lo.tau) > 0.5 * cfg.dt + 1e-9 * std::max(1.0, lo.tau))
                throw ConfigurationError(
                    "delay_steps * dt does not match the LO model's tau; round the delay "
                    "to the step grid first");
        }
        dt = cfg.dt;
        delay_steps = adaptive ? cfg.delay_steps : 0;
        const Interval sup = effective_support(shape, cfg.trunc_eps);
        t0 = sup.lo - delay_steps * dt;
        const double span = sup.hi - t0;
        const double raw = std::ceil(span / dt - 1e-9);
        if (raw > 2e8) throw ConfigurationError("time grid cannot cover the support at this dt");
        n_steps = static_cast<int>(raw);
        sqrt_u.resize(n_steps);
        for (int j = 0; j < n_steps; ++j)
            sqrt_u[j] = std::sqrt(density(shape, t0 + j * dt));
        if (adaptive) {
            gain.resize(n_steps);
            for (int j = 0; j < n_steps; ++j)
                gain[j] = gain_value(lo.strategy, t0 + j * dt);
        }
    }
};

inline TrajectoryOutcome run_one(const SimGrid& grid, const LoPhaseModel& lo,
                                 std::mt19937_64& engine) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sq_dt = std::sqrt(grid.dt);
    const int d = grid.delay_steps;

    std::complex<double> R{0.0, 0.0};
    double phi = lo.mode == LoPhaseModel::Mode::AdaptiveIntegral ? 0.5 * pi : lo.phi0;
    const std::complex<double> homodyne_dir = std::polar(1.0, phi);

    std::vector<double> ring(d > 0 ? d : 0);
    for (int j = 0; j < grid.n_steps; ++j) {
        const double dW = sq_dt * normal(engine);
        const double su = grid.sqrt_u[j];
        switch (lo.mode) {
        case LoPhaseModel::Mode::Homodyne:
            if (su > 0.0) R += homodyne_dir * (su * dW);
            break;
        case LoPhaseModel::Mode::Heterodyne:
            if (su > 0.0) R += std::polar(1.0, phi) * (su * dW);
            phi += lo.detuning * grid.dt;
            break;
        case LoPhaseModel::Mode::AdaptiveIntegral:
            if (su > 0.0) R += std::polar(1.0, phi) * (su * dW);
            if (d == 0) {
                phi += grid.gain[j] * dW;
            } else {
                const int slot = j % d;
                if (j >= d) phi += grid.gain[j - d] * ring[slot];
                ring[slot] = dW;
            }
            break;
        }
    }

    TrajectoryOutcome out;
    out.R = R;
    out.final_lo_phase = phi;
    double arg = std::arg(R);
    if (arg >= pi) arg = -pi; // convention: estimate lies in [-pi, pi)
    out.phase_estimate = arg;
    return out;
}

/// Runs the ensemble in fixed-size chunks with per-trajectory seeding and
/// merges chunk results in index order, so the outcome is identical for any
/// thread count.
template <typename Chunk>
void for_each_chunk(const SimulationConfig& cfg, Chunk&& body) {
    constexpr std::int64_t chunk_size = 2048;
    const std::int64_t n_chunks = (cfg.n_traj + chunk_size - 1) / chunk_size;
    unsigned hw = std::thread::hardware_concurrency();
    const unsigned n_threads =
        std::min<std::int64_t>(n_chunks, hw == 0 ? 1 : std::min(hw, 8u));
    auto worker = [&](unsigned tid) {
        for (std::int64_t c = tid; c < n_chunks; c += n_threads) {
            const std::int64_t begin = c * chunk_size;
            const std::int64_t end = std::min(begin + chunk_size, cfg.n_traj);
            body(c, begin, end);
        }
    };
    if (n_threads <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned tid = 0; tid < n_threads; ++tid) pool.emplace_back(worker, tid);
        for (auto& th : pool) th.join();
    }
}

} // namespace detail

/// One measurement record under ostensible (vacuum) statistics.
/// Deterministic in (cfg.base_seed, traj_index) regardless of scheduling.
inline TrajectoryOutcome simulate_trajectory(const ModeShape& shape, const LoPhaseModel& lo,
                                             const SimulationConfig& cfg,
                                             std::int64_t traj_index) {
    detail::SimGrid grid(shape, lo, cfg);
    auto engine = trajectory_engine(cfg.base_seed, static_cast<std::uint64_t>(traj_index));
    return detail::run_one(grid, lo, engine);
}

/// Ensemble moments of |R| with standard errors.
inline MeritEstimate estimate_merit(const ModeShape& shape, const LoPhaseModel& lo,
                                    const SimulationConfig& cfg) {
    detail::SimGrid grid(shape, lo, cfg);
    struct ChunkAcc {
        MomentAccumulator m1, m2, m4;
    };
    std::vector<ChunkAcc> chunks((cfg.n_traj + 2047) / 2048);
    detail::for_each_chunk(cfg, [&](std::int64_t c, std::int64_t begin, std::int64_t end) {
        ChunkAcc acc;
        for (std::int64_t i = begin; i < end; ++i) {
            auto engine = trajectory_engine(cfg.base_seed, static_cast<std::uint64_t>(i));
            const auto out = detail::run_one(grid, lo, engine);
            const double a2 = std::norm(out.R);
            acc.m1.add(std::sqrt(a2));
            acc.m2.add(a2);
            acc.m4.add(a2 * a2);
        }
        chunks[static_cast<std::size_t>(c)] = acc;
    });
    MomentAccumulator m1, m2, m4;
    for (const auto& c : chunks) {
        m1.merge(c.m1);
        m2.merge(c.m2);
        m4.merge(c.m4);
    }
    MeritEstimate est;
    est.f_hat = m1.mean();
    est.m2_hat = m2.mean();
    est.m4_hat = m4.mean();
    est.f_tilde_hat = (9.0 - est.m4_hat) / 8.0;
    est.f_se = m1.stderr_mean();
    est.m2_se = m2.stderr_mean();
    est.m4_se = m4.stderr_mean();
    est.f_tilde_se = est.m4_se / 8.0;
    est.n_traj = cfg.n_traj;
    return est;
}

/// Ostensible-ensemble average of the phase-corrected collapsed state of
/// mode 2: per record, |psi> ~ -R*|0> + |1> (from <R|Psi>), the one-photon
/// amplitude gets the correction exp(i(-arg R - pi)), and the unnormalized
/// outer products are averaged.
inline Mat2c simulate_protocol(const ModeShape& shape, const LoPhaseModel& lo,
                               const SimulationConfig& cfg) {
    detail::SimGrid grid(shape, lo, cfg);
    struct ChunkAcc {
        CompensatedSum re[2][2], im[2][2];
    };
    std::vector<ChunkAcc> chunks((cfg.n_traj + 2047) / 2048);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    detail::for_each_chunk(cfg, [&](std::int64_t c, std::int64_t begin, std::int64_t end) {
        ChunkAcc acc;
        for (std::int64_t i = begin; i < end; ++i) {
            auto engine = trajectory_engine(cfg.base_seed, static_cast<std::uint64_t>(i));
            const auto out = detail::run_one(grid, lo, engine);
            const std::complex<double> c0 = -std::conj(out.R) * inv_sqrt2;
            const std::complex<double> c1 =
                std::polar(inv_sqrt2, -std::arg(out.R) - pi);
            const std::complex<double> amp[2] = {c0, c1};
            for (int r = 0; r < 2; ++r)
                for (int s = 0; s < 2; ++s) {
                    const std::complex<double> v = amp[r] * std::conj(amp[s]);
                    acc.re[r][s].add(v.real());
                    acc.im[r][s].add(v.imag());
                }
        }
        chunks[static_cast<std::size_t>(c)] = acc;
    });
    Mat2c rho{};
    for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s) {
            CompensatedSum re, im;
            for (const auto& c : chunks) {
                re.merge(c.re[r][s]);
                im.merge(c.im[r][s]);
            }
            rho[r][s] = {re.value() / static_cast<double>(cfg.n_traj),
                         im.value() / static_cast<double>(cfg.n_traj)};
        }
    return rho;
}

} // namespace dynelab
