#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <dynelab/analytic.hpp>
#include <dynelab/common.hpp>
#include <dynelab/feedback.hpp>
#include <dynelab/merit.hpp>
#include <dynelab/modeshape.hpp>
#include <dynelab/optimizer.hpp>
#include <dynelab/trajectory.hpp>
#include <dynelab/validate.hpp>

namespace dynelab::cli {

/// Everything a run needs; serializable so the config echo plus seed
/// reproduces outputs bit-exactly.
struct RunConfig {
    std::string subcommand;
    std::string shape = "rect";
    std::string shapes = "all";       // sweep: "all" or comma-separated list
    std::string lo = "homodyne";      // simulate
    std::string strategy = "const:1"; // merit
    std::string family = "const";     // optimize / sweep
    std::string method = "quad";      // merit: quad|closed|mc
    std::string objective = "auto";   // optimize: auto|closed|quad
    double tau = 0.0;
    std::string tau_grid = "0:0.5:0.05";
    double dt = 1e-3;
    std::int64_t n_traj = 10000;
    std::uint64_t seed = 0x12345678ULL;
    double trunc_eps = 1e-10;
    int quad_nodes = 12;
    int quad_refine = 3;
    double quad_tol = 1e-6;
    std::string out; // empty: <subcommand>.csv; "-": stdout, no echo

    std::string to_kv() const {
        std::ostringstream os;
        os.precision(17);
        os << "subcommand=" << subcommand << '\n'
           << "shape=" << shape << '\n'
           << "shapes=" << shapes << '\n'
           << "lo=" << lo << '\n'
           << "strategy=" << strategy << '\n'
           << "family=" << family << '\n'
           << "method=" << method << '\n'
           << "objective=" << objective << '\n'
           << "tau=" << tau << '\n'
           << "tau_grid=" << tau_grid << '\n'
           << "dt=" << dt << '\n'
           << "n_traj=" << n_traj << '\n'
           << "seed=" << seed << '\n'
           << "trunc_eps=" << trunc_eps << '\n'
           << "quad_nodes=" << quad_nodes << '\n'
           << "quad_refine=" << quad_refine << '\n'
           << "quad_tol=" << quad_tol << '\n';
        // the output path is deliberately not part of the identity
        return os.str();
    }

    std::string hash() const {
        const std::string kv = to_kv();
        std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
        for (unsigned char c : kv) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    QuadratureConfig quad_config() const {
        QuadratureConfig q;
        q.nodes = quad_nodes;
        q.max_refine = quad_refine;
        q.trunc_eps = trunc_eps;
        q.tol = quad_tol;
        return q;
    }

    SimulationConfig sim_config() const {
        SimulationConfig s;
        s.dt = dt;
        s.n_traj = n_traj;
        s.base_seed = seed;
        s.trunc_eps = trunc_eps;
        return s;
    }
};

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open config file " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigurationError("config line is not key=value: " + line);
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "shape") cfg.shape = val;
        else if (key == "shapes") cfg.shapes = val;
        else if (key == "lo") cfg.lo = val;
        else if (key == "strategy") cfg.strategy = val;
        else if (key == "family") cfg.family = val;
        else if (key == "method") cfg.method = val;
        else if (key == "objective") cfg.objective = val;
        else if (key == "tau") cfg.tau = std::stod(val);
        else if (key == "tau_grid") cfg.tau_grid = val;
        else if (key == "dt") cfg.dt = std::stod(val);
        else if (key == "n_traj") cfg.n_traj = std::stoll(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
        else if (key == "trunc_eps") cfg.trunc_eps = std::stod(val);
        else if (key == "quad_nodes") cfg.quad_nodes = std::stoi(val);
        else if (key == "quad_refine") cfg.quad_refine = std::stoi(val);
        else if (key == "quad_tol") cfg.quad_tol = std::stod(val);
        else if (key == "out") cfg.out = val;
        else if (key != "subcommand")
            throw ConfigurationError("unknown config key: " + key);
    }
}

inline std::vector<double> parse_grid(const std::string& spec) {
    // "a:b:step" inclusive of both ends (within half a step)
    double a, b, step;
    char c1, c2;
    std::istringstream in(spec);
    if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0.0))
        throw InvalidParameter("grid spec must be <start>:<stop>:<step>, got '" + spec + "'");
    std::vector<double> g;
    for (double x = a; x <= b + 0.5 * step; x += step) g.push_back(std::min(x, b));
    return g;
}

inline std::vector<ModeShape> parse_shape_list(const std::string& spec) {
    if (spec == "all")
        return {normalized(ShapeKind::RisingExp), normalized(ShapeKind::BilateralExp),
                normalized(ShapeKind::Rectangular), normalized(ShapeKind::FallingExp)};
    std::vector<ModeShape> shapes;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) shapes.push_back(parse_shape(tok));
    if (shapes.empty()) throw InvalidParameter("empty shape list");
    return shapes;
}

/// Output sink: file (with JSON config echo alongside) or stdout ("-").
class OutputSink {
public:
    OutputSink(const RunConfig& cfg, const std::string& default_name) {
        path_ = cfg.out.empty() ? default_name : cfg.out;
        if (path_ == "-") {
            os_ = &std::cout;
        } else {
            file_ = std::make_unique<std::ofstream>(path_);
            if (!*file_) throw ConfigurationError("cannot open output file " + path_);
            os_ = file_.get();
            write_echo(cfg);
        }
        os_->precision(12);
    }
    std::ostream& stream() { return *os_; }
    const std::string& path() const { return path_; }

private:
    void write_echo(const RunConfig& cfg) const {
        nlohmann::json j;
        j["subcommand"] = cfg.subcommand;
        j["shape"] = cfg.shape;
        j["shapes"] = cfg.shapes;
        j["lo"] = cfg.lo;
        j["strategy"] = cfg.strategy;
        j["family"] = cfg.family;
        j["method"] = cfg.method;
        j["objective"] = cfg.objective;
        j["tau"] = cfg.tau;
        j["tau_grid"] = cfg.tau_grid;
        j["dt"] = cfg.dt;
        j["n_traj"] = cfg.n_traj;
        j["seed"] = cfg.seed;
        j["trunc_eps"] = cfg.trunc_eps;
        j["quad_nodes"] = cfg.quad_nodes;
        j["quad_refine"] = cfg.quad_refine;
        j["quad_tol"] = cfg.quad_tol;
        j["out"] = path_;
        j["config_hash"] = cfg.hash();
        std::ofstream echo(path_ + ".config.json");
        echo << j.dump(2) << '\n';
    }

    std::string path_;
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_ = nullptr;
};

inline const char* family_name(GainFamily f) {
    return f == GainFamily::Constant ? "const" : "pw";
}

inline void write_opt_row(std::ostream& os, const OptimizationResult& r,
                          const std::string& hash) {
    os << shape_name(r.shape) << ',' << family_name(r.family) << ',' << r.tau << ','
       << r.lambda1 << ',' << r.lambda2 << ',';
    if (r.family == GainFamily::Piecewise) os << r.t_switch;
    os << ',' << r.f_tilde_star << ',' << r.evaluations << ','
       << (r.converged ? "true" : "false") << ',' << hash << ',' << r.error << '\n';
}

inline int cmd_table1(const RunConfig& cfg) {
    OutputSink sink(cfg, "table1.csv");
    auto& os = sink.stream();
    const auto rows = table1();
    const ModeShape rect = normalized(ShapeKind::Rectangular);
    const ModeShape rise = normalized(ShapeKind::RisingExp);
    os << "measurement,exact,approx,mc_f_hat,mc_f_se,config_hash\n";
    for (const auto& row : rows) {
        LoPhaseModel lo;
        const ModeShape* shape = &rect;
        if (std::string(row.measurement) == "homodyne") lo = LoPhaseModel::homodyne();
        else if (std::string(row.measurement) == "heterodyne") lo = LoPhaseModel::heterodyne();
        else {
            lo = LoPhaseModel::adaptive(GainStrategy::optimal(rise), 0.0);
            shape = &rise;
        }
        const auto est = estimate_merit(*shape, lo, configured_for(cfg.sim_config(), lo));
        os << row.measurement << ',' << row.exact_f << ',' << row.approx_f << ',' << est.f_hat
           << ',' << est.f_se << ',' << cfg.hash() << '\n';
    }
    return 0;
}

inline int cmd_merit(const RunConfig& cfg) {
    const ModeShape shape = parse_shape(cfg.shape);
    const GainStrategy strategy = parse_strategy(cfg.strategy, shape);
    OutputSink sink(cfg, "merit.csv");
    auto& os = sink.stream();
    os << "shape,lambda1,lambda2,t_l,tau,f_tilde,err_est,method,config_hash,error\n";
    os << shape_name(shape.kind) << ',';
    if (strategy.kind == GainStrategy::Kind::OptimalAdaptive) os << "opt,,";
    else if (strategy.kind == GainStrategy::Kind::Constant)
        os << strategy.lambda1 << ',' << strategy.lambda2 << ',';
    else os << strategy.lambda1 << ',' << strategy.lambda2 << ',' << strategy.t_switch;
    os << ',' << cfg.tau << ',';
    std::string err;
    try {
        if (cfg.method == "closed") {
            if (strategy.kind != GainStrategy::Kind::Constant)
                throw InvalidParameter("closed-form merit requires a constant strategy");
            const auto m = merit_closed_form_constant(shape, strategy.lambda1, cfg.tau);
            os << m.f_tilde << ',' << m.error_estimate << ",closed";
        } else if (cfg.method == "quad") {
            const auto m = cfg.tau == 0.0
                               ? merit_quadrature_zero_delay(shape, strategy, cfg.quad_config())
                               : merit_quadrature_delay(shape, strategy, cfg.tau,
                                                        cfg.quad_config());
            os << m.f_tilde << ',' << m.error_estimate << ','
               << detail::method_name(m.method);
        } else if (cfg.method == "mc") {
            const auto lo = LoPhaseModel::adaptive(strategy, cfg.tau);
            const auto est = estimate_merit(shape, lo, configured_for(cfg.sim_config(), lo));
            os << est.f_tilde_hat << ',' << est.f_tilde_se << ",mc";
        } else {
            throw InvalidParameter("merit method must be quad|closed|mc");
        }
    } catch (const ToleranceNotMet& e) {
        os << e.best.f_tilde << ',' << e.best.error_estimate << ','
           << detail::method_name(e.best.method);
        err = "tolerance-not-met";
    }
    os << ',' << cfg.hash() << ',' << err << '\n';
    return err.empty() ? 0 : 1;
}

inline int cmd_simulate(const RunConfig& cfg) {
    const ModeShape shape = parse_shape(cfg.shape);
    LoPhaseModel lo = parse_lo_model(cfg.lo, shape);
    SimulationConfig sim = configured_for(cfg.sim_config(), lo);
    if (lo.mode == LoPhaseModel::Mode::AdaptiveIntegral) {
        // delay is realized as whole steps; report the rounded value
        lo.tau = sim.delay_steps * sim.dt;
    }
    const auto est = estimate_merit(shape, lo, sim);
    OutputSink sink(cfg, "simulate.csv");
    auto& os = sink.stream();
    os << "shape,lo_model,tau,dt,n_traj,f_hat,f_hat_se,m2_hat,m2_se,m4_hat,m4_se,"
          "f_tilde_hat,seed,config_hash\n";
    os << shape_name(shape.kind) << ',' << cfg.lo << ',' << lo.tau << ',' << sim.dt << ','
       << sim.n_traj << ',' << est.f_hat << ',' << est.f_se << ',' << est.m2_hat << ','
       << est.m2_se << ',' << est.m4_hat << ',' << est.m4_se << ',' << est.f_tilde_hat << ','
       << sim.base_seed << ',' << cfg.hash() << '\n';
    return 0;
}

inline OptimizerOptions optimizer_options(const RunConfig& cfg) {
    OptimizerOptions opts;
    opts.quad = cfg.quad_config();
    return opts;
}

inline int cmd_optimize(const RunConfig& cfg) {
    const ModeShape shape = parse_shape(cfg.shape);
    OutputSink sink(cfg, "optimize.csv");
    auto& os = sink.stream();
    os << "shape,family,tau,lambda1,lambda2,t_l,f_tilde_star,evals,converged,config_hash,"
          "error\n";
    OptimizationResult res;
    if (cfg.family == "const") {
        ObjectiveKind obj;
        if (cfg.objective == "closed") obj = ObjectiveKind::ClosedForm;
        else if (cfg.objective == "quad") obj = ObjectiveKind::Quadrature;
        else if (cfg.objective == "auto")
            obj = (shape.kind != ShapeKind::Rectangular || cfg.tau < 0.5 * shape.rate)
                      ? ObjectiveKind::ClosedForm
                      : ObjectiveKind::Quadrature;
        else throw InvalidParameter("objective must be auto|closed|quad");
        res = optimize_constant_gain(shape, cfg.tau, obj, optimizer_options(cfg));
    } else if (cfg.family == "pw") {
        res = optimize_piecewise_gain(shape, cfg.tau, optimizer_options(cfg));
    } else {
        throw InvalidParameter("family must be const|pw");
    }
    write_opt_row(os, res, cfg.hash());
    return res.error.empty() ? 0 : 1;
}

inline int cmd_sweep(const RunConfig& cfg) {
    const auto shapes = parse_shape_list(cfg.shapes);
    const auto grid = parse_grid(cfg.tau_grid);
    GainFamily family;
    if (cfg.family == "const") family = GainFamily::Constant;
    else if (cfg.family == "pw") family = GainFamily::Piecewise;
    else throw InvalidParameter("family must be const|pw");
    OutputSink sink(cfg, "sweep.csv");
    auto& os = sink.stream();
    os << "shape,family,tau,lambda1,lambda2,t_l,f_tilde_star,evals,converged,config_hash,"
          "error\n";
    int rc = 0;
    for (const auto& shape : shapes) {
        const auto rows = delay_sweep(shape, family, grid, optimizer_options(cfg));
        for (const auto& r : rows) {
            write_opt_row(os, r, cfg.hash());
            if (!r.error.empty()) rc = 1;
        }
    }
    return rc;
}

inline int cmd_validate(const RunConfig& cfg) {
    const auto results = run_acceptance_criteria(cfg.sim_config().base_seed, &std::cout);
    int failures = 0;
    for (const auto& r : results)
        if (!r.pass) ++failures;
    std::cout << (failures == 0 ? "VALIDATE PASS" : "VALIDATE FAIL") << " ("
              << results.size() - failures << '/' << results.size() << " criteria)\n";
    return failures == 0 ? 0 : 1;
}

inline int run(std::vector<std::string> args) {
    CLI::App app{"dynelab: adaptive dyne phase-measurement laboratory"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_file;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "flat key=value config file");
        sub->add_option("--out", cfg.out, "output CSV path ('-' for stdout)");
        sub->add_option("--seed", cfg.seed, "base RNG seed");
        sub->add_option("--dt", cfg.dt, "time step in units of w");
        sub->add_option("--n-traj", cfg.n_traj, "ensemble size");
        sub->add_option("--trunc-eps", cfg.trunc_eps, "support truncation mass");
        sub->add_option("--quad-nodes", cfg.quad_nodes, "Gauss-Legendre nodes per panel");
        sub->add_option("--quad-refine", cfg.quad_refine, "max panel refinement rounds");
        sub->add_option("--quad-tol", cfg.quad_tol, "quadrature absolute tolerance");
    };

    auto* table1_cmd = app.add_subcommand("table1", "exact vs approximate merit table");
    add_common(table1_cmd);

    auto* merit_cmd = app.add_subcommand("merit", "evaluate the approximate figure of merit");
    add_common(merit_cmd);
    merit_cmd->add_option("--shape", cfg.shape, "mode shape spec");
    merit_cmd->add_option("--strategy", cfg.strategy, "gain strategy spec");
    merit_cmd->add_option("--tau", cfg.tau, "feedback delay");
    merit_cmd->add_option("--method", cfg.method, "quad|closed|mc");

    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo dyne record ensemble");
    add_common(sim_cmd);
    sim_cmd->add_option("--shape", cfg.shape, "mode shape spec");
    sim_cmd->add_option("--lo", cfg.lo, "LO model spec");

    auto* opt_cmd = app.add_subcommand("optimize", "optimize the feedback gain at one delay");
    add_common(opt_cmd);
    opt_cmd->add_option("--shape", cfg.shape, "mode shape spec");
    opt_cmd->add_option("--family", cfg.family, "const|pw");
    opt_cmd->add_option("--tau", cfg.tau, "feedback delay");
    opt_cmd->add_option("--objective", cfg.objective, "auto|closed|quad");

    auto* sweep_cmd = app.add_subcommand("sweep", "optimize over a delay grid");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--shapes", cfg.shapes, "all or comma-separated shape specs");
    sweep_cmd->add_option("--family", cfg.family, "const|pw");
    sweep_cmd->add_option("--tau", cfg.tau_grid, "delay grid start:stop:step");

    auto* validate_cmd = app.add_subcommand("validate", "run the full cross-check suite");
    add_common(validate_cmd);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back(); // program name
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!config_file.empty()) {
            RunConfig flag_cfg = cfg;
            apply_config_file(cfg, config_file);
            // flags explicitly given override the file
            const auto subs = app.get_subcommands();
            CLI::App* active = subs.empty() ? nullptr : subs.front();
            auto given = [&](const std::string& name) {
                if (!active) return false;
                const auto* opt = active->get_option_no_throw(name);
                return opt != nullptr && opt->count() > 0;
            };
            if (given("--out")) cfg.out = flag_cfg.out;
            if (given("--seed")) cfg.seed = flag_cfg.seed;
            if (given("--dt")) cfg.dt = flag_cfg.dt;
            if (given("--n-traj")) cfg.n_traj = flag_cfg.n_traj;
            if (given("--trunc-eps")) cfg.trunc_eps = flag_cfg.trunc_eps;
            if (given("--quad-nodes")) cfg.quad_nodes = flag_cfg.quad_nodes;
            if (given("--quad-refine")) cfg.quad_refine = flag_cfg.quad_refine;
            if (given("--quad-tol")) cfg.quad_tol = flag_cfg.quad_tol;
            if (given("--shape")) cfg.shape = flag_cfg.shape;
            if (given("--shapes")) cfg.shapes = flag_cfg.shapes;
            if (given("--lo")) cfg.lo = flag_cfg.lo;
            if (given("--strategy")) cfg.strategy = flag_cfg.strategy;
            if (given("--family")) cfg.family = flag_cfg.family;
            if (given("--method")) cfg.method = flag_cfg.method;
            if (given("--objective")) cfg.objective = flag_cfg.objective;
            if (given("--tau")) {
                cfg.tau = flag_cfg.tau;
                cfg.tau_grid = flag_cfg.tau_grid;
            }
        }
        if (const char* env_seed = std::getenv("DYNELAB_SEED"))
            cfg.seed = std::stoull(env_seed);

        if (table1_cmd->parsed()) { cfg.subcommand = "table1"; return cmd_table1(cfg); }
        if (merit_cmd->parsed()) { cfg.subcommand = "merit"; return cmd_merit(cfg); }
        if (sim_cmd->parsed()) { cfg.subcommand = "simulate"; return cmd_simulate(cfg); }
        if (opt_cmd->parsed()) { cfg.subcommand = "optimize"; return cmd_optimize(cfg); }
        if (sweep_cmd->parsed()) { cfg.subcommand = "sweep"; return cmd_sweep(cfg); }
        if (validate_cmd->parsed()) { cfg.subcommand = "validate"; return cmd_validate(cfg); }
        return 2;
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

inline int run(int argc, char** argv) {
    return run(std::vector<std::string>(argv, argv + argc));
}

} // namespace dynelab::cli
