#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <dynelab/feedback.hpp>
#include <dynelab/modeshape.hpp>

using namespace dynelab;

TEST_CASE("optimal gain over the rising exponential is constant sqrt(k)") {
    const auto strat = GainStrategy::optimal(ModeShape::rising(2.0));
    double lo = inf, hi = -inf;
    const Interval sup = effective_support(ModeShape::rising(2.0));
    for (int i = 0; i <= 50; ++i) {
        const double t = sup.lo + (sup.hi - sup.lo) * i / 50.0;
        const double g = gain_value(strat, t);
        lo = std::min(lo, g);
        hi = std::max(hi, g);
    }
    CHECK(hi - lo < 1e-12);
    CHECK(lo == Catch::Approx(std::sqrt(2.0)).margin(1e-12));
}

TEST_CASE("piecewise gain selects the branch by switch time") {
    const auto strat = GainStrategy::piecewise(3.0, 1.0, 0.4);
    CHECK(gain_value(strat, 0.2) == 3.0);
    CHECK(gain_value(strat, 0.4) == 3.0); // t <= t_l branch
    CHECK(gain_value(strat, 0.41) == 1.0);
}

TEST_CASE("divergent optimal gain is clamped") {
    const auto strat = GainStrategy::optimal(ModeShape::rectangular(1.0));
    CHECK(gain_value(strat, 1e-4) == Catch::Approx(100.0).margin(1e-9)); // sqrt(1/t)
    CHECK(gain_value(strat, 1e-8) == 1000.0);                            // clamp default
    CHECK(gain_value(strat, 0.0) == 1000.0); // U = 0 exactly -> clamp, not an error
    CHECK(gain_value(strat, 2.0) == 0.0);    // outside support
    const auto tight = GainStrategy::optimal(ModeShape::rectangular(1.0), 50.0);
    CHECK(gain_value(tight, 1e-4) == 50.0);
}

TEST_CASE("phase variance closed forms") {
    CHECK(phase_variance(GainStrategy::constant(2.0), 0.0, 0.5) ==
          Catch::Approx(2.0).margin(1e-15));
    CHECK(phase_variance(GainStrategy::piecewise(2.0, 1.0, 0.3), 0.0, 1.0) ==
          Catch::Approx(1.9).margin(1e-15));
    CHECK(phase_variance(GainStrategy::optimal(ModeShape::rectangular(1.0)), 0.1, 0.2) ==
          Catch::Approx(std::log(2.0)).margin(1e-12));
    CHECK_THROWS_AS(phase_variance(GainStrategy::constant(1.0), 1.0, 0.0), InvalidParameter);
}

TEST_CASE("phase variance of the optimal gain handles support edges") {
    const auto strat = GainStrategy::optimal(ModeShape::rectangular(1.0));
    CHECK(std::isinf(phase_variance(strat, -0.5, 0.5))); // window reaches U = 0
    CHECK(phase_variance(strat, -2.0, -1.0) == 0.0);     // entirely before the pulse
    CHECK(phase_variance(strat, 1.0, 2.0) == 0.0);       // entirely after
    // beyond the support end the gain is zero, so only [0.5, 1] contributes
    CHECK(phase_variance(strat, 0.5, 5.0) ==
          Catch::Approx(std::log(2.0)).margin(1e-12));
}

TEST_CASE("phase variance is additive") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> uni(-1.0, 2.0);
    const std::vector<GainStrategy> strategies = {
        GainStrategy::constant(1.7), GainStrategy::piecewise(2.0, 0.5, 0.4),
        GainStrategy::optimal(ModeShape::bilateral(4.0))};
    for (const auto& strat : strategies)
        for (int i = 0; i < 20; ++i) {
            double a = uni(rng), b = uni(rng), c = uni(rng);
            if (a > b) std::swap(a, b);
            if (b > c) std::swap(b, c);
            if (a > b) std::swap(a, b);
            const double whole = phase_variance(strat, a, c);
            const double split = phase_variance(strat, a, b) + phase_variance(strat, b, c);
            CHECK(whole == Catch::Approx(split).margin(1e-12));
        }
}

TEST_CASE("degenerate piecewise gain equals constant gain exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    for (int i = 0; i < 10; ++i) {
        const double lambda = std::abs(uni(rng)) + 0.1;
        double a = uni(rng), b = uni(rng);
        if (a > b) std::swap(a, b);
        const double tl = uni(rng);
        CHECK(phase_variance(GainStrategy::piecewise(lambda, lambda, tl), a, b) ==
              phase_variance(GainStrategy::constant(lambda), a, b));
    }
}

TEST_CASE("lo phase increments") {
    CHECK(lo_phase_increment(LoPhaseModel::homodyne(), 0.3, 0.5, 1e-3) == 0.0);
    CHECK(lo_phase_increment(LoPhaseModel::heterodyne(400.0 * pi), 0.3, 0.5, 1e-3) ==
          Catch::Approx(0.4 * pi).margin(1e-15));
    const auto lo = LoPhaseModel::adaptive(GainStrategy::constant(1.5), 0.1);
    CHECK(lo_phase_increment(lo, 0.3, 0.02, 1e-3) == Catch::Approx(0.03).margin(1e-15));
}

TEST_CASE("lo model stores the phase origin") {
    CHECK(LoPhaseModel::homodyne().phi0 == Catch::Approx(0.5 * pi));
    CHECK(LoPhaseModel::adaptive(GainStrategy::constant(1.0)).phi0 ==
          Catch::Approx(0.5 * pi));
}

TEST_CASE("strategy spec parsing") {
    const ModeShape rise = ModeShape::rising(2.0);
    CHECK(parse_strategy("const:1.5").lambda1 == 1.5);
    const auto pw = parse_strategy("pw:3,1,0.4");
    CHECK(pw.lambda1 == 3.0);
    CHECK(pw.lambda2 == 1.0);
    CHECK(pw.t_switch == 0.4);
    CHECK(parse_strategy("opt", rise).kind == GainStrategy::Kind::OptimalAdaptive);
    CHECK_THROWS_AS(parse_strategy("opt"), InvalidParameter);
    CHECK_THROWS_AS(parse_strategy("const:"), InvalidParameter);
    CHECK_THROWS_AS(parse_strategy("pw:1,2"), InvalidParameter);
    CHECK_THROWS_AS(parse_strategy("ramp:1"), InvalidParameter);
    CHECK_THROWS_AS(parse_strategy("const:-1"), InvalidParameter);
}

TEST_CASE("lo model spec parsing") {
    const ModeShape rise = ModeShape::rising(2.0);
    CHECK(parse_lo_model("homodyne").mode == LoPhaseModel::Mode::Homodyne);
    CHECK(parse_lo_model("homodyne:0.7").phi0 == 0.7);
    CHECK(parse_lo_model("heterodyne").detuning == Catch::Approx(400.0 * pi));
    CHECK(parse_lo_model("heterodyne:800").detuning == 800.0);
    const auto ad = parse_lo_model("adaptive:const:1.5:tau=0.1", rise);
    CHECK(ad.mode == LoPhaseModel::Mode::AdaptiveIntegral);
    CHECK(ad.strategy.lambda1 == 1.5);
    CHECK(ad.tau == 0.1);
    const auto ad2 = parse_lo_model("adaptive:pw:3,1,0.4", rise);
    CHECK(ad2.strategy.kind == GainStrategy::Kind::PiecewiseConstant);
    CHECK(ad2.tau == 0.0);
    CHECK(parse_lo_model("adaptive:opt", rise).strategy.kind ==
          GainStrategy::Kind::OptimalAdaptive);
    CHECK_THROWS_AS(parse_lo_model("dyne"), InvalidParameter);
    CHECK_THROWS_AS(parse_lo_model("adaptive:const:1:tau=-0.1"), InvalidParameter);
}
