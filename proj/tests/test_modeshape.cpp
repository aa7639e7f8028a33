#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <dynelab/modeshape.hpp>

using namespace dynelab;

namespace {

// independent oracle: Richardson-extrapolated midpoint rule, split at the
// known density kinks so every segment is smooth
double midpoint_density(const ModeShape& s, double a, double b, int n) {
    const double h = (b - a) / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += density(s, a + (i + 0.5) * h);
    return acc * h;
}

double integrate_density(const ModeShape& s, double a, double b) {
    double kinks[2];
    const int nk = shape_kinks(s, kinks);
    std::vector<double> edges = {a};
    for (int i = 0; i < nk; ++i)
        if (kinks[i] > a && kinks[i] < b) edges.push_back(kinks[i]);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double coarse = midpoint_density(s, edges[i], edges[i + 1], 8192);
        const double fine = midpoint_density(s, edges[i], edges[i + 1], 16384);
        total += (4.0 * fine - coarse) / 3.0;
    }
    return total;
}

} // namespace

TEST_CASE("density matches the defining formulas") {
    CHECK(density(ModeShape::rectangular(1.0), 0.5) == 1.0);
    CHECK(density(ModeShape::falling(2.0), -0.3) == 0.0);
    CHECK(density(ModeShape::bilateral(4.0), 0.0) == 2.0);
}

TEST_CASE("density is zero outside the support") {
    CHECK(density(ModeShape::rectangular(1.0), -0.1) == 0.0);
    CHECK(density(ModeShape::rectangular(1.0), 1.0) == 0.0); // half-open [0, T)
    CHECK(density(ModeShape::rectangular(1.0), 0.0) == 1.0);
    CHECK(density(ModeShape::rising(2.0), 0.1) == 0.0);
    CHECK(density(ModeShape::rising(2.0), 0.0) == 2.0);
}

TEST_CASE("invalid rate is rejected") {
    CHECK_THROWS_AS(ModeShape::rectangular(0.0), InvalidParameter);
    CHECK_THROWS_AS(ModeShape::falling(-2.0), InvalidParameter);
}

TEST_CASE("cumulative closed forms") {
    CHECK(cumulative(ModeShape::rectangular(1.0), 0.5) == Catch::Approx(0.5).margin(1e-15));
    CHECK(cumulative(ModeShape::rising(2.0), 0.0) == 1.0);
    for (ShapeKind kind : {ShapeKind::Rectangular, ShapeKind::BilateralExp,
                           ShapeKind::FallingExp, ShapeKind::RisingExp}) {
        CHECK(cumulative(normalized(kind), 1e6) == Catch::Approx(1.0).margin(1e-12));
        CHECK(cumulative(normalized(kind), -1e6) == Catch::Approx(0.0).margin(1e-12));
    }
    CHECK(cumulative(ModeShape::bilateral(4.0), 0.0) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("characteristic width closed forms") {
    CHECK(characteristic_width(ModeShape::rectangular(1.0)) == 1.0);
    CHECK(characteristic_width(ModeShape::bilateral(4.0)) == 1.0);
    CHECK(characteristic_width(ModeShape::falling(5.0)) == Catch::Approx(0.4).margin(1e-15));
}

TEST_CASE("normalized shapes have unit width") {
    CHECK(normalized(ShapeKind::Rectangular).rate == 1.0);
    CHECK(normalized(ShapeKind::BilateralExp).rate == 4.0);
    CHECK(normalized(ShapeKind::RisingExp).rate == 2.0);
    CHECK(normalized(ShapeKind::FallingExp).rate == 2.0);
    for (ShapeKind kind : {ShapeKind::Rectangular, ShapeKind::BilateralExp,
                           ShapeKind::FallingExp, ShapeKind::RisingExp})
        CHECK(characteristic_width(normalized(kind)) == 1.0);
}

TEST_CASE("numeric integration of the density reproduces cumulative") {
    for (ShapeKind kind : {ShapeKind::Rectangular, ShapeKind::BilateralExp,
                           ShapeKind::FallingExp, ShapeKind::RisingExp}) {
        const ModeShape s = normalized(kind);
        const Interval sup = effective_support(s, 1e-12);
        for (int i = 1; i <= 20; ++i) {
            const double t = sup.lo + (sup.hi - sup.lo) * i / 20.0;
            const double numeric = cumulative(s, sup.lo) + integrate_density(s, sup.lo, t);
            CHECK(numeric == Catch::Approx(cumulative(s, t)).margin(1e-10));
        }
    }
}

TEST_CASE("width scales linearly under time rescaling") {
    for (double a : {0.5, 2.0, 10.0}) {
        // u_a(t) = u(t/a)/a: duration T -> aT, exponential rates k -> k/a
        CHECK(characteristic_width(ModeShape::rectangular(1.0 * a)) ==
              Catch::Approx(a * characteristic_width(ModeShape::rectangular(1.0))));
        CHECK(characteristic_width(ModeShape::bilateral(4.0 / a)) ==
              Catch::Approx(a * characteristic_width(ModeShape::bilateral(4.0))));
        CHECK(characteristic_width(ModeShape::falling(2.0 / a)) ==
              Catch::Approx(a * characteristic_width(ModeShape::falling(2.0))));
    }
}

TEST_CASE("exponential densities are continuous on the support interior") {
    const double h = 1e-9;
    for (double t : {-1.3, 0.0, 0.7}) {
        const ModeShape s = ModeShape::bilateral(4.0);
        CHECK(std::abs(density(s, t + h) - density(s, t - h)) < 1e-7);
    }
    for (double t : {0.3, 1.9}) {
        const ModeShape s = ModeShape::falling(2.0);
        CHECK(std::abs(density(s, t + h) - density(s, t - h)) < 1e-7);
    }
}

TEST_CASE("effective support carries the requested mass cutoff") {
    // only half-infinite ends are truncated; finite edges are kept exact
    const ModeShape bilat = normalized(ShapeKind::BilateralExp);
    const Interval bsup = effective_support(bilat, 1e-10);
    CHECK(cumulative(bilat, bsup.lo) == Catch::Approx(1e-10).epsilon(1e-3));
    CHECK(1.0 - cumulative(bilat, bsup.hi) == Catch::Approx(1e-10).epsilon(1e-3));
    const ModeShape fall = normalized(ShapeKind::FallingExp);
    const Interval fsup = effective_support(fall, 1e-10);
    CHECK(fsup.lo == 0.0);
    CHECK(1.0 - cumulative(fall, fsup.hi) == Catch::Approx(1e-10).epsilon(1e-3));
    const ModeShape rise = normalized(ShapeKind::RisingExp);
    const Interval rsup = effective_support(rise, 1e-10);
    CHECK(cumulative(rise, rsup.lo) == Catch::Approx(1e-10).epsilon(1e-3));
    CHECK(rsup.hi == 0.0);
    const Interval rect = effective_support(normalized(ShapeKind::Rectangular), 1e-10);
    CHECK(rect.lo == 0.0);
    CHECK(rect.hi == 1.0);
    CHECK_THROWS_AS(effective_support(normalized(ShapeKind::FallingExp), 0.7),
                    InvalidParameter);
}

TEST_CASE("shape spec parsing") {
    CHECK(parse_shape("rect").kind == ShapeKind::Rectangular);
    CHECK(parse_shape("rect").rate == 1.0);
    CHECK(parse_shape("rect:T=2").rate == 2.0);
    CHECK(parse_shape("bilat:kappa=4").rate == 4.0);
    CHECK(parse_shape("fallexp:k=3").rate == 3.0);
    CHECK(parse_shape("riseexp").kind == ShapeKind::RisingExp);
    CHECK_THROWS_AS(parse_shape("gauss"), InvalidParameter);
    CHECK_THROWS_AS(parse_shape("rect:kappa=2"), InvalidParameter);
    CHECK_THROWS_AS(parse_shape("rect:T=zzz"), InvalidParameter);
    CHECK_THROWS_AS(parse_shape("rect:T=-1"), InvalidParameter);
}
