#include <doctest.h>

#include <cmath>
#include <random>

#include "mre/cli.hpp"
#include "mre/errors.hpp"
#include "mre/expansion.hpp"
#include "mre/oracle.hpp"
#include "oracles.hpp"

using namespace mre;

namespace {

RMatrix mat(double a, double b, double c, double d) {
    RMatrix m(2, 2);
    m << a, b, c, d;
    return m;
}

}  // namespace

TEST_CASE("U expansion of the upper-triangular model with an instant birth") {
    const Expansion e = build_U_expansion(oracle::poisson_delta(), SearchRegion{0.5, 2.0, 50.0});
    CHECK(e.kind == ExpansionKind::UNonLattice);
    CHECK(to_string(e.kind) == "U-nonlattice");
    CHECK(e.remainder_exponent == 0.5);
    CHECK(e.remainder_poly_degree == 1);
    for (double t : {0.0, 0.5, 2.0, 7.0}) {
        const RMatrix expected = std::exp(t) * mat(1, 1 + t, 0, 1);
        CHECK((evaluate(e, t) - expected).cwiseAbs().maxCoeff() < 1e-8 * std::exp(t));
    }
    CHECK(evaluate(e, 2.0)(0, 1) == doctest::Approx(3.0 * std::exp(2.0)).epsilon(1e-9));
    CHECK(evaluate(e, 2.0)(0, 1) == doctest::Approx(22.167).epsilon(1e-4));
    CHECK(evaluate_scaled(e, 3.0).imag_residue < 1e-10);
}

TEST_CASE("tilted description and the cross-description identity") {
    const SearchRegion region{0.5, 2.0, 50.0};
    const Expansion plain = build_U_expansion(oracle::poisson_delta(), region);
    const Expansion tilted = build_U_expansion(oracle::poisson_tilted(), region);
    for (double t : {1.0, 2.0, 5.0}) {
        CHECK((evaluate(tilted, t) - std::exp(t) * mat(1, t, 0, 1)).cwiseAbs().maxCoeff() < 1e-8 * std::exp(t));
        const RMatrix a = evaluate(plain, t);
        const RMatrix b = evaluate(tilted, t);
        const Eigen::RowVector2d lhs = Eigen::RowVector2d(1, 0) * a;
        const Eigen::RowVector2d rhs = Eigen::RowVector2d(1, 1) * b;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9 * lhs.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("single-type Poisson renewal function") {
    for (double a : {0.5, 1.0, 2.0}) {
        const Expansion e = build_U_expansion(oracle::single(ScalarMeasure::poisson(a)), SearchRegion{0.3 * a, 3.0 * a, 30.0});
        REQUIRE(e.terms.size() == 1);
        for (double t : {0.0, 1.0, 4.0}) CHECK(evaluate(e, t)(0, 0) == doctest::Approx(std::exp(a * t)).epsilon(1e-9));
    }
    const Expansion e = build_U_expansion(oracle::single(ScalarMeasure::poisson(1.0)), SearchRegion{0.3, 3.0, 30.0});
    const auto grid = grid_convolution_U(oracle::single(ScalarMeasure::poisson(1.0)), 3.0, 1e-3);
    CHECK(std::abs(grid.at(3.0)(0, 0) / evaluate(e, 3.0)(0, 0) - 1.0) < 0.01);
}

TEST_CASE("evaluation edge cases") {
    Expansion empty;
    empty.rows = 2;
    empty.cols = 2;
    CHECK(evaluate(empty, 3.0).isZero());

    const Expansion e = build_U_expansion(oracle::poisson_delta(), SearchRegion{0.5, 2.0, 50.0});
    RMatrix k0 = RMatrix::Zero(2, 2);
    for (const auto& term : e.terms)
        if (term.power == 0) k0 += term.coeff.real();
    CHECK((evaluate(e, 0.0) - k0).cwiseAbs().maxCoeff() < 1e-15);

    CHECK_THROWS_AS(evaluate(e, 800.0), OverflowGuard);
    const ScaledValue big = evaluate_scaled(e, 800.0);
    CHECK(big.exponent > 0.0);
    const RMatrix ref = evaluate(e, 600.0);
    const ScaledValue mid = evaluate_scaled(e, 600.0);
    CHECK((mid.mantissa * std::exp(mid.exponent) - ref).cwiseAbs().maxCoeff() <= 1e-12 * ref.cwiseAbs().maxCoeff());
    // U(800)_{01} = e^800 * 801, checked through the logarithm
    CHECK(std::log(big.mantissa(0, 1)) + big.exponent == doctest::Approx(800.0 + std::log(801.0)).epsilon(1e-12));
}

TEST_CASE("U expansion preconditions") {
    CHECK_THROWS_AS(build_U_expansion(oracle::poisson_delta(), SearchRegion{-0.5, 2.0, 10.0}), UnsupportedRootError);
    CHECK_THROWS_AS(build_U_expansion(oracle::poisson_delta(), SearchRegion{1.5, 3.0, 10.0}), DomainError);
}

TEST_CASE("F expansion with type indicators reproduces U columns") {
    const MeasureMatrix m = oracle::poisson_delta();
    const SearchRegion region{0.5, 2.0, 50.0};
    const Expansion u = build_U_expansion(m, region);
    for (int j = 0; j < 2; ++j) {
        const Expansion f = build_F_expansion(m, Characteristic::type_indicator(2, j), region);
        CHECK(f.kind == ExpansionKind::FNonLattice);
        CHECK(f.epsilon == doctest::Approx(5e-4));
        for (double t : {0.5, 2.0, 4.0})
            CHECK((evaluate(f, t) - evaluate(u, t).col(j)).cwiseAbs().maxCoeff() < 1e-8 * std::exp(t));
    }
}

TEST_CASE("F expansion with a finite window") {
    // f = 1_[0, zeta): b_0 = B_0 (1 - e^{-a zeta}) / a with B_0 = A_1 = a
    const double a = 1.0;
    const double zeta = 1.5;
    const MeasureMatrix m = oracle::single(ScalarMeasure::poisson(a));
    Characteristic f;
    f.components.resize(1);
    f.components[0].steps = {{0.0, 1.0}, {zeta, -1.0}};
    const Expansion e = build_F_expansion(m, f, SearchRegion{0.3, 3.0, 30.0});
    REQUIRE(e.terms.size() == 1);
    CHECK(std::abs(e.terms[0].coeff(0, 0) - (1.0 - std::exp(-a * zeta))) < 1e-9);

    const auto grid = grid_convolution_F(m, f, 4.0, 5e-4);
    for (double t : {2.0, 3.0, 4.0})
        CHECK(std::abs(grid.at(t)(0) / evaluate(e, t)(0, 0) - 1.0) < 5e-3);

    // a step at 1 instead of 0 multiplies b by e^{-lambda}
    Characteristic g;
    g.components.resize(1);
    g.components[0].steps = {{1.0, 1.0}, {1.0 + zeta, -1.0}};
    const Expansion eg = build_F_expansion(m, g, SearchRegion{0.3, 3.0, 30.0});
    CHECK(std::abs(eg.terms[0].coeff(0, 0) - std::exp(-a) * e.terms[0].coeff(0, 0)) < 1e-9);
}

TEST_CASE("F expansion strip condition") {
    Characteristic f;
    f.components.resize(2);
    f.components[0].terms = {{1.0, 0, -1.5}};
    f.components[1].steps = {{0.0, 1.0}};
    CHECK_THROWS_AS(build_F_expansion(oracle::diagonal_poisson(1.0, 2.0), f, SearchRegion{0.5, 3.0, 10.0}),
                    StripRootError);
    const Expansion e = build_F_expansion(oracle::diagonal_poisson(1.0, 2.0), f, SearchRegion{1.2, 3.0, 10.0});
    CHECK(e.remainder_exponent == doctest::Approx(1.5 + 5e-4));
}

TEST_CASE("lattice F expansion") {
    LatticeMeasureMatrix l(1, 1.0);
    l.weights(0, 0) = {0.0, 2.0};
    const Expansion e = build_lattice_F_expansion(l, Characteristic::lattice_delta(1, 0), -1.0);
    CHECK(e.kind == ExpansionKind::FLattice);
    REQUIRE(e.terms.size() == 1);
    CHECK(std::abs(e.terms[0].coeff(0, 0) - 1.0) < 1e-12);
    for (int n = 0; n <= 30; ++n)
        CHECK(evaluate(e, n)(0, 0) == doctest::Approx(std::pow(2.0, n)).epsilon(1e-11));
}

TEST_CASE("lattice U expansion matches the exact recursion") {
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 5; ++trial) {
        const LatticeMeasureMatrix l = oracle::random_lattice(rng);
        const Expansion e = build_lattice_U_expansion(l, -50.0);  // all roots
        const auto exact = lattice_renewal(l, 40);
        for (int n = 0; n <= 40; ++n) {
            const RMatrix v = evaluate(e, n);
            CHECK((v - exact[static_cast<std::size_t>(n)]).cwiseAbs().maxCoeff() <=
                  1e-8 * std::max(1.0, exact[static_cast<std::size_t>(n)].cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("lattice double root gives an n e^{lambda n} term") {
    LatticeMeasureMatrix l(2, 1.0);
    l.weights(0, 0) = {0.0, 1.5};
    l.weights(0, 1) = {0.0, 1.0};
    l.weights(1, 1) = {0.0, 1.5};
    Characteristic f = Characteristic::lattice_delta(2, 1);
    const Expansion e = build_lattice_F_expansion(l, f, -2.0);
    int max_power = 0;
    for (const auto& t : e.terms) max_power = std::max(max_power, t.power);
    CHECK(max_power == 1);
    const auto exact = lattice_solution(l, f, 40);
    for (int n = 0; n <= 40; ++n)
        CHECK((evaluate(e, n) - exact[static_cast<std::size_t>(n)]).cwiseAbs().maxCoeff() <=
              1e-9 * exact[static_cast<std::size_t>(n)].cwiseAbs().maxCoeff() + 1e-12);
}

TEST_CASE("lattice remainder decays at the remainder exponent") {
    LatticeMeasureMatrix l(2, 1.0);
    l.weights(0, 0) = {0.1, 0.4, 0.3};
    l.weights(0, 1) = {0.0, 0.5};
    l.weights(1, 0) = {0.2, 0.0, 0.6};
    l.weights(1, 1) = {0.0, 0.3, 0.2};
    Characteristic f = Characteristic::lattice_delta(2, 0);
    const auto roots = locate_lattice_roots(l, -10.0);
    REQUIRE(roots.size() >= 3);
    // keep the dominant root, put theta just above the next real part
    std::vector<double> re;
    for (const auto& r : roots)
        if (re.empty() || re.back() - r.lambda.real() > 1e-9) re.push_back(r.lambda.real());
    REQUIRE(re.size() >= 2);
    const double theta = std::min(re[1] + 0.02, 0.5 * (re[0] + re[1]));
    const Expansion e = build_lattice_F_expansion(l, f, theta);
    const auto exact = lattice_solution(l, f, 60);
    std::vector<double> n, res, floor;
    for (int k = 20; k <= 60; ++k) {
        n.push_back(k);
        res.push_back((evaluate(e, k) - exact[static_cast<std::size_t>(k)]).cwiseAbs().maxCoeff());
        floor.push_back(1e-13 * exact[static_cast<std::size_t>(k)].cwiseAbs().maxCoeff());
    }
    const SlopeTest st = slope_test(n, res, floor, theta + 0.05);
    CHECK(st.points >= 3);
    CHECK(st.pass);
}
