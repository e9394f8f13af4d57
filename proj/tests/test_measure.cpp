#include <doctest.h>

#include <cmath>
#include <random>

#include "mre/errors.hpp"
#include "mre/measure.hpp"
#include "oracles.hpp"

using namespace mre;

TEST_CASE("total_mass") {
    CHECK(total_mass(ScalarMeasure{}, 5.0) == 0.0);
    CHECK(total_mass(ScalarMeasure::poisson(1.0), 2.0) == doctest::Approx(2.0).epsilon(1e-15));

    ScalarMeasure m = ScalarMeasure::atom(0.0, 1.0) + ScalarMeasure::density(1.0, 0, 1.0);
    const double expected = 1.0 + oracle::integrate([](double x) { return std::exp(-x); }, 0.0, 1.0);
    CHECK(total_mass(m, 1.0) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(expected == doctest::Approx(1.6321).epsilon(1e-4));
}

TEST_CASE("total_mass of exp-poly densities matches quadrature") {
    for (int k = 0; k <= 4; ++k)
        for (double beta : {-0.5, 0.0, 1.3}) {
            const ScalarMeasure m = ScalarMeasure::density(0.7, k, beta);
            for (double t : {0.3, 1.0, 3.5}) {
                const double q = oracle::integrate([&](double x) { return 0.7 * std::pow(x, k) * std::exp(-beta * x); }, 0, t);
                CHECK(total_mass(m, t) == doctest::Approx(q).epsilon(1e-12));
            }
        }
}

TEST_CASE("total_mass is nondecreasing") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const MeasureMatrix m = oracle::random_primitive(rng, 2);
        for (const auto& e : m.entries()) {
            ScalarMeasure s = e + ScalarMeasure::atom(0.5 * trial, 0.25);
            double prev = 0.0;
            for (double t = 0.0; t < 6.0; t += 0.05) {
                const double v = total_mass(s, t);
                CHECK(v >= prev);
                prev = v;
            }
        }
    }
}

TEST_CASE("instant_mass_matrix") {
    const RMatrix a = instant_mass_matrix(oracle::poisson_delta());
    CHECK(a(0, 0) == 0.0);
    CHECK(a(0, 1) == 1.0);
    CHECK(a(1, 0) == 0.0);
    CHECK(a(1, 1) == 0.0);

    std::mt19937_64 rng(1);
    CHECK(instant_mass_matrix(oracle::random_primitive(rng, 3)).isZero());

    MeasureMatrix atoms(2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) atoms.at(i, j) = ScalarMeasure::atom(0.0, 0.3) + ScalarMeasure::atom(1.0, 5.0);
    CHECK(instant_mass_matrix(atoms).isApprox(RMatrix::Constant(2, 2, 0.3)));
}

TEST_CASE("singular_part") {
    std::mt19937_64 rng(3);
    const MeasureMatrix dens = oracle::random_primitive(rng, 2);
    const MeasureMatrix s = singular_part(dens);
    for (const auto& e : s.entries()) CHECK(e.empty());

    MeasureMatrix atoms(2);
    atoms.at(0, 1) = ScalarMeasure::atom(0.5, 2.0);
    atoms.at(1, 0) = ScalarMeasure::atom(0.0, 0.1);
    CHECK(singular_part(atoms) == atoms);
    CHECK(singular_part(singular_part(dens)) == singular_part(dens));

    MeasureMatrix mixed(1);
    mixed.at(0, 0) = ScalarMeasure::atom(1.0, 0.4) + ScalarMeasure::poisson(2.0);
    CHECK(singular_part(mixed).at(0, 0) == ScalarMeasure::atom(1.0, 0.4));

    // commutes with entrywise addition
    MeasureMatrix sum(2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) sum.at(i, j) = dens.at(i, j) + atoms.at(i, j);
    CHECK(singular_part(sum) == atoms);
}

TEST_CASE("validation rejects bad terms") {
    CHECK_THROWS_AS(ScalarMeasure::atom(-1.0, 1.0).validate(), InvalidMeasureError);
    CHECK_THROWS_AS(ScalarMeasure::atom(1.0, -1.0).validate(), InvalidMeasureError);
    CHECK_THROWS_AS(ScalarMeasure::density(-1.0, 0, 0.0).validate(), InvalidMeasureError);
    CHECK_NOTHROW(ScalarMeasure::density(1.0, 2, -0.5).validate());
    LatticeMeasureMatrix l(1, 1.0);
    l.weights(0, 0) = {0.1, -0.2};
    CHECK_THROWS_AS(l.validate(), InvalidMeasureError);
    CHECK_THROWS_AS(LatticeMeasureMatrix(1, 0.0).validate(), InvalidMeasureError);
}

TEST_CASE("lattice helpers") {
    LatticeMeasureMatrix l(2, 0.5);
    l.weights(0, 1) = {0.2, 0.0, 0.7};
    CHECK(l.max_index() == 2);
    CHECK(l.mass_at(2)(0, 1) == 0.7);
    CHECK(l.mass_at(5).isZero());
    const MeasureMatrix e = embed(l);
    CHECK(total_mass(e.at(0, 1), 1.0) == doctest::Approx(0.9));
    CHECK(total_mass(e.at(0, 1), 0.99) == doctest::Approx(0.2));

    Characteristic f;
    f.components.resize(2);
    f.components[0].steps = {{0.0, 1.0}, {1.5, -1.0}};
    f.components[1].terms = {{2.0, 0, 1.0}};
    CHECK(lattice_value(f, 0.5, 2)(0) == 1.0);
    CHECK(lattice_value(f, 0.5, 3)(0) == 0.0);
    CHECK(lattice_value(f, 0.5, 2)(1) == doctest::Approx(2.0 * std::exp(-1.0)));
}

TEST_CASE("characteristic shortcuts") {
    const Characteristic c = Characteristic::counting(3);
    CHECK(c.value(0.0).isApprox(RVector::Ones(3)));
    CHECK(c.value(-0.1).isZero());
    const Characteristic t = Characteristic::type_indicator(2, 1);
    CHECK(t.value(4.0)(0) == 0.0);
    CHECK(t.value(4.0)(1) == 1.0);
    const Characteristic d = Characteristic::lattice_delta(2, 0, 2.0);
    CHECK(d.value(1.9)(0) == 1.0);
    CHECK(d.value(2.0)(0) == 0.0);
}

TEST_CASE("integral_xk_exp matches quadrature") {
    for (int k = 0; k <= 5; ++k)
        for (cplx lambda : {cplx(-2.0), cplx(-1.0, 1.0), cplx(1.0), cplx(2.0, 3.0), cplx(0.0)})
            for (double t : {0.5, 1.0, 4.0}) {
                const cplx q = oracle::integral_xk_exp(k, lambda, t);
                CHECK(std::abs(integral_xk_exp(k, lambda, t) - q) <= 1e-10 * std::max(1.0, std::abs(q)));
            }
    CHECK(std::abs(integral_xk_exp(1, 1.0, 1.0) - 1.0) < 1e-14);
}

TEST_CASE("orders of characteristic components") {
    CharacteristicComponent c;
    CHECK(exponential_order(c) == -std::numeric_limits<double>::infinity());
    c.terms = {{1.0, 2, 3.0}};
    CHECK(exponential_order(c) == -3.0);
    CHECK(variation_order(c) == 0.0);
    c.terms = {{1.0, 0, -0.5}};
    CHECK(variation_order(c) == 0.5);
    c.steps = {{1.0, 2.0}};
    CHECK(exponential_order(c) == 0.5);
    CHECK(variation_moment(c, 0.5) == std::numeric_limits<double>::infinity());
}

namespace {

// (1/theta) int e^{-theta y} dVf(y), with the jumps read off the function and
// |g'| from central differences of the smooth part.
double variation_moment_by_quadrature(const CharacteristicComponent& f, double theta) {
    CharacteristicComponent smooth;
    smooth.terms = f.terms;
    double jumps = std::abs(smooth.value(0.0));
    for (const auto& s : f.steps) jumps += std::abs(s.height) * std::exp(-theta * s.location);
    auto gprime = [&](double y) {
        const double h = 1e-5 * std::max(1.0, y);
        const double lo = std::max(0.0, y - h);
        return (smooth.value(y + h) - smooth.value(lo)) / (y + h - lo);
    };
    double cont = 0.0;
    for (double a = 0.0; a < 200.0; a += 1.0)
        cont += oracle::integrate([&](double y) { return std::abs(gprime(y)) * std::exp(-theta * y); }, a, a + 1.0, 1e-12);
    return (jumps + cont) / theta;
}

}  // namespace

TEST_CASE("variation moment matches quadrature") {
    std::vector<CharacteristicComponent> cases(4);
    cases[0].steps = {{0.0, 1.0}, {2.0, -1.0}};
    cases[1].terms = {{1.0, 1, 1.0}};
    cases[2].terms = {{2.0, 2, 0.5}, {-1.0, 0, 1.5}};
    cases[3].steps = {{0.5, 3.0}};
    cases[3].terms = {{1.0, 0, -0.2}, {0.5, 3, 2.0}};
    for (const auto& c : cases)
        for (double theta : {0.4, 1.0, 2.5}) {
            if (theta <= variation_order(c)) continue;
            const double exact = variation_moment(c, theta);
            const double q = variation_moment_by_quadrature(c, theta);
            CHECK(exact == doctest::Approx(q).epsilon(1e-8));
        }
}
