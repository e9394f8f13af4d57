#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mre/errors.hpp"
#include "mre/polynomial.hpp"
#include "mre/roots.hpp"
#include "mre/spectral.hpp"
#include "mre/transform.hpp"
#include "oracles.hpp"

using namespace mre;

namespace {

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

}  // namespace

TEST_CASE("det_char closed forms") {
    const MeasureMatrix m = oracle::upper_poisson(1.0, 1.0);
    for (cplx z : {cplx(0.5, 0.0), cplx(2.0, 1.0), cplx(1.0, -3.0)}) {
        const cplx expected = (1.0 - 1.0 / z) * (1.0 - 1.0 / z);
        CHECK(std::abs(det_char(m, z) - expected) < 1e-14);
        CHECK(std::abs(det_char(oracle::diagonal_poisson(1.0, 1.0), z) - expected) < 1e-14);
        CHECK(det_char(MeasureMatrix(2), z) == cplx(1.0));
    }
    const auto [d, dd] = det_char_with_derivative(m, cplx(2.0, 0.5));
    const double h = 1e-6;
    const cplx fd = (det_char(m, cplx(2.0 + h, 0.5)) - det_char(m, cplx(2.0 - h, 0.5))) / (2.0 * h);
    CHECK(std::abs(fd - dd) < 1e-8);
    CHECK(std::abs(d - det_char(m, cplx(2.0, 0.5))) < 1e-15);
}

TEST_CASE("count_zeros") {
    const MeasureMatrix m = oracle::upper_poisson(1.0, 1.0);
    CHECK(count_zeros(m, Rect{0.5, 1.5, -0.5, 0.5}) == 2);
    CHECK(count_zeros(m, Rect{2.0, 3.0, -1.0, 1.0}) == 0);
    CHECK(count_zeros(oracle::single(ScalarMeasure::poisson(1.0)), Rect{0.7, 1.4, -0.3, 0.2}) == 1);
    // tall rectangles: the sample spacing is coarse compared with the phase change near the root
    CHECK(count_zeros(m, Rect{0.5, 2.0, -200.0, 200.0}) == 2);
    CHECK_THROWS_AS(count_zeros(m, Rect{1.0, 2.0, -1.0, 1.0}), BoundaryRootError);

    Rect used;
    const AnalyticFunction f = [&m](cplx z) { return det_char_with_derivative(m, z); };
    // the nudge moves the root about 1e-6 off the edge, which the finest edge sampling
    // only resolves on small rectangles
    CHECK(count_zeros_nudged(f, Rect{1.0, 1.002, -0.001, 0.001}, 8, &used) == 2);
    CHECK(used.re_min < 1.0);
    CHECK_THROWS_AS(count_zeros_nudged(f, Rect{1.0, 2.0, -1.0, 1.0}, 8), QuadratureError);
}

TEST_CASE("counts add across a cut") {
    const MeasureMatrix m = oracle::single(ScalarMeasure::atom(1.0, 2.0));  // zeros log 2 + 2 pi i k
    const int whole = count_zeros(m, Rect{0.3, 1.0, -20.0, 20.0});
    CHECK(whole == 7);
    for (double cut : {0.5, 0.81, 0.9})
        CHECK(count_zeros(m, Rect{0.3, cut, -20.0, 20.0}) + count_zeros(m, Rect{cut, 1.0, -20.0, 20.0}) == whole);
    for (double cut : {1.0, -4.0, 9.5})
        CHECK(count_zeros(m, Rect{0.3, 1.0, -20.0, cut}) + count_zeros(m, Rect{0.3, 1.0, cut, 20.0}) == whole);
}

TEST_CASE("locate_roots on closed-form models") {
    {
        const auto r = locate_roots(oracle::upper_poisson(1.0, 1.0), SearchRegion{0.1, 3.0, 5.0});
        REQUIRE(r.size() == 1);
        CHECK(std::abs(r[0].lambda - 1.0) < 1e-9);
        CHECK(r[0].det_multiplicity == 2);
    }
    {
        const auto r = locate_roots(oracle::poisson_delta(), SearchRegion{0.5, 2.0, 50.0});
        REQUIRE(r.size() == 1);
        CHECK(std::abs(r[0].lambda - 1.0) < 1e-9);
        CHECK(r[0].det_multiplicity == 2);
    }
    {
        const auto r = locate_roots(oracle::diagonal_poisson(1.0, 2.0), SearchRegion{0.2, 3.0, 5.0});
        REQUIRE(r.size() == 2);
        CHECK(std::abs(r[0].lambda - 2.0) < 1e-12);
        CHECK(std::abs(r[1].lambda - 1.0) < 1e-12);
        CHECK(r[0].det_multiplicity == 1);
        CHECK(r[1].det_multiplicity == 1);
    }
}

TEST_CASE("complex roots: residuals, conjugates, multiplicities") {
    const MeasureMatrix m = oracle::single(ScalarMeasure::atom(1.0, 2.0));
    const SearchRegion region{0.3, 1.0, 20.0};
    const auto r = locate_roots(m, region);
    REQUIRE(r.size() == 7);
    int total = 0;
    for (const auto& root : r) {
        total += root.det_multiplicity;
        CHECK(std::abs(det_char(m, root.lambda)) < 1e-10);
        CHECK(root.residual < 1e-10);
        CHECK(root.newton_increment < 1e-12);
        CHECK(std::abs(root.lambda.real() - std::log(2.0)) < 1e-10);
        const double k = root.lambda.imag() / (2.0 * M_PI);
        CHECK(std::abs(k - std::round(k)) < 1e-10);
        if (root.lambda.imag() != 0.0) {
            const bool partner = std::any_of(r.begin(), r.end(), [&](const RootRecord& o) {
                return std::abs(o.lambda - std::conj(root.lambda)) < 1e-12;
            });
            CHECK(partner);
        }
    }
    CHECK(total == count_zeros(m, region.rect()));
}

TEST_CASE("largest real part is the Malthusian parameter") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 4; ++trial) {
        const MeasureMatrix m = oracle::random_primitive(rng, 2);
        const double alpha = find_malthusian(m).alpha;
        const double lo = std::max(alpha - 0.5, 0.5 * (alpha + domain_abscissa(m)));
        const auto r = locate_roots(m, SearchRegion{lo, alpha + 1.0, 10.0});
        REQUIRE_FALSE(r.empty());
        CHECK(std::abs(r.front().lambda - alpha) < 1e-9);
        for (const auto& root : r) CHECK(root.lambda.real() <= alpha + 1e-9);
    }
}

TEST_CASE("lattice roots") {
    {
        LatticeMeasureMatrix l(1, 1.0);
        l.weights(0, 0) = {0.0, 2.0};
        const auto r = locate_lattice_roots(l, -5.0);
        REQUIRE(r.size() == 1);
        CHECK(std::abs(r[0].lambda - std::log(2.0)) < 1e-14);
    }
    {
        LatticeMeasureMatrix l(1, 1.0);
        l.weights(0, 0) = {0.0, 0.5};
        CHECK(locate_lattice_roots(l, 0.0).empty());
        const auto r = locate_lattice_roots(l, -std::log(2.0) - 0.1);
        REQUIRE(r.size() == 1);
        CHECK(std::abs(r[0].lambda + std::log(2.0)) < 1e-14);
    }
    {
        // q(z) = (1 - z)(1 - z/2)
        LatticeMeasureMatrix l(2, 1.0);
        l.weights(0, 0) = {0.0, 1.0};
        l.weights(1, 1) = {0.0, 0.5};
        const auto r = locate_lattice_roots(l, -1.0);
        REQUIRE(r.size() == 2);
        CHECK(std::abs(r[0].lambda) < 1e-14);
        CHECK(std::abs(r[1].lambda + std::log(2.0)) < 1e-14);
    }
    {
        // weight 1 at index 2: zeta = +-1, lambda in {0, i pi}
        LatticeMeasureMatrix l(1, 1.0);
        l.weights(0, 0) = {0.0, 0.0, 1.0};
        const auto r = locate_lattice_roots(l, -1.0);
        REQUIRE(r.size() == 2);
        for (const auto& root : r) {
            CHECK(root.lambda.imag() > -M_PI);
            CHECK(root.lambda.imag() <= M_PI);
        }
    }
    CHECK_THROWS_AS(locate_lattice_roots(LatticeMeasureMatrix(2, 1.0), 0.0), DegenerateError);
}

TEST_CASE("lattice roots match Durand-Kerner on the determinant polynomial") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 10; ++trial) {
        const LatticeMeasureMatrix l = oracle::random_lattice(rng);
        auto neg = [](std::vector<double> v) {
            for (auto& x : v) x = -x;
            return v;
        };
        auto one_minus = [&](std::vector<double> v) {
            v = neg(v);
            v[0] += 1.0;
            return v;
        };
        std::vector<double> q = poly_mul(one_minus(l.weights(0, 0)), one_minus(l.weights(1, 1)));
        const std::vector<double> off = poly_mul(l.weights(0, 1), l.weights(1, 0));
        for (std::size_t i = 0; i < off.size(); ++i) q[i] -= off[i];
        const auto zetas = oracle::durand_kerner(q);
        const auto roots = locate_lattice_roots(l, -10.0);
        int total = 0;
        for (const auto& r : roots) total += r.det_multiplicity;
        CHECK(total == static_cast<int>(zetas.size()));
        for (cplx z : zetas) {
            const bool found = std::any_of(roots.begin(), roots.end(), [&](const RootRecord& r) {
                return std::abs(std::exp(-r.lambda) - z) < 1e-8 * std::max(1.0, std::abs(z));
            });
            CHECK(found);
        }
    }
}

TEST_CASE("polynomial helpers") {
    const Polynomial p({2.0, -3.0, 1.0});  // (z - 1)(z - 2)
    CHECK(p.degree() == 2);
    CHECK(std::abs(p(cplx(2.0))) == 0.0);
    CHECK(p.derivative().coefficients() == std::vector<double>{-3.0, 2.0});
    const Polynomial sq = p * Polynomial({-1.0, 1.0});
    CHECK(deflation_multiplicity(sq, 1.0) == 2);
    CHECK(deflation_multiplicity(sq, 2.0) == 1);
    auto roots = polynomial_roots(sq);
    int total = 0;
    for (const auto& r : roots) total += r.multiplicity;
    CHECK(total == 3);
    CHECK((p - p).trimmed().degree() == 0);
}
