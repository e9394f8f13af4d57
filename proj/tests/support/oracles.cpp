#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

double integrate(const std::function<double(double)>& g, double a, double b, double tol) {
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, a, b, 8, tol, &err);
}

double integrate_to_infinity(const std::function<double(double)>& g, double a) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate([&](double x) { return g(x + a); });
}

cplx integral_xk_exp(int k, cplx lambda, double t) {
    auto part = [&](bool imag) {
        return integrate(
            [&](double x) {
                const cplx v = std::pow(x, k) * std::exp(lambda * x);
                return imag ? v.imag() : v.real();
            },
            0.0, t, 1e-14);
    };
    return {part(false), part(true)};
}

cplx laplace(const mre::ScalarMeasure& m, cplx z) {
    cplx sum = 0.0;
    for (const auto& a : m.atoms) sum += a.weight * std::exp(-z * a.location);
    for (const auto& d : m.densities) {
        auto part = [&](bool imag) {
            return integrate_to_infinity([&](double x) {
                const cplx v = d.coefficient * std::pow(x, d.power) * std::exp(-(z + d.rate) * x);
                return imag ? v.imag() : v.real();
            });
        };
        sum += cplx(part(false), part(true));
    }
    return sum;
}

CMatrix laplace_matrix(const mre::MeasureMatrix& m, cplx z) {
    CMatrix out(m.p(), m.p());
    for (int i = 0; i < m.p(); ++i)
        for (int j = 0; j < m.p(); ++j) out(i, j) = laplace(m.at(i, j), z);
    return out;
}

std::vector<cplx> durand_kerner(const std::vector<double>& c) {
    std::size_t n = c.size() - 1;
    while (n > 0 && c[n] == 0.0) --n;
    std::vector<cplx> z(n);
    const cplx seed(0.4, 0.9);
    for (std::size_t i = 0; i < n; ++i) z[i] = std::pow(seed, static_cast<double>(i));
    auto eval = [&](cplx x) {
        cplx v = 0.0;
        for (std::size_t i = n + 1; i-- > 0;) v = v * x + c[i] / c[n];
        return v;
    };
    for (int it = 0; it < 5000; ++it) {
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cplx den = 1.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) den *= z[i] - z[j];
            const cplx step = eval(z[i]) / den;
            z[i] -= step;
            change = std::max(change, std::abs(step));
        }
        if (change < 1e-15) break;
    }
    return z;
}

double power_radius(const RMatrix& a, mre::RVector* vector) {
    mre::RVector v = mre::RVector::Ones(a.rows()) / std::sqrt(static_cast<double>(a.rows()));
    double rho = 0.0;
    for (int it = 0; it < 100000; ++it) {
        mre::RVector w = a * v;
        const double next = w.norm();
        if (next == 0.0) return 0.0;
        w /= next;
        const bool done = (w - v).norm() < 1e-15 && std::abs(next - rho) < 1e-15 * next;
        v = w;
        rho = next;
        if (done) break;
    }
    if (vector) *vector = v;
    return rho;
}

double malthusian(const mre::MeasureMatrix& m, double lo, double hi) {
    auto rho = [&](double theta) { return power_radius(laplace_matrix(m, theta).real()); };
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (rho(mid) >= 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<RMatrix> lattice_U_by_powers(const mre::LatticeMeasureMatrix& l, std::size_t n_max) {
    const int p = l.p();
    std::vector<RMatrix> total(n_max + 1, RMatrix::Zero(p, p));
    std::vector<RMatrix> power(n_max + 1, RMatrix::Zero(p, p));
    power[0] = RMatrix::Identity(p, p);
    std::vector<RMatrix> mass(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) mass[n] = l.mass_at(n);
    for (int k = 0; k < 100000; ++k) {
        double size = 0.0;
        double scale = 0.0;
        for (std::size_t n = 0; n <= n_max; ++n) {
            total[n] += power[n];
            size = std::max(size, power[n].cwiseAbs().maxCoeff());
            scale = std::max(scale, total[n].cwiseAbs().maxCoeff());
        }
        if (size <= 1e-17 * scale) break;
        std::vector<RMatrix> next(n_max + 1, RMatrix::Zero(p, p));
        for (std::size_t n = 0; n <= n_max; ++n)
            for (std::size_t m = 0; m <= n; ++m) next[n] += mass[m] * power[n - m];
        power = std::move(next);
    }
    return total;
}

double resolvent_sup(const mre::MeasureMatrix& m, double theta, double eta_max, int n) {
    double sup = 0.0;
    const int p = m.p();
    for (int i = 0; i < n; ++i) {
        const double eta = eta_max * i / (n - 1);
        const CMatrix inv = (CMatrix::Identity(p, p) - laplace_matrix(m, cplx(theta, eta))).inverse();
        sup = std::max(sup, inv.cwiseAbs().rowwise().sum().maxCoeff());
    }
    return sup;
}

CMatrix residue_limit(const mre::MeasureMatrix& m, cplx lambda, double r) {
    const int p = m.p();
    // averaging over 8 equally spaced rays cancels the dz^1..dz^7 terms of dz * R(lambda + dz)
    CMatrix acc = CMatrix::Zero(p, p);
    for (int k = 0; k < 8; ++k) {
        const cplx dz = std::polar(r, 2.0 * M_PI * k / 8.0);
        acc += dz * (CMatrix::Identity(p, p) - laplace_matrix(m, lambda + dz)).inverse();
    }
    return acc / 8.0;
}

mre::MeasureMatrix poisson_delta(double alpha) {
    mre::MeasureMatrix m(2);
    m.at(0, 0) = mre::ScalarMeasure::poisson(alpha);
    m.at(0, 1) = mre::ScalarMeasure::atom(0.0, 1.0);
    m.at(1, 1) = mre::ScalarMeasure::poisson(alpha);
    return m;
}

mre::MeasureMatrix poisson_tilted(double alpha) {
    mre::MeasureMatrix m(2);
    m.at(0, 0) = mre::ScalarMeasure::poisson(alpha);
    m.at(0, 1) = mre::ScalarMeasure::poisson(alpha);
    m.at(1, 1) = mre::ScalarMeasure::poisson(alpha);
    return m;
}

mre::MeasureMatrix upper_poisson(double a, double b) {
    mre::MeasureMatrix m(2);
    m.at(0, 0) = mre::ScalarMeasure::poisson(a);
    m.at(0, 1) = mre::ScalarMeasure::poisson(b);
    m.at(1, 1) = mre::ScalarMeasure::poisson(a);
    return m;
}

mre::MeasureMatrix diagonal_poisson(double a1, double a2) {
    mre::MeasureMatrix m(2);
    m.at(0, 0) = mre::ScalarMeasure::poisson(a1);
    m.at(1, 1) = mre::ScalarMeasure::poisson(a2);
    return m;
}

mre::MeasureMatrix single(const mre::ScalarMeasure& s) {
    mre::MeasureMatrix m(1);
    m.at(0, 0) = s;
    return m;
}

mre::MeasureMatrix random_primitive(std::mt19937_64& rng, int p) {
    std::uniform_real_distribution<double> coef(0.2, 1.5);
    std::uniform_real_distribution<double> rate(0.5, 2.0);
    std::uniform_int_distribution<int> power(0, 1);
    mre::MeasureMatrix m(p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) m.at(i, j) = mre::ScalarMeasure::density(coef(rng), power(rng), rate(rng));
    return m;
}

mre::LatticeMeasureMatrix random_lattice(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> w(0.0, 0.6);
    for (;;) {
        mre::LatticeMeasureMatrix l(2, 1.0);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                auto& v = l.weights(i, j);
                v.assign(4, 0.0);
                for (auto& x : v) x = w(rng);
                v[0] *= 0.5;
            }
        if (power_radius(l.mass_at(0)) < 0.9) return l;
    }
}

}  // namespace oracle
