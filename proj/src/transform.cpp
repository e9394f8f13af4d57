#include "mre/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mre/errors.hpp"

namespace mre {

namespace {

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

void check_pole(const ExpPolyTerm& d, cplx z) {
    if (z + d.rate == cplx(0.0)) throw PoleError("evaluation point hits the pole of a density term");
}

void check_domain(const MeasureMatrix& m, cplx z) {
    const double abscissa = domain_abscissa(m);
    if (!(z.real() > abscissa))
        throw DomainError("Re z = " + std::to_string(z.real()) + " is not above the domain abscissa " +
                          std::to_string(abscissa));
}

}  // namespace

cplx laplace(const ScalarMeasure& m, cplx z) {
    cplx v = 0.0;
    for (const auto& a : m.atoms) v += a.weight * std::exp(-z * a.location);
    for (const auto& d : m.densities) {
        check_pole(d, z);
        v += d.coefficient * factorial(d.power) / std::pow(z + d.rate, d.power + 1);
    }
    return v;
}

cplx laplace_derivative(const ScalarMeasure& m, cplx z) {
    cplx v = 0.0;
    for (const auto& a : m.atoms) v -= a.weight * a.location * std::exp(-z * a.location);
    for (const auto& d : m.densities) {
        check_pole(d, z);
        v -= d.coefficient * factorial(d.power + 1) / std::pow(z + d.rate, d.power + 2);
    }
    return v;
}

double domain_abscissa(const MeasureMatrix& m) {
    double a = -std::numeric_limits<double>::infinity();
    for (const auto& e : m.entries())
        for (const auto& d : e.densities)
            if (d.coefficient != 0.0) a = std::max(a, -d.rate);
    return a;
}

CMatrix laplace_matrix(const MeasureMatrix& m, cplx z) {
    check_domain(m, z);
    CMatrix out(m.p(), m.p());
    for (int i = 0; i < m.p(); ++i)
        for (int j = 0; j < m.p(); ++j) out(i, j) = laplace(m.at(i, j), z);
    return out;
}

CMatrix laplace_matrix_derivative(const MeasureMatrix& m, cplx z) {
    check_domain(m, z);
    CMatrix out(m.p(), m.p());
    for (int i = 0; i < m.p(); ++i)
        for (int j = 0; j < m.p(); ++j) out(i, j) = laplace_derivative(m.at(i, j), z);
    return out;
}

CMatrix generating_matrix(const LatticeMeasureMatrix& lattice, cplx z) {
    const int p = lattice.p();
    CMatrix out(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            const auto& w = lattice.weights(i, j);
            cplx acc = 0.0;
            for (auto it = w.rbegin(); it != w.rend(); ++it) acc = acc * z + *it;  // Horner
            out(i, j) = acc;
        }
    return out;
}

CMatrix generating_matrix_derivative(const LatticeMeasureMatrix& lattice, cplx z) {
    const int p = lattice.p();
    CMatrix out(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            const auto& w = lattice.weights(i, j);
            cplx acc = 0.0;
            for (std::size_t n = w.size(); n-- > 1;) acc = acc * z + static_cast<double>(n) * w[n];
            out(i, j) = acc;
        }
    return out;
}

}  // namespace mre
