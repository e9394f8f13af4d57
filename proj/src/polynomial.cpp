#include "mre/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "mre/errors.hpp"

namespace mre {

Polynomial::Polynomial(std::vector<double> coefficients) : coeffs_(std::move(coefficients)) {
    if (coeffs_.empty()) coeffs_.push_back(0.0);
}

cplx Polynomial::operator()(cplx z) const {
    cplx acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * z + *it;
    return acc;
}

Polynomial Polynomial::derivative() const {
    if (coeffs_.size() <= 1) return constant(0.0);
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = static_cast<double>(i) * coeffs_[i];
    return Polynomial(std::move(d));
}

Polynomial Polynomial::trimmed(double rel_tol) const {
    double scale = 0.0;
    for (double c : coeffs_) scale = std::max(scale, std::abs(c));
    std::vector<double> c = coeffs_;
    while (c.size() > 1 && std::abs(c.back()) <= rel_tol * scale) c.pop_back();
    return Polynomial(std::move(c));
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    std::vector<double> c(std::max(coeffs_.size(), o.coeffs_.size()), 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = (*this)[i] + o[i];
    return Polynomial(std::move(c));
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + o * -1.0; }

Polynomial Polynomial::operator*(const Polynomial& o) const {
    std::vector<double> c(coeffs_.size() + o.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        for (std::size_t j = 0; j < o.coeffs_.size(); ++j) c[i + j] += coeffs_[i] * o.coeffs_[j];
    return Polynomial(std::move(c));
}

Polynomial Polynomial::operator*(double s) const {
    std::vector<double> c = coeffs_;
    for (double& v : c) v *= s;
    return Polynomial(std::move(c));
}

int deflation_multiplicity(const Polynomial& q, cplx c, double rel_tol) {
    std::vector<cplx> a(q.coefficients().begin(), q.coefficients().end());
    int mult = 0;
    while (a.size() > 1) {
        double scale = 0.0;
        double cpow = 1.0;
        for (const auto& v : a) {
            scale += std::abs(v) * cpow;
            cpow *= std::abs(c);
        }
        // synthetic division by (z - c): quotient b, remainder r
        std::vector<cplx> b(a.size() - 1);
        cplx acc = a.back();
        for (std::size_t i = a.size() - 1; i-- > 0;) {
            b[i] = acc;
            acc = a[i] + acc * c;
        }
        if (std::abs(acc) > rel_tol * scale) break;
        ++mult;
        a = std::move(b);
    }
    return mult;
}

namespace {

cplx newton_polish(const Polynomial& q, const Polynomial& dq, cplx z) {
    for (int it = 0; it < 60; ++it) {
        const cplx f = q(z);
        const cplx d = dq(z);
        if (d == cplx(0.0)) break;
        const cplx step = f / d;
        const cplx candidate = z - step;
        if (std::abs(q(candidate)) > std::abs(f)) break;
        z = candidate;
        if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(z))) break;
    }
    return z;
}

}  // namespace

std::vector<PolynomialRoot> polynomial_roots(const Polynomial& input) {
    const Polynomial q = input.trimmed(1e-14);
    std::vector<PolynomialRoot> out;
    if (q.degree() <= 0) return out;

    // roots at the origin
    std::size_t zeros = 0;
    while (zeros < q.coefficients().size() - 1 && q.coefficients()[zeros] == 0.0) ++zeros;
    if (zeros > 0) out.push_back({cplx(0.0), static_cast<int>(zeros)});
    std::vector<double> rest(q.coefficients().begin() + static_cast<std::ptrdiff_t>(zeros), q.coefficients().end());
    const Polynomial r(rest);
    const int d = r.degree();
    if (d <= 0) return out;

    CMatrix companion = CMatrix::Zero(d, d);
    for (int i = 1; i < d; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < d; ++i) companion(i, d - 1) = -r[static_cast<std::size_t>(i)] / r[static_cast<std::size_t>(d)];
    Eigen::ComplexEigenSolver<CMatrix> solver(companion, false);
    if (solver.info() != Eigen::Success) throw ConvergenceError("companion eigenvalues did not converge");

    const Polynomial dr = r.derivative();
    std::vector<cplx> raw(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) raw[static_cast<std::size_t>(i)] = newton_polish(r, dr, solver.eigenvalues()(i));

    // group nearby roots (union-find over a distance threshold)
    std::vector<std::size_t> parent(raw.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < raw.size(); ++i)
        for (std::size_t j = i + 1; j < raw.size(); ++j)
            if (std::abs(raw[i] - raw[j]) < 1e-4 * std::max(1.0, std::abs(raw[i]))) parent[find(i)] = find(j);

    std::vector<std::vector<cplx>> groups(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) groups[find(i)].push_back(raw[i]);
    for (const auto& g : groups) {
        if (g.empty()) continue;
        const int m = static_cast<int>(g.size());
        if (m == 1) {
            out.push_back({g.front(), 1});
            continue;
        }
        cplx c = std::accumulate(g.begin(), g.end(), cplx(0.0)) / static_cast<double>(m);
        Polynomial dm = r;
        for (int k = 0; k < m - 1; ++k) dm = dm.derivative();
        c = newton_polish(dm, dm.derivative(), c);
        if (deflation_multiplicity(r, c) >= m) {
            out.push_back({c, m});
        } else {
            for (const auto& z : g) out.push_back({z, 1});
        }
    }
    return out;
}

}  // namespace mre
