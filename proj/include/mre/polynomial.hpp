#pragma once

#include <vector>

#include "mre/linalg.hpp"

namespace mre {

/// Dense real polynomial, coefficients from the constant term upwards.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coefficients);

    static Polynomial constant(double c) { return Polynomial({c}); }

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<double>& coefficients() const { return coeffs_; }
    double operator[](std::size_t i) const { return i < coeffs_.size() ? coeffs_[i] : 0.0; }

    cplx operator()(cplx z) const;
    Polynomial derivative() const;

    /// Drops leading coefficients below `rel_tol` times the largest magnitude.
    Polynomial trimmed(double rel_tol = 0.0) const;

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial operator*(double s) const;

private:
    std::vector<double> coeffs_{0.0};
};

/// Root with multiplicity.
struct PolynomialRoot {
    cplx value;
    int multiplicity = 1;
};

/// All roots: companion-matrix eigenvalues, Newton polish, then clusters
/// grouped and confirmed by repeated synthetic division (deflation).
std::vector<PolynomialRoot> polynomial_roots(const Polynomial& q);

/// Number of times (z - c) divides q within relative tolerance `rel_tol`.
int deflation_multiplicity(const Polynomial& q, cplx c, double rel_tol = 1e-7);

}  // namespace mre
