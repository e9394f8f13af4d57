#pragma once

// Reference computations used only by the tests. None of these call the
// closed forms or solvers they are compared against.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "mre/linalg.hpp"
#include "mre/measure.hpp"

namespace oracle {

using mre::cplx;
using mre::CMatrix;
using mre::RMatrix;

/// Adaptive Gauss-Kronrod (61 points) on [a, b].
double integrate(const std::function<double(double)>& g, double a, double b, double tol = 1e-13);
/// exp_sinh quadrature on [a, inf).
double integrate_to_infinity(const std::function<double(double)>& g, double a = 0.0);

/// int_0^t x^k e^{lambda x} dx by quadrature of the real and imaginary parts.
cplx integral_xk_exp(int k, cplx lambda, double t);

/// Laplace transform of one scalar measure by quadrature (atoms summed directly).
cplx laplace(const mre::ScalarMeasure& m, cplx z);
CMatrix laplace_matrix(const mre::MeasureMatrix& m, cplx z);

/// Roots of sum_i c[i] z^i by Durand-Kerner iteration.
std::vector<cplx> durand_kerner(const std::vector<double>& c);

/// Dominant eigenvalue of a nonnegative primitive matrix by power iteration.
double power_radius(const RMatrix& a, mre::RVector* vector = nullptr);

/// Malthusian parameter by bisection on the quadrature transform and power iteration.
double malthusian(const mre::MeasureMatrix& m, double lo, double hi);

/// U({n}), n = 0..N, by summing convolution powers until they vanish.
std::vector<RMatrix> lattice_U_by_powers(const mre::LatticeMeasureMatrix& l, std::size_t n_max);

/// sup over an n-point grid on [0, eta_max] of ||(I - L mu(theta + i eta))^{-1}||.
double resolvent_sup(const mre::MeasureMatrix& m, double theta, double eta_max, int n);

/// A_1 at a simple pole: (z - lambda)(I - L mu(z))^{-1} averaged over 8 rays at radius r.
CMatrix residue_limit(const mre::MeasureMatrix& m, cplx lambda, double r = 1e-3);

// Models used across test files.
mre::MeasureMatrix poisson_delta(double alpha = 1.0);   // xi11 = xi22 = Poisson(alpha), xi12 = delta_0
mre::MeasureMatrix poisson_tilted(double alpha = 1.0);  // xi12 = Poisson(alpha) instead
mre::MeasureMatrix upper_poisson(double a, double b);   // L mu(z) = [[a, b], [0, a]] / z
mre::MeasureMatrix diagonal_poisson(double a1, double a2);
mre::MeasureMatrix single(const mre::ScalarMeasure& m);

/// All entries positive exp-poly densities (primitive), 2 or 3 types.
mre::MeasureMatrix random_primitive(std::mt19937_64& rng, int p);
/// Two-type lattice with support {0..3} and rho(mu({0})) < 1.
mre::LatticeMeasureMatrix random_lattice(std::mt19937_64& rng);

}  // namespace oracle
