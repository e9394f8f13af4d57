#pragma once

#include <utility>

#include "mre/linalg.hpp"
#include "mre/measure.hpp"

namespace mre {

/// Largest eigenvalue modulus. Throws ConvergenceError if the eigen solver fails.
double spectral_radius(const CMatrix& a);
double spectral_radius(const RMatrix& a);

/// Primitivity of the zero pattern of a nonnegative matrix, by boolean powering
/// up to the Wielandt exponent p^2 - 2p + 2.
bool is_primitive(const RMatrix& a);

/// Positive unit (Euclidean) Perron eigenvector of a primitive nonnegative matrix.
/// Throws NotPrimitiveError.
RVector perron_vector(const RMatrix& a);

/// varrho(theta) = rho(L mu(theta)) for real theta in the domain.
double varrho(const MeasureMatrix& m, double theta);

struct MalthusianResult {
    double alpha = 0.0;
    std::pair<double, double> bracket{0.0, 0.0};
    double varrho_at_alpha = 0.0;
};

/// Unique real alpha with rho(L mu(alpha)) = 1, by bracket expansion and bisection.
/// Throws AssumptionError if rho(mu({0})) >= 1 and NoMalthusianError if varrho < 1
/// on the whole sampled domain.
MalthusianResult find_malthusian(const MeasureMatrix& m, double tol_rho = 1e-12);

/// Checks rho(mu({0})) < 1; throws AssumptionError otherwise.
void require_subcritical_instant(const RMatrix& instant);

}  // namespace mre
