#pragma once

#include "mre/linalg.hpp"
#include "mre/measure.hpp"

namespace mre {

/// Laplace transform of a single measure, int e^{-z x} m(dx). No domain check.
cplx laplace(const ScalarMeasure& m, cplx z);
/// d/dz of `laplace`.
cplx laplace_derivative(const ScalarMeasure& m, cplx z);

/// Infimum theta* such that the transform is finite for Re z > theta*:
/// the largest -beta over density terms, or -inf without densities.
double domain_abscissa(const MeasureMatrix& m);

/// L mu(z), entrywise closed form.
/// Throws DomainError if Re z <= domain_abscissa(m), PoleError at a density pole.
CMatrix laplace_matrix(const MeasureMatrix& m, cplx z);
CMatrix laplace_matrix_derivative(const MeasureMatrix& m, cplx z);

/// Generating function G mu(z) = sum_n mu({n}) z^n (entire).
CMatrix generating_matrix(const LatticeMeasureMatrix& lattice, cplx z);
CMatrix generating_matrix_derivative(const LatticeMeasureMatrix& lattice, cplx z);

}  // namespace mre
