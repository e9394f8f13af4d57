#pragma once

#include <functional>
#include <vector>

#include "mre/linalg.hpp"
#include "mre/measure.hpp"
#include "mre/roots.hpp"

namespace mre {

struct LaurentOptions {
    double tol_laurent = 1e-9;   // relative to max_k ||A_k||
    double tol_converge = 1e-11;  // successive node-doubling difference
    int min_nodes = 64;
    int max_nodes = 1 << 14;
};

struct LaurentData {
    cplx lambda;
    cplx centre;  // expansion point: lambda, or zeta = e^{-lambda} for lattice data
    double radius = 0.0;
    std::vector<CMatrix> A;  // A_1 .. A_m, m = det_multiplicity
    int pole_order = 0;
    int nodes = 0;
};

/// Matrix-valued function z -> I - T(z) whose inverse is expanded.
using MatrixFunction = std::function<CMatrix(cplx)>;

/// Contour coefficients (1/2 pi i) \oint (z-c)^{k-1} M(z)^{-1} dz, k = 1..m, on
/// |z - c| = r by the trapezoidal rule with node doubling. Throws
/// SingularContourError, QuadratureError.
std::vector<CMatrix> contour_laurent(const MatrixFunction& m, cplx centre, double radius, int count,
                                     const LaurentOptions& opts, int* nodes_used = nullptr);

/// Largest k with ||A_k|| > tol * max_j ||A_j|| (at least 1).
int detect_pole_order(const std::vector<CMatrix>& a, double tol);

/// Default contour radius 1/4 min(distance to the other roots, Re lambda - abscissa, 1).
double laurent_radius(const RootRecord& root, const std::vector<RootRecord>& others, double abscissa);

/// Laurent matrices of (I - L mu(z))^{-1} at a root. The radius is shrunk
/// (halved, up to 10 times) until the circle encloses exactly det_multiplicity
/// zeros of the determinant; RadiusError otherwise.
LaurentData laurent_coeffs(const MeasureMatrix& m, const RootRecord& root, double radius,
                           const LaurentOptions& opts = {});
LaurentData laurent_coeffs(const MeasureMatrix& m, const RootRecord& root, const std::vector<RootRecord>& all,
                           const LaurentOptions& opts = {});

/// Fills pole_order and laurent for every root. Conjugate partners get
/// exactly conjugated matrices.
void attach_laurent(const MeasureMatrix& m, std::vector<RootRecord>& roots, const LaurentOptions& opts = {});

/// C_{lambda,0..k-1}. Throws UnsupportedRootError unless Re lambda > 0.
std::vector<CMatrix> c_coeffs(cplx lambda, const std::vector<CMatrix>& a);
/// B_{lambda,k} = (k+1) C_{lambda,k+1} + lambda C_{lambda,k}, with C_{k(lambda)} = 0.
std::vector<CMatrix> b_coeffs(cplx lambda, const std::vector<CMatrix>& c);

/// Laurent matrices of (I - G mu(z))^{-1} around zeta = e^{-lambda}, lambda in
/// lattice index units.
LaurentData lattice_laurent(const LatticeMeasureMatrix& lattice, const RootRecord& root,
                            const LaurentOptions& opts = {});
void attach_lattice_laurent(const LatticeMeasureMatrix& lattice, std::vector<RootRecord>& roots,
                            const LaurentOptions& opts = {});

struct BridgeCheck {
    int lattice_order = 0;
    int nonlattice_order = 0;
    double max_difference = 0.0;  // ||B_k - A_k (-h e^{-lambda})^k|| at the top order k
};

/// Compares the lattice Laurent data with the non-lattice data of the embedded
/// atom matrix at lambda / span.
BridgeCheck lattice_bridge_check(const LatticeMeasureMatrix& lattice, const RootRecord& root,
                                 const LaurentOptions& opts = {});

/// m_j = int_0^inf f(x) x^j e^{-lambda x} dx, j = 0..jmax, one p-vector each.
/// Throws DivergentMomentError when Re lambda does not exceed the growth order of f.
std::vector<CVector> char_moments(const Characteristic& f, cplx lambda, int jmax);

/// b_{lambda,j,f} = sum_{k>=j} B_k binom(k,j) (-1)^{k-j} m_{k-j}.
std::vector<CVector> b_vector_coeffs(const std::vector<CMatrix>& b, const std::vector<CVector>& moments);

/// f_l(zeta) = sum_n f(n h) binom(n, l) zeta^{n-l}, l = 0..lmax.
std::vector<CVector> lattice_char_series(const Characteristic& f, double span, cplx zeta, int lmax);

/// Coefficients of n^k (k = 0..kappa-1) in sum_d binom(n+d-1, d-1) (-e^lambda)^d D_d,
/// where D_d = sum_l B_{d+l} X_l. X_l are p x q blocks.
std::vector<CMatrix> lattice_power_coeffs(cplx lambda, const std::vector<CMatrix>& b, const std::vector<CMatrix>& x);

/// Max over 20 points on |z - lambda| = r/2 of the holomorphic remainder after
/// removing the principal part and a least-squares quadratic, relative to
/// ||(I - L mu(z))^{-1}||.
double quadratic_fit_residual(const MeasureMatrix& m, const LaurentData& ld);
/// quadratic_fit_residual when it is at most 1e-6. Otherwise the larger of the
/// remainder's negative-power modes on the circles r/2 and r/4 (zero when the
/// principal part is exact), relative to ||(I - L mu(z))^{-1}||.
double reconstruction_residual(const MeasureMatrix& m, const LaurentData& ld);

}  // namespace mre
