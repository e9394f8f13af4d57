#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "mre/linalg.hpp"
#include "mre/measure.hpp"
#include "mre/polynomial.hpp"

namespace mre {

/// Closed axis-aligned rectangle in the complex plane.
struct Rect {
    double re_min = 0.0;
    double re_max = 0.0;
    double im_min = 0.0;
    double im_max = 0.0;

    bool contains(cplx z, double margin = 0.0) const {
        return z.real() >= re_min - margin && z.real() <= re_max + margin && z.imag() >= im_min - margin &&
               z.imag() <= im_max + margin;
    }
    double width() const { return re_max - re_min; }
    double height() const { return im_max - im_min; }
};

/// re_min < Re z <= re_max, |Im z| <= im_max. Always symmetric about the real axis.
struct SearchRegion {
    double re_min = 0.0;
    double re_max = 0.0;
    double im_max = 0.0;

    Rect rect() const { return {re_min, re_max, -im_max, im_max}; }
    void validate() const;
};

struct RootRecord {
    cplx lambda;
    int det_multiplicity = 1;
    int pole_order = 0;             // filled by the laurent module
    std::vector<CMatrix> laurent;   // A_{lambda,1..pole_order}, filled by the laurent module
    double residual = 0.0;          // |det(I - L mu(lambda))| at the returned point
    double newton_increment = 0.0;  // last polishing step (modified Newton for clusters)
};

/// f(z) together with f'(z).
using AnalyticFunction = std::function<std::pair<cplx, cplx>(cplx)>;

struct RootOptions {
    double tol_det = 1e-10;
    int max_depth = 40;
    double cluster_tol = 1e-8;
    int max_nudges = 8;
};

/// det(I - L mu(z)) (cofactor expansion for small p). Throws DomainError.
cplx det_char(const MeasureMatrix& m, cplx z);
/// det(I - L mu(z)) and its z-derivative.
std::pair<cplx, cplx> det_char_with_derivative(const MeasureMatrix& m, cplx z);

/// Argument-principle zero count of `f` inside `rect` by phase tracking.
/// Throws BoundaryRootError if a boundary sample is numerically zero and
/// QuadratureError if the phase cannot be resolved.
int count_zeros(const AnalyticFunction& f, const Rect& rect);
int count_zeros(const MeasureMatrix& m, const Rect& rect);

/// As count_zeros, but on BoundaryRootError the rectangle is expanded by a
/// random relative perturbation of 1e-6 and retried (at most `max_nudges` times).
/// The rectangle actually used is written to `used` when non-null.
int count_zeros_nudged(const AnalyticFunction& f, const Rect& rect, int max_nudges = 8, Rect* used = nullptr);

/// Zeros of `f` in `rect` with multiplicities, by quadtree subdivision, cluster
/// detection from contour moments and polishing. Sorted by decreasing real part.
std::vector<RootRecord> locate_zeros(const AnalyticFunction& f, const Rect& rect, const RootOptions& opts = {});

/// Roots of det(I - L mu(z)) in the region, conjugate-closed, sorted by decreasing Re.
std::vector<RootRecord> locate_roots(const MeasureMatrix& m, const SearchRegion& region,
                                     const RootOptions& opts = {});

/// det(I - G mu(z)) as an exact polynomial (cofactor expansion over polynomial entries).
Polynomial lattice_characteristic_polynomial(const LatticeMeasureMatrix& lattice);

/// Roots lambda = -log(zeta) of det(I - G mu(zeta)) with 0 < |zeta| < e^{-theta},
/// Im lambda in (-pi, pi]. Throws DegenerateError if the polynomial is constant.
std::vector<RootRecord> locate_lattice_roots(const LatticeMeasureMatrix& lattice, double theta);

}  // namespace mre
