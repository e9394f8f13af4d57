#pragma once

#include <string>
#include <vector>

#include "mre/laurent.hpp"
#include "mre/linalg.hpp"
#include "mre/measure.hpp"
#include "mre/roots.hpp"
#include "mre/spectral.hpp"

namespace mre {

enum class ExpansionKind { UNonLattice, FNonLattice, ULattice, FLattice };

std::string to_string(ExpansionKind kind);

/// e^{lambda t} t^k coeff. coeff is p x p for U expansions and p x 1 for F.
struct ExpansionTerm {
    cplx lambda;
    int power = 0;
    CMatrix coeff;
};

struct Expansion {
    ExpansionKind kind = ExpansionKind::UNonLattice;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::vector<ExpansionTerm> terms;
    double remainder_exponent = 0.0;
    int remainder_poly_degree = 0;  // error O(t^d e^{theta t})
    double epsilon = 0.0;           // F expansions: theta + epsilon is the reported exponent
    double span = 1.0;              // lattice: t = n * span
    std::vector<RootRecord> roots;
    bool has_malthusian = false;
    MalthusianResult malthusian;
};

/// Value = mantissa * e^{exponent}. exponent is 0 unless Re lambda * t > 700 for some term.
struct ScaledValue {
    RMatrix mantissa;
    double exponent = 0.0;
    double imag_residue = 0.0;  // max |Im| of the complex sum, relative to max |Re|
};

struct ExpansionOptions {
    RootOptions roots;
    LaurentOptions laurent;
    double tol_rho = 1e-12;
};

/// U(t) ~ sum e^{lambda t} sum_k t^k C_{lambda,k}; remainder O(t e^{re_min t}).
/// Needs region.re_min > 0 and alpha inside the region.
Expansion build_U_expansion(const MeasureMatrix& m, const SearchRegion& region, const ExpansionOptions& opts = {});

/// F(t) = (U * f)(t) ~ sum e^{lambda t} sum_k t^k b_{lambda,k,f}.
Expansion build_F_expansion(const MeasureMatrix& m, const Characteristic& f, const SearchRegion& region,
                            const ExpansionOptions& opts = {});

/// Lattice F(n) with f sampled at n * span; remainder O(e^{theta n}).
Expansion build_lattice_F_expansion(const LatticeMeasureMatrix& lattice, const Characteristic& f, double theta,
                                    const ExpansionOptions& opts = {});

/// Lattice renewal density U({n}) (f = e_j at n = 0 for every j).
Expansion build_lattice_U_expansion(const LatticeMeasureMatrix& lattice, double theta,
                                    const ExpansionOptions& opts = {});

/// Evaluates at t (lattice expansions: at n = t, the lattice index).
ScaledValue evaluate_scaled(const Expansion& e, double t);
/// Plain value; throws OverflowGuard if the value needs a scale exponent.
RMatrix evaluate(const Expansion& e, double t);

}  // namespace mre
