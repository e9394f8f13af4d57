#include "mre/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mre/errors.hpp"
#include "mre/transform.hpp"

namespace mre {

namespace {

constexpr double kOverflowExponent = 700.0;

void require_components(const Characteristic& f, int p) {
    if (f.p() != p)
        throw InvalidMeasureError("characteristic has " + std::to_string(f.p()) + " components, model has p = " +
                                  std::to_string(p));
    f.validate();
}

std::vector<RootRecord> nonlattice_roots(const MeasureMatrix& m, const SearchRegion& region,
                                         const ExpansionOptions& opts, MalthusianResult& mal) {
    m.validate();
    region.validate();
    if (!(region.re_min > 0.0))
        throw UnsupportedRootError("non-lattice expansions need re_min > 0; roots with Re lambda <= 0 are declined");
    mal = find_malthusian(m, opts.tol_rho);
    if (!(mal.alpha > region.re_min && mal.alpha <= region.re_max))
        throw DomainError("the Malthusian parameter " + std::to_string(mal.alpha) + " lies outside the search region");
    auto roots = locate_roots(m, region, opts.roots);
    attach_laurent(m, roots, opts.laurent);
    return roots;
}

CMatrix column(const CVector& v) {
    CMatrix c(v.size(), 1);
    c.col(0) = v;
    return c;
}

}  // namespace

std::string to_string(ExpansionKind kind) {
    switch (kind) {
        case ExpansionKind::UNonLattice:
            return "U-nonlattice";
        case ExpansionKind::FNonLattice:
            return "F-nonlattice";
        case ExpansionKind::ULattice:
            return "U-lattice";
        case ExpansionKind::FLattice:
            return "F-lattice";
    }
    return "unknown";
}

Expansion build_U_expansion(const MeasureMatrix& m, const SearchRegion& region, const ExpansionOptions& opts) {
    Expansion e;
    e.kind = ExpansionKind::UNonLattice;
    e.rows = e.cols = m.p();
    e.roots = nonlattice_roots(m, region, opts, e.malthusian);
    e.has_malthusian = true;
    for (const auto& r : e.roots) {
        const auto c = c_coeffs(r.lambda, r.laurent);
        for (std::size_t k = 0; k < c.size(); ++k) e.terms.push_back({r.lambda, static_cast<int>(k), c[k]});
    }
    e.remainder_exponent = region.re_min;
    e.remainder_poly_degree = 1;
    return e;
}

Expansion build_F_expansion(const MeasureMatrix& m, const Characteristic& f, const SearchRegion& region,
                            const ExpansionOptions& opts) {
    require_components(f, m.p());
    Expansion e;
    e.kind = ExpansionKind::FNonLattice;
    e.rows = m.p();
    e.cols = 1;
    e.roots = nonlattice_roots(m, region, opts, e.malthusian);
    e.has_malthusian = true;

    double theta = region.re_min;
    for (const auto& comp : f.components) theta = std::max(theta, variation_order(comp));
    double lowest = region.re_max;
    for (const auto& r : e.roots) lowest = std::min(lowest, r.lambda.real());
    const double gap = lowest - theta;
    if (!(gap > 0.0))
        throw StripRootError("a root lies in the strip (" + std::to_string(region.re_min) + ", " +
                             std::to_string(theta) + "] below the variation order of f");
    e.epsilon = 0.5 * std::min(1e-3, gap);
    for (const auto& comp : f.components)
        if (!std::isfinite(variation_moment(comp, theta + e.epsilon)))
            throw DivergentMomentError("variation moment of f is infinite at theta = " +
                                       std::to_string(theta + e.epsilon));

    for (const auto& r : e.roots) {
        const auto b = b_coeffs(r.lambda, c_coeffs(r.lambda, r.laurent));
        const auto moments = char_moments(f, r.lambda, static_cast<int>(b.size()) - 1);
        const auto bv = b_vector_coeffs(b, moments);
        for (std::size_t k = 0; k < bv.size(); ++k) e.terms.push_back({r.lambda, static_cast<int>(k), column(bv[k])});
    }
    e.remainder_exponent = theta + e.epsilon;
    e.remainder_poly_degree = 0;
    return e;
}

namespace {

Expansion lattice_common(const LatticeMeasureMatrix& lattice, double theta, const ExpansionOptions& opts) {
    lattice.validate();
    Expansion e;
    e.span = lattice.span();
    e.roots = locate_lattice_roots(lattice, theta);
    attach_lattice_laurent(lattice, e.roots, opts.laurent);
    try {
        e.malthusian = find_malthusian(embed(lattice), opts.tol_rho);
        e.malthusian.alpha *= lattice.span();
        e.has_malthusian = true;
    } catch (const NoMalthusianError&) {
    }
    e.remainder_exponent = theta;
    e.remainder_poly_degree = 0;
    return e;
}

}  // namespace

Expansion build_lattice_F_expansion(const LatticeMeasureMatrix& lattice, const Characteristic& f, double theta,
                                    const ExpansionOptions& opts) {
    require_components(f, lattice.p());
    lattice_char_series(f, lattice.span(), std::exp(-theta), 0);  // summability of f(n) e^{-theta n}
    Expansion e = lattice_common(lattice, theta, opts);
    e.kind = ExpansionKind::FLattice;
    e.rows = lattice.p();
    e.cols = 1;
    for (const auto& r : e.roots) {
        const int kappa = static_cast<int>(r.laurent.size());
        std::vector<CMatrix> x;
        for (const auto& v : lattice_char_series(f, lattice.span(), std::exp(-r.lambda), kappa - 1))
            x.push_back(column(v));
        const auto coeffs = lattice_power_coeffs(r.lambda, r.laurent, x);
        for (std::size_t k = 0; k < coeffs.size(); ++k) e.terms.push_back({r.lambda, static_cast<int>(k), coeffs[k]});
    }
    return e;
}

Expansion build_lattice_U_expansion(const LatticeMeasureMatrix& lattice, double theta, const ExpansionOptions& opts) {
    Expansion e = lattice_common(lattice, theta, opts);
    e.kind = ExpansionKind::ULattice;
    e.rows = e.cols = lattice.p();
    const Eigen::Index p = lattice.p();
    for (const auto& r : e.roots) {
        std::vector<CMatrix> x(r.laurent.size(), CMatrix::Zero(p, p));
        x[0] = CMatrix::Identity(p, p);
        const auto coeffs = lattice_power_coeffs(r.lambda, r.laurent, x);
        for (std::size_t k = 0; k < coeffs.size(); ++k) e.terms.push_back({r.lambda, static_cast<int>(k), coeffs[k]});
    }
    return e;
}

ScaledValue evaluate_scaled(const Expansion& e, double t) {
    if (!(t >= 0.0)) throw DomainError("expansions are evaluated at t >= 0");
    ScaledValue out;
    for (const auto& term : e.terms) {
        const double s = term.lambda.real() * t;
        if (s > kOverflowExponent) out.exponent = std::max(out.exponent, s);
    }
    CMatrix sum = CMatrix::Zero(e.rows, e.cols);
    for (const auto& term : e.terms) {
        cplx w = std::exp(term.lambda * t - out.exponent);
        for (int k = 0; k < term.power; ++k) w *= t;
        sum += w * term.coeff;
    }
    out.mantissa = sum.real();
    const double re = sum.real().cwiseAbs().maxCoeff();
    const double im = sum.imag().cwiseAbs().maxCoeff();
    out.imag_residue = (re > 0.0) ? im / re : im;
    return out;
}

RMatrix evaluate(const Expansion& e, double t) {
    ScaledValue v = evaluate_scaled(e, t);
    if (v.exponent > 0.0)
        throw OverflowGuard("expansion value exceeds e^700 at t = " + std::to_string(t) +
                            "; use the scaled representation");
    return v.mantissa;
}

}  // namespace mre
