#include "mre/laurent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/LU>
#include <Eigen/QR>

#include "mre/errors.hpp"
#include "mre/transform.hpp"

namespace mre {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxRadiusHalvings = 10;

CMatrix checked_inverse(const CMatrix& a) {
    const Eigen::PartialPivLU<CMatrix> lu(a);
    const CMatrix inv = lu.inverse();
    if (!inv.allFinite() || inf_norm(inv) * inf_norm(a) > 1e14)
        throw SingularContourError("I - T(z) is numerically singular on the contour");
    return inv;
}

// Winding number of a scalar function around |z - c| = r by phase tracking.
int circle_winding(const std::function<cplx(cplx)>& f, cplx c, double r) {
    for (int n = 256; n <= (1 << 14); n *= 2) {
        double total = 0.0;
        bool resolved = true;
        cplx prev = f(c + r);
        for (int j = 1; j <= n; ++j) {
            const cplx cur = f(c + std::polar(r, 2.0 * kPi * j / n));
            if (std::abs(cur) == 0.0) throw SingularContourError("determinant vanishes on the contour");
            const double d = std::arg(cur / prev);
            if (std::abs(d) >= 0.5 * kPi) {
                resolved = false;
                break;
            }
            total += d;
            prev = cur;
        }
        if (resolved) return static_cast<int>(std::lround(total / (2.0 * kPi)));
    }
    throw QuadratureError("phase along the Laurent contour could not be resolved");
}

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

LaurentData finish(cplx lambda, cplx centre, double radius, std::vector<CMatrix> a, int nodes,
                   const LaurentOptions& opts) {
    LaurentData ld;
    ld.lambda = lambda;
    ld.centre = centre;
    ld.radius = radius;
    ld.pole_order = detect_pole_order(a, opts.tol_laurent);
    ld.A = std::move(a);
    ld.nodes = nodes;
    return ld;
}

// Shrinks r until the circle holds exactly `count` zeros of det.
double admissible_radius(const std::function<cplx(cplx)>& det, cplx c, double r, int count) {
    for (int h = 0; h <= kMaxRadiusHalvings; ++h, r *= 0.5) {
        try {
            if (circle_winding(det, c, r) == count) return r;
        } catch (const Error&) {
        }
    }
    throw RadiusError("no contour radius isolates the root at " + std::to_string(c.real()) + "+" +
                      std::to_string(c.imag()) + "i");
}

}  // namespace

std::vector<CMatrix> contour_laurent(const MatrixFunction& m, cplx centre, double radius, int count,
                                     const LaurentOptions& opts, int* nodes_used) {
    if (!(radius > 0.0)) throw RadiusError("contour radius must be positive");
    const Eigen::Index p = m(centre + radius).rows();
    std::vector<CMatrix> sums(static_cast<std::size_t>(count), CMatrix::Zero(p, p));
    auto accumulate = [&](int n, int start, int stride) {
        for (int j = start; j < n; j += stride) {
            const cplx w = std::polar(radius, 2.0 * kPi * j / n);
            const CMatrix inv = checked_inverse(m(centre + w));
            cplx wk = w;
            for (int k = 0; k < count; ++k) {
                sums[static_cast<std::size_t>(k)] += wk * inv;
                wk *= w;
            }
        }
    };
    auto current = [&](int n) {
        std::vector<CMatrix> a;
        for (const auto& s : sums) a.push_back(s / static_cast<double>(n));
        return a;
    };

    int n = opts.min_nodes;
    accumulate(n, 0, 1);
    std::vector<CMatrix> prev = current(n);
    while (n < opts.max_nodes) {
        const int next = 2 * n;
        accumulate(next, 1, 2);
        n = next;
        std::vector<CMatrix> a = current(n);
        double diff = 0.0;
        double scale = 1.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            diff = std::max(diff, inf_norm(a[k] - prev[k]));
            scale = std::max(scale, inf_norm(a[k]));
        }
        if (diff < opts.tol_converge * scale) {
            if (nodes_used) *nodes_used = n;
            return a;
        }
        prev = std::move(a);
    }
    throw QuadratureError("Laurent contour quadrature did not converge with " + std::to_string(opts.max_nodes) +
                          " nodes");
}

int detect_pole_order(const std::vector<CMatrix>& a, double tol) {
    double largest = 0.0;
    for (const auto& m : a) largest = std::max(largest, inf_norm(m));
    int order = 1;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (inf_norm(a[k]) > tol * largest) order = static_cast<int>(k) + 1;
    return order;
}

double laurent_radius(const RootRecord& root, const std::vector<RootRecord>& others, double abscissa) {
    double d = 1.0;
    for (const auto& o : others) {
        const double dist = std::abs(o.lambda - root.lambda);
        if (dist > 0.0) d = std::min(d, dist);
    }
    if (std::isfinite(abscissa)) d = std::min(d, root.lambda.real() - abscissa);
    return 0.25 * d;
}

LaurentData laurent_coeffs(const MeasureMatrix& m, const RootRecord& root, double radius,
                           const LaurentOptions& opts) {
    const cplx c = root.lambda;
    const auto det = [&m](cplx z) { return det_char(m, z); };
    const double r = admissible_radius(det, c, radius, root.det_multiplicity);
    const MatrixFunction f = [&m](cplx z) {
        return CMatrix(CMatrix::Identity(m.p(), m.p()) - laplace_matrix(m, z));
    };
    int nodes = 0;
    auto a = contour_laurent(f, c, r, root.det_multiplicity, opts, &nodes);
    return finish(c, c, r, std::move(a), nodes, opts);
}

LaurentData laurent_coeffs(const MeasureMatrix& m, const RootRecord& root, const std::vector<RootRecord>& all,
                           const LaurentOptions& opts) {
    return laurent_coeffs(m, root, laurent_radius(root, all, domain_abscissa(m)), opts);
}

namespace {

template <typename Compute>
void attach_with_conjugates(std::vector<RootRecord>& roots, Compute compute) {
    for (std::size_t i = 0; i < roots.size(); ++i) {
        auto& r = roots[i];
        if (r.lambda.imag() < 0.0) {
            const auto partner = std::find_if(roots.begin(), roots.end(), [&](const RootRecord& o) {
                return o.lambda == std::conj(r.lambda) && o.det_multiplicity == r.det_multiplicity;
            });
            if (partner != roots.end()) continue;  // filled from the partner below
        }
        const LaurentData ld = compute(r);
        r.pole_order = ld.pole_order;
        r.laurent.assign(ld.A.begin(), ld.A.begin() + ld.pole_order);
    }
    for (auto& r : roots) {
        if (r.pole_order > 0) continue;
        const auto partner = std::find_if(roots.begin(), roots.end(), [&](const RootRecord& o) {
            return o.lambda == std::conj(r.lambda) && o.pole_order > 0;
        });
        r.pole_order = partner->pole_order;
        r.laurent.clear();
        for (const auto& a : partner->laurent) r.laurent.push_back(a.conjugate());
    }
}

}  // namespace

void attach_laurent(const MeasureMatrix& m, std::vector<RootRecord>& roots, const LaurentOptions& opts) {
    const double abscissa = domain_abscissa(m);
    const std::vector<RootRecord> all = roots;
    attach_with_conjugates(roots, [&](const RootRecord& r) {
        return laurent_coeffs(m, r, laurent_radius(r, all, abscissa), opts);
    });
}

std::vector<CMatrix> c_coeffs(cplx lambda, const std::vector<CMatrix>& a) {
    if (!(lambda.real() > 0.0))
        throw UnsupportedRootError("coefficients C are only defined for Re lambda > 0");
    const int kappa = static_cast<int>(a.size());
    std::vector<CMatrix> c;
    for (int k = 0; k < kappa; ++k) {
        CMatrix sum = CMatrix::Zero(a[0].rows(), a[0].cols());
        for (int n = 0; n <= kappa - 1 - k; ++n) {
            const cplx w = (n % 2 == 0 ? 1.0 : -1.0) / (factorial(n) * std::pow(lambda, n + 1));
            sum += w * a[static_cast<std::size_t>(n + k)];
        }
        c.push_back(sum / factorial(k));
    }
    return c;
}

std::vector<CMatrix> b_coeffs(cplx lambda, const std::vector<CMatrix>& c) {
    std::vector<CMatrix> b;
    for (std::size_t k = 0; k < c.size(); ++k) {
        CMatrix v = lambda * c[k];
        if (k + 1 < c.size()) v += static_cast<double>(k + 1) * c[k + 1];
        b.push_back(v);
    }
    return b;
}

LaurentData lattice_laurent(const LatticeMeasureMatrix& lattice, const RootRecord& root, const LaurentOptions& opts) {
    const cplx zeta = std::exp(-root.lambda);
    const Polynomial q = lattice_characteristic_polynomial(lattice);
    double d = 1.0;
    for (const auto& pr : polynomial_roots(q)) {
        const double dist = std::abs(pr.value - zeta);
        if (dist > 1e-8 * std::max(1.0, std::abs(zeta))) d = std::min(d, dist);
    }
    const auto det = [&q](cplx z) { return q(z); };
    const double r = admissible_radius(det, zeta, 0.25 * d, root.det_multiplicity);
    const MatrixFunction f = [&lattice](cplx z) {
        return CMatrix(CMatrix::Identity(lattice.p(), lattice.p()) - generating_matrix(lattice, z));
    };
    int nodes = 0;
    auto a = contour_laurent(f, zeta, r, root.det_multiplicity, opts, &nodes);
    return finish(root.lambda, zeta, r, std::move(a), nodes, opts);
}

void attach_lattice_laurent(const LatticeMeasureMatrix& lattice, std::vector<RootRecord>& roots,
                            const LaurentOptions& opts) {
    attach_with_conjugates(roots, [&](const RootRecord& r) { return lattice_laurent(lattice, r, opts); });
}

BridgeCheck lattice_bridge_check(const LatticeMeasureMatrix& lattice, const RootRecord& root,
                                 const LaurentOptions& opts) {
    const double h = lattice.span();
    const LaurentData lat = lattice_laurent(lattice, root, opts);
    const MeasureMatrix embedded = embed(lattice);

    RootRecord scaled = root;
    scaled.lambda = root.lambda / h;
    std::vector<RootRecord> neighbours;
    for (const auto& pr : polynomial_roots(lattice_characteristic_polynomial(lattice))) {
        if (std::abs(pr.value) == 0.0) continue;
        for (int shift = -1; shift <= 1; ++shift) {
            RootRecord o;
            o.lambda = (-std::log(pr.value) + cplx(0.0, 2.0 * kPi * shift)) / h;
            neighbours.push_back(o);
        }
    }
    double d = 1.0;
    for (const auto& o : neighbours) {
        const double dist = std::abs(o.lambda - scaled.lambda);
        if (dist > 1e-8 * std::max(1.0, std::abs(scaled.lambda))) d = std::min(d, dist);
    }
    const LaurentData non = laurent_coeffs(embedded, scaled, 0.25 * d, opts);

    BridgeCheck out;
    out.lattice_order = lat.pole_order;
    out.nonlattice_order = non.pole_order;
    const int k = lat.pole_order;
    const cplx factor = std::pow(-h * std::exp(-root.lambda), k);
    out.max_difference =
        inf_norm(lat.A[static_cast<std::size_t>(k - 1)] - non.A[static_cast<std::size_t>(k - 1)] * factor);
    return out;
}

std::vector<CVector> char_moments(const Characteristic& f, cplx lambda, int jmax) {
    const int p = f.p();
    std::vector<CVector> out(static_cast<std::size_t>(jmax + 1), CVector::Zero(p));
    for (int i = 0; i < p; ++i) {
        const auto& comp = f.components[static_cast<std::size_t>(i)];
        const double order = exponential_order(comp);
        if (!(lambda.real() > order))
            throw DivergentMomentError("moment of component " + std::to_string(i) + " diverges at Re lambda = " +
                                       std::to_string(lambda.real()));
        for (int j = 0; j <= jmax; ++j) {
            cplx acc = 0.0;
            for (const auto& s : comp.steps) {
                if (s.height == 0.0) continue;
                // int_a^inf x^j e^{-lambda x} dx = j! e^{-lambda a} sum_i (lambda a)^i / i! / lambda^{j+1}
                const cplx la = lambda * s.location;
                cplx series = 0.0;
                cplx term = 1.0;
                for (int q = 0; q <= j; ++q) {
                    series += term;
                    term *= la / static_cast<double>(q + 1);
                }
                acc += s.height * factorial(j) * std::exp(-la) * series / std::pow(lambda, j + 1);
            }
            for (const auto& t : comp.terms) {
                if (t.coefficient == 0.0) continue;
                const int n = t.power + j;
                acc += t.coefficient * factorial(n) / std::pow(lambda + t.rate, n + 1);
            }
            out[static_cast<std::size_t>(j)](i) = acc;
        }
    }
    return out;
}

std::vector<CVector> b_vector_coeffs(const std::vector<CMatrix>& b, const std::vector<CVector>& moments) {
    const int kappa = static_cast<int>(b.size());
    if (static_cast<int>(moments.size()) < kappa) throw DomainError("need moments up to order k(lambda) - 1");
    std::vector<CVector> out;
    for (int j = 0; j < kappa; ++j) {
        CVector v = CVector::Zero(b[0].rows());
        for (int k = j; k < kappa; ++k) {
            const double w = binomial(k, j) * ((k - j) % 2 == 0 ? 1.0 : -1.0);
            v += w * (b[static_cast<std::size_t>(k)] * moments[static_cast<std::size_t>(k - j)]);
        }
        out.push_back(v);
    }
    return out;
}

std::vector<CVector> lattice_char_series(const Characteristic& f, double span, cplx zeta, int lmax) {
    constexpr long kMinTerms = 64;
    constexpr long kMaxTerms = 2000000;
    constexpr long kQuietRun = 64;
    const int p = f.p();
    std::vector<CVector> sums(static_cast<std::size_t>(lmax + 1), CVector::Zero(p));
    long quiet = 0;
    for (long n = 0; n < kMaxTerms; ++n) {
        const RVector fn = lattice_value(f, span, n);
        double term_size = 0.0;
        double sum_size = 0.0;
        for (int l = 0; l <= lmax && l <= n; ++l) {
            const cplx w = binomial(static_cast<int>(n), l) * std::pow(zeta, static_cast<double>(n - l));
            const CVector term = w * fn.cast<cplx>();
            sums[static_cast<std::size_t>(l)] += term;
            term_size = std::max(term_size, term.cwiseAbs().maxCoeff());
        }
        for (const auto& s : sums) sum_size = std::max(sum_size, s.cwiseAbs().maxCoeff());
        if (!std::isfinite(term_size)) break;
        quiet = (term_size <= 1e-18 * sum_size || term_size == 0.0) ? quiet + 1 : 0;
        if (n >= kMinTerms && quiet >= kQuietRun) return sums;
    }
    throw DivergentMomentError("series sum_n f(n) zeta^n does not converge at |zeta| = " +
                               std::to_string(std::abs(zeta)));
}

std::vector<CMatrix> lattice_power_coeffs(cplx lambda, const std::vector<CMatrix>& b, const std::vector<CMatrix>& x) {
    const int kappa = static_cast<int>(b.size());
    const Eigen::Index rows = b[0].rows();
    const Eigen::Index cols = x[0].cols();
    std::vector<CMatrix> out(static_cast<std::size_t>(kappa), CMatrix::Zero(rows, cols));
    const cplx base = -std::exp(lambda);
    for (int d = 1; d <= kappa; ++d) {
        CMatrix dd = CMatrix::Zero(rows, cols);
        for (int l = 0; l <= kappa - d; ++l)
            dd += b[static_cast<std::size_t>(d + l - 1)] * x[static_cast<std::size_t>(l)];
        // binom(n+d-1, d-1) = prod_{i=1}^{d-1} (n + i) / (d-1)!
        std::vector<double> poly{1.0};
        for (int i = 1; i < d; ++i) {
            std::vector<double> next(poly.size() + 1, 0.0);
            for (std::size_t q = 0; q < poly.size(); ++q) {
                next[q] += poly[q] * i;
                next[q + 1] += poly[q];
            }
            poly = std::move(next);
        }
        const cplx scale = std::pow(base, d) / factorial(d - 1);
        for (std::size_t k = 0; k < poly.size(); ++k) out[k] += (scale * poly[k]) * dd;
    }
    return out;
}

namespace {

// Largest negative-power Fourier mode of the remainder on |w| = rho, as its
// size on the circle relative to max ||(I - L mu)^{-1}||.
double negative_modes(const MeasureMatrix& m, const LaurentData& ld, double rho) {
    constexpr int kPoints = 64;
    const Eigen::Index p = m.p();
    const int kmax = static_cast<int>(ld.A.size()) + 2;
    std::vector<CMatrix> modes(static_cast<std::size_t>(kmax), CMatrix::Zero(p, p));
    double scale = 0.0;
    for (int j = 0; j < kPoints; ++j) {
        const cplx w = std::polar(rho, 2.0 * kPi * (j + 0.37) / kPoints);
        const CMatrix inv = checked_inverse(CMatrix::Identity(p, p) - laplace_matrix(m, ld.centre + w));
        scale = std::max(scale, inf_norm(inv));
        CMatrix h = inv;
        cplx wk = 1.0;
        for (const auto& a : ld.A) {
            wk /= w;
            h -= a * wk;
        }
        cplx wp = 1.0;
        for (int k = 0; k < kmax; ++k) {
            wp *= w;
            modes[static_cast<std::size_t>(k)] += h * wp / static_cast<double>(kPoints);
        }
    }
    double worst = 0.0;
    for (int k = 0; k < kmax; ++k)
        worst = std::max(worst, inf_norm(modes[static_cast<std::size_t>(k)]) * std::pow(rho, -(k + 1)));
    return worst / scale;
}

}  // namespace

double reconstruction_residual(const MeasureMatrix& m, const LaurentData& ld) {
    const double fitted = quadratic_fit_residual(m, ld);
    if (fitted <= 1e-6) return fitted;
    // The remainder is not quadratic on this circle; compare its principal part at two radii.
    return std::max(negative_modes(m, ld, 0.5 * ld.radius), negative_modes(m, ld, 0.25 * ld.radius));
}

double quadratic_fit_residual(const MeasureMatrix& m, const LaurentData& ld) {
    constexpr int kPoints = 20;
    const double r = 0.5 * ld.radius;
    const Eigen::Index p = m.p();
    Eigen::MatrixXcd design(kPoints, 3);
    std::vector<CMatrix> remainder;
    std::vector<double> norms;
    for (int j = 0; j < kPoints; ++j) {
        const cplx w = std::polar(r, 2.0 * kPi * (j + 0.37) / kPoints);
        const CMatrix inv = checked_inverse(CMatrix::Identity(p, p) - laplace_matrix(m, ld.centre + w));
        CMatrix h = inv;
        cplx wk = 1.0;
        for (const auto& a : ld.A) {
            wk /= w;
            h -= a * wk;
        }
        remainder.push_back(h);
        norms.push_back(inf_norm(inv));
        design(j, 0) = 1.0;
        design(j, 1) = w;
        design(j, 2) = w * w;
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(design);
    double worst = 0.0;
    std::vector<CMatrix> fitted(kPoints, CMatrix::Zero(p, p));
    for (Eigen::Index a = 0; a < p; ++a)
        for (Eigen::Index b = 0; b < p; ++b) {
            Eigen::VectorXcd rhs(kPoints);
            for (int j = 0; j < kPoints; ++j) rhs(j) = remainder[static_cast<std::size_t>(j)](a, b);
            const Eigen::VectorXcd coef = qr.solve(rhs);
            const Eigen::VectorXcd fit = design * coef;
            for (int j = 0; j < kPoints; ++j) fitted[static_cast<std::size_t>(j)](a, b) = fit(j);
        }
    for (int j = 0; j < kPoints; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        worst = std::max(worst, inf_norm(remainder[ju] - fitted[ju]) / norms[ju]);
    }
    return worst;
}

}  // namespace mre
