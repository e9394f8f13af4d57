#include "mre/spectral.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "mre/errors.hpp"
#include "mre/transform.hpp"

namespace mre {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxDoublings = 60;
constexpr double kBracketStart = 1e-6;

}  // namespace

double spectral_radius(const CMatrix& a) {
    if (a.size() == 0) return 0.0;
    if (!a.allFinite()) return kInf;
    if (a.rows() == 1) return std::abs(a(0, 0));
    Eigen::ComplexEigenSolver<CMatrix> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw ConvergenceError("eigenvalue iteration did not converge");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius(const RMatrix& a) { return spectral_radius(CMatrix(a.cast<cplx>())); }

bool is_primitive(const RMatrix& a) {
    const Eigen::Index p = a.rows();
    using BoolMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
    BoolMatrix pattern = (a.array() > 0.0).cast<int>();
    BoolMatrix power = pattern;
    const Eigen::Index wielandt = p * p - 2 * p + 2;
    for (Eigen::Index k = 1; k <= wielandt; ++k) {
        if ((power.array() > 0).all()) return true;
        power = ((power * pattern).array() > 0).cast<int>();
    }
    return (power.array() > 0).all();
}

RVector perron_vector(const RMatrix& a) {
    if ((a.array() < 0.0).any()) throw NotPrimitiveError("matrix has negative entries");
    if (!is_primitive(a)) throw NotPrimitiveError("matrix is not primitive");
    const Eigen::Index p = a.rows();
    if (p == 1) return RVector::Ones(1);
    Eigen::EigenSolver<RMatrix> solver(a);
    if (solver.info() != Eigen::Success) throw ConvergenceError("eigen decomposition did not converge");
    Eigen::Index best = 0;
    solver.eigenvalues().real().maxCoeff(&best);
    RVector v = solver.eigenvectors().col(best).real();
    if (v.sum() < 0.0) v = -v;
    v /= v.norm();
    if ((v.array() <= 0.0).any()) throw ConvergenceError("Perron vector is not strictly positive");
    return v;
}

double varrho(const MeasureMatrix& m, double theta) {
    const CMatrix l = laplace_matrix(m, cplx(theta, 0.0));
    return spectral_radius(CMatrix(l.real().cast<cplx>()));
}

void require_subcritical_instant(const RMatrix& instant) {
    const double rho0 = spectral_radius(instant);
    if (!(rho0 < 1.0))
        throw AssumptionError("spectral radius of mu({0}) is " + std::to_string(rho0) + " >= 1");
}

MalthusianResult find_malthusian(const MeasureMatrix& m, double tol_rho) {
    require_subcritical_instant(instant_mass_matrix(m));
    const double abscissa = domain_abscissa(m);

    double lo = 0.0;
    double hi = 0.0;
    if (std::isfinite(abscissa)) {
        lo = abscissa + kBracketStart;
        if (varrho(m, lo) < 1.0)
            throw NoMalthusianError("varrho < 1 on the sampled domain; no Malthusian parameter");
        bool found = false;
        for (int k = 0; k <= kMaxDoublings; ++k) {
            hi = abscissa + kBracketStart * std::ldexp(2.0, k);
            if (varrho(m, hi) < 1.0) {
                found = true;
                break;
            }
            lo = hi;
        }
        if (!found) throw NoMalthusianError("bracket expansion did not find varrho < 1");
    } else {
        const double r0 = varrho(m, 0.0);
        bool found = false;
        if (r0 >= 1.0) {
            lo = 0.0;
            for (int k = 0; k <= kMaxDoublings; ++k) {
                hi = kBracketStart * std::ldexp(1.0, k);
                if (varrho(m, hi) < 1.0) {
                    found = true;
                    break;
                }
                lo = hi;
            }
        } else {
            hi = 0.0;
            for (int k = 0; k <= kMaxDoublings; ++k) {
                lo = -kBracketStart * std::ldexp(1.0, k);
                if (varrho(m, lo) >= 1.0) {
                    found = true;
                    break;
                }
                hi = lo;
            }
        }
        if (!found) throw NoMalthusianError("varrho < 1 on the sampled domain; no Malthusian parameter");
    }

    MalthusianResult best;
    double best_gap = kInf;
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = varrho(m, mid);
        const double gap = std::abs(r - 1.0);
        if (gap < best_gap) {
            best_gap = gap;
            best.alpha = mid;
            best.varrho_at_alpha = r;
        }
        if (gap <= tol_rho) break;
        if (r >= 1.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(mid))) break;
    }
    best.bracket = {lo, hi};
    return best;
}

}  // namespace mre
