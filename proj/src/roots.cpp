#include "mre/roots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "mre/errors.hpp"
#include "mre/spectral.hpp"
#include "mre/transform.hpp"

namespace mre {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kInitialEdgeSamples = 64;
constexpr int kMaxPhaseRefinement = 8;  // 64 * 2^8 = 2^14 samples per edge
constexpr double kBoundaryFloor = 1e-13;

// 10-point Gauss-Legendre on [0, 1]
constexpr std::array<double, 10> kGlNodes = {
    0.0130467357414141, 0.0674683166555077, 0.1602952158504878, 0.2833023029353764, 0.4255628305091844,
    0.5744371694908156, 0.7166976970646236, 0.8397047841495122, 0.9325316833444923, 0.9869532642585859};
constexpr std::array<double, 10> kGlWeights = {
    0.0333356721543441, 0.0747256745752903, 0.1095431812579910, 0.1346333596549982, 0.1477621123573764,
    0.1477621123573764, 0.1346333596549982, 0.1095431812579910, 0.0747256745752903, 0.0333356721543441};

std::array<cplx, 4> corners(const Rect& r) {
    return {cplx(r.re_min, r.im_min), cplx(r.re_max, r.im_min), cplx(r.re_max, r.im_max), cplx(r.re_min, r.im_max)};
}

struct Sample {
    cplx z;
    cplx f;
    cplx df;
};

class PhaseTracker {
public:
    PhaseTracker(const AnalyticFunction& f, double floor) : f_(f), floor_(floor) {}

    double segment(const Sample& a, const Sample& b, int depth) const {
        const double d = std::arg(b.f / a.f);
        // The principal arg cannot see whole turns; the trapezoid estimate of
        // Im int f'/f catches a segment that aliases by 2 pi.
        const double predicted = (0.5 * (a.df / a.f + b.df / b.f) * (b.z - a.z)).imag();
        const bool small = std::abs(d) < 0.5 * kPi;
        if (small && std::abs(predicted - d) < 0.25 * kPi) return d;
        if (depth >= kMaxPhaseRefinement) {
            if (small) return d;
            throw QuadratureError("phase change between boundary samples exceeds pi/2 after maximum refinement");
        }
        const cplx zm = 0.5 * (a.z + b.z);
        const auto [fm, dfm] = f_(zm);
        const Sample m{zm, fm, dfm};
        if (std::abs(m.f) < floor_) throw BoundaryRootError("zero of the determinant on the contour");
        return segment(a, m, depth + 1) + segment(m, b, depth + 1);
    }

private:
    const AnalyticFunction& f_;
    double floor_;
};

Rect square_around(cplx c, double half) { return {c.real() - half, c.real() + half, c.imag() - half, c.imag() + half}; }

bool inside(const Rect& inner, const Rect& outer) {
    return inner.re_min >= outer.re_min && inner.re_max <= outer.re_max && inner.im_min >= outer.im_min &&
           inner.im_max <= outer.im_max;
}

// Moments (1/2 pi i) \oint (z - zc)^k f'(z)/f(z) dz, k = 0..K, over the rectangle boundary.
class MomentIntegrator {
public:
    static constexpr int K = 2;
    using Moments = std::array<cplx, K + 1>;

    MomentIntegrator(const AnalyticFunction& f, cplx zc, double diam) : f_(f), zc_(zc), diam_(diam) {}

    Moments boundary(const Rect& r) const {
        Moments total{};
        const auto c = corners(r);
        const double perimeter = 2.0 * (r.width() + r.height());
        for (int e = 0; e < 4; ++e) {
            const cplx a = c[static_cast<std::size_t>(e)];
            const cplx b = c[static_cast<std::size_t>((e + 1) % 4)];
            const Moments part = adaptive(a, b, rule(a, b), std::abs(b - a) / perimeter, 0);
            for (int k = 0; k <= K; ++k) total[static_cast<std::size_t>(k)] += part[static_cast<std::size_t>(k)];
        }
        for (auto& v : total) v /= cplx(0.0, 2.0 * kPi);
        return total;
    }

private:
    Moments rule(cplx a, cplx b) const {
        Moments m{};
        const cplx h = b - a;
        evaluations_ += static_cast<long>(kGlNodes.size());
        for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
            const cplx z = a + kGlNodes[i] * h;
            const auto [fz, dfz] = f_(z);
            const cplx g = dfz / fz * h * kGlWeights[i];
            cplx w = 1.0;
            for (int k = 0; k <= K; ++k) {
                m[static_cast<std::size_t>(k)] += w * g;
                w *= (z - zc_);
            }
        }
        return m;
    }

    Moments adaptive(cplx a, cplx b, const Moments& whole, double fraction, int depth) const {
        const cplx mid = 0.5 * (a + b);
        const Moments left = rule(a, mid);
        const Moments right = rule(mid, b);
        Moments sum{};
        for (std::size_t k = 0; k <= K; ++k) sum[k] = left[k] + right[k];
        bool ok = true;
        double scale = 1.0;
        for (std::size_t k = 0; k <= K; ++k) {
            const double tol = std::max(1e-11 * scale * std::max(fraction, 1e-6), 1e-13 * std::abs(sum[k]));
            if (std::abs(sum[k] - whole[k]) > tol) ok = false;
            scale *= diam_;
        }
        if (ok || depth >= kMaxDepth || evaluations_ > kEvaluationBudget) return sum;
        const Moments l = adaptive(a, mid, left, 0.5 * fraction, depth + 1);
        const Moments r = adaptive(mid, b, right, 0.5 * fraction, depth + 1);
        for (std::size_t k = 0; k <= K; ++k) sum[k] = l[k] + r[k];
        return sum;
    }

    static constexpr int kMaxDepth = 30;
    static constexpr long kEvaluationBudget = 200000;
    mutable long evaluations_ = 0;
    const AnalyticFunction& f_;
    cplx zc_;
    double diam_;
};

struct NewtonResult {
    cplx z;
    double increment = 0.0;
    bool converged = false;
};

NewtonResult damped_newton(const AnalyticFunction& f, cplx z) {
    NewtonResult res{z, 0.0, false};
    try {
        for (int it = 0; it < 100; ++it) {
            const auto [fz, dfz] = f(res.z);
            if (fz == cplx(0.0)) {
                res.increment = 0.0;
                res.converged = true;
                return res;
            }
            if (dfz == cplx(0.0)) return res;
            const cplx step = fz / dfz;
            double damping = 1.0;
            cplx candidate = res.z - step;
            while (damping > 1e-6 && std::abs(f(candidate).first) > std::abs(fz)) {
                damping *= 0.5;
                candidate = res.z - damping * step;
            }
            res.increment = std::abs(damping * step);
            res.z = candidate;
            if (res.increment <= 1e-15 * std::max(1.0, std::abs(res.z))) break;
        }
    } catch (const Error&) {
        return res;
    }
    res.converged = res.increment <= 1e-12 * std::max(1.0, std::abs(res.z));
    return res;
}

class ZeroLocator {
public:
    ZeroLocator(const AnalyticFunction& f, const RootOptions& opts) : f_(f), opts_(opts) {}

    void process(const Rect& box, int n, int depth) {
        if (n == 0) return;
        if (depth > opts_.max_depth)
            throw MaxDepthError("subdivision exceeded depth " + std::to_string(opts_.max_depth) +
                                "; root cluster below resolution");
        if (try_isolate(box, n, depth)) return;
        subdivide(box, n, depth);
    }

    std::vector<RootRecord> take() { return std::move(found_); }

private:
    bool try_isolate(const Rect& box, int n, int depth) {
        const double diam = std::hypot(box.width(), box.height());
        const cplx zc(0.5 * (box.re_min + box.re_max), 0.5 * (box.im_min + box.im_max));
        MomentIntegrator::Moments mom;
        try {
            mom = MomentIntegrator(f_, zc, diam).boundary(box);
        } catch (const Error&) {
            return false;
        }
        if (std::abs(mom[0] - static_cast<double>(n)) > 1e-3) return false;
        const cplx shift = mom[1] / static_cast<double>(n);
        const cplx c = zc + shift;
        if (!box.contains(c, 1e-12 * diam)) return false;

        if (n == 1) {
            const NewtonResult nr = damped_newton(f_, c);
            if (!nr.converged || !box.contains(nr.z, 1e-9 * diam)) return false;
            record(nr.z, 1, nr.increment);
            return true;
        }

        const cplx var = mom[2] / static_cast<double>(n) - shift * shift;
        const double spread = std::sqrt(std::abs(var));
        if (spread > 0.05 * diam) return false;
        double half = std::max({4.0 * spread, 1e-4 * diam, 1e-7 * std::max(1.0, std::abs(c))});
        Rect small = square_around(c, half);
        if (!inside(small, box)) return false;
        int inner = 0;
        try {
            inner = count_zeros(f_, small);
        } catch (const Error&) {
            return false;
        }
        if (inner != n) return false;

        // Shrink around the cluster until it splits or falls below resolution.
        cplx centre = c;
        for (;;) {
            try {
                const auto m = MomentIntegrator(f_, centre, 2.0 * half).boundary(small);
                if (std::abs(m[0] - static_cast<double>(n)) < 1e-6) centre += m[1] / static_cast<double>(n);
            } catch (const Error&) {
            }
            const double next = half / 10.0;
            if (next < opts_.cluster_tol * std::max(1.0, std::abs(centre))) break;
            const Rect tighter = square_around(centre, next);
            int k = 0;
            try {
                k = count_zeros(f_, tighter);
            } catch (const BoundaryRootError&) {
                break;  // resolution limit: treat as one cluster
            } catch (const QuadratureError&) {
                break;
            }
            if (k != n) {
                // The cluster resolves into separate roots; search the small box.
                subdivide(small, n, depth + 1);
                return true;
            }
            half = next;
            small = tighter;
        }
        double increment = 0.0;
        try {
            const auto [fz, dfz] = f_(centre);
            if (dfz != cplx(0.0)) increment = std::abs(static_cast<double>(n) * fz / dfz);
        } catch (const Error&) {
        }
        record(centre, n, increment);
        return true;
    }

    void subdivide(const Rect& box, int n, int depth) {
        static constexpr std::array<double, 8> kOffsets = {0.0173, -0.0231, 0.0311, -0.0427, 0.0613, -0.0791, 0.1013,
                                                           -0.1259};
        Error last("roots", "QuadratureError", "subdivision failed");
        for (std::size_t attempt = 0; attempt < kOffsets.size(); ++attempt) {
            const double fx = 0.5 + kOffsets[attempt];
            const double fy = 0.5 + kOffsets[(attempt + 3) % kOffsets.size()];
            const double xm = box.re_min + fx * box.width();
            const double ym = box.im_min + fy * box.height();
            const std::array<Rect, 4> kids = {Rect{box.re_min, xm, box.im_min, ym}, Rect{xm, box.re_max, box.im_min, ym},
                                              Rect{xm, box.re_max, ym, box.im_max}, Rect{box.re_min, xm, ym, box.im_max}};
            std::array<int, 4> counts{};
            try {
                int sum = 0;
                for (std::size_t k = 0; k < 4; ++k) {
                    counts[k] = count_zeros(f_, kids[k]);
                    sum += counts[k];
                }
                if (sum != n) {
                    last = QuadratureError("child counts " + std::to_string(sum) + " do not add up to " +
                                           std::to_string(n));
                    continue;
                }
            } catch (const BoundaryRootError& e) {
                last = e;
                continue;
            } catch (const QuadratureError& e) {
                last = e;
                continue;
            }
            for (std::size_t k = 0; k < 4; ++k) process(kids[k], counts[k], depth + 1);
            return;
        }
        throw last;
    }

    void record(cplx z, int mult, double increment) {
        double residual = 0.0;
        try {
            residual = std::abs(f_(z).first);
        } catch (const Error&) {
        }
        RootRecord r;
        r.lambda = z;
        r.det_multiplicity = mult;
        r.residual = residual;
        r.newton_increment = increment;
        found_.push_back(std::move(r));
    }

    const AnalyticFunction& f_;
    RootOptions opts_;
    std::vector<RootRecord> found_;
};

void sort_roots(std::vector<RootRecord>& roots) {
    std::sort(roots.begin(), roots.end(), [](const RootRecord& a, const RootRecord& b) {
        if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
        return a.lambda.imag() > b.lambda.imag();
    });
}

void merge_close(std::vector<RootRecord>& roots, double tol) {
    std::vector<RootRecord> out;
    for (auto& r : roots) {
        auto it = std::find_if(out.begin(), out.end(), [&](const RootRecord& o) {
            return std::abs(o.lambda - r.lambda) < tol * std::max(1.0, std::abs(r.lambda));
        });
        if (it == out.end()) {
            out.push_back(r);
            continue;
        }
        const double w1 = it->det_multiplicity;
        const double w2 = r.det_multiplicity;
        it->lambda = (w1 * it->lambda + w2 * r.lambda) / (w1 + w2);
        it->det_multiplicity += r.det_multiplicity;
    }
    roots = std::move(out);
}

// Enforce exact conjugate pairs for a real-coefficient function.
void conjugate_close(std::vector<RootRecord>& roots, const AnalyticFunction& f) {
    for (auto& r : roots) {
        if (std::abs(r.lambda.imag()) <= 1e-9 * std::max(1.0, std::abs(r.lambda))) {
            r.lambda = cplx(r.lambda.real(), 0.0);
            if (r.det_multiplicity == 1) {
                const NewtonResult nr = damped_newton(f, r.lambda);
                if (nr.converged && std::abs(nr.z - r.lambda) < 1e-8 * std::max(1.0, std::abs(r.lambda))) {
                    r.lambda = cplx(nr.z.real(), 0.0);
                    r.newton_increment = nr.increment;
                }
            }
        }
    }
    std::vector<RootRecord> upper;
    std::vector<RootRecord> real;
    std::vector<RootRecord> lower;
    for (auto& r : roots) {
        if (r.lambda.imag() > 0.0)
            upper.push_back(r);
        else if (r.lambda.imag() < 0.0)
            lower.push_back(r);
        else
            real.push_back(r);
    }
    std::vector<RootRecord> out = real;
    std::vector<bool> used(lower.size(), false);
    for (auto& u : upper) {
        std::size_t best = lower.size();
        double best_d = 0.0;
        for (std::size_t i = 0; i < lower.size(); ++i) {
            if (used[i]) continue;
            const double d = std::abs(lower[i].lambda - std::conj(u.lambda));
            if (best == lower.size() || d < best_d) {
                best = i;
                best_d = d;
            }
        }
        if (best < lower.size() && best_d < 1e-6 * std::max(1.0, std::abs(u.lambda))) used[best] = true;
        RootRecord mirror = u;
        mirror.lambda = std::conj(u.lambda);
        out.push_back(u);
        out.push_back(mirror);
    }
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (used[i]) continue;
        RootRecord mirror = lower[i];
        mirror.lambda = std::conj(lower[i].lambda);
        out.push_back(lower[i]);
        out.push_back(mirror);
    }
    roots = std::move(out);
}

}  // namespace

void SearchRegion::validate() const {
    if (!(re_min < re_max)) throw DomainError("search region needs re_min < re_max");
    if (!(im_max > 0.0)) throw DomainError("search region needs im_max > 0");
}

cplx det_char(const MeasureMatrix& m, cplx z) {
    const CMatrix a = CMatrix::Identity(m.p(), m.p()) - laplace_matrix(m, z);
    return determinant(a);
}

std::pair<cplx, cplx> det_char_with_derivative(const MeasureMatrix& m, cplx z) {
    const CMatrix a = CMatrix::Identity(m.p(), m.p()) - laplace_matrix(m, z);
    const CMatrix da = -laplace_matrix_derivative(m, z);
    return {determinant(a), determinant_derivative(a, da)};
}

int count_zeros(const AnalyticFunction& f, const Rect& rect) {
    if (!(rect.width() > 0.0) || !(rect.height() > 0.0)) throw DomainError("degenerate rectangle");
    const auto c = corners(rect);
    std::array<std::vector<Sample>, 4> edges;
    double boundary_max = 0.0;
    for (int e = 0; e < 4; ++e) {
        const cplx a = c[static_cast<std::size_t>(e)];
        const cplx b = c[static_cast<std::size_t>((e + 1) % 4)];
        auto& samples = edges[static_cast<std::size_t>(e)];
        samples.reserve(kInitialEdgeSamples + 1);
        for (int i = 0; i <= kInitialEdgeSamples; ++i) {
            const cplx z = a + (b - a) * (static_cast<double>(i) / kInitialEdgeSamples);
            const auto [v, dv] = f(z);
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw QuadratureError("non-finite determinant on the contour");
            boundary_max = std::max(boundary_max, std::abs(v));
            samples.push_back({z, v, dv});
        }
    }
    const double floor = kBoundaryFloor * (1.0 + boundary_max);
    for (const auto& samples : edges)
        for (const auto& s : samples)
            if (std::abs(s.f) < floor) throw BoundaryRootError("zero of the determinant on the contour");

    const PhaseTracker tracker(f, floor);
    double total = 0.0;
    for (const auto& samples : edges)
        for (std::size_t i = 0; i + 1 < samples.size(); ++i) total += tracker.segment(samples[i], samples[i + 1], 0);
    const double winding = total / (2.0 * kPi);
    const double rounded = std::round(winding);
    if (std::abs(winding - rounded) > 0.25 || rounded < 0.0)
        throw QuadratureError("winding number " + std::to_string(winding) + " is not a nonnegative integer");
    return static_cast<int>(rounded);
}

int count_zeros(const MeasureMatrix& m, const Rect& rect) {
    const AnalyticFunction f = [&m](cplx z) { return det_char_with_derivative(m, z); };
    return count_zeros(f, rect);
}

int count_zeros_nudged(const AnalyticFunction& f, const Rect& rect, int max_nudges, Rect* used) {
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unit(0.5, 1.0);
    Rect r = rect;
    for (int attempt = 0;; ++attempt) {
        try {
            const int n = count_zeros(f, r);
            if (used) *used = r;
            return n;
        } catch (const BoundaryRootError&) {
            if (attempt >= max_nudges) throw;
            const double sx = 1e-6 * std::max(1.0, rect.width());
            const double sy = 1e-6 * std::max(1.0, rect.height());
            r.re_min -= sx * unit(rng);
            r.re_max += sx * unit(rng);
            r.im_min -= sy * unit(rng);
            r.im_max += sy * unit(rng);
        }
    }
}

std::vector<RootRecord> locate_zeros(const AnalyticFunction& f, const Rect& rect, const RootOptions& opts) {
    Rect used = rect;
    const int total = count_zeros_nudged(f, rect, opts.max_nudges, &used);
    ZeroLocator locator(f, opts);
    locator.process(used, total, 0);
    auto roots = locator.take();
    merge_close(roots, opts.cluster_tol);
    int found = 0;
    for (const auto& r : roots) found += r.det_multiplicity;
    if (found != total)
        throw QuadratureError("located multiplicities " + std::to_string(found) + " differ from the count " +
                              std::to_string(total));
    sort_roots(roots);
    return roots;
}

std::vector<RootRecord> locate_roots(const MeasureMatrix& m, const SearchRegion& region, const RootOptions& opts) {
    region.validate();
    const double abscissa = domain_abscissa(m);
    if (!(region.re_min > abscissa)) throw DomainError("search region must lie right of the domain abscissa");
    const AnalyticFunction f = [&m](cplx z) { return det_char_with_derivative(m, z); };
    auto roots = locate_zeros(f, region.rect(), opts);
    conjugate_close(roots, f);
    for (auto& r : roots) r.residual = std::abs(det_char(m, r.lambda));
    sort_roots(roots);
    return roots;
}

namespace {

using PolyMatrix = std::vector<std::vector<Polynomial>>;

Polynomial poly_det(const PolyMatrix& a) {
    const std::size_t n = a.size();
    if (n == 1) return a[0][0];
    if (n == 2) return a[0][0] * a[1][1] - a[0][1] * a[1][0];
    Polynomial sum = Polynomial::constant(0.0);
    for (std::size_t j = 0; j < n; ++j) {
        PolyMatrix minor;
        for (std::size_t i = 1; i < n; ++i) {
            std::vector<Polynomial> row;
            for (std::size_t k = 0; k < n; ++k)
                if (k != j) row.push_back(a[i][k]);
            minor.push_back(std::move(row));
        }
        const Polynomial term = a[0][j] * poly_det(minor);
        sum = (j % 2 == 0) ? sum + term : sum - term;
    }
    return sum;
}

}  // namespace

Polynomial lattice_characteristic_polynomial(const LatticeMeasureMatrix& lattice) {
    const auto p = static_cast<std::size_t>(lattice.p());
    PolyMatrix a(p, std::vector<Polynomial>(p));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            std::vector<double> c = lattice.weights(static_cast<int>(i), static_cast<int>(j));
            for (double& v : c) v = -v;
            Polynomial entry(c);
            if (i == j) entry = entry + Polynomial::constant(1.0);
            a[i][j] = entry;
        }
    return poly_det(a);
}

std::vector<RootRecord> locate_lattice_roots(const LatticeMeasureMatrix& lattice, double theta) {
    lattice.validate();
    require_subcritical_instant(lattice.mass_at(0));
    const Polynomial q = lattice_characteristic_polynomial(lattice).trimmed(1e-14);
    if (q.degree() <= 0) throw DegenerateError("det(I - G mu(z)) is constant; there are no roots");
    const Polynomial dq = q.derivative();

    std::vector<RootRecord> raw;
    for (const auto& pr : polynomial_roots(q)) {
        cplx zeta = pr.value;
        if (std::abs(zeta) == 0.0) continue;
        if (std::abs(zeta.imag()) < 1e-12 * std::abs(zeta)) zeta = cplx(zeta.real(), 0.0);
        if (!(std::abs(zeta) < std::exp(-theta))) continue;
        RootRecord r;
        r.lambda = zeta;  // mapped below, after conjugate pairing in the zeta plane
        r.det_multiplicity = pr.multiplicity;
        raw.push_back(r);
    }
    const AnalyticFunction fq = [&q, &dq](cplx z) { return std::pair<cplx, cplx>{q(z), dq(z)}; };
    conjugate_close(raw, fq);

    std::vector<RootRecord> out;
    for (auto& r : raw) {
        const cplx zeta = r.lambda;
        cplx lambda = -std::log(zeta);
        if (zeta.imag() == 0.0) lambda = cplx(lambda.real(), zeta.real() < 0.0 ? kPi : 0.0);
        if (lambda.imag() <= -kPi) lambda += cplx(0.0, 2.0 * kPi);
        r.residual = std::abs(q(zeta));
        const cplx d = dq(zeta);
        r.newton_increment = d == cplx(0.0) ? 0.0 : std::abs(static_cast<double>(r.det_multiplicity) * q(zeta) / d);
        if (r.det_multiplicity > 1) {
            Polynomial dm = q;
            for (int k = 0; k < r.det_multiplicity - 1; ++k) dm = dm.derivative();
            const Polynomial ddm = dm.derivative();
            const cplx dd = ddm(zeta);
            r.newton_increment = dd == cplx(0.0) ? 0.0 : std::abs(dm(zeta) / dd);
        }
        r.lambda = lambda;
        out.push_back(std::move(r));
    }
    sort_roots(out);
    return out;
}

}  // namespace mre
