#include "mre/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/LU>

#include "mre/errors.hpp"
#include "mre/roots.hpp"
#include "mre/transform.hpp"

namespace mre {

namespace {

constexpr int kMaxRefinements = 6;

void require_in_domain(const MeasureMatrix& m, double theta) {
    if (!(theta > domain_abscissa(m)))
        throw DomainError("vartheta = " + std::to_string(theta) + " is not inside the transform domain");
}

double resolvent_norm(const MeasureMatrix& m, cplx z) {
    const Eigen::Index p = m.p();
    const CMatrix a = CMatrix::Identity(p, p) - laplace_matrix(m, z);
    const CMatrix inv = Eigen::PartialPivLU<CMatrix>(a).inverse();
    const double n = inf_norm(inv);
    if (!std::isfinite(n) || n * inf_norm(a) > 1e14)
        throw RootOnLineError("I - L mu is singular at " + std::to_string(z.real()) + "+" + std::to_string(z.imag()) +
                              "i");
    return n;
}

std::vector<double> scan(const MeasureMatrix& m, double vartheta, double eta_max, int n, std::vector<double>& eta) {
    eta.resize(static_cast<std::size_t>(n));
    std::vector<double> norms(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double e = n == 1 ? 0.0 : eta_max * k / (n - 1);
        eta[static_cast<std::size_t>(k)] = e;
        norms[static_cast<std::size_t>(k)] = resolvent_norm(m, cplx(vartheta, e));
    }
    return norms;
}

}  // namespace

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass:
            return "pass";
        case Verdict::Fail:
            return "fail";
        case Verdict::Inconclusive:
            return "inconclusive";
    }
    return "unknown";
}

ConditionReport check_B(const MeasureMatrix& m, double vartheta, int m_max) {
    m.validate();
    require_in_domain(m, vartheta);
    ConditionReport r;
    r.condition = "B";
    const CMatrix s = laplace_matrix(singular_part(m), cplx(vartheta, 0.0));
    CMatrix power = s;
    for (int k = 1; k <= std::max(m_max, 1); ++k) {
        if (k > 1) power = power * s;
        const double n = inf_norm(power);
        r.norms.push_back(n);
        if (n < 1.0) {
            r.verdict = Verdict::Pass;
            r.m_used = k;
            return r;
        }
    }
    r.verdict = Verdict::Fail;
    r.m_used = static_cast<int>(r.norms.size());
    r.note = "no power up to m_max has singular-part norm below 1";
    return r;
}

ConditionReport check_E(const MeasureMatrix& m, double vartheta, double eta_max, int n_grid) {
    m.validate();
    require_in_domain(m, vartheta);
    if (!(eta_max > 0.0) || n_grid < 2) throw DomainError("check_E needs eta_max > 0 and at least 2 grid points");

    // Locate the zeros of a strip around the line; a thin rectangle would put
    // any zero on the line too close to its long edges for the phase tracker.
    const double delta = 1e-6 * std::max(1.0, std::abs(vartheta));
    const double half = std::min(0.05, 0.5 * (vartheta - domain_abscissa(m)));
    const AnalyticFunction f = [&m](cplx z) { return det_char_with_derivative(m, z); };
    int on_line = 0;
    for (const auto& z : locate_zeros(f, Rect{vartheta - half, vartheta + half, -eta_max, eta_max}))
        if (std::abs(z.lambda.real() - vartheta) <= delta) on_line += z.det_multiplicity;
    if (on_line != 0)
        throw RootOnLineError("det(I - L mu) has " + std::to_string(on_line) + " zero(s) on Re z = " +
                              std::to_string(vartheta));

    ConditionReport r;
    r.condition = "E";
    r.eta_max = eta_max;
    std::vector<double> eta;
    std::vector<double> norms = scan(m, vartheta, eta_max, n_grid, eta);
    double sup = *std::max_element(norms.begin(), norms.end());
    bool stable = false;
    int n = n_grid;
    for (int k = 0; k < kMaxRefinements; ++k) {
        n = 2 * n - 1;
        norms = scan(m, vartheta, eta_max, n, eta);
        const double refined = *std::max_element(norms.begin(), norms.end());
        ++r.refinements;
        const bool close = std::abs(refined - sup) <= 0.05 * refined;
        sup = refined;
        if (close) {
            stable = true;
            break;
        }
    }
    r.eta = eta;
    r.eta_norms = norms;
    r.supremum = sup;

    const auto argmax = static_cast<std::size_t>(std::max_element(norms.begin(), norms.end()) - norms.begin());
    const auto tail_start = static_cast<std::size_t>(0.9 * static_cast<double>(norms.size() - 1));
    // A norm creeping up to an asymptote is not a growing trend: ask for a 1% rise over the last tenth.
    const bool growing = argmax >= tail_start && norms.back() > 1.01 * norms[tail_start] && argmax > 0;
    if (growing) {
        r.verdict = Verdict::Inconclusive;
        r.note = "norm still growing at eta_max";
    } else if (!stable) {
        r.verdict = Verdict::Inconclusive;
        r.note = "supremum not stable under grid refinement";
    } else {
        r.verdict = Verdict::Pass;
        r.note = "verified within |eta| <= eta_max";
    }
    return r;
}

ConditionReport check_strip_empty(const MeasureMatrix& m, double theta1, double theta2, double im_max) {
    m.validate();
    if (!(theta1 < theta2) || !(im_max > 0.0)) throw DomainError("strip needs theta1 < theta2 and im_max > 0");
    require_in_domain(m, theta1);
    const AnalyticFunction f = [&m](cplx z) { return det_char_with_derivative(m, z); };
    ConditionReport r;
    r.condition = "strip";
    r.eta_max = im_max;
    r.zero_count = count_zeros_nudged(f, Rect{theta1, theta2, -im_max, im_max});
    r.verdict = r.zero_count == 0 ? Verdict::Pass : Verdict::Fail;
    return r;
}

}  // namespace mre
