#include "mre/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "mre/errors.hpp"

namespace mre {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw InvalidMeasureError(std::string(what) + " must be finite");
}

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

}  // namespace

double ExpPolyTerm::value(double x) const {
    if (x < 0.0) return 0.0;
    const double poly = power == 0 ? 1.0 : std::pow(x, power);
    return coefficient * poly * std::exp(-rate * x);
}

ScalarMeasure ScalarMeasure::atom(double location, double weight) {
    ScalarMeasure m;
    m.atoms.push_back({location, weight});
    return m;
}

ScalarMeasure ScalarMeasure::density(double coefficient, int power, double rate) {
    ScalarMeasure m;
    m.densities.push_back({coefficient, power, rate});
    return m;
}

ScalarMeasure ScalarMeasure::poisson(double rate) { return density(rate, 0, 0.0); }

void ScalarMeasure::validate() const {
    for (const auto& a : atoms) {
        check_finite(a.location, "atom location");
        check_finite(a.weight, "atom weight");
        if (a.location < 0.0) throw InvalidMeasureError("atom location must be >= 0");
        if (a.weight < 0.0) throw InvalidMeasureError("atom weight must be >= 0");
    }
    for (const auto& d : densities) {
        check_finite(d.coefficient, "density coefficient");
        check_finite(d.rate, "density rate");
        if (d.coefficient < 0.0) throw InvalidMeasureError("density coefficient must be >= 0");
        if (d.power < 0) throw InvalidMeasureError("density power must be >= 0");
    }
}

ScalarMeasure& ScalarMeasure::operator+=(const ScalarMeasure& other) {
    atoms.insert(atoms.end(), other.atoms.begin(), other.atoms.end());
    densities.insert(densities.end(), other.densities.begin(), other.densities.end());
    return *this;
}

ScalarMeasure operator+(ScalarMeasure a, const ScalarMeasure& b) {
    a += b;
    return a;
}

MeasureMatrix::MeasureMatrix(int p) : p_(p), entries_(static_cast<std::size_t>(p * p)) {
    if (p <= 0) throw InvalidMeasureError("number of types must be positive");
}

MeasureMatrix::MeasureMatrix(int p, std::vector<ScalarMeasure> entries)
    : p_(p), entries_(std::move(entries)) {
    if (p <= 0) throw InvalidMeasureError("number of types must be positive");
    if (entries_.size() != static_cast<std::size_t>(p * p))
        throw InvalidMeasureError("measure matrix must have p*p entries");
}

void MeasureMatrix::validate() const {
    if (p_ <= 0 || entries_.size() != static_cast<std::size_t>(p_ * p_))
        throw InvalidMeasureError("measure matrix is not square");
    for (const auto& e : entries_) e.validate();
}

LatticeMeasureMatrix::LatticeMeasureMatrix(int p, double span)
    : p_(p), span_(span), weights_(static_cast<std::size_t>(p * p)) {
    if (p <= 0) throw InvalidMeasureError("number of types must be positive");
}

LatticeMeasureMatrix::LatticeMeasureMatrix(int p, double span, std::vector<std::vector<double>> weights)
    : p_(p), span_(span), weights_(std::move(weights)) {
    if (p <= 0) throw InvalidMeasureError("number of types must be positive");
    if (weights_.size() != static_cast<std::size_t>(p * p))
        throw InvalidMeasureError("lattice matrix must have p*p weight vectors");
}

std::size_t LatticeMeasureMatrix::max_index() const {
    std::size_t n = 0;
    for (const auto& w : weights_)
        if (!w.empty()) n = std::max(n, w.size() - 1);
    return n;
}

RMatrix LatticeMeasureMatrix::mass_at(std::size_t n) const {
    RMatrix m = RMatrix::Zero(p_, p_);
    for (int i = 0; i < p_; ++i)
        for (int j = 0; j < p_; ++j) {
            const auto& w = weights(i, j);
            if (n < w.size()) m(i, j) = w[n];
        }
    return m;
}

void LatticeMeasureMatrix::validate() const {
    if (p_ <= 0 || weights_.size() != static_cast<std::size_t>(p_ * p_))
        throw InvalidMeasureError("lattice matrix is not square");
    if (!(span_ > 0.0) || !std::isfinite(span_)) throw InvalidMeasureError("lattice span must be positive");
    for (const auto& w : weights_)
        for (double v : w) {
            check_finite(v, "lattice weight");
            if (v < 0.0) throw InvalidMeasureError("lattice weights must be >= 0");
        }
}

double CharacteristicComponent::value(double t) const {
    if (t < 0.0) return 0.0;
    double v = 0.0;
    for (const auto& s : steps)
        if (s.location <= t) v += s.height;
    for (const auto& term : terms) v += term.value(t);
    return v;
}

RVector Characteristic::value(double t) const {
    RVector v(p());
    for (int i = 0; i < p(); ++i) v(i) = components[static_cast<std::size_t>(i)].value(t);
    return v;
}

RVector lattice_value(const Characteristic& f, double span, long n) {
    const double t = static_cast<double>(n) * span;
    const double cut = t + 1e-9 * span;
    RVector v = RVector::Zero(f.p());
    for (int i = 0; i < f.p(); ++i) {
        const auto& c = f.components[static_cast<std::size_t>(i)];
        double acc = 0.0;
        for (const auto& s : c.steps)
            if (s.location <= cut) acc += s.height;
        for (const auto& term : c.terms) acc += term.value(t);
        v(i) = acc;
    }
    return v;
}

void Characteristic::validate() const {
    for (const auto& c : components) {
        for (const auto& s : c.steps) {
            check_finite(s.location, "step location");
            check_finite(s.height, "step height");
            if (s.location < 0.0) throw InvalidMeasureError("step location must be >= 0");
        }
        for (const auto& t : c.terms) {
            check_finite(t.coefficient, "term coefficient");
            check_finite(t.rate, "term rate");
            if (t.power < 0) throw InvalidMeasureError("term power must be >= 0");
        }
    }
}

Characteristic Characteristic::counting(int p) {
    Characteristic f;
    f.components.assign(static_cast<std::size_t>(p), CharacteristicComponent{{{0.0, 1.0}}, {}});
    return f;
}

Characteristic Characteristic::type_indicator(int p, int j) {
    Characteristic f;
    f.components.resize(static_cast<std::size_t>(p));
    f.components[static_cast<std::size_t>(j)].steps.push_back({0.0, 1.0});
    return f;
}

Characteristic Characteristic::lattice_delta(int p, int j, double span) {
    Characteristic f;
    f.components.resize(static_cast<std::size_t>(p));
    auto& c = f.components[static_cast<std::size_t>(j)];
    c.steps.push_back({0.0, 1.0});
    c.steps.push_back({span, -1.0});
    return f;
}

double total_mass(const ScalarMeasure& m, double t) {
    if (t < 0.0) return 0.0;
    double mass = 0.0;
    for (const auto& a : m.atoms)
        if (a.location <= t) mass += a.weight;
    for (const auto& d : m.densities)
        mass += d.coefficient * integral_xk_exp(d.power, cplx(-d.rate, 0.0), t).real();
    return mass;
}

RMatrix instant_mass_matrix(const MeasureMatrix& m) {
    RMatrix out = RMatrix::Zero(m.p(), m.p());
    for (int i = 0; i < m.p(); ++i)
        for (int j = 0; j < m.p(); ++j)
            for (const auto& a : m.at(i, j).atoms)
                if (a.location == 0.0) out(i, j) += a.weight;
    return out;
}

MeasureMatrix singular_part(const MeasureMatrix& m) {
    MeasureMatrix s(m.p());
    for (int i = 0; i < m.p(); ++i)
        for (int j = 0; j < m.p(); ++j) s.at(i, j).atoms = m.at(i, j).atoms;
    return s;
}

MeasureMatrix embed(const LatticeMeasureMatrix& lattice) {
    MeasureMatrix m(lattice.p());
    for (int i = 0; i < lattice.p(); ++i)
        for (int j = 0; j < lattice.p(); ++j) {
            const auto& w = lattice.weights(i, j);
            for (std::size_t n = 0; n < w.size(); ++n)
                if (w[n] != 0.0) m.at(i, j).atoms.push_back({static_cast<double>(n) * lattice.span(), w[n]});
        }
    return m;
}

cplx integral_xk_exp(int k, cplx lambda, double t) {
    if (t <= 0.0) return 0.0;
    const cplx x = lambda * t;
    const double tk1 = std::pow(t, k + 1);
    // Power series t^{k+1} sum_n x^n / (n! (k+n+1)) where the closed form cancels.
    if (std::abs(x) <= std::max(1.0, static_cast<double>(k + 1))) {
        cplx sum = 0.0;
        cplx term = 1.0;
        for (int n = 0; n < 400; ++n) {
            const cplx add = term / static_cast<double>(k + n + 1);
            sum += add;
            if (std::abs(add) < 1e-18 * std::abs(sum) && n > 2) break;
            term *= x / static_cast<double>(n + 1);
        }
        return tk1 * sum;
    }
    // (-1)^{k+1} k! / lambda^{k+1} (1 - e^{lambda t} sum_j (-1)^j lambda^j t^j / j!)
    cplx partial = 0.0;
    cplx term = 1.0;
    for (int j = 0; j <= k; ++j) {
        partial += term;
        term *= -x / static_cast<double>(j + 1);
    }
    const double sign = (k % 2 == 0) ? -1.0 : 1.0;
    return sign * factorial(k) / std::pow(lambda, k + 1) * (1.0 - std::exp(x) * partial);
}

double exponential_order(const CharacteristicComponent& f) {
    double order = -kInf;
    bool has_steps = false;
    for (const auto& s : f.steps)
        if (s.height != 0.0) has_steps = true;
    if (has_steps) order = 0.0;
    for (const auto& t : f.terms)
        if (t.coefficient != 0.0) order = std::max(order, -t.rate);
    return order;
}

double variation_order(const CharacteristicComponent& f) {
    double order = -kInf;
    for (const auto& s : f.steps)
        if (s.height != 0.0) order = std::max(order, 0.0);
    for (const auto& t : f.terms)
        if (t.coefficient != 0.0) order = std::max({order, 0.0, -t.rate});
    return order;
}

double variation_moment(const CharacteristicComponent& f, double theta) {
    const double order = variation_order(f);
    if (order == -kInf) return 0.0;
    if (theta <= order) return kInf;

    // Jumps: f(0-) = 0, so the continuous part contributes g(0) to the jump at 0.
    std::map<double, double> jumps;
    for (const auto& s : f.steps) jumps[s.location] += s.height;
    for (const auto& t : f.terms)
        if (t.power == 0) jumps[0.0] += t.coefficient;
    double jump_part = 0.0;
    for (const auto& [loc, h] : jumps) jump_part += std::abs(h) * std::exp(-theta * loc);

    // g'(x) = sum d x^m e^{-beta x}
    struct Piece {
        double d;
        int m;
        double beta;
    };
    std::vector<Piece> deriv;
    for (const auto& t : f.terms) {
        if (t.coefficient == 0.0) continue;
        if (t.power > 0) deriv.push_back({t.coefficient * t.power, t.power - 1, t.rate});
        if (t.rate != 0.0) deriv.push_back({-t.coefficient * t.rate, t.power, t.rate});
    }
    if (deriv.empty()) return jump_part / theta;

    auto gprime = [&](double x) {
        double v = 0.0;
        for (const auto& q : deriv) v += q.d * (q.m == 0 ? 1.0 : std::pow(x, q.m)) * std::exp(-q.beta * x);
        return v;
    };
    // Weighted integral of |terms| bounds the continuous contribution.
    double scale = 0.0;
    for (const auto& q : deriv) {
        const double a = theta + q.beta;
        scale += std::abs(q.d) * factorial(q.m) / std::pow(a, q.m + 1);
    }
    auto tail_bound = [&](double x) {
        double b = 0.0;
        for (const auto& q : deriv) {
            const double a = theta + q.beta;
            double s = 0.0;
            for (int i = 0; i <= q.m; ++i)
                s += factorial(q.m) / factorial(i) * std::pow(x, i) / std::pow(a, q.m + 1 - i);
            b += std::abs(q.d) * std::exp(-a * x) * s;
        }
        return b;
    };
    double horizon = 1.0;
    while (tail_bound(horizon) > 1e-17 * scale && horizon < 1e12) horizon *= 2.0;

    constexpr int kGrid = 1 << 14;
    std::vector<double> cuts{0.0};
    double prev_x = 0.0;
    double prev_v = gprime(0.0);
    for (int i = 1; i <= kGrid; ++i) {
        const double x = horizon * static_cast<double>(i) / kGrid;
        const double v = gprime(x);
        if (v == 0.0) continue;  // keep the last nonzero sample so exact grid zeros still split
        if ((prev_v < 0.0 && v > 0.0) || (prev_v > 0.0 && v < 0.0)) {
            double lo = prev_x, hi = x, vlo = prev_v;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
                const double mid = 0.5 * (lo + hi);
                const double vm = gprime(mid);
                if ((vm < 0.0) == (vlo < 0.0)) {
                    lo = mid;
                    vlo = vm;
                } else {
                    hi = mid;
                }
            }
            cuts.push_back(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_v = v;
    }
    cuts.push_back(horizon);

    double cont = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        double piece = 0.0;
        for (const auto& q : deriv) {
            const cplx lam(-(theta + q.beta), 0.0);
            piece += q.d * (integral_xk_exp(q.m, lam, cuts[c + 1]) - integral_xk_exp(q.m, lam, cuts[c])).real();
        }
        cont += std::abs(piece);
    }
    return (jump_part + cont) / theta;
}

}  // namespace mre
