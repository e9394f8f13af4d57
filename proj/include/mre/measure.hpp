#pragma once

#include <cstddef>
#include <vector>

#include "mre/linalg.hpp"

namespace mre {

/// Point mass `weight` at `location`.
struct AtomTerm {
    double location = 0.0;
    double weight = 0.0;
    bool operator==(const AtomTerm&) const = default;
};

/// Term c * x^k * exp(-beta x) on [0, inf). As a density it needs c >= 0;
/// as a characteristic term any sign is allowed. beta may be negative.
struct ExpPolyTerm {
    double coefficient = 0.0;
    int power = 0;
    double rate = 0.0;
    bool operator==(const ExpPolyTerm&) const = default;

    double value(double x) const;
};

/// Locally finite measure on [0, inf): atoms plus exponential-polynomial densities.
struct ScalarMeasure {
    std::vector<AtomTerm> atoms;
    std::vector<ExpPolyTerm> densities;
    bool operator==(const ScalarMeasure&) const = default;

    static ScalarMeasure atom(double location, double weight);
    static ScalarMeasure density(double coefficient, int power, double rate);
    /// Lebesgue intensity `rate` on [0, inf) (homogeneous Poisson intensity).
    static ScalarMeasure poisson(double rate);

    bool empty() const { return atoms.empty() && densities.empty(); }
    void validate() const;

    ScalarMeasure& operator+=(const ScalarMeasure& other);
};

ScalarMeasure operator+(ScalarMeasure a, const ScalarMeasure& b);

/// p x p matrix of scalar measures, stored row-major.
class MeasureMatrix {
public:
    MeasureMatrix() = default;
    explicit MeasureMatrix(int p);
    MeasureMatrix(int p, std::vector<ScalarMeasure> entries);

    int p() const { return p_; }
    const ScalarMeasure& at(int i, int j) const { return entries_[index(i, j)]; }
    ScalarMeasure& at(int i, int j) { return entries_[index(i, j)]; }
    const std::vector<ScalarMeasure>& entries() const { return entries_; }

    void validate() const;
    bool operator==(const MeasureMatrix&) const = default;

private:
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i * p_ + j); }

    int p_ = 0;
    std::vector<ScalarMeasure> entries_;
};

/// Matrix of finite-support measures on the lattice span * {0, 1, 2, ...}.
/// weights(i, j)[n] is the mass at n * span.
class LatticeMeasureMatrix {
public:
    LatticeMeasureMatrix() = default;
    LatticeMeasureMatrix(int p, double span);
    LatticeMeasureMatrix(int p, double span, std::vector<std::vector<double>> weights);

    int p() const { return p_; }
    double span() const { return span_; }
    const std::vector<double>& weights(int i, int j) const { return weights_[index(i, j)]; }
    std::vector<double>& weights(int i, int j) { return weights_[index(i, j)]; }
    const std::vector<std::vector<double>>& all_weights() const { return weights_; }

    /// Largest index with a stored weight (0 for an all-empty matrix).
    std::size_t max_index() const;
    /// The p x p matrix mu({n}).
    RMatrix mass_at(std::size_t n) const;

    void validate() const;
    bool operator==(const LatticeMeasureMatrix&) const = default;

private:
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i * p_ + j); }

    int p_ = 0;
    double span_ = 1.0;
    std::vector<std::vector<double>> weights_;
};

/// Jump of height `height` at `location`, i.e. height * 1_[location, inf).
struct StepTerm {
    double location = 0.0;
    double height = 0.0;
    bool operator==(const StepTerm&) const = default;
};

struct CharacteristicComponent {
    std::vector<StepTerm> steps;
    std::vector<ExpPolyTerm> terms;
    bool operator==(const CharacteristicComponent&) const = default;

    double value(double t) const;
    bool is_zero() const { return steps.empty() && terms.empty(); }
};

/// Vector of right-continuous functions vanishing on (-inf, 0): the mean
/// score f(t) = E[phi(t)] of a branching process characteristic.
struct Characteristic {
    std::vector<CharacteristicComponent> components;
    bool operator==(const Characteristic&) const = default;

    int p() const { return static_cast<int>(components.size()); }
    RVector value(double t) const;
    void validate() const;

    /// f = 1_[0,inf) in every component (counts all individuals born).
    static Characteristic counting(int p);
    /// f = e_j 1_[0,inf): counts individuals of type j.
    static Characteristic type_indicator(int p, int j);
    /// f = e_j 1_[0,h): a unit mass at lattice index 0 for span h.
    static Characteristic lattice_delta(int p, int j, double span = 1.0);
};

/// f(n * span), with steps located within 1e-9 span of n * span counted as
/// already taken (lattice sampling of a right-continuous function).
RVector lattice_value(const Characteristic& f, double span, long n);

/// mu([0, t]).
double total_mass(const ScalarMeasure& m, double t);

/// The matrix mu({0}) of atom weights at location 0.
RMatrix instant_mass_matrix(const MeasureMatrix& m);

/// Entrywise atomic part; for this family it is exactly the singular part.
MeasureMatrix singular_part(const MeasureMatrix& m);

/// Re-express a lattice matrix as atoms at n * span.
MeasureMatrix embed(const LatticeMeasureMatrix& lattice);

/// Closed form of int_0^t x^k e^{lambda x} dx.
cplx integral_xk_exp(int k, cplx lambda, double t);

/// Growth order of a component: infimum of theta with
/// int_0^inf e^{-theta x} |f(x)| dx < inf. -inf for the zero function.
double exponential_order(const CharacteristicComponent& f);

/// Infimum of theta with int_0^inf e^{-theta x} Vf(x) dx < inf.
double variation_order(const CharacteristicComponent& f);

/// int_0^inf e^{-theta x} Vf(x) dx, evaluated piecewise in closed form between
/// the sign changes of f'. Returns +inf when theta <= variation_order(f).
double variation_moment(const CharacteristicComponent& f, double theta);

}  // namespace mre
