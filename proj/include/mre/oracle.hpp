#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "mre/linalg.hpp"
#include "mre/measure.hpp"

namespace mre {

/// U({0}), ..., U({N}) from U({n}) = (I - mu({0}))^{-1} (1{n=0} I + sum_{m>=1} mu({m}) U({n-m})).
/// Throws AssumptionError if rho(mu({0})) >= 1.
std::vector<RMatrix> lattice_renewal(const LatticeMeasureMatrix& lattice, std::size_t n_max);

/// F(0), ..., F(N) solving F(n) = f(n h) + sum_{m=0}^{n} mu({m}) F(n-m).
std::vector<RVector> lattice_solution(const LatticeMeasureMatrix& lattice, const Characteristic& f,
                                      std::size_t n_max);

/// Cell masses mu((k-1)h, kh], atoms snapped to the right end of their cell.
LatticeMeasureMatrix discretize(const MeasureMatrix& m, double h, std::size_t cells);

/// Step-function samples at t = k h, k = 0..K.
struct GridMatrixSolution {
    double h = 0.0;
    std::vector<RMatrix> values;
    /// Value at the grid point nearest below t.
    const RMatrix& at(double t) const;
};

struct GridVectorSolution {
    double h = 0.0;
    std::vector<RVector> values;
    const RVector& at(double t) const;
};

/// U(kh) = sum_{n<=k} u_n for the discretized measure; first-order in h.
GridMatrixSolution grid_convolution_U(const MeasureMatrix& m, double t_max, double h);
/// F(kh) for the discretized measure and f sampled on the grid.
GridVectorSolution grid_convolution_F(const MeasureMatrix& m, const Characteristic& f, double t_max, double h);

/// Philox4x32-10 counter-based generator. Key = seed, counter = (stream, block index).
class Philox {
public:
    using result_type = std::uint32_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    Philox(std::uint64_t seed, std::uint64_t stream, std::uint32_t substream = 0);
    result_type operator()();

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
};

struct Lifetime {
    enum class Kind { Infinite, Deterministic, Exponential };
    Kind kind = Kind::Infinite;
    double value = 0.0;  // the age at death, or the exponential rate
    bool operator==(const Lifetime&) const = default;
};

/// Multi-type CMJ model. reproduction(i, j) is the intensity measure of type-j
/// births to a type-i mother: densities become inhomogeneous Poisson processes,
/// an atom of weight w gives floor(w) births plus one more with probability frac(w).
/// score.components[j] is the deterministic score of a living type-j individual by age.
struct BranchingModel {
    MeasureMatrix reproduction;
    std::vector<Lifetime> lifetimes;  // empty: all infinite
    Characteristic score;

    int p() const { return reproduction.p(); }
    static BranchingModel from_measure(const MeasureMatrix& m, const Characteristic& score,
                                       std::vector<Lifetime> lifetimes = {});
    /// Throws InvalidModelError.
    void validate() const;
    /// Throws InvalidModelError if the intensity differs from `analyzed` by more
    /// than `tol` in total mass on [0, t] for t in {0.5, 1, 2, 4}.
    void check_intensity(const MeasureMatrix& analyzed, double tol = 1e-12) const;
    /// E[phi(a)] = f(a) P(L > a), when representable in the characteristic family.
    Characteristic mean_characteristic() const;
};

struct SimOptions {
    double population_cap = 1e7;   // expected individuals per replication
    double expected_size = -1.0;   // leading-term estimate; < 0 runs a pilot of 100 replications
    int threads = 0;               // 0: hardware concurrency capped by MRE_THREADS
};

struct SimEstimate {
    std::vector<double> t;
    std::vector<double> mean;
    std::vector<double> std_error;
    long replications = 0;
    std::uint64_t seed = 0;
    int initial_type = 0;
};

/// Monte Carlo estimate of E^i[Z_t^phi] on t_grid. Deterministic given the seed.
/// Throws PopulationCapError.
SimEstimate cmj_simulate(const BranchingModel& model, const std::vector<double>& t_grid, long replications,
                         std::uint64_t seed, int initial_type, const SimOptions& opts = {});

/// Mean and standard error of the number of type-j children born on [0, t] to one
/// type-i mother, j = 0..p-1.
SimEstimate offspring_counts(const BranchingModel& model, int parent_type, double t, long replications,
                             std::uint64_t seed);

/// Thread count from MRE_THREADS (if set) and hardware concurrency.
int worker_threads(int requested = 0);

}  // namespace mre
