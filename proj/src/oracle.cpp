#include "mre/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <random>
#include <string>
#include <thread>

#include <Eigen/LU>

#include "mre/errors.hpp"
#include "mre/spectral.hpp"

namespace mre {

namespace {

// acc += a * b for small column-major p x q blocks, without temporaries.
void multiply_add(RMatrix& acc, const RMatrix& a, const RMatrix& b) {
    const Eigen::Index p = a.rows();
    const Eigen::Index inner = a.cols();
    const Eigen::Index q = b.cols();
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = acc.data();
    for (Eigen::Index col = 0; col < q; ++col)
        for (Eigen::Index k = 0; k < inner; ++k) {
            const double bk = pb[col * inner + k];
            if (bk == 0.0) continue;
            for (Eigen::Index row = 0; row < p; ++row) pc[col * p + row] += pa[k * p + row] * bk;
        }
}

template <typename Rhs>
std::vector<RMatrix> renewal_recursion(const LatticeMeasureMatrix& lattice, std::size_t n_max, Rhs rhs) {
    lattice.validate();
    const RMatrix mu0 = lattice.mass_at(0);
    require_subcritical_instant(mu0);
    const Eigen::Index p = lattice.p();
    const Eigen::PartialPivLU<RMatrix> solver(RMatrix::Identity(p, p) - mu0);
    const std::size_t support = std::min(lattice.max_index(), n_max);
    std::vector<RMatrix> masses;
    std::vector<bool> nonzero;
    for (std::size_t m = 0; m <= support; ++m) {
        masses.push_back(lattice.mass_at(m));
        nonzero.push_back(masses.back().cwiseAbs().maxCoeff() > 0.0);
    }
    std::vector<RMatrix> out;
    out.reserve(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) {
        RMatrix s = rhs(n);
        for (std::size_t m = 1; m <= std::min(n, support); ++m)
            if (nonzero[m]) multiply_add(s, masses[m], out[n - m]);
        out.push_back(solver.solve(s));
    }
    return out;
}

ScalarMeasure density_part(const ScalarMeasure& s) {
    ScalarMeasure d;
    d.densities = s.densities;
    return d;
}

std::size_t grid_index(double t, double h, std::size_t size) {
    if (!(t >= 0.0)) throw DomainError("grid solutions are defined for t >= 0");
    const auto k = static_cast<std::size_t>(std::floor(t / h + 1e-9));
    if (k >= size) throw DomainError("t = " + std::to_string(t) + " lies beyond the computed grid");
    return k;
}

std::size_t cell_count(double t_max, double h) {
    if (!(h > 0.0) || !(t_max >= 0.0)) throw DomainError("grid needs h > 0 and t_max >= 0");
    return static_cast<std::size_t>(std::ceil(t_max / h - 1e-9));
}

}  // namespace

std::vector<RMatrix> lattice_renewal(const LatticeMeasureMatrix& lattice, std::size_t n_max) {
    const Eigen::Index p = lattice.p();
    return renewal_recursion(lattice, n_max, [p](std::size_t n) {
        return n == 0 ? RMatrix(RMatrix::Identity(p, p)) : RMatrix(RMatrix::Zero(p, p));
    });
}

std::vector<RVector> lattice_solution(const LatticeMeasureMatrix& lattice, const Characteristic& f,
                                      std::size_t n_max) {
    if (f.p() != lattice.p()) throw InvalidMeasureError("characteristic and model disagree on p");
    const auto mats = renewal_recursion(lattice, n_max, [&](std::size_t n) {
        return RMatrix(lattice_value(f, lattice.span(), static_cast<long>(n)));
    });
    std::vector<RVector> out;
    out.reserve(mats.size());
    for (const auto& m : mats) out.push_back(m.col(0));
    return out;
}

LatticeMeasureMatrix discretize(const MeasureMatrix& m, double h, std::size_t cells) {
    m.validate();
    const int p = m.p();
    LatticeMeasureMatrix out(p, h);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            const ScalarMeasure& s = m.at(i, j);
            std::vector<double> w(cells + 1, 0.0);
            for (const auto& a : s.atoms) {
                const double k = a.location == 0.0 ? 0.0 : std::ceil(a.location / h - 1e-9);
                if (k <= static_cast<double>(cells)) w[static_cast<std::size_t>(k)] += a.weight;
            }
            if (!s.densities.empty()) {
                const ScalarMeasure d = density_part(s);
                double prev = 0.0;
                for (std::size_t k = 1; k <= cells; ++k) {
                    const double cur = total_mass(d, static_cast<double>(k) * h);
                    w[k] += cur - prev;
                    prev = cur;
                }
            }
            out.weights(i, j) = std::move(w);
        }
    return out;
}

const RMatrix& GridMatrixSolution::at(double t) const { return values[grid_index(t, h, values.size())]; }
const RVector& GridVectorSolution::at(double t) const { return values[grid_index(t, h, values.size())]; }

GridMatrixSolution grid_convolution_U(const MeasureMatrix& m, double t_max, double h) {
    const std::size_t cells = cell_count(t_max, h);
    const auto u = lattice_renewal(discretize(m, h, cells), cells);
    GridMatrixSolution out;
    out.h = h;
    out.values.reserve(u.size());
    RMatrix running = RMatrix::Zero(m.p(), m.p());
    for (const auto& un : u) {
        running += un;
        out.values.push_back(running);
    }
    return out;
}

GridVectorSolution grid_convolution_F(const MeasureMatrix& m, const Characteristic& f, double t_max, double h) {
    const std::size_t cells = cell_count(t_max, h);
    GridVectorSolution out;
    out.h = h;
    out.values = lattice_solution(discretize(m, h, cells), f, cells);
    return out;
}

// ---------------------------------------------------------------------------
// Philox4x32-10 (Salmon et al., SC'11).

Philox::Philox(std::uint64_t seed, std::uint64_t stream, std::uint32_t substream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0u, substream, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

void Philox::refill() {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    std::array<std::uint32_t, 4> c = counter_;
    std::array<std::uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
        k[0] += kW0;
        k[1] += kW1;
    }
    block_ = c;
    if (++counter_[0] == 0) throw PopulationCapError("random stream exhausted");
    used_ = 0;
}

Philox::result_type Philox::operator()() {
    if (used_ == 4) refill();
    return block_[static_cast<std::size_t>(used_++)];
}

// ---------------------------------------------------------------------------

BranchingModel BranchingModel::from_measure(const MeasureMatrix& m, const Characteristic& score,
                                            std::vector<Lifetime> lifetimes) {
    BranchingModel model{m, std::move(lifetimes), score};
    model.validate();
    return model;
}

void BranchingModel::validate() const {
    try {
        reproduction.validate();
        score.validate();
    } catch (const InvalidMeasureError& e) {
        throw InvalidModelError(e.what());
    }
    if (score.p() != p()) throw InvalidModelError("score has the wrong number of components");
    if (!lifetimes.empty() && static_cast<int>(lifetimes.size()) != p())
        throw InvalidModelError("need one lifetime law per type");
    for (const auto& l : lifetimes)
        if (l.kind != Lifetime::Kind::Infinite && !(l.value > 0.0))
            throw InvalidModelError("lifetime parameters must be positive");
}

void BranchingModel::check_intensity(const MeasureMatrix& analyzed, double tol) const {
    if (analyzed.p() != p()) throw InvalidModelError("analyzed matrix has a different number of types");
    for (int i = 0; i < p(); ++i)
        for (int j = 0; j < p(); ++j)
            for (double t : {0.5, 1.0, 2.0, 4.0}) {
                const double a = total_mass(reproduction.at(i, j), t);
                const double b = total_mass(analyzed.at(i, j), t);
                if (std::abs(a - b) > tol * std::max(1.0, std::abs(b)))
                    throw InvalidModelError("intensity of generator (" + std::to_string(i) + "," +
                                            std::to_string(j) + ") differs from the analyzed measure at t = " +
                                            std::to_string(t));
            }
}

Characteristic BranchingModel::mean_characteristic() const {
    Characteristic out = score;
    if (lifetimes.empty()) return out;
    for (int j = 0; j < p(); ++j) {
        const Lifetime& l = lifetimes[static_cast<std::size_t>(j)];
        auto& comp = out.components[static_cast<std::size_t>(j)];
        switch (l.kind) {
            case Lifetime::Kind::Infinite:
                break;
            case Lifetime::Kind::Deterministic: {
                if (!comp.terms.empty())
                    throw InvalidModelError("deterministic lifetimes need a step-only score");
                std::vector<StepTerm> kept;
                double alive = 0.0;
                for (const auto& s : comp.steps)
                    if (s.location < l.value) {
                        kept.push_back(s);
                        alive += s.height;
                    }
                if (alive != 0.0) kept.push_back({l.value, -alive});
                comp.steps = std::move(kept);
                break;
            }
            case Lifetime::Kind::Exponential: {
                std::vector<ExpPolyTerm> terms;
                for (const auto& s : comp.steps) {
                    if (s.location != 0.0)
                        throw InvalidModelError("exponential lifetimes need steps at age 0 only");
                    terms.push_back({s.height, 0, l.value});
                }
                for (const auto& t : comp.terms) terms.push_back({t.coefficient, t.power, t.rate + l.value});
                comp.steps.clear();
                comp.terms = std::move(terms);
                break;
            }
        }
    }
    return out;
}

int worker_threads(int requested) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MRE_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    return std::max(n, 1);
}

namespace {

class OffspringSampler {
public:
    explicit OffspringSampler(const BranchingModel& model) : model_(model) {
        const int p = model.p();
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                const ScalarMeasure& s = model.reproduction.at(i, j);
                densities_.push_back(density_part(s));
                homogeneous_.push_back(s.densities.size() == 1 && s.densities[0].power == 0 &&
                                       s.densities[0].rate == 0.0);
            }
    }

    // Calls emit(age_at_birth, child_type) for every child born at age <= horizon.
    template <typename Emit>
    void sample(int mother, double horizon, Philox& rng, Emit emit) const {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const int p = model_.p();
        for (int j = 0; j < p; ++j) {
            const ScalarMeasure& s = model_.reproduction.at(mother, j);
            for (const auto& a : s.atoms) {
                if (a.location > horizon || a.weight == 0.0) continue;
                const double whole = std::floor(a.weight);
                long n = static_cast<long>(whole);
                if (unit(rng) < a.weight - whole) ++n;
                for (long c = 0; c < n; ++c) emit(a.location, j);
            }
            const auto idx = static_cast<std::size_t>(mother * p + j);
            const ScalarMeasure& d = densities_[idx];
            if (d.densities.empty()) continue;
            const double total = total_mass(d, horizon);
            if (!(total > 0.0)) continue;
            std::poisson_distribution<long> count(total);
            const long n = count(rng);
            for (long c = 0; c < n; ++c) {
                const double target = unit(rng) * total;
                double age = 0.0;
                if (homogeneous_[idx]) {
                    age = target / d.densities[0].coefficient;
                } else {
                    double lo = 0.0;
                    double hi = horizon;
                    for (int it = 0; it < 60; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        if (total_mass(d, mid) < target)
                            lo = mid;
                        else
                            hi = mid;
                    }
                    age = 0.5 * (lo + hi);
                }
                emit(std::min(age, horizon), j);
            }
        }
    }

private:
    const BranchingModel& model_;
    std::vector<ScalarMeasure> densities_;
    std::vector<bool> homogeneous_;
};

double sample_lifetime(const Lifetime& l, Philox& rng) {
    switch (l.kind) {
        case Lifetime::Kind::Infinite:
            return std::numeric_limits<double>::infinity();
        case Lifetime::Kind::Deterministic:
            return l.value;
        case Lifetime::Kind::Exponential:
            return std::exponential_distribution<double>(l.value)(rng);
    }
    return std::numeric_limits<double>::infinity();
}

struct Replication {
    std::vector<double> scores;
    long individuals = 0;
};

Replication simulate_once(const BranchingModel& model, const OffspringSampler& sampler,
                          const std::vector<double>& t_grid, double horizon, int initial_type, Philox& rng,
                          double hard_cap) {
    struct Birth {
        double time;
        int type;
    };
    Replication out;
    out.scores.assign(t_grid.size(), 0.0);
    std::vector<Birth> stack{{0.0, initial_type}};
    while (!stack.empty()) {
        const Birth b = stack.back();
        stack.pop_back();
        if (static_cast<double>(++out.individuals) > hard_cap)
            throw PopulationCapError("population exceeded " + std::to_string(hard_cap) + " individuals");
        const double life =
            model.lifetimes.empty() ? std::numeric_limits<double>::infinity()
                                    : sample_lifetime(model.lifetimes[static_cast<std::size_t>(b.type)], rng);
        const auto& score = model.score.components[static_cast<std::size_t>(b.type)];
        if (!score.is_zero())
            for (std::size_t g = 0; g < t_grid.size(); ++g) {
                const double age = t_grid[g] - b.time;
                if (age >= 0.0 && age < life) out.scores[g] += score.value(age);
            }
        sampler.sample(b.type, horizon - b.time, rng, [&](double age, int j) { stack.push_back({b.time + age, j}); });
    }
    return out;
}

template <typename Work>
void run_parallel(long count, int threads, Work work) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (long r = t; r < count; r += threads) work(r);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double pairwise_sum(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += x[i];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(x, lo, mid) + pairwise_sum(x, mid, hi);
}

void summarize(const std::vector<std::vector<double>>& per_rep, SimEstimate& est) {
    const std::size_t n = per_rep.size();
    const std::size_t g_count = n == 0 ? 0 : per_rep[0].size();
    est.mean.assign(g_count, 0.0);
    est.std_error.assign(g_count, 0.0);
    std::vector<double> column(n);
    for (std::size_t g = 0; g < g_count; ++g) {
        for (std::size_t r = 0; r < n; ++r) column[r] = per_rep[r][g];
        const double mean = pairwise_sum(column, 0, n) / static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) column[r] = (per_rep[r][g] - mean) * (per_rep[r][g] - mean);
        const double var = n > 1 ? pairwise_sum(column, 0, n) / static_cast<double>(n - 1) : 0.0;
        est.mean[g] = mean;
        est.std_error[g] = std::sqrt(var / static_cast<double>(n));
    }
}

constexpr std::uint32_t kPilotSubstream = 0x10000u;
constexpr std::uint32_t kOffspringSubstream = 0x20000u;

}  // namespace

SimEstimate cmj_simulate(const BranchingModel& model, const std::vector<double>& t_grid, long replications,
                         std::uint64_t seed, int initial_type, const SimOptions& opts) {
    model.validate();
    if (initial_type < 0 || initial_type >= model.p()) throw InvalidModelError("initial type out of range");
    if (replications <= 0) throw InvalidModelError("need at least one replication");
    for (double t : t_grid)
        if (!(t >= 0.0)) throw InvalidModelError("grid times must be >= 0");
    SimEstimate est;
    est.t = t_grid;
    est.replications = replications;
    est.seed = seed;
    est.initial_type = initial_type;
    if (t_grid.empty()) return est;

    const double horizon = *std::max_element(t_grid.begin(), t_grid.end());
    const OffspringSampler sampler(model);
    const double hard_cap = 20.0 * opts.population_cap;

    double expected = opts.expected_size;
    if (expected < 0.0) {
        constexpr long kPilot = 100;
        double total = 0.0;
        for (long r = 0; r < kPilot; ++r) {
            Philox rng(seed, static_cast<std::uint64_t>(r), kPilotSubstream + static_cast<std::uint32_t>(initial_type));
            total += static_cast<double>(
                simulate_once(model, sampler, {horizon}, horizon, initial_type, rng, hard_cap).individuals);
        }
        expected = total / kPilot;
    }
    if (expected > opts.population_cap)
        throw PopulationCapError("expected population " + std::to_string(expected) + " exceeds the cap " +
                                 std::to_string(opts.population_cap));

    std::vector<std::vector<double>> per_rep(static_cast<std::size_t>(replications));
    run_parallel(replications, worker_threads(opts.threads), [&](long r) {
        Philox rng(seed, static_cast<std::uint64_t>(r), static_cast<std::uint32_t>(initial_type));
        per_rep[static_cast<std::size_t>(r)] =
            simulate_once(model, sampler, t_grid, horizon, initial_type, rng, hard_cap).scores;
    });
    summarize(per_rep, est);
    return est;
}

SimEstimate offspring_counts(const BranchingModel& model, int parent_type, double t, long replications,
                             std::uint64_t seed) {
    model.validate();
    if (parent_type < 0 || parent_type >= model.p()) throw InvalidModelError("parent type out of range");
    if (replications <= 0) throw InvalidModelError("need at least one replication");
    const OffspringSampler sampler(model);
    const auto p = static_cast<std::size_t>(model.p());
    std::vector<std::vector<double>> per_rep(static_cast<std::size_t>(replications), std::vector<double>(p, 0.0));
    run_parallel(replications, worker_threads(), [&](long r) {
        Philox rng(seed, static_cast<std::uint64_t>(r), kOffspringSubstream + static_cast<std::uint32_t>(parent_type));
        auto& counts = per_rep[static_cast<std::size_t>(r)];
        sampler.sample(parent_type, t, rng, [&](double, int j) { counts[static_cast<std::size_t>(j)] += 1.0; });
    });
    SimEstimate est;
    est.t = {t};
    est.replications = replications;
    est.seed = seed;
    est.initial_type = parent_type;
    summarize(per_rep, est);
    return est;
}

}  // namespace mre
