#pragma once

// Exact and simulated checks of a plan: OC curves, realized producer and
// consumer risks, seeded Monte Carlo acceptance rates and solver timing.

#include "dht/plan_solvers.hpp"
#include "dht/stat_kernels.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace dht {

struct OcPoint {
    double p = 0.0;
    double accept_prob = 0.0;
};

struct OcCurve {
    Count n = 0;
    Count c = 0;
    std::vector<OcPoint> points;
};

// P(failures <= c-1) in n Binomial(p) trials.
double accept_probability(Count n, Count c, double p);

// Throws DomainError for a plan that did not converge.
OcCurve oc_curve(const SamplingPlan& plan, const std::vector<double>& grid);
OcCurve oc_curve(Count n, Count c, const std::vector<double>& grid);

// lo, lo+step, ... up to hi inclusive (within a small tolerance).
std::vector<double> probability_grid(double lo, double hi, double step);

struct RateEstimate {
    double rate = 0.0;
    double half_width = 0.0;  // 99% Wilson half-width
};

struct ErrorEstimate {
    double alpha_hat = 0.0;  // P(reject | p0)
    double beta_hat = 0.0;   // P(accept | p1)
    std::optional<RateEstimate> mc_alpha;
    std::optional<RateEstimate> mc_beta;
    std::uint64_t seed = 0;
};

ErrorEstimate realized_errors(const SamplingPlan& plan, double p0, double p1);
// Adds Monte Carlo estimates of both risks; the p1 run uses seed + 1.
ErrorEstimate realized_errors(const SamplingPlan& plan, double p0, double p1, Count reps, std::uint64_t seed);

// Simulates reps lots of n Bernoulli(p_true) trials. Each lot draws from its own
// generator seeded from (seed, lot index), so the result does not depend on order.
// Throws DomainError for reps < 100.
RateEstimate monte_carlo_accept(const SamplingPlan& plan, double p_true, Count reps, std::uint64_t seed);
RateEstimate monte_carlo_accept(Count n, Count c, double p_true, Count reps, std::uint64_t seed);

// 99% Wilson interval half-width for `successes` out of `trials`.
double wilson_half_width(Count successes, Count trials);

// Deterministic 64-bit generator state for lot `index` under `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept;

struct BenchmarkRecord {
    Method method = Method::norm_n;
    int repeats = 0;
    double median_seconds = 0.0;
    double mad_seconds = 0.0;  // median absolute deviation
    Count iterations = 0;
    Count n = 0;
};

// Solver failures propagate. Throws DomainError for repeats < 1.
BenchmarkRecord benchmark_solver(Method method, const TestSpec& spec, int repeats);

// CSV emission with a versioned comment line first.
void write_oc_csv(std::ostream& out, const OcCurve& curve);
void write_errors_csv(std::ostream& out, const ErrorEstimate& e, const SamplingPlan& plan);

} // namespace dht
