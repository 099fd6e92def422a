#pragma once

// Probability primitives shared by the plan solvers, the verification code
// and the inspection engine: binomial and Poisson CDFs, discrete quantiles,
// and the standard normal CDF with its inverse.
//
// Every function here is pure. Discrete CDFs are anchored at a log-space
// point mass and summed outward with ratio recurrences, so there are no
// factorials and no underflow for large n.

#include <cstdint>
#include <optional>

namespace dht {

using Count = std::int64_t;

// Upper-tail probability mass of one hypothesis (e.g. 0.05). Always in (0, 0.5).
class TailMass {
public:
    explicit TailMass(double value);
    double value() const noexcept { return value_; }
    friend bool operator==(const TailMass&, const TailMass&) = default;

private:
    double value_;
};

// Either Binomial(n, p) or Poisson(lambda).
class CountDistribution {
public:
    enum class Kind { binomial, poisson };

    static CountDistribution binomial(Count n, double p);
    static CountDistribution poisson(double lambda);

    Kind kind() const noexcept { return kind_; }
    Count trials() const noexcept { return n_; }
    double probability() const noexcept { return p_; }
    double mean() const noexcept;
    double variance() const noexcept;

    double cdf(Count c) const;
    double pmf(Count k) const;

private:
    CountDistribution(Kind kind, Count n, double p) : kind_(kind), n_(n), p_(p) {}

    Kind kind_;
    Count n_;   // binomial only
    double p_;  // success probability, or lambda for Poisson
};

// P(X <= c), X ~ Binomial(n, p). Requires 0 <= c <= n and 0 <= p <= 1.
double binom_cdf(Count c, Count n, double p);
// P(X = k), X ~ Binomial(n, p).
double binom_pmf(Count k, Count n, double p);

// P(X <= c), X ~ Poisson(lambda). c < 0 gives 0.
double poisson_cdf(Count c, double lambda);
double poisson_pmf(Count k, double lambda);

// Smallest L with CDF(L) >= 1 - tail.
Count upper_quantile(const CountDistribution& dist, TailMass tail);
Count upper_quantile(const CountDistribution& dist, double tail);

// Largest l with CDF(l) <= tail, or nullopt when CDF(0) > tail.
std::optional<Count> lower_quantile(const CountDistribution& dist, TailMass tail);
std::optional<Count> lower_quantile(const CountDistribution& dist, double tail);

// Standard normal CDF, accurate to machine precision via erfc.
double normal_cdf(double x);

enum class ZMode {
    exact,  // inverse normal
    paper,  // 1.64 at tail 0.05, exact elsewhere
};

// Inverse standard normal at 1 - tail. tail must be in (0, 0.5]; 0.5 gives 0.
double z_value(double tail, ZMode mode = ZMode::exact);
double z_value(TailMass tail, ZMode mode = ZMode::exact);

// Upper limit of the Poisson quantile scan; exceeding it is an internal error.
Count poisson_scan_cap(double lambda);

namespace detail {

// log Gamma without touching the global signgam.
double log_gamma(double x);

// Neumaier compensated accumulator.
class CompensatedSum {
public:
    void add(double x) noexcept;
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace detail

} // namespace dht
