#include "dht/stat_kernels.hpp"

#include "dht/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace dht {

namespace {

constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406; // log(sqrt(2*pi))
constexpr double kSumCutoff = 1e-17;

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

// Error of Stirling's approximation: log(n!) - [(n+1/2)log(n) - n + log(sqrt(2 pi))].
double stirling_error(double n)
{
    constexpr double s0 = 1.0 / 12.0;
    constexpr double s1 = 1.0 / 360.0;
    constexpr double s2 = 1.0 / 1260.0;
    constexpr double s3 = 1.0 / 1680.0;
    constexpr double s4 = 1.0 / 1188.0;
    if (n <= 15.0) {
        if (n == 0.0) return 0.0;
        return detail::log_gamma(n + 1.0) - (n + 0.5) * std::log(n) + n - kLogSqrt2Pi;
    }
    const double nn = n * n;
    if (n > 500.0) return (s0 - s1 / nn) / n;
    if (n > 80.0) return (s0 - (s1 - s2 / nn) / nn) / n;
    if (n > 35.0) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

// Deviance term x*log(x/np) + np - x, evaluated without cancellation near x = np.
double deviance(double x, double np)
{
    if (std::abs(x - np) < 0.1 * (x + np)) {
        double v = (x - np) / (x + np);
        double s = (x - np) * v;
        double ej = 2.0 * x * v;
        const double v2 = v * v;
        for (int j = 1; j < 1000; ++j) {
            ej *= v2;
            const double s1 = s + ej / (2 * j + 1);
            if (s1 == s) return s1;
            s = s1;
        }
        return s;
    }
    return x * std::log(x / np) + np - x;
}

// log P(X = k), Binomial(n, p) with 0 < p < 1 (saddle-point form).
double log_binom_pmf(Count k, Count n, double p)
{
    const double q = 1.0 - p;
    if (k == 0) return static_cast<double>(n) * std::log1p(-p);
    if (k == n) return static_cast<double>(n) * std::log(p);
    const double x = static_cast<double>(k);
    const double nd = static_cast<double>(n);
    const double lc = stirling_error(nd) - stirling_error(x) - stirling_error(nd - x) - deviance(x, nd * p)
                      - deviance(nd - x, nd * q);
    const double lf = std::log(2.0 * std::numbers::pi) + std::log(x) + std::log1p(-x / nd);
    return lc - 0.5 * lf;
}

// log P(X = k), Poisson(lambda) with lambda > 0.
double log_poisson_pmf(Count k, double lambda)
{
    if (k == 0) return -lambda;
    const double x = static_cast<double>(k);
    return -stirling_error(x) - deviance(x, lambda) - 0.5 * std::log(2.0 * std::numbers::pi * x);
}

double clamp_probability(double v) { return std::clamp(v, 0.0, 1.0); }

} // namespace

namespace detail {

double log_gamma(double x)
{
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

void CompensatedSum::add(double x) noexcept
{
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
        comp_ += (sum_ - t) + x;
    } else {
        comp_ += (x - t) + sum_;
    }
    sum_ = t;
}

} // namespace detail

TailMass::TailMass(double value) : value_(value)
{
    if (!(std::isfinite(value) && value > 0.0 && value < 0.5)) {
        throw DomainError("tail mass must lie in (0, 0.5), got " + std::to_string(value));
    }
}

CountDistribution CountDistribution::binomial(Count n, double p)
{
    if (n < 1) throw DomainError("binomial trial count must be >= 1");
    if (!is_probability(p)) throw DomainError("binomial probability must lie in [0, 1]");
    return CountDistribution(Kind::binomial, n, p);
}

CountDistribution CountDistribution::poisson(double lambda)
{
    if (!(std::isfinite(lambda) && lambda >= 0.0)) throw DomainError("Poisson mean must be finite and >= 0");
    return CountDistribution(Kind::poisson, 0, lambda);
}

double CountDistribution::mean() const noexcept
{
    return kind_ == Kind::binomial ? static_cast<double>(n_) * p_ : p_;
}

double CountDistribution::variance() const noexcept
{
    return kind_ == Kind::binomial ? static_cast<double>(n_) * p_ * (1.0 - p_) : p_;
}

double CountDistribution::cdf(Count c) const
{
    if (kind_ == Kind::binomial) {
        if (c < 0) return 0.0;
        if (c >= n_) return 1.0;
        return binom_cdf(c, n_, p_);
    }
    return poisson_cdf(c, p_);
}

double CountDistribution::pmf(Count k) const
{
    return kind_ == Kind::binomial ? binom_pmf(k, n_, p_) : poisson_pmf(k, p_);
}

double binom_pmf(Count k, Count n, double p)
{
    if (n < 0 || !is_probability(p)) throw DomainError("binom_pmf: invalid n or p");
    if (k < 0 || k > n) return 0.0;
    if (p == 0.0) return k == 0 ? 1.0 : 0.0;
    if (p == 1.0) return k == n ? 1.0 : 0.0;
    return std::exp(log_binom_pmf(k, n, p));
}

double binom_cdf(Count c, Count n, double p)
{
    if (n < 0) throw DomainError("binom_cdf: n must be >= 0");
    if (c < 0 || c > n) {
        throw DomainError("binom_cdf: count " + std::to_string(c) + " outside [0, " + std::to_string(n) + "]");
    }
    if (!is_probability(p)) throw DomainError("binom_cdf: probability outside [0, 1]");
    if (c == n || p == 0.0) return 1.0;
    if (p == 1.0) return 0.0;

    const double q = 1.0 - p;
    const double mean = static_cast<double>(n) * p;
    detail::CompensatedSum sum;

    if (static_cast<double>(c) <= mean) {
        // Lower tail: terms shrink moving down from c.
        double t = 1.0;
        const double ratio = q / p;
        for (Count k = c; k >= 0; --k) {
            sum.add(t);
            if (k == 0 || t < kSumCutoff * sum.value()) break;
            t *= static_cast<double>(k) / static_cast<double>(n - k + 1) * ratio;
        }
        return clamp_probability(std::exp(log_binom_pmf(c, n, p)) * sum.value());
    }

    // Upper tail from c+1: terms shrink moving up.
    double t = 1.0;
    const double ratio = p / q;
    for (Count k = c + 1; k <= n; ++k) {
        sum.add(t);
        if (k == n || t < kSumCutoff * sum.value()) break;
        t *= static_cast<double>(n - k) / static_cast<double>(k + 1) * ratio;
    }
    return clamp_probability(1.0 - std::exp(log_binom_pmf(c + 1, n, p)) * sum.value());
}

double poisson_pmf(Count k, double lambda)
{
    if (!(std::isfinite(lambda) && lambda >= 0.0)) throw DomainError("poisson_pmf: lambda must be >= 0");
    if (k < 0) return 0.0;
    if (lambda == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(log_poisson_pmf(k, lambda));
}

double poisson_cdf(Count c, double lambda)
{
    if (!(std::isfinite(lambda) && lambda >= 0.0)) throw DomainError("poisson_cdf: lambda must be finite and >= 0");
    if (c < 0) return 0.0;
    if (lambda == 0.0) return 1.0;

    detail::CompensatedSum sum;
    if (static_cast<double>(c) <= lambda) {
        double t = 1.0;
        for (Count k = c; k >= 0; --k) {
            sum.add(t);
            if (k == 0 || t < kSumCutoff * sum.value()) break;
            t *= static_cast<double>(k) / lambda;
        }
        return clamp_probability(std::exp(log_poisson_pmf(c, lambda)) * sum.value());
    }

    double t = 1.0;
    for (Count k = c + 1;; ++k) {
        sum.add(t);
        if (t < kSumCutoff * sum.value()) break;
        t *= lambda / static_cast<double>(k + 1);
    }
    return clamp_probability(1.0 - std::exp(log_poisson_pmf(c + 1, lambda)) * sum.value());
}

Count poisson_scan_cap(double lambda)
{
    return static_cast<Count>(std::ceil(lambda + 20.0 * std::sqrt(lambda) + 50.0));
}

namespace {

Count support_max(const CountDistribution& dist)
{
    return dist.kind() == CountDistribution::Kind::binomial ? dist.trials() : poisson_scan_cap(dist.mean());
}

Count normal_guess(const CountDistribution& dist, double z)
{
    const double g = std::floor(dist.mean() + z * std::sqrt(dist.variance()));
    return std::clamp<Count>(static_cast<Count>(std::max(0.0, g)), 0, support_max(dist));
}

void check_tail(double tail)
{
    if (!(std::isfinite(tail) && tail > 0.0 && tail < 0.5)) throw DomainError("tail mass must lie in (0, 0.5)");
}

} // namespace

Count upper_quantile(const CountDistribution& dist, double tail)
{
    check_tail(tail);
    const double target = 1.0 - tail;
    const Count cap = support_max(dist);
    Count g = normal_guess(dist, z_value(tail));
    if (dist.cdf(g) >= target) {
        while (g > 0 && dist.cdf(g - 1) >= target) --g;
        return g;
    }
    while (dist.cdf(g) < target) {
        if (++g > cap) {
            // Binomial always terminates at n; only the Poisson cap can trip here.
            throw std::logic_error("Poisson quantile scan exceeded its cap");
        }
    }
    return g;
}

Count upper_quantile(const CountDistribution& dist, TailMass tail) { return upper_quantile(dist, tail.value()); }

std::optional<Count> lower_quantile(const CountDistribution& dist, double tail)
{
    check_tail(tail);
    if (dist.cdf(0) > tail) return std::nullopt;
    const Count cap = support_max(dist);
    Count g = normal_guess(dist, -z_value(tail));
    if (dist.cdf(g) <= tail) {
        while (g < cap && dist.cdf(g + 1) <= tail) ++g;
        return g;
    }
    while (g > 0 && dist.cdf(g) > tail) --g;
    return g;
}

std::optional<Count> lower_quantile(const CountDistribution& dist, TailMass tail)
{
    return lower_quantile(dist, tail.value());
}

double normal_cdf(double x)
{
    if (!std::isfinite(x)) throw DomainError("normal_cdf: non-finite input");
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

namespace {

// Acklam's rational approximation to the inverse normal CDF (relative error ~1e-9).
double inverse_normal_rational(double p)
{
    static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                             6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                             3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
               / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
               / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
           / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

} // namespace

double z_value(double tail, ZMode mode)
{
    if (!(std::isfinite(tail) && tail > 0.0 && tail <= 0.5)) throw DomainError("z_value: tail must lie in (0, 0.5]");
    if (tail == 0.5) return 0.0;
    if (mode == ZMode::paper && tail == 0.05) return 1.64;

    // Solve Q(z) = tail for the upper tail Q(z) = 1 - Phi(z); two Newton passes polish the rational start.
    double z = -inverse_normal_rational(tail);
    for (int i = 0; i < 2; ++i) {
        const double q = 0.5 * std::erfc(z / std::numbers::sqrt2);
        const double density = std::exp(-0.5 * z * z - kLogSqrt2Pi);
        z += (q - tail) / density;
    }
    return z;
}

double z_value(TailMass tail, ZMode mode) { return z_value(tail.value(), mode); }

} // namespace dht
