#include "dht/verification.hpp"

#include "dht/errors.hpp"
#include "dht/format.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>

namespace dht {

namespace {

constexpr const char* kCsvVersion = "# dht-csv v1";

void check_plan(const SamplingPlan& plan)
{
    if (!plan.converged) throw DomainError("plan did not converge");
}

void check_nc(Count n, Count c)
{
    if (n < 1) throw DomainError("plan needs n >= 1");
    if (c < 0 || c > n) throw DomainError("plan needs 0 <= c <= n");
}

double z99() { return z_value(0.005); }

double uniform_open0(std::mt19937_64& g)
{
    // (0, 1]: never 0, so log() below is finite.
    return static_cast<double>((g() >> 11) + 1) * 0x1.0p-53;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

} // namespace

double accept_probability(Count n, Count c, double p)
{
    check_nc(n, c);
    if (c == 0) return 0.0;
    return binom_cdf(c - 1, n, p);
}

std::vector<double> probability_grid(double lo, double hi, double step)
{
    if (!(std::isfinite(lo) && std::isfinite(hi) && std::isfinite(step))) throw DomainError("grid bounds must be finite");
    if (!(step > 0.0)) throw DomainError("grid step must be > 0");
    if (lo < 0.0 || hi > 1.0 || lo > hi) throw DomainError("grid must satisfy 0 <= lo <= hi <= 1");
    std::vector<double> g;
    const auto count = static_cast<Count>(std::floor((hi - lo) / step + 1e-9));
    for (Count i = 0; i <= count; ++i) g.push_back(std::min(hi, lo + step * static_cast<double>(i)));
    return g;
}

OcCurve oc_curve(Count n, Count c, const std::vector<double>& grid)
{
    check_nc(n, c);
    OcCurve curve{n, c, {}};
    for (double p : grid) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("OC grid values must lie in [0, 1]");
        curve.points.push_back({p, accept_probability(n, c, p)});
    }
    return curve;
}

OcCurve oc_curve(const SamplingPlan& plan, const std::vector<double>& grid)
{
    check_plan(plan);
    return oc_curve(plan.n, plan.c, grid);
}

ErrorEstimate realized_errors(const SamplingPlan& plan, double p0, double p1)
{
    check_plan(plan);
    ErrorEstimate e;
    e.alpha_hat = 1.0 - accept_probability(plan.n, plan.c, p0);
    e.beta_hat = accept_probability(plan.n, plan.c, p1);
    return e;
}

ErrorEstimate realized_errors(const SamplingPlan& plan, double p0, double p1, Count reps, std::uint64_t seed)
{
    ErrorEstimate e = realized_errors(plan, p0, p1);
    const RateEstimate a0 = monte_carlo_accept(plan, p0, reps, seed);
    e.mc_alpha = RateEstimate{1.0 - a0.rate, a0.half_width};
    e.mc_beta = monte_carlo_accept(plan, p1, reps, seed + 1);
    e.seed = seed;
    return e;
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    // SplitMix64 finalizer over a combination of seed and index.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double wilson_half_width(Count successes, Count trials)
{
    if (trials < 1 || successes < 0 || successes > trials) throw DomainError("wilson_half_width: bad counts");
    const double z = z99();
    const double nt = static_cast<double>(trials);
    const double r = static_cast<double>(successes) / nt;
    const double z2 = z * z;
    return z / (1.0 + z2 / nt) * std::sqrt(r * (1.0 - r) / nt + z2 / (4.0 * nt * nt));
}

RateEstimate monte_carlo_accept(Count n, Count c, double p_true, Count reps, std::uint64_t seed)
{
    check_nc(n, c);
    if (reps < 100) throw DomainError("monte_carlo_accept needs reps >= 100");
    if (!(p_true >= 0.0 && p_true <= 1.0)) throw DomainError("p_true must lie in [0, 1]");

    const double log_q = std::log1p(-p_true);
    Count accepted = 0;
    for (Count rep = 0; rep < reps; ++rep) {
        if (c == 0) continue;
        if (p_true == 0.0) {
            ++accepted;
            continue;
        }
        std::mt19937_64 gen(substream_seed(seed, static_cast<std::uint64_t>(rep)));
        // Jump from failure to failure with geometric gaps; stop once the lot is decided.
        Count position = 0;
        Count failures = 0;
        while (true) {
            const double gap = p_true == 1.0 ? 1.0 : std::floor(std::log(uniform_open0(gen)) / log_q) + 1.0;
            if (gap > static_cast<double>(n - position)) break;
            position += static_cast<Count>(gap);
            if (++failures >= c) break;
        }
        if (failures < c) ++accepted;
    }
    return {static_cast<double>(accepted) / static_cast<double>(reps), wilson_half_width(accepted, reps)};
}

RateEstimate monte_carlo_accept(const SamplingPlan& plan, double p_true, Count reps, std::uint64_t seed)
{
    check_plan(plan);
    return monte_carlo_accept(plan.n, plan.c, p_true, reps, seed);
}

BenchmarkRecord benchmark_solver(Method method, const TestSpec& spec, int repeats)
{
    if (repeats < 1) throw DomainError("benchmark needs repeats >= 1");
    BenchmarkRecord rec;
    rec.method = method;
    rec.repeats = repeats;
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(repeats));
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const SamplingPlan plan = solve(method, spec);
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double>(t1 - t0).count());
        rec.iterations = plan.iterations;
        rec.n = plan.n;
    }
    rec.median_seconds = median(times);
    std::vector<double> dev;
    dev.reserve(times.size());
    for (double t : times) dev.push_back(std::abs(t - rec.median_seconds));
    rec.mad_seconds = median(dev);
    return rec;
}

void write_oc_csv(std::ostream& out, const OcCurve& curve)
{
    out << kCsvVersion << " oc n=" << curve.n << " c=" << curve.c << "\n";
    out << "p,accept_prob\n";
    for (const auto& pt : curve.points) out << format_number(pt.p) << ',' << format_number(pt.accept_prob) << '\n';
}

void write_errors_csv(std::ostream& out, const ErrorEstimate& e, const SamplingPlan& plan)
{
    out << kCsvVersion << " errors\n";
    out << "n,c,alpha_hat,beta_hat,mc_alpha,mc_alpha_hw,mc_beta,mc_beta_hw,seed\n";
    auto opt = [](const std::optional<RateEstimate>& r, bool hw) {
        return r ? format_number(hw ? r->half_width : r->rate) : std::string();
    };
    out << plan.n << ',' << plan.c << ',' << format_number(e.alpha_hat) << ',' << format_number(e.beta_hat) << ','
        << opt(e.mc_alpha, false) << ',' << opt(e.mc_alpha, true) << ',' << opt(e.mc_beta, false) << ','
        << opt(e.mc_beta, true) << ',' << e.seed << '\n';
}

} // namespace dht
