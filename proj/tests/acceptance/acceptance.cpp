// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include "dht/errors.hpp"
#include "dht/fuzzy_selector.hpp"
#include "dht/inspection_engine.hpp"
#include "dht/plan_solvers.hpp"
#include "dht/run_limits.hpp"
#include "dht/verification.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

using namespace dht;

namespace {

struct Check {
    bool ok = true;
    std::ostringstream notes;

    void expect(bool cond, const std::string& what)
    {
        if (!cond) {
            ok = false;
            notes << " [failed: " << what << "]";
        }
    }
};

// Oracle: P(X <= k), X ~ Bin(n, p), by long double summation of pmf terms.
double oracle_binom_cdf(Count k, Count n, double p)
{
    if (k < 0) return 0.0;
    if (k >= n || p <= 0.0) return 1.0;
    if (p >= 1.0) return 0.0;
    const long double lp = std::log(static_cast<long double>(p));
    const long double lq = std::log1p(-static_cast<long double>(p));
    const long double ln = std::lgamma(static_cast<long double>(n) + 1);
    long double sum = 0.0L;
    for (Count i = 0; i <= k; ++i) {
        sum += std::exp(ln - std::lgamma(static_cast<long double>(i) + 1) - std::lgamma(static_cast<long double>(n - i) + 1)
                        + i * lp + (n - i) * lq);
    }
    return static_cast<double>(std::min(sum, 1.0L));
}

double oracle_accept(Count n, Count c, double p) { return c < 1 ? 0.0 : oracle_binom_cdf(c - 1, n, p); }

// Oracle: terminal distribution of the ladder decision rule by forward recursion
// over (level, failures, run). Keys: 2*level accepted, 2*stages rejected, -1 undecided.
std::map<int, double> exact_terminals(const LevelLadder& lad, double p)
{
    using Key = std::tuple<std::size_t, Count, Count>;
    Count horizon = 0;
    for (const auto& pl : lad.plans) horizon = std::max(horizon, pl.n);
    std::map<Key, double> live{{Key{0, 0, 0}, 1.0}};
    std::map<int, double> done;
    for (Count t = 1; t <= horizon && !live.empty(); ++t) {
        std::map<Key, double> next;
        for (const auto& [key, w] : live) {
            for (int f = 0; f < 2; ++f) {
                const double pw = w * (f ? p : 1.0 - p);
                if (pw == 0.0) continue;
                auto [level, failures, run] = key;
                failures += f;
                run = f ? run + 1 : 0;
                int verdict = -1;
                for (;;) {
                    if (run <= lad.run_limits[level] && failures < lad.plans[level].c) {
                        if (t >= lad.plans[level].n) verdict = 2 * static_cast<int>(level);
                        break;
                    }
                    if (level + 1 == lad.stages()) {
                        verdict = 2 * static_cast<int>(lad.stages());
                        break;
                    }
                    ++level;
                }
                if (verdict >= 0) {
                    done[verdict] += pw;
                } else {
                    next[Key{level, failures, run}] += pw;
                }
            }
        }
        live.swap(next);
    }
    for (const auto& kv : live) done[-1] += kv.second;
    return done;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

SamplingPlan solve_at(Method m, double p0, double p1, double eps)
{
    return solve(m, TestSpec::make(p0, p1, eps));
}

// Criterion 1.
Check norm_n_single()
{
    Check ck;
    const TestSpec spec = TestSpec::make(0.015, 0.02, default_epsilon(Method::norm_n));
    const SamplingPlan p = solve_norm_newton(spec);
    ck.expect(std::abs(p.n - 7360) <= 1, "n = " + std::to_string(p.n));
    ck.expect(std::abs(p.c - 128) <= 1, "c = " + std::to_string(p.c));
    ck.expect(std::abs(p.t_h - 0.0173) <= 0.0005, "t_h = " + fmt(p.t_h));
    ck.expect(std::abs(p.n_real - 7359.8) <= 0.5, "n_real = " + fmt(p.n_real));
    ck.notes << " n=" << p.n << " c=" << p.c << " t_h=" << fmt(p.t_h) << " n_real=" << fmt(p.n_real);
    return ck;
}

// Criterion 2.
Check norm_n_pairs()
{
    Check ck;
    struct Ref {
        double p0, p1;
        Count n, c;
        double t_h;
    };
    for (const Ref& r : {Ref{0.02, 0.05, 383, 13, 0.0317}, Ref{0.05, 0.10, 289, 21, 0.0710}}) {
        const SamplingPlan p = solve_at(Method::norm_n, r.p0, r.p1, default_epsilon(Method::norm_n));
        const std::string tag = "(" + fmt(r.p0) + "," + fmt(r.p1) + ")";
        ck.expect(std::abs(p.n - r.n) <= 1, tag + " n = " + std::to_string(p.n));
        ck.expect(p.c == r.c, tag + " c = " + std::to_string(p.c));
        ck.expect(std::abs(p.t_h - r.t_h) <= 0.0005, tag + " t_h = " + fmt(p.t_h));
        ck.notes << ' ' << tag << "->(" << p.n << "," << p.c << "," << fmt(p.t_h) << ")";
    }
    return ck;
}

// Criterion 3.
Check norm_i_pairs()
{
    Check ck;
    struct Ref {
        double p0, p1, eps;
        Count n, c;
    };
    for (const Ref& r : {Ref{0.02, 0.05, 1e-4, 381, 12}, Ref{0.05, 0.10, 1e-4, 288, 20}, Ref{0.01, 0.02, 1e-6, 1543, 22}}) {
        const SamplingPlan p = solve_at(Method::norm_i, r.p0, r.p1, r.eps);
        const std::string tag = "(" + fmt(r.p0) + "," + fmt(r.p1) + "," + fmt(r.eps) + ")";
        ck.expect(std::abs(p.n - r.n) <= 2, tag + " n = " + std::to_string(p.n));
        ck.expect(std::abs(p.c - r.c) <= 1, tag + " c = " + std::to_string(p.c));
        ck.notes << ' ' << tag << "->(" << p.n << "," << p.c << ")";
    }
    return ck;
}

// Criterion 4.
Check norm_i_no_convergence()
{
    Check ck;
    const double p0 = 0.2, p1 = 0.4, eps = 1e-6;
    bool threw = false;
    try {
        solve_at(Method::norm_i, p0, p1, eps);
    } catch (const NoConvergenceError& e) {
        threw = true;
        ck.notes << " best_gap=" << fmt(e.best_gap()) << " at n=" << e.best_n();
    }
    ck.expect(threw, "NoConvergence raised");

    // U(n) - Lo(n) = (p1 - p0) - (a0 + a1)/sqrt(n) is increasing in n with its root at
    // n* = ((a0 + a1)/(p1 - p0))^2, so only floor(n*) and ceil(n*) can come closest.
    const double z = 1.64;
    const double a = z * (std::sqrt(p0 * (1 - p0)) + std::sqrt(p1 * (1 - p1)));
    const double root = std::pow(a / (p1 - p0), 2);
    auto gap = [&](double n) { return std::abs((p1 - p0) - a / std::sqrt(n)); };
    const double closest = std::min(gap(std::floor(root)), gap(std::ceil(root)));
    ck.expect(closest >= eps, "an integer n meets the tolerance");
    ck.notes << " analytic root n*=" << fmt(root) << " min integer gap=" << fmt(closest);
    return ck;
}

// Criterion 5.
Check bin_poiss()
{
    Check ck;
    struct Ref {
        Method m;
        double p0, p1;
        Count n, c;
        double t_h;
    };
    const std::vector<Ref> refs{
        {Method::bin, 0.0, 0.02, 375, 4, 0.0095},     {Method::bin, 0.02, 0.05, 550, 19, 0.0348},
        {Method::bin, 0.05, 0.10, 405, 30, 0.0744},   {Method::poiss, 0.0, 0.02, 375, 4, 0.0095},
        {Method::poiss, 0.02, 0.05, 570, 20, 0.0343}, {Method::poiss, 0.05, 0.10, 465, 35, 0.0742},
    };
    for (const Ref& r : refs) {
        const SamplingPlan p = solve_at(r.m, r.p0, r.p1, default_epsilon(r.m));
        const double alpha = 1.0 - oracle_accept(p.n, p.c, r.p0);
        const double beta = oracle_accept(p.n, p.c, r.p1);
        const std::string tag = std::string(method_name(r.m)) + "(" + fmt(r.p0) + "," + fmt(r.p1) + ")";
        ck.expect(alpha <= 0.08, tag + " alpha_hat = " + fmt(alpha));
        ck.expect(beta <= 0.08, tag + " beta_hat = " + fmt(beta));
        ck.expect(std::abs(p.t_h - r.t_h) <= 0.004, tag + " t_h = " + fmt(p.t_h));
        ck.expect(std::abs(p.c - r.c) <= 2, tag + " c = " + std::to_string(p.c));
        ck.expect(std::abs(static_cast<double>(p.n - r.n)) <= 0.25 * static_cast<double>(r.n),
                  tag + " n = " + std::to_string(p.n));
        ck.notes << ' ' << tag << "->(" << p.n << "," << p.c << "," << fmt(p.t_h) << ")";
    }
    return ck;
}

// Criterion 6.
Check sfl()
{
    Check ck;
    const std::vector<std::pair<double, Count>> singles{{0.01, 3}, {0.02, 4}, {0.05, 5}, {0.10, 6}};
    for (auto [p, r] : singles) ck.expect(sfl_r({p, 1e6}).r == r, "r at p=" + fmt(p));
    const double raw = sfl_r({0.02, 1e6}).r_raw;
    ck.expect(raw > 3.4 && raw < 3.6, "raw fixed point " + fmt(raw));
    const std::map<int, std::vector<Count>> columns{
        {1, {3, 4, 4, 5, 5, 5, 6, 6}}, {3, {4, 5, 6, 7, 8, 8, 9, 10}}, {5, {5, 6, 8, 9, 10, 12, 13, 15}}};
    for (const auto& [step, col] : columns) {
        for (std::size_t i = 0; i < col.size(); ++i) {
            const double p = 0.01 * step * static_cast<double>(i + 1);
            ck.expect(sfl_r({p, 1e6}).r == col[i], "step " + std::to_string(step) + "% row " + std::to_string(i + 1));
        }
    }
    ck.notes << " r_raw(0.02)=" << fmt(raw);
    return ck;
}

// Criterion 7.
Check fuzzy()
{
    Check ck;
    const FuzzyRuleBase base = FuzzyRuleBase::defaults();
    const std::vector<std::pair<double, std::string>> bands{
        {0.12, "Bin"}, {0.2, "Poiss"}, {0.5, "Norm_I"}, {0.85, "Norm_N"}};
    for (const auto& [s, label] : bands) {
        ck.expect(classify(s, base) == std::optional<std::string>(label), "band at " + fmt(s));
    }

    // Rule-8 regime: prec_abs <= 1e-5 and step outside I_zero, where rule 8 is the
    // operative rule (no rule with a non-Norm_N consequent fires).
    const auto& rules = base.rules();
    const std::size_t norm_n_term = base.output().term_index("Norm_N");
    int regime_points = 0;
    int competing_points = 0;
    double min_score = 1.0;
    for (double step = 0.02; step <= 0.2 + 1e-12; step += 0.01) {
        for (double th = 0.0; th <= 0.5 + 1e-12; th += 0.025) {
            for (double tex = 0.0; tex <= 12.0 + 1e-12; tex += 0.5) {
                for (double prec : {0.0, 5e-6, 1e-5}) {
                    const Inference inf = infer({step, th, tex, prec}, base);
                    bool competing = false;
                    for (std::size_t i = 0; i < rules.size(); ++i) {
                        if (rules[i].consequent != norm_n_term && inf.firings[i].strength > 0.0) competing = true;
                    }
                    if (competing) {
                        ++competing_points;
                        continue;
                    }
                    ++regime_points;
                    min_score = std::min(min_score, inf.score);
                }
            }
        }
    }
    ck.expect(regime_points > 0, "regime grid not empty");
    ck.expect(min_score > 0.71, "min score " + fmt(min_score));
    ck.notes << " rule-8 regime points=" << regime_points << " min score=" << fmt(min_score)
             << " (excluded " << competing_points << " points where a non-Norm_N rule also fires)";

    const Inference scenario = infer({0.03, 0.05, 3.0, 0.0}, base);
    ck.expect(scenario.score > 0.8, "scenario score " + fmt(scenario.score));
    ck.notes << " scenario score=" << fmt(scenario.score);
    return ck;
}

// Criterion 8.
Check inspection_properties()
{
    Check ck;
    LadderConfig cfg;
    cfg.levels = {0.02, 0.05, 0.10};
    cfg.methods = {Method::norm_n};
    const LevelLadder lad = build_ladder(cfg);
    Count horizon = 0;
    for (const auto& pl : lad.plans) horizon = std::max(horizon, pl.n);
    const int streams = 1000;
    std::uint64_t stream_id = 0;
    for (double p : {0.005, 0.04, 0.08, 0.2}) {
        std::map<int, int> hits;
        int replay_failures = 0;
        for (int s = 0; s < streams; ++s, ++stream_id) {
            std::mt19937_64 gen(substream_seed(20240601, stream_id));
            std::bernoulli_distribution d(p);
            std::vector<Outcome> outcomes(static_cast<std::size_t>(horizon));
            for (auto& o : outcomes) o.failure = d(gen);
            const InspectionState st = run_stream(lad, outcomes);
            try {
                if (!(replay(lad, st.events) == st)) ++replay_failures;
            } catch (const StateMachineError&) {
                ++replay_failures;
            }
            int key = -1;
            if (st.status == Status::accepted) key = 2 * static_cast<int>(st.level);
            if (st.status == Status::rejected_beyond_last) key = 2 * static_cast<int>(lad.stages());
            ++hits[key];
        }
        ck.expect(replay_failures == 0, "replay at p=" + fmt(p));
        const auto exact = exact_terminals(lad, p);
        std::map<int, double> cells = exact;
        for (const auto& kv : hits) cells.emplace(kv.first, 0.0);
        ck.notes << " p=" << fmt(p) << ":";
        for (const auto& [key, prob] : cells) {
            const double emp = static_cast<double>(hits[key]) / streams;
            const double sigma = std::sqrt(prob * (1.0 - prob) / streams);
            const double z = sigma > 0 ? std::abs(emp - prob) / sigma : (emp == prob ? 0.0 : INFINITY);
            ck.expect(std::abs(emp - prob) <= 3.0 * sigma + 1e-12,
                      "cell " + std::to_string(key) + " at p=" + fmt(p) + " z=" + fmt(z));
            ck.notes << " [" << key << "] " << fmt(emp) << "/" << fmt(prob);
        }
    }
    return ck;
}

// Criterion 9.
Check verification_coherence()
{
    Check ck;
    struct Item {
        Method m;
        double p0, p1, eps;
    };
    const std::vector<Item> items{
        {Method::norm_n, 0.015, 0.02, 1e-8}, {Method::norm_n, 0.02, 0.05, 1e-8}, {Method::norm_n, 0.05, 0.10, 1e-8},
        {Method::norm_i, 0.02, 0.05, 1e-4},  {Method::norm_i, 0.05, 0.10, 1e-4}, {Method::norm_i, 0.01, 0.02, 1e-6},
        {Method::bin, 0.0, 0.02, 0.0019},    {Method::bin, 0.02, 0.05, 0.0019},  {Method::bin, 0.05, 0.10, 0.0019},
        {Method::poiss, 0.0, 0.02, 0.001},   {Method::poiss, 0.02, 0.05, 0.001}, {Method::poiss, 0.05, 0.10, 0.001},
    };
    double worst = 0.0;
    int comparisons = 0;
    for (const Item& it : items) {
        const SamplingPlan plan = solve_at(it.m, it.p0, it.p1, it.eps);
        const std::string tag = std::string(method_name(it.m)) + "(" + fmt(it.p0) + "," + fmt(it.p1) + ")";
        for (double p : {it.p0, it.p1}) {
            const double exact = accept_probability(plan.n, plan.c, p);
            ck.expect(std::abs(exact - oracle_accept(plan.n, plan.c, p)) <= 1e-9, tag + " exact OC vs oracle");
            const RateEstimate mc = monte_carlo_accept(plan, p, 100000, 20240601);
            const double ratio = std::abs(mc.rate - exact) / mc.half_width;
            worst = std::max(worst, ratio);
            ++comparisons;
            ck.expect(ratio <= 3.0, tag + " MC at p=" + fmt(p) + " off by " + fmt(ratio) + " half-widths");
        }
        const OcCurve oc = oc_curve(plan, {0.0, 1.0});
        if (plan.c >= 1) ck.expect(oc.points[0].accept_prob == 1.0, tag + " accept_prob(0)");
        ck.expect(oc.points[1].accept_prob == 0.0, tag + " accept_prob(1)");
    }
    ck.notes << ' ' << comparisons << " MC comparisons, worst " << fmt(worst) << " half-widths";
    return ck;
}

// Criterion 10.
Check iteration_counts()
{
    Check ck;
    for (auto [p0, p1, eps] : {std::tuple{0.02, 0.05, 1e-4}, std::tuple{0.05, 0.10, 1e-4}, std::tuple{0.01, 0.02, 1e-6}}) {
        const SamplingPlan p = solve_at(Method::norm_i, p0, p1, eps);
        ck.expect(p.iterations == p.n, "Norm_I iterations at (" + fmt(p0) + "," + fmt(p1) + ")");
    }
    Count worst = 0;
    for (auto [p0, p1] : {std::pair{0.015, 0.02}, {0.02, 0.05}, {0.05, 0.10}, {0.01, 0.02}, {0.07, 0.08}}) {
        const SamplingPlan p = solve_at(Method::norm_n, p0, p1, 1e-8);
        ck.expect(p.converged && p.iterations < 10000, "Norm_N steps at (" + fmt(p0) + "," + fmt(p1) + ")");
        worst = std::max(worst, p.iterations);
    }
    ck.notes << " max Newton steps=" << worst << " (wall-clock timings not compared)";
    return ck;
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
        {"Norm_N single plan", norm_n_single},
        {"Norm_N plan pairs", norm_n_pairs},
        {"Norm_I plans", norm_i_pairs},
        {"Norm_I non-convergence", norm_i_no_convergence},
        {"Bin/Poiss reconstruction", bin_poiss},
        {"SFL run limits", sfl},
        {"fuzzy selector", fuzzy},
        {"inspection properties", inspection_properties},
        {"verification coherence", verification_coherence},
        {"iteration counts", iteration_counts},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check ck;
        try {
            ck = criteria[i].second();
        } catch (const std::exception& e) {
            ck.ok = false;
            ck.notes << " [exception: " << e.what() << "]";
        }
        failed += ck.ok ? 0 : 1;
        std::printf("criterion %zu: %s - %s:%s\n", i + 1, ck.ok ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    ck.notes.str().c_str());
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
    return failed == 0 ? 0 : 1;
}
