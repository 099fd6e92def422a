#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tolerance.hpp"

#include "dht/errors.hpp"
#include "dht/inspection_engine.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <tuple>
#include <vector>

using namespace dht;

namespace {

LevelLadder step3_ladder()
{
    return build_ladder(step_ladder_config(0.0, 0.03, 2, Method::bin, Method::norm_i));
}

LevelLadder norm_n_ladder()
{
    LadderConfig cfg;
    cfg.levels = {0.02, 0.05, 0.10};
    cfg.methods = {Method::norm_n};
    return build_ladder(cfg);
}

std::vector<Outcome> bits(const std::vector<int>& v)
{
    std::vector<Outcome> out;
    for (int b : v) out.push_back(Outcome{b != 0, {}});
    return out;
}

std::vector<Outcome> random_stream(double p, std::size_t length, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::bernoulli_distribution d(p);
    std::vector<Outcome> out(length);
    for (auto& o : out) o.failure = d(gen);
    return out;
}

// Terminal key: -1 inconclusive, 2*level accepted at level, 2*stages rejected.
using Terminal = int;

// Oracle: exact forward recursion over (level, failures, run) written from the
// decision rule text, independent of observe(). Returns terminal probabilities.
std::map<Terminal, double> exact_terminal_distribution(const LevelLadder& lad, double p, Count horizon)
{
    using Key = std::tuple<std::size_t, Count, Count>;
    std::map<Key, double> live{{Key{0, 0, 0}, 1.0}};
    std::map<Terminal, double> done;
    const auto k = static_cast<Terminal>(lad.stages());
    for (Count t = 1; t <= horizon && !live.empty(); ++t) {
        std::map<Key, double> next;
        for (const auto& [key, w] : live) {
            for (int f = 0; f < 2; ++f) {
                const double pw = w * (f ? p : 1.0 - p);
                if (pw == 0.0) continue;
                auto [level, failures, run] = key;
                failures += f;
                run = f ? run + 1 : 0;
                Terminal verdict = -1;
                for (;;) {
                    const bool breach = run > lad.run_limits[level] || failures >= lad.plans[level].c;
                    if (!breach) {
                        if (t >= lad.plans[level].n) verdict = 2 * static_cast<Terminal>(level);
                        break;
                    }
                    if (level + 1 == lad.stages()) {
                        verdict = 2 * k;
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
    double rest = 0.0;
    for (const auto& kv : live) rest += kv.second;
    if (rest > 0.0) done[-1] += rest;
    return done;
}

Terminal terminal_of(const InspectionState& s, std::size_t stages)
{
    switch (s.status) {
    case Status::accepted: return 2 * static_cast<Terminal>(s.level);
    case Status::rejected_beyond_last: return 2 * static_cast<Terminal>(stages);
    case Status::running: return -1;
    }
    return -2;
}

Count max_n(const LevelLadder& lad)
{
    Count m = 0;
    for (const auto& p : lad.plans) m = std::max(m, p.n);
    return m;
}

} // namespace

TEST_CASE("build_ladder on the 3% step ladder")
{
    const LevelLadder lad = step3_ladder();
    REQUIRE(lad.stages() == 2);
    CHECK(lad.plans[0].method == Method::bin);
    CHECK(lad.plans[0].c == 4);
    CHECK(near_abs(lad.plans[0].t_h, 0.0143, 0.004));
    CHECK(lad.plans[1].method == Method::norm_i);
    CHECK(std::abs(lad.plans[1].n - 495) <= 2);
    CHECK(lad.plans[1].c == 21);
    CHECK(near_abs(lad.plans[1].t_h, 0.0424, 0.0005));
    CHECK(lad.run_limits == std::vector<Count>{4, 5});
}

TEST_CASE("build_ladder with Norm_N on (0.02, 0.05, 0.10)")
{
    const LevelLadder lad = norm_n_ladder();
    REQUIRE(lad.stages() == 2);
    CHECK(lad.plans[0].n == 383);
    CHECK(lad.plans[0].c == 13);
    CHECK(lad.plans[1].n == 289);
    CHECK(lad.plans[1].c == 21);
    CHECK(lad.run_limits == std::vector<Count>{5, 6});
    for (std::size_t i = 0; i < lad.stages(); ++i) {
        CHECK(lad.plans[i].t_h > lad.levels[i]);
        CHECK(lad.plans[i].t_h < lad.levels[i + 1]);
        if (i > 0) CHECK(lad.run_limits[i] >= lad.run_limits[i - 1]);
    }
}

TEST_CASE("build_ladder errors")
{
    LadderConfig cfg;
    cfg.levels = {0.02};
    CHECK_THROWS_AS(build_ladder(cfg), DomainError);
    cfg.levels = {0.05, 0.02};
    CHECK_THROWS_AS(build_ladder(cfg), DomainError);
    cfg.levels = {0.1, 0.6};
    CHECK_THROWS_AS(build_ladder(cfg), DomainError);
    cfg.levels = {0.01, 0.02, 0.03};
    cfg.methods = {Method::bin, Method::bin, Method::bin};
    CHECK_THROWS_AS(build_ladder(cfg), DomainError);

    // Norm_I cannot reach a tight gap on (0.2, 0.4).
    cfg.levels = {0.05, 0.2, 0.4};
    cfg.methods = {Method::norm_n, Method::norm_i};
    cfg.epsilon = 1e-6;
    try {
        build_ladder(cfg);
        FAIL("expected LadderError");
    } catch (const LadderError& e) {
        CHECK(e.pair_index() == 1);
        CHECK(std::string(e.what()).find("0.2") != std::string::npos);
    }

    // Norm_N from p0 = 0 gives c = 0, which cannot be inspected.
    LadderConfig zero;
    zero.levels = {0.0, 0.03};
    CHECK_THROWS_AS(build_ladder(zero), LadderError);

    CHECK_THROWS_AS(step_ladder_config(0.0, 0.0, 3, Method::bin, Method::norm_i), DomainError);
    CHECK_THROWS_AS(step_ladder_config(0.0, 0.01, 0, Method::bin, Method::norm_i), DomainError);
}

TEST_CASE("step_ladder_config levels are exact decimals")
{
    const auto cfg = step_ladder_config(0.0, 0.03, 8, Method::bin, Method::norm_i);
    REQUIRE(cfg.levels.size() == 9);
    CHECK(cfg.levels[3] == 0.09);
    CHECK(cfg.levels[8] == 0.24);
    CHECK(cfg.methods.front() == Method::bin);
    CHECK(cfg.methods.back() == Method::norm_i);
}

TEST_CASE("all successes accept at level 0 after n trials")
{
    const LevelLadder lad = step3_ladder();
    const Count n0 = lad.plans[0].n;
    std::vector<Outcome> s(static_cast<std::size_t>(n0), Outcome::success());
    const InspectionState st = run_stream(lad, s);
    CHECK(st.status == Status::accepted);
    CHECK(st.level == 0);
    CHECK(st.trials == n0);
    CHECK(st.accepted_t_h == lad.plans[0].t_h);
    CHECK(st.events.back().transition == Transition::accept);
    CHECK(st.events.back().reason == Reason::completed);
}

TEST_CASE("c - 1 failures still accept at trial n")
{
    const LevelLadder lad = step3_ladder();
    const Count n0 = lad.plans[0].n;
    std::vector<Outcome> s(static_cast<std::size_t>(n0), Outcome::success());
    s[10].failure = s[50].failure = s[n0 - 1].failure = true;
    const InspectionState st = run_stream(lad, s);
    CHECK(st.status == Status::accepted);
    CHECK(st.level == 0);
    CHECK(st.failures == 3);
}

TEST_CASE("the c-th failure escalates and counts carry over")
{
    const LevelLadder lad = step3_ladder();
    std::vector<Outcome> s(100, Outcome::success());
    for (int i : {20, 40, 60, 99}) s[i].failure = true;
    InspectionState st = run_stream(lad, s);
    CHECK(st.status == Status::running);
    CHECK(st.level == 1);
    CHECK(st.trials == 100);
    CHECK(st.failures == 4);
    const Event& ev = st.events.back();
    CHECK(ev.trial == 100);
    CHECK(ev.transition == Transition::escalate);
    CHECK(ev.reason == Reason::failures);
    CHECK(ev.level_before == 0);
    CHECK(ev.level_after == 1);

    // The next plan completes at its cumulative n.
    const Count n1 = lad.plans[1].n;
    while (!st.terminal()) observe(st, lad, Outcome::success());
    CHECK(st.status == Status::accepted);
    CHECK(st.level == 1);
    CHECK(st.trials == n1);
    CHECK(st.failures == 4);
}

TEST_CASE("a run longer than r escalates regardless of totals")
{
    const LevelLadder lad = norm_n_ladder();  // r = 5 at level 0, c = 13
    InspectionState st;
    for (int i = 0; i < 5; ++i) {
        const Event ev = observe(st, lad, Outcome::fail());
        CHECK(ev.transition == Transition::none);
    }
    const Event ev = observe(st, lad, Outcome::fail());
    CHECK(ev.transition == Transition::escalate);
    CHECK(ev.reason == Reason::run_limit);
    CHECK(ev.run == 6);
    CHECK(ev.run > lad.run_limits[0]);
    CHECK(ev.failures < lad.plans[0].c);
    CHECK(st.level == 1);

    // With c = 4 and r = 4 the fourth failure of a run escalates before the run limit can.
    const LevelLadder lad3 = step3_ladder();
    const InspectionState s3 = run_stream(lad3, bits({0, 0, 1, 1, 1, 1, 1}));
    CHECK(s3.level == 1);
    CHECK(s3.events[5].transition == Transition::escalate);
    CHECK(s3.events[5].reason == Reason::failures);
    CHECK(s3.events.back().transition == Transition::none);
}

TEST_CASE("escalating past the last level rejects")
{
    const LevelLadder lad = norm_n_ladder();
    std::vector<Outcome> s(200, Outcome::fail());
    const InspectionState st = run_stream(lad, s);
    CHECK(st.status == Status::rejected_beyond_last);
    CHECK(st.events.back().transition == Transition::reject);
    // Run limit breaks level 0 at 6, level 1 at 7.
    CHECK(st.trials == 7);
    CHECK(st.events.size() == 7);
}

TEST_CASE("escalation onto a reached cumulative n decides at once")
{
    const LevelLadder lad = norm_n_ladder();  // n1 = 289 < n0 = 383
    std::vector<Outcome> s(300, Outcome::success());
    for (int i : {10, 30, 50, 70, 90, 110, 130, 150, 170, 190, 210, 230, 299}) s[i].failure = true;
    const InspectionState st = run_stream(lad, s);
    CHECK(st.status == Status::accepted);
    CHECK(st.level == 1);
    CHECK(st.trials == 300);
    const Event& ev = st.events.back();
    CHECK(ev.transition == Transition::accept);
    CHECK(ev.reason == Reason::failures);
    CHECK(ev.escalations == 1);
}

TEST_CASE("observe after a terminal verdict is an error")
{
    const LevelLadder lad = norm_n_ladder();
    InspectionState st;
    while (!st.terminal()) observe(st, lad, Outcome::fail());
    CHECK_THROWS_AS(observe(st, lad, Outcome::success()), StateMachineError);
}

TEST_CASE("empty stream is inconclusive with zero trials")
{
    const InspectionState st = run_stream(norm_n_ladder(), std::vector<Outcome>{});
    CHECK(st.status == Status::running);
    CHECK(st.trials == 0);
    CHECK(st.events.empty());
}

TEST_CASE("run_stream ignores outcomes after the verdict")
{
    const LevelLadder lad = norm_n_ladder();
    std::vector<Outcome> s(1000, Outcome::success());
    const InspectionState st = run_stream(lad, s);
    CHECK(st.trials == 383);
    CHECK(st.events.size() == 383);
}

TEST_CASE("invariants and replay on random streams")
{
    const LevelLadder lad = norm_n_ladder();
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const double p = 0.01 * static_cast<double>(seed % 15);
        const auto stream = random_stream(p, 500, seed);
        const InspectionState st = run_stream(lad, stream);
        Count prev_trials = 0;
        Count prev_failures = 0;
        for (const Event& ev : st.events) {
            CHECK(ev.trial == prev_trials + 1);
            CHECK(ev.failures >= prev_failures);
            CHECK(ev.failures <= ev.trial);
            CHECK(ev.run <= ev.failures);
            CHECK(ev.level_after >= ev.level_before);
            if (ev.reason == Reason::run_limit) CHECK(ev.run > lad.run_limits[ev.level_before]);
            prev_trials = ev.trial;
            prev_failures = ev.failures;
        }
        if (st.status == Status::accepted) {
            CHECK(st.failures <= lad.plans[st.level].c - 1);
            CHECK(st.trials >= lad.plans[st.level].n);
        }
        CHECK(replay(lad, st.events) == st);
    }
}

TEST_CASE("replay detects a tampered log")
{
    const LevelLadder lad = norm_n_ladder();
    InspectionState st = run_stream(lad, random_stream(0.05, 400, 7));
    REQUIRE(st.events.size() > 20);
    auto log = st.events;
    log[10].failures += 1;
    CHECK_THROWS_AS(replay(lad, log), StateMachineError);
}

TEST_CASE("exact terminal distribution sums to one and matches simulation")
{
    const LevelLadder lad = norm_n_ladder();
    const Count horizon = max_n(lad);
    const auto exact = exact_terminal_distribution(lad, 0.08, horizon);
    double total = 0.0;
    for (const auto& kv : exact) total += kv.second;
    CHECK(near_rel(total, 1.0, 1e-12));
    CHECK(exact.count(-1) == 0);

    const int streams = 10000;
    std::map<Terminal, int> hits;
    for (int i = 0; i < streams; ++i) {
        const auto st = run_stream(lad, random_stream(0.08, static_cast<std::size_t>(horizon), 1000 + i));
        ++hits[terminal_of(st, lad.stages())];
    }
    for (const auto& [term, prob] : exact) {
        const double sigma = std::sqrt(prob * (1 - prob) / streams);
        const double emp = static_cast<double>(hits[term]) / streams;
        CAPTURE(term);
        CHECK(std::abs(emp - prob) <= 3 * sigma + 1e-12);
    }
}

TEST_CASE("exact model agrees with single-stage acceptance when no escalation fires")
{
    // With a run limit that cannot be reached before the plan ends, level 0
    // acceptance is P(Bin(n, p) <= c - 1).
    LevelLadder lad = norm_n_ladder();
    lad.run_limits = {1000, 1000};
    const auto exact = exact_terminal_distribution(lad, 0.02, max_n(lad));
    double direct = 0.0;
    for (Count k = 0; k < lad.plans[0].c; ++k) {
        direct += std::exp(std::lgamma(384.0) - std::lgamma(k + 1.0) - std::lgamma(384.0 - k) + k * std::log(0.02)
                           + (383.0 - k) * std::log(0.98));
    }
    CHECK(near_rel(exact.at(0), direct, 1e-10));
}

TEST_CASE("OutcomeReader")
{
    std::istringstream in("0\n1\n\n  1 \r\n0\n");
    OutcomeReader r(in, "lot-7");
    std::vector<bool> got;
    while (auto o = r.next()) {
        CHECK(o->source == "lot-7");
        got.push_back(o->failure);
    }
    CHECK(got == std::vector<bool>{false, true, true, false});

    std::istringstream bad("0\n0\n0\n0\n0\n0\n2\n");
    OutcomeReader rb(bad);
    for (int i = 0; i < 6; ++i) CHECK(rb.next().has_value());
    try {
        rb.next();
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 7);
        CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    }
}

TEST_CASE("name functions")
{
    CHECK(status_name(Status::accepted) == "accepted");
    CHECK(status_name(Status::rejected_beyond_last) == "rejected");
    CHECK(transition_name(Transition::escalate) == "escalate");
    CHECK(reason_name(Reason::run_limit) == "run_limit");
}
