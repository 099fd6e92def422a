#pragma once

// Sequential lot inspection over a ladder of defect-rate levels. Each adjacent
// pair of levels has a plan (n, c) and a run limit r. Trial and failure counts
// are cumulative from the start of inspection and carry across escalations.

#include "dht/plan_solvers.hpp"
#include "dht/stat_kernels.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dht {

struct LevelLadder {
    std::vector<double> levels;     // strictly increasing
    std::vector<SamplingPlan> plans;  // plans[i] tests levels[i] against levels[i+1]
    std::vector<Count> run_limits;    // run_limits[i] = sfl_r(levels[i+1], ex).r
    double ex = 1e6;

    std::size_t stages() const noexcept { return plans.size(); }
};

struct LadderConfig {
    std::vector<double> levels;
    TailMass alpha_tail{0.05};
    TailMass beta_tail{0.05};
    // One method for every pair, or one per pair.
    std::vector<Method> methods{Method::norm_n};
    double ex = 1e6;
    // Per-method defaults when unset.
    std::optional<double> epsilon;
    bool paper_compat_z = true;
    Count max_n = 1'000'000;
};

// Throws DomainError for fewer than two levels or bad ordering, LadderError when a pair fails to solve.
LevelLadder build_ladder(const LadderConfig& config);

// Levels start, start+step, ..., with `pairs` adjacent pairs. The first pair uses
// first_method and the rest use method.
LadderConfig step_ladder_config(double start, double step, std::size_t pairs, Method first_method, Method method);

struct Outcome {
    bool failure = false;
    std::string source;  // optional stream tag

    static Outcome success() { return {false, {}}; }
    static Outcome fail() { return {true, {}}; }
};

enum class Status { running, accepted, rejected_beyond_last };
enum class Transition { none, escalate, accept, reject };
enum class Reason { none, failures, run_limit, completed };

std::string_view status_name(Status s) noexcept;
std::string_view transition_name(Transition t) noexcept;
std::string_view reason_name(Reason r) noexcept;

struct Event {
    Count trial = 0;
    bool failure = false;
    std::size_t level_before = 0;
    std::size_t level_after = 0;
    Count failures = 0;
    Count run = 0;
    Transition transition = Transition::none;
    Reason reason = Reason::none;  // first cause within this observation
    int escalations = 0;

    friend bool operator==(const Event&, const Event&) = default;
};

struct InspectionState {
    std::size_t level = 0;
    Count trials = 0;
    Count failures = 0;
    Count run = 0;
    Status status = Status::running;
    double accepted_t_h = 0.0;  // valid when status == accepted
    std::vector<Event> events;

    bool terminal() const noexcept { return status != Status::running; }
    friend bool operator==(const InspectionState&, const InspectionState&) = default;
};

// Applies one outcome in place, appends and returns its event. After the counts
// are updated the current level is checked in order: run limit breach, failures
// reaching c, trials reaching n (accept). An escalation re-runs the checks on the
// next level, so a level whose cumulative n has already been reached decides at once.
// Throws StateMachineError when the state is already terminal.
Event observe(InspectionState& state, const LevelLadder& ladder, const Outcome& outcome);

// Folds observe over the outcomes until a terminal status; later outcomes are ignored.
// A result still `running` is inconclusive.
template <class Range>
InspectionState run_stream(const LevelLadder& ladder, const Range& outcomes)
{
    InspectionState state;
    for (const auto& o : outcomes) {
        if (state.terminal()) break;
        observe(state, ladder, o);
    }
    return state;
}

// Rebuilds a state from its event log and checks every event matches. Throws StateMachineError on mismatch.
InspectionState replay(const LevelLadder& ladder, const std::vector<Event>& events);

// Reads 0/1 tokens, one per line; blank lines are skipped. Throws ParseError naming the 1-based line.
class OutcomeReader {
public:
    explicit OutcomeReader(std::istream& in, std::string source = {});
    std::optional<Outcome> next();
    std::size_t line() const noexcept { return line_; }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_ = 0;
};

} // namespace dht
