#include "dht/inspection_engine.hpp"

#include "dht/errors.hpp"
#include "dht/run_limits.hpp"

#include <cmath>
#include <istream>
#include <string>

namespace dht {

std::string_view status_name(Status s) noexcept
{
    switch (s) {
    case Status::running: return "continue";
    case Status::accepted: return "accepted";
    case Status::rejected_beyond_last: return "rejected";
    }
    return "?";
}

std::string_view transition_name(Transition t) noexcept
{
    switch (t) {
    case Transition::none: return "none";
    case Transition::escalate: return "escalate";
    case Transition::accept: return "accept";
    case Transition::reject: return "reject";
    }
    return "?";
}

std::string_view reason_name(Reason r) noexcept
{
    switch (r) {
    case Reason::none: return "none";
    case Reason::failures: return "failures";
    case Reason::run_limit: return "run_limit";
    case Reason::completed: return "completed";
    }
    return "?";
}

LevelLadder build_ladder(const LadderConfig& config)
{
    const auto& lv = config.levels;
    if (lv.size() < 2) throw DomainError("a ladder needs at least two levels");
    for (std::size_t i = 0; i < lv.size(); ++i) {
        if (!(std::isfinite(lv[i]) && lv[i] >= 0.0 && lv[i] < 0.5)) {
            throw DomainError("ladder levels must lie in [0, 0.5)");
        }
        if (i > 0 && !(lv[i] > lv[i - 1])) throw DomainError("ladder levels must be strictly increasing");
    }
    const std::size_t pairs = lv.size() - 1;
    if (config.methods.empty() || (config.methods.size() != 1 && config.methods.size() != pairs)) {
        throw DomainError("give one method, or one per adjacent pair of levels");
    }

    LevelLadder ladder;
    ladder.levels = lv;
    ladder.ex = config.ex;
    for (std::size_t i = 0; i < pairs; ++i) {
        const Method m = config.methods.size() == 1 ? config.methods.front() : config.methods[i];
        TestSpec spec;
        spec.p0 = lv[i];
        spec.p1 = lv[i + 1];
        spec.alpha_tail = config.alpha_tail;
        spec.beta_tail = config.beta_tail;
        spec.epsilon = config.epsilon.value_or(default_epsilon(m));
        spec.paper_compat_z = config.paper_compat_z;
        spec.max_n = config.max_n;
        const std::string pair_name = "pair " + std::to_string(i) + " (" + std::to_string(lv[i]) + ", "
                                      + std::to_string(lv[i + 1]) + ") with " + std::string(method_name(m));
        SamplingPlan plan;
        try {
            plan = solve(m, spec);
        } catch (const Error& e) {
            throw LadderError(pair_name + ": " + e.what(), i);
        }
        if (!plan.converged) throw LadderError(pair_name + ": solver did not converge", i);
        if (plan.c < 1) throw LadderError(pair_name + ": acceptance number below 1", i);
        ladder.plans.push_back(plan);
        ladder.run_limits.push_back(sfl_r({lv[i + 1], config.ex}).r);
    }
    return ladder;
}

LadderConfig step_ladder_config(double start, double step, std::size_t pairs, Method first_method, Method method)
{
    if (!(std::isfinite(step) && step > 0.0)) throw DomainError("step must be > 0");
    if (pairs < 1) throw DomainError("need at least one pair of levels");
    LadderConfig cfg;
    for (std::size_t i = 0; i <= pairs; ++i) {
        // Round to 12 decimals so 0.03 * 3 is exactly the level 0.09.
        const double v = start + step * static_cast<double>(i);
        cfg.levels.push_back(std::round(v * 1e12) / 1e12);
    }
    cfg.methods.assign(pairs, method);
    cfg.methods.front() = first_method;
    return cfg;
}

Event observe(InspectionState& state, const LevelLadder& ladder, const Outcome& outcome)
{
    if (state.terminal()) throw StateMachineError("observe called after a terminal verdict");
    if (ladder.stages() == 0) throw StateMachineError("ladder has no plans");

    Event ev;
    ev.level_before = state.level;
    ev.failure = outcome.failure;
    ++state.trials;
    if (outcome.failure) {
        ++state.failures;
        ++state.run;
    } else {
        state.run = 0;
    }
    ev.trial = state.trials;

    while (true) {
        const SamplingPlan& plan = ladder.plans[state.level];
        Reason cause = Reason::none;
        if (state.run > ladder.run_limits[state.level]) {
            cause = Reason::run_limit;
        } else if (state.failures >= plan.c) {
            cause = Reason::failures;
        } else if (state.trials >= plan.n) {
            state.status = Status::accepted;
            state.accepted_t_h = plan.t_h;
            ev.transition = Transition::accept;
            if (ev.reason == Reason::none) ev.reason = Reason::completed;
            break;
        } else {
            break;
        }

        if (ev.reason == Reason::none) ev.reason = cause;
        ++ev.escalations;
        if (state.level + 1 >= ladder.stages()) {
            state.status = Status::rejected_beyond_last;
            ev.transition = Transition::reject;
            break;
        }
        ++state.level;
        ev.transition = Transition::escalate;
    }

    ev.level_after = state.level;
    ev.failures = state.failures;
    ev.run = state.run;
    state.events.push_back(ev);
    return ev;
}

InspectionState replay(const LevelLadder& ladder, const std::vector<Event>& events)
{
    InspectionState state;
    for (const Event& recorded : events) {
        const Event again = observe(state, ladder, Outcome{recorded.failure, {}});
        if (!(again == recorded)) {
            throw StateMachineError("replay diverges at trial " + std::to_string(recorded.trial));
        }
    }
    return state;
}

OutcomeReader::OutcomeReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

std::optional<Outcome> OutcomeReader::next()
{
    std::string text;
    while (std::getline(in_, text)) {
        ++line_;
        const auto first = text.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = text.find_last_not_of(" \t\r");
        const std::string token = text.substr(first, last - first + 1);
        if (token == "0") return Outcome{false, source_};
        if (token == "1") return Outcome{true, source_};
        throw ParseError("line " + std::to_string(line_) + ": expected 0 or 1, got \"" + token + "\"", line_);
    }
    return std::nullopt;
}

} // namespace dht
