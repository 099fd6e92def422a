#include "dht/errors.hpp"
#include "dht/fuzzy_selector.hpp"
#include "dht/inspection_engine.hpp"
#include "dht/plan_solvers.hpp"
#include "dht/run_limits.hpp"
#include "dht/verification.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace dht;

namespace {

Method method_arg(const std::string& name)
{
    const auto m = parse_method(name);
    if (!m) throw DomainError("unknown method \"" + name + "\"");
    return *m;
}

TestSpec spec_arg(double p0, double p1, double alpha, double beta, std::optional<double> eps, Count max_n,
                  const std::string& z_mode, Method m)
{
    if (z_mode != "paper" && z_mode != "exact") throw DomainError("z_mode must be \"paper\" or \"exact\"");
    TestSpec spec;
    spec.p0 = p0;
    spec.p1 = p1;
    spec.alpha_tail = TailMass(alpha);
    spec.beta_tail = TailMass(beta);
    spec.epsilon = eps.value_or(default_epsilon(m));
    spec.max_n = max_n;
    spec.paper_compat_z = z_mode == "paper";
    spec.validate();
    return spec;
}

SamplingPlan nc_plan(Count n, Count c)
{
    SamplingPlan p;
    p.n = n;
    p.c = c;
    p.converged = true;
    return p;
}

std::vector<Outcome> outcomes_arg(const std::vector<int>& bits)
{
    std::vector<Outcome> out;
    out.reserve(bits.size());
    for (int b : bits) {
        if (b != 0 && b != 1) throw DomainError("outcomes must be 0 or 1");
        out.push_back(Outcome{b == 1, {}});
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Sampling plans, run limits, fuzzy method selection and sequential lot inspection";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    auto domain = py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<DegenerateSpecError>(m, "DegenerateSpecError", domain.ptr());
    py::register_exception<SolverError>(m, "SolverError", error.ptr());
    py::register_exception<NoConvergenceError>(m, "NoConvergenceError", error.ptr());
    py::register_exception<NoRecommendationError>(m, "NoRecommendationError", error.ptr());
    py::register_exception<StateMachineError>(m, "StateMachineError", error.ptr());
    py::register_exception<LadderError>(m, "LadderError", error.ptr());
    py::register_exception<ParseError>(m, "ParseError", error.ptr());

    py::class_<Applicability>(m, "Applicability")
        .def_readonly("np0_gt5", &Applicability::np0_gt5)
        .def_readonly("nq0_gt5", &Applicability::nq0_gt5)
        .def_readonly("p_lt_0_1", &Applicability::p_lt_0_1)
        .def_readonly("meaningful", &Applicability::meaningful);

    py::class_<SamplingPlan>(m, "SamplingPlan")
        .def_readonly("n", &SamplingPlan::n)
        .def_readonly("c", &SamplingPlan::c)
        .def_readonly("t_h", &SamplingPlan::t_h)
        .def_readonly("np0", &SamplingPlan::np0)
        .def_property_readonly("method", [](const SamplingPlan& p) { return std::string(method_name(p.method)); })
        .def_readonly("iterations", &SamplingPlan::iterations)
        .def_readonly("converged", &SamplingPlan::converged)
        .def_readonly("applicability", &SamplingPlan::applicability)
        .def_readonly("n_real", &SamplingPlan::n_real)
        .def_readonly("gap", &SamplingPlan::gap)
        .def_readonly("warnings", &SamplingPlan::warnings)
        .def("__repr__", [](const SamplingPlan& p) {
            return "SamplingPlan(method=" + std::string(method_name(p.method)) + ", n=" + std::to_string(p.n)
                   + ", c=" + std::to_string(p.c) + ", t_h=" + std::to_string(p.t_h) + ")";
        });

    m.def(
        "solve",
        [](const std::string& method, double p0, double p1, double alpha, double beta, std::optional<double> eps,
           Count max_n, const std::string& z_mode) {
            const Method meth = method_arg(method);
            return solve(meth, spec_arg(p0, p1, alpha, beta, eps, max_n, z_mode, meth));
        },
        py::arg("method"), py::arg("p0"), py::arg("p1"), py::arg("alpha") = 0.05, py::arg("beta") = 0.05,
        py::arg("eps") = py::none(), py::arg("max_n") = Count{1'000'000}, py::arg("z_mode") = "paper",
        "Sampling plan (n, c, t_h) for p0 against p1 with Bin, Poiss, Norm_N or Norm_I.");

    m.def(
        "closed_form",
        [](double p0, double p1, double alpha, double beta, const std::string& z_mode) {
            const ClosedForm cf =
                closed_form_norm(spec_arg(p0, p1, alpha, beta, std::nullopt, 1'000'000, z_mode, Method::norm_n));
            return py::make_tuple(cf.n_real, cf.t_h);
        },
        py::arg("p0"), py::arg("p1"), py::arg("alpha") = 0.05, py::arg("beta") = 0.05, py::arg("z_mode") = "paper",
        "Real-valued (n, t_h) solving the two normal-bound equations.");

    py::class_<SflResult>(m, "SflResult")
        .def_readonly("r_raw", &SflResult::r_raw)
        .def_readonly("r", &SflResult::r)
        .def_readonly("iterations", &SflResult::iterations)
        .def_readonly("converged", &SflResult::converged);

    m.def(
        "sfl_r", [](double p, double ex) { return sfl_r({p, ex}); }, py::arg("p"), py::arg("ex") = 1e6,
        "Longest plausible run of consecutive failures at rate p within a horizon of ex events.");
    m.def("mean_recurrence", &mean_recurrence, py::arg("p"), py::arg("r"),
          "Mean number of events between runs of r failures at rate p.");

    m.def("accept_probability", &accept_probability, py::arg("n"), py::arg("c"), py::arg("p"));
    m.def(
        "oc_curve",
        [](Count n, Count c, const std::vector<double>& grid) {
            std::vector<std::pair<double, double>> pts;
            for (const OcPoint& pt : oc_curve(n, c, grid).points) pts.emplace_back(pt.p, pt.accept_prob);
            return pts;
        },
        py::arg("n"), py::arg("c"), py::arg("grid"), "List of (p, accept_prob) pairs.");
    m.def("probability_grid", &probability_grid, py::arg("lo"), py::arg("hi"), py::arg("step"));

    py::class_<RateEstimate>(m, "RateEstimate")
        .def_readonly("rate", &RateEstimate::rate)
        .def_readonly("half_width", &RateEstimate::half_width);

    py::class_<ErrorEstimate>(m, "ErrorEstimate")
        .def_readonly("alpha_hat", &ErrorEstimate::alpha_hat)
        .def_readonly("beta_hat", &ErrorEstimate::beta_hat)
        .def_readonly("mc_alpha", &ErrorEstimate::mc_alpha)
        .def_readonly("mc_beta", &ErrorEstimate::mc_beta)
        .def_readonly("seed", &ErrorEstimate::seed);

    m.def(
        "realized_errors",
        [](Count n, Count c, double p0, double p1, std::optional<Count> reps, std::uint64_t seed) {
            const SamplingPlan plan = nc_plan(n, c);
            return reps ? realized_errors(plan, p0, p1, *reps, seed) : realized_errors(plan, p0, p1);
        },
        py::arg("n"), py::arg("c"), py::arg("p0"), py::arg("p1"), py::arg("reps") = py::none(),
        py::arg("seed") = std::uint64_t{20240601}, "Exact producer and consumer risks, plus Monte Carlo when reps is given.");

    m.def(
        "monte_carlo_accept",
        [](Count n, Count c, double p, Count reps, std::uint64_t seed) {
            return monte_carlo_accept(n, c, p, reps, seed);
        },
        py::arg("n"), py::arg("c"), py::arg("p"), py::arg("reps"), py::arg("seed") = std::uint64_t{20240601});

    py::class_<RuleFiring>(m, "RuleFiring")
        .def_readonly("rule", &RuleFiring::rule)
        .def_readonly("strength", &RuleFiring::strength);

    py::class_<Inference>(m, "Inference")
        .def_readonly("score", &Inference::score)
        .def_readonly("label", &Inference::label)
        .def_readonly("firings", &Inference::firings)
        .def_readonly("warnings", &Inference::warnings);

    py::class_<FuzzyRuleBase>(m, "FuzzyRuleBase")
        .def_static("defaults", &FuzzyRuleBase::defaults)
        .def_static("parse", [](const std::string& text) { return FuzzyRuleBase::parse(text); })
        .def_static("load_file", &FuzzyRuleBase::load_file)
        .def("serialize", &FuzzyRuleBase::serialize)
        .def("__eq__", [](const FuzzyRuleBase& a, const FuzzyRuleBase& b) { return a == b; });

    m.def(
        "select",
        [](double step, double t_h, double t_exec, double prec_abs, std::optional<FuzzyRuleBase> base) {
            return infer({step, t_h, t_exec, prec_abs}, base ? *base : FuzzyRuleBase::defaults());
        },
        py::arg("step"), py::arg("t_h"), py::arg("t_exec"), py::arg("prec_abs"), py::arg("base") = py::none(),
        "Fuzzy recommendation of a solver method.");
    m.def(
        "classify",
        [](double score, std::optional<FuzzyRuleBase> base) {
            return classify(score, base ? *base : FuzzyRuleBase::defaults());
        },
        py::arg("score"), py::arg("base") = py::none());

    py::class_<LevelLadder>(m, "LevelLadder")
        .def_readonly("levels", &LevelLadder::levels)
        .def_readonly("plans", &LevelLadder::plans)
        .def_readonly("run_limits", &LevelLadder::run_limits)
        .def_readonly("ex", &LevelLadder::ex);

    m.def(
        "build_ladder",
        [](const std::vector<double>& levels, const std::vector<std::string>& methods, double alpha, double beta,
           double ex, std::optional<double> eps, const std::string& z_mode) {
            if (z_mode != "paper" && z_mode != "exact") throw DomainError("z_mode must be \"paper\" or \"exact\"");
            LadderConfig cfg;
            cfg.levels = levels;
            cfg.methods.clear();
            for (const auto& name : methods) cfg.methods.push_back(method_arg(name));
            cfg.alpha_tail = TailMass(alpha);
            cfg.beta_tail = TailMass(beta);
            cfg.ex = ex;
            cfg.epsilon = eps;
            cfg.paper_compat_z = z_mode == "paper";
            return build_ladder(cfg);
        },
        py::arg("levels"), py::arg("methods") = std::vector<std::string>{"norm-n"}, py::arg("alpha") = 0.05,
        py::arg("beta") = 0.05, py::arg("ex") = 1e6, py::arg("eps") = py::none(), py::arg("z_mode") = "paper");

    py::class_<Event>(m, "Event")
        .def_readonly("trial", &Event::trial)
        .def_readonly("failure", &Event::failure)
        .def_readonly("level_before", &Event::level_before)
        .def_readonly("level_after", &Event::level_after)
        .def_readonly("failures", &Event::failures)
        .def_readonly("run", &Event::run)
        .def_property_readonly("transition", [](const Event& e) { return std::string(transition_name(e.transition)); })
        .def_property_readonly("reason", [](const Event& e) { return std::string(reason_name(e.reason)); })
        .def_readonly("escalations", &Event::escalations);

    py::class_<InspectionState>(m, "InspectionState")
        .def_readonly("level", &InspectionState::level)
        .def_readonly("trials", &InspectionState::trials)
        .def_readonly("failures", &InspectionState::failures)
        .def_readonly("run", &InspectionState::run)
        .def_property_readonly("status", [](const InspectionState& s) { return std::string(status_name(s.status)); })
        .def_readonly("accepted_t_h", &InspectionState::accepted_t_h)
        .def_readonly("events", &InspectionState::events);

    m.def(
        "run_stream",
        [](const LevelLadder& ladder, const std::vector<int>& outcomes) {
            return run_stream(ladder, outcomes_arg(outcomes));
        },
        py::arg("ladder"), py::arg("outcomes"), "Inspect a sequence of 0/1 outcomes until a verdict.");
    m.def("replay", &replay, py::arg("ladder"), py::arg("events"));
}
