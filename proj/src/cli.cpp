#include "dht/cli.hpp"

#include "dht/errors.hpp"
#include "dht/format.hpp"
#include "dht/fuzzy_selector.hpp"
#include "dht/inspection_engine.hpp"
#include "dht/plan_solvers.hpp"
#include "dht/run_limits.hpp"
#include "dht/verification.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <variant>

namespace dht {

namespace {

constexpr const char* kCsvVersion = "# dht-csv v1";
constexpr std::uint64_t kDefaultSeed = 20240601;

enum class Format { kv, csv, jsonl };

using Field = std::variant<std::string, double, Count, bool>;

struct Record {
    std::string kind;
    std::vector<std::pair<std::string, Field>> fields;

    Record& add(std::string key, Field value)
    {
        fields.emplace_back(std::move(key), std::move(value));
        return *this;
    }
};

std::string field_text(const Field& f)
{
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::string>) {
                return v;
            } else if constexpr (std::is_same_v<T, double>) {
                return format_number(v);
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else {
                return std::to_string(v);
            }
        },
        f);
}

std::string quote_if(const std::string& s, std::string_view specials)
{
    if (s.find_first_of(specials) == std::string::npos && !s.empty()) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

class Emitter {
public:
    Emitter(std::ostream& out, Format format) : out_(out), format_(format) {}

    void emit(const Record& r)
    {
        switch (format_) {
        case Format::kv: {
            bool first = true;
            for (const auto& [k, v] : r.fields) {
                if (!first) out_ << ' ';
                first = false;
                out_ << k << '=' << quote_if(field_text(v), " =\"");
            }
            out_ << '\n';
            break;
        }
        case Format::csv: {
            if (r.kind != csv_kind_) {
                csv_kind_ = r.kind;
                out_ << kCsvVersion << ' ' << r.kind << '\n';
                bool first = true;
                for (const auto& kv : r.fields) {
                    out_ << (first ? "" : ",") << kv.first;
                    first = false;
                }
                out_ << '\n';
            }
            bool first = true;
            for (const auto& kv : r.fields) {
                out_ << (first ? "" : ",") << quote_if(field_text(kv.second), ",\"\n");
                first = false;
            }
            out_ << '\n';
            break;
        }
        case Format::jsonl: {
            nlohmann::ordered_json j;
            j["record"] = r.kind;
            for (const auto& [k, v] : r.fields) {
                std::visit(
                    [&](const auto& x) {
                        using T = std::decay_t<decltype(x)>;
                        if constexpr (std::is_same_v<T, double>) {
                            if (std::isfinite(x)) {
                                j[k] = x;
                            } else {
                                j[k] = nullptr;
                            }
                        } else {
                            j[k] = x;
                        }
                    },
                    v);
            }
            out_ << j.dump() << '\n';
            break;
        }
        }
    }

private:
    std::ostream& out_;
    Format format_;
    std::string csv_kind_;
};

Format parse_format(const std::string& s)
{
    if (s == "csv") return Format::csv;
    if (s == "jsonl") return Format::jsonl;
    return Format::kv;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep)
{
    std::string s;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) s += sep;
        s += parts[i];
    }
    return s;
}

// Options shared by the commands that build a TestSpec.
struct SpecFlags {
    double p0 = 0.0;
    double p1 = 0.0;
    double alpha = 0.05;
    double beta = 0.05;
    std::optional<double> eps;
    Count max_n = 1'000'000;
    std::string z_mode = "paper";
    std::string method = "norm-n";
};

const std::vector<std::string> kMethodNames{"bin", "poiss", "norm-n", "norm-i", "Bin", "Poiss", "Norm_N", "Norm_I"};

void add_tail_flags(CLI::App* sub, SpecFlags& f)
{
    sub->add_option("--alpha", f.alpha, "Producer-risk tail mass")->check(CLI::Range(1e-9, 0.4999999));
    sub->add_option("--beta", f.beta, "Consumer-risk tail mass")->check(CLI::Range(1e-9, 0.4999999));
    sub->add_option("--z-mode", f.z_mode, "paper: 1.64 at tail 0.05; exact: inverse normal")
        ->check(CLI::IsMember({"paper", "exact"}));
}

void add_spec_flags(CLI::App* sub, SpecFlags& f, bool required)
{
    auto* p0 = sub->add_option("--p0", f.p0, "Lower defect rate");
    auto* p1 = sub->add_option("--p1", f.p1, "Upper defect rate");
    if (required) {
        p0->required();
        p1->required();
    }
    sub->add_option("--method", f.method, "bin | poiss | norm-n | norm-i")->check(CLI::IsMember(kMethodNames));
    sub->add_option("--eps", f.eps, "Solver tolerance (method default if omitted)");
    sub->add_option("--max-n", f.max_n, "Trial-count cap for scanning solvers");
    add_tail_flags(sub, f);
}

TestSpec make_spec(const SpecFlags& f, Method m)
{
    TestSpec spec;
    spec.p0 = f.p0;
    spec.p1 = f.p1;
    spec.alpha_tail = TailMass(f.alpha);
    spec.beta_tail = TailMass(f.beta);
    spec.epsilon = f.eps.value_or(default_epsilon(m));
    spec.max_n = f.max_n;
    spec.paper_compat_z = f.z_mode == "paper";
    spec.validate();
    return spec;
}

Record plan_record(const SamplingPlan& plan, const TestSpec& spec)
{
    Record r{"plan", {}};
    r.add("method", std::string(method_name(plan.method)))
        .add("p0", spec.p0)
        .add("p1", spec.p1)
        .add("n", plan.n)
        .add("c", plan.c)
        .add("t_h", plan.t_h)
        .add("np0", plan.np0)
        .add("iterations", plan.iterations)
        .add("converged", plan.converged)
        .add("np0_gt5", plan.applicability.np0_gt5)
        .add("nq0_gt5", plan.applicability.nq0_gt5)
        .add("p_lt_0_1", plan.applicability.p_lt_0_1)
        .add("meaningful", plan.applicability.meaningful)
        .add("n_real", plan.n_real)
        .add("gap", plan.gap)
        .add("z_mode", std::string(spec.paper_compat_z ? "paper" : "exact"))
        .add("warnings", join(plan.warnings, "; "));
    return r;
}

std::vector<double> parse_grid(const std::string& text)
{
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw CLI::ValidationError("--grid", "expected lo:hi:step, got " + text);
        parts.push_back(v);
    }
    if (parts.size() != 3) throw CLI::ValidationError("--grid", "expected lo:hi:step, got " + text);
    return probability_grid(parts[0], parts[1], parts[2]);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const EnvLookup& env)
{
    if (flag) return *flag;
    if (auto v = env("DHT_SEED")) {
        try {
            std::size_t used = 0;
            const unsigned long long s = std::stoull(*v, &used);
            if (used == v->size()) return s;
        } catch (const std::exception&) {
        }
        throw CLI::ValidationError("DHT_SEED", "not an unsigned integer: " + *v);
    }
    return kDefaultSeed;
}

Method method_or_throw(const std::string& name)
{
    auto m = parse_method(name);
    if (!m) throw CLI::ValidationError("--method", "unknown method " + name);
    return *m;
}

struct LadderFlags {
    std::vector<double> levels;
    double step = 0.0;
    double start = 0.0;
    std::size_t rows = 8;
    std::string first_method;
    std::string method = "norm-i";
    double ex = 1e6;
    std::optional<double> eps;
    SpecFlags tails;
};

void add_ladder_flags(CLI::App* sub, LadderFlags& f)
{
    sub->add_option("--step", f.step, "Level spacing (builds start, start+step, ...)");
    sub->add_option("--start", f.start, "First level");
    sub->add_option("--rows", f.rows, "Number of adjacent pairs")->check(CLI::PositiveNumber);
    sub->add_option("--first-method", f.first_method, "Method for the first pair")->check(CLI::IsMember(kMethodNames));
    sub->add_option("--method", f.method, "Method for the other pairs")->check(CLI::IsMember(kMethodNames));
    sub->add_option("--ex", f.ex, "SFL recurrence horizon")->check(CLI::Range(1.0, 1e300));
    sub->add_option("--eps", f.eps, "Solver tolerance for every pair (method defaults if omitted)");
    add_tail_flags(sub, f.tails);
}

LadderConfig ladder_config(const LadderFlags& f)
{
    const Method m = method_or_throw(f.method);
    LadderConfig cfg;
    if (!f.levels.empty()) {
        cfg.levels = f.levels;
        cfg.methods.assign(f.levels.size() > 1 ? f.levels.size() - 1 : 1, m);
        if (!f.first_method.empty()) cfg.methods.front() = method_or_throw(f.first_method);
    } else {
        if (!(f.step > 0.0)) throw CLI::ValidationError("--step", "must be > 0");
        // Starting at zero the first pair defaults to Bin, as normal plans are meaningless there.
        const Method first = !f.first_method.empty() ? method_or_throw(f.first_method)
                             : f.start == 0.0         ? Method::bin
                                                      : m;
        cfg = step_ladder_config(f.start, f.step, f.rows, first, m);
        if (cfg.levels.back() >= 0.5) throw CLI::ValidationError("--rows", "levels must stay below 0.5");
    }
    cfg.alpha_tail = TailMass(f.tails.alpha);
    cfg.beta_tail = TailMass(f.tails.beta);
    cfg.ex = f.ex;
    cfg.epsilon = f.eps;
    cfg.paper_compat_z = f.tails.z_mode == "paper";
    return cfg;
}

} // namespace

std::optional<std::string> process_env(const std::string& name)
{
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err,
            const EnvLookup& env)
{
    CLI::App app{"Double hypothesis test sampling plans, inspection and verification", "dhtplan"};
    app.require_subcommand(1);
    std::string format = "kv";
    const auto format_check = CLI::IsMember({"kv", "csv", "jsonl"});

    // plan
    SpecFlags plan_f;
    std::optional<double> x1, x2;
    auto* plan_cmd = app.add_subcommand("plan", "Compute one sampling plan");
    add_spec_flags(plan_cmd, plan_f, true);
    plan_cmd->add_option("--x1", x1, "Newton initial threshold");
    plan_cmd->add_option("--x2", x2, "Newton initial trial count");
    plan_cmd->add_option("--format", format)->check(format_check);

    // table
    LadderFlags table_f;
    std::string table_format = "csv";
    auto* table_cmd = app.add_subcommand("table", "Plans and run limits for a ladder of levels");
    add_ladder_flags(table_cmd, table_f);
    table_cmd->add_option("--levels", table_f.levels, "Explicit comma-separated levels")->delimiter(',');
    table_cmd->add_option("--format", table_format)->check(format_check);

    // inspect
    LadderFlags insp_f;
    insp_f.method = "norm-n";
    std::string input_path = "-";
    bool quiet = false;
    auto* insp_cmd = app.add_subcommand("inspect", "Run a 0/1 outcome stream through a level ladder");
    add_ladder_flags(insp_cmd, insp_f);
    insp_cmd->add_option("--levels", insp_f.levels, "Comma-separated levels")->delimiter(',');
    insp_cmd->add_option("--input", input_path, "Outcome file, - for stdin");
    insp_cmd->add_flag("--quiet", quiet, "Print only the verdict");
    insp_cmd->add_option("--format", format)->check(format_check);

    // sfl
    double sfl_p = 0.0;
    double sfl_ex = 1e6;
    std::optional<Count> sfl_run;
    auto* sfl_cmd = app.add_subcommand("sfl", "Successive failures limit");
    sfl_cmd->add_option("--p", sfl_p, "Defect probability")->required()->check(CLI::Range(1e-12, 1.0 - 1e-12));
    sfl_cmd->add_option("--ex", sfl_ex, "Mean recurrence horizon")->check(CLI::Range(1.0, 1e300));
    sfl_cmd->add_option("--r", sfl_run, "Also report the mean recurrence of a run of this length")
        ->check(CLI::PositiveNumber);
    sfl_cmd->add_option("--format", format)->check(format_check);

    // select
    SelectorInput sel_in;
    std::optional<double> s_step, s_th, s_texec, s_prec;
    std::string fuzzy_config;
    std::string surface;
    std::size_t surface_grid = 21;
    bool dump_config = false;
    auto* sel_cmd = app.add_subcommand("select", "Recommend a solver by fuzzy inference");
    sel_cmd->add_option("--step", s_step, "Probability step");
    sel_cmd->add_option("--th", s_th, "Threshold");
    sel_cmd->add_option("--texec", s_texec, "Relative execution time");
    sel_cmd->add_option("--prec", s_prec, "Absolute precision");
    sel_cmd->add_option("--fuzzy-config", fuzzy_config, "Rule-base JSON file")->check(CLI::ExistingFile);
    sel_cmd->add_option("--surface", surface, "Two inputs, e.g. step,t_exec: emit a response surface");
    sel_cmd->add_option("--grid", surface_grid, "Surface grid size")->check(CLI::Range(2, 1001));
    sel_cmd->add_flag("--dump-config", dump_config, "Print the rule base as JSON");
    sel_cmd->add_option("--format", format)->check(format_check);

    // oc
    std::optional<Count> oc_n, oc_c;
    SpecFlags oc_f;
    std::string grid_text = "0:1:0.01";
    std::string oc_format = "csv";
    auto* oc_cmd = app.add_subcommand("oc", "Operating characteristic curve");
    oc_cmd->add_option("--n", oc_n, "Plan trials");
    oc_cmd->add_option("--c", oc_c, "Plan acceptance number (reject at c failures)");
    add_spec_flags(oc_cmd, oc_f, false);
    oc_cmd->add_option("--grid", grid_text, "lo:hi:step");
    oc_cmd->add_option("--format", oc_format)->check(format_check);

    // simulate
    std::optional<Count> sim_n, sim_c;
    std::optional<double> sim_p;
    SpecFlags sim_f;
    Count reps = 100000;
    std::optional<std::uint64_t> seed_flag;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo acceptance rates");
    sim_cmd->add_option("--n", sim_n, "Plan trials");
    sim_cmd->add_option("--c", sim_c, "Plan acceptance number");
    sim_cmd->add_option("--p", sim_p, "True defect rate")->check(CLI::Range(0.0, 1.0));
    add_spec_flags(sim_cmd, sim_f, false);
    sim_cmd->add_option("--reps", reps, "Simulated lots")->check(CLI::Range(Count{100}, Count{1'000'000'000}));
    sim_cmd->add_option("--seed", seed_flag, "Generator seed (default: DHT_SEED, then a fixed value)");
    sim_cmd->add_option("--format", format)->check(format_check);

    try {
        std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
        std::reverse(rest.begin(), rest.end());
        app.parse(rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return exit_usage;
    }

    try {
        if (*plan_cmd) {
            Emitter em(out, parse_format(format));
            const Method m = method_or_throw(plan_f.method);
            TestSpec spec;
            try {
                spec = make_spec(plan_f, m);
            } catch (const DomainError& e) {
                err << "error: " << e.what() << "\n";
                return exit_usage;
            }
            SamplingPlan plan;
            try {
                if (m == Method::norm_n && (x1 || x2)) {
                    NewtonState init = default_newton_init(spec);
                    if (x1) init.x1 = *x1;
                    if (x2) init.x2 = *x2;
                    plan = solve_norm_newton(spec, init);
                } else {
                    plan = solve(m, spec);
                }
            } catch (const NoConvergenceError& e) {
                Record r{"no_convergence", {}};
                r.add("method", std::string(method_name(m)))
                    .add("p0", spec.p0)
                    .add("p1", spec.p1)
                    .add("best_gap", e.best_gap())
                    .add("best_n", static_cast<Count>(e.best_n()))
                    .add("iterations", static_cast<Count>(e.iterations()));
                em.emit(r);
                err << "error: " << e.what() << "\n";
                return exit_failure;
            }
            em.emit(plan_record(plan, spec));
            return plan.converged ? exit_ok : exit_failure;
        }

        if (*table_cmd) {
            if (table_f.levels.empty() && !(table_f.step > 0.0)) {
                err << "error: --step must be > 0 (or give --levels)\n";
                return exit_usage;
            }
            LadderConfig cfg;
            try {
                cfg = ladder_config(table_f);
            } catch (const DomainError& e) {
                err << "error: " << e.what() << "\n";
                return exit_usage;
            }
            const LevelLadder ladder = build_ladder(cfg);
            Emitter em(out, parse_format(table_format));
            for (std::size_t i = 0; i < ladder.stages(); ++i) {
                const SamplingPlan& p = ladder.plans[i];
                Record r{"table", {}};
                r.add("row", static_cast<Count>(i + 1))
                    .add("p_low", ladder.levels[i])
                    .add("p_high", ladder.levels[i + 1])
                    .add("method", std::string(method_name(p.method)))
                    .add("n", p.n)
                    .add("c", p.c)
                    .add("t_h", p.t_h)
                    .add("r", ladder.run_limits[i]);
                em.emit(r);
            }
            return exit_ok;
        }

        if (*insp_cmd) {
            if (insp_f.levels.empty() && !(insp_f.step > 0.0)) {
                err << "error: give --levels or --step\n";
                return exit_usage;
            }
            LadderConfig cfg;
            try {
                cfg = ladder_config(insp_f);
            } catch (const DomainError& e) {
                err << "error: " << e.what() << "\n";
                return exit_usage;
            }
            const LevelLadder ladder = build_ladder(cfg);
            std::ifstream file;
            std::istream* src = &in;
            if (input_path != "-") {
                file.open(input_path);
                if (!file) {
                    err << "error: cannot open " << input_path << "\n";
                    return exit_usage;
                }
                src = &file;
            }
            Emitter em(out, parse_format(format));
            OutcomeReader reader(*src, input_path);
            InspectionState state;
            try {
                while (!state.terminal()) {
                    const auto o = reader.next();
                    if (!o) break;
                    const Event ev = observe(state, ladder, *o);
                    if (quiet) continue;
                    Record r{"event", {}};
                    r.add("trial", ev.trial)
                        .add("outcome", static_cast<Count>(ev.failure ? 1 : 0))
                        .add("level", static_cast<Count>(ev.level_after))
                        .add("failures", ev.failures)
                        .add("run", ev.run)
                        .add("transition", std::string(transition_name(ev.transition)))
                        .add("reason", std::string(reason_name(ev.reason)));
                    em.emit(r);
                }
            } catch (const ParseError& e) {
                err << "error: " << e.what() << "\n";
                return exit_usage;
            }
            Record v{"verdict", {}};
            const std::string status = state.status == Status::running ? "inconclusive"
                                                                        : std::string(status_name(state.status));
            v.add("verdict", status)
                .add("level", static_cast<Count>(state.level))
                .add("p_low", ladder.levels[state.level])
                .add("p_high", ladder.levels[state.level + 1])
                .add("t_h", state.status == Status::accepted ? state.accepted_t_h : ladder.plans[state.level].t_h)
                .add("trials", state.trials)
                .add("failures", state.failures)
                .add("run", state.run);
            em.emit(v);
            switch (state.status) {
            case Status::accepted: return exit_ok;
            case Status::rejected_beyond_last: return exit_rejected;
            case Status::running: return exit_inconclusive;
            }
            return exit_inconclusive;
        }

        if (*sfl_cmd) {
            Emitter em(out, parse_format(format));
            const SflResult s = sfl_r({sfl_p, sfl_ex});
            Record r{"sfl", {}};
            r.add("p", sfl_p).add("ex", sfl_ex).add("r_raw", s.r_raw).add("r", s.r).add("iterations",
                                                                                      static_cast<Count>(s.iterations));
            r.add("converged", s.converged);
            if (sfl_run) r.add("mean_recurrence", mean_recurrence(sfl_p, *sfl_run));
            em.emit(r);
            return exit_ok;
        }

        if (*sel_cmd) {
            const FuzzyRuleBase base = fuzzy_config.empty() ? FuzzyRuleBase::defaults()
                                                            : FuzzyRuleBase::load_file(fuzzy_config);
            if (dump_config) {
                out << base.serialize();
                return exit_ok;
            }
            if (s_step) sel_in.step = *s_step;
            if (s_th) sel_in.t_h = *s_th;
            if (s_texec) sel_in.t_exec = *s_texec;
            if (s_prec) sel_in.prec_abs = *s_prec;
            Emitter em(out, parse_format(format));
            if (!surface.empty()) {
                const auto comma = surface.find(',');
                const auto a1 = parse_input_var(surface.substr(0, comma));
                const auto a2 = comma == std::string::npos ? std::nullopt
                                                           : parse_input_var(surface.substr(comma + 1));
                if (!a1 || !a2 || *a1 == *a2) {
                    err << "error: --surface needs two different inputs among step,t_h,t_exec,prec_abs\n";
                    return exit_usage;
                }
                const auto xs = surface_axis(base, *a1, surface_grid);
                const auto ys = surface_axis(base, *a2, surface_grid);
                const auto z = response_surface(base, *a1, *a2, sel_in, surface_grid);
                for (std::size_t i = 0; i < xs.size(); ++i) {
                    for (std::size_t j = 0; j < ys.size(); ++j) {
                        Record r{"surface", {}};
                        r.add(std::string(input_name(*a1)), xs[i]).add(std::string(input_name(*a2)), ys[j]);
                        r.add("score", z[i][j]);
                        em.emit(r);
                    }
                }
                return exit_ok;
            }
            if (!s_step || !s_th || !s_texec || !s_prec) {
                err << "error: select needs --step, --th, --texec and --prec\n";
                return exit_usage;
            }
            const Inference inf = infer(sel_in, base);
            for (const auto& w : inf.warnings) err << "warning: " << w << "\n";
            Record r{"select", {}};
            r.add("score", inf.score).add("label", inf.label.value_or("none"));
            for (const auto& f : inf.firings) r.add("rule_" + std::to_string(f.rule), f.strength);
            em.emit(r);
            return exit_ok;
        }

        if (*oc_cmd || *sim_cmd) {
            const bool is_oc = static_cast<bool>(*oc_cmd);
            auto& nflag = is_oc ? oc_n : sim_n;
            auto& cflag = is_oc ? oc_c : sim_c;
            SpecFlags& sf = is_oc ? oc_f : sim_f;
            CLI::App* cmd = is_oc ? oc_cmd : sim_cmd;
            const bool have_spec = cmd->count("--p0") > 0 || cmd->count("--p1") > 0;

            SamplingPlan plan;
            std::optional<TestSpec> spec;
            if (nflag || cflag) {
                if (!nflag || !cflag || have_spec) {
                    err << "error: give both --n and --c, or --p0/--p1, not both\n";
                    return exit_usage;
                }
                if (*nflag < 1 || *cflag < 0 || *cflag > *nflag) {
                    err << "error: need n >= 1 and 0 <= c <= n\n";
                    return exit_usage;
                }
                plan.n = *nflag;
                plan.c = *cflag;
                plan.converged = true;
            } else if (have_spec) {
                const Method m = method_or_throw(sf.method);
                try {
                    spec = make_spec(sf, m);
                } catch (const DomainError& e) {
                    err << "error: " << e.what() << "\n";
                    return exit_usage;
                }
                plan = solve(m, *spec);
                if (!plan.converged) {
                    err << "error: plan did not converge\n";
                    return exit_failure;
                }
            } else {
                err << "error: give --n and --c, or --p0 and --p1\n";
                return exit_usage;
            }

            if (is_oc) {
                std::vector<double> grid;
                try {
                    grid = parse_grid(grid_text);
                } catch (const DomainError& e) {
                    err << "error: --grid: " << e.what() << "\n";
                    return exit_usage;
                }
                const OcCurve curve = oc_curve(plan, grid);
                const Format f = parse_format(oc_format);
                if (f == Format::csv) {
                    write_oc_csv(out, curve);
                } else {
                    Emitter em(out, f);
                    for (const auto& pt : curve.points) {
                        Record r{"oc", {}};
                        r.add("n", curve.n).add("c", curve.c).add("p", pt.p).add("accept_prob", pt.accept_prob);
                        em.emit(r);
                    }
                }
                return exit_ok;
            }

            const std::uint64_t seed = resolve_seed(seed_flag, env);
            Emitter em(out, parse_format(format));
            if (sim_p) {
                const RateEstimate mc = monte_carlo_accept(plan, *sim_p, reps, seed);
                Record r{"simulate", {}};
                r.add("n", plan.n)
                    .add("c", plan.c)
                    .add("p", *sim_p)
                    .add("reps", reps)
                    .add("seed", std::to_string(seed))
                    .add("rate", mc.rate)
                    .add("half_width", mc.half_width)
                    .add("exact", accept_probability(plan.n, plan.c, *sim_p));
                em.emit(r);
                return exit_ok;
            }
            if (!spec) {
                err << "error: give --p, or --p0 and --p1 for risk estimates\n";
                return exit_usage;
            }
            const ErrorEstimate e = realized_errors(plan, spec->p0, spec->p1, reps, seed);
            Record r{"errors", {}};
            r.add("method", std::string(method_name(plan.method)))
                .add("n", plan.n)
                .add("c", plan.c)
                .add("alpha_hat", e.alpha_hat)
                .add("beta_hat", e.beta_hat)
                .add("mc_alpha", e.mc_alpha->rate)
                .add("mc_alpha_hw", e.mc_alpha->half_width)
                .add("mc_beta", e.mc_beta->rate)
                .add("mc_beta_hw", e.mc_beta->half_width)
                .add("reps", reps)
                .add("seed", std::to_string(seed));
            em.emit(r);
            return exit_ok;
        }
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
    return exit_usage;
}

} // namespace dht
