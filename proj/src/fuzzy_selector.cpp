#include "dht/fuzzy_selector.hpp"

#include "dht/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace dht {

using nlohmann::json;

namespace {

constexpr std::string_view kSchema = "dht-fuzzy/1";

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

void check_mf(const MembershipFunction& mf)
{
    const auto& p = mf.pts;
    for (double v : p) {
        if (!std::isfinite(v)) throw DomainError("membership function " + mf.label + " has a non-finite breakpoint");
    }
    if (!(p[0] <= p[1] && p[1] <= p[2] && p[2] <= p[3])) {
        throw DomainError("membership function " + mf.label + " needs a <= b <= c <= d");
    }
}

void check_variable(const LinguisticVariable& var, std::string_view name)
{
    if (!(std::isfinite(var.universe.lo) && std::isfinite(var.universe.hi) && var.universe.lo < var.universe.hi)) {
        throw DomainError("variable " + std::string(name) + " has an empty universe");
    }
    if (var.terms.empty()) throw DomainError("variable " + std::string(name) + " has no terms");
    std::set<std::string> seen;
    for (const auto& t : var.terms) {
        check_mf(t);
        if (!seen.insert(t.label).second) {
            throw DomainError("variable " + std::string(name) + " repeats term " + t.label);
        }
    }
}

LinguisticVariable make_var(Universe u, std::vector<MembershipFunction> terms)
{
    return LinguisticVariable{u, std::move(terms)};
}

using ojson = nlohmann::ordered_json;

ojson variable_to_json(const LinguisticVariable& v)
{
    ojson terms = ojson::array();
    for (const auto& t : v.terms) {
        terms.push_back({{"label", t.label}, {"points", t.pts}});
    }
    return {{"universe", {v.universe.lo, v.universe.hi}}, {"terms", terms}};
}

LinguisticVariable variable_from_json(const json& j, std::string_view name)
{
    LinguisticVariable v;
    const auto& u = j.at("universe");
    if (!u.is_array() || u.size() != 2) throw DomainError(std::string(name) + ".universe must be [lo, hi]");
    v.universe = {u[0].get<double>(), u[1].get<double>()};
    for (const auto& t : j.at("terms")) {
        MembershipFunction mf;
        mf.label = t.at("label").get<std::string>();
        const auto& pts = t.at("points");
        if (!pts.is_array() || pts.size() != 4) {
            throw DomainError("term " + mf.label + " of " + std::string(name) + " needs exactly 4 points");
        }
        for (std::size_t i = 0; i < 4; ++i) mf.pts[i] = pts[i].get<double>();
        v.terms.push_back(std::move(mf));
    }
    check_variable(v, name);
    return v;
}

double trapezoid_integral(const std::vector<double>& y, double h)
{
    double s = 0.5 * (y.front() + y.back());
    for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
    return s * h;
}

double centroid_or_nan(const SelectorInput& input, const FuzzyRuleBase& base, std::vector<RuleFiring>* firings)
{
    std::vector<double> strengths;
    strengths.reserve(base.rules().size());
    bool any = false;
    for (std::size_t i = 0; i < base.rules().size(); ++i) {
        const Rule& rule = base.rules()[i];
        double s = 1.0;
        for (const Clause& cl : rule.clauses) {
            const auto& var = base.input(cl.var);
            const double mu = var.terms[cl.term].degree(input.get(cl.var));
            s = std::min(s, cl.negated ? 1.0 - mu : mu);
        }
        strengths.push_back(s);
        any = any || s > 0.0;
        if (firings) firings->push_back({i + 1, s});
    }
    if (!any) return std::numeric_limits<double>::quiet_NaN();

    const auto& out = base.output();
    const std::size_t n = FuzzyRuleBase::kGridPoints;
    const double h = (out.universe.hi - out.universe.lo) / static_cast<double>(n - 1);
    std::vector<double> mu(n, 0.0);
    std::vector<double> xmu(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double x = out.universe.lo + h * static_cast<double>(k);
        double m = 0.0;
        for (std::size_t i = 0; i < strengths.size(); ++i) {
            if (strengths[i] <= 0.0) continue;
            m = std::max(m, std::min(strengths[i], out.terms[base.rules()[i].consequent].degree(x)));
        }
        mu[k] = m;
        xmu[k] = x * m;
    }
    const double area = trapezoid_integral(mu, h);
    if (!(area > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(trapezoid_integral(xmu, h) / area, out.universe.lo, out.universe.hi);
}

} // namespace

std::string_view input_name(InputVar v) noexcept
{
    switch (v) {
    case InputVar::step: return "step";
    case InputVar::t_h: return "t_h";
    case InputVar::t_exec: return "t_exec";
    case InputVar::prec_abs: return "prec_abs";
    }
    return "?";
}

std::optional<InputVar> parse_input_var(std::string_view name) noexcept
{
    for (InputVar v : kInputVars) {
        if (input_name(v) == name) return v;
    }
    if (name == "th") return InputVar::t_h;
    if (name == "texec") return InputVar::t_exec;
    if (name == "prec") return InputVar::prec_abs;
    return std::nullopt;
}

double SelectorInput::get(InputVar v) const noexcept
{
    switch (v) {
    case InputVar::step: return step;
    case InputVar::t_h: return t_h;
    case InputVar::t_exec: return t_exec;
    case InputVar::prec_abs: return prec_abs;
    }
    return 0.0;
}

void SelectorInput::set(InputVar v, double value) noexcept
{
    switch (v) {
    case InputVar::step: step = value; break;
    case InputVar::t_h: t_h = value; break;
    case InputVar::t_exec: t_exec = value; break;
    case InputVar::prec_abs: prec_abs = value; break;
    }
}

double MembershipFunction::degree(double value) const noexcept
{
    const auto [a, b, c, d] = pts;
    if (value < a || value > d) return 0.0;
    if (value >= b && value <= c) return 1.0;
    if (value < b) return (value - a) / (b - a);
    return (d - value) / (d - c);
}

double membership_degree(double value, const MembershipFunction& mf) noexcept { return mf.degree(value); }

std::size_t LinguisticVariable::term_index(std::string_view label) const
{
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].label == label) return i;
    }
    throw DomainError("unknown term " + std::string(label));
}

FuzzyRuleBase::FuzzyRuleBase(std::array<LinguisticVariable, 4> inputs, LinguisticVariable output,
                             std::vector<Rule> rules, std::vector<Band> bands)
    : inputs_(std::move(inputs)), output_(std::move(output)), rules_(std::move(rules)), bands_(std::move(bands))
{
    for (InputVar v : kInputVars) check_variable(input(v), input_name(v));
    check_variable(output_, "output");
    if (rules_.empty()) throw DomainError("rule base has no rules");
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        const Rule& r = rules_[i];
        if (r.consequent >= output_.terms.size()) {
            throw DomainError("rule " + std::to_string(i + 1) + " names an unknown output term");
        }
        for (const Clause& cl : r.clauses) {
            if (cl.term >= input(cl.var).terms.size()) {
                throw DomainError("rule " + std::to_string(i + 1) + " names an unknown term of "
                                  + std::string(input_name(cl.var)));
            }
        }
    }
    std::sort(bands_.begin(), bands_.end(), [](const Band& x, const Band& y) { return x.lower < y.lower; });
    for (std::size_t i = 0; i < bands_.size(); ++i) {
        if (!(bands_[i].lower < bands_[i].upper)) throw DomainError("band " + bands_[i].label + " is empty");
        if (i > 0 && bands_[i].lower < bands_[i - 1].upper) {
            throw DomainError("bands " + bands_[i - 1].label + " and " + bands_[i].label + " overlap");
        }
    }
}

FuzzyRuleBase FuzzyRuleBase::defaults()
{
    std::array<LinguisticVariable, 4> in{
        make_var({0.0, 0.2},
                 {{"I_zero", {0.0, 0.0, 0.005, 0.02}},
                  {"Low", {0.005, 0.02, 0.05, 0.08}},
                  {"High", {0.05, 0.10, 0.2, 0.2}}}),
        make_var({0.0, 0.5}, {{"L", {0.0, 0.0, 0.05, 0.15}}, {"H", {0.10, 0.25, 0.5, 0.5}}}),
        make_var({0.0, 12.0},
                 {{"L_tex", {0.0, 0.0, 0.5, 2.0}}, {"M_tex", {0.5, 2.0, 4.0, 6.0}}, {"H_tex", {4.0, 8.0, 12.0, 12.0}}}),
        make_var({0.0, 1e-3}, {{"Low", {0.0, 0.0, 1e-5, 1e-4}}, {"High", {5e-5, 3e-4, 1e-3, 1e-3}}}),
    };
    LinguisticVariable out = make_var({0.0, 1.0},
                                      {{"Bin", {0.10, 0.12, 0.13, 0.15}},
                                       {"Poiss", {0.15, 0.20, 0.27, 0.32}},
                                       {"Norm_I", {0.32, 0.45, 0.60, 0.71}},
                                       {"Norm_N", {0.71, 0.85, 1.0, 1.0}}});

    enum : std::size_t { i_zero = 0, s_low = 1, s_high = 2 };
    enum : std::size_t { th_l = 0, th_h = 1 };
    enum : std::size_t { l_tex = 0, m_tex = 1, h_tex = 2 };
    enum : std::size_t { bin = 0, poiss = 1, norm_i = 2, norm_n = 3 };
    using V = InputVar;
    std::vector<Rule> rules{
        {{{V::step, i_zero, false}, {V::t_exec, m_tex, false}}, bin},
        {{{V::step, i_zero, false}, {V::t_exec, h_tex, false}}, poiss},
        {{{V::step, s_low, false}, {V::t_h, th_l, false}, {V::t_exec, m_tex, false}}, norm_n},
        {{{V::step, s_low, false}, {V::t_h, th_l, false}, {V::t_exec, l_tex, false}}, norm_i},
        {{{V::step, s_high, false}, {V::t_h, th_h, false}, {V::t_exec, l_tex, false}}, norm_n},
        {{{V::step, s_high, false}, {V::t_h, th_h, false}, {V::t_exec, m_tex, false}}, bin},
        {{{V::step, s_high, false}, {V::t_h, th_h, false}, {V::t_exec, h_tex, false}}, poiss},
        {{{V::step, i_zero, true}, {V::prec_abs, 0, false}}, norm_n},
    };
    std::vector<Band> bands{{"Bin", 0.10, 0.15}, {"Poiss", 0.15, 0.32}, {"Norm_I", 0.32, 0.71}, {"Norm_N", 0.71, 1.0}};
    return FuzzyRuleBase(std::move(in), std::move(out), std::move(rules), std::move(bands));
}

std::string FuzzyRuleBase::serialize() const
{
    ojson doc;
    doc["schema"] = kSchema;
    ojson inputs = ojson::object();
    for (InputVar v : kInputVars) inputs[std::string(input_name(v))] = variable_to_json(input(v));
    doc["inputs"] = inputs;
    doc["output"] = variable_to_json(output_);
    ojson rules = ojson::array();
    for (const Rule& r : rules_) {
        ojson clauses = ojson::array();
        for (const Clause& cl : r.clauses) {
            ojson c{{"var", input_name(cl.var)}, {"term", input(cl.var).terms[cl.term].label}};
            if (cl.negated) c["not"] = true;
            clauses.push_back(c);
        }
        rules.push_back({{"if", clauses}, {"then", output_.terms[r.consequent].label}});
    }
    doc["rules"] = rules;
    ojson bands = ojson::array();
    for (const Band& b : bands_) bands.push_back({{"label", b.label}, {"lower", b.lower}, {"upper", b.upper}});
    doc["bands"] = bands;
    return doc.dump(2) + "\n";
}

FuzzyRuleBase FuzzyRuleBase::parse(std::string_view json_text)
{
    try {
        const json doc = json::parse(json_text);
        if (doc.value("schema", std::string()) != kSchema) {
            throw DomainError("fuzzy config: expected \"schema\": \"" + std::string(kSchema) + "\"");
        }
        std::array<LinguisticVariable, 4> inputs;
        const auto& jin = doc.at("inputs");
        for (InputVar v : kInputVars) {
            const std::string name(input_name(v));
            if (!jin.contains(name)) throw DomainError("fuzzy config: missing input " + name);
            inputs[static_cast<std::size_t>(v)] = variable_from_json(jin.at(name), name);
        }
        LinguisticVariable output = variable_from_json(doc.at("output"), "output");

        std::vector<Rule> rules;
        for (const auto& jr : doc.at("rules")) {
            Rule r;
            for (const auto& jc : jr.at("if")) {
                const auto name = jc.at("var").get<std::string>();
                const auto var = parse_input_var(name);
                if (!var) throw DomainError("fuzzy config: unknown input " + name);
                r.clauses.push_back(
                    {*var, inputs[static_cast<std::size_t>(*var)].term_index(jc.at("term").get<std::string>()),
                     jc.value("not", false)});
            }
            r.consequent = output.term_index(jr.at("then").get<std::string>());
            rules.push_back(std::move(r));
        }
        std::vector<Band> bands;
        for (const auto& jb : doc.at("bands")) {
            bands.push_back({jb.at("label").get<std::string>(), jb.at("lower").get<double>(),
                             jb.at("upper").get<double>()});
        }
        return FuzzyRuleBase(std::move(inputs), std::move(output), std::move(rules), std::move(bands));
    } catch (const json::exception& e) {
        throw DomainError(std::string("fuzzy config: ") + e.what());
    }
}

FuzzyRuleBase FuzzyRuleBase::load_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open fuzzy config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

Inference infer(const SelectorInput& raw, const FuzzyRuleBase& base)
{
    Inference result;
    SelectorInput input = raw;
    for (InputVar v : kInputVars) {
        const double x = raw.get(v);
        if (std::isnan(x)) throw DomainError("input " + std::string(input_name(v)) + " is NaN");
        const Universe& u = base.input(v).universe;
        const double clamped = std::clamp(x, u.lo, u.hi);
        if (clamped != x) {
            result.warnings.push_back(std::string(input_name(v)) + "=" + fmt(x) + " clamped to [" + fmt(u.lo) + ", "
                                      + fmt(u.hi) + "]");
        }
        input.set(v, clamped);
    }
    result.score = centroid_or_nan(input, base, &result.firings);
    if (std::isnan(result.score)) throw NoRecommendationError("no fuzzy rule fires for these inputs");
    result.label = classify(result.score, base);
    return result;
}

std::optional<std::string> classify(double score, const FuzzyRuleBase& base)
{
    for (const Band& b : base.bands()) {
        if (score > b.lower && score <= b.upper) return b.label;
    }
    return std::nullopt;
}

std::vector<double> surface_axis(const FuzzyRuleBase& base, InputVar axis, std::size_t grid)
{
    if (grid < 2) throw DomainError("response surface grid must be >= 2");
    const Universe& u = base.input(axis).universe;
    std::vector<double> xs(grid);
    for (std::size_t i = 0; i < grid; ++i) {
        xs[i] = u.lo + (u.hi - u.lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
    }
    return xs;
}

std::vector<std::vector<double>> response_surface(const FuzzyRuleBase& base, InputVar axis1, InputVar axis2,
                                                  const SelectorInput& fixed, std::size_t grid)
{
    if (axis1 == axis2) throw DomainError("response surface axes must differ");
    const auto xs = surface_axis(base, axis1, grid);
    const auto ys = surface_axis(base, axis2, grid);
    SelectorInput in = fixed;
    for (InputVar v : kInputVars) {
        const Universe& u = base.input(v).universe;
        in.set(v, std::clamp(fixed.get(v), u.lo, u.hi));
    }
    std::vector<std::vector<double>> out(grid, std::vector<double>(grid));
    for (std::size_t i = 0; i < grid; ++i) {
        in.set(axis1, xs[i]);
        for (std::size_t j = 0; j < grid; ++j) {
            in.set(axis2, ys[j]);
            out[i][j] = centroid_or_nan(in, base, nullptr);
        }
    }
    return out;
}

} // namespace dht
