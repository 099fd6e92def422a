#pragma once

// Mamdani inference that recommends a plan solver from four inputs:
// probability step, threshold, relative execution time and absolute precision.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dht {

enum class InputVar { step, t_h, t_exec, prec_abs };

inline constexpr std::array<InputVar, 4> kInputVars{InputVar::step, InputVar::t_h, InputVar::t_exec, InputVar::prec_abs};

std::string_view input_name(InputVar v) noexcept;
std::optional<InputVar> parse_input_var(std::string_view name) noexcept;

struct SelectorInput {
    double step = 0.0;
    double t_h = 0.0;
    double t_exec = 0.0;
    double prec_abs = 0.0;

    double get(InputVar v) const noexcept;
    void set(InputVar v, double value) noexcept;
};

// Trapezoid a <= b <= c <= d: 0 outside [a, d], 1 on [b, c], linear ramps between.
struct MembershipFunction {
    std::string label;
    std::array<double, 4> pts{};

    double degree(double value) const noexcept;
    friend bool operator==(const MembershipFunction&, const MembershipFunction&) = default;
};

double membership_degree(double value, const MembershipFunction& mf) noexcept;

struct Universe {
    double lo = 0.0;
    double hi = 1.0;
    friend bool operator==(const Universe&, const Universe&) = default;
};

struct LinguisticVariable {
    Universe universe;
    std::vector<MembershipFunction> terms;

    // Index of the term with this label; throws DomainError if missing.
    std::size_t term_index(std::string_view label) const;
    friend bool operator==(const LinguisticVariable&, const LinguisticVariable&) = default;
};

struct Clause {
    InputVar var = InputVar::step;
    std::size_t term = 0;
    bool negated = false;
    friend bool operator==(const Clause&, const Clause&) = default;
};

struct Rule {
    std::vector<Clause> clauses;  // empty means always true
    std::size_t consequent = 0;   // index into the output terms
    friend bool operator==(const Rule&, const Rule&) = default;
};

// Score interval (lower, upper] mapped to a method label.
struct Band {
    std::string label;
    double lower = 0.0;
    double upper = 0.0;
    friend bool operator==(const Band&, const Band&) = default;
};

struct RuleFiring {
    std::size_t rule = 0;  // 1-based, as the rules are numbered in the config
    double strength = 0.0;
};

struct Inference {
    double score = 0.0;
    std::optional<std::string> label;  // none when score falls below every band
    std::vector<RuleFiring> firings;
    std::vector<std::string> warnings;  // inputs clamped to their universes
};

class FuzzyRuleBase {
public:
    static constexpr std::size_t kGridPoints = 1001;

    FuzzyRuleBase(std::array<LinguisticVariable, 4> inputs, LinguisticVariable output, std::vector<Rule> rules,
                  std::vector<Band> bands);

    // Reconstructed membership shapes with the eight standard rules.
    static FuzzyRuleBase defaults();
    // JSON document in the schema written by serialize(); throws DomainError on schema violations.
    static FuzzyRuleBase parse(std::string_view json_text);
    static FuzzyRuleBase load_file(const std::string& path);
    std::string serialize() const;

    const LinguisticVariable& input(InputVar v) const noexcept { return inputs_[static_cast<std::size_t>(v)]; }
    const LinguisticVariable& output() const noexcept { return output_; }
    const std::vector<Rule>& rules() const noexcept { return rules_; }
    const std::vector<Band>& bands() const noexcept { return bands_; }

    friend bool operator==(const FuzzyRuleBase&, const FuzzyRuleBase&) = default;

private:
    std::array<LinguisticVariable, 4> inputs_;
    LinguisticVariable output_;
    std::vector<Rule> rules_;
    std::vector<Band> bands_;
};

// Throws NoRecommendationError when no rule fires.
Inference infer(const SelectorInput& input, const FuzzyRuleBase& base);

// Band lookup; none when the score is not inside any band (e.g. <= 0.1 with the defaults).
std::optional<std::string> classify(double score, const FuzzyRuleBase& base);

// grid x grid scores over the universes of axis1 (rows) and axis2 (columns), other inputs
// taken from fixed. Cells where no rule fires hold NaN. Throws DomainError for grid < 2 or equal axes.
std::vector<std::vector<double>> response_surface(const FuzzyRuleBase& base, InputVar axis1, InputVar axis2,
                                                  const SelectorInput& fixed, std::size_t grid);

// The axis values used by response_surface for one input.
std::vector<double> surface_axis(const FuzzyRuleBase& base, InputVar axis, std::size_t grid);

} // namespace dht
