#include "dht/plan_solvers.hpp"

#include "dht/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace dht {

namespace {

Count round_half_up(double x) { return static_cast<Count>(std::floor(x + 0.5)); }

std::string describe(const TestSpec& spec)
{
    return "(p0=" + std::to_string(spec.p0) + ", p1=" + std::to_string(spec.p1) + ")";
}

void finish(SamplingPlan& plan, const TestSpec& spec)
{
    plan.np0 = static_cast<double>(plan.n) * spec.p0;
    plan.applicability = applicability_report(plan, spec);
    if (!plan.converged) plan.warnings.emplace_back("did not converge");
    if (!plan.applicability.meaningful) plan.warnings.emplace_back("n*p0 <= 5: normal approximation not applicable");
    if (plan.method == Method::poiss && !plan.applicability.p_lt_0_1) {
        plan.warnings.emplace_back("p1 >= 0.1: outside the Poisson approximation regime");
    }
}

} // namespace

std::string_view method_name(Method m) noexcept
{
    switch (m) {
    case Method::bin: return "Bin";
    case Method::poiss: return "Poiss";
    case Method::norm_n: return "Norm_N";
    case Method::norm_i: return "Norm_I";
    }
    return "?";
}

std::optional<Method> parse_method(std::string_view text) noexcept
{
    struct Alias {
        std::string_view name;
        Method method;
    };
    static constexpr std::array<Alias, 12> aliases{{
        {"Bin", Method::bin},       {"bin", Method::bin},        {"Poiss", Method::poiss},
        {"poiss", Method::poiss},   {"Norm_N", Method::norm_n},  {"norm-n", Method::norm_n},
        {"norm_n", Method::norm_n}, {"Norm_I", Method::norm_i},  {"norm-i", Method::norm_i},
        {"norm_i", Method::norm_i}, {"poisson", Method::poiss},  {"binomial", Method::bin},
    }};
    for (const auto& a : aliases) {
        if (a.name == text) return a.method;
    }
    return std::nullopt;
}

double default_epsilon(Method m) noexcept
{
    switch (m) {
    case Method::bin: return 0.0019;
    case Method::poiss: return 0.001;
    case Method::norm_n: return 1e-8;
    case Method::norm_i: return 1e-4;
    }
    return 1e-4;
}

TestSpec TestSpec::make(double p0, double p1, double epsilon)
{
    TestSpec spec;
    spec.p0 = p0;
    spec.p1 = p1;
    spec.epsilon = epsilon;
    return spec;
}

void TestSpec::validate() const
{
    if (!std::isfinite(p0) || !std::isfinite(p1)) throw DomainError("p0 and p1 must be finite");
    if (p0 == p1) throw DegenerateSpecError("p0 and p1 are equal: no separation to test");
    if (!(p0 >= 0.0 && p0 < p1 && p1 < 0.5)) throw DomainError("require 0 <= p0 < p1 < 0.5, got " + describe(*this));
    if (!(std::isfinite(epsilon) && epsilon > 0.0)) throw DomainError("epsilon must be > 0");
    if (max_n < 2) throw DomainError("max_n must be >= 2");
}

double TestSpec::z_alpha() const
{
    return z_value(alpha_tail, paper_compat_z ? ZMode::paper : ZMode::exact);
}

double TestSpec::z_beta() const
{
    return z_value(beta_tail, paper_compat_z ? ZMode::paper : ZMode::exact);
}

ClosedForm closed_form_norm(const TestSpec& spec)
{
    if (spec.p0 == spec.p1) throw DegenerateSpecError("p0 and p1 are equal: closed form divides by zero");
    spec.validate();
    const double s0 = std::sqrt(spec.p0 * (1.0 - spec.p0));
    const double s1 = std::sqrt(spec.p1 * (1.0 - spec.p1));
    const double root_n = (spec.z_alpha() * s0 + spec.z_beta() * s1) / (spec.p1 - spec.p0);
    const double n_real = root_n * root_n;
    return {n_real, spec.p0 + spec.z_alpha() * s0 / root_n};
}

NewtonState default_newton_init(const TestSpec& spec)
{
    NewtonState init;
    init.x1 = 0.5 * (spec.p0 + spec.p1);
    init.x2 = std::ceil(closed_form_norm(spec).n_real);
    return init;
}

SamplingPlan solve_norm_newton(const TestSpec& spec, const NewtonState& init, const NewtonOptions& options)
{
    spec.validate();
    if (!(std::isfinite(init.x2) && init.x2 > 0.0) || !std::isfinite(init.x1)) {
        throw DomainError("Newton initial state needs finite x1 and x2 > 0");
    }
    const double a0 = spec.z_alpha() * std::sqrt(spec.p0 * (1.0 - spec.p0));
    const double a1 = spec.z_beta() * std::sqrt(spec.p1 * (1.0 - spec.p1));

    NewtonState s = init;
    auto residuals = [&](double x1, double x2) {
        const double r = std::sqrt(x2);
        return std::array<double, 2>{x1 - spec.p0 - a0 / r, x1 - spec.p1 + a1 / r};
    };

    SamplingPlan plan;
    plan.method = Method::norm_n;
    Count it = 0;
    bool converged = false;
    auto f = residuals(s.x1, s.x2);
    s.residual_norm = std::hypot(f[0], f[1]);
    while (true) {
        if (s.residual_norm < options.residual_tolerance) {
            converged = true;
            break;
        }
        if (it >= options.max_iterations) break;

        const double d = 2.0 * s.x2 * std::sqrt(s.x2);
        const double j12 = a0 / d;
        const double j22 = -a1 / d;
        const double det = j22 - j12;  // J = [[1, j12], [1, j22]]
        if (!std::isfinite(det) || std::abs(det) < std::numeric_limits<double>::min()) {
            throw SolverError("singular Jacobian in Newton iteration for " + describe(spec));
        }
        double dx1 = (j22 * f[0] - j12 * f[1]) / det;
        double dx2 = (f[1] - f[0]) / det;

        // Halve the step until x2 stays positive.
        double scale = 1.0;
        while (s.x2 - scale * dx2 <= 0.0) {
            scale *= 0.5;
            if (scale < 1e-30) throw SolverError("Newton step cannot keep x2 positive for " + describe(spec));
        }
        dx1 *= scale;
        dx2 *= scale;
        s.x1 -= dx1;
        s.x2 -= dx2;
        ++it;
        s.step_norm = std::hypot(dx1, dx2);
        f = residuals(s.x1, s.x2);
        s.residual_norm = std::hypot(f[0], f[1]);
        if (s.step_norm < options.step_tolerance) {
            converged = true;
            break;
        }
    }

    plan.iterations = it;
    plan.converged = converged;
    plan.n_real = s.x2;
    plan.n = std::max<Count>(1, round_half_up(s.x2));
    plan.t_h = s.x1;
    plan.c = static_cast<Count>(std::ceil(s.x1 * s.x2));
    plan.gap = s.residual_norm;
    finish(plan, spec);
    return plan;
}

SamplingPlan solve_norm_newton(const TestSpec& spec)
{
    spec.validate();
    return solve_norm_newton(spec, default_newton_init(spec));
}

SamplingPlan solve_norm_iterative(const TestSpec& spec)
{
    spec.validate();
    const double a0 = spec.z_alpha() * std::sqrt(spec.p0 * (1.0 - spec.p0));
    const double a1 = spec.z_beta() * std::sqrt(spec.p1 * (1.0 - spec.p1));
    double best_gap = std::numeric_limits<double>::infinity();
    Count best_n = 0;
    for (Count n = 1; n <= spec.max_n; ++n) {
        const double r = std::sqrt(static_cast<double>(n));
        const double upper = spec.p0 + a0 / r;
        const double lower = spec.p1 - a1 / r;
        const double gap = std::abs(upper - lower);
        if (gap < best_gap) {
            best_gap = gap;
            best_n = n;
        }
        if (gap < spec.epsilon) {
            SamplingPlan plan;
            plan.method = Method::norm_i;
            plan.n = n;
            plan.n_real = static_cast<double>(n);
            plan.t_h = 0.5 * (upper + lower);
            plan.c = round_half_up(static_cast<double>(n) * plan.t_h);
            plan.iterations = n;
            plan.converged = true;
            plan.gap = gap;
            finish(plan, spec);
            return plan;
        }
    }
    throw NoConvergenceError("Norm_I: no n <= " + std::to_string(spec.max_n) + " brings |U-Lo| below epsilon for "
                                 + describe(spec) + "; best gap " + std::to_string(best_gap) + " at n="
                                 + std::to_string(best_n),
                             best_gap, best_n, spec.max_n);
}

namespace {

CountDistribution model(Method m, Count n, double p)
{
    return m == Method::bin ? CountDistribution::binomial(n, p)
                            : CountDistribution::poisson(static_cast<double>(n) * p);
}

// Shared scan for Bin and Poiss. At each n the threshold is the midpoint of the
// two-sided quantile limits of the p0 and p1 models; the scan stops at the first
// n whose plan meets both half-tail error targets under the same model.
SamplingPlan solve_discrete(Method method, const TestSpec& spec)
{
    spec.validate();
    const double a = spec.alpha_tail.value() / 2.0;
    const double b = spec.beta_tail.value() / 2.0;
    double best_excess = std::numeric_limits<double>::infinity();
    Count best_n = 0;

    for (Count n = 1; n <= spec.max_n; ++n) {
        const CountDistribution d0 = model(method, n, spec.p0);
        const CountDistribution d1 = model(method, n, spec.p1);
        const double nd = static_cast<double>(n);

        double t_h = 0.0;
        double gap = 0.0;
        if (spec.p0 > 0.0) {
            const auto lq = lower_quantile(d1, b);
            if (!lq) continue;
            const Count upper = upper_quantile(d0, a);
            const Count lower = *lq + 1;
            t_h = (static_cast<double>(upper) / nd + static_cast<double>(lower) / nd) / 2.0;
            gap = std::abs(static_cast<double>(upper - lower)) / nd;
        } else {
            t_h = spec.p1 / 2.0;
        }
        const Count c = round_half_up(nd * t_h);
        if (c < 1 || c > n) continue;

        const double alpha = 1.0 - d0.cdf(c - 1);
        const double beta = d1.cdf(c - 1);
        const double excess = std::max(alpha - a, beta - b);
        if (excess < best_excess) {
            best_excess = excess;
            best_n = n;
        }
        if (excess <= 0.0) {
            SamplingPlan plan;
            plan.method = method;
            plan.n = n;
            plan.n_real = nd;
            plan.c = c;
            plan.t_h = t_h;
            plan.iterations = n;
            plan.converged = true;
            plan.gap = gap;
            finish(plan, spec);
            return plan;
        }
    }
    throw NoConvergenceError(std::string(method_name(method)) + ": no n <= " + std::to_string(spec.max_n)
                                 + " meets both error targets for " + describe(spec),
                             best_excess, best_n, spec.max_n);
}

} // namespace

SamplingPlan solve_bin(const TestSpec& spec) { return solve_discrete(Method::bin, spec); }

SamplingPlan solve_poiss(const TestSpec& spec) { return solve_discrete(Method::poiss, spec); }

SamplingPlan solve(Method method, const TestSpec& spec)
{
    switch (method) {
    case Method::bin: return solve_bin(spec);
    case Method::poiss: return solve_poiss(spec);
    case Method::norm_n: return solve_norm_newton(spec);
    case Method::norm_i: return solve_norm_iterative(spec);
    }
    throw DomainError("unknown method");
}

Applicability applicability_report(const SamplingPlan& plan, const TestSpec& spec)
{
    Applicability a;
    const double n = static_cast<double>(plan.n);
    a.np0_gt5 = n * spec.p0 > 5.0;
    a.nq0_gt5 = n * (1.0 - spec.p0) > 5.0;
    a.p_lt_0_1 = spec.p1 < 0.1;
    const bool normal = plan.method == Method::norm_n || plan.method == Method::norm_i;
    a.meaningful = !normal || a.np0_gt5;
    return a;
}

} // namespace dht
