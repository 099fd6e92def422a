#pragma once

// Plan computation for the double hypothesis test: given two defect rates
// p0 < p1, find trials n, acceptance number c and threshold t_h such that a
// lot is accepted when failures <= c-1 and rejected when failures >= c.

#include "dht/stat_kernels.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dht {

enum class Method { bin, poiss, norm_n, norm_i };

// "Bin", "Poiss", "Norm_N", "Norm_I".
std::string_view method_name(Method m) noexcept;
// Accepts the display names and the lower-case CLI spellings (bin, poiss, norm-n, norm-i).
std::optional<Method> parse_method(std::string_view text) noexcept;
// Tolerance each method uses when the caller does not choose one.
double default_epsilon(Method m) noexcept;

struct TestSpec {
    double p0 = 0.0;
    double p1 = 0.0;
    TailMass alpha_tail{0.05};
    TailMass beta_tail{0.05};
    double epsilon = 1e-4;
    Count max_n = 1'000'000;
    bool paper_compat_z = true;

    static TestSpec make(double p0, double p1, double epsilon = 1e-4);

    // Throws DegenerateSpecError when p0 == p1, DomainError for anything else out of range.
    void validate() const;
    double z_alpha() const;
    double z_beta() const;
};

struct Applicability {
    bool np0_gt5 = false;
    bool nq0_gt5 = false;
    bool p_lt_0_1 = false;
    // False for normal-approximation plans with n*p0 <= 5.
    bool meaningful = true;
};

struct SamplingPlan {
    Count n = 0;
    Count c = 0;
    double t_h = 0.0;
    double np0 = 0.0;
    Method method = Method::norm_n;
    Count iterations = 0;
    bool converged = false;
    Applicability applicability;
    // Real-valued trial count before rounding (Norm_N only, otherwise n).
    double n_real = 0.0;
    // Final value of the method's stop statistic.
    double gap = 0.0;
    std::vector<std::string> warnings;
};

struct NewtonState {
    double x1 = 0.0;  // threshold iterate
    double x2 = 0.0;  // trial-count iterate, kept > 0
    double residual_norm = 0.0;
    double step_norm = 0.0;
};

struct ClosedForm {
    double n_real;
    double t_h;
};

struct NewtonOptions {
    Count max_iterations = 10000;
    double step_tolerance = 1e-9;
    double residual_tolerance = 1e-8;
};

// Exact real solution of the two normal-bound equations.
ClosedForm closed_form_norm(const TestSpec& spec);

// Default start: x1 at the midpoint of p0 and p1, x2 at the closed-form n rounded up.
NewtonState default_newton_init(const TestSpec& spec);

SamplingPlan solve_norm_newton(const TestSpec& spec, const NewtonState& init, const NewtonOptions& options = {});
SamplingPlan solve_norm_newton(const TestSpec& spec);

// Unit-step scan over n; throws NoConvergenceError when max_n is reached.
SamplingPlan solve_norm_iterative(const TestSpec& spec);

// Discrete scans with Binomial and Poisson models; throw NoConvergenceError at max_n.
SamplingPlan solve_bin(const TestSpec& spec);
SamplingPlan solve_poiss(const TestSpec& spec);

// Dispatch on method. Norm_N uses the default initial state.
SamplingPlan solve(Method method, const TestSpec& spec);

Applicability applicability_report(const SamplingPlan& plan, const TestSpec& spec);

} // namespace dht
