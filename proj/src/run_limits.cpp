#include "dht/run_limits.hpp"

#include "dht/errors.hpp"

#include <cmath>

namespace dht {

namespace {

constexpr int kMaxIterations = 200;
constexpr double kStepTolerance = 1e-9;
// Guards the ceiling against a fixed point that lands a rounding error above an integer.
constexpr double kCeilSlack = 1e-7;

} // namespace

SflResult sfl_r(const SflQuery& q)
{
    if (!(std::isfinite(q.p) && q.p > 0.0 && q.p < 1.0)) throw DomainError("sfl_r: p must lie in (0, 1)");
    if (!(std::isfinite(q.ex) && q.ex >= 1.0)) throw DomainError("sfl_r: ex must be >= 1");
    const double scale = q.ex * (1.0 - q.p);
    if (!(scale > 1.0)) throw DomainError("sfl_r: no fixed point, ex * (1 - p) must exceed 1");

    const double log_p = std::log(q.p);
    SflResult out;
    double r = 1.0;
    for (int i = 1; i <= kMaxIterations; ++i) {
        const double next = std::log((1.0 - std::pow(q.p, r)) / scale) / log_p;
        const double step = std::abs(next - r);
        r = next;
        out.iterations = i;
        if (step < kStepTolerance) {
            out.converged = true;
            break;
        }
    }
    out.r_raw = r;
    out.r = static_cast<Count>(std::ceil(r - kCeilSlack));
    return out;
}

double mean_recurrence(double p, Count r)
{
    if (!(std::isfinite(p) && p > 0.0 && p < 1.0)) throw DomainError("mean_recurrence: p must lie in (0, 1)");
    if (r < 1) throw DomainError("mean_recurrence: r must be >= 1");
    const double pr = std::pow(p, static_cast<double>(r));
    return (1.0 - pr) / ((1.0 - p) * pr);
}

} // namespace dht
