#pragma once

// Successive failures limit: the longest run of consecutive defects that is
// still plausible at defect rate p within a recurrence horizon of ex events.

#include "dht/stat_kernels.hpp"

namespace dht {

struct SflQuery {
    double p = 0.0;    // defect probability of one Bernoulli event
    double ex = 1e6;   // mean recurrence horizon, in events
};

struct SflResult {
    double r_raw = 0.0;  // fixed point of the run-length equation
    Count r = 0;         // ceiling of r_raw; a longer run rejects the level
    int iterations = 0;
    bool converged = false;
};

// Fixed-point iteration from r = 1. Throws DomainError when p is outside (0, 1),
// ex < 1, or ex * (1 - p) <= 1 (no fixed point).
SflResult sfl_r(const SflQuery& q);

// Mean number of events between completions of a run of r defects at rate p:
// (1 - p^r) / ((1 - p) p^r).
double mean_recurrence(double p, Count r);

} // namespace dht
