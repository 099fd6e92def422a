#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dht {

// Base of every error this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the documented domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// p0 == p1 (or otherwise no separation between the hypotheses).
class DegenerateSpecError : public DomainError {
public:
    using DomainError::DomainError;
};

// Numerical failure inside a solver, e.g. a singular Jacobian.
class SolverError : public Error {
public:
    using Error::Error;
};

// A scan or iteration ran out of budget without meeting its stop rule.
// Carries the closest approach so callers can report it.
class NoConvergenceError : public Error {
public:
    NoConvergenceError(const std::string& what, double best_gap, std::int64_t best_n, std::int64_t iterations)
        : Error(what), best_gap_(best_gap), best_n_(best_n), iterations_(iterations)
    {
    }

    double best_gap() const noexcept { return best_gap_; }
    std::int64_t best_n() const noexcept { return best_n_; }
    std::int64_t iterations() const noexcept { return iterations_; }

private:
    double best_gap_;
    std::int64_t best_n_;
    std::int64_t iterations_;
};

// No fuzzy rule fired, so the defuzzified score is undefined.
class NoRecommendationError : public Error {
public:
    using Error::Error;
};

// observe() called on a state that already reached a verdict.
class StateMachineError : public Error {
public:
    using Error::Error;
};

// Building a level ladder failed; the message names the offending pair.
class LadderError : public Error {
public:
    LadderError(const std::string& what, std::size_t pair_index) : Error(what), pair_index_(pair_index) {}
    std::size_t pair_index() const noexcept { return pair_index_; }

private:
    std::size_t pair_index_;
};

// Malformed outcome token in an input stream.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line) : Error(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace dht
