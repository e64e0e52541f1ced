#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace paritail {

/// Base class for all domain errors thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A constructor argument violates a type invariant.
struct invariant_error : error {
    using error::error;
};

/// A request arrived for a file nobody serves (pi_j == 0). The mechanism is
/// undefined there; callers decide whether to drop the request or bootstrap.
struct zero_bandwidth : error {
    std::size_t file;
    explicit zero_bandwidth(std::size_t f)
        : error("no bandwidth on file " + std::to_string(f)), file(f) {}
};

/// The acting server has no belief signal to allocate against.
struct degenerate_game : error {
    using error::error;
};

/// consensus_diagnostic requires every server to earn a positive payoff.
struct nonpositive_payoff : error {
    std::size_t server;
    explicit nonpositive_payoff(std::size_t s)
        : error("nonpositive payoff for server " + std::to_string(s)), server(s) {}
};

/// Queueing proxy precondition failed: capacity*pi_j <= lambda_j.
struct unstable : error {
    std::size_t file;
    explicit unstable(std::size_t f)
        : error("unstable service of file " + std::to_string(f)), file(f) {}
};

/// Argument outside the mathematical domain of an operation.
struct domain_error : error {
    using error::error;
};

/// Fewer than half the ensemble runs reached the convergence band.
struct censored : error {
    double alpha;
    explicit censored(double a)
        : error("first-passage censored at alpha = " + std::to_string(a)), alpha(a) {}
};

}  // namespace paritail
