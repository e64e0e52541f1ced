#pragma once

#include <cstdint>
#include <vector>

#include "paritail/market.hpp"

namespace paritail {

/// Future discount factor delta > 0 per unit time.
struct DiscountParams {
    double delta;
    explicit DiscountParams(double d);
};

// Cumulative and discounted payouts per server, plus served-request counts
// per file. Every settled request redistributes exactly one unit fee across
// the servers of the requested file.
struct RewardLedger {
    std::vector<double> cumulative;
    std::vector<double> discounted;
    std::vector<std::uint64_t> requests_served;

    static RewardLedger zero(std::size_t servers, std::size_t files);

    std::uint64_t total_requests() const;
};

// Fraction q_ij = b_ij / pi_j of the download served (and paid) to server i
// for a request of file j. Throws zero_bandwidth when pi_j == 0.
double proportional_share(const AllocationMatrix& a, std::size_t server,
                          std::size_t file);

// Settles one request for `file` at absolute time `time`: each server with a
// positive bid on the file receives its proportional share, both raw and
// weighted by exp(-delta*time). Pure transition; throws zero_bandwidth when
// nobody serves the file.
RewardLedger settle_request(RewardLedger ledger, const AllocationMatrix& a,
                            std::size_t file, double time,
                            const DiscountParams& d);

// Closed-form expected discounted utility of one server:
//   (lambda/delta) * sum_j p_j b_ij / pi_j
// Terms with b_ij == 0 contribute zero even when pi_j == 0.
double expected_utility(const AllocationMatrix& a, std::size_t server,
                        const DemandModel& dm, const DiscountParams& d);

/// Per-file discounted utility factor u_j = lambda_j / delta.
double per_file_utility_factor(double rate, const DiscountParams& d);

struct MonteCarloEstimate {
    double mean;
    double std_error;
};

/// Default simulation horizon: discount residual exp(-20) ~ 2e-9.
inline double default_mc_horizon(const DiscountParams& d) {
    return 20.0 / d.delta;
}

// Independent oracle for the closed form u_j = lambda/delta: simulates
// Poisson arrival paths with exponential inter-arrivals and averages the
// discounted lump sums sum_l exp(-delta * t_l) over paths. Each path draws
// from its own child seed, so the estimate does not depend on scheduling.
MonteCarloEstimate monte_carlo_utility_factor(double rate,
                                              const DiscountParams& d,
                                              std::size_t paths, double horizon,
                                              std::uint64_t seed);

}  // namespace paritail
