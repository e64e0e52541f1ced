#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "paritail/market.hpp"

namespace paritail {

// A finite-budget resource allocation game: each server splits its budget
// across files and earns, per file, its subjective request probability
// weighted by its proportional bandwidth share.
struct GameSpec {
    std::vector<double> budgets;
    BeliefMatrix beliefs;

    GameSpec(std::vector<double> b, BeliefMatrix pb);
};

struct EquilibriumResult {
    AllocationMatrix allocation;
    std::size_t iterations;
    double residual;   // max best-response improvement in the last round
    bool converged;
    bool degenerate;   // own-bid cancellation (single server)
};

/// Subjective expected payoff of one server: sum_j p_ij * b_ij / pi_j.
/// Terms with b_ij == 0 contribute zero.
double payoff(const AllocationMatrix& a, std::size_t server,
              const GameSpec& g);

// Budget allocation maximizing `server`'s payoff against fixed opponents.
// Search: coarse simplex grid (grid points per axis) to locate the basin,
// then damped multiplicative ascent projected back onto the budget simplex.
// Files nobody else serves but the server believes in are captured with the
// minimum grid mass (any positive bid earns the full belief there).
// Throws degenerate_game when the belief row carries no signal.
std::vector<double> best_response(const AllocationMatrix& a,
                                  std::size_t server, const GameSpec& g,
                                  std::size_t grid = 21);

// Round-robin best-response iteration from the proportional-to-belief start
// b_ij = b_i * p_ij. Stops when no server can improve its payoff by more
// than tol; never throws on non-convergence (converged flag instead).
// Requires game budgets summing to 1 so the iterates are valid allocations.
EquilibriumResult solve_nash(const GameSpec& g, double tol,
                             std::size_t max_rounds, std::uint64_t seed);

// Large-m approximation: the whole budget goes to the files with the
// largest belief/bandwidth ratio. Unserved files with positive belief count
// as infinitely attractive; ties split the budget equally.
std::vector<double> greedy_ratio_allocation(std::span<const double> beliefs_row,
                                            const BandwidthProfile& pi,
                                            double budget);

// Budget-weighted sum of log payoff-per-budget: a consensus score for
// comparing candidate allocations under the same game (larger is better).
// Throws nonpositive_payoff if any server earns nothing under `a`.
double consensus_diagnostic(const GameSpec& g, const AllocationMatrix& a);

}  // namespace paritail
