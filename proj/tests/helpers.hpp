#pragma once

// Test-only helpers and independent oracles. Everything here re-derives
// expected behavior from first principles (grid search, exhaustive
// enumeration, direct formula evaluation) and must stay independent of the
// library code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "paritail/market.hpp"

namespace testutil {

// Deterministic uniform helper for generator-style property tests.
class TestRng {
  public:
    explicit TestRng(std::uint64_t seed) : engine_(seed) {}
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

  private:
    std::mt19937_64 engine_;
};

// Random valid allocation: budgets on the unit simplex, rows filled to a
// random fraction of each budget (possibly underused).
inline paritail::AllocationMatrix random_allocation(std::size_t m, std::size_t n,
                                                    TestRng& rng,
                                                    bool full_rows = false) {
    std::vector<double> budgets(m);
    double total = 0.0;
    for (auto& b : budgets) {
        b = rng.uniform(0.1, 1.0);
        total += b;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        budgets[i] /= total;
        acc += budgets[i];
    }
    budgets[m - 1] = 1.0 - acc;

    std::vector<double> bids(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> weights(n);
        double wsum = 0.0;
        for (auto& w : weights) {
            w = rng.uniform();
            wsum += w;
        }
        double use = full_rows ? 1.0 : rng.uniform(0.2, 1.0);
        for (std::size_t j = 0; j < n; ++j)
            bids[i * n + j] = budgets[i] * use * weights[j] / wsum;
    }
    return paritail::AllocationMatrix(m, n, std::move(bids), std::move(budgets));
}

inline std::vector<double> random_simplex(std::size_t n, TestRng& rng) {
    std::vector<double> v(n);
    double total = 0.0;
    for (auto& x : v) {
        x = rng.uniform(0.05, 1.0);
        total += x;
    }
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        v[j] /= total;
        acc += v[j];
    }
    v[n - 1] = 1.0 - acc;
    return v;
}

// Direct evaluation of a server's payoff sum_j p_j x_j / (o_j + x_j)
// against fixed opponent masses. Used by the grid oracles below.
inline double contest_payoff(const std::vector<double>& own,
                             const std::vector<double>& beliefs,
                             const std::vector<double>& opponents) {
    double f = 0.0;
    for (std::size_t j = 0; j < own.size(); ++j) {
        if (own[j] <= 0.0) continue;
        double denom = opponents[j] + own[j];
        f += denom > 0.0 ? beliefs[j] * own[j] / denom : beliefs[j];
    }
    return f;
}

// One-dimensional grid best response for two-file games: the full budget is
// split x / (budget - x) over `points` grid values.
inline double grid_best_response_2(const std::vector<double>& beliefs,
                                   const std::vector<double>& opponents,
                                   double budget, std::size_t points) {
    double best_x = 0.0, best_value = -1.0;
    for (std::size_t k = 0; k < points; ++k) {
        double x = budget * static_cast<double>(k) /
                   static_cast<double>(points - 1);
        double v = contest_payoff({x, budget - x}, beliefs, opponents);
        if (v > best_value) {
            best_value = v;
            best_x = x;
        }
    }
    return best_x;
}

// Exhaustive fixed point of the two-server, two-file game on a grid:
// alternate grid best responses until neither server moves.
struct GridFixedPoint {
    double x;  // server 0's bid on file 0
    double y;  // server 1's bid on file 0
    bool converged;
};

inline GridFixedPoint grid_nash_2x2(const std::vector<double>& beliefs,
                                    double budget, std::size_t points) {
    double x = budget / 2.0, y = budget / 2.0;
    for (int round = 0; round < 500; ++round) {
        double nx = grid_best_response_2(beliefs, {y, budget - y}, budget, points);
        double ny = grid_best_response_2(beliefs, {nx, budget - nx}, budget, points);
        if (nx == x && ny == y) return {x, y, true};
        x = nx;
        y = ny;
    }
    return {x, y, false};
}

// Exact distribution of count_a after `steps` arrivals of the pure urn
// (alpha = 0, unit seeds): recursive enumeration over the outcome tree with
// the urn's conditional probabilities.
inline std::map<std::uint64_t, double> enumerate_pure_urn(int steps) {
    std::map<std::uint64_t, double> dist;
    struct Walker {
        std::map<std::uint64_t, double>& dist;
        int steps;
        void walk(int t, std::uint64_t count_a, double prob) {
            if (t == steps) {
                dist[count_a] += prob;
                return;
            }
            double pi = static_cast<double>(count_a + 1) /
                        static_cast<double>(t + 2);
            walk(t + 1, count_a + 1, prob * pi);
            walk(t + 1, count_a, prob * (1.0 - pi));
        }
    };
    Walker{dist, steps}.walk(0, 0, 1.0);
    return dist;
}

struct Regression {
    double slope;
    double intercept;
};

inline Regression least_squares(const std::vector<double>& x,
                                const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    auto k = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    return {slope, (sy - slope * sx) / k};
}

}  // namespace testutil
