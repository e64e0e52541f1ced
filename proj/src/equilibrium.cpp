#include "paritail/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "paritail/errors.hpp"
#include "paritail/rng.hpp"

namespace paritail {

namespace {

constexpr double kZeroMass = 1e-15;      // opponent bandwidth below this counts as absent
constexpr std::size_t kGridPointCap = 50000;
constexpr std::size_t kAscentSteps = 200;

// Payoff against fixed opponent masses o_j, as a function of own bids x_j:
//   f(x) = sum_j p_j * x_j / (o_j + x_j)
// with the capture convention x_j > 0, o_j = 0 -> full p_j.
double own_payoff(std::span<const double> x, std::span<const double> p,
                  std::span<const double> o) {
    double f = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j] <= 0.0 || p[j] <= 0.0) continue;
        double denom = o[j] + x[j];
        f += denom > 0.0 ? p[j] * x[j] / denom : p[j];
    }
    return f;
}

// Recursive enumeration of the simplex grid {x : x_j = k_j * h, sum k_j = steps}
// over the active files, keeping the best point.
void grid_search(std::span<const std::size_t> files, std::size_t idx,
                 std::size_t steps_left, double h, std::vector<double>& point,
                 std::span<const double> p, std::span<const double> o,
                 std::vector<double>& best, double& best_value) {
    if (idx + 1 == files.size()) {
        point[files[idx]] = static_cast<double>(steps_left) * h;
        double v = own_payoff(point, p, o);
        if (v > best_value) {
            best_value = v;
            best = point;
        }
        point[files[idx]] = 0.0;
        return;
    }
    for (std::size_t k = 0; k <= steps_left; ++k) {
        point[files[idx]] = static_cast<double>(k) * h;
        grid_search(files, idx + 1, steps_left - k, h, point, p, o, best,
                    best_value);
    }
    point[files[idx]] = 0.0;
}

std::size_t grid_point_count(std::size_t steps, std::size_t bins) {
    // C(steps + bins - 1, bins - 1), saturating at the cap.
    double c = 1.0;
    for (std::size_t i = 1; i < bins; ++i) {
        c *= static_cast<double>(steps + i) / static_cast<double>(i);
        if (c > static_cast<double>(kGridPointCap) * 2.0) break;
    }
    return static_cast<std::size_t>(std::min(c, 1e18));
}

// Maximize f over {x >= 0 on `files`, sum x = budget}: simplex-grid start,
// then multiplicative reweighting by the gradient with a backtracking blend
// so the payoff never decreases.
void ascend(std::span<const std::size_t> files, double budget,
            std::span<const double> p, std::span<const double> o,
            std::size_t grid, std::vector<double>& x) {
    if (files.empty() || budget <= 0.0) return;
    if (files.size() == 1) {
        x[files[0]] = budget;
        return;
    }

    std::size_t steps = std::max<std::size_t>(grid, 2) - 1;
    double h = budget / static_cast<double>(steps);

    std::vector<double> start(x.size(), 0.0);
    if (grid_point_count(steps, files.size()) <= kGridPointCap) {
        std::vector<double> point(x.size(), 0.0);
        double best_value = -1.0;
        grid_search(files, 0, steps, h, point, p, o, start, best_value);
    } else {
        // Too many grid points: start proportional to beliefs instead. The
        // objective is concave here (all o_j > 0), so the basin is global.
        double p_sum = 0.0;
        for (std::size_t j : files) p_sum += p[j];
        for (std::size_t j : files) start[j] = budget * p[j] / p_sum;
    }

    // Interior blend so no coordinate is stuck at zero mass.
    double uniform = budget / static_cast<double>(files.size());
    for (std::size_t j : files) start[j] = 0.99 * start[j] + 0.01 * uniform;

    std::vector<double> grad(x.size(), 0.0), cand(x.size(), 0.0);
    double value = own_payoff(start, p, o);
    for (std::size_t step = 0; step < kAscentSteps; ++step) {
        double weight_sum = 0.0;
        for (std::size_t j : files) {
            double denom = o[j] + start[j];
            grad[j] = p[j] * o[j] / (denom * denom);
            weight_sum += start[j] * grad[j];
        }
        if (weight_sum <= 0.0) break;

        double improved = value;
        double s = 1.0;
        bool accepted = false;
        while (s > 1e-8) {
            for (std::size_t j : files) {
                double target = budget * start[j] * grad[j] / weight_sum;
                cand[j] = (1.0 - s) * start[j] + s * target;
            }
            double v = own_payoff(cand, p, o);
            if (v >= value) {
                improved = v;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) break;
        for (std::size_t j : files) start[j] = cand[j];
        if (improved - value < 1e-16 && step > 8) {
            value = improved;
            break;
        }
        value = improved;
    }

    for (std::size_t j : files) x[j] = start[j];
}

}  // namespace

GameSpec::GameSpec(std::vector<double> b, BeliefMatrix pb)
    : budgets(std::move(b)), beliefs(std::move(pb)) {
    if (budgets.size() != beliefs.servers())
        throw invariant_error("one budget per belief row required");
    for (double v : budgets)
        if (!(v > 0.0)) throw invariant_error("budgets must be positive");
}

double payoff(const AllocationMatrix& a, std::size_t server,
              const GameSpec& g) {
    auto pi = bandwidth_profile(a);
    double f = 0.0;
    for (std::size_t j = 0; j < a.files(); ++j) {
        double b = a.bid(server, j);
        if (b == 0.0) continue;
        f += g.beliefs.at(server, j) * b / pi.pi[j];
    }
    return f;
}

std::vector<double> best_response(const AllocationMatrix& a,
                                  std::size_t server, const GameSpec& g,
                                  std::size_t grid) {
    const std::size_t n = a.files();
    if (grid < 2) throw invariant_error("grid must be >= 2");
    double budget = g.budgets[server];
    auto beliefs = g.beliefs.row(server);

    auto pi = bandwidth_profile(a);
    std::vector<double> opponents(n);
    for (std::size_t j = 0; j < n; ++j)
        opponents[j] = std::max(pi.pi[j] - a.bid(server, j), 0.0);

    double belief_sum = std::accumulate(beliefs.begin(), beliefs.end(), 0.0);
    if (belief_sum <= 0.0)
        throw degenerate_game("belief row carries no signal to allocate against");

    // Files nobody else serves are captured fully by any positive bid;
    // contested files get the rest of the budget via the search.
    std::vector<std::size_t> free_files, contested;
    for (std::size_t j = 0; j < n; ++j) {
        if (beliefs[j] <= 0.0) continue;
        (opponents[j] <= kZeroMass ? free_files : contested).push_back(j);
    }

    std::vector<double> x(n, 0.0);
    if (contested.empty()) {
        // Own-bid cancellation: payoff depends only on the support, so the
        // proportional allocation is the canonical optimum.
        double p_sum = 0.0;
        for (std::size_t j : free_files) p_sum += beliefs[j];
        for (std::size_t j : free_files) x[j] = budget * beliefs[j] / p_sum;
        return x;
    }

    double capture_each = 0.0;
    if (!free_files.empty()) {
        capture_each =
            std::min(budget / static_cast<double>(grid - 1),
                     0.5 * budget / static_cast<double>(free_files.size()));
        for (std::size_t j : free_files) x[j] = capture_each;
    }
    double remaining =
        budget - capture_each * static_cast<double>(free_files.size());

    ascend(contested, remaining, beliefs, opponents, grid, x);
    return x;
}

EquilibriumResult solve_nash(const GameSpec& g, double tol,
                             std::size_t max_rounds, std::uint64_t seed) {
    if (!(tol > 0.0)) throw invariant_error("tolerance must be positive");
    const std::size_t m = g.budgets.size();
    const std::size_t n = g.beliefs.files();

    double budget_total = std::accumulate(g.budgets.begin(), g.budgets.end(), 0.0);
    if (std::abs(budget_total - 1.0) > AllocationMatrix::kNormalizationTol)
        throw invariant_error("game budgets must sum to 1");

    // Proportional-to-belief start: rows already sum to each budget.
    std::vector<double> bids(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            bids[i * n + j] = g.budgets[i] * g.beliefs.at(i, j);
    AllocationMatrix a(m, n, std::move(bids), g.budgets);

    if (m == 1)
        return EquilibriumResult{std::move(a), 0, 0.0, true, true};

    Rng rng(seed);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);

    double residual = std::numeric_limits<double>::infinity();
    std::size_t rounds = 0;
    bool converged = false;
    while (rounds < max_rounds) {
        ++rounds;
        // Seeded shuffle: symmetric games settle faster without a fixed
        // update order, and the result stays deterministic per seed.
        for (std::size_t i = m; i > 1; --i)
            std::swap(order[i - 1], order[rng.index(i)]);

        residual = 0.0;
        for (std::size_t i : order) {
            double before = payoff(a, i, g);
            auto row = best_response(a, i, g);
            auto cand = a.with_row(i, row);
            double after = payoff(cand, i, g);
            if (after > before) {
                a = std::move(cand);
                residual = std::max(residual, after - before);
            }
        }
        if (residual <= tol) {
            converged = true;
            break;
        }
    }
    return EquilibriumResult{std::move(a), rounds, residual, converged, false};
}

std::vector<double> greedy_ratio_allocation(std::span<const double> beliefs_row,
                                            const BandwidthProfile& pi,
                                            double budget) {
    const std::size_t n = beliefs_row.size();
    if (pi.files() != n) throw invariant_error("profile/belief size mismatch");
    if (!(budget > 0.0)) throw invariant_error("budget must be positive");

    // Ratio p/pi, with unserved-but-believed files infinitely attractive.
    std::vector<double> ratio(n);
    double best = -1.0;
    bool any_signal = false;
    for (std::size_t j = 0; j < n; ++j) {
        double p = beliefs_row[j];
        if (p > 0.0 || pi.pi[j] > 0.0) any_signal = true;
        if (p <= 0.0)
            ratio[j] = 0.0;
        else if (pi.pi[j] <= 0.0)
            ratio[j] = std::numeric_limits<double>::infinity();
        else
            ratio[j] = p / pi.pi[j];
        best = std::max(best, ratio[j]);
    }
    if (!any_signal)
        throw degenerate_game("no served file and no positive belief");

    std::vector<std::size_t> argmax;
    for (std::size_t j = 0; j < n; ++j) {
        if (std::isinf(best) ? std::isinf(ratio[j])
                             : ratio[j] >= best * (1.0 - 1e-12))
            argmax.push_back(j);
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t j : argmax)
        x[j] = budget / static_cast<double>(argmax.size());
    return x;
}

double consensus_diagnostic(const GameSpec& g, const AllocationMatrix& a) {
    double score = 0.0;
    for (std::size_t i = 0; i < a.servers(); ++i) {
        double u = payoff(a, i, g);
        if (!(u > 0.0)) throw nonpositive_payoff(i);
        score += g.budgets[i] * std::log(u / g.budgets[i]);
    }
    return score;
}

}  // namespace paritail
