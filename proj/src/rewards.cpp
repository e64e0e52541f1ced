#include "paritail/rewards.hpp"

#include <cmath>
#include <numeric>

#include "paritail/errors.hpp"
#include "paritail/rng.hpp"

namespace paritail {

DiscountParams::DiscountParams(double d) : delta(d) {
    if (!(delta > 0.0)) throw invariant_error("discount factor must be positive");
}

RewardLedger RewardLedger::zero(std::size_t servers, std::size_t files) {
    return RewardLedger{std::vector<double>(servers, 0.0),
                        std::vector<double>(servers, 0.0),
                        std::vector<std::uint64_t>(files, 0)};
}

std::uint64_t RewardLedger::total_requests() const {
    return std::accumulate(requests_served.begin(), requests_served.end(),
                           std::uint64_t{0});
}

namespace {

double column_bandwidth(const AllocationMatrix& a, std::size_t file) {
    double pi = 0.0;
    for (std::size_t i = 0; i < a.servers(); ++i) pi += a.bid(i, file);
    return pi;
}

}  // namespace

double proportional_share(const AllocationMatrix& a, std::size_t server,
                          std::size_t file) {
    double pi = column_bandwidth(a, file);
    if (pi <= 0.0) throw zero_bandwidth(file);
    return a.bid(server, file) / pi;
}

RewardLedger settle_request(RewardLedger ledger, const AllocationMatrix& a,
                            std::size_t file, double time,
                            const DiscountParams& d) {
    double pi = column_bandwidth(a, file);
    if (pi <= 0.0) throw zero_bandwidth(file);
    double weight = std::exp(-d.delta * time);
    for (std::size_t i = 0; i < a.servers(); ++i) {
        double b = a.bid(i, file);
        if (b == 0.0) continue;
        double share = b / pi;
        ledger.cumulative[i] += share;
        ledger.discounted[i] += share * weight;
    }
    ledger.requests_served[file] += 1;
    return ledger;
}

double expected_utility(const AllocationMatrix& a, std::size_t server,
                        const DemandModel& dm, const DiscountParams& d) {
    const auto& p = dm.probs();
    double sum = 0.0;
    for (std::size_t j = 0; j < a.files(); ++j) {
        double b = a.bid(server, j);
        if (b == 0.0) continue;
        sum += p[j] * b / column_bandwidth(a, j);
    }
    return dm.total_rate() / d.delta * sum;
}

double per_file_utility_factor(double rate, const DiscountParams& d) {
    if (!(rate > 0.0)) throw invariant_error("rate must be positive");
    return rate / d.delta;
}

MonteCarloEstimate monte_carlo_utility_factor(double rate,
                                              const DiscountParams& d,
                                              std::size_t paths, double horizon,
                                              std::uint64_t seed) {
    if (paths == 0) throw invariant_error("need at least one path");
    if (!(rate > 0.0)) throw invariant_error("rate must be positive");

    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t path = 0; path < paths; ++path) {
        Rng rng(child_seed(seed, "mc-path", path));
        double t = 0.0, discounted = 0.0;
        for (;;) {
            t += rng.exponential(rate);
            if (t > horizon) break;
            discounted += std::exp(-d.delta * t);
        }
        sum += discounted;
        sum_sq += discounted * discounted;
    }
    double mean = sum / static_cast<double>(paths);
    double std_error = 0.0;
    if (paths > 1) {
        double var = (sum_sq - sum * mean) / static_cast<double>(paths - 1);
        std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(paths));
    }
    return MonteCarloEstimate{mean, std_error};
}

}  // namespace paritail
