#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "paritail/market.hpp"
#include "paritail/rewards.hpp"

namespace paritail {

enum class PolicyKind { RationalGreedy, Lazy, Imitator };

struct Policy {
    PolicyKind kind = PolicyKind::Lazy;
    // Fraction of the budget a greedy server moves per opportunity. Full
    // moves can oscillate when budgets are coarse, so it is a knob.
    double move_fraction = 1.0;
};

// One adaptive-market run: Poisson request arrivals per file, periodic
// broadcast of the bandwidth profile, and per-server Poisson reallocation
// opportunities where each server applies its policy against the last
// broadcast (stale) profile.
struct SimConfig {
    DemandModel demand;
    double horizon;
    double broadcast_interval;
    std::vector<Policy> policies;          // one per server
    double reallocation_rate;              // per-server Poisson rate
    std::uint64_t seed = 0;
    DiscountParams discount{1.0};
    std::optional<BeliefMatrix> beliefs;   // default: everyone sees true probs
    std::optional<AllocationMatrix> initial;  // default: uniform
};

enum class EventKind { Broadcast, Request, Reallocation };

struct SimEvent {
    double time;
    EventKind kind;
    std::int64_t file = -1;    // requests only
    std::int64_t server = -1;  // reallocations only
};

struct SimTrace {
    std::vector<double> times;  // strictly increasing event timestamps
    std::vector<SimEvent> events;
    std::vector<double> snapshot_times;
    std::vector<BandwidthProfile> pi_snapshots;
    std::vector<double> gap_series;  // max_j |pi_j - p_j| per broadcast
    RewardLedger ledger;
    std::uint64_t settled = 0;
    std::uint64_t dropped = 0;
    std::uint64_t arrivals = 0;
    BandwidthProfile final_pi;
};

/// Deterministic per (config, seed). Requests for unserved files are
/// dropped and tallied, never silently settled.
SimTrace run_market(const SimConfig& cfg);

/// Distance from the efficient limit pi_j = p_j: max_j |pi_j - p_j| after
/// renormalizing pi to sum one.
double efficiency_gap(const BandwidthProfile& pi, const DemandModel& dm);

// A newly released file held by one server: its bandwidth fraction grows as
// d(pi) = pi dt while downloaders immediately re-serve, saturating at the
// file's demand share p.
struct BootstrapConfig {
    double p;    // target request probability of the new file
    double pi0;  // initial bandwidth fraction, 0 < pi0 <= p
    double dt;   // integration step
};

struct BootstrapResult {
    std::vector<std::pair<double, double>> series;  // (t, pi(t)), capped at p
    double t_hit;  // first time pi(t) >= p
};

/// Explicit two-stage integration with the crossing time interpolated
/// inside the final step; |t_hit - log(p/pi0)| stays well inside 2*dt.
BootstrapResult bootstrap_trajectory(const BootstrapConfig& cfg);

/// Closed form: time for the bandwidth share to grow from pi0 to p.
double bootstrap_time(double p, double pi0);

// M/M/1-style mean-delay proxy sum_j p_j / (capacity*pi_j - lambda_j).
// Throws unstable(j) when some requested file is served below its demand.
double download_time_proxy(const BandwidthProfile& pi, const DemandModel& dm,
                           double capacity);

}  // namespace paritail
