#include "paritail/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "paritail/equilibrium.hpp"
#include "paritail/errors.hpp"
#include "paritail/rng.hpp"

namespace paritail {

namespace {

constexpr double kZeroMass = 1e-15;

void validate(const SimConfig& cfg) {
    if (!(cfg.horizon > 0.0)) throw invariant_error("horizon must be positive");
    if (!(cfg.broadcast_interval > 0.0))
        throw invariant_error("broadcast interval must be positive");
    if (!(cfg.reallocation_rate >= 0.0))
        throw invariant_error("reallocation rate must be >= 0");
    if (cfg.policies.empty()) throw invariant_error("need at least one server");
    for (const auto& p : cfg.policies)
        if (!(p.move_fraction > 0.0) || p.move_fraction > 1.0)
            throw invariant_error("move fraction must be in (0, 1]");
    std::size_t m = cfg.policies.size();
    std::size_t n = cfg.demand.files();
    if (cfg.beliefs && (cfg.beliefs->servers() != m || cfg.beliefs->files() != n))
        throw invariant_error("belief matrix shape mismatch");
    if (cfg.initial &&
        (cfg.initial->servers() != m || cfg.initial->files() != n))
        throw invariant_error("initial allocation shape mismatch");
}

}  // namespace

SimTrace run_market(const SimConfig& cfg) {
    validate(cfg);
    const std::size_t m = cfg.policies.size();
    const std::size_t n = cfg.demand.files();
    const auto& probs = cfg.demand.probs();

    AllocationMatrix a =
        cfg.initial ? *cfg.initial : AllocationMatrix::uniform(m, n);
    BeliefMatrix beliefs =
        cfg.beliefs ? *cfg.beliefs : BeliefMatrix::common(m, probs);

    SimTrace trace;
    trace.ledger = RewardLedger::zero(m, n);

    std::vector<double> pi = column_sums(a.bids(), m, n);
    BandwidthProfile last_broadcast{pi};

    auto snapshot = [&](double t) {
        pi = column_sums(a.bids(), m, n);  // exact resync kills drift
        last_broadcast = BandwidthProfile{pi};
        trace.snapshot_times.push_back(t);
        trace.pi_snapshots.push_back(last_broadcast);
        trace.gap_series.push_back(efficiency_gap(last_broadcast, cfg.demand));
    };

    Rng rng(cfg.seed);
    const double lambda = cfg.demand.total_rate();
    const double realloc_total =
        cfg.reallocation_rate * static_cast<double>(m);

    // The profile is published at t = 0 so policies have something to act
    // on before the first scheduled broadcast.
    snapshot(0.0);
    trace.events.push_back({0.0, EventKind::Broadcast});
    trace.times.push_back(0.0);

    double next_request = rng.exponential(lambda);
    double next_broadcast = cfg.broadcast_interval;
    double next_realloc = realloc_total > 0.0
                              ? rng.exponential(realloc_total)
                              : std::numeric_limits<double>::infinity();

    std::vector<double> new_row(n);
    for (;;) {
        double t = std::min({next_broadcast, next_request, next_realloc});
        if (t > cfg.horizon) break;

        if (t == next_broadcast) {
            snapshot(t);
            trace.events.push_back({t, EventKind::Broadcast});
            next_broadcast += cfg.broadcast_interval;
        } else if (t == next_request) {
            ++trace.arrivals;
            double u = rng.uniform();
            std::size_t file = n - 1;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                acc += probs[j];
                if (u < acc) {
                    file = j;
                    break;
                }
            }
            if (pi[file] <= kZeroMass) {
                ++trace.dropped;
            } else {
                trace.ledger = settle_request(std::move(trace.ledger), a, file,
                                              t, cfg.discount);
                ++trace.settled;
            }
            trace.events.push_back(
                {t, EventKind::Request, static_cast<std::int64_t>(file)});
            next_request = t + rng.exponential(lambda);
        } else {
            std::size_t server = rng.index(m);
            const Policy& policy = cfg.policies[server];
            auto old_row = a.row(server);
            bool moved = false;
            switch (policy.kind) {
                case PolicyKind::Lazy:
                    break;
                case PolicyKind::RationalGreedy: {
                    auto target = greedy_ratio_allocation(
                        beliefs.row(server), last_broadcast, a.budget(server));
                    double f = policy.move_fraction;
                    for (std::size_t j = 0; j < n; ++j)
                        new_row[j] = (1.0 - f) * old_row[j] + f * target[j];
                    moved = true;
                    break;
                }
                case PolicyKind::Imitator: {
                    if (m < 2) break;
                    std::size_t other = rng.index(m - 1);
                    if (other >= server) ++other;
                    auto model = a.row(other);
                    double mass = 0.0;
                    for (double b : model) mass += b;
                    if (mass <= 0.0) break;
                    double scale = a.budget(server) / mass;
                    for (std::size_t j = 0; j < n; ++j)
                        new_row[j] = model[j] * scale;
                    moved = true;
                    break;
                }
            }
            if (moved) {
                for (std::size_t j = 0; j < n; ++j) {
                    pi[j] += new_row[j] - old_row[j];
                    if (pi[j] < 0.0) pi[j] = 0.0;
                }
                a = a.with_row(server, new_row);
            }
            trace.events.push_back({t, EventKind::Reallocation, -1,
                                    static_cast<std::int64_t>(server)});
            next_realloc = t + rng.exponential(realloc_total);
        }
        trace.times.push_back(t);
    }

    trace.final_pi = BandwidthProfile{column_sums(a.bids(), m, n)};
    return trace;
}

double efficiency_gap(const BandwidthProfile& pi, const DemandModel& dm) {
    const auto& p = dm.probs();
    if (pi.files() != p.size()) throw invariant_error("profile/demand mismatch");
    double total = 0.0;
    for (double v : pi.pi) total += v;
    double gap = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        double share = total > 0.0 ? pi.pi[j] / total : 0.0;
        gap = std::max(gap, std::abs(share - p[j]));
    }
    return gap;
}

BootstrapResult bootstrap_trajectory(const BootstrapConfig& cfg) {
    if (!(cfg.pi0 > 0.0) || !(cfg.p <= 1.0) || cfg.pi0 > cfg.p)
        throw domain_error("bootstrap needs 0 < pi0 <= p <= 1");
    if (!(cfg.dt > 0.0)) throw domain_error("dt must be positive");

    BootstrapResult out;
    if (cfg.pi0 >= cfg.p) {
        out.series.emplace_back(0.0, cfg.p);
        out.t_hit = 0.0;
        return out;
    }

    // Growth factor of one explicit two-stage step of d(pi) = pi dt.
    const double growth = 1.0 + cfg.dt + 0.5 * cfg.dt * cfg.dt;
    double t = 0.0, value = cfg.pi0;
    out.series.emplace_back(t, value);
    for (;;) {
        double next = value * growth;
        double t_next = t + cfg.dt;
        if (next >= cfg.p) {
            // Crossing inside the step: interpolate the hit time.
            out.t_hit = t + cfg.dt * (cfg.p - value) / (next - value);
            out.series.emplace_back(out.t_hit, cfg.p);
            return out;
        }
        t = t_next;
        value = next;
        out.series.emplace_back(t, value);
    }
}

double bootstrap_time(double p, double pi0) {
    if (!(pi0 > 0.0) || !(p > 0.0) || pi0 > p)
        throw domain_error("bootstrap time needs 0 < pi0 <= p");
    return std::log(p / pi0);
}

double download_time_proxy(const BandwidthProfile& pi, const DemandModel& dm,
                           double capacity) {
    const auto& rates = dm.rates();
    const auto& p = dm.probs();
    if (pi.files() != rates.size())
        throw invariant_error("profile/demand mismatch");
    double proxy = 0.0;
    for (std::size_t j = 0; j < rates.size(); ++j) {
        double service_margin = capacity * pi.pi[j] - rates[j];
        if (service_margin <= 0.0) throw unstable(j);
        proxy += p[j] / service_margin;
    }
    return proxy;
}

}  // namespace paritail
