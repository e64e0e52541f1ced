#include "paritail/polya.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "paritail/errors.hpp"
#include "paritail/rng.hpp"

namespace paritail {

PolyaState::PolyaState(double a, double prob, std::uint64_t sa,
                       std::uint64_t sb)
    : alpha(a), p(prob), seed_a(sa), seed_b(sb) {
    if (!(alpha >= 0.0) || alpha > 1.0)
        throw invariant_error("alpha must be in [0, 1]");
    if (!(p > 0.0) || !(p < 1.0)) throw invariant_error("p must be in (0, 1)");
    if (seed_a == 0 || seed_b == 0)
        throw invariant_error("urn seeds must be >= 1");
}

double arrival_probability(const PolyaState& s) {
    return s.alpha * s.p + (1.0 - s.alpha) * s.pi();
}

PolyaState step(PolyaState s, double u) {
    if (u < arrival_probability(s)) ++s.count_a;
    ++s.t;
    return s;
}

EnsembleStats run_ensemble(double alpha, double p, std::uint64_t arrivals,
                           std::size_t runs, std::uint64_t seed) {
    if (runs == 0) throw invariant_error("need at least one run");
    if (arrivals == 0) throw invariant_error("need at least one arrival");

    EnsembleStats stats;
    stats.final_pi.reserve(runs);
    stats.first_passage.reserve(runs);

    for (std::size_t run = 0; run < runs; ++run) {
        Rng rng(child_seed(seed, "polya-run", run));
        PolyaState state(alpha, p);
        std::optional<std::uint64_t> passage;
        if (std::abs(state.pi() - p) < kConvergenceBand) passage = 0;
        for (std::uint64_t t = 0; t < arrivals; ++t) {
            state = step(std::move(state), rng.uniform());
            if (!passage && std::abs(state.pi() - p) < kConvergenceBand)
                passage = state.t;
        }
        stats.final_pi.push_back(state.pi());
        stats.first_passage.push_back(passage);
    }

    double sum = 0.0;
    for (double v : stats.final_pi) sum += v;
    stats.mean = sum / static_cast<double>(runs);
    double ss = 0.0;
    for (double v : stats.final_pi) ss += (v - stats.mean) * (v - stats.mean);
    stats.variance = runs > 1 ? ss / static_cast<double>(runs - 1) : 0.0;
    return stats;
}

std::vector<ConvergencePoint> convergence_time_curve(
    const std::vector<double>& alphas, double p, std::uint64_t arrivals,
    std::size_t runs, std::uint64_t seed) {
    std::vector<ConvergencePoint> curve;
    curve.reserve(alphas.size());
    for (double alpha : alphas) {
        if (!(alpha > 0.0))
            throw invariant_error("curve alphas must be positive");
        auto stats = run_ensemble(alpha, p, arrivals, runs, seed);

        std::size_t reached = 0;
        std::vector<double> times;
        times.reserve(runs);
        for (const auto& fp : stats.first_passage) {
            if (fp) {
                ++reached;
                times.push_back(static_cast<double>(*fp));
            } else {
                times.push_back(std::numeric_limits<double>::infinity());
            }
        }
        if (reached * 2 < runs) throw censored(alpha);

        // Lower median: finite whenever at least half the runs reached.
        std::nth_element(times.begin(), times.begin() + (runs - 1) / 2,
                         times.end());
        curve.push_back({alpha, times[(runs - 1) / 2]});
    }
    return curve;
}

}  // namespace paritail
