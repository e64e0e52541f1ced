#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace paritail {

// Two-file sequential arrival process: an alpha fraction of arriving
// servers bet on file A by a Bernoulli(p) subjective draw, the rest imitate
// by copying a random existing server. Seeded with one server per file so
// the share pi stays strictly inside (0, 1) and never absorbs.
struct PolyaState {
    std::uint64_t t = 0;        // arrived servers so far
    std::uint64_t count_a = 0;  // arrivals that chose file A
    double alpha;               // fraction of rational arrivals, in [0, 1]
    double p;                   // true request probability of file A
    std::uint64_t seed_a = 1;   // initial urn composition
    std::uint64_t seed_b = 1;

    PolyaState(double alpha, double p, std::uint64_t seed_a = 1,
               std::uint64_t seed_b = 1);

    /// Fraction of servers on file A, counting the urn seeds.
    double pi() const {
        return static_cast<double>(count_a + seed_a) /
               static_cast<double>(t + seed_a + seed_b);
    }
};

/// Probability the next arrival serves A: alpha*p + (1-alpha)*pi(t).
double arrival_probability(const PolyaState& s);

/// One arrival driven by a uniform draw u in [0, 1).
PolyaState step(PolyaState s, double u);

/// Convergence band for first-passage times: |pi - p| < 0.05.
inline constexpr double kConvergenceBand = 0.05;

struct EnsembleStats {
    std::vector<double> final_pi;  // one per run
    double mean;
    double variance;  // sample variance across runs
    // Arrivals until pi first enters the band around p; nullopt = censored.
    std::vector<std::optional<std::uint64_t>> first_passage;
};

/// Independent runs with per-run child seeds; deterministic per seed.
EnsembleStats run_ensemble(double alpha, double p, std::uint64_t arrivals,
                           std::size_t runs, std::uint64_t seed);

struct ConvergencePoint {
    double alpha;
    double median_first_passage;  // lower median across runs
};

// Median first-passage time per alpha, in input order. Throws censored(a)
// when fewer than half the runs reach the band within `arrivals`.
std::vector<ConvergencePoint> convergence_time_curve(
    const std::vector<double>& alphas, double p, std::uint64_t arrivals,
    std::size_t runs, std::uint64_t seed);

}  // namespace paritail
