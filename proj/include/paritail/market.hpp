#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace paritail {

/// Column sums of a dense row-major m*n grid. Linear in the grid entries.
std::vector<double> column_sums(std::span<const double> grid, std::size_t m,
                                std::size_t n);

// The market's core state: the m*n bandwidth bids b_ij together with the
// per-server budgets b_i. Bids are dimensionless fractions of total system
// bandwidth; budgets sum to one across the system. Immutable after
// construction; construction validates all invariants:
//   - b_ij >= 0
//   - sum_j b_ij <= b_i + 1e-12 for every server i
//   - sum_i b_i = 1 +- 1e-9
class AllocationMatrix {
  public:
    static constexpr double kBudgetSlack = 1e-12;
    static constexpr double kNormalizationTol = 1e-9;

    AllocationMatrix(std::size_t m, std::size_t n, std::vector<double> bids,
                     std::vector<double> budgets);

    std::size_t servers() const { return m_; }
    std::size_t files() const { return n_; }

    double bid(std::size_t server, std::size_t file) const {
        return bids_[server * n_ + file];
    }
    std::span<const double> row(std::size_t server) const {
        return {bids_.data() + server * n_, n_};
    }
    const std::vector<double>& bids() const { return bids_; }
    const std::vector<double>& budgets() const { return budgets_; }
    double budget(std::size_t server) const { return budgets_[server]; }

    /// New matrix with server's row replaced; invariants re-checked.
    AllocationMatrix with_row(std::size_t server,
                              std::span<const double> row) const;

    /// Uniform allocation: equal budgets 1/m, each spread evenly over files.
    static AllocationMatrix uniform(std::size_t m, std::size_t n);

  private:
    std::size_t m_, n_;
    std::vector<double> bids_;
    std::vector<double> budgets_;
};

/// Per-file bandwidth fractions pi_j = sum_k b_kj.
struct BandwidthProfile {
    std::vector<double> pi;

    std::size_t files() const { return pi.size(); }
};

// Per-file request rates lambda_j > 0 and the derived request probabilities
// p_j = lambda_j / lambda for the next arrival.
class DemandModel {
  public:
    explicit DemandModel(std::vector<double> rates);

    std::size_t files() const { return rates_.size(); }
    const std::vector<double>& rates() const { return rates_; }
    double total_rate() const { return total_rate_; }
    const std::vector<double>& probs() const { return probs_; }

  private:
    std::vector<double> rates_;
    double total_rate_;
    std::vector<double> probs_;
};

// Server i's subjective probability p_ij that the next request asks for
// file j. Every row sums to one.
class BeliefMatrix {
  public:
    BeliefMatrix(std::size_t m, std::size_t n, std::vector<double> beliefs);

    std::size_t servers() const { return m_; }
    std::size_t files() const { return n_; }
    std::span<const double> row(std::size_t server) const {
        return {beliefs_.data() + server * n_, n_};
    }
    double at(std::size_t server, std::size_t file) const {
        return beliefs_[server * n_ + file];
    }

    /// All m servers share the given probability vector.
    static BeliefMatrix common(std::size_t m, const std::vector<double>& probs);

  private:
    std::size_t m_, n_;
    std::vector<double> beliefs_;
};

/// pi_j = sum_k b_kj for every file j.
BandwidthProfile bandwidth_profile(const AllocationMatrix& a);

// Zipf demand generator: lambda_j proportional to (j+1)^(-exponent) over
// ranks 1..n, scaled so the rates sum to total_rate.
DemandModel demand_from_zipf(std::size_t n, double exponent, double total_rate);

}  // namespace paritail
