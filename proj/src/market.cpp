#include "paritail/market.hpp"

#include <cmath>
#include <string>

#include "paritail/errors.hpp"

namespace paritail {

std::vector<double> column_sums(std::span<const double> grid, std::size_t m,
                                std::size_t n) {
    std::vector<double> sums(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) sums[j] += grid[i * n + j];
    return sums;
}

AllocationMatrix::AllocationMatrix(std::size_t m, std::size_t n,
                                   std::vector<double> bids,
                                   std::vector<double> budgets)
    : m_(m), n_(n), bids_(std::move(bids)), budgets_(std::move(budgets)) {
    if (m_ == 0 || n_ == 0) throw invariant_error("allocation needs m >= 1, n >= 1");
    if (bids_.size() != m_ * n_) throw invariant_error("bids grid is not m*n");
    if (budgets_.size() != m_) throw invariant_error("budgets vector is not length m");

    double budget_total = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
        if (!(budgets_[i] > 0.0))
            throw invariant_error("budget of server " + std::to_string(i) +
                                  " must be positive");
        budget_total += budgets_[i];
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            double b = bids_[i * n_ + j];
            if (!(b >= 0.0))
                throw invariant_error("negative bid at (" + std::to_string(i) +
                                      "," + std::to_string(j) + ")");
            row_sum += b;
        }
        if (row_sum > budgets_[i] + kBudgetSlack)
            throw invariant_error("server " + std::to_string(i) +
                                  " bids exceed its budget");
    }
    if (std::abs(budget_total - 1.0) > kNormalizationTol)
        throw invariant_error("budgets must sum to 1, got " +
                              std::to_string(budget_total));
}

AllocationMatrix AllocationMatrix::with_row(std::size_t server,
                                            std::span<const double> row) const {
    std::vector<double> bids = bids_;
    for (std::size_t j = 0; j < n_; ++j) bids[server * n_ + j] = row[j];
    return AllocationMatrix(m_, n_, std::move(bids), budgets_);
}

AllocationMatrix AllocationMatrix::uniform(std::size_t m, std::size_t n) {
    double budget = 1.0 / static_cast<double>(m);
    std::vector<double> bids(m * n, budget / static_cast<double>(n));
    std::vector<double> budgets(m, budget);
    return AllocationMatrix(m, n, std::move(bids), std::move(budgets));
}

DemandModel::DemandModel(std::vector<double> rates) : rates_(std::move(rates)) {
    if (rates_.empty()) throw invariant_error("demand needs at least one file");
    total_rate_ = 0.0;
    for (double r : rates_) {
        if (!(r > 0.0)) throw invariant_error("request rates must be positive");
        total_rate_ += r;
    }
    probs_.resize(rates_.size());
    for (std::size_t j = 0; j < rates_.size(); ++j)
        probs_[j] = rates_[j] / total_rate_;
}

BeliefMatrix::BeliefMatrix(std::size_t m, std::size_t n,
                           std::vector<double> beliefs)
    : m_(m), n_(n), beliefs_(std::move(beliefs)) {
    if (m_ == 0 || n_ == 0) throw invariant_error("beliefs need m >= 1, n >= 1");
    if (beliefs_.size() != m_ * n_) throw invariant_error("belief grid is not m*n");
    for (std::size_t i = 0; i < m_; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            double p = beliefs_[i * n_ + j];
            if (!(p >= 0.0) || p > 1.0)
                throw invariant_error("belief out of [0,1] at (" +
                                      std::to_string(i) + "," +
                                      std::to_string(j) + ")");
            row_sum += p;
        }
        if (std::abs(row_sum - 1.0) > 1e-12)
            throw invariant_error("belief row " + std::to_string(i) +
                                  " must sum to 1");
    }
}

BeliefMatrix BeliefMatrix::common(std::size_t m,
                                  const std::vector<double>& probs) {
    std::vector<double> grid;
    grid.reserve(m * probs.size());
    for (std::size_t i = 0; i < m; ++i)
        grid.insert(grid.end(), probs.begin(), probs.end());
    return BeliefMatrix(m, probs.size(), std::move(grid));
}

BandwidthProfile bandwidth_profile(const AllocationMatrix& a) {
    return BandwidthProfile{column_sums(a.bids(), a.servers(), a.files())};
}

DemandModel demand_from_zipf(std::size_t n, double exponent,
                             double total_rate) {
    if (n == 0) throw invariant_error("zipf demand needs n >= 1");
    if (!(exponent >= 0.0)) throw invariant_error("zipf exponent must be >= 0");
    if (!(total_rate > 0.0)) throw invariant_error("total rate must be positive");

    std::vector<double> weights(n);
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        weights[j] = std::pow(static_cast<double>(j + 1), -exponent);
        weight_sum += weights[j];
    }
    for (double& w : weights) w *= total_rate / weight_sum;
    return DemandModel(std::move(weights));
}

}  // namespace paritail
