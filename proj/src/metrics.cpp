#include "paritail/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "paritail/errors.hpp"

namespace paritail {

TailReport tail_report(const BandwidthProfile& pi) {
    const std::size_t n = pi.files();
    if (n < 2) throw invariant_error("tail report needs n >= 2");

    std::vector<double> sorted = pi.pi;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());

    double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
    std::size_t positive = 0;
    while (positive < n && sorted[positive] > 0.0) ++positive;

    TailReport report;
    report.coverage = static_cast<double>(positive) / static_cast<double>(n);

    std::size_t head = std::max<std::size_t>(1, n / 10);
    double head_sum =
        std::accumulate(sorted.begin(), sorted.begin() + head, 0.0);
    report.head_share = total > 0.0 ? head_sum / total : 0.0;

    // Log-log rank fit over the served files; zero-pi files are excluded
    // (log undefined) and show up in coverage instead.
    report.rank_fit = {0.0, 0.0};
    if (positive >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t r = 0; r < positive; ++r) {
            double x = std::log(static_cast<double>(r + 1));
            double y = std::log(sorted[r]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        double k = static_cast<double>(positive);
        double denom = k * sxx - sx * sx;
        double slope = denom != 0.0 ? (k * sxy - sx * sy) / denom : 0.0;
        double intercept = (sy - slope * sx) / k;
        double ss = 0.0;
        for (std::size_t r = 0; r < positive; ++r) {
            double x = std::log(static_cast<double>(r + 1));
            double e = std::log(sorted[r]) - (intercept + slope * x);
            ss += e * e;
        }
        report.rank_fit = {slope, std::sqrt(ss / k)};
    }
    return report;
}

BiasCurve bias_curve(const std::vector<BandwidthProfile>& pi_snapshots,
                     const std::vector<std::uint64_t>& request_counts,
                     std::size_t bins) {
    if (bins == 0) throw invariant_error("need at least one bin");
    if (pi_snapshots.empty()) throw invariant_error("need at least one snapshot");
    const std::size_t n = request_counts.size();
    for (const auto& snap : pi_snapshots)
        if (snap.files() != n)
            throw invariant_error("snapshot/request-count size mismatch");

    std::uint64_t total_requests =
        std::accumulate(request_counts.begin(), request_counts.end(),
                        std::uint64_t{0});
    if (total_requests < bins)
        throw invariant_error("need at least `bins` settled requests");

    std::vector<double> avg_pi(n, 0.0);
    for (const auto& snap : pi_snapshots)
        for (std::size_t j = 0; j < n; ++j) avg_pi[j] += snap.pi[j];
    for (double& v : avg_pi) v /= static_cast<double>(pi_snapshots.size());

    double max_pi = *std::max_element(avg_pi.begin(), avg_pi.end());
    double width = max_pi > 0.0 ? max_pi / static_cast<double>(bins) : 1.0;

    std::vector<double> share_sum(bins, 0.0);
    std::vector<std::uint64_t> members(bins, 0);
    for (std::size_t j = 0; j < n; ++j) {
        auto bucket = static_cast<std::size_t>(avg_pi[j] / width);
        if (bucket >= bins) bucket = bins - 1;  // max element lands inclusive
        share_sum[bucket] += static_cast<double>(request_counts[j]) /
                             static_cast<double>(total_requests);
        members[bucket] += 1;
    }

    BiasCurve curve;
    curve.bins.reserve(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        double mean = members[b] > 0
                          ? share_sum[b] / static_cast<double>(members[b])
                          : 0.0;
        curve.bins.push_back(
            {(static_cast<double>(b) + 0.5) * width, mean, members[b]});
    }
    return curve;
}

}  // namespace paritail
