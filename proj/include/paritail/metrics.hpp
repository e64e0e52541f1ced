#pragma once

#include <cstdint>
#include <vector>

#include "paritail/market.hpp"

namespace paritail {

struct RankFit {
    double slope;     // least-squares log(pi) vs log(rank) over pi_j > 0
    double residual;  // RMS residual of the fit; 0 when under two points
};

struct TailReport {
    double coverage;    // fraction of files with pi_j > 0
    double head_share;  // bandwidth share of the top 10% of files by pi
    RankFit rank_fit;
};

/// Long-tail statistics of a bandwidth profile; needs n >= 2.
TailReport tail_report(const BandwidthProfile& pi);

struct BiasBin {
    double midpoint;       // center of the time-averaged-pi bin
    double mean_share;     // mean empirical request share of member files
    std::uint64_t count;   // number of files in the bin
};

struct BiasCurve {
    std::vector<BiasBin> bins;
};

// Calibration curve of bandwidth against realized demand: files are
// bucketed by time-averaged pi_j, and each bucket reports the mean
// empirical request share of its files. A curve hugging the diagonal means
// the market prices demand well; systematic crossings indicate bias.
BiasCurve bias_curve(const std::vector<BandwidthProfile>& pi_snapshots,
                     const std::vector<std::uint64_t>& request_counts,
                     std::size_t bins);

}  // namespace paritail
