#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace logitcalib {

// Pairwise (cascade) summation. The reduction tree depends only on the input
// length, so results are reproducible for a given ordering.
double pairwise_sum(std::span<const double> values);

// log(sum(exp(values))), stable for large magnitudes. Returns -inf for an
// empty input or when every value is -inf.
double log_sum_exp(std::span<const double> values);

// Turns unnormalized log-scores into probabilities with a single
// max-subtraction and exp-normalize pass.
std::vector<double> normalize_log_scores(std::span<const double> log_scores);

// Sample mean and unbiased variance. The mean is accumulated relative to the
// first element, so a constant sequence yields that constant exactly and a
// variance of exactly zero.
struct MeanVariance {
  double mean = 0.0;
  double variance = 0.0;
};
MeanVariance mean_variance(std::span<const double> values);

// Index of the equal-width bin of [0, 1] holding `value`. Bins are
// right-closed, (lo, hi], and 0 goes to the first bin. Values outside [0, 1]
// are clamped to the end bins.
std::size_t unit_interval_bin(double value, std::size_t bins);

}  // namespace logitcalib
