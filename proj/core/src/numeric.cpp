#include "logitcalib/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace logitcalib {

namespace {
constexpr std::size_t kPairwiseBlock = 8;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= kPairwiseBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double log_sum_exp(std::span<const double> values) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (values.empty()) return kNegInf;
  const double m = *std::max_element(values.begin(), values.end());
  if (m == kNegInf) return kNegInf;
  std::vector<double> shifted(values.size());
  std::transform(values.begin(), values.end(), shifted.begin(),
                 [m](double v) { return std::exp(v - m); });
  return m + std::log(pairwise_sum(shifted));
}

std::vector<double> normalize_log_scores(std::span<const double> log_scores) {
  std::vector<double> probs(log_scores.size());
  if (log_scores.empty()) return probs;
  const double m = *std::max_element(log_scores.begin(), log_scores.end());
  std::transform(log_scores.begin(), log_scores.end(), probs.begin(),
                 [m](double v) { return std::exp(v - m); });
  const double total = pairwise_sum(probs);
  for (double& p : probs) p /= total;
  return probs;
}

MeanVariance mean_variance(std::span<const double> values) {
  MeanVariance out;
  if (values.empty()) return out;
  const double anchor = values.front();
  const auto n = static_cast<double>(values.size());

  std::vector<double> deltas(values.size());
  std::transform(values.begin(), values.end(), deltas.begin(),
                 [anchor](double v) { return v - anchor; });
  const double mean_delta = pairwise_sum(deltas) / n;
  out.mean = anchor + mean_delta;

  if (values.size() > 1) {
    for (double& d : deltas) d = (d - mean_delta) * (d - mean_delta);
    out.variance = pairwise_sum(deltas) / (n - 1.0);
  }
  return out;
}

std::size_t unit_interval_bin(double value, std::size_t bins) {
  if (bins <= 1 || !(value > 0.0)) return 0;
  if (value >= 1.0) return bins - 1;
  // ceil(value * bins) - 1, corrected against the exact edges b / bins so that
  // values equal to an edge stay in the bin the edge closes.
  auto b = static_cast<std::size_t>(std::ceil(value * static_cast<double>(bins)));
  b = std::clamp<std::size_t>(b, 1, bins);
  const auto edge = [bins](std::size_t i) {
    return static_cast<double>(i) / static_cast<double>(bins);
  };
  while (b > 1 && value <= edge(b - 1)) --b;
  while (b < bins && value > edge(b)) ++b;
  return b - 1;
}

}  // namespace logitcalib
