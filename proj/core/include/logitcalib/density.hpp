#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "logitcalib/dataset.hpp"

namespace logitcalib {

inline constexpr double kDefaultSmoothingAlpha = 0.01;
inline constexpr std::size_t kDefaultBinCount = 25;

/// Equal-width 1-D histogram with additive (Laplace) smoothing.
///
/// `masses[b]` is the smoothed probability mass of bin b,
/// (count_b + alpha) / (N + alpha * B), where N is `sample_count`. Values are
/// masses, not heights: they are never divided by the bin width.
struct HistogramDensity {
  std::vector<double> edges;   // B + 1 strictly increasing values
  std::vector<double> masses;  // B values summing to 1
  double smoothing_alpha = 0.0;
  std::size_t sample_count = 0;

  std::size_t bin_count() const noexcept { return masses.size(); }
  double lo() const { return edges.front(); }
  double hi() const { return edges.back(); }

  // Mass assigned to points outside [lo, hi]: alpha / (N + alpha * B).
  double smoothing_floor() const;

  // Bin holding x: interior edges belong to the bin on their right and `hi`
  // belongs to the last bin. std::nullopt outside [lo, hi].
  std::optional<std::size_t> bin_of(double x) const;

  friend bool operator==(const HistogramDensity&, const HistogramDensity&) = default;
};

struct GaussianDensity {
  double mu = 0.0;
  double sigma2 = 1.0;

  friend bool operator==(const GaussianDensity&, const GaussianDensity&) = default;
};

// Fits `bins` equal-width bins over `range` (default: the sample min/max,
// widened by 1e-9 on each side when degenerate). With an explicit range,
// samples outside it are ignored and do not count towards N.
HistogramDensity fit_histogram(std::span<const double> samples, std::size_t bins,
                               std::optional<std::pair<double, double>> range = {},
                               double alpha = kDefaultSmoothingAlpha);

// masses[bin(x)] inside the support, the smoothing floor outside it.
double eval_histogram(const HistogramDensity& h, double x);

// Mean and unbiased variance. Needs two or more samples with nonzero spread.
GaussianDensity fit_gaussian(std::span<const double> samples);

double eval_gaussian(const GaussianDensity& g, double x);
double log_eval_gaussian(const GaussianDensity& g, double x);

/// Per-class densities of the logit vector.
///
/// hists[c][j] is the density of logit dimension j over training records of
/// true class c. priors[c] is a Normal fitted to dimension c of the class-c
/// training logits.
struct ClassConditionalModel {
  ClassRegistry registry;
  std::size_t bin_count = kDefaultBinCount;
  double alpha = kDefaultSmoothingAlpha;
  std::vector<std::vector<HistogramDensity>> hists;
  std::vector<GaussianDensity> priors;

  std::size_t num_classes() const noexcept { return registry.size(); }

  friend bool operator==(const ClassConditionalModel&,
                         const ClassConditionalModel&) = default;
};

// Uses only the train split of `data`; every class needs two records.
ClassConditionalModel fit_class_conditional(const SplitDataset& data,
                                            std::size_t bins,
                                            double alpha = kDefaultSmoothingAlpha);

// Checks shape and density invariants; throws a data error.
void validate(const ClassConditionalModel& model);

// JSON with sorted keys:
// {"alpha", "bin_count", "hists": K x K of {edges, masses, sample_count},
//  "priors": K of {mu, sigma2}, "registry": [names]}.
std::string to_json(const ClassConditionalModel& model);
ClassConditionalModel model_from_json(std::string_view text);

void save_model(const ClassConditionalModel& model,
                const std::filesystem::path& path);
ClassConditionalModel load_model(const std::filesystem::path& path);

}  // namespace logitcalib
