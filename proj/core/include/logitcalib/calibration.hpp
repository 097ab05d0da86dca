#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "logitcalib/dataset.hpp"
#include "logitcalib/inference.hpp"

namespace logitcalib {

inline constexpr double kMinTemperature = 0.05;
inline constexpr double kMaxTemperature = 20.0;
inline constexpr double kTemperatureTolerance = 1e-4;
inline constexpr std::size_t kDefaultReliabilityBins = 10;

struct TemperatureParam {
  double temperature = 1.0;
  double nll = 0.0;  // mean validation NLL at `temperature`
};

struct ScalarMinimum {
  double x = 0.0;
  double fx = 0.0;
};

// Golden-section search for a minimum of `f` on [lo, hi]; stops once the
// bracket is narrower than `tolerance`.
ScalarMinimum golden_section_minimize(const std::function<double(double)>& f,
                                      double lo, double hi, double tolerance);

// Mean negative log-likelihood of the tempered softmax over labeled records.
double mean_nll(std::span<const LogitRecord> records, double temperature);

// Minimizes mean_nll over [kMinTemperature, kMaxTemperature]. Golden-section
// runs on three sub-intervals; T = 1 is also a candidate, so the result is
// never worse than the uncalibrated network.
TemperatureParam fit_temperature(std::span<const LogitRecord> validation);

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;  // 0 for empty bins
  double accuracy = 0.0;         // 0 for empty bins
};

/// Accuracy versus confidence over equal-width bins of [0, 1]. Bins are
/// right-closed, (lo, hi], except the first which also holds 0.
struct ReliabilityDiagram {
  std::vector<double> bin_edges;
  std::vector<ReliabilityBin> bins;
  double ece = 0.0;
  std::size_t total = 0;
};

ReliabilityDiagram reliability(std::span<const double> confidences,
                               std::span<const bool> correct,
                               std::size_t bins = kDefaultReliabilityBins);

// Confidence is each posterior's maximum; a record is correct when its argmax
// equals the label.
ReliabilityDiagram reliability(std::span<const Posterior> predictions,
                               std::span<const std::size_t> labels,
                               std::size_t bins = kDefaultReliabilityBins);

// Columns: bin_lo,bin_hi,count,mean_confidence,accuracy.
std::string reliability_csv(const ReliabilityDiagram& diagram);

}  // namespace logitcalib
