#include "logitcalib/calibration.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>

#include "logitcalib/error.hpp"
#include "logitcalib/numeric.hpp"

namespace logitcalib {

ScalarMinimum golden_section_minimize(const std::function<double(double)>& f,
                                      double lo, double hi, double tolerance) {
  if (!(lo < hi)) throw UsageError("golden_section_minimize: needs lo < hi");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tolerance) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

double mean_nll(std::span<const LogitRecord> records, double temperature) {
  if (records.empty()) throw DataError("mean_nll: no records");
  if (!(temperature > 0.0)) throw UsageError("mean_nll: temperature must be positive");
  std::vector<double> losses(records.size());
  std::vector<double> scaled;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.label) throw DataError(fmt::format("mean_nll: record {} is unlabeled", i));
    scaled.resize(r.logits.size());
    std::transform(r.logits.begin(), r.logits.end(), scaled.begin(),
                   [temperature](double z) { return z / temperature; });
    losses[i] = log_sum_exp(scaled) - scaled[*r.label];
  }
  return pairwise_sum(losses) / static_cast<double>(records.size());
}

TemperatureParam fit_temperature(std::span<const LogitRecord> validation) {
  if (validation.empty()) throw DataError("fit_temperature: validation set is empty");
  for (std::size_t i = 0; i < validation.size(); ++i) {
    if (!validation[i].label) {
      throw DataError(fmt::format("fit_temperature: validation record {} is unlabeled", i));
    }
  }
  const auto nll = [validation](double t) { return mean_nll(validation, t); };

  // Sub-interval boundaries; T = 1 sits on one of them.
  constexpr std::array<double, 4> kStarts{kMinTemperature, 1.0, 4.0, kMaxTemperature};
  ScalarMinimum best{1.0, nll(1.0)};
  for (std::size_t i = 0; i + 1 < kStarts.size(); ++i) {
    const auto m = golden_section_minimize(nll, kStarts[i], kStarts[i + 1],
                                           kTemperatureTolerance);
    if (m.fx < best.fx) best = m;
  }
  return {std::clamp(best.x, kMinTemperature, kMaxTemperature), best.fx};
}

ReliabilityDiagram reliability(std::span<const double> confidences,
                               std::span<const bool> correct, std::size_t bins) {
  if (confidences.size() != correct.size()) {
    throw DataError(fmt::format("reliability: {} confidences but {} outcomes",
                                confidences.size(), correct.size()));
  }
  if (bins < 1) throw UsageError("reliability: bin count must be >= 1");

  ReliabilityDiagram d;
  d.total = confidences.size();
  d.bin_edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    d.bin_edges[b] = static_cast<double>(b) / static_cast<double>(bins);
  }

  std::vector<std::vector<double>> conf_in(bins);
  std::vector<std::vector<double>> hit_in(bins);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double c = confidences[i];
    if (!(c >= 0.0 && c <= 1.0)) {
      throw DataError(fmt::format("reliability: confidence {} outside [0, 1]", c));
    }
    const std::size_t b = unit_interval_bin(c, bins);
    conf_in[b].push_back(c);
    hit_in[b].push_back(correct[i] ? 1.0 : 0.0);
  }

  const auto n = static_cast<double>(d.total);
  std::vector<double> gaps;
  for (std::size_t b = 0; b < bins; ++b) {
    ReliabilityBin bin{d.bin_edges[b], d.bin_edges[b + 1], conf_in[b].size(), 0.0, 0.0};
    if (bin.count > 0) {
      const auto cnt = static_cast<double>(bin.count);
      bin.mean_confidence = pairwise_sum(conf_in[b]) / cnt;
      bin.accuracy = pairwise_sum(hit_in[b]) / cnt;
      gaps.push_back(cnt / n * std::abs(bin.accuracy - bin.mean_confidence));
    }
    d.bins.push_back(bin);
  }
  d.ece = pairwise_sum(gaps);
  return d;
}

ReliabilityDiagram reliability(std::span<const Posterior> predictions,
                               std::span<const std::size_t> labels, std::size_t bins) {
  if (predictions.size() != labels.size()) {
    throw DataError(fmt::format("reliability: {} predictions but {} labels",
                                predictions.size(), labels.size()));
  }
  std::vector<double> conf(predictions.size());
  // std::vector<bool> has no contiguous storage to span over.
  const auto hits = std::make_unique<bool[]>(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto p = predict(predictions[i]);
    conf[i] = p.confidence;
    hits[i] = p.label == labels[i];
  }
  return reliability(conf, std::span<const bool>(hits.get(), predictions.size()), bins);
}

std::string reliability_csv(const ReliabilityDiagram& diagram) {
  std::string out = "bin_lo,bin_hi,count,mean_confidence,accuracy\n";
  for (const auto& b : diagram.bins) {
    out += fmt::format("{:.17g},{:.17g},{},{:.17g},{:.17g}\n", b.lo, b.hi, b.count,
                       b.mean_confidence, b.accuracy);
  }
  return out;
}

}  // namespace logitcalib
