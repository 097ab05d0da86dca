#include "logitcalib/metrics.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numeric>

#include "json.hpp"
#include "logitcalib/error.hpp"

namespace logitcalib {

using nlohmann::json;

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::false_positives(std::size_t c) const {
  std::size_t s = 0;
  for (std::size_t t = 0; t < k_; ++t) {
    if (t != c) s += at(t, c);
  }
  return s;
}

std::size_t ConfusionMatrix::false_negatives(std::size_t c) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < k_; ++p) {
    if (p != c) s += at(c, p);
  }
  return s;
}

std::size_t ConfusionMatrix::true_negatives(std::size_t c) const {
  return total() - true_positives(c) - false_positives(c) - false_negatives(c);
}

ConfusionMatrix ConfusionMatrix::from_rows(
    const std::vector<std::vector<std::size_t>>& rows) {
  ConfusionMatrix m(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != rows.size()) throw DataError("confusion matrix must be square");
    for (std::size_t p = 0; p < rows.size(); ++p) m.at(t, p) = rows[t][p];
  }
  return m;
}

ConfusionMatrix confusion(std::span<const std::size_t> predicted,
                          std::span<const std::size_t> labels, std::size_t num_classes) {
  if (predicted.size() != labels.size()) {
    throw DataError(fmt::format("confusion: {} predictions but {} labels",
                                predicted.size(), labels.size()));
  }
  ConfusionMatrix m(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes || predicted[i] >= num_classes) {
      throw DataError(fmt::format("confusion: class index out of range at record {}", i));
    }
    ++m.at(labels[i], predicted[i]);
  }
  return m;
}

namespace {

void require_nonempty(const ConfusionMatrix& m, const char* what) {
  if (m.num_classes() == 0 || m.total() == 0) {
    throw DataError(fmt::format("{}: empty confusion matrix", what));
  }
}

double mean_of(const std::vector<double>& v) {
  return pairwise_sum(v) / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> f_scores(const ConfusionMatrix& m) {
  std::vector<double> out(m.num_classes(), 0.0);
  for (std::size_t c = 0; c < m.num_classes(); ++c) {
    const std::size_t tp = m.true_positives(c);
    const std::size_t fp = m.false_positives(c);
    const std::size_t fn = m.false_negatives(c);
    if (tp + fp == 0 || tp + fn == 0) continue;
    // Same as 2PR / (P + R), but exact in integer arithmetic up to one division.
    out[c] = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  }
  return out;
}

double f_score_avg(const ConfusionMatrix& m) {
  require_nonempty(m, "f_score_avg");
  return mean_of(f_scores(m));
}

double f_score_weighted(const ConfusionMatrix& m) {
  require_nonempty(m, "f_score_weighted");
  const auto f = f_scores(m);
  std::vector<double> terms(f.size());
  for (std::size_t c = 0; c < f.size(); ++c) {
    const std::size_t support = m.true_positives(c) + m.false_negatives(c);
    terms[c] = f[c] * static_cast<double>(support);
  }
  return pairwise_sum(terms) / static_cast<double>(m.total());
}

std::vector<double> false_positive_rates(const ConfusionMatrix& m) {
  std::vector<double> out(m.num_classes(), 0.0);
  for (std::size_t c = 0; c < m.num_classes(); ++c) {
    const std::size_t fp = m.false_positives(c);
    const std::size_t tn = m.true_negatives(c);
    if (fp + tn == 0) continue;
    out[c] = static_cast<double>(fp) / static_cast<double>(fp + tn);
  }
  return out;
}

double fpr_avg(const ConfusionMatrix& m) {
  require_nonempty(m, "fpr_avg");
  return mean_of(false_positive_rates(m));
}

double fpr_micro(const ConfusionMatrix& m) {
  require_nonempty(m, "fpr_micro");
  std::size_t fp = 0;
  std::size_t negatives = 0;
  for (std::size_t c = 0; c < m.num_classes(); ++c) {
    fp += m.false_positives(c);
    negatives += m.false_positives(c) + m.true_negatives(c);
  }
  return negatives == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(negatives);
}

MeanVariance unseen_stats(std::span<const Posterior> predictions) {
  if (predictions.empty()) throw DataError("unseen_stats: no predictions");
  std::vector<double> conf(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    conf[i] = predict(predictions[i]).confidence;
  }
  return mean_variance(conf);
}

ScoreHistogram score_histogram(std::span<const Posterior> predictions, std::size_t bins,
                               ScoreKind kind) {
  if (bins < 1) throw UsageError("score_histogram: bin count must be >= 1");
  ScoreHistogram h;
  h.counts.assign(bins, 0);
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    h.edges[b] = static_cast<double>(b) / static_cast<double>(bins);
  }
  for (const auto& p : predictions) {
    if (kind == ScoreKind::kMaxConfidence) {
      ++h.counts[unit_interval_bin(predict(p).confidence, bins)];
    } else {
      for (double s : p.probs) ++h.counts[unit_interval_bin(s, bins)];
    }
  }
  return h;
}

std::string score_histogram_csv(const ScoreHistogram& max_confidence,
                                const ScoreHistogram& all_scores) {
  if (max_confidence.counts.size() != all_scores.counts.size()) {
    throw UsageError("score histograms must share bins");
  }
  std::string out = "bin_lo,bin_hi,max_confidence_count,all_scores_count\n";
  for (std::size_t b = 0; b < max_confidence.counts.size(); ++b) {
    out += fmt::format("{:.17g},{:.17g},{},{}\n", max_confidence.edges[b],
                       max_confidence.edges[b + 1], max_confidence.counts[b],
                       all_scores.counts[b]);
  }
  return out;
}

EvaluationReport evaluate_layer(std::string layer, const ClassRegistry& registry,
                                std::span<const Posterior> test,
                                std::span<const std::size_t> test_labels,
                                std::span<const Posterior> unseen,
                                std::size_t reliability_bins) {
  if (test.size() != test_labels.size()) {
    throw DataError("evaluate: predictions and labels differ in length");
  }
  EvaluationReport r;
  r.layer = std::move(layer);
  r.class_names = registry.names();
  r.test_count = test.size();
  r.reliability_bins = reliability_bins;

  std::vector<std::size_t> predicted(test.size());
  std::vector<double> wrong_conf;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto p = predict(test[i]);
    predicted[i] = p.label;
    if (p.label != test_labels[i]) wrong_conf.push_back(p.confidence);
  }
  const auto m = confusion(predicted, test_labels, registry.size());
  r.f_score_avg = f_score_avg(m);
  r.f_score_weighted = f_score_weighted(m);
  r.fpr_avg = fpr_avg(m);
  r.fpr_micro = fpr_micro(m);
  r.per_class_f_score = f_scores(m);
  r.per_class_fpr = false_positive_rates(m);
  if (!wrong_conf.empty()) r.false_positive_mean_confidence = mean_variance(wrong_conf).mean;
  r.ece = reliability(test, test_labels, reliability_bins).ece;

  r.unseen_count = unseen.size();
  if (!unseen.empty()) {
    const auto s = unseen_stats(unseen);
    r.unseen_mean_score = s.mean;
    r.unseen_var_score = s.variance;
  }
  return r;
}

namespace {

double percent(double fraction) { return std::round(fraction * 10000.0) / 100.0; }

json report_json(const EvaluationReport& r) {
  json j;
  j["layer"] = r.layer;
  j["test_count"] = r.test_count;
  j["f_score_avg"] = percent(r.f_score_avg);
  j["f_score_weighted"] = percent(r.f_score_weighted);
  j["fpr_avg"] = percent(r.fpr_avg);
  j["fpr_micro"] = percent(r.fpr_micro);
  j["false_positive_mean_confidence"] = r.false_positive_mean_confidence;
  json per_class = json::object();
  for (std::size_t c = 0; c < r.class_names.size(); ++c) {
    per_class[r.class_names[c]] = {{"f_score", percent(r.per_class_f_score.at(c))},
                                   {"fpr", percent(r.per_class_fpr.at(c))}};
  }
  j["per_class"] = std::move(per_class);
  j["ece"] = r.ece;
  j["reliability_bins"] = r.reliability_bins;
  j["temperature"] = r.temperature ? json(*r.temperature) : json(nullptr);
  j["unseen_count"] = r.unseen_count;
  j["unseen_mean_score"] = r.unseen_mean_score ? json(*r.unseen_mean_score) : json(nullptr);
  j["unseen_var_score"] = r.unseen_var_score ? json(*r.unseen_var_score) : json(nullptr);
  return j;
}

std::string fixed_or_na(const std::optional<double>& v, int digits) {
  return v ? fmt::format("{:.{}f}", *v, digits) : std::string("n/a");
}

}  // namespace

std::string to_json(const EvaluationReport& report) {
  return report_json(report).dump(2) + "\n";
}

std::string reports_to_json(std::span<const EvaluationReport> reports) {
  json doc;
  doc["layers"] = json::array();
  for (const auto& r : reports) doc["layers"].push_back(report_json(r));
  return doc.dump(2) + "\n";
}

std::string comparison_table_csv(std::span<const EvaluationReport> reports) {
  std::string out = "metric";
  for (const auto& r : reports) out += "," + r.layer;
  out += "\nf_score_pct";
  for (const auto& r : reports) out += fmt::format(",{:.2f}", percent(r.f_score_avg));
  out += "\nfpr_pct";
  for (const auto& r : reports) out += fmt::format(",{:.2f}", percent(r.fpr_avg));
  out += "\nunseen_mean_score";
  for (const auto& r : reports) out += "," + fixed_or_na(r.unseen_mean_score, 3);
  out += "\nunseen_var_score";
  for (const auto& r : reports) out += "," + fixed_or_na(r.unseen_var_score, 3);
  out += "\n";
  return out;
}

}  // namespace logitcalib
