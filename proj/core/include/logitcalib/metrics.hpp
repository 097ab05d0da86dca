#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logitcalib/calibration.hpp"
#include "logitcalib/dataset.hpp"
#include "logitcalib/inference.hpp"
#include "logitcalib/numeric.hpp"

namespace logitcalib {

/// K x K counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes)
      : k_(num_classes), counts_(num_classes * num_classes, 0) {}

  std::size_t num_classes() const noexcept { return k_; }
  std::size_t at(std::size_t truth, std::size_t predicted) const {
    return counts_.at(truth * k_ + predicted);
  }
  std::size_t& at(std::size_t truth, std::size_t predicted) {
    return counts_.at(truth * k_ + predicted);
  }

  std::size_t total() const;
  std::size_t true_positives(std::size_t c) const { return at(c, c); }
  std::size_t false_positives(std::size_t c) const;
  std::size_t false_negatives(std::size_t c) const;
  std::size_t true_negatives(std::size_t c) const;

  // Builds a matrix from row-major nested counts.
  static ConfusionMatrix from_rows(const std::vector<std::vector<std::size_t>>& rows);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const std::size_t> predicted,
                          std::span<const std::size_t> labels, std::size_t num_classes);

// Per-class F1 = 2TP / (2TP + FP + FN); 0 when the class was never predicted
// or never present.
std::vector<double> f_scores(const ConfusionMatrix& m);
// Macro average of f_scores.
double f_score_avg(const ConfusionMatrix& m);
// Support-weighted average of f_scores.
double f_score_weighted(const ConfusionMatrix& m);

// One-vs-rest FP / (FP + TN) per class; 0 when FP + TN is 0.
std::vector<double> false_positive_rates(const ConfusionMatrix& m);
double fpr_avg(const ConfusionMatrix& m);
// Pooled FP / (FP + TN) over all one-vs-rest problems.
double fpr_micro(const ConfusionMatrix& m);

// Mean and unbiased variance of max-posterior confidence.
MeanVariance unseen_stats(std::span<const Posterior> predictions);

enum class ScoreKind {
  kMaxConfidence,  // one value per posterior: its maximum
  kAllScores,      // every class probability of every posterior
};

struct ScoreHistogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
};

// Equal-width histogram of scores over [0, 1], binned like the reliability
// diagram.
ScoreHistogram score_histogram(std::span<const Posterior> predictions, std::size_t bins,
                               ScoreKind kind = ScoreKind::kMaxConfidence);

// Columns: bin_lo,bin_hi,max_confidence_count,all_scores_count.
std::string score_histogram_csv(const ScoreHistogram& max_confidence,
                                const ScoreHistogram& all_scores);

/// Evaluation of one prediction layer. Rates are fractions in [0, 1]; JSON
/// output converts them to percentages.
struct EvaluationReport {
  std::string layer;
  std::vector<std::string> class_names;
  std::size_t test_count = 0;
  double f_score_avg = 0.0;
  double f_score_weighted = 0.0;
  double fpr_avg = 0.0;
  double fpr_micro = 0.0;
  std::vector<double> per_class_f_score;
  std::vector<double> per_class_fpr;
  // Mean confidence of predictions that were wrong; 0 when none were.
  double false_positive_mean_confidence = 0.0;
  double ece = 0.0;
  std::size_t reliability_bins = kDefaultReliabilityBins;
  std::optional<double> temperature;
  std::size_t unseen_count = 0;
  std::optional<double> unseen_mean_score;
  std::optional<double> unseen_var_score;
};

// Unseen statistics are filled only when `unseen` is non-empty.
EvaluationReport evaluate_layer(std::string layer, const ClassRegistry& registry,
                                std::span<const Posterior> test,
                                std::span<const std::size_t> test_labels,
                                std::span<const Posterior> unseen,
                                std::size_t reliability_bins = kDefaultReliabilityBins);

// JSON object with sorted keys; percentages 0-100 rounded to 2 decimals.
std::string to_json(const EvaluationReport& report);
// Several layers side by side: {"layers": [...], "reliability_bins": n}.
std::string reports_to_json(std::span<const EvaluationReport> reports);
// Rows are metrics (F-score, FPR, unseen mean, unseen variance), columns the
// evaluated layers.
std::string comparison_table_csv(std::span<const EvaluationReport> reports);

}  // namespace logitcalib
