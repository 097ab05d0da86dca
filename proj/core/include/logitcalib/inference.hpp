#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "logitcalib/density.hpp"

namespace logitcalib {

enum class Layer {
  kSoftmax,
  kSoftmaxTempered,
  kMl,
  kMap,
  kBayesOracle,  // analytic posterior of a synthetic generator
};

// "softmax", "softmax_T", "ml", "map", "bayes".
std::string_view to_string(Layer layer);
// Accepts the names above plus the CLI alias "ts" for softmax_T.
Layer parse_layer(std::string_view name);

// How per-dimension histogram likelihoods combine into P(x | c).
enum class LikelihoodMode {
  kProduct,       // prod_j hists[c][j](x_j)
  kOwnDimension,  // hists[c][c](x_c) only
};

std::string_view to_string(LikelihoodMode mode);
LikelihoodMode parse_likelihood_mode(std::string_view name);

/// Normalized class distribution produced by one prediction layer.
struct Posterior {
  std::vector<double> probs;
  // log of the evidence term the scores were divided by. For the ML/MAP
  // layers this is log sum_k L[k] (times the prior), i.e. log P(x).
  double log_normalizer = 0.0;
  Layer layer = Layer::kSoftmax;

  double normalizer() const;
  std::size_t num_classes() const noexcept { return probs.size(); }
};

struct Prediction {
  std::size_t label = 0;
  double confidence = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Argmax with ties going to the lowest class index.
Prediction predict(const Posterior& posterior);

Posterior softmax(std::span<const double> logits);
Posterior softmax_tempered(std::span<const double> logits, double temperature);

// Normalizes per-class log-scores; the building block shared by all layers.
Posterior posterior_from_log_scores(std::span<const double> log_scores, Layer layer);
// Normalizes per-class likelihoods given on the linear scale.
Posterior posterior_from_likelihoods(std::span<const double> likelihoods, Layer layer);

// log L[c] for every class, summed in log space.
std::vector<double> class_log_likelihoods(const ClassConditionalModel& model,
                                          std::span<const double> logits,
                                          LikelihoodMode mode = LikelihoodMode::kProduct);

// Uniform class priors: P(c | x) = L[c] / sum_k L[k].
Posterior ml_posterior(const ClassConditionalModel& model, std::span<const double> logits,
                       LikelihoodMode mode = LikelihoodMode::kProduct);

// P(c | x) proportional to L[c] * N(x_c; mu_c, sigma2_c). The Normal prior of
// class c is evaluated at the class's own logit x_c.
Posterior map_posterior(const ClassConditionalModel& model, std::span<const double> logits,
                        LikelihoodMode mode = LikelihoodMode::kProduct);

// MAP with a caller-supplied log-prior, log_prior(class, x_class).
using LogPriorFn = std::function<double(std::size_t, double)>;
Posterior map_posterior(const ClassConditionalModel& model, std::span<const double> logits,
                        const LogPriorFn& log_prior,
                        LikelihoodMode mode = LikelihoodMode::kProduct);

/// A configured prediction layer that can be applied to many logit vectors.
class PredictionLayer {
 public:
  static PredictionLayer Softmax();
  static PredictionLayer Tempered(double temperature);
  static PredictionLayer Ml(std::shared_ptr<const ClassConditionalModel> model,
                            LikelihoodMode mode = LikelihoodMode::kProduct);
  static PredictionLayer Map(std::shared_ptr<const ClassConditionalModel> model,
                             LikelihoodMode mode = LikelihoodMode::kProduct);

  Layer layer() const noexcept { return layer_; }
  double temperature() const noexcept { return temperature_; }

  Posterior operator()(std::span<const double> logits) const;

  // Output order matches input order.
  template <typename Records>
  std::vector<Posterior> apply(const Records& records) const {
    std::vector<Posterior> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back((*this)(r.logits));
    return out;
  }

 private:
  PredictionLayer(Layer layer, double temperature,
                  std::shared_ptr<const ClassConditionalModel> model, LikelihoodMode mode)
      : layer_(layer), temperature_(temperature), model_(std::move(model)), mode_(mode) {}

  Layer layer_;
  double temperature_;
  std::shared_ptr<const ClassConditionalModel> model_;
  LikelihoodMode mode_;
};

}  // namespace logitcalib
