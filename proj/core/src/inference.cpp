#include "logitcalib/inference.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "logitcalib/error.hpp"
#include "logitcalib/numeric.hpp"

namespace logitcalib {

std::string_view to_string(Layer layer) {
  switch (layer) {
    case Layer::kSoftmax: return "softmax";
    case Layer::kSoftmaxTempered: return "softmax_T";
    case Layer::kMl: return "ml";
    case Layer::kMap: return "map";
    case Layer::kBayesOracle: return "bayes";
  }
  return "unknown";
}

Layer parse_layer(std::string_view name) {
  if (name == "softmax") return Layer::kSoftmax;
  if (name == "softmax_T" || name == "ts") return Layer::kSoftmaxTempered;
  if (name == "ml") return Layer::kMl;
  if (name == "map") return Layer::kMap;
  if (name == "bayes") return Layer::kBayesOracle;
  throw UsageError(fmt::format("unknown layer '{}'", name));
}

std::string_view to_string(LikelihoodMode mode) {
  return mode == LikelihoodMode::kProduct ? "product" : "own-dimension";
}

LikelihoodMode parse_likelihood_mode(std::string_view name) {
  if (name == "product") return LikelihoodMode::kProduct;
  if (name == "own-dimension") return LikelihoodMode::kOwnDimension;
  throw UsageError(fmt::format("unknown likelihood mode '{}'", name));
}

double Posterior::normalizer() const { return std::exp(log_normalizer); }

Prediction predict(const Posterior& posterior) {
  const auto it = std::max_element(posterior.probs.begin(), posterior.probs.end());
  if (it == posterior.probs.end()) return {};
  return {static_cast<std::size_t>(it - posterior.probs.begin()), *it};
}

namespace {

void require_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw DataError("non-finite logit");
  }
}

void require_dims(const ClassConditionalModel& model, std::span<const double> logits) {
  if (logits.size() != model.num_classes()) {
    throw DataError(fmt::format("logit vector has {} entries, model expects {}",
                                logits.size(), model.num_classes()));
  }
}

}  // namespace

Posterior posterior_from_log_scores(std::span<const double> log_scores, Layer layer) {
  Posterior p;
  p.layer = layer;
  p.probs = normalize_log_scores(log_scores);
  p.log_normalizer = log_sum_exp(log_scores);
  return p;
}

Posterior posterior_from_likelihoods(std::span<const double> likelihoods, Layer layer) {
  std::vector<double> logs(likelihoods.size());
  std::transform(likelihoods.begin(), likelihoods.end(), logs.begin(),
                 [](double l) { return std::log(l); });
  return posterior_from_log_scores(logs, layer);
}

Posterior softmax(std::span<const double> logits) {
  require_finite(logits);
  if (logits.empty()) throw DataError("softmax of an empty vector");
  return posterior_from_log_scores(logits, Layer::kSoftmax);
}

Posterior softmax_tempered(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw UsageError(fmt::format("temperature must be positive, got {}", temperature));
  }
  require_finite(logits);
  if (logits.empty()) throw DataError("softmax of an empty vector");
  std::vector<double> scaled(logits.size());
  std::transform(logits.begin(), logits.end(), scaled.begin(),
                 [temperature](double z) { return z / temperature; });
  return posterior_from_log_scores(scaled, Layer::kSoftmaxTempered);
}

std::vector<double> class_log_likelihoods(const ClassConditionalModel& model,
                                          std::span<const double> logits,
                                          LikelihoodMode mode) {
  require_dims(model, logits);
  require_finite(logits);
  const std::size_t k = model.num_classes();
  std::vector<double> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    if (mode == LikelihoodMode::kOwnDimension) {
      out[c] = std::log(eval_histogram(model.hists[c][c], logits[c]));
      continue;
    }
    std::vector<double> terms(k);
    for (std::size_t j = 0; j < k; ++j) {
      terms[j] = std::log(eval_histogram(model.hists[c][j], logits[j]));
    }
    out[c] = pairwise_sum(terms);
  }
  return out;
}

Posterior ml_posterior(const ClassConditionalModel& model, std::span<const double> logits,
                       LikelihoodMode mode) {
  const auto log_l = class_log_likelihoods(model, logits, mode);
  return posterior_from_log_scores(log_l, Layer::kMl);
}

Posterior map_posterior(const ClassConditionalModel& model, std::span<const double> logits,
                        const LogPriorFn& log_prior, LikelihoodMode mode) {
  auto scores = class_log_likelihoods(model, logits, mode);
  for (std::size_t c = 0; c < scores.size(); ++c) scores[c] += log_prior(c, logits[c]);
  return posterior_from_log_scores(scores, Layer::kMap);
}

Posterior map_posterior(const ClassConditionalModel& model, std::span<const double> logits,
                        LikelihoodMode mode) {
  return map_posterior(
      model, logits,
      [&model](std::size_t c, double x) { return log_eval_gaussian(model.priors[c], x); },
      mode);
}

PredictionLayer PredictionLayer::Softmax() {
  return {Layer::kSoftmax, 1.0, nullptr, LikelihoodMode::kProduct};
}

PredictionLayer PredictionLayer::Tempered(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw UsageError(fmt::format("temperature must be positive, got {}", temperature));
  }
  return {Layer::kSoftmaxTempered, temperature, nullptr, LikelihoodMode::kProduct};
}

PredictionLayer PredictionLayer::Ml(std::shared_ptr<const ClassConditionalModel> model,
                                    LikelihoodMode mode) {
  if (!model) throw UsageError("the ml layer needs a fitted model");
  return {Layer::kMl, 1.0, std::move(model), mode};
}

PredictionLayer PredictionLayer::Map(std::shared_ptr<const ClassConditionalModel> model,
                                     LikelihoodMode mode) {
  if (!model) throw UsageError("the map layer needs a fitted model");
  return {Layer::kMap, 1.0, std::move(model), mode};
}

Posterior PredictionLayer::operator()(std::span<const double> logits) const {
  switch (layer_) {
    case Layer::kSoftmax: return softmax(logits);
    case Layer::kSoftmaxTempered: return softmax_tempered(logits, temperature_);
    case Layer::kMl: return ml_posterior(*model_, logits, mode_);
    case Layer::kMap: return map_posterior(*model_, logits, mode_);
    case Layer::kBayesOracle: break;
  }
  throw UsageError(fmt::format("layer '{}' cannot be applied here", to_string(layer_)));
}

}  // namespace logitcalib
