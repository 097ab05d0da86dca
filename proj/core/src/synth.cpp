#include "logitcalib/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "json.hpp"
#include "logitcalib/error.hpp"
#include "logitcalib/numeric.hpp"

namespace logitcalib {

using nlohmann::json;

namespace {

constexpr double kOodShiftSd = 6.0;

void check_matrix(const std::vector<std::vector<double>>& m, std::size_t k,
                  const char* name) {
  if (m.size() != k) throw DataError(fmt::format("synth spec: {} needs {} rows", name, k));
  for (const auto& row : m) {
    if (row.size() != k) {
      throw DataError(fmt::format("synth spec: {} rows need {} entries", name, k));
    }
    for (double v : row) {
      if (!std::isfinite(v)) throw DataError(fmt::format("synth spec: non-finite {}", name));
    }
  }
}

}  // namespace

void validate(const SynthSpec& spec) {
  const std::size_t k = spec.num_classes();
  try {
    ClassRegistry check(spec.class_names);
  } catch (const Error& e) {
    throw DataError(fmt::format("synth spec: {}", e.what()));
  }
  check_matrix(spec.means, k, "means");
  check_matrix(spec.variances, k, "variances");
  for (const auto& row : spec.variances) {
    for (double v : row) {
      if (!(v > 0.0)) throw DataError("synth spec: variances must be positive");
    }
  }
  if (spec.priors.size() != k) throw DataError("synth spec: priors need K entries");
  for (double p : spec.priors) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw DataError("synth spec: priors must be nonnegative");
    }
  }
  if (std::abs(pairwise_sum(spec.priors) - 1.0) > 1e-12) {
    throw DataError("synth spec: priors must sum to 1");
  }
  if (spec.ood) {
    if (spec.ood->means.size() != k || spec.ood->variances.size() != k) {
      throw DataError("synth spec: ood means and variances need K entries");
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (!std::isfinite(spec.ood->means[j]) || !(spec.ood->variances[j] > 0.0) ||
          !std::isfinite(spec.ood->variances[j])) {
        throw DataError("synth spec: ood needs finite means and positive variances");
      }
    }
    if (spec.ood->tag.empty()) throw DataError("synth spec: ood tag must be non-empty");
  }
}

double pooled_sd(const SynthSpec& spec) {
  std::vector<double> all;
  for (const auto& row : spec.variances) all.insert(all.end(), row.begin(), row.end());
  return std::sqrt(pairwise_sum(all) / static_cast<double>(all.size()));
}

OodSpec default_ood(const SynthSpec& spec) {
  const std::size_t k = spec.num_classes();
  const double sd = pooled_sd(spec);
  OodSpec ood;
  ood.means.resize(k);
  ood.variances.assign(k, sd * sd);
  for (std::size_t j = 0; j < k; ++j) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) top = std::max(top, spec.means[c][j]);
    ood.means[j] = j == 0 ? top + kOodShiftSd * sd : top;
  }
  return ood;
}

SynthSpec separated_spec(std::vector<std::string> class_names, double separation,
                         SplitCounts counts, std::uint64_t seed) {
  const std::size_t k = class_names.size();
  SynthSpec spec;
  spec.class_names = std::move(class_names);
  spec.means.assign(k, std::vector<double>(k, 0.0));
  spec.variances.assign(k, std::vector<double>(k, 1.0));
  for (std::size_t c = 0; c < k; ++c) spec.means[c][c] = separation;
  spec.priors.assign(k, 1.0 / static_cast<double>(k));
  spec.counts = counts;
  spec.seed = seed;
  return spec;
}

SynthSpec calibrated_spec(std::vector<std::string> class_names, double scale,
                          SplitCounts counts, std::uint64_t seed) {
  SynthSpec spec = separated_spec(std::move(class_names), scale, counts, seed);
  for (auto& row : spec.variances) std::fill(row.begin(), row.end(), scale);
  return spec;
}

SplitDataset generate(const SynthSpec& spec) {
  validate(spec);
  const std::size_t k = spec.num_classes();
  SplitDataset data{ClassRegistry(spec.class_names), {}};

  std::mt19937_64 rng(spec.seed);
  std::discrete_distribution<std::size_t> pick_class(spec.priors.begin(), spec.priors.end());
  std::normal_distribution<double> unit(0.0, 1.0);

  const auto draw = [&](const std::vector<double>& mu, const std::vector<double>& var) {
    std::vector<double> x(k);
    for (std::size_t j = 0; j < k; ++j) x[j] = mu[j] + std::sqrt(var[j]) * unit(rng);
    return x;
  };

  const std::pair<Split, std::size_t> labeled[] = {
      {Split::kTrain, spec.counts.train},
      {Split::kValidation, spec.counts.validation},
      {Split::kTest, spec.counts.test}};
  data.records.reserve(spec.counts.train + spec.counts.validation + spec.counts.test +
                       spec.counts.unseen);
  for (const auto& [split, n] : labeled) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = pick_class(rng);
      data.records.push_back({draw(spec.means[c], spec.variances[c]), c, split, std::nullopt});
    }
  }
  if (spec.counts.unseen > 0) {
    const OodSpec ood = spec.ood ? *spec.ood : default_ood(spec);
    for (std::size_t i = 0; i < spec.counts.unseen; ++i) {
      data.records.push_back({draw(ood.means, ood.variances), std::nullopt, Split::kUnseen,
                              ood.tag});
    }
  }
  return data;
}

Posterior bayes_posterior(const SynthSpec& spec, std::span<const double> logits) {
  const std::size_t k = spec.num_classes();
  if (logits.size() != k) {
    throw DataError(fmt::format("bayes_posterior: expected {} logits, got {}", k,
                                logits.size()));
  }
  std::vector<double> scores(k);
  for (std::size_t c = 0; c < k; ++c) {
    if (spec.priors[c] == 0.0) {
      scores[c] = -std::numeric_limits<double>::infinity();
      continue;
    }
    std::vector<double> terms(k + 1);
    for (std::size_t j = 0; j < k; ++j) {
      const double d = logits[j] - spec.means[c][j];
      const double v = spec.variances[c][j];
      terms[j] = -0.5 * d * d / v - 0.5 * std::log(2.0 * std::numbers::pi * v);
    }
    terms[k] = std::log(spec.priors[c]);
    scores[c] = pairwise_sum(terms);
  }
  return posterior_from_log_scores(scores, Layer::kBayesOracle);
}

std::string to_json(const SynthSpec& spec) {
  json doc;
  doc["classes"] = spec.class_names;
  doc["means"] = spec.means;
  doc["variances"] = spec.variances;
  doc["priors"] = spec.priors;
  doc["counts"] = {{"train", spec.counts.train},
                   {"validation", spec.counts.validation},
                   {"test", spec.counts.test},
                   {"unseen", spec.counts.unseen}};
  if (spec.ood) {
    doc["ood"] = {{"means", spec.ood->means},
                  {"variances", spec.ood->variances},
                  {"tag", spec.ood->tag}};
  }
  doc["seed"] = spec.seed;
  return doc.dump(2) + "\n";
}

SynthSpec synth_spec_from_json(std::string_view text) {
  SynthSpec spec;
  try {
    const json doc = json::parse(text);
    spec.class_names = doc.at("classes").get<std::vector<std::string>>();
    spec.means = doc.at("means").get<std::vector<std::vector<double>>>();
    spec.variances = doc.at("variances").get<std::vector<std::vector<double>>>();
    if (doc.contains("priors")) {
      spec.priors = doc.at("priors").get<std::vector<double>>();
    } else {
      spec.priors.assign(spec.class_names.size(),
                         1.0 / static_cast<double>(spec.class_names.size()));
    }
    const json& counts = doc.at("counts");
    spec.counts.train = counts.value("train", std::size_t{0});
    spec.counts.validation = counts.value("validation", std::size_t{0});
    spec.counts.test = counts.value("test", std::size_t{0});
    spec.counts.unseen = counts.value("unseen", std::size_t{0});
    if (const auto it = doc.find("ood"); it != doc.end() && !it->is_null()) {
      OodSpec ood;
      ood.means = it->at("means").get<std::vector<double>>();
      ood.variances = it->at("variances").get<std::vector<double>>();
      ood.tag = it->value("tag", std::string("ood"));
      spec.ood = std::move(ood);
    }
    spec.seed = doc.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw DataError(fmt::format("malformed synth spec: {}", e.what()));
  }
  validate(spec);
  return spec;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  return synth_spec_from_json(read_file(path));
}

}  // namespace logitcalib
