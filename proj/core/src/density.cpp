#include "logitcalib/density.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "logitcalib/error.hpp"
#include "logitcalib/numeric.hpp"

namespace logitcalib {

using nlohmann::json;

namespace {

constexpr double kDegenerateWiden = 1e-9;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DataError(fmt::format("{}: non-finite value", what));
}

}  // namespace

double HistogramDensity::smoothing_floor() const {
  const auto n = static_cast<double>(sample_count);
  const auto b = static_cast<double>(bin_count());
  return smoothing_alpha / (n + smoothing_alpha * b);
}

std::optional<std::size_t> HistogramDensity::bin_of(double x) const {
  if (!(x >= lo() && x <= hi())) return std::nullopt;
  // First edge strictly greater than x; its predecessor opens x's bin.
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  const auto idx = static_cast<std::size_t>(it - edges.begin());
  return std::min(idx - 1, bin_count() - 1);
}

HistogramDensity fit_histogram(std::span<const double> samples, std::size_t bins,
                               std::optional<std::pair<double, double>> range,
                               double alpha) {
  if (samples.empty()) throw DataError("fit_histogram: empty sample list");
  if (bins < 1) throw DataError("fit_histogram: bin count must be at least 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw DataError("fit_histogram: smoothing alpha must be finite and >= 0");
  }
  for (double s : samples) require_finite(s, "fit_histogram");

  double lo = 0.0;
  double hi = 0.0;
  if (range) {
    std::tie(lo, hi) = *range;
    require_finite(lo, "fit_histogram range");
    require_finite(hi, "fit_histogram range");
    if (!(lo < hi)) throw DataError("fit_histogram: range needs lo < hi");
  } else {
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    lo = *mn;
    hi = *mx;
    if (lo == hi) {
      lo -= kDegenerateWiden;
      hi += kDegenerateWiden;
    }
  }

  HistogramDensity h;
  h.smoothing_alpha = alpha;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    h.edges[b] = lo + width * static_cast<double>(b);
  }
  h.edges[bins] = hi;
  if (!std::is_sorted(h.edges.begin(), h.edges.end(), std::less_equal<>{})) {
    throw DataError("fit_histogram: range too narrow for the requested bins");
  }

  std::vector<double> counts(bins, 0.0);
  h.masses.assign(bins, 0.0);
  std::size_t n = 0;
  for (double s : samples) {
    if (const auto b = h.bin_of(s)) {
      counts[*b] += 1.0;
      ++n;
    }
  }
  if (n == 0 && alpha == 0.0) {
    throw DataError("fit_histogram: no samples inside the range and alpha is 0");
  }
  h.sample_count = n;

  const double denom = static_cast<double>(n) + alpha * static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) h.masses[b] = (counts[b] + alpha) / denom;
  return h;
}

double eval_histogram(const HistogramDensity& h, double x) {
  require_finite(x, "eval_histogram");
  const auto b = h.bin_of(x);
  return b ? h.masses[*b] : h.smoothing_floor();
}

GaussianDensity fit_gaussian(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw DataError("fit_gaussian: need at least 2 samples");
  }
  for (double s : samples) require_finite(s, "fit_gaussian");
  const auto mv = mean_variance(samples);
  if (!(mv.variance > 0.0)) throw DataError("fit_gaussian: zero variance");
  return {mv.mean, mv.variance};
}

double log_eval_gaussian(const GaussianDensity& g, double x) {
  require_finite(x, "eval_gaussian");
  const double d = x - g.mu;
  return -0.5 * (d * d / g.sigma2) - 0.5 * std::log(2.0 * std::numbers::pi * g.sigma2);
}

double eval_gaussian(const GaussianDensity& g, double x) {
  return std::exp(log_eval_gaussian(g, x));
}

ClassConditionalModel fit_class_conditional(const SplitDataset& data,
                                            std::size_t bins, double alpha) {
  const std::size_t k = data.num_classes();
  require_train_coverage(data, 2);

  // samples[c][j]: dimension j of the class-c training logits.
  std::vector<std::vector<std::vector<double>>> samples(
      k, std::vector<std::vector<double>>(k));
  for (const auto& r : data.records) {
    if (r.split != Split::kTrain) continue;
    for (std::size_t j = 0; j < k; ++j) samples[*r.label][j].push_back(r.logits[j]);
  }

  ClassConditionalModel model;
  model.registry = data.registry;
  model.bin_count = bins;
  model.alpha = alpha;
  model.hists.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < k; ++j) {
      try {
        model.hists[c].push_back(fit_histogram(samples[c][j], bins, {}, alpha));
      } catch (const Error& e) {
        throw DataError(fmt::format("class '{}', dimension {}: {}",
                                    data.registry.name(c), j, e.what()));
      }
    }
    try {
      model.priors.push_back(fit_gaussian(samples[c][c]));
    } catch (const Error& e) {
      throw DataError(fmt::format("class '{}' prior: {}", data.registry.name(c),
                                  e.what()));
    }
  }
  return model;
}

void validate(const ClassConditionalModel& model) {
  const std::size_t k = model.num_classes();
  if (k < 2) throw DataError("model: registry needs at least two classes");
  if (model.bin_count < 1) throw DataError("model: bin_count must be >= 1");
  if (!(model.alpha >= 0.0)) throw DataError("model: alpha must be >= 0");
  if (model.hists.size() != k || model.priors.size() != k) {
    throw DataError("model: expected K x K histograms and K priors");
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (model.hists[c].size() != k) {
      throw DataError("model: expected K x K histograms and K priors");
    }
    for (std::size_t j = 0; j < k; ++j) {
      const auto& h = model.hists[c][j];
      const std::string where = fmt::format("model hist[{}][{}]", c, j);
      if (h.masses.size() != model.bin_count || h.edges.size() != model.bin_count + 1) {
        throw DataError(where + ": bin count mismatch");
      }
      if (!std::is_sorted(h.edges.begin(), h.edges.end(), std::less_equal<>{}) ||
          std::adjacent_find(h.edges.begin(), h.edges.end()) != h.edges.end()) {
        throw DataError(where + ": edges must be strictly increasing");
      }
      if (h.smoothing_alpha != model.alpha) {
        throw DataError(where + ": smoothing alpha differs from the model's");
      }
      for (double m : h.masses) {
        if (!(m >= 0.0) || !std::isfinite(m)) {
          throw DataError(where + ": invalid mass");
        }
      }
      if (std::abs(pairwise_sum(h.masses) - 1.0) > 1e-9) {
        throw DataError(where + ": masses do not sum to 1");
      }
    }
    const auto& p = model.priors[c];
    if (!std::isfinite(p.mu) || !(p.sigma2 > 0.0) || !std::isfinite(p.sigma2)) {
      throw DataError(fmt::format("model prior[{}]: needs finite mu and sigma2 > 0", c));
    }
  }
}

std::string to_json(const ClassConditionalModel& model) {
  json doc;
  doc["registry"] = model.registry.names();
  doc["bin_count"] = model.bin_count;
  doc["alpha"] = model.alpha;
  json hists = json::array();
  for (const auto& row : model.hists) {
    json jrow = json::array();
    for (const auto& h : row) {
      jrow.push_back({{"edges", h.edges},
                      {"masses", h.masses},
                      {"sample_count", h.sample_count}});
    }
    hists.push_back(std::move(jrow));
  }
  doc["hists"] = std::move(hists);
  json priors = json::array();
  for (const auto& p : model.priors) priors.push_back({{"mu", p.mu}, {"sigma2", p.sigma2}});
  doc["priors"] = std::move(priors);
  // nlohmann::json keeps object keys in a std::map, so output is key-sorted.
  return doc.dump() + "\n";
}

ClassConditionalModel model_from_json(std::string_view text) {
  ClassConditionalModel model;
  try {
    const json doc = json::parse(text);
    model.registry = ClassRegistry(doc.at("registry").get<std::vector<std::string>>());
    model.bin_count = doc.at("bin_count").get<std::size_t>();
    model.alpha = doc.at("alpha").get<double>();
    for (const auto& jrow : doc.at("hists")) {
      std::vector<HistogramDensity> row;
      for (const auto& jh : jrow) {
        HistogramDensity h;
        h.edges = jh.at("edges").get<std::vector<double>>();
        h.masses = jh.at("masses").get<std::vector<double>>();
        h.sample_count = jh.at("sample_count").get<std::size_t>();
        h.smoothing_alpha = model.alpha;
        row.push_back(std::move(h));
      }
      model.hists.push_back(std::move(row));
    }
    for (const auto& jp : doc.at("priors")) {
      model.priors.push_back({jp.at("mu").get<double>(), jp.at("sigma2").get<double>()});
    }
  } catch (const json::exception& e) {
    throw DataError(fmt::format("malformed model JSON: {}", e.what()));
  }
  validate(model);
  return model;
}

void save_model(const ClassConditionalModel& model,
                const std::filesystem::path& path) {
  validate(model);
  write_file(path, to_json(model));
}

ClassConditionalModel load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace logitcalib
