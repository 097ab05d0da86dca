#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logitcalib/dataset.hpp"
#include "logitcalib/inference.hpp"

namespace logitcalib {

struct SplitCounts {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
  std::size_t unseen = 0;

  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

/// Independent Gaussian per logit dimension for records of no known class.
struct OodSpec {
  std::vector<double> means;
  std::vector<double> variances;
  std::string tag = "ood";

  friend bool operator==(const OodSpec&, const OodSpec&) = default;
};

/// Generator of logit vectors with known class-conditional Gaussians:
/// x_j | c ~ N(means[c][j], variances[c][j]) independently over j.
struct SynthSpec {
  std::vector<std::string> class_names;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> variances;
  std::vector<double> priors;
  SplitCounts counts;
  // Used for the unseen split; defaults to default_ood(*this) when absent.
  std::optional<OodSpec> ood;
  std::uint64_t seed = 0;

  std::size_t num_classes() const noexcept { return class_names.size(); }

  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

// Throws a usage error describing the first violated constraint.
void validate(const SynthSpec& spec);

// sqrt of the mean of all class variances.
double pooled_sd(const SynthSpec& spec);

// Shifted 6 pooled standard deviations past the largest class mean along
// dimension 0, and placed at the largest class mean in every other
// dimension. The logit argmax is dimension 0, yet no class generates such
// vectors.
OodSpec default_ood(const SynthSpec& spec);

// Class c has mean `separation` on dimension c, 0 elsewhere, unit variance
// and uniform priors.
SynthSpec separated_spec(std::vector<std::string> class_names, double separation,
                         SplitCounts counts, std::uint64_t seed);

// Means scale * e_c, variances `scale`, uniform priors. Under this generator
// softmax(x) is exactly the Bayes posterior.
SynthSpec calibrated_spec(std::vector<std::string> class_names, double scale,
                          SplitCounts counts, std::uint64_t seed);

// Splits are generated in the order train, validation, test, unseen. Each
// labeled record draws its class from `priors`, then its logits.
SplitDataset generate(const SynthSpec& spec);

// Exact posterior of the generator (product of per-dimension Normals times
// the class prior, normalized).
Posterior bayes_posterior(const SynthSpec& spec, std::span<const double> logits);

std::string to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(std::string_view text);
SynthSpec load_synth_spec(const std::filesystem::path& path);

}  // namespace logitcalib
