#include <cmath>
#include <random>

#include "doctest.h"
#include "logitcalib/error.hpp"
#include "logitcalib/synth.hpp"
#include "oracles.hpp"

using namespace logitcalib;

namespace {

SynthSpec two_class(SplitCounts counts, std::uint64_t seed) {
  return separated_spec({"a", "b"}, 1.0, counts, seed);
}

// Two-class posterior of class 0 as a logistic of the log-likelihood ratio,
// written directly from the Gaussian density.
double ratio_oracle(const SynthSpec& s, const std::vector<double>& x) {
  long double llr = std::log(static_cast<long double>(s.priors[1]) / s.priors[0]);
  for (std::size_t d = 0; d < x.size(); ++d) {
    const long double v0 = s.variances[0][d], v1 = s.variances[1][d];
    const long double r0 = x[d] - s.means[0][d], r1 = x[d] - s.means[1][d];
    llr += -0.5L * std::log(v1 / v0) - r1 * r1 / (2 * v1) + r0 * r0 / (2 * v0);
  }
  return static_cast<double>(1.0L / (1.0L + std::exp(llr)));
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("empty splits") {
    const auto d = generate(two_class({0, 0, 5, 0}, 1));
    CHECK(d.count(Split::kTrain) == 0);
    CHECK(d.count(Split::kTest) == 5);
    CHECK(generate(two_class({0, 0, 0, 0}, 1)).records.empty());
  }

  TEST_CASE("same seed, same dataset; different seed, different dataset") {
    auto spec = two_class({100, 10, 10, 10}, 7);
    spec.ood = default_ood(spec);
    const auto a = generate(spec);
    CHECK(a == generate(spec));
    spec.seed = 8;
    CHECK_FALSE(a == generate(spec));
  }

  TEST_CASE("unseen records carry no label and the OOD tag") {
    auto spec = two_class({0, 0, 0, 20}, 3);
    spec.ood = default_ood(spec);
    for (const auto& r : generate(spec).records) {
      CHECK(r.split == Split::kUnseen);
      CHECK_FALSE(r.label.has_value());
      CHECK(r.tag == std::string("ood"));
    }
  }

  TEST_CASE("class frequencies within 3 sigma of the priors") {
    auto spec = two_class({100000, 0, 0, 0}, 2024);
    const auto counts = generate(spec).class_counts(Split::kTrain);
    const double sigma = std::sqrt(0.25 / 100000.0);
    CHECK(std::abs(counts[0] / 100000.0 - 0.5) <= 3 * sigma);

    spec.priors = {0.2, 0.8};
    const auto skewed = generate(spec).class_counts(Split::kTrain);
    CHECK(std::abs(skewed[0] / 100000.0 - 0.2) <= 3 * std::sqrt(0.16 / 100000.0));
  }

  TEST_CASE("per-dimension sample moments match the generating Gaussians") {
    auto spec = separated_spec({"a", "b", "c"}, 3.0, {60000, 0, 0, 0}, 5);
    spec.variances[1] = {0.5, 2.0, 1.0};
    const auto train = generate(spec).select(Split::kTrain);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t d = 0; d < 3; ++d) {
        double n = 0, s = 0, ss = 0;
        for (const auto& r : train) {
          if (*r.label != c) continue;
          n += 1;
          s += r.logits[d];
          ss += r.logits[d] * r.logits[d];
        }
        const double mean = s / n;
        const double var = ss / n - mean * mean;
        const double v = spec.variances[c][d];
        CHECK(std::abs(mean - spec.means[c][d]) <= 4 * std::sqrt(v / n));
        CHECK(std::abs(var - v) <= 4 * v * std::sqrt(2.0 / n));
      }
    }
  }

  TEST_CASE("bayes posterior: symmetric midpoint and degenerate prior") {
    const auto spec = two_class({0, 0, 0, 0}, 0);
    const auto mid = bayes_posterior(spec, std::vector<double>{0.5, 0.5});
    CHECK(mid.probs[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mid.probs[1] == doctest::Approx(0.5).epsilon(1e-15));

    auto degenerate = spec;
    degenerate.priors = {1.0, 0.0};
    std::mt19937_64 rng(4);
    for (int i = 0; i < 100; ++i) {
      const auto p = bayes_posterior(degenerate, oracle::random_logits(rng, 2, 10.0));
      CHECK(p.probs[0] == 1.0);
      CHECK(p.probs[1] == 0.0);
    }
    CHECK_THROWS_AS(bayes_posterior(spec, std::vector<double>{1.0}), Error);
  }

  TEST_CASE("bayes posterior matches the closed-form likelihood ratio") {
    auto spec = two_class({0, 0, 0, 0}, 0);
    spec.priors = {0.3, 0.7};
    spec.variances = {{0.7, 1.3}, {2.0, 0.4}};
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
      const auto x = oracle::random_logits(rng, 2, 4.0);
      const auto p = bayes_posterior(spec, x);
      CHECK(std::abs(p.probs[0] - ratio_oracle(spec, x)) <= 1e-12);
      CHECK(p.probs[0] + p.probs[1] == doctest::Approx(1.0).epsilon(1e-15));
    }
  }

  TEST_CASE("oracle coherence: label frequency near a point tracks the posterior") {
    const auto spec = two_class({100000, 0, 0, 0}, 31);
    const auto train = generate(spec).select(Split::kTrain);
    for (const std::vector<double> x : {std::vector<double>{0.5, 0.5}, {1.0, 0.2}, {0.1, 0.9}}) {
      double n = 0, hits = 0;
      for (const auto& r : train) {
        if (std::abs(r.logits[0] - x[0]) > 0.1 || std::abs(r.logits[1] - x[1]) > 0.1) continue;
        n += 1;
        hits += *r.label == 0 ? 1 : 0;
      }
      REQUIRE(n > 200);
      CHECK(std::abs(hits / n - bayes_posterior(spec, x).probs[0]) < 0.05 + 3 * std::sqrt(0.25 / n));
    }
  }

  TEST_CASE("default OOD sits at least 6 pooled sd from every class mean") {
    for (double sep : {1.0, 3.0, 8.0}) {
      const auto spec = separated_spec({"a", "b", "c"}, sep, {0, 0, 0, 0}, 0);
      const auto ood = default_ood(spec);
      const double sd = pooled_sd(spec);
      for (const auto& mu : spec.means) {
        double d2 = 0;
        for (std::size_t d = 0; d < mu.size(); ++d) d2 += (ood.means[d] - mu[d]) * (ood.means[d] - mu[d]);
        CHECK(std::sqrt(d2) >= 6 * sd - 1e-12);
      }
    }
  }

  TEST_CASE("synth spec validation") {
    auto spec = two_class({1, 0, 0, 0}, 0);
    CHECK_NOTHROW(validate(spec));
    auto bad = spec;
    bad.priors = {0.5, 0.6};
    CHECK_THROWS_AS(validate(bad), Error);
    bad = spec;
    bad.variances[0][1] = 0.0;
    CHECK_THROWS_AS(generate(bad), Error);
    bad = spec;
    bad.means[1].pop_back();
    CHECK_THROWS_AS(validate(bad), Error);
    bad = spec;
    bad.ood = OodSpec{{1.0, 2.0}, {1.0, -1.0}, "x"};
    CHECK_THROWS_AS(validate(bad), Error);

    // Without an explicit OOD generator the default one is used.
    auto implicit = spec;
    implicit.counts.unseen = 3;
    auto explicit_ood = implicit;
    explicit_ood.ood = default_ood(implicit);
    CHECK(generate(implicit) == generate(explicit_ood));
  }

  TEST_CASE("synth spec JSON round trip") {
    auto spec = separated_spec({"ped", "car", "cyc"}, 2.5, {10, 20, 30, 40}, 0xFFFFFFFFFFFFFFFFull);
    spec.ood = default_ood(spec);
    spec.priors = {0.1, 0.3, 0.6};
    const auto back = synth_spec_from_json(to_json(spec));
    CHECK(back == spec);
    CHECK(to_json(back) == to_json(spec));
    CHECK_THROWS_AS(synth_spec_from_json("{\"classes\":[\"a\"]}"), Error);
  }
}
