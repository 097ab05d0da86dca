#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "doctest.h"
#include "logitcalib/calibration.hpp"
#include "logitcalib/error.hpp"
#include "logitcalib/synth.hpp"
#include "oracles.hpp"

using namespace logitcalib;

namespace {

// Independent mean NLL in extended precision.
long double reference_nll(const std::vector<LogitRecord>& records, long double t) {
  long double total = 0.0L;
  for (const auto& r : records) {
    long double s = 0.0L;
    for (double z : r.logits) s += std::exp(static_cast<long double>(z) / t);
    total += std::log(s) - static_cast<long double>(r.logits[*r.label]) / t;
  }
  return total / records.size();
}

std::vector<LogitRecord> scaled(std::vector<LogitRecord> records, double factor) {
  for (auto& r : records) {
    for (auto& z : r.logits) z *= factor;
  }
  return records;
}

}  // namespace

TEST_SUITE("calibration") {
  TEST_CASE("golden section finds a parabola's minimum") {
    const auto m = golden_section_minimize([](double x) { return (x - 1.234) * (x - 1.234); },
                                           0.0, 5.0, 1e-6);
    CHECK(m.x == doctest::Approx(1.234).epsilon(1e-5));
    CHECK_THROWS_AS(golden_section_minimize([](double x) { return x; }, 1.0, 1.0, 1e-3), Error);
  }

  TEST_CASE("mean_nll matches the extended-precision reference") {
    const auto data =
        generate(calibrated_spec({"a", "b", "c"}, 2.0, {0, 500, 0, 0}, 9)).select(Split::kValidation);
    for (double t : {0.3, 1.0, 2.7}) {
      CHECK(mean_nll(data, t) == doctest::Approx(static_cast<double>(reference_nll(data, t))).epsilon(1e-12));
    }
  }

  TEST_CASE("temperature recovered on calibrated and doubled logits") {
    const auto val =
        generate(calibrated_spec({"a", "b", "c"}, 2.0, {0, 20000, 0, 0}, 123)).select(Split::kValidation);
    const auto t1 = fit_temperature(val);
    CHECK(t1.temperature >= 0.9);
    CHECK(t1.temperature <= 1.1);
    const auto t2 = fit_temperature(scaled(val, 2.0));
    CHECK(t2.temperature >= 1.8);
    CHECK(t2.temperature <= 2.2);

    // Reported NLL is the NLL at the reported T, and never worse than T = 1.
    CHECK(std::abs(t1.nll - mean_nll(val, t1.temperature)) <= 1e-9);
    CHECK(t1.nll <= mean_nll(val, 1.0));
    CHECK(t2.nll <= mean_nll(scaled(val, 2.0), 1.0));
  }

  TEST_CASE("fitted temperature stays inside its bounds") {
    // Perfectly separable logits push T towards the lower bound; inverted
    // logits push it towards the upper bound.
    std::vector<LogitRecord> sharp;
    std::vector<LogitRecord> inverted;
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> pick(0, 1);
    for (int i = 0; i < 200; ++i) {
      const std::size_t c = pick(rng);
      std::vector<double> z{0.0, 0.0};
      z[c] = 10.0;
      sharp.push_back({z, c, Split::kValidation, {}});
      inverted.push_back({{0.01 * (c == 0 ? -1.0 : 1.0), 0.0}, c, Split::kValidation, {}});
    }
    for (const auto* set : {&sharp, &inverted}) {
      const auto t = fit_temperature(*set);
      CHECK(t.temperature >= kMinTemperature);
      CHECK(t.temperature <= kMaxTemperature);
      CHECK(t.nll <= mean_nll(*set, 1.0));
    }
  }

  TEST_CASE("fit_temperature errors") {
    CHECK_THROWS_AS(fit_temperature(std::vector<LogitRecord>{}), Error);
    const std::vector<LogitRecord> unlabeled{{{0.0, 1.0}, std::nullopt, Split::kUnseen, {}}};
    CHECK_THROWS_AS(fit_temperature(unlabeled), Error);
  }

  TEST_CASE("reliability: perfect predictions") {
    const std::vector<Posterior> preds(50, Posterior{{1.0, 0.0}, 0.0, Layer::kSoftmax});
    const std::vector<std::size_t> labels(50, 0);
    const auto d = reliability(preds, labels);
    CHECK(d.bins.size() == 10);
    CHECK(d.bin_edges.size() == 11);
    CHECK(d.bins.back().count == 50);
    CHECK(d.bins.back().accuracy == 1.0);
    CHECK(d.ece == 0.0);
  }

  TEST_CASE("reliability: two-record hand case") {
    const std::vector<double> conf{0.95, 0.95};
    const bool hits[] = {false, true};
    const auto d = reliability(conf, hits);
    CHECK(d.bins[9].count == 2);
    CHECK(d.bins[9].accuracy == 0.5);
    CHECK(d.bins[9].mean_confidence == 0.95);
    // |0.5 - 0.95| in binary floating point.
    CHECK(d.ece == 0.95 - 0.5);
    CHECK(std::abs(d.ece - 0.45) <= 1e-15);
  }

  TEST_CASE("reliability agrees with a brute-force ECE and sums counts") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t bins : {1u, 5u, 10u, 15u}) {
      std::vector<double> conf(3000);
      std::vector<bool> hit(3000);
      const auto hits = std::make_unique<bool[]>(3000);
      for (std::size_t i = 0; i < conf.size(); ++i) {
        conf[i] = i % 97 == 0 ? std::round(u(rng) * 10) / 10 : u(rng);
        hits[i] = hit[i] = u(rng) < conf[i] * 0.9;
      }
      const auto d = reliability(conf, std::span<const bool>(hits.get(), 3000), bins);
      CHECK(d.ece == doctest::Approx(oracle::ece(conf, hit, bins)).epsilon(1e-12));
      std::size_t total = 0;
      double weighted = 0.0;
      for (const auto& b : d.bins) {
        total += b.count;
        weighted += static_cast<double>(b.count) / 3000.0 * std::abs(b.accuracy - b.mean_confidence);
      }
      CHECK(total == 3000);
      CHECK(std::abs(weighted - d.ece) <= 1e-12);
    }
  }

  TEST_CASE("property: reliability is permutation invariant") {
    std::mt19937_64 rng(78);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Posterior> preds;
    std::vector<std::size_t> labels;
    for (int i = 0; i < 500; ++i) {
      const double a = u(rng);
      preds.push_back({{a, 1.0 - a}, 0.0, Layer::kSoftmax});
      labels.push_back(u(rng) < 0.5 ? 0 : 1);
    }
    const auto base = reliability(preds, labels);
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    for (int trial = 0; trial < 5; ++trial) {
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<Posterior> p2;
      std::vector<std::size_t> l2;
      for (auto i : order) {
        p2.push_back(preds[i]);
        l2.push_back(labels[i]);
      }
      const auto d = reliability(p2, l2);
      CHECK(std::abs(d.ece - base.ece) <= 1e-12);
      for (std::size_t b = 0; b < 10; ++b) CHECK(d.bins[b].count == base.bins[b].count);
    }
  }

  TEST_CASE("ECE of Bayes-calibrated posteriors shrinks with N") {
    const auto spec = separated_spec({"a", "b", "c"}, 2.0, {0, 0, 10000, 0}, 404);
    const auto test = generate(spec).select(Split::kTest);
    std::vector<Posterior> post;
    std::vector<std::size_t> labels;
    for (const auto& r : test) {
      post.push_back(bayes_posterior(spec, r.logits));
      labels.push_back(*r.label);
    }
    const auto ece_10k = reliability(post, labels).ece;
    const auto ece_1k = reliability(std::span(post).first(1000), std::span(labels).first(1000)).ece;
    CHECK(ece_10k < 0.02);
    CHECK(ece_10k <= ece_1k + 0.01);
  }

  TEST_CASE("reliability errors and CSV layout") {
    const std::vector<Posterior> preds(2, Posterior{{0.6, 0.4}, 0.0, Layer::kSoftmax});
    const std::vector<std::size_t> labels{0};
    CHECK_THROWS_AS(reliability(preds, labels), Error);
    const auto d = reliability(preds, std::vector<std::size_t>{0, 1}, 2);
    CHECK(reliability_csv(d) ==
          "bin_lo,bin_hi,count,mean_confidence,accuracy\n"
          "0,0.5,0,0,0\n"
          "0.5,1,2,0.59999999999999998,0.5\n");
  }
}
