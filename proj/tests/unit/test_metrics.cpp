#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "logitcalib/error.hpp"
#include "logitcalib/inference.hpp"
#include "logitcalib/metrics.hpp"
#include "logitcalib/synth.hpp"

using namespace logitcalib;

namespace {

ConfusionMatrix permuted(const ConfusionMatrix& m, const std::vector<std::size_t>& perm) {
  ConfusionMatrix out(m.num_classes());
  for (std::size_t t = 0; t < m.num_classes(); ++t) {
    for (std::size_t p = 0; p < m.num_classes(); ++p) out.at(perm[t], perm[p]) = m.at(t, p);
  }
  return out;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("confusion basics") {
    const std::vector<std::size_t> labels{0, 1, 2, 2, 1};
    const auto perfect = confusion(labels, labels, 3);
    for (std::size_t t = 0; t < 3; ++t) {
      for (std::size_t p = 0; p < 3; ++p) {
        if (t != p) CHECK(perfect.at(t, p) == 0);
      }
    }
    CHECK(perfect.total() == 5);

    const std::vector<std::size_t> zeros(5, 0);
    const auto col = confusion(zeros, labels, 3);
    CHECK(col.at(0, 0) + col.at(1, 0) + col.at(2, 0) == 5);
    CHECK_THROWS_AS(confusion(zeros, std::vector<std::size_t>{0}, 3), Error);
  }

  TEST_CASE("row sums equal label counts on a random 1k case") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> pick(0, 3);
    std::vector<std::size_t> pred(1000), lab(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
      pred[i] = pick(rng);
      lab[i] = pick(rng);
    }
    const auto m = confusion(pred, lab, 4);
    for (std::size_t c = 0; c < 4; ++c) {
      std::size_t row = 0;
      for (std::size_t p = 0; p < 4; ++p) row += m.at(c, p);
      CHECK(row == static_cast<std::size_t>(std::count(lab.begin(), lab.end(), c)));
    }
  }

  TEST_CASE("F-score and FPR hand cases") {
    const auto diag = ConfusionMatrix::from_rows({{5, 0, 0}, {0, 7, 0}, {0, 0, 2}});
    CHECK(f_score_avg(diag) == 1.0);
    CHECK(fpr_avg(diag) == 0.0);

    const auto m = ConfusionMatrix::from_rows({{8, 2}, {2, 8}});
    CHECK(f_scores(m) == std::vector<double>{0.8, 0.8});
    CHECK(f_score_avg(m) == 0.8);
    CHECK(false_positive_rates(m) == std::vector<double>{0.2, 0.2});
    CHECK(fpr_avg(m) == 0.2);
    CHECK(fpr_micro(m) == 0.2);
    CHECK(f_score_weighted(m) == doctest::Approx(0.8));

    CHECK_THROWS_AS(f_score_avg(ConfusionMatrix(3)), Error);
    CHECK_THROWS_AS(fpr_avg(ConfusionMatrix(3)), Error);
  }

  TEST_CASE("a never-predicted class contributes F1 = 0") {
    const auto m = ConfusionMatrix::from_rows({{4, 0}, {3, 0}});
    const auto f = f_scores(m);
    CHECK(f[1] == 0.0);
    CHECK(f[0] == doctest::Approx(8.0 / 11.0));
  }

  TEST_CASE("property: metrics invariant under class relabeling") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<std::size_t> cnt(0, 50);
    for (int trial = 0; trial < 200; ++trial) {
      ConfusionMatrix m(4);
      for (std::size_t t = 0; t < 4; ++t) {
        for (std::size_t p = 0; p < 4; ++p) m.at(t, p) = cnt(rng) + (t == p ? 30 : 0);
      }
      std::vector<std::size_t> perm{0, 1, 2, 3};
      std::shuffle(perm.begin(), perm.end(), rng);
      const auto q = permuted(m, perm);
      CHECK(f_score_avg(q) == doctest::Approx(f_score_avg(m)).epsilon(1e-14));
      CHECK(fpr_avg(q) == doctest::Approx(fpr_avg(m)).epsilon(1e-14));
      CHECK(f_score_avg(m) >= 0.0);
      CHECK(f_score_avg(m) <= 1.0);
      CHECK(fpr_avg(m) >= 0.0);
      CHECK(fpr_avg(m) <= 1.0);
    }
  }

  TEST_CASE("unseen statistics") {
    const auto uniform = softmax(std::vector<double>{0.0, 0.0, 0.0});
    const std::vector<Posterior> all_uniform(777, uniform);
    const auto s = unseen_stats(all_uniform);
    CHECK(s.mean == 1.0 / 3.0);
    CHECK(s.variance == 0.0);

    const std::vector<Posterior> two{{{0.9, 0.1}, 0.0, Layer::kMl}, {{0.3, 0.7}, 0.0, Layer::kMl}};
    const auto t = unseen_stats(two);
    CHECK(t.mean == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(t.variance == doctest::Approx(0.02).epsilon(1e-12));
    CHECK_THROWS_AS(unseen_stats(std::vector<Posterior>{}), Error);
  }

  TEST_CASE("property: unseen mean lies in [1/K, 1]") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-8.0, 8.0);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Posterior> ps;
      for (int i = 0; i < 20; ++i) ps.push_back(softmax(std::vector<double>{u(rng), u(rng), u(rng), u(rng)}));
      const auto s = unseen_stats(ps);
      CHECK(s.mean >= 0.25 - 1e-15);
      CHECK(s.mean <= 1.0);
      CHECK(s.variance >= 0.0);
    }
  }

  TEST_CASE("score histograms") {
    const std::vector<Posterior> ones(5, Posterior{{1.0, 0.0}, 0.0, Layer::kSoftmax});
    const auto h = score_histogram(ones, 10);
    CHECK(h.counts[9] == 5);
    CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}) == 5);
    const auto all = score_histogram(ones, 10, ScoreKind::kAllScores);
    CHECK(all.counts[0] == 5);
    CHECK(all.counts[9] == 5);

    const std::vector<Posterior> two{{{0.05, 0.95}, 0.0, Layer::kSoftmax},
                                     {{0.95, 0.05}, 0.0, Layer::kSoftmax}};
    const std::vector<Posterior> confs{{{0.05}, 0.0, Layer::kSoftmax}, {{0.95}, 0.0, Layer::kSoftmax}};
    const auto h2 = score_histogram(confs, 10);
    CHECK(h2.counts[0] == 1);
    CHECK(h2.counts[9] == 1);
    CHECK(score_histogram(two, 10).counts[9] == 2);
  }

  TEST_CASE("on OOD logits softmax puts more mass in the top score bin than ML") {
    auto spec = separated_spec({"a", "b", "c"}, 8.0, {30000, 0, 0, 5000}, 8);
    spec.ood = default_ood(spec);
    const auto data = generate(spec);
    const auto model = fit_class_conditional(data, 25, 0.01);
    const auto test = data.select(Split::kUnseen);
    std::vector<Posterior> sm, ml;
    for (const auto& r : test) {
      sm.push_back(softmax(r.logits));
      ml.push_back(ml_posterior(model, r.logits));
    }
    CHECK(score_histogram(sm, 10).counts[9] > score_histogram(ml, 10).counts[9]);
  }

  TEST_CASE("report JSON uses percentages and sorted keys") {
    const ClassRegistry reg({"a", "b"});
    const std::vector<Posterior> test{{{0.9, 0.1}, 0.0, Layer::kMl},
                                      {{0.2, 0.8}, 0.0, Layer::kMl},
                                      {{0.6, 0.4}, 0.0, Layer::kMl}};
    const std::vector<std::size_t> labels{0, 1, 1};
    const std::vector<Posterior> unseen{{{0.5, 0.5}, 0.0, Layer::kMl}};
    const auto r = evaluate_layer("ml", reg, test, labels, unseen);
    CHECK(r.f_score_avg == doctest::Approx(2.0 / 3.0));
    CHECK(r.fpr_avg == 0.25);
    CHECK(r.false_positive_mean_confidence == doctest::Approx(0.6));
    CHECK(r.unseen_mean_score == 0.5);

    const auto j = nlohmann::json::parse(to_json(r));
    CHECK(j["f_score_avg"].get<double>() == 66.67);
    CHECK(j["fpr_avg"].get<double>() == 25.0);
    CHECK(j["per_class"]["b"]["f_score"].get<double>() == 66.67);
    CHECK(j["temperature"].is_null());

    const std::vector<EvaluationReport> reports{r, r};
    const auto table = comparison_table_csv(reports);
    CHECK(table.starts_with("metric,ml,ml\nf_score_pct,66.67,66.67\nfpr_pct,25.00,25.00\n"));
  }
}
