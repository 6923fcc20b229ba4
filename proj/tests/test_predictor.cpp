#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "disent/predictor_metrics.hpp"
#include "disent/synth.hpp"
#include "test_helpers.hpp"

using namespace disent;
using disent::testing::make_codes;
using disent::testing::make_table;
using disent::testing::pair_up;

namespace {

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

TEST_CASE("linearly separable data trains to high accuracy") {
  std::vector<float> x;
  std::vector<std::int32_t> y;
  for (int i = 0; i < 50; ++i) {
    x.push_back(-1.f);
    y.push_back(0);
  }
  for (int i = 0; i < 50; ++i) {
    x.push_back(1.f);
    y.push_back(1);
  }
  const auto view = FeatureView::from_matrix(x, 100, 1);
  const auto rows = all_rows(100);
  const auto clf = train_logreg(view, y, rows, 2, {});
  CHECK(clf.accuracy(view, rows, y) >= 0.99);
}

TEST_CASE("one-hot features equal to the label predict perfectly out of sample") {
  const std::int32_t classes = 4;
  const std::size_t n = 400;
  std::vector<float> x(n * classes, 0.f);
  std::vector<std::int32_t> y(n);
  std::mt19937_64 rng(3);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<std::int32_t>(rng() % classes);
    x[i * classes + y[i]] = 1.f;
  }
  const auto view = FeatureView::from_matrix(x, n, classes);
  const Split split = stratified_split(y, classes, 0.2, 9);
  const auto clf = train_logreg(view, y, split.train, classes, {});
  CHECK(clf.accuracy(view, split.test, y) == doctest::Approx(1.0));
}

TEST_CASE("labels independent of features stay at chance on held-out data") {
  const std::int32_t classes = 4;
  const std::size_t n = 2000;
  std::mt19937_64 rng(5);
  std::vector<float> x(n * 8);
  for (auto& v : x) v = static_cast<float>(rng() % 4096) / 2048.f - 1.f;
  std::vector<std::int32_t> y(n);
  for (auto& v : y) v = static_cast<std::int32_t>(rng() % classes);
  const auto view = FeatureView::from_matrix(x, n, 8);
  const Split split = stratified_split(y, classes, 0.2, 10);
  const auto clf = train_logreg(view, y, split.train, classes, {});
  const double acc = clf.accuracy(view, split.test, y);
  CHECK(acc > 1.0 / classes - 0.05);
  CHECK(acc < 1.0 / classes + 0.05);
}

TEST_CASE("training rejects degenerate inputs") {
  std::vector<float> x{0.f, 1.f, 2.f, 3.f};
  const auto view = FeatureView::from_matrix(x, 4, 1);
  std::vector<std::int32_t> single{1, 1, 1, 1};
  CHECK_THROWS_WITH_AS(train_logreg(view, single, all_rows(4), 2, {}),
                       doctest::Contains("single-class"), ValidationError);
  std::vector<std::int32_t> ok{0, 1, 0, 1};
  CHECK_THROWS_AS(train_logreg(view, ok, all_rows(4), 1, {}), ValidationError);
}

TEST_CASE("standardization handles constant features and absorbs feature scale") {
  const std::size_t n = 800;
  std::mt19937_64 rng(13);
  std::vector<float> x(n * 3);
  std::vector<std::int32_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<std::int32_t>(rng() % 2);
    x[i * 3 + 0] = 7.5f;  // constant column must not produce NaNs
    x[i * 3 + 1] = static_cast<float>(y[i]) + static_cast<float>(rng() % 100) / 150.f;
    x[i * 3 + 2] = static_cast<float>(rng() % 100) / 100.f;
  }
  const Split split = stratified_split(y, 2, 0.2, 21);
  const auto base_view = FeatureView::from_matrix(x, n, 3);
  const auto base = train_logreg(base_view, y, split.train, 2, {});
  const double base_acc = base.accuracy(base_view, split.test, y);
  CHECK(base_acc > 0.7);

  std::vector<float> scaled = x;
  for (std::size_t i = 0; i < n; ++i) scaled[i * 3 + 1] *= 10.f;
  const auto scaled_view = FeatureView::from_matrix(scaled, n, 3);
  const auto big = train_logreg(scaled_view, y, split.train, 2, {});
  const double big_acc = big.accuracy(scaled_view, split.test, y);
  CHECK(std::abs(big_acc - base_acc) < 0.01);
}

TEST_CASE("AUC-ROC canonical cases") {
  CHECK(auc_roc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, {false, false, true, true}) ==
        doctest::Approx(1.0));
  // 3 of 4 (positive, negative) pairs are correctly ordered
  CHECK(auc_roc(std::vector<double>{0.1, 0.8, 0.2, 0.9}, {false, false, true, true}) == 0.75);
  CHECK(auc_roc(std::vector<double>{0.4, 0.4, 0.4, 0.4}, {false, true, false, true}) ==
        doctest::Approx(0.5));
  CHECK_THROWS_AS(auc_roc(std::vector<double>{0.1, 0.2}, {true, true}), ValidationError);
}

TEST_CASE("AUC-ROC is invariant under strictly increasing score transforms") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 10 + rng() % 100;
    std::vector<double> scores(n);
    std::vector<bool> pos(n);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng() % 64) / 16.0 - 2.0;  // ties likely
      pos[i] = rng() % 2 == 0;
      (pos[i] ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) continue;
    const double base = auc_roc(scores, pos);
    std::vector<double> mapped(n);
    for (std::size_t i = 0; i < n; ++i) mapped[i] = std::exp(scores[i]) + scores[i] * 0.5;
    CHECK(auc_roc(mapped, pos) == doctest::Approx(base).epsilon(1e-12));
    CHECK(base >= 0.0);
    CHECK(base <= 1.0);
  }
}

TEST_CASE("stratified split keeps every multi-sample class on both sides") {
  std::mt19937_64 rng(66);
  std::vector<std::int32_t> labels(500);
  for (auto& y : labels) y = static_cast<std::int32_t>(rng() % 7);
  const Split split = stratified_split(labels, 7, 0.2, 31);
  CHECK(split.train.size() + split.test.size() == labels.size());
  std::vector<int> train_seen(7, 0), test_seen(7, 0);
  for (auto i : split.train) train_seen[labels[i]]++;
  for (auto i : split.test) test_seen[labels[i]]++;
  for (int c = 0; c < 7; ++c) {
    CHECK(train_seen[c] > 0);
    CHECK(test_seen[c] > 0);
  }
  CHECK(std::is_sorted(split.train.begin(), split.train.end()));
}

TEST_CASE("explicitness saturates on a noiseless copy and stays low on noise") {
  GeneratorSpec spec;
  spec.name = "copy";
  spec.grid = {{"g", 2}, {"s", 4}};
  spec.n_dims = 2;
  spec.seq_len = 4;
  spec.mixing = {DimMix{{{0, 1.0}}, 0.0, Nonlinearity::none},
                 DimMix{{}, 1.0, Nonlinearity::none}};
  spec.n_samples = 2000;
  spec.seed = 23;
  const SynthResult synth = generate(spec);
  const auto data = pair_up(synth.factors, synth.codes);

  ExplicitnessConfig cfg;
  cfg.split_seed = 77;
  cfg.train.seed = 78;

  const auto copied = explicitness(data, 0, std::size_t{0}, cfg);
  CHECK(copied.score >= 0.99);

  const auto noise = explicitness(data, 0, std::size_t{1}, cfg);
  CHECK(noise.score <= 0.1);

  SUBCASE("result fields are consistent") {
    CHECK(copied.classes.size() == 2);
    CHECK(copied.per_class_auc.size() == 2);
    for (double auc : copied.per_class_auc) CHECK(auc >= 0.99);
    CHECK(copied.scope_dim == std::size_t{0});
  }
}

TEST_CASE("explicitness over all dims beats the best single dim under redundancy") {
  // two noisy copies of a 3-way factor: combining them denoises
  GeneratorSpec spec;
  spec.name = "redundant";
  spec.grid = {{"f", 3}, {"pad", 2}};
  spec.n_dims = 2;
  spec.seq_len = 1;
  spec.mixing = {DimMix{{{0, 1.0}}, 0.8, Nonlinearity::none},
                 DimMix{{{0, 1.0}}, 0.8, Nonlinearity::none}};
  spec.n_samples = 3000;
  spec.seed = 29;
  const SynthResult synth = generate(spec);
  const auto data = pair_up(synth.factors, synth.codes);

  ExplicitnessConfig cfg;
  cfg.split_seed = 101;
  cfg.train.seed = 102;
  const double d0 = explicitness(data, 0, std::size_t{0}, cfg).score;
  const double d1 = explicitness(data, 0, std::size_t{1}, cfg).score;
  const double all = explicitness(data, 0, std::nullopt, cfg).score;
  CHECK(all > std::max(d0, d1));
}

TEST_CASE("explicitness is deterministic for a fixed seed and config") {
  GeneratorSpec spec;
  spec.name = "det";
  spec.grid = {{"f", 3}, {"pad", 2}};
  spec.n_dims = 2;
  spec.seq_len = 2;
  spec.mixing = {DimMix{{{0, 1.0}}, 0.5, Nonlinearity::none}, DimMix{{}, 1.0, Nonlinearity::none}};
  spec.n_samples = 600;
  spec.seed = 31;
  const SynthResult synth = generate(spec);
  const auto data = pair_up(synth.factors, synth.codes);

  ExplicitnessConfig cfg;
  cfg.split_seed = 7;
  cfg.train.seed = 8;
  const auto a = explicitness(data, 0, std::nullopt, cfg);
  const auto b = explicitness(data, 0, std::nullopt, cfg);
  CHECK(a.score == b.score);
  CHECK(a.per_class_auc == b.per_class_auc);
}

TEST_CASE("explicitness errors when a class cannot appear in both splits") {
  // class 2 has a single sample: the resplit cannot fix it
  std::vector<std::int32_t> f{0, 0, 0, 0, 1, 1, 1, 1, 2};
  std::vector<float> c(9, 0.f);
  const auto data = pair_up(make_table({f}, {3}), make_codes({c}));
  ExplicitnessConfig cfg;
  CHECK_THROWS_WITH_AS(explicitness(data, 0, std::nullopt, cfg), doctest::Contains("missing"),
                       ValidationError);
}
