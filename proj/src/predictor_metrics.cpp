#include "disent/predictor_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace disent {

double auc_roc(std::span<const double> scores, const std::vector<bool>& positives) {
  if (scores.size() != positives.size()) throw ValidationError("auc_roc: length mismatch");
  std::size_t n_pos = 0;
  for (bool p : positives) n_pos += p;
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw ValidationError("auc_roc: needs at least one positive and one negative");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // average ranks over tie groups, then the Mann-Whitney statistic
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (positives[order[k]]) rank_sum_pos += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

Split stratified_split(std::span<const std::int32_t> labels, std::int32_t n_classes,
                       double test_fraction, std::uint64_t seed) {
  if (test_fraction <= 0.0 || test_fraction >= 1.0)
    throw ValidationError("stratified_split: test fraction must be in (0,1)");
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes)
      throw ValidationError("stratified_split: label out of range");
    by_class[labels[i]].push_back(i);
  }

  std::mt19937_64 rng(seed);
  Split out;
  for (auto& idx : by_class) {
    if (idx.empty()) continue;
    for (std::size_t i = idx.size(); i > 1; --i) {
      const auto r = static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * i) >> 64);
      std::swap(idx[i - 1], idx[r]);
    }
    std::size_t n_test = 0;
    if (idx.size() >= 2) {
      n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
      n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    }
    for (std::size_t k = 0; k < idx.size(); ++k)
      (k < n_test ? out.test : out.train).push_back(idx[k]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

namespace {

bool all_classes_in_both(std::span<const std::int32_t> labels, const Split& split,
                         std::int32_t n_classes) {
  std::vector<std::uint8_t> in_train(n_classes, 0), in_test(n_classes, 0), observed(n_classes, 0);
  for (std::int32_t y : labels) observed[y] = 1;
  for (std::size_t i : split.train) in_train[labels[i]] = 1;
  for (std::size_t i : split.test) in_test[labels[i]] = 1;
  for (std::int32_t c = 0; c < n_classes; ++c)
    if (observed[c] && (!in_train[c] || !in_test[c])) return false;
  return true;
}

}  // namespace

ExplicitnessResult explicitness(const PairedDataset& data, std::size_t factor,
                                std::optional<std::size_t> scope_dim,
                                const ExplicitnessConfig& config) {
  const FactorTable& ft = *data.factors;
  if (factor >= ft.n_factors()) throw ValidationError("explicitness: factor index out of range");
  const std::int32_t n_classes = ft.cardinalities[factor];
  const auto& labels = ft.columns[factor];

  std::vector<std::uint8_t> observed(n_classes, 0);
  for (std::int32_t y : labels) observed[y] = 1;
  const auto n_observed = std::count(observed.begin(), observed.end(), std::uint8_t{1});
  if (n_observed < 2)
    throw ValidationError("explicitness: factor " + ft.factor_names[factor] +
                          " has fewer than 2 observed classes");

  Split split = stratified_split(labels, n_classes, config.test_fraction, config.split_seed);
  if (!all_classes_in_both(labels, split, n_classes)) {
    // one stratified resplit with a perturbed seed, then give up
    split = stratified_split(labels, n_classes, config.test_fraction,
                             splitmix64(config.split_seed ^ 0x5e51a17ull));
    if (!all_classes_in_both(labels, split, n_classes))
      throw ValidationError("explicitness: a class of factor " + ft.factor_names[factor] +
                            " is missing from a split even after resplitting (singleton class?)");
  }

  const FeatureView view = scope_dim ? FeatureView::tensor_dim(*data.codes, *scope_dim)
                                     : FeatureView::tensor_all(*data.codes);
  const LinearClassifier clf = train_logreg(view, labels, split.train, n_classes, config.train);
  const std::vector<double> probs = clf.predict_proba(view, split.test);

  ExplicitnessResult out;
  out.scope_dim = scope_dim;
  double acc = 0.0;
  std::vector<double> scores(split.test.size());
  std::vector<bool> pos(split.test.size());
  for (std::int32_t c = 0; c < n_classes; ++c) {
    if (!observed[c]) continue;
    for (std::size_t r = 0; r < split.test.size(); ++r) {
      scores[r] = probs[r * n_classes + c];
      pos[r] = labels[split.test[r]] == c;
    }
    const double auc = auc_roc(scores, pos);
    out.classes.push_back(c);
    out.per_class_auc.push_back(auc);
    acc += std::clamp((auc - 0.5) / 0.5, 0.0, 1.0);
  }
  out.score = acc / static_cast<double>(out.classes.size());
  return out;
}

}  // namespace disent
