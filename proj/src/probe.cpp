#include "disent/probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "disent/parallel.hpp"
#include "disent/predictor_metrics.hpp"

namespace disent {

namespace {

ProbeAccuracy reduce_runs(const std::vector<double>& per_run) {
  ProbeAccuracy acc;
  acc.per_run = per_run;
  for (double a : per_run) acc.mean += a;
  acc.mean /= static_cast<double>(per_run.size());
  double ss = 0.0;
  for (double a : per_run) ss += (a - acc.mean) * (a - acc.mean);
  acc.stddev = std::sqrt(ss / static_cast<double>(per_run.size()));
  return acc;
}

}  // namespace

ProbeResult probe_factor(const PairedDataset& data, std::size_t factor, int runs,
                         const ProbeConfig& config) {
  const FactorTable& ft = *data.factors;
  if (factor >= ft.n_factors()) throw ValidationError("probe_factor: factor index out of range");
  if (runs < 1) throw ValidationError("probe_factor: runs must be >= 1");
  const std::int32_t n_classes = ft.cardinalities[factor];
  const auto& labels = ft.columns[factor];
  {
    std::vector<std::uint8_t> seen(n_classes, 0);
    for (std::int32_t y : labels) seen[y] = 1;
    if (std::count(seen.begin(), seen.end(), std::uint8_t{1}) < 2)
      throw ValidationError("probe_factor: factor " + ft.factor_names[factor] +
                            " has fewer than 2 observed classes");
  }

  const std::size_t d = data.codes->n_dims;
  const std::size_t slots = d + 1;  // per-dim tasks plus the "All" slot

  std::vector<Split> splits(runs);
  for (int r = 0; r < runs; ++r)
    splits[r] = stratified_split(labels, n_classes, config.test_fraction,
                                 derive_seed(config.master_seed, "probe.split",
                                             factor * 0x10000ull + static_cast<std::uint64_t>(r)));

  std::vector<double> accuracies(static_cast<std::size_t>(runs) * slots, 0.0);
  run_tasks(static_cast<std::size_t>(runs) * slots, config.threads, [&](std::size_t task) {
    const int run = static_cast<int>(task / slots);
    const std::size_t slot = task % slots;
    TrainConfig tc = config.train;
    tc.seed = derive_seed(config.master_seed, "probe.train",
                          (factor * 0x10000ull + static_cast<std::uint64_t>(run)) * 0x100ull + slot);
    const FeatureView view = slot < d ? FeatureView::tensor_dim(*data.codes, slot)
                                      : FeatureView::tensor_all(*data.codes);
    const LinearClassifier clf = train_logreg(view, labels, splits[run].train, n_classes, tc);
    accuracies[task] = clf.accuracy(view, splits[run].test, labels);
  });

  ProbeResult out;
  out.factor = ft.factor_names[factor];
  out.factor_index = factor;
  out.n_classes = n_classes;
  out.runs = runs;
  out.config = config;
  {
    std::vector<std::size_t> counts(n_classes, 0);
    for (std::int32_t y : labels) counts[y]++;
    out.majority_baseline = static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
                            static_cast<double>(labels.size());
  }
  std::vector<double> per_run(runs);
  for (std::size_t slot = 0; slot < slots; ++slot) {
    for (int r = 0; r < runs; ++r) per_run[r] = accuracies[static_cast<std::size_t>(r) * slots + slot];
    if (slot < d)
      out.per_dim.push_back(reduce_runs(per_run));
    else
      out.all_combined = reduce_runs(per_run);
  }
  return out;
}

nlohmann::json ProbeResult::to_json() const {
  auto acc_json = [](const ProbeAccuracy& a, nlohmann::json dim) {
    return nlohmann::json{{"dimension", std::move(dim)},
                          {"mean_accuracy", a.mean},
                          {"std_accuracy", a.stddev},
                          {"per_run", a.per_run}};
  };
  nlohmann::json jdims = nlohmann::json::array();
  for (std::size_t j = 0; j < per_dim.size(); ++j) jdims.push_back(acc_json(per_dim[j], j));
  return nlohmann::json{{"factor", factor},
                        {"factor_index", factor_index},
                        {"n_classes", n_classes},
                        {"majority_baseline", majority_baseline},
                        {"runs", runs},
                        {"per_dim", jdims},
                        {"all", acc_json(all_combined, "All")}};
}

void emit_accuracy_trend(const ProbeResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write accuracy trend: " + path);
  out << "dimension,mean_accuracy,std_accuracy\n";
  char buf[80];
  for (std::size_t j = 0; j < result.per_dim.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", j, result.per_dim[j].mean,
                  result.per_dim[j].stddev);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "All,%.17g,%.17g\n", result.all_combined.mean,
                result.all_combined.stddev);
  out << buf;
  if (!out) throw IoError("failed writing accuracy trend: " + path);
}

}  // namespace disent
