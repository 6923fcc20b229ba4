#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "disent/dataset.hpp"
#include "disent/logreg.hpp"

namespace disent {

struct ProbeConfig {
  TrainConfig train;           // Appendix-style defaults: 100 epochs, batch 128
  int runs = 5;
  double test_fraction = 0.2;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;
};

struct ProbeAccuracy {
  double mean = 0.0;
  double stddev = 0.0;              // population std over runs; 0 for a single run
  std::vector<double> per_run;
};

struct ProbeResult {
  std::string factor;
  std::size_t factor_index = 0;
  std::int32_t n_classes = 0;
  double majority_baseline = 0.0;  // majority-class share, for reading near-chance rows
  int runs = 0;
  std::vector<ProbeAccuracy> per_dim;  // exactly d entries
  ProbeAccuracy all_combined;
  ProbeConfig config;

  nlohmann::json to_json() const;
};

// Linear probing over each dimension's T-vector plus the "All" concatenation.
// Every run draws a fresh stratified split and a fresh trainer seed from the
// master seed.
ProbeResult probe_factor(const PairedDataset& data, std::size_t factor, int runs,
                         const ProbeConfig& config);

// CSV with header "dimension,mean_accuracy,std_accuracy", one row per
// dimension and a final "All" row.
void emit_accuracy_trend(const ProbeResult& result, const std::string& path);

}  // namespace disent
