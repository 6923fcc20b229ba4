#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "disent/dataset.hpp"
#include "disent/logreg.hpp"

namespace disent {

// Rank-based (Mann-Whitney) AUC-ROC; tied scores contribute 1/2 per pair.
double auc_roc(std::span<const double> scores, const std::vector<bool>& positives);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded stratified split; every class with at least two samples lands in
// both sides. Index lists come back sorted.
Split stratified_split(std::span<const std::int32_t> labels, std::int32_t n_classes,
                       double test_fraction, std::uint64_t seed);

struct ExplicitnessConfig {
  TrainConfig train;
  std::uint64_t split_seed = 0;
  double test_fraction = 0.2;
};

struct ExplicitnessResult {
  std::vector<std::int32_t> classes;   // classes observed in the data
  std::vector<double> per_class_auc;   // parallel to `classes`
  double score = 0.0;                  // mean over classes of (AUC-0.5)/0.5, clamped to [0,1]
  std::optional<std::size_t> scope_dim;  // nullopt = all dimensions
};

// Trains a logistic-regression probe on the scope's features (dimension j ->
// its T-vector; all -> the d*T vector) and scores one-vs-rest AUC per class on
// the held-out split, from the softmax probabilities.
ExplicitnessResult explicitness(const PairedDataset& data, std::size_t factor,
                                std::optional<std::size_t> scope_dim,
                                const ExplicitnessConfig& config);

}  // namespace disent
