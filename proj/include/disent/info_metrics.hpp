#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "disent/dataset.hpp"
#include "disent/discretize.hpp"

namespace disent {

// Pairwise factor/dimension mutual information in bits, plus the entropies
// and per-dimension effective bin counts the gap metrics normalize with.
struct MIMatrix {
  std::size_t n_factors = 0;
  std::size_t n_dims = 0;
  std::vector<double> values;  // row-major n_factors x n_dims
  std::vector<double> factor_entropies;
  std::vector<double> code_entropies;
  std::vector<std::int32_t> effective_code_bins;

  double at(std::size_t i, std::size_t j) const { return values[i * n_dims + j]; }
};

// Empirical entropy in bits; 0*log(0) == 0.
double entropy(std::span<const std::int32_t> column, std::int32_t cardinality);

// Plug-in histogram MI in bits, clamped at 0 against float error.
double mutual_information(std::span<const std::int32_t> v, std::span<const std::int32_t> z,
                          std::int32_t b_v, std::int32_t b_z);

double joint_entropy(std::span<const std::int32_t> v, std::span<const std::int32_t> z,
                     std::int32_t b_v, std::int32_t b_z);

MIMatrix mi_matrix(const PairedDataset& data, const BinnedCodes& codes);

struct MigScore {
  double score = 0.0;   // (I(v,z*) - I(v,zo)) / H(v), in [0,1]
  std::size_t star_dim = 0;
  std::size_t circ_dim = 0;
};

struct JemmigScore {
  double raw = 0.0;        // H(v,z*) - I(v,z*) + I(v,zo), bits; lower is better
  double normalized = 0.0; // 1 - raw / (H(v) + log2(effective B_z)), in [0,1]
  std::size_t star_dim = 0;
  std::size_t circ_dim = 0;
};

// Per-factor gap metrics. nullopt when H(v) == 0 (metric undefined for that
// factor); throws when fewer than two dimensions exist. Argmax ties break
// toward the lowest dimension index.
std::optional<MigScore> mig(const MIMatrix& mi, std::size_t factor);
std::optional<JemmigScore> jemmig(const PairedDataset& data, const BinnedCodes& codes,
                                  const MIMatrix& mi, std::size_t factor);

// Table-row variant: evaluates the JEMMIG expression with z* forced to `dim`
// and zo the best of the remaining dimensions.
std::optional<JemmigScore> jemmig_for_dim(const PairedDataset& data, const BinnedCodes& codes,
                                          const MIMatrix& mi, std::size_t factor, std::size_t dim);

// Unweighted means over factors with positive entropy; nullopt if none.
std::optional<double> dataset_mig(const MIMatrix& mi);
std::optional<double> dataset_jemmig(const PairedDataset& data, const BinnedCodes& codes,
                                     const MIMatrix& mi);

}  // namespace disent
