#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "disent/dataset.hpp"

namespace disent {

enum class Pooling { mean, max_abs, rms };

Pooling pooling_from_string(const std::string& s);
std::string to_string(Pooling p);

// Scalarizes the T axis of a code tensor, one value per (sample, dimension).
struct PoolingSpec {
  Pooling method = Pooling::mean;
};

enum class BinningStrategy { uniform_width, quantile };

BinningStrategy binning_from_string(const std::string& s);
std::string to_string(BinningStrategy s);

struct BinningSpec {
  BinningStrategy strategy = BinningStrategy::uniform_width;
  std::int32_t n_bins = 2;
};

// Pooled codes, row-major N x d.
struct PooledCodes {
  std::size_t n_samples = 0;
  std::size_t n_dims = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * n_dims + j]; }
  std::vector<double> column(std::size_t j) const;
};

struct BinnedColumn {
  std::vector<std::int32_t> bins;
  std::vector<double> interior_edges;  // strictly increasing; k edges -> k+1 bins
  std::int32_t effective_bins = 1;     // bins actually distinguishable after merging
};

struct BinnedCodes {
  std::size_t n_samples = 0;
  std::size_t n_dims = 0;
  std::int32_t nominal_bins = 0;
  std::vector<BinnedColumn> dims;
};

PooledCodes pool_time_axis(const CodeTensor& ct, const PoolingSpec& spec);

// Uniform-width: [min, max] split into n_bins equal intervals, left-closed,
// with the maximum assigned to the last bin. Quantile: interior edges at the
// empirical k/n_bins quantiles, right-closed assignment (x <= edge goes to the
// lower bin), duplicate or out-of-range edges merged away. A constant column
// yields all-zero bins with effective_bins = 1.
BinnedColumn bin_values(const std::vector<double>& column, const BinningSpec& spec);

BinnedCodes discretize_codes(const CodeTensor& ct, const PoolingSpec& pool,
                             const BinningSpec& bin);

// Installs the discretized version of continuous factor k into the table and
// updates its cardinality to the effective bin count.
BinnedColumn discretize_continuous_factor(FactorTable& ft, std::size_t k,
                                          const BinningSpec& spec);

}  // namespace disent
