#include "disent/discretize.hpp"

#include <algorithm>
#include <cmath>

namespace disent {

Pooling pooling_from_string(const std::string& s) {
  if (s == "mean") return Pooling::mean;
  if (s == "maxabs") return Pooling::max_abs;
  if (s == "rms") return Pooling::rms;
  throw ValidationError("unknown pooling method: " + s);
}

std::string to_string(Pooling p) {
  switch (p) {
    case Pooling::mean: return "mean";
    case Pooling::max_abs: return "maxabs";
    case Pooling::rms: return "rms";
  }
  return "mean";
}

BinningStrategy binning_from_string(const std::string& s) {
  if (s == "uniform") return BinningStrategy::uniform_width;
  if (s == "quantile") return BinningStrategy::quantile;
  throw ValidationError("unknown binning strategy: " + s);
}

std::string to_string(BinningStrategy s) {
  return s == BinningStrategy::uniform_width ? "uniform" : "quantile";
}

std::vector<double> PooledCodes::column(std::size_t j) const {
  std::vector<double> out(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) out[i] = at(i, j);
  return out;
}

PooledCodes pool_time_axis(const CodeTensor& ct, const PoolingSpec& spec) {
  PooledCodes out;
  out.n_samples = ct.n_samples;
  out.n_dims = ct.n_dims;
  out.values.resize(ct.n_samples * ct.n_dims);
  const std::size_t t_len = ct.seq_len;
  for (std::size_t i = 0; i < ct.n_samples; ++i) {
    for (std::size_t j = 0; j < ct.n_dims; ++j) {
      const float* p = ct.values.data() + (i * ct.n_dims + j) * t_len;
      double acc = 0.0;
      switch (spec.method) {
        case Pooling::mean:
          for (std::size_t t = 0; t < t_len; ++t) acc += p[t];
          acc /= static_cast<double>(t_len);
          break;
        case Pooling::max_abs:
          for (std::size_t t = 0; t < t_len; ++t) acc = std::max(acc, std::abs(static_cast<double>(p[t])));
          break;
        case Pooling::rms:
          for (std::size_t t = 0; t < t_len; ++t) acc += static_cast<double>(p[t]) * p[t];
          acc = std::sqrt(acc / static_cast<double>(t_len));
          break;
      }
      out.values[i * ct.n_dims + j] = acc;
    }
  }
  return out;
}

namespace {

// Type-1 empirical quantile: smallest order statistic with cdf >= p.
double quantile_type1(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  if (k == 0) k = 1;
  if (k > n) k = n;
  return sorted[k - 1];
}

}  // namespace

BinnedColumn bin_values(const std::vector<double>& column, const BinningSpec& spec) {
  if (column.empty()) throw ValidationError("cannot bin an empty column");
  if (spec.n_bins < 2) throw ValidationError("n_bins must be >= 2");
  for (double v : column)
    if (!std::isfinite(v)) throw ValidationError("cannot bin non-finite values");

  const auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
  const double lo = *lo_it, hi = *hi_it;

  BinnedColumn out;
  if (lo == hi) {
    out.bins.assign(column.size(), 0);
    out.effective_bins = 1;
    return out;
  }

  if (spec.strategy == BinningStrategy::uniform_width) {
    const double width = (hi - lo) / spec.n_bins;
    out.interior_edges.reserve(spec.n_bins - 1);
    for (std::int32_t k = 1; k < spec.n_bins; ++k) out.interior_edges.push_back(lo + width * k);
    out.effective_bins = spec.n_bins;
    out.bins.reserve(column.size());
    for (double v : column) {
      auto idx = static_cast<std::int64_t>(std::floor((v - lo) / width));
      idx = std::clamp<std::int64_t>(idx, 0, spec.n_bins - 1);
      out.bins.push_back(static_cast<std::int32_t>(idx));
    }
    return out;
  }

  // quantile
  std::vector<double> sorted(column);
  std::sort(sorted.begin(), sorted.end());
  // an edge landing on the max would leave the right-closed top bin empty;
  // pull it down to the largest value below the max instead
  const double below_hi = *(std::lower_bound(sorted.begin(), sorted.end(), hi) - 1);
  std::vector<double> edges;
  for (std::int32_t k = 1; k < spec.n_bins; ++k) {
    double e = quantile_type1(sorted, static_cast<double>(k) / spec.n_bins);
    if (e >= hi) e = below_hi;
    if (!edges.empty() && e == edges.back()) continue;  // merge duplicates
    edges.push_back(e);
  }
  out.interior_edges = edges;
  out.effective_bins = static_cast<std::int32_t>(edges.size()) + 1;
  out.bins.reserve(column.size());
  for (double v : column) {
    // right-closed: bin index = number of edges strictly below v
    auto idx = std::lower_bound(edges.begin(), edges.end(), v) - edges.begin();
    out.bins.push_back(static_cast<std::int32_t>(idx));
  }
  return out;
}

BinnedCodes discretize_codes(const CodeTensor& ct, const PoolingSpec& pool,
                             const BinningSpec& bin) {
  const PooledCodes pooled = pool_time_axis(ct, pool);
  BinnedCodes out;
  out.n_samples = ct.n_samples;
  out.n_dims = ct.n_dims;
  out.nominal_bins = bin.n_bins;
  out.dims.reserve(ct.n_dims);
  for (std::size_t j = 0; j < ct.n_dims; ++j) out.dims.push_back(bin_values(pooled.column(j), bin));
  return out;
}

BinnedColumn discretize_continuous_factor(FactorTable& ft, std::size_t k,
                                          const BinningSpec& spec) {
  if (k >= ft.n_factors()) throw ValidationError("factor index out of range");
  if (!ft.is_continuous(k))
    throw ValidationError("factor " + ft.factor_names[k] + " is not continuous");
  BinnedColumn col = bin_values(ft.continuous_sources[k], spec);
  ft.columns[k] = col.bins;
  ft.cardinalities[k] = col.effective_bins;
  return col;
}

}  // namespace disent
