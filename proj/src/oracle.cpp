#include "disent/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace disent::oracle {

double brute_force_mi(std::span<const std::int32_t> v, std::span<const std::int32_t> z,
                      std::int32_t b_v, std::int32_t b_z) {
  if (v.size() != z.size()) throw ValidationError("brute_force_mi: length mismatch");
  if (v.empty()) throw ValidationError("brute_force_mi: empty input");
  const double n = static_cast<double>(v.size());
  double info = 0.0;
  for (std::int32_t i = 0; i < b_v; ++i) {
    for (std::int32_t j = 0; j < b_z; ++j) {
      std::int64_t c_ij = 0, c_i = 0, c_j = 0;
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (v[k] == i && z[k] == j) ++c_ij;
        if (v[k] == i) ++c_i;
        if (z[k] == j) ++c_j;
      }
      if (c_ij == 0) continue;
      const double p_ij = c_ij / n;
      const double p_i = c_i / n;
      const double p_j = c_j / n;
      info += p_ij * std::log2(p_ij / (p_i * p_j));
    }
  }
  return std::max(info, 0.0);
}

double brute_force_entropy(std::span<const std::int32_t> v, std::int32_t b_v) {
  if (v.empty()) throw ValidationError("brute_force_entropy: empty input");
  const double n = static_cast<double>(v.size());
  double h = 0.0;
  for (std::int32_t i = 0; i < b_v; ++i) {
    std::int64_t c = 0;
    for (std::int32_t x : v)
      if (x == i) ++c;
    if (c == 0) continue;
    h -= (c / n) * std::log2(c / n);
  }
  return h;
}

double brute_force_irs(const PairedDataset& data, const PooledCodes& pooled,
                       std::size_t target, std::span<const std::size_t> dims,
                       int min_group_size) {
  const FactorTable& ft = *data.factors;
  const std::size_t n = ft.n_samples;
  if (dims.empty()) throw ValidationError("brute_force_irs: empty dims subset");
  if (ft.n_factors() < 2) throw ValidationError("brute_force_irs: nuisance factors required");

  // group sample indices by (target value, full nuisance tuple)
  std::map<std::int32_t, std::vector<std::size_t>> by_value;
  std::map<std::int32_t, std::map<std::vector<std::int32_t>, std::vector<std::size_t>>> cells;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t t = ft.columns[target][i];
    std::vector<std::int32_t> nuisance;
    for (std::size_t k = 0; k < ft.n_factors(); ++k)
      if (k != target) nuisance.push_back(ft.columns[k][i]);
    by_value[t].push_back(i);
    cells[t][nuisance].push_back(i);
  }

  auto mean_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> m(dims.size(), 0.0);
    for (std::size_t i : idx)
      for (std::size_t a = 0; a < dims.size(); ++a) m[a] += pooled.at(i, dims[a]);
    for (double& x : m) x /= static_cast<double>(idx.size());
    return m;
  };

  bool any_usable_cell = false;
  double raw = 0.0;
  double scale = 0.0;
  for (const auto& [t, all_idx] : by_value) {
    const auto ref = mean_of(all_idx);

    double d_max = 0.0;
    for (const auto& [cfg, idx] : cells[t]) {
      if (static_cast<int>(idx.size()) < min_group_size) continue;
      any_usable_cell = true;
      const auto cm = mean_of(idx);
      double ss = 0.0;
      for (std::size_t a = 0; a < dims.size(); ++a) ss += (cm[a] - ref[a]) * (cm[a] - ref[a]);
      d_max = std::max(d_max, std::sqrt(ss));
    }
    const double p_t = static_cast<double>(all_idx.size()) / static_cast<double>(n);
    raw += p_t * d_max;

    double ss = 0.0;
    for (std::size_t a = 0; a < dims.size(); ++a) {
      double lo = pooled.at(all_idx[0], dims[a]), hi = lo;
      for (std::size_t i : all_idx) {
        lo = std::min(lo, pooled.at(i, dims[a]));
        hi = std::max(hi, pooled.at(i, dims[a]));
      }
      const double half = (hi - lo) / 2.0;
      ss += half * half;
    }
    scale = std::max(scale, std::sqrt(ss));
  }

  if (!any_usable_cell) throw ValidationError("brute_force_irs: factor has no nuisance variation");
  if (raw == 0.0) return 1.0;
  return std::clamp(1.0 - raw / scale, 0.0, 1.0);
}

}  // namespace disent::oracle
