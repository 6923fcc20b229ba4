#include "disent/info_metrics.hpp"

#include <algorithm>
#include <cmath>

namespace disent {

namespace {

void check_column(std::span<const std::int32_t> col, std::int32_t card, const char* what) {
  if (col.empty()) throw ValidationError(std::string(what) + ": empty column");
  if (card < 1) throw ValidationError(std::string(what) + ": cardinality < 1");
  for (std::int32_t v : col)
    if (v < 0 || v >= card) throw ValidationError(std::string(what) + ": entry outside [0, B)");
}

std::vector<std::int64_t> joint_counts(std::span<const std::int32_t> v,
                                       std::span<const std::int32_t> z,
                                       std::int32_t b_v, std::int32_t b_z) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(b_v) * b_z, 0);
  for (std::size_t i = 0; i < v.size(); ++i)
    counts[static_cast<std::size_t>(v[i]) * b_z + z[i]]++;
  return counts;
}

}  // namespace

double entropy(std::span<const std::int32_t> column, std::int32_t cardinality) {
  check_column(column, cardinality, "entropy");
  std::vector<std::int64_t> counts(cardinality, 0);
  for (std::int32_t v : column) counts[v]++;
  const double n = static_cast<double>(column.size());
  double h = 0.0;
  for (std::int64_t c : counts) {
    if (c == 0) continue;
    const double p = c / n;
    h -= p * std::log2(p);
  }
  return h;
}

double mutual_information(std::span<const std::int32_t> v, std::span<const std::int32_t> z,
                          std::int32_t b_v, std::int32_t b_z) {
  if (v.size() != z.size())
    throw ValidationError("mutual_information: length mismatch (" + std::to_string(v.size()) +
                          " vs " + std::to_string(z.size()) + ")");
  check_column(v, b_v, "mutual_information");
  check_column(z, b_z, "mutual_information");

  const auto counts = joint_counts(v, z, b_v, b_z);
  std::vector<std::int64_t> row(b_v, 0), col(b_z, 0);
  for (std::int32_t i = 0; i < b_v; ++i)
    for (std::int32_t j = 0; j < b_z; ++j) {
      const std::int64_t c = counts[static_cast<std::size_t>(i) * b_z + j];
      row[i] += c;
      col[j] += c;
    }

  const double n = static_cast<double>(v.size());
  double info = 0.0;
  for (std::int32_t i = 0; i < b_v; ++i) {
    if (row[i] == 0) continue;
    for (std::int32_t j = 0; j < b_z; ++j) {
      const std::int64_t c = counts[static_cast<std::size_t>(i) * b_z + j];
      if (c == 0) continue;
      const double p_ij = c / n;
      info += p_ij * std::log2(p_ij * n * n / (static_cast<double>(row[i]) * col[j]));
    }
  }
  return std::max(info, 0.0);
}

double joint_entropy(std::span<const std::int32_t> v, std::span<const std::int32_t> z,
                     std::int32_t b_v, std::int32_t b_z) {
  if (v.size() != z.size()) throw ValidationError("joint_entropy: length mismatch");
  check_column(v, b_v, "joint_entropy");
  check_column(z, b_z, "joint_entropy");
  const auto counts = joint_counts(v, z, b_v, b_z);
  const double n = static_cast<double>(v.size());
  double h = 0.0;
  for (std::int64_t c : counts) {
    if (c == 0) continue;
    const double p = c / n;
    h -= p * std::log2(p);
  }
  return h;
}

MIMatrix mi_matrix(const PairedDataset& data, const BinnedCodes& codes) {
  const FactorTable& ft = *data.factors;
  if (codes.n_samples != ft.n_samples)
    throw ValidationError("mi_matrix: binned codes sample count mismatch");

  MIMatrix out;
  out.n_factors = ft.n_factors();
  out.n_dims = codes.n_dims;
  out.values.resize(out.n_factors * out.n_dims);
  out.factor_entropies.resize(out.n_factors);
  out.code_entropies.resize(out.n_dims);
  out.effective_code_bins.resize(out.n_dims);

  for (std::size_t j = 0; j < out.n_dims; ++j) {
    out.effective_code_bins[j] = codes.dims[j].effective_bins;
    out.code_entropies[j] = entropy(codes.dims[j].bins, codes.dims[j].effective_bins);
  }
  for (std::size_t i = 0; i < out.n_factors; ++i) {
    out.factor_entropies[i] = entropy(ft.columns[i], ft.cardinalities[i]);
    for (std::size_t j = 0; j < out.n_dims; ++j)
      out.values[i * out.n_dims + j] = mutual_information(
          ft.columns[i], codes.dims[j].bins, ft.cardinalities[i], codes.dims[j].effective_bins);
  }
  return out;
}

namespace {

// Highest and second-highest MI dimensions for a factor, lowest index wins ties.
std::pair<std::size_t, std::size_t> top_two_dims(const MIMatrix& mi, std::size_t factor) {
  std::size_t star = 0;
  for (std::size_t j = 1; j < mi.n_dims; ++j)
    if (mi.at(factor, j) > mi.at(factor, star)) star = j;
  std::size_t circ = star == 0 ? 1 : 0;
  for (std::size_t j = 0; j < mi.n_dims; ++j) {
    if (j == star) continue;
    if (mi.at(factor, j) > mi.at(factor, circ)) circ = j;
  }
  return {star, circ};
}

std::size_t best_other_dim(const MIMatrix& mi, std::size_t factor, std::size_t excluded) {
  std::size_t best = excluded == 0 ? 1 : 0;
  for (std::size_t j = 0; j < mi.n_dims; ++j) {
    if (j == excluded) continue;
    if (mi.at(factor, j) > mi.at(factor, best)) best = j;
  }
  return best;
}

JemmigScore jemmig_at(const PairedDataset& data, const BinnedCodes& codes, const MIMatrix& mi,
                      std::size_t factor, std::size_t star, std::size_t circ) {
  const FactorTable& ft = *data.factors;
  const double h_v = mi.factor_entropies[factor];
  const double h_joint = joint_entropy(ft.columns[factor], codes.dims[star].bins,
                                       ft.cardinalities[factor], codes.dims[star].effective_bins);
  JemmigScore s;
  s.star_dim = star;
  s.circ_dim = circ;
  s.raw = h_joint - mi.at(factor, star) + mi.at(factor, circ);
  const double denom = h_v + std::log2(static_cast<double>(mi.effective_code_bins[star]));
  s.normalized = denom > 0.0 ? std::clamp(1.0 - s.raw / denom, 0.0, 1.0) : 0.0;
  return s;
}

}  // namespace

std::optional<MigScore> mig(const MIMatrix& mi, std::size_t factor) {
  if (factor >= mi.n_factors) throw ValidationError("mig: factor index out of range");
  if (mi.n_dims < 2) throw ValidationError("mig requires at least two code dimensions");
  const double h = mi.factor_entropies[factor];
  if (h <= 0.0) return std::nullopt;
  auto [star, circ] = top_two_dims(mi, factor);
  MigScore s;
  s.star_dim = star;
  s.circ_dim = circ;
  s.score = (mi.at(factor, star) - mi.at(factor, circ)) / h;
  return s;
}

std::optional<JemmigScore> jemmig(const PairedDataset& data, const BinnedCodes& codes,
                                  const MIMatrix& mi, std::size_t factor) {
  if (factor >= mi.n_factors) throw ValidationError("jemmig: factor index out of range");
  if (mi.n_dims < 2) throw ValidationError("jemmig requires at least two code dimensions");
  if (mi.factor_entropies[factor] <= 0.0) return std::nullopt;
  auto [star, circ] = top_two_dims(mi, factor);
  return jemmig_at(data, codes, mi, factor, star, circ);
}

std::optional<JemmigScore> jemmig_for_dim(const PairedDataset& data, const BinnedCodes& codes,
                                          const MIMatrix& mi, std::size_t factor,
                                          std::size_t dim) {
  if (factor >= mi.n_factors || dim >= mi.n_dims)
    throw ValidationError("jemmig_for_dim: index out of range");
  if (mi.n_dims < 2) throw ValidationError("jemmig requires at least two code dimensions");
  if (mi.factor_entropies[factor] <= 0.0) return std::nullopt;
  return jemmig_at(data, codes, mi, factor, dim, best_other_dim(mi, factor, dim));
}

std::optional<double> dataset_mig(const MIMatrix& mi) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < mi.n_factors; ++i) {
    if (auto s = mig(mi, i)) {
      sum += s->score;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

std::optional<double> dataset_jemmig(const PairedDataset& data, const BinnedCodes& codes,
                                     const MIMatrix& mi) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < mi.n_factors; ++i) {
    if (auto s = jemmig(data, codes, mi, i)) {
      sum += s->normalized;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

}  // namespace disent
