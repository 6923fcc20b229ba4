#include "disent/irs.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace disent {

std::size_t InterventionPlan::cells_used() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.cells.size();
  return n;
}

std::size_t InterventionPlan::cells_skipped() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.skipped_cells;
  return n;
}

InterventionPlan build_plan(const PairedDataset& data, std::size_t target, int min_group_size) {
  const FactorTable& ft = *data.factors;
  if (target >= ft.n_factors()) throw ValidationError("build_plan: target index out of range");
  if (ft.n_factors() < 2)
    throw ValidationError("factor " + ft.factor_names[target] +
                          " has no nuisance variation: dataset has a single factor");
  if (min_group_size < 1) throw ValidationError("build_plan: min_group_size must be >= 1");

  // mixed-radix encoding of the joint nuisance tuple
  std::vector<std::size_t> nuisance;
  std::uint64_t radix_product = 1;
  for (std::size_t k = 0; k < ft.n_factors(); ++k) {
    if (k == target) continue;
    nuisance.push_back(k);
    radix_product *= static_cast<std::uint64_t>(ft.cardinalities[k]);
    if (radix_product > (1ull << 62))
      throw ValidationError("build_plan: nuisance configuration space too large to enumerate");
  }

  const std::int32_t t_card = ft.cardinalities[target];
  std::vector<std::unordered_map<std::uint64_t, std::vector<std::size_t>>> cell_map(t_card);
  std::vector<std::vector<std::size_t>> all_samples(t_card);
  for (std::size_t i = 0; i < ft.n_samples; ++i) {
    std::uint64_t key = 0;
    for (std::size_t k : nuisance)
      key = key * static_cast<std::uint64_t>(ft.cardinalities[k]) + ft.columns[k][i];
    const std::int32_t t = ft.columns[target][i];
    cell_map[t][key].push_back(i);
    all_samples[t].push_back(i);
  }

  InterventionPlan plan;
  plan.target = target;
  plan.min_group_size = min_group_size;
  bool any_usable_cell = false;
  for (std::int32_t t = 0; t < t_card; ++t) {
    if (all_samples[t].empty()) continue;  // value not observed in data
    TargetGroup g;
    g.value = t;
    g.all_samples = std::move(all_samples[t]);
    g.total_cells = cell_map[t].size();

    // deterministic cell order: by first sample index
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> ordered;
    for (auto& [key, idx] : cell_map[t]) {
      if (static_cast<int>(idx.size()) < min_group_size) {
        g.skipped_cells++;
        continue;
      }
      ordered.emplace_back(idx.front(), std::move(idx));
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [first, idx] : ordered) g.cells.push_back(InterventionCell{std::move(idx)});

    // a value whose only cell is its whole reference set contributes zero
    // deviation; the plan is degenerate only when no usable cell exists
    if (!g.cells.empty()) any_usable_cell = true;
    plan.groups.push_back(std::move(g));
  }

  if (!any_usable_cell)
    throw ValidationError("factor " + ft.factor_names[target] +
                          " has no nuisance variation at min_group_size " +
                          std::to_string(min_group_size));
  return plan;
}

IrsResult irs_score(const PooledCodes& pooled, const InterventionPlan& plan,
                    std::span<const std::size_t> dims) {
  if (dims.empty()) throw ValidationError("irs_score: empty dims subset");
  for (std::size_t d : dims)
    if (d >= pooled.n_dims) throw ValidationError("irs_score: dimension index out of range");

  const std::size_t n_total = pooled.n_samples;
  const std::size_t a_count = dims.size();
  std::vector<double> ref(a_count), cm(a_count), lo(a_count), hi(a_count);

  IrsResult out;
  out.cells_used = plan.cells_used();
  out.cells_skipped = plan.cells_skipped();

  double raw = 0.0, scale = 0.0;
  for (const auto& g : plan.groups) {
    std::fill(ref.begin(), ref.end(), 0.0);
    for (std::size_t a = 0; a < a_count; ++a) {
      lo[a] = pooled.at(g.all_samples.front(), dims[a]);
      hi[a] = lo[a];
    }
    for (std::size_t i : g.all_samples) {
      for (std::size_t a = 0; a < a_count; ++a) {
        const double x = pooled.at(i, dims[a]);
        ref[a] += x;
        lo[a] = std::min(lo[a], x);
        hi[a] = std::max(hi[a], x);
      }
    }
    for (double& x : ref) x /= static_cast<double>(g.all_samples.size());

    double d_max = 0.0;
    for (const auto& cell : g.cells) {
      std::fill(cm.begin(), cm.end(), 0.0);
      for (std::size_t i : cell.sample_indices)
        for (std::size_t a = 0; a < a_count; ++a) cm[a] += pooled.at(i, dims[a]);
      double ss = 0.0;
      for (std::size_t a = 0; a < a_count; ++a) {
        const double diff = cm[a] / static_cast<double>(cell.sample_indices.size()) - ref[a];
        ss += diff * diff;
      }
      d_max = std::max(d_max, std::sqrt(ss));
    }

    const double p_t =
        static_cast<double>(g.all_samples.size()) / static_cast<double>(n_total);
    raw += p_t * d_max;

    double ss = 0.0;
    for (std::size_t a = 0; a < a_count; ++a) {
      const double half = (hi[a] - lo[a]) / 2.0;
      ss += half * half;
    }
    scale = std::max(scale, std::sqrt(ss));
  }

  out.raw = raw;
  out.scale = scale;
  out.score = raw == 0.0 ? 1.0 : std::clamp(1.0 - raw / scale, 0.0, 1.0);
  return out;
}

IrsResult irs_score(const PairedDataset& data, const PooledCodes& pooled, std::size_t target,
                    std::span<const std::size_t> dims, int min_group_size) {
  const InterventionPlan plan = build_plan(data, target, min_group_size);
  return irs_score(pooled, plan, dims);
}

}  // namespace disent
