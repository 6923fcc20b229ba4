#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "disent/dataset.hpp"
#include "disent/discretize.hpp"

namespace disent {

// One usable (target value, nuisance configuration) cell.
struct InterventionCell {
  std::vector<std::size_t> sample_indices;
};

struct TargetGroup {
  std::int32_t value = 0;
  std::vector<std::size_t> all_samples;  // the pooled reference set for this value
  std::vector<InterventionCell> cells;   // nuisance cells meeting min_group_size
  std::size_t skipped_cells = 0;
  std::size_t total_cells = 0;
};

// Enumerates, per target value, the nuisance configurations observed with at
// least min_group_size samples. Nuisance configurations are joint tuples over
// all non-target factors.
struct InterventionPlan {
  std::size_t target = 0;
  int min_group_size = 2;
  std::vector<TargetGroup> groups;  // ordered by target value

  std::size_t cells_used() const;
  std::size_t cells_skipped() const;
};

InterventionPlan build_plan(const PairedDataset& data, std::size_t target, int min_group_size = 2);

struct IrsResult {
  double score = 1.0;  // 1 - raw/scale, clamped to [0,1]; higher = more robust
  double raw = 0.0;    // prevalence-weighted max l2 deviation of cell means
  double scale = 0.0;  // max over target values of the half-range diameter
  std::size_t cells_used = 0;
  std::size_t cells_skipped = 0;
};

IrsResult irs_score(const PooledCodes& pooled, const InterventionPlan& plan,
                    std::span<const std::size_t> dims);

// Convenience wrapper: builds the plan and scores it in one call.
IrsResult irs_score(const PairedDataset& data, const PooledCodes& pooled, std::size_t target,
                    std::span<const std::size_t> dims, int min_group_size = 2);

}  // namespace disent
