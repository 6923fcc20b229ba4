#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "disent/dataset.hpp"
#include "disent/discretize.hpp"

namespace disent::oracle {

// Test oracles: deliberately naive reimplementations of the histogram MI and
// the intervention score, kept free of any code shared with the metric
// modules they are checked against. Quadratic-ish and proud of it.

double brute_force_mi(std::span<const std::int32_t> v, std::span<const std::int32_t> z,
                      std::int32_t b_v, std::int32_t b_z);

double brute_force_entropy(std::span<const std::int32_t> v, std::int32_t b_v);

// Same normalization decision as the irs module (half-range diameter per
// target value), independently coded.
double brute_force_irs(const PairedDataset& data, const PooledCodes& pooled,
                       std::size_t target, std::span<const std::size_t> dims,
                       int min_group_size);

}  // namespace disent::oracle
