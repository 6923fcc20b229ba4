#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "disent/common.hpp"

namespace disent {

// Ground-truth factor realizations for N samples: one integer-coded column
// per factor plus the bookkeeping needed to reverse the encoding. Immutable
// after construction; validated by the loader / by validate().
struct FactorTable {
  std::size_t n_samples = 0;
  std::vector<std::string> factor_names;
  std::vector<std::vector<std::int32_t>> columns;  // per factor, length n_samples
  std::vector<std::int32_t> cardinalities;         // B_v per factor
  // index -> original string label; empty vector when the column was
  // integer-coded (identity labels).
  std::vector<std::vector<std::string>> label_maps;
  // raw real-valued column for continuous factors, kept pre-discretization;
  // empty vector for categorical factors.
  std::vector<std::vector<double>> continuous_sources;

  std::size_t n_factors() const { return factor_names.size(); }
  bool is_continuous(std::size_t k) const { return !continuous_sources[k].empty(); }
  std::optional<std::size_t> factor_index(const std::string& name) const;
  void validate() const;  // throws ValidationError on any broken invariant
};

// Latent codes: N x d x T float32, row-major (sample, dim, time).
struct CodeTensor {
  std::size_t n_samples = 0;
  std::size_t n_dims = 0;
  std::size_t seq_len = 1;
  std::vector<float> values;

  float at(std::size_t i, std::size_t j, std::size_t t) const {
    return values[(i * n_dims + j) * seq_len + t];
  }
  const float* sample_ptr(std::size_t i) const { return values.data() + i * n_dims * seq_len; }
  void validate() const;
};

enum class ColumnKind { categorical, continuous };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  std::optional<std::int32_t> cardinality;  // override; must cover observed indices
};

// Declares how factor CSV columns are interpreted. Columns not listed are
// categorical with cardinality taken from the data.
struct IngestSchema {
  std::vector<ColumnSpec> columns;
  const ColumnSpec* find(const std::string& name) const;
};

enum class VersionTag { small, medium, large, custom };

std::string to_string(VersionTag tag);
VersionTag version_tag_from_string(const std::string& s);

struct GridFactor {
  std::string name;
  std::int32_t cardinality = 0;
};

// Table 1 grids for the built-in dataset versions.
std::vector<GridFactor> builtin_grid(VersionTag tag);

struct DatasetManifest {
  std::string name;
  VersionTag version_tag = VersionTag::custom;
  std::vector<GridFactor> factor_grid;
  std::uint64_t total_utterances = 0;
  std::string factors_path;  // relative to the manifest's directory
  std::string codes_path;
  std::uint64_t seed = 0;
  std::string spec_hash;  // fnv1a64 of the canonical generator spec, hex

  void validate() const;
};

FactorTable load_factor_table(const std::string& path, const IngestSchema& schema = {});
void save_factor_table(const FactorTable& ft, const std::string& path);

CodeTensor load_code_tensor(const std::string& path);
void save_code_tensor(const CodeTensor& ct, const std::string& path);

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

// The only handle metric code accepts; pairing is checked once, here.
struct PairedDataset {
  std::shared_ptr<const FactorTable> factors;
  std::shared_ptr<const CodeTensor> codes;

  std::size_t n_samples() const { return factors->n_samples; }
};

PairedDataset validate_pairing(std::shared_ptr<const FactorTable> ft,
                               std::shared_ptr<const CodeTensor> ct);

}  // namespace disent
