#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "disent/dataset.hpp"

namespace disent {

enum class Nonlinearity { none, tanh, quantize };

Nonlinearity nonlinearity_from_string(const std::string& s);
std::string to_string(Nonlinearity n);

struct MixSource {
  std::size_t factor = 0;
  double weight = 0.0;
};

// Recipe for one code dimension: a weighted sum of centered factor values
// plus Gaussian noise, optionally passed through a nonlinearity.
struct DimMix {
  std::vector<MixSource> sources;
  double sigma = 1.0;
  Nonlinearity nonlinearity = Nonlinearity::none;
};

// A factor computed as a seeded total function of another factor's value,
// e.g. gender as a balanced random speaker -> gender table.
struct DerivedFactorSpec {
  std::string name;
  std::size_t source = 0;
  std::int32_t n_values = 2;
};

struct GeneratorSpec {
  std::string name = "custom";
  VersionTag version_tag = VersionTag::custom;
  std::vector<GridFactor> grid;
  std::size_t n_dims = 16;
  std::size_t seq_len = 256;
  std::vector<DimMix> mixing;  // size n_dims
  std::vector<DerivedFactorSpec> derived;
  std::optional<std::uint64_t> n_samples;  // default: one grid-complete pass
  bool require_grid_complete = false;
  std::uint64_t seed = 0;

  std::uint64_t grid_cells() const;
  void validate() const;
  nlohmann::json to_json() const;
  static GeneratorSpec from_json(const nlohmann::json& j);
  std::string canonical_hash() const;  // fnv1a64 of the canonical JSON, hex
};

// Table 1 version presets with the qualitative latent layout reported for the
// reference model: style in dim 0 (echoed in dims 1 and 5), speaker identity
// in dim 3, derived gender in dim 4 (echoed in dims 7 and 9), noise elsewhere.
GeneratorSpec preset_spec(VersionTag tag, std::size_t n_dims = 16, std::size_t seq_len = 256);

struct OracleDimInfo {
  std::size_t dim = 0;
  std::optional<std::size_t> dominant_factor;  // factor with the largest |weight|
  double sigma = 0.0;
  bool noiseless_single_source = false;
};

// What the generator knows about its own output; tests use this instead of
// re-deriving structure from the mixing recipe.
struct OracleReport {
  std::vector<OracleDimInfo> dims;
  std::vector<std::pair<std::string, std::size_t>> planted;  // factor name -> dim
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
};

struct SynthResult {
  FactorTable factors;
  CodeTensor codes;
  OracleReport oracle;
};

SynthResult generate(const GeneratorSpec& spec);

// Generates and writes factors.csv, codes.dslc, manifest.json and oracle.json
// under out_dir; returns the manifest.
DatasetManifest write_dataset(const GeneratorSpec& spec, const std::string& out_dir);

// maps a category index to [-1, 1]; cardinality 1 maps to 0
double centered_value(std::int32_t value, std::int32_t cardinality);

}  // namespace disent
