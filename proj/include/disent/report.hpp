#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "disent/dataset.hpp"
#include "disent/discretize.hpp"
#include "disent/info_metrics.hpp"

namespace disent {

// Every resolved flag value for a run; embedded verbatim in each artifact so
// no output exists without its provenance.
struct RunConfig {
  std::string command;
  std::vector<std::string> input_paths;
  Pooling pooling = Pooling::mean;
  BinningStrategy code_binning = BinningStrategy::uniform_width;
  std::int32_t code_bins = 20;
  std::int32_t factor_bins = 10;
  int irs_min_group = 2;
  int epochs = 100;
  int batch_size = 128;
  double learning_rate = 0.2;
  double l2 = 1e-4;
  int runs = 5;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;  // resolved: derived from seed unless overridden
  unsigned threads = 1;
  std::vector<std::string> factors;  // empty = all factors in the table

  nlohmann::json to_json() const;
};

// One table cell; absent value carries a reason code instead.
struct Cell {
  std::optional<double> value;
  std::string null_reason;  // "zero_entropy", "no_nuisance_variation", ...

  static Cell of(double v) { return Cell{v, {}}; }
  static Cell null(std::string reason) { return Cell{std::nullopt, std::move(reason)}; }
};

// One report row: a single dimension or the trailing "All" aggregate.
struct MetricRow {
  std::optional<std::size_t> dimension;  // nullopt = "All"
  Cell mig;          // per-dim: I(v,z_j)/H(v); All: the gap score
  Cell jemmig;       // normalized, higher is better
  Cell jemmig_raw;   // bits, lower is better (auxiliary column)
  Cell irs;
  Cell irs_raw;      // unnormalized deviation (auxiliary, for transparency)
  Cell explicitness;
};

struct FactorReport {
  std::string name;
  std::int32_t cardinality = 0;
  double entropy_bits = 0.0;
  bool continuous_source = false;
  std::vector<MetricRow> rows;  // exactly d+1, "All" last
  // best-cell row index per column (max for the up-columns, min for raw
  // JEMMIG), lowest index on ties; nullopt when the column is all null
  std::optional<std::size_t> best_mig, best_jemmig, best_jemmig_raw, best_irs, best_explicitness;
  std::size_t irs_cells_used = 0;
  std::size_t irs_cells_skipped = 0;
};

struct MetricReport {
  RunConfig config;
  std::string manifest_hash;  // fnv1a64 of the manifest file bytes, hex; empty without manifest
  std::size_t n_samples = 0;
  std::size_t n_dims = 0;
  std::size_t seq_len = 0;
  std::vector<std::int32_t> effective_code_bins;
  std::vector<FactorReport> factors;
  std::optional<double> dataset_mig;     // unweighted means over valid factors
  std::optional<double> dataset_jemmig;

  nlohmann::json to_json() const;
};

struct EvalOptions {
  RunConfig config;
  std::vector<std::size_t> factor_indices;  // empty = all
};

// Runs all four metric families over a paired dataset and assembles the
// d+1-row-per-factor table. Continuous factors must already be discretized.
MetricReport run_eval(const PairedDataset& data, const EvalOptions& options,
                      const std::string& manifest_hash = {});

// inverse of MetricReport::to_json, used by the `report` re-rendering command
MetricReport report_from_json(const nlohmann::json& j);

std::string render_markdown(const MetricReport& report);
// one CSV per factor, named <prefix><factor>.csv
void render_csv(const MetricReport& report, const std::string& dir, const std::string& prefix = "");
void write_report_json(const MetricReport& report, const std::string& path);

// fixed-precision decimal used by the markdown view (6 digits, the native
// round-to-nearest-even of the binary value)
std::string format_fixed(double v, int digits = 6);

}  // namespace disent
