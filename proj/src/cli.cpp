#include "disent/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "disent/dataset.hpp"
#include "disent/discretize.hpp"
#include "disent/probe.hpp"
#include "disent/report.hpp"
#include "disent/synth.hpp"

namespace disent {

namespace {

namespace fs = std::filesystem;

struct DataArgs {
  std::string data_dir;
  std::string factor_csv;
  std::string codes_path;
  std::vector<std::string> continuous;
};

void add_data_options(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--data", args.data_dir, "dataset directory containing manifest.json");
  cmd->add_option("--factor-csv", args.factor_csv, "factor table CSV (alternative to --data)");
  cmd->add_option("--codes", args.codes_path, "code tensor file (alternative to --data)");
  cmd->add_option("--continuous", args.continuous,
                  "factor columns to ingest as continuous values")
      ->delimiter(',');
}

struct LoadedData {
  PairedDataset paired;
  std::string manifest_hash;
  std::vector<std::string> input_paths;
};

LoadedData load_data(const DataArgs& args, std::int32_t factor_bins) {
  std::string factors_path, codes_path, manifest_hash;
  std::vector<std::string> inputs;
  if (!args.data_dir.empty()) {
    const auto manifest_path = (fs::path(args.data_dir) / "manifest.json").string();
    const DatasetManifest manifest = load_manifest(manifest_path);
    factors_path = (fs::path(args.data_dir) / manifest.factors_path).string();
    codes_path = (fs::path(args.data_dir) / manifest.codes_path).string();
    inputs.push_back(args.data_dir);
    std::ifstream mf(manifest_path, std::ios::binary);
    std::ostringstream bytes;
    bytes << mf.rdbuf();
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes.str())));
    manifest_hash = buf;
  } else {
    if (args.factor_csv.empty() || args.codes_path.empty())
      throw ValidationError("either --data or both --factor-csv and --codes are required");
    factors_path = args.factor_csv;
    codes_path = args.codes_path;
    inputs.push_back(args.factor_csv);
    inputs.push_back(args.codes_path);
  }

  IngestSchema schema;
  for (const auto& name : args.continuous)
    schema.columns.push_back({name, ColumnKind::continuous, std::nullopt});

  auto ft = std::make_shared<FactorTable>(load_factor_table(factors_path, schema));
  for (std::size_t k = 0; k < ft->n_factors(); ++k)
    if (ft->is_continuous(k))
      discretize_continuous_factor(*ft, k, {BinningStrategy::quantile, factor_bins});
  auto ct = std::make_shared<CodeTensor>(load_code_tensor(codes_path));
  return LoadedData{validate_pairing(std::move(ft), std::move(ct)), manifest_hash,
                    std::move(inputs)};
}

std::vector<std::size_t> resolve_factors(const FactorTable& ft,
                                         const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& name : names) {
    const auto idx = ft.factor_index(name);
    if (!idx) throw ValidationError("unknown factor '" + name + "'");
    out.push_back(*idx);
  }
  return out;
}

int run_synth(const std::string& preset, const std::string& spec_path, std::size_t dims,
              std::size_t seq_len, std::uint64_t samples, bool samples_set, std::uint64_t seed,
              const std::string& out_dir) {
  GeneratorSpec spec;
  if (!spec_path.empty()) {
    std::ifstream in(spec_path);
    if (!in) throw IoError("cannot open spec: " + spec_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("malformed spec JSON: " + std::string(e.what()));
    }
    spec = GeneratorSpec::from_json(j);
    if (dims) spec.n_dims = dims;
    if (seq_len) spec.seq_len = seq_len;
    if (spec.mixing.size() != spec.n_dims) spec.mixing.resize(spec.n_dims, DimMix{});
  } else if (!preset.empty()) {
    spec = preset_spec(version_tag_from_string(preset), dims ? dims : 16, seq_len ? seq_len : 256);
  } else {
    throw ValidationError("synth requires --preset or --spec");
  }
  if (samples_set) spec.n_samples = samples;
  spec.seed = seed;
  spec.validate();

  const DatasetManifest manifest = write_dataset(spec, out_dir);
  std::cout << "wrote " << manifest.total_utterances << " samples (" << spec.n_dims << " dims x "
            << spec.seq_len << " steps), version tag '" << to_string(manifest.version_tag)
            << "', to " << out_dir << "\n";
  return 0;
}

int run_eval_cmd(const DataArgs& data_args, RunConfig cfg, bool split_seed_set,
                 const std::string& out_json, const std::string& out_md,
                 const std::string& csv_dir) {
  if (!split_seed_set) cfg.split_seed = derive_seed(cfg.seed, "split");
  LoadedData data = load_data(data_args, cfg.factor_bins);
  cfg.input_paths = data.input_paths;

  EvalOptions options;
  options.factor_indices = resolve_factors(*data.paired.factors, cfg.factors);
  options.config = cfg;

  const auto t0 = std::chrono::steady_clock::now();
  const MetricReport report = run_eval(data.paired, options, data.manifest_hash);
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);

  write_report_json(report, out_json);
  if (!out_md.empty()) {
    std::ofstream out(out_md, std::ios::binary);
    if (!out) throw IoError("cannot write markdown: " + out_md);
    out << render_markdown(report);
  }
  if (!csv_dir.empty()) render_csv(report, csv_dir);

  std::cout << "evaluated " << report.factors.size() << " factor(s) over " << report.n_samples
            << " samples in " << elapsed.count() << " ms\n";
  if (report.dataset_mig)
    std::cout << "dataset MIG " << format_fixed(*report.dataset_mig) << ", dataset JEMMIG "
              << format_fixed(*report.dataset_jemmig) << "\n";
  std::cout << "report written to " << out_json << "\n";
  return 0;
}

int run_probe_cmd(const DataArgs& data_args, const std::string& factor_name, RunConfig cfg,
                  const std::string& out_json, const std::string& trend_csv) {
  LoadedData data = load_data(data_args, cfg.factor_bins);
  cfg.input_paths = data.input_paths;
  const auto idx = data.paired.factors->factor_index(factor_name);
  if (!idx) throw ValidationError("unknown factor '" + factor_name + "'");

  ProbeConfig pc;
  pc.train.epochs = cfg.epochs;
  pc.train.batch_size = cfg.batch_size;
  pc.train.learning_rate = cfg.learning_rate;
  pc.train.l2 = cfg.l2;
  pc.runs = cfg.runs;
  pc.master_seed = cfg.seed;
  pc.threads = cfg.threads;

  const ProbeResult result = probe_factor(data.paired, *idx, pc.runs, pc);

  nlohmann::json j = result.to_json();
  j["run_config"] = cfg.to_json();
  std::ofstream out(out_json, std::ios::binary);
  if (!out) throw IoError("cannot write probe result: " + out_json);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing probe result: " + out_json);
  if (!trend_csv.empty()) emit_accuracy_trend(result, trend_csv);

  std::cout << "probe over " << result.per_dim.size() << " dims, " << result.runs
            << " run(s): best dim ";
  std::size_t best = 0;
  for (std::size_t jdx = 1; jdx < result.per_dim.size(); ++jdx)
    if (result.per_dim[jdx].mean > result.per_dim[best].mean) best = jdx;
  std::cout << best << " at " << format_fixed(result.per_dim[best].mean) << ", All at "
            << format_fixed(result.all_combined.mean) << "\n";
  return 0;
}

int run_report_cmd(const std::string& in_path, const std::string& format,
                   const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw IoError("cannot open report: " + in_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed report JSON: " + std::string(e.what()));
  }
  const MetricReport report = report_from_json(j);
  if (format == "markdown") {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + out_path);
    out << render_markdown(report);
  } else if (format == "csv") {
    render_csv(report, out_path);
  } else if (format == "json") {
    write_report_json(report, out_path);
  } else {
    throw ValidationError("unknown format '" + format + "'");
  }
  std::cout << "rendered " << format << " to " << out_path << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"disent - disentanglement metrics over (factor, latent-code) datasets"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with known structure");
  std::string preset, spec_path, out_dir;
  std::size_t dims = 0, seq_len = 0;
  std::uint64_t samples = 0, synth_seed = 0;
  synth->add_option("--preset", preset, "built-in version: small, medium or large")
      ->check(CLI::IsMember({"small", "medium", "large"}));
  synth->add_option("--spec", spec_path, "generator spec JSON file");
  synth->add_option("--dims", dims, "code dimensions (default 16)");
  synth->add_option("--seq-len", seq_len, "time steps per dimension (default 256)");
  auto* samples_opt = synth->add_option("--samples", samples, "sample count (default: one grid pass)");
  synth->add_option("--seed", synth_seed, "master seed")->default_val(0);
  synth->add_option("--out-dir", out_dir, "output directory")->required();

  // shared eval/probe options
  DataArgs eval_data, probe_data;
  RunConfig eval_cfg, probe_cfg;
  std::string eval_out = "report.json", eval_md, eval_csv_dir;
  bool eval_split_seed_set = false;
  const unsigned default_threads = std::max(1u, std::thread::hardware_concurrency());

  auto add_train_options = [](CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--epochs", cfg.epochs, "training epochs")->default_val(100);
    cmd->add_option("--batch-size", cfg.batch_size, "mini-batch size")->default_val(128);
    cmd->add_option("--lr", cfg.learning_rate, "initial learning rate")->default_val(0.2);
    cmd->add_option("--l2", cfg.l2, "L2 regularization strength")->default_val(1e-4);
  };

  auto* eval = app.add_subcommand("eval", "compute MIG, JEMMIG, IRS and Explicitness tables");
  add_data_options(eval, eval_data);
  eval->add_option("--factors", eval_cfg.factors, "factor names to evaluate (default: all)")
      ->delimiter(',');
  eval->add_option("--pooling", eval_cfg.pooling, "time-axis pooling: mean, maxabs or rms")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, Pooling>{{"mean", Pooling::mean},
                                         {"maxabs", Pooling::max_abs},
                                         {"rms", Pooling::rms}}))
      ->default_str("mean");
  eval->add_option("--binning", eval_cfg.code_binning, "code binning: uniform or quantile")
      ->transform(CLI::CheckedTransformer(std::map<std::string, BinningStrategy>{
          {"uniform", BinningStrategy::uniform_width}, {"quantile", BinningStrategy::quantile}}))
      ->default_str("uniform");
  eval->add_option("--code-bins", eval_cfg.code_bins, "bins per code dimension")->default_val(20);
  eval->add_option("--factor-bins", eval_cfg.factor_bins, "quantile bins for continuous factors")
      ->default_val(10);
  eval->add_option("--irs-min-group", eval_cfg.irs_min_group,
                   "minimum samples per intervention cell")
      ->default_val(2);
  add_train_options(eval, eval_cfg);
  eval->add_option("--seed", eval_cfg.seed, "master seed")->default_val(0);
  auto* split_opt = eval->add_option("--split-seed", eval_cfg.split_seed,
                                     "override the derived train/test split seed");
  eval->add_option("--threads", eval_cfg.threads, "worker threads")->default_val(default_threads);
  eval->add_option("--out", eval_out, "report JSON path")->default_str("report.json");
  eval->add_option("--markdown", eval_md, "also render a markdown view here");
  eval->add_option("--csv-dir", eval_csv_dir, "also render per-factor CSVs here");

  auto* probe = app.add_subcommand("probe", "linear-probe a factor across latent dimensions");
  add_data_options(probe, probe_data);
  std::string probe_factor_name, probe_out = "probe.json", probe_trend;
  probe->add_option("--factor", probe_factor_name, "factor to probe")->required();
  probe->add_option("--runs", probe_cfg.runs, "experimental runs")->default_val(5);
  add_train_options(probe, probe_cfg);
  probe->add_option("--factor-bins", probe_cfg.factor_bins,
                    "quantile bins for continuous factors")
      ->default_val(10);
  probe->add_option("--seed", probe_cfg.seed, "master seed")->default_val(0);
  probe->add_option("--threads", probe_cfg.threads, "worker threads")->default_val(default_threads);
  probe->add_option("--out", probe_out, "probe result JSON path")->default_str("probe.json");
  probe->add_option("--trend", probe_trend, "accuracy-trend CSV path");

  auto* report = app.add_subcommand("report", "re-render a report JSON as markdown or CSV");
  std::string report_in, report_format = "markdown", report_out;
  report->add_option("--in", report_in, "canonical report JSON")->required();
  report->add_option("--format", report_format, "markdown, csv or json")
      ->check(CLI::IsMember({"markdown", "csv", "json"}))
      ->default_str("markdown");
  report->add_option("--out", report_out, "output file (directory for csv)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth->parsed())
      return run_synth(preset, spec_path, dims, seq_len, samples, samples_opt->count() > 0,
                       synth_seed, out_dir);
    if (eval->parsed()) {
      eval_cfg.command = "eval";
      eval_split_seed_set = split_opt->count() > 0;
      return run_eval_cmd(eval_data, eval_cfg, eval_split_seed_set, eval_out, eval_md,
                          eval_csv_dir);
    }
    if (probe->parsed()) {
      probe_cfg.command = "probe";
      probe_cfg.split_seed = derive_seed(probe_cfg.seed, "split");
      return run_probe_cmd(probe_data, probe_factor_name, probe_cfg, probe_out, probe_trend);
    }
    if (report->parsed()) return run_report_cmd(report_in, report_format, report_out);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace disent
