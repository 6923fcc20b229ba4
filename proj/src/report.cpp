#include "disent/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "disent/irs.hpp"
#include "disent/parallel.hpp"
#include "disent/predictor_metrics.hpp"

namespace disent {

nlohmann::json RunConfig::to_json() const {
  return nlohmann::json{{"command", command},
                        {"input_paths", input_paths},
                        {"pooling", to_string(pooling)},
                        {"code_binning", to_string(code_binning)},
                        {"code_bins", code_bins},
                        {"factor_bins", factor_bins},
                        {"irs_min_group", irs_min_group},
                        {"epochs", epochs},
                        {"batch_size", batch_size},
                        {"learning_rate", learning_rate},
                        {"l2", l2},
                        {"runs", runs},
                        {"seed", seed},
                        {"split_seed", split_seed},
                        {"threads", threads},
                        {"factors", factors},
                        {"engine_version", kEngineVersion}};
}

namespace {

nlohmann::json cell_json(const Cell& c) {
  if (c.value) return *c.value;
  return nullptr;
}

void add_cell(nlohmann::json& row, const char* key, const Cell& c) {
  row[key] = cell_json(c);
  if (!c.value && !c.null_reason.empty()) row[std::string(key) + "_null_reason"] = c.null_reason;
}

// lowest row index holding the extreme value of a column; skips nulls
template <typename Get>
std::optional<std::size_t> best_row(const std::vector<MetricRow>& rows, Get get, bool maximize) {
  std::optional<std::size_t> best;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Cell& c = get(rows[r]);
    if (!c.value) continue;
    if (!best) {
      best = r;
      continue;
    }
    const double cur = *get(rows[*best]).value;
    if (maximize ? *c.value > cur : *c.value < cur) best = r;
  }
  return best;
}

}  // namespace

MetricReport run_eval(const PairedDataset& data, const EvalOptions& options,
                      const std::string& manifest_hash) {
  const FactorTable& ft = *data.factors;
  const CodeTensor& ct = *data.codes;
  if (ct.n_dims < 2)
    throw ValidationError("eval requires at least two code dimensions (gap metrics undefined)");

  std::vector<std::size_t> selected = options.factor_indices;
  if (selected.empty()) {
    selected.resize(ft.n_factors());
    std::iota(selected.begin(), selected.end(), 0);
  }
  for (std::size_t k : selected)
    if (k >= ft.n_factors()) throw ValidationError("eval: factor index out of range");

  const RunConfig& cfg = options.config;
  const PoolingSpec pool{cfg.pooling};
  const BinningSpec code_bin{cfg.code_binning, cfg.code_bins};

  const PooledCodes pooled = pool_time_axis(ct, pool);
  BinnedCodes binned;
  binned.n_samples = ct.n_samples;
  binned.n_dims = ct.n_dims;
  binned.nominal_bins = code_bin.n_bins;
  binned.dims.resize(ct.n_dims);
  for (std::size_t j = 0; j < ct.n_dims; ++j)
    binned.dims[j] = bin_values(pooled.column(j), code_bin);

  const MIMatrix mi = mi_matrix(data, binned);

  MetricReport report;
  report.config = cfg;
  report.manifest_hash = manifest_hash;
  report.n_samples = ct.n_samples;
  report.n_dims = ct.n_dims;
  report.seq_len = ct.seq_len;
  report.effective_code_bins = mi.effective_code_bins;

  const std::size_t d = ct.n_dims;
  std::vector<std::size_t> all_dims(d);
  std::iota(all_dims.begin(), all_dims.end(), 0);

  report.factors.resize(selected.size());
  for (std::size_t s = 0; s < selected.size(); ++s) {
    const std::size_t k = selected[s];
    FactorReport& fr = report.factors[s];
    fr.name = ft.factor_names[k];
    fr.cardinality = ft.cardinalities[k];
    fr.entropy_bits = mi.factor_entropies[k];
    fr.continuous_source = ft.is_continuous(k);
    fr.rows.resize(d + 1);
    for (std::size_t j = 0; j < d; ++j) fr.rows[j].dimension = j;

    const double h = mi.factor_entropies[k];
    if (h <= 0.0) {
      for (auto& row : fr.rows) {
        row.mig = Cell::null("zero_entropy");
        row.jemmig = Cell::null("zero_entropy");
        row.jemmig_raw = Cell::null("zero_entropy");
        row.explicitness = Cell::null("zero_entropy");
      }
    } else {
      for (std::size_t j = 0; j < d; ++j) {
        fr.rows[j].mig = Cell::of(mi.at(k, j) / h);
        const auto jm = jemmig_for_dim(data, binned, mi, k, j);
        fr.rows[j].jemmig = Cell::of(jm->normalized);
        fr.rows[j].jemmig_raw = Cell::of(jm->raw);
      }
      const auto mg = mig(mi, k);
      const auto jm = jemmig(data, binned, mi, k);
      fr.rows[d].mig = Cell::of(mg->score);
      fr.rows[d].jemmig = Cell::of(jm->normalized);
      fr.rows[d].jemmig_raw = Cell::of(jm->raw);
    }

    // intervention family
    try {
      const InterventionPlan plan = build_plan(data, k, cfg.irs_min_group);
      fr.irs_cells_used = plan.cells_used();
      fr.irs_cells_skipped = plan.cells_skipped();
      for (std::size_t j = 0; j < d; ++j) {
        const std::size_t one[1] = {j};
        const IrsResult r = irs_score(pooled, plan, one);
        fr.rows[j].irs = Cell::of(r.score);
        fr.rows[j].irs_raw = Cell::of(r.raw);
      }
      const IrsResult r = irs_score(pooled, plan, all_dims);
      fr.rows[d].irs = Cell::of(r.score);
      fr.rows[d].irs_raw = Cell::of(r.raw);
    } catch (const ValidationError&) {
      for (auto& row : fr.rows) {
        row.irs = Cell::null("no_nuisance_variation");
        row.irs_raw = Cell::null("no_nuisance_variation");
      }
    }
  }

  // predictor family: all (factor, scope) probes run as one task list
  struct Task {
    std::size_t slot;   // index into report.factors
    std::size_t k;      // factor index in the table
    std::optional<std::size_t> dim;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < selected.size(); ++s) {
    if (mi.factor_entropies[selected[s]] <= 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) tasks.push_back({s, selected[s], j});
    tasks.push_back({s, selected[s], std::nullopt});
  }
  std::vector<Cell> expl_cells(tasks.size());
  run_tasks(tasks.size(), cfg.threads, [&](std::size_t t) {
    const Task& task = tasks[t];
    ExplicitnessConfig ec;
    ec.train.epochs = cfg.epochs;
    ec.train.batch_size = cfg.batch_size;
    ec.train.learning_rate = cfg.learning_rate;
    ec.train.l2 = cfg.l2;
    const std::uint64_t scope_slot = task.dim ? *task.dim : d;
    ec.train.seed = derive_seed(cfg.seed, "explicitness.train", task.k * 0x10000ull + scope_slot);
    ec.split_seed = derive_seed(cfg.split_seed, "explicitness.split", task.k);
    try {
      expl_cells[t] = Cell::of(explicitness(data, task.k, task.dim, ec).score);
    } catch (const ValidationError&) {
      expl_cells[t] = Cell::null("predictor_undefined");
    }
  });
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const std::size_t row = tasks[t].dim ? *tasks[t].dim : d;
    report.factors[tasks[t].slot].rows[row].explicitness = expl_cells[t];
  }

  for (auto& fr : report.factors) {
    fr.best_mig = best_row(fr.rows, [](const MetricRow& r) -> const Cell& { return r.mig; }, true);
    fr.best_jemmig =
        best_row(fr.rows, [](const MetricRow& r) -> const Cell& { return r.jemmig; }, true);
    fr.best_jemmig_raw =
        best_row(fr.rows, [](const MetricRow& r) -> const Cell& { return r.jemmig_raw; }, false);
    fr.best_irs = best_row(fr.rows, [](const MetricRow& r) -> const Cell& { return r.irs; }, true);
    fr.best_explicitness = best_row(
        fr.rows, [](const MetricRow& r) -> const Cell& { return r.explicitness; }, true);
  }

  // dataset-level gap scores over the selected factors with H > 0
  {
    double mig_sum = 0.0, jem_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k : selected) {
      if (mi.factor_entropies[k] <= 0.0) continue;
      mig_sum += mig(mi, k)->score;
      jem_sum += jemmig(data, binned, mi, k)->normalized;
      ++count;
    }
    if (count > 0) {
      report.dataset_mig = mig_sum / static_cast<double>(count);
      report.dataset_jemmig = jem_sum / static_cast<double>(count);
    }
  }
  return report;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json jfactors = nlohmann::json::array();
  for (const auto& fr : factors) {
    nlohmann::json jrows = nlohmann::json::array();
    for (const auto& row : fr.rows) {
      nlohmann::json jr;
      jr["dimension"] = row.dimension ? nlohmann::json(*row.dimension) : nlohmann::json("All");
      add_cell(jr, "mig", row.mig);
      add_cell(jr, "jemmig", row.jemmig);
      add_cell(jr, "jemmig_raw", row.jemmig_raw);
      add_cell(jr, "irs", row.irs);
      add_cell(jr, "irs_raw", row.irs_raw);
      add_cell(jr, "explicitness", row.explicitness);
      jrows.push_back(jr);
    }
    auto best = [](const std::optional<std::size_t>& b) {
      return b ? nlohmann::json(*b) : nlohmann::json(nullptr);
    };
    jfactors.push_back(nlohmann::json{{"name", fr.name},
                                      {"cardinality", fr.cardinality},
                                      {"entropy_bits", fr.entropy_bits},
                                      {"continuous_source", fr.continuous_source},
                                      {"rows", jrows},
                                      {"irs_cells_used", fr.irs_cells_used},
                                      {"irs_cells_skipped", fr.irs_cells_skipped},
                                      {"best", nlohmann::json{{"mig", best(fr.best_mig)},
                                                              {"jemmig", best(fr.best_jemmig)},
                                                              {"jemmig_raw", best(fr.best_jemmig_raw)},
                                                              {"irs", best(fr.best_irs)},
                                                              {"explicitness", best(fr.best_explicitness)}}}});
  }
  return nlohmann::json{
      {"run_config", config.to_json()},
      {"dataset",
       nlohmann::json{{"manifest_hash", manifest_hash},
                      {"n_samples", n_samples},
                      {"n_dims", n_dims},
                      {"seq_len", seq_len},
                      {"effective_code_bins", effective_code_bins},
                      {"irs_scale_mode", "half_range_per_target"}}},
      {"factors", jfactors},
      {"dataset_mig", dataset_mig ? nlohmann::json(*dataset_mig) : nlohmann::json(nullptr)},
      {"dataset_jemmig",
       dataset_jemmig ? nlohmann::json(*dataset_jemmig) : nlohmann::json(nullptr)}};
}

MetricReport report_from_json(const nlohmann::json& j) {
  MetricReport report;
  try {
    const auto& rc = j.at("run_config");
    report.config.command = rc.value("command", std::string());
    report.config.input_paths = rc.value("input_paths", std::vector<std::string>{});
    report.config.pooling = pooling_from_string(rc.at("pooling").get<std::string>());
    report.config.code_binning = binning_from_string(rc.at("code_binning").get<std::string>());
    report.config.code_bins = rc.at("code_bins").get<std::int32_t>();
    report.config.factor_bins = rc.at("factor_bins").get<std::int32_t>();
    report.config.irs_min_group = rc.at("irs_min_group").get<int>();
    report.config.epochs = rc.at("epochs").get<int>();
    report.config.batch_size = rc.at("batch_size").get<int>();
    report.config.learning_rate = rc.at("learning_rate").get<double>();
    report.config.l2 = rc.at("l2").get<double>();
    report.config.runs = rc.value("runs", 5);
    report.config.seed = rc.at("seed").get<std::uint64_t>();
    report.config.split_seed = rc.at("split_seed").get<std::uint64_t>();
    report.config.threads = rc.value("threads", 1u);
    report.config.factors = rc.value("factors", std::vector<std::string>{});

    const auto& ds = j.at("dataset");
    report.manifest_hash = ds.value("manifest_hash", std::string());
    report.n_samples = ds.at("n_samples").get<std::size_t>();
    report.n_dims = ds.at("n_dims").get<std::size_t>();
    report.seq_len = ds.at("seq_len").get<std::size_t>();
    report.effective_code_bins = ds.value("effective_code_bins", std::vector<std::int32_t>{});

    auto cell_of = [](const nlohmann::json& row, const char* key) {
      Cell c;
      if (!row.at(key).is_null())
        c.value = row.at(key).get<double>();
      else
        c.null_reason = row.value(std::string(key) + "_null_reason", std::string());
      return c;
    };
    auto best_of = [](const nlohmann::json& b, const char* key) -> std::optional<std::size_t> {
      if (b.at(key).is_null()) return std::nullopt;
      return b.at(key).get<std::size_t>();
    };
    for (const auto& jf : j.at("factors")) {
      FactorReport fr;
      fr.name = jf.at("name").get<std::string>();
      fr.cardinality = jf.at("cardinality").get<std::int32_t>();
      fr.entropy_bits = jf.at("entropy_bits").get<double>();
      fr.continuous_source = jf.value("continuous_source", false);
      fr.irs_cells_used = jf.value("irs_cells_used", std::size_t{0});
      fr.irs_cells_skipped = jf.value("irs_cells_skipped", std::size_t{0});
      for (const auto& jr : jf.at("rows")) {
        MetricRow row;
        if (!jr.at("dimension").is_string()) row.dimension = jr.at("dimension").get<std::size_t>();
        row.mig = cell_of(jr, "mig");
        row.jemmig = cell_of(jr, "jemmig");
        row.jemmig_raw = cell_of(jr, "jemmig_raw");
        row.irs = cell_of(jr, "irs");
        row.irs_raw = cell_of(jr, "irs_raw");
        row.explicitness = cell_of(jr, "explicitness");
        fr.rows.push_back(std::move(row));
      }
      const auto& b = jf.at("best");
      fr.best_mig = best_of(b, "mig");
      fr.best_jemmig = best_of(b, "jemmig");
      fr.best_jemmig_raw = best_of(b, "jemmig_raw");
      fr.best_irs = best_of(b, "irs");
      fr.best_explicitness = best_of(b, "explicitness");
      report.factors.push_back(std::move(fr));
    }
    if (!j.at("dataset_mig").is_null()) report.dataset_mig = j.at("dataset_mig").get<double>();
    if (!j.at("dataset_jemmig").is_null())
      report.dataset_jemmig = j.at("dataset_jemmig").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report JSON: ") + e.what());
  }
  return report;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

namespace {

std::string md_cell(const Cell& c, bool best) {
  if (!c.value) return "—";
  std::string s = format_fixed(*c.value);
  return best ? "**" + s + "**" : s;
}

}  // namespace

std::string render_markdown(const MetricReport& report) {
  std::string out;
  out += "# Disentanglement metrics\n\n";
  out += "samples: " + std::to_string(report.n_samples) + ", dims: " +
         std::to_string(report.n_dims) + ", seq len: " + std::to_string(report.seq_len) + "\n\n";
  out += "pooling: " + to_string(report.config.pooling) +
         ", code binning: " + to_string(report.config.code_binning) + " (" +
         std::to_string(report.config.code_bins) + " bins), factor bins: " +
         std::to_string(report.config.factor_bins) +
         ", seed: " + std::to_string(report.config.seed) + "\n\n";
  if (report.dataset_mig)
    out += "dataset MIG: " + format_fixed(*report.dataset_mig) + ", dataset JEMMIG (normalized): " +
           format_fixed(*report.dataset_jemmig) + "\n\n";
  for (const auto& fr : report.factors) {
    out += "## " + fr.name + " (cardinality " + std::to_string(fr.cardinality) + ", H = " +
           format_fixed(fr.entropy_bits) + " bits)\n\n";
    out += "| Dimension | MIG ↑ | JEMMIG ↑ | JEMMIG raw ↓ | IRS ↑ | Explicitness ↑ |\n";
    out += "|---|---|---|---|---|---|\n";
    for (std::size_t r = 0; r < fr.rows.size(); ++r) {
      const MetricRow& row = fr.rows[r];
      out += "| " + (row.dimension ? std::to_string(*row.dimension) : std::string("All")) + " | ";
      out += md_cell(row.mig, fr.best_mig == r) + " | ";
      out += md_cell(row.jemmig, fr.best_jemmig == r) + " | ";
      out += md_cell(row.jemmig_raw, fr.best_jemmig_raw == r) + " | ";
      out += md_cell(row.irs, fr.best_irs == r) + " | ";
      out += md_cell(row.explicitness, fr.best_explicitness == r) + " |\n";
    }
    out += "\n";
  }
  return out;
}

void render_csv(const MetricReport& report, const std::string& dir, const std::string& prefix) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create CSV directory " + dir + ": " + ec.message());
  auto cell = [](const Cell& c) {
    if (!c.value) return std::string();
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", *c.value);
    return std::string(buf);
  };
  for (const auto& fr : report.factors) {
    const auto path = fs::path(dir) / (prefix + fr.name + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "dimension,mig,jemmig,jemmig_raw,irs,irs_raw,explicitness\n";
    for (const auto& row : fr.rows) {
      out << (row.dimension ? std::to_string(*row.dimension) : std::string("All")) << ','
          << cell(row.mig) << ',' << cell(row.jemmig) << ',' << cell(row.jemmig_raw) << ','
          << cell(row.irs) << ',' << cell(row.irs_raw) << ',' << cell(row.explicitness) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
  }
}

void write_report_json(const MetricReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report: " + path);
  out << report.to_json().dump(2) << '\n';
  if (!out) throw IoError("failed writing report: " + path);
}

}  // namespace disent
