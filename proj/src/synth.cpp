#include "disent/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

namespace disent {

Nonlinearity nonlinearity_from_string(const std::string& s) {
  if (s == "none") return Nonlinearity::none;
  if (s == "tanh") return Nonlinearity::tanh;
  if (s == "quantize") return Nonlinearity::quantize;
  throw ValidationError("unknown nonlinearity: " + s);
}

std::string to_string(Nonlinearity n) {
  switch (n) {
    case Nonlinearity::none: return "none";
    case Nonlinearity::tanh: return "tanh";
    case Nonlinearity::quantize: return "quantize";
  }
  return "none";
}

std::uint64_t GeneratorSpec::grid_cells() const {
  std::uint64_t cells = 1;
  for (const auto& g : grid) cells *= static_cast<std::uint64_t>(g.cardinality);
  return cells;
}

void GeneratorSpec::validate() const {
  if (grid.empty()) throw ValidationError("generator spec: empty factor grid");
  for (const auto& g : grid) {
    if (g.name.empty()) throw ValidationError("generator spec: empty factor name");
    if (g.cardinality < 1) throw ValidationError("generator spec: cardinality < 1");
  }
  if (n_dims == 0 || seq_len == 0) throw ValidationError("generator spec: zero-sized code shape");
  if (mixing.size() != n_dims)
    throw ValidationError("generator spec: mixing must list every code dimension");
  // mix sources may reference grid factors and derived factors, which take
  // the column slots after the grid
  const std::size_t n_referencable = grid.size() + derived.size();
  for (const auto& m : mixing) {
    if (m.sigma < 0.0 || !std::isfinite(m.sigma))
      throw ValidationError("generator spec: sigma must be finite and >= 0");
    for (const auto& s : m.sources) {
      if (s.factor >= n_referencable)
        throw ValidationError("generator spec: mix source out of range");
      if (!std::isfinite(s.weight)) throw ValidationError("generator spec: non-finite mix weight");
    }
  }
  for (const auto& d : derived) {
    if (d.name.empty()) throw ValidationError("generator spec: empty derived factor name");
    if (d.source >= grid.size())
      throw ValidationError("generator spec: derived factor source out of range");
    if (d.n_values < 1) throw ValidationError("generator spec: derived n_values < 1");
  }
  if (n_samples && require_grid_complete && *n_samples < grid_cells())
    throw ValidationError("generator spec: n_samples " + std::to_string(*n_samples) +
                          " is below the " + std::to_string(grid_cells()) +
                          " grid cells required for a grid-complete dataset");
}

nlohmann::json GeneratorSpec::to_json() const {
  nlohmann::json jgrid = nlohmann::json::array();
  for (const auto& g : grid) jgrid.push_back({{"name", g.name}, {"cardinality", g.cardinality}});
  nlohmann::json jmix = nlohmann::json::array();
  for (std::size_t j = 0; j < mixing.size(); ++j) {
    nlohmann::json src = nlohmann::json::array();
    for (const auto& s : mixing[j].sources)
      src.push_back({{"factor", s.factor}, {"weight", s.weight}});
    jmix.push_back({{"dim", j},
                    {"sources", src},
                    {"sigma", mixing[j].sigma},
                    {"nonlinearity", to_string(mixing[j].nonlinearity)}});
  }
  nlohmann::json jderived = nlohmann::json::array();
  for (const auto& d : derived)
    jderived.push_back({{"name", d.name}, {"source", d.source}, {"n_values", d.n_values}});
  nlohmann::json j{{"name", name},
                   {"grid", jgrid},
                   {"dims", n_dims},
                   {"seq_len", seq_len},
                   {"mixing", jmix},
                   {"derived", jderived},
                   {"require_grid_complete", require_grid_complete},
                   {"seed", seed}};
  if (n_samples) j["n_samples"] = *n_samples;
  return j;
}

GeneratorSpec GeneratorSpec::from_json(const nlohmann::json& j) {
  GeneratorSpec spec;
  try {
    spec.name = j.value("name", std::string("custom"));
    for (const auto& g : j.at("grid"))
      spec.grid.push_back({g.at("name").get<std::string>(), g.at("cardinality").get<std::int32_t>()});
    spec.n_dims = j.at("dims").get<std::size_t>();
    spec.seq_len = j.value("seq_len", std::size_t{1});
    // dims not listed under "mixing" default to pure unit noise
    spec.mixing.assign(spec.n_dims, DimMix{});
    if (j.contains("mixing")) {
      for (const auto& m : j.at("mixing")) {
        const auto dim = m.at("dim").get<std::size_t>();
        if (dim >= spec.n_dims) throw ValidationError("generator spec: mixing dim out of range");
        DimMix mix;
        if (m.contains("sources"))
          for (const auto& s : m.at("sources"))
            mix.sources.push_back({s.at("factor").get<std::size_t>(), s.at("weight").get<double>()});
        mix.sigma = m.value("sigma", 0.0);
        mix.nonlinearity = nonlinearity_from_string(m.value("nonlinearity", std::string("none")));
        spec.mixing[dim] = mix;
      }
    }
    if (j.contains("derived"))
      for (const auto& d : j.at("derived"))
        spec.derived.push_back({d.at("name").get<std::string>(), d.at("source").get<std::size_t>(),
                                d.value("n_values", std::int32_t{2})});
    if (j.contains("n_samples")) spec.n_samples = j.at("n_samples").get<std::uint64_t>();
    spec.require_grid_complete = j.value("require_grid_complete", false);
    spec.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed generator spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string GeneratorSpec::canonical_hash() const {
  const std::string dump = to_json().dump();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(dump)));
  return buf;
}

GeneratorSpec preset_spec(VersionTag tag, std::size_t n_dims, std::size_t seq_len) {
  if (tag == VersionTag::custom) throw ValidationError("no preset for the custom tag");
  GeneratorSpec spec;
  spec.name = "synspeech-" + to_string(tag);
  spec.version_tag = tag;
  spec.grid = builtin_grid(tag);
  spec.n_dims = n_dims;
  spec.seq_len = seq_len;
  spec.derived.push_back({"gender", 0, 2});  // one gender per speaker

  spec.mixing.assign(n_dims, DimMix{{}, 1.0, Nonlinearity::none});
  const std::size_t speaker = 0, style = 2;
  const std::size_t gender = spec.grid.size();  // derived factors follow the grid
  auto place = [&](std::size_t dim, std::size_t factor, double w, double sigma) {
    if (dim < n_dims) spec.mixing[dim] = DimMix{{{factor, w}}, sigma, Nonlinearity::none};
  };
  place(0, style, 1.0, 0.10);
  place(1, style, 0.40, 0.60);
  place(3, speaker, 1.0, 0.30);
  place(4, gender, 1.0, 0.10);
  place(5, style, 0.30, 0.80);
  place(7, gender, 0.35, 0.70);
  place(9, gender, 0.25, 0.80);
  return spec;
}

double centered_value(std::int32_t value, std::int32_t cardinality) {
  if (cardinality <= 1) return 0.0;
  return 2.0 * static_cast<double>(value) / static_cast<double>(cardinality - 1) - 1.0;
}

namespace {

std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

// 8-level midpoint quantizer over [-1, 1]; the controlled discretization-error
// source for tests
double quantize8(double x) {
  auto level = static_cast<int>(std::floor((x + 1.0) * 4.0));
  level = std::clamp(level, 0, 7);
  return -1.0 + (level + 0.5) / 4.0;
}

class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller on (0,1] uniforms
    const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

std::string factor_label(const std::string& factor, std::int32_t value, std::int32_t card) {
  char buf[48];
  if (factor == "speaker_id") {
    std::snprintf(buf, sizeof(buf), "spk_%03d", value);
  } else if (factor == "content") {
    std::snprintf(buf, sizeof(buf), "sent_%03d", value);
  } else if (factor == "gender" && card == 2) {
    return value == 0 ? "male" : "female";
  } else if (factor == "style" && card == 4) {
    static const char* styles[4] = {"default", "friendly", "sad", "whispering"};
    return styles[value];
  } else {
    std::snprintf(buf, sizeof(buf), "%s_%d", factor.c_str(), value);
  }
  return buf;
}

}  // namespace

SynthResult generate(const GeneratorSpec& spec) {
  spec.validate();
  const std::uint64_t cells = spec.grid_cells();
  const std::uint64_t n = spec.n_samples.value_or(cells);
  if (n == 0) throw ValidationError("generator spec: zero samples requested");

  // cell index per sample: full odometer passes keep marginals exactly
  // uniform; a remainder (or an undersized request) is drawn by seed
  std::vector<std::uint64_t> rows;
  rows.reserve(n);
  std::mt19937_64 row_rng(derive_seed(spec.seed, "synth.rows"));
  if (n >= cells) {
    for (std::uint64_t pass = 0; pass < n / cells; ++pass)
      for (std::uint64_t c = 0; c < cells; ++c) rows.push_back(c);
    const std::uint64_t rem = n % cells;
    if (rem > 0) {
      std::vector<std::uint64_t> perm(cells);
      for (std::uint64_t c = 0; c < cells; ++c) perm[c] = c;
      for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[bounded(row_rng, i)]);
      rows.insert(rows.end(), perm.begin(), perm.begin() + rem);
    }
  } else {
    for (std::uint64_t i = 0; i < n; ++i) rows.push_back(bounded(row_rng, cells));
  }

  // decode mixed-radix cell indices into grid factor columns
  const std::size_t n_grid = spec.grid.size();
  const std::size_t n_factors = n_grid + spec.derived.size();
  FactorTable ft;
  ft.n_samples = rows.size();
  ft.columns.assign(n_factors, {});
  for (auto& c : ft.columns) c.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::uint64_t rest = rows[i];
    for (std::size_t k = n_grid; k-- > 0;) {
      const auto card = static_cast<std::uint64_t>(spec.grid[k].cardinality);
      ft.columns[k][i] = static_cast<std::int32_t>(rest % card);
      rest /= card;
    }
  }

  for (std::size_t k = 0; k < n_grid; ++k) {
    ft.factor_names.push_back(spec.grid[k].name);
    ft.cardinalities.push_back(spec.grid[k].cardinality);
  }

  // derived factors: balanced seeded map over the source's values
  std::vector<std::vector<std::int32_t>> derived_maps;
  for (std::size_t d = 0; d < spec.derived.size(); ++d) {
    const auto& def = spec.derived[d];
    const std::int32_t src_card = spec.grid[def.source].cardinality;
    std::vector<std::int32_t> order(src_card);
    for (std::int32_t v = 0; v < src_card; ++v) order[v] = v;
    std::mt19937_64 map_rng(derive_seed(spec.seed, "synth.derived", d));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[bounded(map_rng, i)]);
    std::vector<std::int32_t> map(src_card);
    for (std::int32_t r = 0; r < src_card; ++r)
      map[order[r]] = static_cast<std::int32_t>(
          (static_cast<std::int64_t>(r) * def.n_values) / src_card);

    const std::size_t col = n_grid + d;
    for (std::size_t i = 0; i < rows.size(); ++i)
      ft.columns[col][i] = map[ft.columns[def.source][i]];
    ft.factor_names.push_back(def.name);
    ft.cardinalities.push_back(std::min<std::int32_t>(def.n_values, src_card));
    derived_maps.push_back(std::move(map));
  }

  ft.label_maps.assign(n_factors, {});
  ft.continuous_sources.assign(n_factors, {});
  for (std::size_t k = 0; k < n_factors; ++k) {
    ft.label_maps[k].reserve(ft.cardinalities[k]);
    for (std::int32_t v = 0; v < ft.cardinalities[k]; ++v)
      ft.label_maps[k].push_back(factor_label(ft.factor_names[k], v, ft.cardinalities[k]));
  }
  ft.validate();

  // codes: one sequential noise stream, sample-major, so generation is
  // reproducible independent of threading anywhere else
  CodeTensor ct;
  ct.n_samples = rows.size();
  ct.n_dims = spec.n_dims;
  ct.seq_len = spec.seq_len;
  ct.values.resize(rows.size() * spec.n_dims * spec.seq_len);
  NormalSampler noise(derive_seed(spec.seed, "synth.noise"));
  std::size_t w = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < spec.n_dims; ++j) {
      const DimMix& mix = spec.mixing[j];
      double base = 0.0;
      for (const auto& s : mix.sources)
        base += s.weight * centered_value(ft.columns[s.factor][i], ft.cardinalities[s.factor]);
      for (std::size_t t = 0; t < spec.seq_len; ++t) {
        double v = base;
        if (mix.sigma > 0.0) v += mix.sigma * noise();
        switch (mix.nonlinearity) {
          case Nonlinearity::none: break;
          case Nonlinearity::tanh: v = std::tanh(v); break;
          case Nonlinearity::quantize: v = quantize8(v); break;
        }
        ct.values[w++] = static_cast<float>(v);
      }
    }
  }
  ct.validate();

  OracleReport oracle;
  for (std::size_t j = 0; j < spec.n_dims; ++j) {
    const DimMix& mix = spec.mixing[j];
    OracleDimInfo info;
    info.dim = j;
    info.sigma = mix.sigma;
    double best_w = 0.0;
    for (const auto& s : mix.sources) {
      if (std::abs(s.weight) > best_w) {
        best_w = std::abs(s.weight);
        info.dominant_factor = s.factor;
      }
    }
    info.noiseless_single_source = mix.sources.size() == 1 && mix.sigma == 0.0 && best_w > 0.0;
    oracle.dims.push_back(info);
  }
  for (std::size_t k = 0; k < n_factors; ++k) {
    double best_w = 0.0;
    std::optional<std::size_t> best_dim;
    for (std::size_t j = 0; j < spec.n_dims; ++j)
      for (const auto& s : spec.mixing[j].sources)
        if (s.factor == k && std::abs(s.weight) > best_w) {
          best_w = std::abs(s.weight);
          best_dim = j;
        }
    if (best_dim) oracle.planted.emplace_back(ft.factor_names[k], *best_dim);
  }
  for (const auto& [name, dim] : oracle.planted) {
    const DimMix& mix = spec.mixing[dim];
    if (mix.sources.size() == 1 && mix.sigma == 0.0)
      oracle.notes.push_back("factor " + name + " is a noiseless single-source encoding in dim " +
                             std::to_string(dim) + "; gap metrics should saturate");
  }

  return SynthResult{std::move(ft), std::move(ct), std::move(oracle)};
}

nlohmann::json OracleReport::to_json() const {
  nlohmann::json jdims = nlohmann::json::array();
  for (const auto& d : dims) {
    nlohmann::json e{{"dim", d.dim}, {"sigma", d.sigma},
                     {"noiseless_single_source", d.noiseless_single_source}};
    if (d.dominant_factor)
      e["dominant_factor"] = *d.dominant_factor;
    else
      e["dominant_factor"] = nullptr;
    jdims.push_back(e);
  }
  nlohmann::json jplanted = nlohmann::json::object();
  for (const auto& [name, dim] : planted) jplanted[name] = dim;
  return nlohmann::json{{"dims", jdims}, {"planted", jplanted}, {"notes", notes}};
}

DatasetManifest write_dataset(const GeneratorSpec& spec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

  SynthResult result = generate(spec);
  save_factor_table(result.factors, (fs::path(out_dir) / "factors.csv").string());
  save_code_tensor(result.codes, (fs::path(out_dir) / "codes.dslc").string());
  {
    std::ofstream out(fs::path(out_dir) / "oracle.json", std::ios::binary);
    if (!out) throw IoError("cannot write oracle.json under " + out_dir);
    out << result.oracle.to_json().dump(2) << '\n';
  }

  DatasetManifest m;
  m.name = spec.name;
  m.factor_grid = spec.grid;
  m.total_utterances = result.factors.n_samples;
  m.factors_path = "factors.csv";
  m.codes_path = "codes.dslc";
  m.seed = spec.seed;
  m.spec_hash = spec.canonical_hash();
  // a built-in tag only applies when the grid and the total match Table 1
  m.version_tag = VersionTag::custom;
  for (VersionTag tag : {VersionTag::small, VersionTag::medium, VersionTag::large}) {
    const auto expect = builtin_grid(tag);
    std::uint64_t total = 1;
    for (const auto& g : expect) total *= static_cast<std::uint64_t>(g.cardinality);
    bool match = spec.grid.size() == expect.size() && m.total_utterances == total;
    for (std::size_t k = 0; match && k < expect.size(); ++k)
      match = spec.grid[k].name == expect[k].name &&
              spec.grid[k].cardinality == expect[k].cardinality;
    if (match) {
      m.version_tag = tag;
      break;
    }
  }
  save_manifest(m, (fs::path(out_dir) / "manifest.json").string());
  return m;
}

}  // namespace disent
