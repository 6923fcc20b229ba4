#include "disent/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace disent {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_nonneg_int(const std::string& s, std::int64_t& value) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc{} && ptr == last && value >= 0;
}

bool parse_double(const std::string& s, double& value) {
  if (s.empty()) return false;
  char* end = nullptr;
  value = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

}  // namespace

std::optional<std::size_t> FactorTable::factor_index(const std::string& name) const {
  for (std::size_t k = 0; k < factor_names.size(); ++k)
    if (factor_names[k] == name) return k;
  return std::nullopt;
}

void FactorTable::validate() const {
  if (factor_names.empty()) throw ValidationError("factor table has no factor columns");
  if (columns.size() != factor_names.size() || cardinalities.size() != factor_names.size() ||
      label_maps.size() != factor_names.size() || continuous_sources.size() != factor_names.size())
    throw ValidationError("factor table field sizes disagree");
  for (std::size_t k = 0; k < factor_names.size(); ++k) {
    if (factor_names[k].empty()) throw ValidationError("empty factor name");
    for (std::size_t j = k + 1; j < factor_names.size(); ++j)
      if (factor_names[k] == factor_names[j])
        throw ValidationError("duplicate factor name: " + factor_names[k]);
    if (cardinalities[k] < 1)
      throw ValidationError("factor " + factor_names[k] + " has cardinality < 1");
    if (columns[k].size() != n_samples)
      throw ValidationError("factor " + factor_names[k] + " column length mismatch");
    for (std::int32_t v : columns[k])
      if (v < 0 || v >= cardinalities[k])
        throw ValidationError("factor " + factor_names[k] + " index out of range [0, " +
                              std::to_string(cardinalities[k]) + ")");
    if (!continuous_sources[k].empty() && continuous_sources[k].size() != n_samples)
      throw ValidationError("continuous source length mismatch for " + factor_names[k]);
  }
}

void CodeTensor::validate() const {
  if (n_samples == 0 || n_dims == 0 || seq_len == 0)
    throw ValidationError("code tensor has a zero-sized axis");
  if (values.size() != n_samples * n_dims * seq_len)
    throw ValidationError("code tensor value count does not match declared shape");
  for (float v : values)
    if (!std::isfinite(v)) throw ValidationError("code tensor contains a non-finite value");
}

const ColumnSpec* IngestSchema::find(const std::string& name) const {
  for (const auto& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

std::string to_string(VersionTag tag) {
  switch (tag) {
    case VersionTag::small: return "small";
    case VersionTag::medium: return "medium";
    case VersionTag::large: return "large";
    case VersionTag::custom: return "custom";
  }
  return "custom";
}

VersionTag version_tag_from_string(const std::string& s) {
  if (s == "small") return VersionTag::small;
  if (s == "medium") return VersionTag::medium;
  if (s == "large") return VersionTag::large;
  if (s == "custom") return VersionTag::custom;
  throw ValidationError("unknown version tag: " + s);
}

std::vector<GridFactor> builtin_grid(VersionTag tag) {
  switch (tag) {
    case VersionTag::small:
      return {{"speaker_id", 50}, {"content", 500}, {"style", 1}};
    case VersionTag::medium:
      return {{"speaker_id", 25}, {"content", 500}, {"style", 4}};
    case VersionTag::large:
      return {{"speaker_id", 249}, {"content", 110}, {"style", 4}};
    case VersionTag::custom:
      throw ValidationError("custom version has no built-in grid");
  }
  throw ValidationError("unknown version tag");
}

void DatasetManifest::validate() const {
  if (name.empty()) throw ValidationError("manifest name is empty");
  if (factor_grid.empty()) throw ValidationError("manifest factor grid is empty");
  for (const auto& g : factor_grid)
    if (g.cardinality < 1) throw ValidationError("manifest grid cardinality < 1");
  if (version_tag != VersionTag::custom) {
    const auto expect = builtin_grid(version_tag);
    bool match = factor_grid.size() >= expect.size();
    for (std::size_t k = 0; match && k < expect.size(); ++k)
      match = factor_grid[k].name == expect[k].name &&
              factor_grid[k].cardinality == expect[k].cardinality;
    if (!match)
      throw ValidationError("manifest grid does not match the built-in '" +
                            to_string(version_tag) + "' version");
    std::uint64_t total = 1;
    for (const auto& g : expect) total *= static_cast<std::uint64_t>(g.cardinality);
    if (total_utterances != total)
      throw ValidationError("manifest total_utterances " + std::to_string(total_utterances) +
                            " does not equal the grid product " + std::to_string(total));
  }
}

FactorTable load_factor_table(const std::string& path, const IngestSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open factor CSV: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("factor CSV is empty: " + path);
  const auto header = split_csv_line(line);
  const std::size_t m = header.size();
  if (m == 0 || (m == 1 && header[0].empty()))
    throw ValidationError("factor CSV has no header columns: " + path);

  std::vector<std::vector<std::string>> raw(m);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != m)
      throw ValidationError("ragged row " + std::to_string(row) + " in " + path + ": expected " +
                            std::to_string(m) + " cells, got " + std::to_string(cells.size()));
    for (std::size_t k = 0; k < m; ++k) raw[k].push_back(std::move(cells[k]));
  }
  const std::size_t n = raw[0].size();

  FactorTable ft;
  ft.n_samples = n;
  ft.factor_names = header;
  ft.columns.resize(m);
  ft.cardinalities.resize(m);
  ft.label_maps.resize(m);
  ft.continuous_sources.resize(m);

  for (std::size_t k = 0; k < m; ++k) {
    const ColumnSpec* spec = schema.find(header[k]);
    if (spec && spec->kind == ColumnKind::continuous) {
      auto& src = ft.continuous_sources[k];
      src.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        double v;
        if (!parse_double(raw[k][i], v) || !std::isfinite(v))
          throw ValidationError("non-finite or unparsable continuous value '" + raw[k][i] +
                                "' in column " + header[k]);
        src.push_back(v);
      }
      // placeholder until discretize_continuous_factor installs real bins
      ft.columns[k].assign(n, 0);
      ft.cardinalities[k] = 1;
      continue;
    }

    bool all_int = n > 0;
    std::int64_t vmax = -1;
    for (std::size_t i = 0; i < n && all_int; ++i) {
      std::int64_t v;
      all_int = parse_nonneg_int(raw[k][i], v);
      if (all_int) vmax = std::max(vmax, v);
    }

    auto& col = ft.columns[k];
    col.reserve(n);
    std::int32_t observed_card = 0;
    if (all_int) {
      // integer-coded: values are used verbatim as category indices
      for (std::size_t i = 0; i < n; ++i) {
        std::int64_t v;
        parse_nonneg_int(raw[k][i], v);
        col.push_back(static_cast<std::int32_t>(v));
      }
      observed_card = static_cast<std::int32_t>(vmax + 1);
    } else {
      // strings mapped to dense 0-based indices in first-occurrence order
      std::unordered_map<std::string, std::int32_t> index;
      auto& labels = ft.label_maps[k];
      for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = index.emplace(raw[k][i], static_cast<std::int32_t>(labels.size()));
        if (inserted) labels.push_back(raw[k][i]);
        col.push_back(it->second);
      }
      observed_card = static_cast<std::int32_t>(labels.size());
    }
    if (n == 0) observed_card = 1;

    std::int32_t card = observed_card;
    if (spec && spec->cardinality) {
      if (*spec->cardinality < observed_card)
        throw ValidationError("declared cardinality " + std::to_string(*spec->cardinality) +
                              " for column " + header[k] + " is smaller than observed max index " +
                              std::to_string(observed_card - 1));
      card = *spec->cardinality;
    }
    ft.cardinalities[k] = card;
  }

  if (n > 0) ft.validate();
  return ft;
}

void save_factor_table(const FactorTable& ft, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write factor CSV: " + path);
  for (std::size_t k = 0; k < ft.n_factors(); ++k) {
    if (k) out << ',';
    out << ft.factor_names[k];
  }
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < ft.n_samples; ++i) {
    for (std::size_t k = 0; k < ft.n_factors(); ++k) {
      if (k) out << ',';
      if (ft.is_continuous(k)) {
        std::snprintf(buf, sizeof(buf), "%.17g", ft.continuous_sources[k][i]);
        out << buf;
      } else if (!ft.label_maps[k].empty()) {
        out << ft.label_maps[k][ft.columns[k][i]];
      } else {
        out << ft.columns[k][i];
      }
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing factor CSV: " + path);
}

namespace {

constexpr char kMagic[4] = {'D', 'S', 'L', 'C'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_le(std::ofstream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

CodeTensor load_code_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open code CSV: " + path);
  std::vector<float> values;
  std::size_t cols = 0;
  bool first = true;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    double probe;
    if (first) {
      cols = cells.size();
      first = false;
      if (!parse_double(cells[0], probe)) continue;  // header row, skip
    }
    if (cells.size() != cols) throw ValidationError("ragged row in code CSV " + path);
    for (const auto& c : cells) {
      double v;
      if (!parse_double(c, v))
        throw ValidationError("unparsable code value '" + c + "' in " + path);
      if (!std::isfinite(v)) throw ValidationError("non-finite code value in " + path);
      values.push_back(static_cast<float>(v));
    }
  }
  if (values.empty()) throw ValidationError("code CSV has no data rows: " + path);
  CodeTensor ct;
  ct.n_dims = cols;
  ct.seq_len = 1;
  ct.n_samples = values.size() / cols;
  ct.values = std::move(values);
  ct.validate();
  return ct;
}

}  // namespace

CodeTensor load_code_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open code tensor: " + path);
  char magic[4] = {};
  in.read(magic, 4);
  const bool has_dslc_ext = path.size() >= 5 && path.substr(path.size() - 5) == ".dslc";
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    if (has_dslc_ext)
      throw ValidationError("bad magic in " + path + ": expected 'DSLC'");
    in.close();
    return load_code_csv(path);  // CSV fallback, T=1
  }

  const auto version = read_le<std::uint32_t>(in);
  if (!in || version != kFormatVersion)
    throw ValidationError("unsupported code tensor version " + std::to_string(version) + " in " + path);
  const auto n = read_le<std::uint64_t>(in);
  const auto d = read_le<std::uint32_t>(in);
  const auto t = read_le<std::uint32_t>(in);
  if (!in) throw ValidationError("truncated header in " + path);
  if (n == 0 || d == 0 || t == 0) throw ValidationError("zero-sized axis in " + path);

  const std::uint64_t count = n * static_cast<std::uint64_t>(d) * t;
  CodeTensor ct;
  ct.n_samples = static_cast<std::size_t>(n);
  ct.n_dims = d;
  ct.seq_len = t;
  ct.values.resize(static_cast<std::size_t>(count));
  in.read(reinterpret_cast<char*>(ct.values.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<std::uint64_t>(in.gcount()) != count * sizeof(float))
    throw ValidationError("truncated payload in " + path + ": expected " +
                          std::to_string(count * sizeof(float)) + " data bytes");
  char extra;
  if (in.read(&extra, 1))
    throw ValidationError("trailing bytes after payload in " + path);
  ct.validate();
  return ct;
}

void save_code_tensor(const CodeTensor& ct, const std::string& path) {
  ct.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write code tensor: " + path);
  out.write(kMagic, 4);
  write_le<std::uint32_t>(out, kFormatVersion);
  write_le<std::uint64_t>(out, ct.n_samples);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ct.n_dims));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ct.seq_len));
  out.write(reinterpret_cast<const char*>(ct.values.data()),
            static_cast<std::streamsize>(ct.values.size() * sizeof(float)));
  if (!out) throw IoError("failed writing code tensor: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed manifest JSON in " + path + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    m.version_tag = version_tag_from_string(j.at("version_tag").get<std::string>());
    for (const auto& g : j.at("factor_grid"))
      m.factor_grid.push_back({g.at("name").get<std::string>(), g.at("cardinality").get<std::int32_t>()});
    m.total_utterances = j.at("total_utterances").get<std::uint64_t>();
    m.factors_path = j.at("factors_path").get<std::string>();
    m.codes_path = j.at("codes_path").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.spec_hash = j.at("spec_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest " + path + " is missing fields: " + e.what());
  }
  m.validate();
  return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  m.validate();
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& g : m.factor_grid) grid.push_back({{"name", g.name}, {"cardinality", g.cardinality}});
  nlohmann::json j{
      {"name", m.name},
      {"version_tag", to_string(m.version_tag)},
      {"factor_grid", grid},
      {"total_utterances", m.total_utterances},
      {"factors_path", m.factors_path},
      {"codes_path", m.codes_path},
      {"seed", m.seed},
      {"spec_hash", m.spec_hash},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest: " + path);
}

PairedDataset validate_pairing(std::shared_ptr<const FactorTable> ft,
                               std::shared_ptr<const CodeTensor> ct) {
  if (!ft || !ct) throw ValidationError("pairing requires both a factor table and a code tensor");
  if (ft->n_samples == 0 && ct->n_samples == 0) throw ValidationError("empty dataset");
  if (ft->n_samples != ct->n_samples)
    throw ValidationError("sample-count mismatch: factor table has " +
                          std::to_string(ft->n_samples) + " samples, code tensor has " +
                          std::to_string(ct->n_samples));
  ft->validate();
  ct->validate();
  return PairedDataset{std::move(ft), std::move(ct)};
}

}  // namespace disent
