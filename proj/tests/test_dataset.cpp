#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "disent/dataset.hpp"
#include "test_helpers.hpp"

using namespace disent;
using disent::testing::TempDir;

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("string categories map to dense indices in first-occurrence order") {
  TempDir dir("csv_strings");
  write_file(dir.file("f.csv"), "speaker_gender\nmale\nfemale\nmale\n");
  const FactorTable ft = load_factor_table(dir.file("f.csv"));
  CHECK(ft.n_samples == 3);
  CHECK(ft.columns[0] == std::vector<std::int32_t>{0, 1, 0});
  CHECK(ft.cardinalities[0] == 2);
  CHECK(ft.label_maps[0] == std::vector<std::string>{"male", "female"});
}

TEST_CASE("25 distinct speaker values give cardinality 25") {
  TempDir dir("csv_speakers");
  std::string csv = "speaker_id\n";
  for (int rep = 0; rep < 3; ++rep)
    for (int s = 0; s < 25; ++s) csv += "spk" + std::to_string(s) + "\n";
  write_file(dir.file("f.csv"), csv);
  const FactorTable ft = load_factor_table(dir.file("f.csv"));
  CHECK(ft.cardinalities[0] == 25);
}

TEST_CASE("integer-coded columns keep their values as indices") {
  TempDir dir("csv_ints");
  write_file(dir.file("f.csv"), "style\n2\n0\n1\n2\n");
  const FactorTable ft = load_factor_table(dir.file("f.csv"));
  CHECK(ft.columns[0] == std::vector<std::int32_t>{2, 0, 1, 2});
  CHECK(ft.cardinalities[0] == 3);
  CHECK(ft.label_maps[0].empty());
}

TEST_CASE("continuous columns are stored raw, not discretized") {
  TempDir dir("csv_cont");
  write_file(dir.file("f.csv"), "rms_amplitude,style\n0.1,a\n0.9,b\n0.5,a\n");
  IngestSchema schema;
  schema.columns.push_back({"rms_amplitude", ColumnKind::continuous, std::nullopt});
  const FactorTable ft = load_factor_table(dir.file("f.csv"), schema);
  CHECK(ft.is_continuous(0));
  CHECK(ft.continuous_sources[0] == std::vector<double>{0.1, 0.9, 0.5});
  CHECK(ft.cardinalities[0] == 1);  // deferred to discretization
  CHECK_FALSE(ft.is_continuous(1));
}

TEST_CASE("factor CSV error paths") {
  TempDir dir("csv_err");
  CHECK_THROWS_AS(load_factor_table(dir.file("missing.csv")), IoError);

  write_file(dir.file("ragged.csv"), "a,b\n1,2\n1\n");
  CHECK_THROWS_AS(load_factor_table(dir.file("ragged.csv")), ValidationError);

  write_file(dir.file("inf.csv"), "x\ninf\n");
  IngestSchema schema;
  schema.columns.push_back({"x", ColumnKind::continuous, std::nullopt});
  CHECK_THROWS_AS(load_factor_table(dir.file("inf.csv"), schema), ValidationError);

  write_file(dir.file("card.csv"), "y\n0\n5\n");
  IngestSchema small;
  small.columns.push_back({"y", ColumnKind::categorical, 4});
  CHECK_THROWS_AS(load_factor_table(dir.file("card.csv"), small), ValidationError);

  IngestSchema wide;
  wide.columns.push_back({"y", ColumnKind::categorical, 9});
  CHECK(load_factor_table(dir.file("card.csv"), wide).cardinalities[0] == 9);
}

TEST_CASE("binary code tensor round-trips bit-exactly and validates header") {
  TempDir dir("dslc");
  CodeTensor ct;
  ct.n_samples = 2;
  ct.n_dims = 16;
  ct.seq_len = 256;
  ct.values.resize(2 * 16 * 256);
  std::mt19937_64 rng(7);
  for (auto& v : ct.values)
    v = static_cast<float>(static_cast<std::int64_t>(rng() % 2000) - 1000) / 997.0f;

  const std::string path = dir.file("codes.dslc");
  save_code_tensor(ct, path);
  const CodeTensor back = load_code_tensor(path);
  CHECK(back.n_samples == 2);
  CHECK(back.n_dims == 16);
  CHECK(back.seq_len == 256);
  CHECK(back.values == ct.values);

  SUBCASE("truncated payload is rejected") {
    std::string bytes = read_file(path);
    bytes.resize(bytes.size() - 5);
    write_file(dir.file("short.dslc"), bytes);
    CHECK_THROWS_WITH_AS(load_code_tensor(dir.file("short.dslc")),
                         doctest::Contains("truncated payload"), ValidationError);
  }
  SUBCASE("bad magic is rejected for .dslc files") {
    std::string bytes = read_file(path);
    bytes[0] = 'X';
    write_file(dir.file("bad.dslc"), bytes);
    CHECK_THROWS_WITH_AS(load_code_tensor(dir.file("bad.dslc")), doctest::Contains("bad magic"),
                         ValidationError);
  }
  SUBCASE("trailing bytes are rejected") {
    std::string bytes = read_file(path) + "zz";
    write_file(dir.file("long.dslc"), bytes);
    CHECK_THROWS_AS(load_code_tensor(dir.file("long.dslc")), ValidationError);
  }
}

TEST_CASE("CSV fallback yields T=1 tensors") {
  TempDir dir("code_csv");
  write_file(dir.file("codes.csv"), "1.0,2.0,3.0\n4.0,5.0,6.0\n-1.5,0.25,2.5\n0,0,1\n");
  const CodeTensor ct = load_code_tensor(dir.file("codes.csv"));
  CHECK(ct.n_samples == 4);
  CHECK(ct.n_dims == 3);
  CHECK(ct.seq_len == 1);
  CHECK(ct.at(2, 1, 0) == doctest::Approx(0.25));
}

TEST_CASE("ingestion is deterministic: same file loads identically twice") {
  TempDir dir("deterministic");
  write_file(dir.file("f.csv"), "a,b\nx,0.5\ny,0.25\nx,0.125\n");
  IngestSchema schema;
  schema.columns.push_back({"b", ColumnKind::continuous, std::nullopt});
  const FactorTable once = load_factor_table(dir.file("f.csv"), schema);
  const FactorTable twice = load_factor_table(dir.file("f.csv"), schema);
  CHECK(once.columns == twice.columns);
  CHECK(once.label_maps == twice.label_maps);
  CHECK(once.continuous_sources == twice.continuous_sources);
}

TEST_CASE("factor table save/load round-trip reproduces file bytes and values") {
  TempDir dir("roundtrip");
  write_file(dir.file("f.csv"), "speaker,loudness\nspk_a,0.125\nspk_b,0.5\nspk_a,0.25\n");
  IngestSchema schema;
  schema.columns.push_back({"loudness", ColumnKind::continuous, std::nullopt});
  const FactorTable ft = load_factor_table(dir.file("f.csv"), schema);
  save_factor_table(ft, dir.file("g.csv"));
  CHECK(read_file(dir.file("g.csv")) == read_file(dir.file("f.csv")));
  const FactorTable back = load_factor_table(dir.file("g.csv"), schema);
  CHECK(back.columns == ft.columns);
  CHECK(back.continuous_sources == ft.continuous_sources);
  CHECK(back.cardinalities == ft.cardinalities);
}

TEST_CASE("pairing accepts matched counts and reports mismatches with both counts") {
  FactorTable ft = testing::make_table({{0, 1, 0, 1}}, {2});
  CodeTensor ct = testing::make_codes({{0.f, 1.f, 2.f, 3.f}});
  CHECK_NOTHROW(testing::pair_up(ft, ct));

  CodeTensor shorter = testing::make_codes({{0.f, 1.f, 2.f}});
  CHECK_THROWS_WITH_AS(testing::pair_up(ft, shorter), doctest::Contains("4"), ValidationError);
  try {
    testing::pair_up(ft, shorter);
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("empty datasets are rejected at pairing") {
  auto ft = std::make_shared<FactorTable>();
  ft->factor_names = {"f0"};
  ft->columns = {{}};
  ft->cardinalities = {1};
  ft->label_maps = {{}};
  ft->continuous_sources = {{}};
  auto ct = std::make_shared<CodeTensor>();
  CHECK_THROWS_WITH_AS(validate_pairing(ft, ct), doctest::Contains("empty dataset"),
                       ValidationError);
}

TEST_CASE("built-in manifest grids multiply out to the published totals") {
  for (auto [tag, total] : {std::pair{VersionTag::small, 25000ull},
                            std::pair{VersionTag::medium, 50000ull},
                            std::pair{VersionTag::large, 109560ull}}) {
    const auto grid = builtin_grid(tag);
    std::uint64_t product = 1;
    for (const auto& g : grid) product *= static_cast<std::uint64_t>(g.cardinality);
    CHECK(product == total);

    DatasetManifest m;
    m.name = "x";
    m.version_tag = tag;
    m.factor_grid = grid;
    m.total_utterances = total;
    m.factors_path = "factors.csv";
    m.codes_path = "codes.dslc";
    CHECK_NOTHROW(m.validate());
    m.total_utterances = total + 1;
    CHECK_THROWS_AS(m.validate(), ValidationError);
  }
}

TEST_CASE("manifest JSON round-trip") {
  TempDir dir("manifest");
  DatasetManifest m;
  m.name = "demo";
  m.version_tag = VersionTag::medium;
  m.factor_grid = builtin_grid(VersionTag::medium);
  m.total_utterances = 50000;
  m.factors_path = "factors.csv";
  m.codes_path = "codes.dslc";
  m.seed = 42;
  m.spec_hash = "00ff00ff00ff00ff";
  save_manifest(m, dir.file("manifest.json"));
  const DatasetManifest back = load_manifest(dir.file("manifest.json"));
  CHECK(back.name == m.name);
  CHECK(back.version_tag == m.version_tag);
  CHECK(back.total_utterances == 50000);
  CHECK(back.seed == 42);
  CHECK(back.spec_hash == m.spec_hash);
}
