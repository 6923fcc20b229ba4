#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "disent/irs.hpp"
#include "disent/oracle.hpp"
#include "disent/synth.hpp"
#include "test_helpers.hpp"

using namespace disent;
using disent::testing::make_codes;
using disent::testing::make_table;
using disent::testing::pair_up;

namespace {

PooledCodes pooled_of(const PairedDataset& data) {
  return pool_time_axis(*data.codes, {Pooling::mean});
}

constexpr std::size_t kDim0[1] = {0};

}  // namespace

TEST_CASE("nuisance-invariant codes score exactly 1") {
  // codes depend only on the target factor A
  std::vector<std::int32_t> a, b;
  std::vector<float> code;
  for (int i = 0; i < 64; ++i) {
    a.push_back(i % 2);
    b.push_back((i / 2) % 4);
    code.push_back(a.back() == 0 ? -1.f : 1.f);
  }
  const auto data = pair_up(make_table({a, b}, {2, 4}), make_codes({code}));
  const auto r = irs_score(data, pooled_of(data), 0, kDim0, 2);
  CHECK(r.raw == 0.0);
  CHECK(r.score == 1.0);
}

TEST_CASE("pure-nuisance codes score exactly 0") {
  // balanced binary nuisance, codes a one-hot of the nuisance, target carries nothing
  std::vector<std::int32_t> target, nuisance;
  std::vector<float> c0, c1;
  for (int i = 0; i < 64; ++i) {
    target.push_back(i % 2);
    nuisance.push_back((i / 2) % 2);
    c0.push_back(nuisance.back() == 0 ? 1.f : 0.f);
    c1.push_back(nuisance.back() == 1 ? 1.f : 0.f);
  }
  const auto data = pair_up(make_table({target, nuisance}, {2, 2}), make_codes({c0, c1}));
  const std::size_t both[2] = {0, 1};
  const auto r = irs_score(data, pooled_of(data), 0, both, 2);
  CHECK(r.raw == doctest::Approx(r.scale).epsilon(1e-15));
  CHECK(r.score == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("build_plan enumerates the style-target grid") {
  GeneratorSpec spec;
  spec.name = "plan";
  spec.grid = {{"speaker_id", 25}, {"style", 4}};
  spec.n_dims = 2;
  spec.seq_len = 1;
  spec.mixing.assign(2, DimMix{{}, 1.0, Nonlinearity::none});
  spec.seed = 5;
  const SynthResult synth = generate(spec);  // one grid-complete pass: 100 rows
  const auto data = pair_up(synth.factors, synth.codes);

  const InterventionPlan plan = build_plan(data, 1, 1);
  CHECK(plan.groups.size() == 4);
  for (const auto& g : plan.groups) {
    CHECK(g.total_cells == 25);
    CHECK(g.cells.size() == 25);
    CHECK(g.all_samples.size() == 25);
  }

  SUBCASE("grid-complete cells fall below min_group_size 2") {
    CHECK_THROWS_WITH_AS(build_plan(data, 1, 2), doctest::Contains("no nuisance variation"),
                         ValidationError);
  }
}

TEST_CASE("single-factor datasets cannot be scored") {
  const auto data = pair_up(make_table({{0, 1, 0, 1}}, {2}), make_codes({{0, 1, 2, 3}}));
  CHECK_THROWS_WITH_AS(build_plan(data, 0, 1), doctest::Contains("nuisance"), ValidationError);
}

TEST_CASE("a target value with a single nuisance configuration contributes zero deviation") {
  const std::vector<std::int32_t> a{0, 0, 1, 1};
  const std::vector<std::int32_t> b{0, 1, 0, 0};
  const auto data = pair_up(make_table({a, b}, {2, 2}), make_codes({{0.f, 4.f, 2.f, 2.f}}));
  const InterventionPlan plan = build_plan(data, 0, 1);
  const auto r = irs_score(pooled_of(data), plan, kDim0);
  // value 0 deviates (cells 0 and 4 around ref 2), value 1 has one cell == its reference
  CHECK(r.raw == doctest::Approx(0.5 * 2.0).epsilon(1e-12));
  CHECK(r.score == doctest::Approx(1.0 - 1.0 / 2.0).epsilon(1e-12));
}

TEST_CASE("score decreases monotonically with the nuisance mixing weight") {
  std::vector<double> scores;
  for (const double alpha : {0.0, 0.5, 1.0}) {
    GeneratorSpec spec;
    spec.name = "mix";
    spec.grid = {{"a", 2}, {"b", 2}};
    spec.n_dims = 1;
    spec.seq_len = 1;
    spec.mixing = {DimMix{{{0, 1.0}, {1, alpha}}, 0.5, Nonlinearity::none}};
    spec.n_samples = 2000;
    spec.seed = 17;
    const SynthResult synth = generate(spec);
    const auto data = pair_up(synth.factors, synth.codes);
    const auto pooled = pooled_of(data);
    const auto r = irs_score(data, pooled, 0, kDim0, 2);
    // the brute-force oracle must agree on the same grouping
    const double brute = oracle::brute_force_irs(data, pooled, 0, kDim0, 2);
    CHECK(r.score == doctest::Approx(brute).epsilon(1e-10));
    scores.push_back(r.score);
  }
  CHECK(scores[0] > 0.95);  // noise-only deviations
  CHECK(scores[0] > scores[1] + 0.05);
  CHECK(scores[1] > scores[2] + 0.05);
}

TEST_CASE("translation invariance: shifting all codes leaves the score unchanged") {
  std::mt19937_64 rng(31);
  std::vector<std::int32_t> a(120), b(120);
  std::vector<float> c0(120), c1(120);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = static_cast<std::int32_t>(rng() % 3);
    b[i] = static_cast<std::int32_t>(rng() % 4);
    c0[i] = static_cast<float>(rng() % 1000) / 100.f + a[i];
    c1[i] = static_cast<float>(rng() % 1000) / 200.f - b[i];
  }
  const auto data = pair_up(make_table({a, b}, {3, 4}), make_codes({c0, c1}));
  PooledCodes pooled = pooled_of(data);
  const std::size_t both[2] = {0, 1};
  const auto base = irs_score(data, pooled, 0, both, 2);

  PooledCodes shifted = pooled;
  for (std::size_t i = 0; i < shifted.values.size(); i += 2) shifted.values[i] += 37.5;
  for (std::size_t i = 1; i < shifted.values.size(); i += 2) shifted.values[i] -= 11.25;
  const auto moved = irs_score(data, shifted, 0, both, 2);
  CHECK(moved.score == doctest::Approx(base.score).epsilon(1e-9));
  CHECK(moved.raw == doctest::Approx(base.raw).epsilon(1e-9));
}

TEST_CASE("permutation invariance: shuffling rows leaves the score unchanged") {
  std::mt19937_64 rng(41);
  std::vector<std::int32_t> a(100), b(100);
  std::vector<float> c0(100);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = static_cast<std::int32_t>(rng() % 2);
    b[i] = static_cast<std::int32_t>(rng() % 3);
    c0[i] = static_cast<float>(rng() % 512) / 64.f;
  }
  const auto data = pair_up(make_table({a, b}, {2, 3}), make_codes({c0}));
  const auto base = irs_score(data, pooled_of(data), 0, kDim0, 2);

  std::vector<std::size_t> perm(100);
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::int32_t> ap(100), bp(100);
  std::vector<float> cp(100);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    ap[i] = a[perm[i]];
    bp[i] = b[perm[i]];
    cp[i] = c0[perm[i]];
  }
  const auto moved_data = pair_up(make_table({ap, bp}, {2, 3}), make_codes({cp}));
  const auto moved = irs_score(moved_data, pooled_of(moved_data), 0, kDim0, 2);
  CHECK(moved.score == doctest::Approx(base.score).epsilon(1e-10));
}

TEST_CASE("randomized differential test against the brute-force IRS oracle") {
  std::mt19937_64 rng(777);
  int scored = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng() % 2;
    const std::size_t n = 20 + rng() % 181;
    const std::size_t d = 1 + rng() % 3;
    std::vector<std::vector<std::int32_t>> cols(m);
    std::vector<std::int32_t> cards(m);
    for (std::size_t k = 0; k < m; ++k) {
      cards[k] = 2 + static_cast<std::int32_t>(rng() % 3);
      cols[k].resize(n);
      for (auto& v : cols[k]) v = static_cast<std::int32_t>(rng() % cards[k]);
    }
    std::vector<std::vector<float>> dims(d);
    for (auto& col : dims) {
      col.resize(n);
      for (auto& v : col) v = static_cast<float>(rng() % 2048) / 128.f - 8.f;
    }
    const auto data = pair_up(make_table(cols, cards), make_codes(dims));
    const auto pooled = pooled_of(data);
    const std::size_t target = rng() % m;
    const int min_group = 1 + static_cast<int>(rng() % 2);

    std::vector<std::size_t> subset;
    for (std::size_t j = 0; j < d; ++j)
      if (rng() % 2 == 0) subset.push_back(j);
    if (subset.empty()) subset.push_back(rng() % d);

    bool fast_threw = false, slow_threw = false;
    double fast = 0.0, slow = 0.0;
    try {
      fast = irs_score(data, pooled, target, subset, min_group).score;
    } catch (const ValidationError&) {
      fast_threw = true;
    }
    try {
      slow = oracle::brute_force_irs(data, pooled, target, subset, min_group);
    } catch (const ValidationError&) {
      slow_threw = true;
    }
    REQUIRE(fast_threw == slow_threw);
    if (!fast_threw) {
      CHECK(std::abs(fast - slow) < 1e-10);
      CHECK(fast >= 0.0);
      CHECK(fast <= 1.0);
      ++scored;
    }
  }
  CHECK(scored > 150);  // the generator must actually exercise the scorer
}
