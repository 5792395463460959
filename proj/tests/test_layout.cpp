#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "damp/layout.hpp"
#include "damp/rng.hpp"
#include "oracles.hpp"

using namespace damp;

namespace {

const SimilarityConfig kSim{Metric::cosine_discrete, 0.3};

BitCode code_of(std::initializer_list<std::size_t> bits) { return BitCode::from_indices(16, bits); }

std::multiset<std::string> contents(const CodeSpace& s) {
  std::multiset<std::string> out;
  for (std::size_t idx : s.occupied_cells()) out.insert(to_literal(std::get<BitCode>(*s.point(idx))));
  return out;
}

}  // namespace

TEST_CASE("identical pair codes leave the swap indifferent") {
  CodeSpace s(1, 4, PointKind::bit, 16);
  s.set(0, code_of({1, 2}));
  s.set(1, code_of({1, 2, 3}));
  s.set(3, code_of({1, 2}));
  const PairBatch batch{{{0, 3}}};
  const auto lr = pair_energies_long(s, batch, kSim);
  CHECK(lr[0].phi_c == lr[0].phi_s);
  const auto sr = pair_energies_short(s, batch, 3.0, kSim);
  CHECK(sr[0].phi_c == sr[0].phi_s);
  CHECK(apply_swaps(s, batch, lr, LayoutMode::long_range) == 0);
}

TEST_CASE("three-cell example swaps the similar point next to its partner") {
  CodeSpace s(1, 3, PointKind::bit, 16);
  const auto a = code_of({1, 2, 3});
  const auto b = code_of({8, 9, 10});
  s.set(0, a);
  s.set(1, b);
  s.set(2, a);
  const PairBatch batch{{{1, 2}}};
  const auto e = pair_energies_long(s, batch, SimilarityConfig{Metric::cosine_discrete, 0.65});
  CHECK(e[0].phi_c == doctest::Approx(2.0));
  CHECK(e[0].phi_s == doctest::Approx(1.0));
  CHECK(apply_swaps(s, batch, e, LayoutMode::long_range) == 1);
  CHECK(std::get<BitCode>(*s.point(1)) == a);
}

TEST_CASE("a pair alone in the space has zero energy") {
  CodeSpace s(3, 3, PointKind::bit, 16);
  s.set(0, code_of({1}));
  s.set(8, code_of({1}));
  const PairBatch batch{{{0, 8}}};
  const auto lr = pair_energies_long(s, batch, kSim);
  CHECK(lr[0].phi_c == 0.0);
  CHECK(lr[0].phi_s == 0.0);
  const auto sr = pair_energies_short(s, batch, 3.0, kSim);
  CHECK(sr[0].phi_c == 0.0);
  CHECK(sr[0].phi_s == 0.0);
}

TEST_CASE("short-range sums only see the disc") {
  CodeSpace s(1, 9, PointKind::bit, 16);
  s.set(3, code_of({1, 2}));
  s.set(4, code_of({5, 6}));
  s.set(6, code_of({1, 2}));
  const PairBatch batch{{{3, 4}}};
  // Midpoint 3.5; the neighbour at 6 is 2.5 away.
  const auto inside = pair_energies_short(s, batch, 2.5, kSim);
  CHECK(inside[0].phi_c > 0.0);
  CHECK(inside[0].phi_c != inside[0].phi_s);
  const auto outside = pair_energies_short(s, batch, 2.4, kSim);
  CHECK(outside[0].phi_c == 0.0);
  CHECK(outside[0].phi_s == 0.0);
}

TEST_CASE("ties keep points in place") {
  CodeSpace s(1, 2, PointKind::bit, 16);
  s.set(0, code_of({1}));
  const PairBatch batch{{{0, 1}}};
  const std::vector<PairEnergy> e{{1.0, 1.0}};
  CHECK(apply_swaps(s, batch, e, LayoutMode::long_range) == 0);
  CHECK(apply_swaps(s, batch, e, LayoutMode::short_range) == 0);
  const std::vector<PairEnergy> up{{1.0, 2.0}};
  CHECK(apply_swaps(s, batch, up, LayoutMode::long_range) == 0);
  CHECK(apply_swaps(s, batch, up, LayoutMode::short_range) == 1);
}

TEST_CASE("batched energies equal the brute-force oracle exactly") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const CodeSpace s = oracle::random_space(seed);
    Rng rng(seed);
    PairSelection sel;
    sel.pairs = 16;
    sel.radius = 8.0;
    const auto batch = select_pairs(s, sel, rng);
    for (double lambda : {0.0, 0.5, 0.7}) {
      for (double eta : {std::numeric_limits<double>::infinity(), 12.0}) {
        const SimilarityConfig cfg{Metric::cosine_discrete, lambda, eta};
        const auto lr = pair_energies_long(s, batch, cfg);
        const auto lr4 = pair_energies_long(s, batch, cfg, 4);
        const auto sr = pair_energies_short(s, batch, 2.0, cfg);
        for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
          const auto [a, b] = batch.pairs[i];
          const auto want_l = oracle::long_pair(s, a, b, cfg);
          const auto want_s = oracle::short_pair(s, a, b, 2.0, cfg);
          REQUIRE(lr[i].phi_c == want_l.phi_c);
          REQUIRE(lr[i].phi_s == want_l.phi_s);
          REQUIRE(lr4[i].phi_c == want_l.phi_c);
          REQUIRE(lr4[i].phi_s == want_l.phi_s);
          REQUIRE(sr[i].phi_c == want_s.phi_c);
          REQUIRE(sr[i].phi_s == want_s.phi_s);
          const PairBatch one{{batch.pairs[i]}};
          REQUIRE(pair_energies_long(s, one, cfg)[0].phi_c == lr[i].phi_c);
          REQUIRE(pair_energies_short(s, one, 2.0, cfg)[0].phi_s == sr[i].phi_s);
        }
      }
    }
  }
}

TEST_CASE("jaccard and real spaces use the general path") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CodeSpace s = oracle::random_space(seed);
    Rng rng(seed);
    PairSelection sel;
    sel.pairs = 8;
    sel.radius = 8.0;
    const auto batch = select_pairs(s, sel, rng);
    const SimilarityConfig cfg{Metric::jaccard, 0.2};
    const auto lr = pair_energies_long(s, batch, cfg);
    for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
      const auto want = oracle::long_pair(s, batch.pairs[i].a, batch.pairs[i].b, cfg);
      REQUIRE(lr[i].phi_c == want.phi_c);
      REQUIRE(lr[i].phi_s == want.phi_s);
    }
  }
  CodeSpace r(2, 2, PointKind::real, 3);
  r.set(0, FeatureVector({0.1, 0.9, 0.3}));
  r.set(1, FeatureVector({0.2, 0.8, 0.3}));
  r.set(3, FeatureVector({0.9, 0.1, 0.0}));
  const SimilarityConfig cr{Metric::cosine_real, 0.1};
  const PairBatch batch{{{1, 2}}};
  const auto e = pair_energies_long(r, batch, cr);
  const auto want = oracle::long_pair(r, 1, 2, cr);
  CHECK(e[0].phi_c == want.phi_c);
  CHECK(e[0].phi_s == want.phi_s);
  CHECK_THROWS_AS(pair_energies_long(r, batch, SimilarityConfig{}), InvalidOperands);
}

TEST_CASE("greedy long-range swaps never raise the total energy") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CodeSpace s = oracle::random_space(seed + 100);
    Rng rng(seed);
    const SimilarityConfig cfg{Metric::cosine_discrete, 0.5};
    double total = oracle::total_energy(s, cfg);
    REQUIRE(total == doctest::Approx(total_long_energy(s, cfg)).epsilon(1e-12));
    for (int step = 0; step < 60; ++step) {
      PairSelection sel;
      sel.pairs = 1;
      sel.radius = 8.0;
      const auto batch = select_pairs(s, sel, rng);
      if (batch.pairs.empty()) continue;
      const auto e = pair_energies_long(s, batch, cfg);
      if (apply_swaps(s, batch, e, LayoutMode::long_range) == 0) continue;
      const double next = oracle::total_energy(s, cfg);
      REQUIRE(next <= total + 1e-9 * std::max(1.0, total));
      REQUIRE(next - total == doctest::Approx(e[0].phi_s - e[0].phi_c).epsilon(1e-9));
      total = next;
    }
  }
}

TEST_CASE("pair selection keeps cells unique and at most one side empty") {
  Rng rng(3);
  for (int draw = 0; draw < 1000; ++draw) {
    const CodeSpace s = oracle::random_space(static_cast<std::uint64_t>(draw % 50));
    PairSelection sel;
    sel.pairs = 12;
    sel.radius = 1.0 + rng.uniform() * 4.0;
    const auto batch = select_pairs(s, sel, rng);
    std::set<std::size_t> seen;
    for (const auto& p : batch.pairs) {
      REQUIRE(seen.insert(p.a).second);
      REQUIRE(seen.insert(p.b).second);
      REQUIRE((s.occupied(p.a) || s.occupied(p.b)));
      REQUIRE(oracle::cell_distance(s, p.a, p.b) <= sel.radius + 1e-12);
    }
  }
}

TEST_CASE("wide radius draws second points across the whole grid") {
  CodeSpace s(10, 10, PointKind::bit, 16);
  s.set(0, code_of({1}));
  Rng rng(1);
  std::set<std::size_t> seconds;
  PairSelection sel;
  sel.pairs = 1;
  sel.radius = 100.0;
  for (int i = 0; i < 5000; ++i) {
    const auto b = select_pairs(s, sel, rng);
    if (!b.pairs.empty()) seconds.insert(b.pairs[0].b);
  }
  CHECK(seconds.size() == 99);
}

TEST_CASE("early cutoff filters dissimilar pairs") {
  Rng rng(2);
  CodeSpace s(8, 8, PointKind::bit, 128);
  for (std::size_t i = 0; i < 64; ++i) {
    BitCode c(128);
    while (c.count() < 8) c.set(rng.below(128));
    s.set(i, c);
  }
  PairSelection sel;
  sel.pairs = 32;
  sel.radius = 10.0;
  sel.early_cutoff = 1.0;
  CHECK(select_pairs(s, sel, rng).pairs.size() <= 2);
}

TEST_CASE("point energy examples") {
  CodeSpace s(5, 5, PointKind::bit, 16);
  s.set(12, code_of({1, 2}));
  CHECK(point_energy(s, 12, 2.0, kSim) == 0.0);
  s.set(13, code_of({1, 2}));
  CHECK(point_energy(s, 12, 2.0, kSim) == doctest::Approx(1.0));
  CHECK(point_energy(s, 0, 2.0, kSim) == 0.0);

  CodeSpace packed(5, 5, PointKind::bit, 16);
  CodeSpace scattered(5, 5, PointKind::bit, 16);
  for (std::size_t i : {6u, 7u, 11u, 12u, 13u, 17u}) packed.set(i, code_of({3, 4}));
  for (std::size_t i : {0u, 4u, 12u, 20u, 24u, 2u}) scattered.set(i, code_of({3, 4}));
  CHECK(point_energy(packed, 12, 3.0, kSim) > point_energy(scattered, 12, 3.0, kSim));
}

TEST_CASE("energy map matches direct point energies") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CodeSpace s = oracle::random_space(seed);
    const auto map = energy_map(s, 3.0, kSim);
    double top = 0.0;
    for (std::size_t i = 0; i < s.cell_count(); ++i) top = std::max(top, point_energy(s, i, 3.0, kSim));
    bool has_one = false;
    for (std::size_t i = 0; i < s.cell_count(); ++i) {
      const double v = map.at(i);
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
      if (!s.occupied(i)) REQUIRE(v == 0.0);
      if (top > 0.0) REQUIRE(v == doctest::Approx(point_energy(s, i, 3.0, kSim) / top).epsilon(1e-12));
      has_one = has_one || v == 1.0;
    }
    if (top > 0.0) CHECK(has_one);
    const auto local = energy_map(s, 3.0, kSim, 2.0);
    for (double v : local.values) REQUIRE((v >= 0.0 && v <= 1.0));
  }
  CodeSpace single(3, 3, PointKind::bit, 16);
  single.set(4, code_of({1}));
  const auto m = energy_map(single, 3.0, kSim);
  CHECK(std::all_of(m.values.begin(), m.values.end(), [](double v) { return v == 0.0; }));
  CHECK(m.e_max == 1.0);
}

TEST_CASE("layout quality examples") {
  CodeSpace dense(4, 4, PointKind::bit, 16);
  for (std::size_t i = 0; i < 16; ++i) dense.set(i, code_of({1, 2, 3}));
  CHECK(layout_quality(dense, 3.0, kSim) > 0.6);
  CodeSpace empty(4, 4, PointKind::bit, 16);
  CHECK(layout_quality(empty, 3.0, kSim) == 0.0);

  Rng rng(1);
  CodeSpace noisy(8, 8, PointKind::bit, 256);
  for (std::size_t i = 0; i < 64; ++i) {
    BitCode c(256);
    while (c.count() < 8) c.set(rng.below(256));
    noisy.set(i, c);
  }
  CHECK(layout_quality(noisy, 3.0, SimilarityConfig{Metric::cosine_discrete, 0.8}) < 0.05);

  CodeSpace a(6, 6, PointKind::bit, 16);
  CodeSpace b(6, 6, PointKind::bit, 16);
  const std::vector<std::pair<int, int>> shape{{0, 0}, {0, 1}, {1, 0}, {2, 2}, {1, 2}};
  for (std::size_t k = 0; k < shape.size(); ++k) {
    const auto c = code_of({k % 2 ? 1u : 2u, 3});
    a.set(a.index(static_cast<std::size_t>(shape[k].first), static_cast<std::size_t>(shape[k].second)), c);
    b.set(b.index(static_cast<std::size_t>(shape[k].first + 3), static_cast<std::size_t>(shape[k].second + 2)), c);
  }
  CHECK(layout_quality(a, 3.0, kSim) == doctest::Approx(layout_quality(b, 3.0, kSim)));
}

TEST_CASE("energy-weighted sampling") {
  CodeSpace s(1, 2, PointKind::bit, 16);
  s.set(0, code_of({1}));
  s.set(1, code_of({2}));
  EnergyMap map{1, 2, 3.0, 1.0, {std::exp(-1.0), std::exp(-2.0)}};
  Rng rng(5);
  const auto draws = energy_weighted_first_points(s, map, 100000, rng);
  const auto second = static_cast<double>(std::count(draws.begin(), draws.end(), std::size_t{1}));
  CHECK(second / (100000.0 - second) == doctest::Approx(2.0).epsilon(0.03));

  map.values = {1.0, 0.5};
  const auto skewed = energy_weighted_first_points(s, map, 10000, rng);
  CHECK(std::count(skewed.begin(), skewed.end(), std::size_t{0}) == 0);

  CodeSpace grid(4, 4, PointKind::bit, 16);
  for (std::size_t i = 0; i < 16; ++i) grid.set(i, code_of({1}));
  EnergyMap flat{4, 4, 3.0, 1.0, std::vector<double>(16, 0.3)};
  const auto uni = energy_weighted_first_points(grid, flat, 16000, rng);
  double chi2 = 0.0;
  for (std::size_t c = 0; c < 16; ++c) {
    const double o = static_cast<double>(std::count(uni.begin(), uni.end(), c));
    chi2 += (o - 1000.0) * (o - 1000.0) / 1000.0;
  }
  CHECK(chi2 < 37.7);  // chi-square, 15 degrees of freedom, p = 0.001
}

TEST_CASE("schedule stages ramp lambda up and radius down") {
  LayoutSchedule s;
  CHECK(s.stage_count(50.0) == 4);
  CHECK(s.lambda_at(0) == doctest::Approx(0.65));
  CHECK(s.lambda_at(3) == doctest::Approx(0.8));
  CHECK(s.lambda_at(9) == doctest::Approx(0.8));
  CHECK(s.radius_at(0, 50.0) == 50.0);
  CHECK(s.radius_at(3, 50.0) == 1.0);
  s.radius_factor = 1.5;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("run_layout conserves points and is deterministic") {
  Rng rng(9);
  std::vector<Point> pts;
  for (int k = 0; k < 4; ++k) {
    BitCode proto(64);
    while (proto.count() < 10) proto.set(rng.below(64));
    for (int i = 0; i < 12; ++i) {
      BitCode c = proto;
      const auto on = c.indices();
      c.reset(on[rng.below(on.size())]);
      c.set(rng.below(64));
      pts.emplace_back(c);
    }
  }
  const CodeSpace start = init_space(pts, 0.15, 4);
  LayoutPlan plan = default_plan();
  plan.seed = 2;
  plan.phases[0].pairs_per_step = 8;
  plan.phases[1].pairs_per_step = 8;
  CodeSpace a = start;
  CodeSpace b = start;
  std::vector<std::size_t> trace_a, trace_b;
  const auto ra = run_layout(a, plan, [&](const StepRecord& r) { trace_a.push_back(r.swaps); });
  const auto rb = run_layout(b, plan, [&](const StepRecord& r) { trace_b.push_back(r.swaps); });
  CHECK(trace_a == trace_b);
  CHECK(a == b);
  CHECK(contents(a) == contents(start));
  CHECK(ra.converged);
  CHECK(ra.final_quality > ra.initial_quality);
  CHECK(rb.steps.size() == trace_b.size());
}

TEST_CASE("a sorted space converges with almost no swaps") {
  CodeSpace s(6, 6, PointKind::bit, 16);
  for (std::size_t i = 0; i < 36; ++i) s.set(i, code_of({1, 2, 3}));
  LayoutPlan plan = default_plan();
  plan.seed = 1;
  const auto rep = run_layout(s, plan);
  CHECK(rep.converged);
  CHECK(rep.total_swaps == 0);
  std::size_t stages = 0;
  for (const auto& p : plan.phases) stages += p.stage_count(p.radius_start > 0 ? p.radius_start : 3.0);
  CHECK(rep.stages.size() == stages);
  for (const auto& st : rep.stages) CHECK(st.steps == plan.window);
}

TEST_CASE("step caps flag non-convergence") {
  Rng rng(4);
  CodeSpace s(10, 10, PointKind::bit, 64);
  for (std::size_t i = 0; i < 100; ++i) {
    BitCode c(64);
    while (c.count() < 8) c.set(rng.below(64));
    s.set(i, c);
  }
  LayoutPlan plan = default_plan();
  plan.max_total_steps = 5;
  const auto rep = run_layout(s, plan);
  CHECK_FALSE(rep.converged);
  CHECK(rep.steps.size() == 5);
}

TEST_CASE("spearman helper detects order") {
  CodeSpace line(1, 40, PointKind::bit, 64);
  for (std::size_t i = 0; i < 40; ++i) {
    BitCode c(64);
    for (std::size_t k = 0; k < 8; ++k) c.set(i + k);
    line.set(i, c);
  }
  CHECK(similarity_distance_spearman(line, 2000, Metric::cosine_discrete, 1) > 0.6);
}
