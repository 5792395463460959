#include <doctest.h>

#include <algorithm>
#include <map>
#include <vector>

#include "damp/chroma.hpp"
#include "damp/rng.hpp"

using namespace damp;

namespace {

ColouredCode random_coloured(Rng& rng, std::size_t n, std::size_t bits, ColourRank ranks) {
  ColouredCode c(n);
  for (std::size_t k = 0; k < bits; ++k) c.add(rng.below(n), static_cast<ColourRank>(rng.below(ranks)));
  return c;
}

// Independent reference: minimum rank per bit, then a full (rank, bit) sort and truncation.
ColouredCode oracle_long_wave(std::span<const ColouredCode> inputs, std::size_t t) {
  std::map<std::size_t, ColourRank> best;
  for (const auto& in : inputs) {
    for (const auto& [bit, rank] : in.entries()) {
      auto it = best.find(bit);
      if (it == best.end() || rank < it->second) best[bit] = rank;
    }
  }
  std::vector<std::pair<ColourRank, std::size_t>> order;
  for (const auto& [bit, rank] : best) order.emplace_back(rank, bit);
  std::sort(order.begin(), order.end());
  ColouredCode out(inputs.front().length());
  for (std::size_t i = 0; i < order.size() && i < t; ++i) out.add(order[i].second, order[i].first);
  return out;
}

}  // namespace

TEST_CASE("coloured code keeps the smaller rank on a shared bit") {
  ColouredCode c(16);
  c.add(3, 4);
  c.add(3, 2);
  c.add(3, 7);
  CHECK(c.rank(3) == 2);
  CHECK_THROWS(c.rank(4));
  c.remove(3);
  CHECK(c.count() == 0);
}

TEST_CASE("under-budget merge equals the plain union") {
  ColouredCode a(128), b(128);
  for (std::size_t i : {1u, 5u, 9u, 40u, 77u}) a.add(i, 0);
  for (std::size_t i : {5u, 6u, 90u, 100u, 120u}) b.add(i, 1);
  const std::vector<ColouredCode> in{a, b};
  const auto m = colour_merge(in, {12, Retention::keep_long_wave});
  CHECK(m.count() == 9);
  CHECK(m.code() == bit_or(a.code(), b.code()));
  CHECK(m.rank(5) == 0);
  CHECK(m.rank(6) == 1);
}

TEST_CASE("singleton merge is the identity") {
  Rng rng(2);
  const auto a = random_coloured(rng, 128, 20, 4);
  const std::vector<ColouredCode> in{a};
  CHECK(colour_merge(in, {a.count(), Retention::keep_long_wave}) == a);
  CHECK(colour_merge(in, {128, Retention::keep_short_wave}) == a);
}

TEST_CASE("over-budget long-wave merge keeps the lowest ranks") {
  Rng rng(4);
  std::vector<ColouredCode> in;
  for (int i = 0; i < 30; ++i) in.push_back(random_coloured(rng, 256, 3, 6));
  const auto m = colour_merge(in, {40, Retention::keep_long_wave});
  CHECK(m.count() == 40);
  CHECK(m == oracle_long_wave(in, 40));
  ColouredCode all(256);
  for (const auto& c : in) all.add(c);
  ColourRank max_kept = 0;
  for (const auto& [bit, rank] : m.entries()) max_kept = std::max(max_kept, rank);
  for (const auto& [bit, rank] : all.entries()) {
    if (!m.test(bit)) REQUIRE(rank >= max_kept);
  }
}

TEST_CASE("ties inside one colour drop the highest bit indices first") {
  ColouredCode a(64);
  for (std::size_t i = 0; i < 10; ++i) a.add(i * 5, 2);
  const std::vector<ColouredCode> in{a};
  const auto m = colour_merge(in, {4, Retention::keep_long_wave});
  CHECK(m.code() == BitCode::from_indices(64, {0, 5, 10, 15}));
}

TEST_CASE("short-wave and mid retention") {
  ColouredCode a(32);
  for (ColourRank r = 0; r < 6; ++r) a.add(r, r);
  const std::vector<ColouredCode> in{a};
  CHECK(colour_merge(in, {2, Retention::keep_short_wave}).code() == BitCode::from_indices(32, {4, 5}));
  CHECK(colour_merge(in, {2, Retention::keep_mid}).code() == BitCode::from_indices(32, {2, 3}));
  CHECK(colour_merge(in, {2, Retention::keep_long_wave}).code() == BitCode::from_indices(32, {0, 1}));
}

TEST_CASE("merge rejects bad operands") {
  const std::vector<ColouredCode> none;
  CHECK_THROWS_AS(colour_merge(none, {4, Retention::keep_long_wave}), InvalidOperands);
  const std::vector<ColouredCode> mixed{ColouredCode(8), ColouredCode(9)};
  CHECK_THROWS_AS(colour_merge(mixed, {4, Retention::keep_long_wave}), InvalidOperands);
  const std::vector<ColouredCode> one{ColouredCode(8)};
  CHECK_THROWS_AS(colour_merge(one, {9, Retention::keep_long_wave}), InvalidOperands);
}

TEST_CASE("merge is order-insensitive and nested in the budget") {
  Rng rng(6);
  for (int t = 0; t < 300; ++t) {
    std::vector<ColouredCode> in;
    const std::size_t k = 1 + rng.below(8);
    for (std::size_t i = 0; i < k; ++i) in.push_back(random_coloured(rng, 128, 1 + rng.below(12), 5));
    for (Retention r : {Retention::keep_long_wave, Retention::keep_short_wave, Retention::keep_mid}) {
      const std::size_t budget = rng.below(40);
      const auto m = colour_merge(in, {budget, r});
      auto shuffled = in;
      rng.shuffle(shuffled.begin(), shuffled.end());
      REQUIRE(colour_merge(shuffled, {budget, r}) == m);
      REQUIRE(m.count() <= budget);
      if (r == Retention::keep_long_wave) {
        const auto wider = colour_merge(in, {budget + 5, r});
        for (std::size_t bit : m.code().indices()) REQUIRE(wider.test(bit));
      }
    }
  }
}

TEST_CASE("detector outputs merge with lambda ranks") {
  std::vector<DetectorOutput> outs;
  outs.push_back({BitCode::from_indices(256, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), 0.85});
  outs.push_back({BitCode::from_indices(256, {11, 12, 13, 14, 15, 16, 17, 18, 19, 20}), 0.5});
  const auto m = merge_detector_outputs(outs, 50);
  CHECK(m.count() == 20);
  CHECK(m.code() == bit_or(outs[0].bits, outs[1].bits));
  CHECK(m.rank(1) == 1);
  CHECK(m.rank(11) == 0);

  std::vector<DetectorOutput> many;
  for (std::size_t i = 0; i < 80; ++i) many.push_back({BitCode::from_indices(256, {i * 3}), 0.5 + 0.1 * (i % 4)});
  CHECK(merge_detector_outputs(many, 30).count() == 30);
}

TEST_CASE("coloured literal round-trip") {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const auto c = random_coloured(rng, 128, rng.below(30), 7);
    REQUIRE(parse_coloured_literal(to_literal(c)) == c);
  }
  const auto bare = parse_coloured_literal("8:0f");
  CHECK(bare.count() == 4);
  CHECK(bare.rank(0) == 0);
}
