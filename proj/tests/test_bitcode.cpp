#include <doctest.h>

#include <cmath>
#include <vector>

#include "damp/bitcode.hpp"
#include "damp/rng.hpp"

using namespace damp;

namespace {

BitCode random_code(Rng& rng, std::size_t n, double density) {
  BitCode c(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < density) c.set(i);
  }
  return c;
}

}  // namespace

TEST_CASE("bit_or and bit_and follow the bitwise definition") {
  const auto a = BitCode::from_bit_string("1100");
  const auto b = BitCode::from_bit_string("1010");
  CHECK(bit_or(a, b) == BitCode::from_bit_string("1110"));
  CHECK(bit_and(a, b) == BitCode::from_bit_string("1000"));
  const BitCode zero(4);
  CHECK(bit_or(a, zero) == a);
  CHECK(bit_and(a, zero) == zero);
  CHECK(bit_or(a, a) == a);
  CHECK(bit_and(a, a) == a);
  CHECK_THROWS_AS(bit_or(a, BitCode(5)), InvalidOperands);
  CHECK_THROWS_AS(bit_and(a, BitCode(5)), InvalidOperands);
}

TEST_CASE("bit_or and bit_and are commutative, associative and idempotent on all length-8 codes") {
  std::vector<BitCode> all;
  for (unsigned v = 0; v < 256; ++v) {
    BitCode c(8);
    for (std::size_t i = 0; i < 8; ++i) c.set(i, (v >> i) & 1U);
    all.push_back(c);
  }
  for (const auto& a : all) {
    CHECK(bit_or(a, a) == a);
    CHECK(bit_and(a, a) == a);
    for (const auto& b : all) {
      REQUIRE(bit_or(a, b) == bit_or(b, a));
      REQUIRE(bit_and(a, b) == bit_and(b, a));
    }
  }
  for (unsigned i = 0; i < 256; i += 7) {
    for (unsigned j = 0; j < 256; j += 5) {
      for (unsigned k = 0; k < 256; k += 3) {
        REQUIRE(bit_or(bit_or(all[i], all[j]), all[k]) == bit_or(all[i], bit_or(all[j], all[k])));
        REQUIRE(bit_and(bit_and(all[i], all[j]), all[k]) == bit_and(all[i], bit_and(all[j], all[k])));
      }
    }
  }
}

TEST_CASE("concat places the first operand in the low indices") {
  CHECK(concat(BitCode::from_bit_string("01"), BitCode::from_bit_string("10")) == BitCode::from_bit_string("0110"));
  const auto a = BitCode::from_bit_string("101");
  CHECK(concat(a, BitCode()) == a);
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const std::size_t la = rng.below(200);
    const std::size_t lb = rng.below(200);
    const auto x = random_code(rng, la, 0.3);
    const auto y = random_code(rng, lb, 0.3);
    const auto c = concat(x, y);
    REQUIRE(c.length() == la + lb);
    REQUIRE(c.count() == x.count() + y.count());
    for (std::size_t i = 0; i < lb; ++i) REQUIRE(c.test(la + i) == y.test(i));
  }
}

TEST_CASE("similarity examples") {
  const auto a = BitCode::from_bit_string("1100");
  const auto b = BitCode::from_bit_string("1010");
  CHECK(similarity(a, a, Metric::jaccard) == 1.0);
  CHECK(similarity(a, b, Metric::jaccard) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(similarity(a, b, Metric::cosine_discrete) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(similarity(BitCode(4), BitCode(4), Metric::jaccard) == 0.0);
  CHECK(similarity(BitCode(4), a, Metric::cosine_discrete) == 0.0);
  CHECK_THROWS_AS(similarity(a, BitCode(5), Metric::jaccard), InvalidOperands);

  const FeatureVector u({0.2, 0.8, 0.0});
  const FeatureVector v({0.4, 0.1, 0.5});
  CHECK_THROWS_AS(similarity(u, v, Metric::cosine_discrete), InvalidOperands);
  const double dot = 0.2 * 0.4 + 0.8 * 0.1;
  const double expect = dot / (std::sqrt(0.2 * 0.2 + 0.8 * 0.8) * std::sqrt(0.4 * 0.4 + 0.1 * 0.1 + 0.5 * 0.5));
  CHECK(similarity(u, v, Metric::cosine_real) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(similarity(u, u, Metric::cosine_real) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("similarity is bounded and symmetric for every metric") {
  Rng rng(11);
  const Metric bit_metrics[] = {Metric::jaccard, Metric::jaccard_quadratic, Metric::cosine_discrete,
                                Metric::cosine_real, Metric::cosine_relaxed};
  for (int t = 0; t < 500; ++t) {
    const auto a = random_code(rng, 128, 0.1);
    const auto b = random_code(rng, 128, 0.1);
    for (Metric m : bit_metrics) {
      const double s = similarity(a, b, m);
      REQUIRE(s >= 0.0);
      REQUIRE(s <= 1.0 + 1e-12);
      REQUIRE(s == similarity(b, a, m));
    }
    std::vector<double> x(16), y(16);
    for (auto& v : x) v = rng.uniform();
    for (auto& v : y) v = rng.uniform();
    const FeatureVector fx(x), fy(y);
    for (Metric m : {Metric::jaccard, Metric::jaccard_quadratic, Metric::cosine_real, Metric::cosine_relaxed}) {
      const double s = similarity(fx, fy, m);
      REQUIRE(s >= 0.0);
      REQUIRE(s <= 1.0 + 1e-12);
      REQUIRE(s == doctest::Approx(similarity(fy, fx, m)).epsilon(1e-12));
    }
  }
}

TEST_CASE("jaccard distance satisfies the triangle inequality") {
  Rng rng(3);
  for (int t = 0; t < 2000; ++t) {
    const auto a = random_code(rng, 64, 0.2);
    const auto b = random_code(rng, 64, 0.2);
    const auto c = random_code(rng, 64, 0.2);
    if (a.none() || b.none() || c.none()) continue;
    const double ab = 1.0 - similarity(a, b, Metric::jaccard);
    const double bc = 1.0 - similarity(b, c, Metric::jaccard);
    const double ac = 1.0 - similarity(a, c, Metric::jaccard);
    REQUIRE(ac <= ab + bc + 1e-12);
  }
}

TEST_CASE("threshold examples and properties") {
  const SimilarityConfig hard{Metric::cosine_discrete, 0.65};
  CHECK(threshold(0.9, hard) == 0.9);
  CHECK(threshold(0.5, hard) == 0.0);
  CHECK(threshold(0.65, hard) == 0.65);
  for (double eta : {1.0, 10.0, 250.0}) {
    const SimilarityConfig soft{Metric::cosine_discrete, 0.4, eta};
    CHECK(threshold(0.4, soft) == doctest::Approx(0.2).epsilon(1e-12));
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double x = i / 1000.0;
      const double y = threshold(x, soft);
      REQUIRE(y <= x);
      REQUIRE(y >= prev - 1e-15);
      prev = y;
    }
  }
  double prev = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    REQUIRE(threshold(x, hard) <= x);
    REQUIRE(threshold(x, hard) >= prev);
    prev = threshold(x, hard);
  }
}

TEST_CASE("sim_lambda examples") {
  Rng rng(1);
  const auto a = random_code(rng, 128, 0.1);
  const SimilarityConfig hard{Metric::cosine_discrete, 0.65};
  CHECK(sim_lambda(a, a, hard) == doctest::Approx(1.0).epsilon(1e-12));
  const auto x = BitCode::from_bit_string("1100");
  const auto y = BitCode::from_bit_string("0011");
  CHECK(sim_lambda(x, y, hard) == 0.0);
  const SimilarityConfig jac{Metric::jaccard, 0.3};
  CHECK(sim_lambda(x, BitCode::from_bit_string("1010"), jac) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("similarity config validation") {
  CHECK_NOTHROW(SimilarityConfig{}.validate());
  CHECK_THROWS_AS((SimilarityConfig{Metric::jaccard, 1.5}).validate(), ConfigError);
  CHECK_THROWS_AS((SimilarityConfig{Metric::jaccard, 0.5, 0.0}).validate(), ConfigError);
}

TEST_CASE("code capacity matches the binomial coefficient") {
  CHECK(code_capacity(128, 12) == doctest::Approx(2.3726e16).epsilon(1e-3));
  CHECK(code_capacity(10, 3) == doctest::Approx(120.0));
  CHECK(code_capacity(5, 0) == doctest::Approx(1.0));
}

TEST_CASE("literals round-trip and put the highest index first") {
  BitCode c(128);
  c.set(0);
  c.set(1);
  c.set(2);
  c.set(3);
  const auto lit = to_literal(c);
  CHECK(lit == "128:0000000000000000000000000000000f");
  CHECK(parse_literal(lit) == c);
  Rng rng(9);
  for (std::size_t n : {1u, 7u, 64u, 65u, 130u, 256u}) {
    const auto x = random_code(rng, n, 0.4);
    REQUIRE(parse_literal(to_literal(x)) == x);
  }
  CHECK_THROWS_AS(parse_literal("12:zz"), FormatError);
  CHECK_THROWS_AS(parse_literal("nope"), FormatError);
}

TEST_CASE("feature vectors normalise into the unit interval") {
  const std::vector<double> raw{-2.0, 0.0, 6.0};
  const auto f = FeatureVector::normalise(raw);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == doctest::Approx(0.25));
  CHECK(f[2] == 1.0);
  CHECK_THROWS(FeatureVector({0.5, 1.5}));
}
