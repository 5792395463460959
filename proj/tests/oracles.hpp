#pragma once

// Straightforward reference computations shared by the unit and acceptance tests.

#include <cmath>
#include <vector>

#include "damp/layout.hpp"
#include "damp/rng.hpp"
#include "damp/space.hpp"

namespace oracle {

inline double cell_distance(const damp::CodeSpace& s, std::size_t i, std::size_t j) {
  const auto a = s.cell(i);
  const auto b = s.cell(j);
  return std::sqrt(static_cast<double>((a.y - b.y) * (a.y - b.y) + (a.x - b.x) * (a.x - b.x)));
}

// sim_lambda from the decoded points, zero for empty cells.
inline double sim(const damp::CodeSpace& s, std::size_t i, std::size_t j, const damp::SimilarityConfig& cfg) {
  const auto p = s.point(i);
  const auto q = s.point(j);
  if (!p || !q) return 0.0;
  return damp::threshold(damp::similarity(*p, *q, cfg.metric), cfg);
}

inline damp::PairEnergy long_pair(const damp::CodeSpace& s, std::size_t a, std::size_t b,
                                  const damp::SimilarityConfig& cfg) {
  damp::PairEnergy e;
  for (std::size_t c = 0; c < s.cell_count(); ++c) {
    if (c == a || c == b || !s.occupied(c)) continue;
    const double s1 = sim(s, c, a, cfg);
    const double s2 = sim(s, c, b, cfg);
    if (s1 == 0.0 && s2 == 0.0) continue;
    const double d1 = cell_distance(s, c, a);
    const double d2 = cell_distance(s, c, b);
    e.phi_c += s1 * d1 + s2 * d2;
    e.phi_s += s2 * d1 + s1 * d2;
  }
  return e;
}

inline damp::PairEnergy short_pair(const damp::CodeSpace& s, std::size_t a, std::size_t b, double r,
                                   const damp::SimilarityConfig& cfg) {
  const auto ca = s.cell(a);
  const auto cb = s.cell(b);
  const double my = (ca.y + cb.y) / 2.0;
  const double mx = (ca.x + cb.x) / 2.0;
  const double sep2 = static_cast<double>((ca.y - cb.y) * (ca.y - cb.y) + (ca.x - cb.x) * (ca.x - cb.x));
  const double r2 = std::max(r * r, sep2);
  damp::PairEnergy e;
  for (std::size_t c = 0; c < s.cell_count(); ++c) {
    if (c == a || c == b || !s.occupied(c)) continue;
    const auto cc = s.cell(c);
    if ((cc.y - my) * (cc.y - my) + (cc.x - mx) * (cc.x - mx) > r2) continue;
    const double s1 = sim(s, c, a, cfg);
    const double s2 = sim(s, c, b, cfg);
    if (s1 == 0.0 && s2 == 0.0) continue;
    const double d1 = cell_distance(s, c, a);
    const double d2 = cell_distance(s, c, b);
    e.phi_c += s1 / d1 + s2 / d2;
    e.phi_s += s2 / d1 + s1 / d2;
  }
  return e;
}

inline double total_energy(const damp::CodeSpace& s, const damp::SimilarityConfig& cfg) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.cell_count(); ++i) {
    for (std::size_t j = i + 1; j < s.cell_count(); ++j) total += sim(s, i, j, cfg) * cell_distance(s, i, j);
  }
  return total;
}

// Random space of side at most max_side with random occupancy and clustered codes.
inline damp::CodeSpace random_space(std::uint64_t seed, std::size_t bits = 64, std::size_t max_side = 8) {
  damp::Rng rng(seed);
  const std::size_t m = 2 + rng.below(max_side - 1);
  const std::size_t n = 2 + rng.below(max_side - 1);
  damp::CodeSpace s(m, n, damp::PointKind::bit, bits);
  std::vector<damp::BitCode> protos;
  for (int k = 0; k < 3; ++k) {
    damp::BitCode c(bits);
    while (c.count() < 10) c.set(rng.below(bits));
    protos.push_back(c);
  }
  for (std::size_t idx = 0; idx < s.cell_count(); ++idx) {
    if (rng.uniform() < 0.2) continue;
    damp::BitCode c = protos[rng.below(protos.size())];
    for (int f = 0; f < 3; ++f) {
      const auto on = c.indices();
      c.reset(on[rng.below(on.size())]);
      c.set(rng.below(bits));
    }
    if (c.none()) c.set(0);
    s.set(idx, c);
  }
  if (s.point_count() < 2) {
    s.set(0, protos[0]);
    s.set(1, protos[1]);
  }
  return s;
}

}  // namespace oracle
