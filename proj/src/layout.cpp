#include "damp/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace damp {

std::string_view to_string(LayoutMode m) { return m == LayoutMode::long_range ? "long_range" : "short_range"; }

LayoutMode layout_mode_from_string(std::string_view name) {
  if (name == "long_range" || name == "long") return LayoutMode::long_range;
  if (name == "short_range" || name == "short") return LayoutMode::short_range;
  throw InvalidOperands("unknown layout mode '" + std::string(name) + "'");
}

namespace {

// Thresholded bit similarity for every (intersection, count, count) triple up to the largest
// saturation in the space, evaluated with the same formula as the direct path.
class SimTable {
 public:
  static constexpr std::size_t kMaxCount = 64;

  SimTable(const CodeSpace& space, const SimilarityConfig& cfg) {
    if (space.kind() != PointKind::bit) return;
    std::size_t top = 0;
    for (std::size_t idx = 0; idx < space.cell_count(); ++idx) {
      if (space.occupied(idx)) top = std::max<std::size_t>(top, space.popcount(idx));
    }
    if (top > kMaxCount) return;
    side_ = top + 1;
    values_.resize(side_ * side_ * side_);
    for (std::size_t inter = 0; inter < side_; ++inter) {
      for (std::size_t ca = 0; ca < side_; ++ca) {
        for (std::size_t cb = 0; cb < side_; ++cb) {
          values_[(inter * side_ + ca) * side_ + cb] =
              threshold(detail::bit_similarity_from_counts(cfg.metric, inter, ca, cb), cfg);
        }
      }
    }
  }

  bool usable() const noexcept { return side_ != 0; }
  double operator()(std::size_t inter, std::size_t ca, std::size_t cb) const noexcept {
    return values_[(inter * side_ + ca) * side_ + cb];
  }

 private:
  std::size_t side_ = 0;
  std::vector<double> values_;
};

// Thresholded similarity against a fixed reference cell, specialised per point kind.
class SimAgainst {
 public:
  SimAgainst(const CodeSpace& space, std::size_t ref, const SimilarityConfig& cfg, const SimTable* table = nullptr)
      : space_(space), ref_(ref), cfg_(cfg), active_(space.occupied(ref)),
        table_(table != nullptr && table->usable() ? table : nullptr) {
    if (active_ && space.kind() == PointKind::real && cfg.metric == Metric::cosine_discrete) {
      throw InvalidOperands("cosine_discrete requires bit codes");
    }
  }

  bool active() const noexcept { return active_; }

  double operator()(std::size_t other) const {
    if (!active_) return 0.0;
    if (table_ != nullptr) {
      const std::size_t inter = detail::and_count(space_.words(other), space_.words(ref_));
      return (*table_)(inter, space_.popcount(other), space_.popcount(ref_));
    }
    double raw;
    if (space_.kind() == PointKind::bit) {
      raw = detail::bit_similarity(cfg_.metric, space_.words(other), space_.popcount(other), space_.words(ref_),
                                   space_.popcount(ref_));
    } else {
      raw = detail::real_similarity(cfg_.metric, space_.values(other), space_.values(ref_));
    }
    return threshold(raw, cfg_);
  }

 private:
  const CodeSpace& space_;
  std::size_t ref_;
  SimilarityConfig cfg_;
  bool active_;
  const SimTable* table_;
};

class DistanceTable {
 public:
  DistanceTable(std::size_t m, std::size_t n) : n_(n), d_(m * n) {
    for (std::size_t dy = 0; dy < m; ++dy) {
      for (std::size_t dx = 0; dx < n; ++dx) {
        d_[dy * n + dx] = std::sqrt(static_cast<double>(dy * dy + dx * dx));
      }
    }
  }
  double operator()(const Cell& a, const Cell& b) const noexcept {
    const auto dy = static_cast<std::size_t>(std::abs(a.y - b.y));
    const auto dx = static_cast<std::size_t>(std::abs(a.x - b.x));
    return d_[dy * n_ + dx];
  }
  const double* row(int dy) const noexcept { return d_.data() + static_cast<std::size_t>(dy) * n_; }

 private:
  std::size_t n_;
  std::vector<double> d_;
};

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (count + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

void check_batch(const CodeSpace& space, const PairBatch& batch) {
  for (const auto& p : batch.pairs) {
    if (p.a >= space.cell_count() || p.b >= space.cell_count() || p.a == p.b) {
      throw InvalidOperands("pair batch references invalid cells");
    }
  }
}

struct Offset {
  int dy;
  int dx;
  double d;
};

// Disc offsets in row-major order, centre excluded.
std::vector<Offset> disc_offsets(double r) {
  std::vector<Offset> out;
  const int R = static_cast<int>(std::floor(r));
  const double r2 = r * r;
  for (int dy = -R; dy <= R; ++dy) {
    for (int dx = -R; dx <= R; ++dx) {
      if (dy == 0 && dx == 0) continue;
      const double q = static_cast<double>(dy * dy + dx * dx);
      if (q <= r2) out.push_back({dy, dx, std::sqrt(q)});
    }
  }
  return out;
}

double point_energy_with(const CodeSpace& space, std::size_t cell, const std::vector<Offset>& offsets,
                         const SimilarityConfig& cfg) {
  if (!space.occupied(cell)) return 0.0;
  const SimAgainst sim(space, cell, cfg);
  const Cell c = space.cell(cell);
  double e = 0.0;
  for (const auto& o : offsets) {
    const int y = c.y + o.dy;
    const int x = c.x + o.dx;
    if (!space.contains(y, x)) continue;
    const std::size_t idx = space.index(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
    if (!space.occupied(idx)) continue;
    e += sim(idx) / o.d;
  }
  return e;
}

}  // namespace

double cell_sim_lambda(const CodeSpace& space, std::size_t a, std::size_t b, const SimilarityConfig& cfg) {
  if (!space.occupied(a) || !space.occupied(b)) return 0.0;
  return threshold(space.similarity(a, b, cfg.metric), cfg);
}

namespace {

// Both cells of the pair are occupied; walks rows directly to skip per-cell index arithmetic.
void bit_long_sums(const CodeSpace& space, const SimTable& table, const DistanceTable& dist, std::size_t a,
                   std::size_t b, double& phi_c, double& phi_s) {
  const std::size_t w = space.words_per_cell();
  const std::uint64_t* base = space.words(0).data();
  const std::uint64_t* wa = space.words(a).data();
  const std::uint64_t* wb = space.words(b).data();
  const std::size_t na = space.popcount(a);
  const std::size_t nb = space.popcount(b);
  const Cell ca = space.cell(a);
  const Cell cb = space.cell(b);
  const int rows = static_cast<int>(space.rows());
  const int cols = static_cast<int>(space.cols());
  std::size_t idx = 0;
  for (int y = 0; y < rows; ++y) {
    const double* row1 = dist.row(std::abs(y - ca.y));
    const double* row2 = dist.row(std::abs(y - cb.y));
    for (int x = 0; x < cols; ++x, ++idx) {
      if (idx == a || idx == b || !space.occupied(idx)) continue;
      const std::uint64_t* wc = base + idx * w;
      std::size_t i1 = 0;
      std::size_t i2 = 0;
      for (std::size_t k = 0; k < w; ++k) {
        i1 += static_cast<std::size_t>(std::popcount(wc[k] & wa[k]));
        i2 += static_cast<std::size_t>(std::popcount(wc[k] & wb[k]));
      }
      const std::size_t nc = space.popcount(idx);
      const double s1 = table(i1, nc, na);
      const double s2 = table(i2, nc, nb);
      const double d1 = row1[std::abs(x - ca.x)];
      const double d2 = row2[std::abs(x - cb.x)];
      phi_c += s1 * d1 + s2 * d2;
      phi_s += s2 * d1 + s1 * d2;
    }
  }
}

}  // namespace

std::vector<PairEnergy> pair_energies_long(const CodeSpace& space, const PairBatch& batch,
                                           const SimilarityConfig& cfg, std::size_t threads) {
  check_batch(space, batch);
  const DistanceTable dist(space.rows(), space.cols());
  std::vector<PairEnergy> out(batch.pairs.size());
  const std::size_t cells = space.cell_count();
  const SimTable table(space, cfg);
  parallel_for(batch.pairs.size(), threads, [&](std::size_t i) {
    const auto [a, b] = batch.pairs[i];
    const SimAgainst sim1(space, a, cfg, &table);
    const SimAgainst sim2(space, b, cfg, &table);
    const Cell ca = space.cell(a);
    const Cell cb = space.cell(b);
    double phi_c = 0.0;
    double phi_s = 0.0;
    if (table.usable() && space.occupied(a) && space.occupied(b)) {
      bit_long_sums(space, table, dist, a, b, phi_c, phi_s);
      out[i] = {phi_c, phi_s};
      return;
    }
    for (std::size_t idx = 0; idx < cells; ++idx) {
      if (idx == a || idx == b || !space.occupied(idx)) continue;
      const double s1 = sim1(idx);
      const double s2 = sim2(idx);
      if (s1 == 0.0 && s2 == 0.0) continue;
      const Cell c = space.cell(idx);
      const double d1 = dist(c, ca);
      const double d2 = dist(c, cb);
      phi_c += s1 * d1 + s2 * d2;
      phi_s += s2 * d1 + s1 * d2;
    }
    out[i] = {phi_c, phi_s};
  });
  return out;
}

std::vector<PairEnergy> pair_energies_short(const CodeSpace& space, const PairBatch& batch, double r,
                                            const SimilarityConfig& cfg, std::size_t threads) {
  check_batch(space, batch);
  std::vector<PairEnergy> out(batch.pairs.size());
  parallel_for(batch.pairs.size(), threads, [&](std::size_t i) {
    const auto [a, b] = batch.pairs[i];
    const SimAgainst sim1(space, a, cfg);
    const SimAgainst sim2(space, b, cfg);
    const Cell ca = space.cell(a);
    const Cell cb = space.cell(b);
    const double cy = (ca.y + cb.y) / 2.0;
    const double cx = (ca.x + cb.x) / 2.0;
    const double sep2 = static_cast<double>((ca.y - cb.y) * (ca.y - cb.y) + (ca.x - cb.x) * (ca.x - cb.x));
    const double r2 = std::max(r * r, sep2);
    const double R = std::sqrt(r2);
    // One cell of slack around the box; membership is decided on squared distances.
    const int y_lo = std::max(0, static_cast<int>(std::ceil(cy - R)) - 1);
    const int y_hi = std::min(static_cast<int>(space.rows()) - 1, static_cast<int>(std::floor(cy + R)) + 1);
    const int x_lo = std::max(0, static_cast<int>(std::ceil(cx - R)) - 1);
    const int x_hi = std::min(static_cast<int>(space.cols()) - 1, static_cast<int>(std::floor(cx + R)) + 1);
    double phi_c = 0.0;
    double phi_s = 0.0;
    for (int y = y_lo; y <= y_hi; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) {
        const double qy = y - cy;
        const double qx = x - cx;
        if (qy * qy + qx * qx > r2) continue;
        const std::size_t idx = space.index(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
        if (idx == a || idx == b || !space.occupied(idx)) continue;
        const double s1 = sim1(idx);
        const double s2 = sim2(idx);
        if (s1 == 0.0 && s2 == 0.0) continue;
        const double d1 = std::sqrt(static_cast<double>((y - ca.y) * (y - ca.y) + (x - ca.x) * (x - ca.x)));
        const double d2 = std::sqrt(static_cast<double>((y - cb.y) * (y - cb.y) + (x - cb.x) * (x - cb.x)));
        phi_c += s1 / d1 + s2 / d2;
        phi_s += s2 / d1 + s1 / d2;
      }
    }
    out[i] = {phi_c, phi_s};
  });
  return out;
}

std::size_t apply_swaps(CodeSpace& space, const PairBatch& batch, std::span<const PairEnergy> energies,
                        LayoutMode mode) {
  if (energies.size() != batch.pairs.size()) throw InvalidOperands("energy count does not match batch size");
  std::size_t swaps = 0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    const auto& e = energies[i];
    const bool favourable = mode == LayoutMode::long_range ? e.phi_s < e.phi_c : e.phi_s > e.phi_c;
    if (!favourable) continue;
    space.swap_cells(batch.pairs[i].a, batch.pairs[i].b);
    ++swaps;
  }
  return swaps;
}

double point_energy(const CodeSpace& space, std::size_t cell, double r, const SimilarityConfig& cfg) {
  if (cell >= space.cell_count()) throw InvalidOperands("cell index out of range");
  return point_energy_with(space, cell, disc_offsets(r), cfg);
}

EnergyMap energy_map(const CodeSpace& space, double r_e, const SimilarityConfig& cfg, double normalise_radius) {
  EnergyMap map;
  map.rows = space.rows();
  map.cols = space.cols();
  map.radius = r_e;
  const auto offsets = disc_offsets(r_e);
  std::vector<double> raw(space.cell_count(), 0.0);
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = point_energy_with(space, i, offsets, cfg);

  const double global = *std::max_element(raw.begin(), raw.end());
  map.e_max = global > 0.0 ? global : 1.0;
  map.values.assign(raw.size(), 0.0);
  if (normalise_radius <= 0.0) {
    for (std::size_t i = 0; i < raw.size(); ++i) map.values[i] = raw[i] / map.e_max;
    return map;
  }
  const auto hood = disc_offsets(normalise_radius);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == 0.0) continue;
    const Cell c = space.cell(i);
    double local = raw[i];
    for (const auto& o : hood) {
      if (space.contains(c.y + o.dy, c.x + o.dx)) {
        local = std::max(local, raw[space.index(static_cast<std::size_t>(c.y + o.dy), static_cast<std::size_t>(c.x + o.dx))]);
      }
    }
    map.values[i] = raw[i] / local;
  }
  return map;
}

double layout_quality(const CodeSpace& space, const EnergyMap& map) {
  if (space.point_count() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < space.cell_count(); ++i) {
    if (space.occupied(i)) sum += map.values[i];
  }
  return sum / static_cast<double>(space.point_count());
}

double layout_quality(const CodeSpace& space, double r_e, const SimilarityConfig& cfg) {
  return layout_quality(space, energy_map(space, r_e, cfg));
}

double total_long_energy(const CodeSpace& space, const SimilarityConfig& cfg) {
  const auto cells = space.occupied_cells();
  double total = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell a = space.cell(cells[i]);
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      const Cell b = space.cell(cells[j]);
      const double d = std::sqrt(static_cast<double>((a.y - b.y) * (a.y - b.y) + (a.x - b.x) * (a.x - b.x)));
      total += cell_sim_lambda(space, cells[i], cells[j], cfg) * d;
    }
  }
  return total;
}

EnergySampler::EnergySampler(const CodeSpace& space, const EnergyMap& map) : cells_(space.occupied_cells()) {
  if (map.values.size() != space.cell_count()) throw InvalidOperands("energy map does not match the space");
  std::vector<double> cum;
  cum.reserve(cells_.size());
  double acc = 0.0;
  for (std::size_t c : cells_) {
    acc += -std::log(std::max(map.values[c], kFloor));
    cum.push_back(acc);
  }
  // All cells fully organised: fall back to uniform draws.
  if (acc > 0.0) cumulative_ = std::move(cum);
}

std::size_t EnergySampler::draw(Rng& rng) const {
  if (cells_.empty()) throw InvalidOperands("no occupied cells to sample");
  if (cumulative_.empty()) return cells_[rng.below(cells_.size())];
  const double u = rng.uniform() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto pos = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cells_.size() - 1);
  return cells_[pos];
}

std::vector<std::size_t> energy_weighted_first_points(const CodeSpace& space, const EnergyMap& map, std::size_t count,
                                                      Rng& rng) {
  const EnergySampler sampler(space, map);
  std::vector<std::size_t> out(count);
  for (auto& c : out) c = sampler.draw(rng);
  return out;
}

namespace {

bool draw_second(const CodeSpace& space, const Cell& first, double radius, Rng& rng, std::size_t& out) {
  const double diag2 = static_cast<double>(space.rows() * space.rows() + space.cols() * space.cols());
  const std::size_t first_idx = space.index(static_cast<std::size_t>(first.y), static_cast<std::size_t>(first.x));
  if (radius * radius >= diag2) {
    if (space.cell_count() < 2) return false;
    std::size_t idx = rng.below(space.cell_count() - 1);
    if (idx >= first_idx) ++idx;
    out = idx;
    return true;
  }
  const int R = static_cast<int>(std::floor(radius));
  const int y_lo = std::max(0, first.y - R);
  const int y_hi = std::min(static_cast<int>(space.rows()) - 1, first.y + R);
  const int x_lo = std::max(0, first.x - R);
  const int x_hi = std::min(static_cast<int>(space.cols()) - 1, first.x + R);
  const auto h = static_cast<std::uint64_t>(y_hi - y_lo + 1);
  const auto w = static_cast<std::uint64_t>(x_hi - x_lo + 1);
  const double r2 = radius * radius;
  for (int tries = 0; tries < 64; ++tries) {
    const int y = y_lo + static_cast<int>(rng.below(h));
    const int x = x_lo + static_cast<int>(rng.below(w));
    const int dy = y - first.y;
    const int dx = x - first.x;
    if (dy == 0 && dx == 0) continue;
    if (static_cast<double>(dy * dy + dx * dx) > r2) continue;
    out = space.index(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
    return true;
  }
  return false;
}

}  // namespace

PairBatch select_pairs(const CodeSpace& space, const PairSelection& sel, Rng& rng, const EnergySampler* sampler) {
  PairBatch batch;
  if (space.point_count() < 1 || space.cell_count() < 2) return batch;
  std::vector<std::size_t> occupied;
  if (sampler == nullptr) occupied = space.occupied_cells();
  std::vector<std::uint8_t> used(space.cell_count(), 0);
  batch.pairs.reserve(sel.pairs);
  for (std::size_t slot = 0; slot < sel.pairs; ++slot) {
    for (std::size_t attempt = 0; attempt < sel.attempts; ++attempt) {
      const std::size_t a = sampler ? sampler->draw(rng) : occupied[rng.below(occupied.size())];
      if (used[a]) continue;
      std::size_t b = 0;
      if (!draw_second(space, space.cell(a), sel.radius, rng, b)) continue;
      if (used[b]) continue;
      if (sel.early_cutoff > 0.0 && space.occupied(b) && space.similarity(a, b, sel.metric) < sel.early_cutoff) {
        continue;
      }
      used[a] = used[b] = 1;
      batch.pairs.push_back({a, b});
      break;
    }
  }
  return batch;
}

void LayoutSchedule::validate() const {
  if (!(lambda_start >= 0.0 && lambda_start <= 1.0)) throw ConfigError("lambda_start", "must lie in [0, 1]");
  if (!(lambda_end >= 0.0 && lambda_end <= 1.0)) throw ConfigError("lambda_end", "must lie in [0, 1]");
  if (!(lambda_step >= 0.0)) throw ConfigError("lambda_step", "must be non-negative");
  if (lambda_end < lambda_start) throw ConfigError("lambda_end", "must not be below lambda_start");
  if (lambda_end > lambda_start && lambda_step == 0.0) throw ConfigError("lambda_step", "must be positive for a ramp");
  if (!(radius_start == 0.0 || radius_start >= 1.0)) throw ConfigError("radius_start", "must be 0 (auto) or >= 1");
  if (!(radius_end >= 1.0)) throw ConfigError("radius_end", "must be >= 1");
  if (!(radius_factor > 0.0 && radius_factor < 1.0)) throw ConfigError("radius_factor", "must lie in (0, 1)");
  if (pairs_per_step == 0) throw ConfigError("pairs_per_step", "must be positive");
  if (!(stop > 0.0 && stop < 1.0)) throw ConfigError("stop", "must lie in (0, 1)");
  if (!(short_radius >= 1.0)) throw ConfigError("short_radius", "must be >= 1");
  if (!(early_cutoff >= 0.0 && early_cutoff <= 1.0)) throw ConfigError("early_cutoff", "must lie in [0, 1]");
}

std::size_t LayoutSchedule::stage_count(double radius0) const {
  std::size_t lambda_stages = 0;
  if (lambda_end > lambda_start) {
    lambda_stages = static_cast<std::size_t>(std::ceil((lambda_end - lambda_start) / lambda_step - 1e-9));
  }
  std::size_t radius_stages = 0;
  for (double r = radius0; r > radius_end; r *= radius_factor) ++radius_stages;
  return std::max(lambda_stages, radius_stages) + 1;
}

double LayoutSchedule::lambda_at(std::size_t stage) const {
  return std::min(lambda_end, lambda_start + static_cast<double>(stage) * lambda_step);
}

double LayoutSchedule::radius_at(std::size_t stage, double radius0) const {
  return std::max(radius_end, radius0 * std::pow(radius_factor, static_cast<double>(stage)));
}

void LayoutPlan::validate() const {
  if (phases.empty()) throw ConfigError("phases", "need at least one phase");
  for (std::size_t i = 0; i < phases.size(); ++i) {
    try {
      phases[i].validate();
    } catch (const ConfigError& e) {
      throw ConfigError("phases[" + std::to_string(i) + "]." + e.path(), e.what());
    }
  }
  if (!(eta > 0.0)) throw ConfigError("eta", "must be positive");
  if (window == 0) throw ConfigError("window", "must be positive");
  if (max_stage_steps == 0) throw ConfigError("max_stage_steps", "must be positive");
  if (!(quality.radius >= 1.0)) throw ConfigError("quality.radius", "must be >= 1");
  quality.sim.validate();
  if (threads == 0) throw ConfigError("threads", "must be positive");
}

LayoutPlan default_plan() {
  LayoutPlan plan;
  LayoutSchedule long_phase;
  LayoutSchedule short_phase;
  short_phase.mode = LayoutMode::short_range;
  short_phase.lambda_start = 0.8;
  short_phase.lambda_end = 0.8;
  short_phase.radius_start = 2.0;
  short_phase.radius_end = 1.0;
  short_phase.short_radius = 3.0;
  plan.phases = {long_phase, short_phase};
  plan.eta = 3.0;
  return plan;
}

std::pair<std::size_t, std::size_t> layout_step(CodeSpace& space, const LayoutSchedule& sched, double lambda,
                                                double radius, const LayoutPlan& plan, Rng& rng,
                                                const EnergySampler* sampler) {
  const SimilarityConfig cfg{plan.metric, lambda, plan.eta};
  PairSelection sel;
  sel.pairs = sched.pairs_per_step;
  sel.radius = radius;
  sel.early_cutoff = sched.early_cutoff;
  sel.metric = plan.metric;
  const PairBatch batch = select_pairs(space, sel, rng, sampler);
  const auto energies = sched.mode == LayoutMode::long_range
                            ? pair_energies_long(space, batch, cfg, plan.threads)
                            : pair_energies_short(space, batch, sched.short_radius, cfg, plan.threads);
  const std::size_t swaps = apply_swaps(space, batch, energies, sched.mode);
  return {batch.pairs.size(), swaps};
}

namespace {

double mean(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += v[i];
  return hi > lo ? s / static_cast<double>(hi - lo) : 0.0;
}

}  // namespace

LayoutReport run_layout(CodeSpace& space, const LayoutPlan& plan, const ProgressSink& sink) {
  plan.validate();
  LayoutReport report;
  Rng rng(plan.seed);
  const auto quality_now = [&] { return layout_quality(space, plan.quality.radius, plan.quality.sim); };
  report.initial_quality = quality_now();
  report.converged = true;
  const double half_side = std::max<double>(1.0, static_cast<double>(std::max(space.rows(), space.cols())) / 2.0);

  std::size_t step = 0;
  bool out_of_budget = false;
  for (std::size_t ph = 0; ph < plan.phases.size() && !out_of_budget; ++ph) {
    const auto& sched = plan.phases[ph];
    const double radius0 = sched.radius_start > 0.0 ? sched.radius_start : std::max(half_side, sched.radius_end);
    const std::size_t stages = sched.stage_count(radius0);
    for (std::size_t st = 0; st < stages && !out_of_budget; ++st) {
      StageRecord rec;
      rec.phase = ph;
      rec.stage = st;
      rec.mode = sched.mode;
      rec.lambda = sched.lambda_at(st);
      rec.radius = sched.radius_at(st, radius0);
      const SimilarityConfig cfg{plan.metric, rec.lambda, plan.eta};

      std::vector<double> rates;
      std::optional<EnergySampler> sampler;
      while (true) {
        if (step >= plan.max_total_steps) {
          out_of_budget = true;
          break;
        }
        if (rates.size() >= plan.max_stage_steps) break;
        if (plan.energy_weighted && rates.size() % std::max<std::size_t>(1, plan.energy_refresh) == 0) {
          sampler.emplace(space, energy_map(space, plan.quality.radius, cfg));
        }
        const auto [batch, swaps] =
            layout_step(space, sched, rec.lambda, rec.radius, plan, rng, sampler ? &*sampler : nullptr);
        rates.push_back(batch ? static_cast<double>(swaps) / static_cast<double>(batch) : 0.0);
        report.total_swaps += swaps;

        StepRecord s;
        s.step = step;
        s.phase = ph;
        s.stage = st;
        s.batch = batch;
        s.swaps = swaps;
        s.lambda = rec.lambda;
        s.radius = rec.radius;
        if (plan.quality.every > 0 && step % plan.quality.every == 0) s.quality = quality_now();
        ++step;

        const std::size_t w = plan.window;
        bool done = false;
        if (rates.size() >= w) {
          rec.initial_rate = mean(rates, 0, w);
          if (rec.initial_rate == 0.0) {
            done = true;
            rec.final_rate = 0.0;
          } else if (rates.size() >= 2 * w) {
            rec.final_rate = mean(rates, rates.size() - w, rates.size());
            done = rec.final_rate < sched.stop * rec.initial_rate;
          }
        }
        if (done) {
          rec.converged = true;
          if (!s.quality) s.quality = quality_now();
        }
        report.steps.push_back(s);
        if (sink) sink(report.steps.back());
        if (done) break;
      }
      rec.steps = rates.size();
      if (rates.empty() && out_of_budget) break;
      if (!rec.converged) {
        if (rates.size() >= plan.window) {
          rec.initial_rate = mean(rates, 0, plan.window);
          rec.final_rate = mean(rates, rates.size() - std::min(rates.size(), plan.window), rates.size());
        }
        report.converged = false;
      }
      report.stages.push_back(rec);
    }
  }
  if (out_of_budget) report.converged = false;
  report.final_quality = quality_now();
  return report;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = rank;
    i = j + 1;
  }
  return r;
}

}  // namespace

double similarity_distance_spearman(const CodeSpace& space, std::size_t pairs, Metric metric, std::uint64_t seed) {
  const auto occ = space.occupied_cells();
  if (occ.size() < 2 || pairs < 2) throw InvalidOperands("spearman needs two occupied cells and two pairs");
  Rng rng(seed);
  std::vector<double> sims;
  std::vector<double> dists;
  sims.reserve(pairs);
  dists.reserve(pairs);
  while (sims.size() < pairs) {
    const std::size_t a = occ[rng.below(occ.size())];
    const std::size_t b = occ[rng.below(occ.size())];
    if (a == b) continue;
    const Cell ca = space.cell(a);
    const Cell cb = space.cell(b);
    const double dy = ca.y - cb.y;
    const double dx = ca.x - cb.x;
    sims.push_back(space.similarity(a, b, metric));
    dists.push_back(-std::sqrt(dy * dy + dx * dx));
  }
  const auto ra = average_ranks(sims);
  const auto rb = average_ranks(dists);
  const double n = static_cast<double>(pairs);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace damp
