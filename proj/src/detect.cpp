#include "damp/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "damp/rng.hpp"

namespace damp {

namespace {

ActivationMap empty_map(const CodeSpace& space, double lambda) {
  return {space.rows(), space.cols(), lambda, std::vector<double>(space.cell_count(), 0.0)};
}

void check_dims(const ActivationMap& a, const EnergyMap& e) {
  if (a.rows != e.rows || a.cols != e.cols) throw InvalidOperands("activation and energy maps differ in size");
}

double sim_lambda_to(const CodeSpace& space, std::size_t idx, const Point& p, const SimilarityConfig& sim) {
  return threshold(space.similarity(idx, p, sim.metric), sim);
}

struct Box {
  int y_lo, y_hi, x_lo, x_hi;
};

Box disc_box(std::size_t rows, std::size_t cols, Vec2 c, double r) {
  return {std::max(0, static_cast<int>(std::floor(c.y - r)) - 1),
          std::min(static_cast<int>(rows) - 1, static_cast<int>(std::ceil(c.y + r)) + 1),
          std::max(0, static_cast<int>(std::floor(c.x - r)) - 1),
          std::min(static_cast<int>(cols) - 1, static_cast<int>(std::ceil(c.x + r)) + 1)};
}

bool in_disc(int y, int x, Vec2 c, double r) {
  const double dy = y - c.y;
  const double dx = x - c.x;
  return dy * dy + dx * dx <= r * r;
}

// Activation by an arbitrary code over the disc (centre, r); zero elsewhere.
ActivationMap activate_disc(const CodeSpace& space, const Point& probe, Vec2 centre, double r,
                            const SimilarityConfig& sim) {
  ActivationMap a = empty_map(space, sim.lambda);
  const Box b = disc_box(space.rows(), space.cols(), centre, r);
  for (int y = b.y_lo; y <= b.y_hi; ++y) {
    for (int x = b.x_lo; x <= b.x_hi; ++x) {
      if (!in_disc(y, x, centre, r)) continue;
      const std::size_t idx = space.index(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
      if (space.occupied(idx)) a.values[idx] = sim_lambda_to(space, idx, probe, sim);
    }
  }
  return a;
}

Vec2 cell_pos(std::size_t cols, std::size_t idx) {
  return {static_cast<double>(idx / cols), static_cast<double>(idx % cols)};
}

std::vector<PointCluster> dbscan(const std::vector<std::size_t>& candidates, std::size_t rows, std::size_t cols,
                                 const DbscanParams& params) {
  std::vector<PointCluster> clusters;
  if (candidates.empty()) return clusters;
  constexpr int kUnseen = -2;
  constexpr int kNoise = -1;
  std::vector<int> label(rows * cols, kUnseen);
  std::vector<std::uint8_t> member(rows * cols, 0);
  for (std::size_t c : candidates) member[c] = 1;

  std::vector<std::pair<int, int>> offsets;
  const int R = static_cast<int>(std::floor(params.eps));
  for (int dy = -R; dy <= R; ++dy) {
    for (int dx = -R; dx <= R; ++dx) {
      if (static_cast<double>(dy * dy + dx * dx) <= params.eps * params.eps) offsets.emplace_back(dy, dx);
    }
  }
  const auto neighbours = [&](std::size_t idx) {
    std::vector<std::size_t> out;
    const int y = static_cast<int>(idx / cols);
    const int x = static_cast<int>(idx % cols);
    for (const auto& [dy, dx] : offsets) {
      const int ny = y + dy;
      const int nx = x + dx;
      if (ny < 0 || nx < 0 || ny >= static_cast<int>(rows) || nx >= static_cast<int>(cols)) continue;
      const std::size_t n = static_cast<std::size_t>(ny) * cols + static_cast<std::size_t>(nx);
      if (member[n]) out.push_back(n);
    }
    return out;
  };

  for (std::size_t p : candidates) {
    if (label[p] != kUnseen) continue;
    auto seeds = neighbours(p);
    if (seeds.size() < params.min_pts) {
      label[p] = kNoise;
      continue;
    }
    const int id = static_cast<int>(clusters.size());
    clusters.emplace_back();
    label[p] = id;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const std::size_t q = seeds[i];
      if (label[q] == kNoise) label[q] = id;
      if (label[q] != kUnseen) continue;
      label[q] = id;
      auto more = neighbours(q);
      if (more.size() >= params.min_pts) seeds.insert(seeds.end(), more.begin(), more.end());
    }
  }
  for (std::size_t p : candidates) {
    if (label[p] >= 0) clusters[static_cast<std::size_t>(label[p])].push_back(p);
  }
  return clusters;
}

std::vector<PointCluster> cluster_cells(const ActivationMap& a, const EnergyMap& e, double mu,
                                        const DbscanParams& params, const std::vector<std::size_t>& scan) {
  std::vector<std::size_t> candidates;
  for (std::size_t idx : scan) {
    if (a.values[idx] > 0.0 && e.values[idx] >= mu) candidates.push_back(idx);
  }
  return dbscan(candidates, a.rows, a.cols, params);
}

}  // namespace

ActivationMap activate(const CodeSpace& space, std::span<const Point> stimuli, const SimilarityConfig& sim) {
  if (stimuli.empty()) throw InvalidOperands("activate needs at least one stimulus");
  for (const auto& s : stimuli) {
    if (point_length(s) != space.code_bits()) throw InvalidOperands("stimulus length does not match the space");
  }
  ActivationMap a = empty_map(space, sim.lambda);
  for (std::size_t idx = 0; idx < space.cell_count(); ++idx) {
    if (!space.occupied(idx)) continue;
    double best = 0.0;
    for (const auto& s : stimuli) best = std::max(best, sim_lambda_to(space, idx, s, sim));
    a.values[idx] = best;
  }
  return a;
}

ActivationMap activate_local(const CodeSpace& space, std::size_t centre, double r_a, const SimilarityConfig& sim) {
  if (centre >= space.cell_count() || !space.occupied(centre)) {
    throw InvalidOperands("local activation needs an occupied centre cell");
  }
  return activate_disc(space, *space.point(centre), cell_pos(space.cols(), centre), r_a, sim);
}

std::vector<PointCluster> cluster_activated(const ActivationMap& a, const EnergyMap& e, double mu,
                                            const DbscanParams& params) {
  check_dims(a, e);
  std::vector<std::size_t> all(a.values.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return cluster_cells(a, e, mu, params, all);
}

Vec2 cluster_centroid(const PointCluster& cluster, const ActivationMap& a, const EnergyMap& e) {
  check_dims(a, e);
  double wy = 0.0, wx = 0.0, w = 0.0;
  for (std::size_t idx : cluster) {
    const double wi = a.values.at(idx) * e.values.at(idx);
    const Vec2 p = cell_pos(a.cols, idx);
    wy += p.y * wi;
    wx += p.x * wi;
    w += wi;
  }
  if (!(w > 0.0)) throw InvalidOperands("cluster has zero total weight");
  return {wy / w, wx / w};
}

double optimal_radius(std::span<const Vec2> points, Vec2 centroid, double pad, double floor) {
  if (points.empty()) throw InvalidOperands("optimal_radius needs at least one point");
  std::vector<double> r;
  r.reserve(points.size());
  for (const auto& p : points) r.push_back(std::hypot(p.y - centroid.y, p.x - centroid.x));
  std::sort(r.begin(), r.end());
  double best_r = 0.0;
  double best_f = -1.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i + 1 < r.size() && r[i + 1] == r[i]) continue;
    if (r[i] <= 0.0) continue;
    const double f = static_cast<double>(i + 1) / (std::numbers::pi * (r[i] + pad) * (r[i] + pad));
    if (f > best_f) {
      best_f = f;
      best_r = r[i];
    }
  }
  return std::max(best_r, floor);
}

ReceptiveSum receptive_sum(const ActivationMap& a, const EnergyMap& e, Vec2 centre, double r, double mu) {
  check_dims(a, e);
  ReceptiveSum out;
  const Box b = disc_box(a.rows, a.cols, centre, r);
  for (int y = b.y_lo; y <= b.y_hi; ++y) {
    for (int x = b.x_lo; x <= b.x_hi; ++x) {
      if (!in_disc(y, x, centre, r)) continue;
      const std::size_t idx = static_cast<std::size_t>(y) * a.cols + static_cast<std::size_t>(x);
      const double ei = e.values[idx];
      if (ei < mu) continue;
      const double ai = a.values[idx];
      if (ai > 0.0) ++out.count;
      out.energy += ai * ei;
    }
  }
  return out;
}

std::size_t DetectorHierarchy::size() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.size();
  return n;
}

std::vector<const Detector*> DetectorHierarchy::ordered() const {
  std::vector<const Detector*> out;
  for (const auto& l : layers) {
    for (const auto& d : l) out.push_back(&d);
  }
  return out;
}

DetectorHierarchy make_hierarchy(std::vector<double> lambdas, std::size_t output_bits) {
  if (output_bits == 0) throw ConfigError("output_bits", "must be positive");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0 && lambdas[i] <= 1.0)) {
      throw ConfigError("lambdas[" + std::to_string(i) + "]", "must be in [0, 1]");
    }
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) {
      throw ConfigError("lambdas[" + std::to_string(i) + "]", "layer thresholds must be strictly ascending");
    }
  }
  DetectorHierarchy h;
  h.layers.resize(lambdas.size());
  h.lambdas = std::move(lambdas);
  h.output_bits = output_bits;
  return h;
}

bool try_insert(DetectorHierarchy& h, Detector candidate) {
  if (candidate.layer >= h.layers.size()) throw InvalidOperands("detector layer does not exist");
  auto& layer = h.layers[candidate.layer];
  std::vector<std::size_t> overlapped;
  for (std::size_t i = 0; i < layer.size(); ++i) {
    const auto& e = layer[i];
    const double d = std::hypot(candidate.centre.y - e.centre.y, candidate.centre.x - e.centre.x);
    if (d <= std::max(candidate.radius, e.radius)) overlapped.push_back(i);
  }
  const double f = candidate.fill_factor();
  for (std::size_t i : overlapped) {
    if (!(f > layer[i].fill_factor())) return false;
  }
  for (auto it = overlapped.rbegin(); it != overlapped.rend(); ++it) {
    layer.erase(layer.begin() + static_cast<std::ptrdiff_t>(*it));
  }
  candidate.id = h.next_id++;
  layer.push_back(std::move(candidate));
  return true;
}

void DetectionConfig::validate(std::size_t output_bits) const {
  const auto unit = [](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(name, "must be in [0, 1]");
  };
  unit("mu", mu);
  unit("mu_e", mu_e);
  unit("mu_d", mu_d);
  unit("mu_c", mu_c);
  unit("lambda_a", lambda_a);
  if (sigma == 0) throw ConfigError("sigma", "must be positive");
  if (sigma > output_bits) throw ConfigError("sigma", "exceeds the output code length");
  if (max_active == 0) throw ConfigError("max_active", "must be positive");
  if (!(r_a >= 0.0) || !std::isfinite(r_a)) throw ConfigError("r_a", "must be a finite non-negative radius");
  if (!(eta > 0.0)) throw ConfigError("eta", "must be positive");
  if (!(dbscan.eps > 0.0)) throw ConfigError("dbscan.eps", "must be positive");
  if (dbscan.min_pts == 0) throw ConfigError("dbscan.min_pts", "must be positive");
}

void HierarchyBuild::validate() const {
  if (lambdas.empty()) throw ConfigError("lambdas", "needs at least one layer");
  make_hierarchy(lambdas, output_bits);
  if (budget == 0) throw ConfigError("budget", "must be positive");
  if (max_samples == 0) throw ConfigError("max_samples", "must be positive");
}

DetectorHierarchy build_hierarchy(const CodeSpace& space, const EnergyMap& e, const HierarchyBuild& build,
                                  const DetectionConfig& cfg) {
  build.validate();
  cfg.validate(build.output_bits);
  if (e.rows != space.rows() || e.cols != space.cols()) throw InvalidOperands("energy map does not match the space");
  DetectorHierarchy h = make_hierarchy(build.lambdas, build.output_bits);
  Rng rng(build.seed);

  std::vector<std::size_t> eligible;
  for (std::size_t idx = 0; idx < space.cell_count(); ++idx) {
    if (space.occupied(idx) && e.values[idx] >= cfg.mu) eligible.push_back(idx);
  }
  if (eligible.empty()) return h;

  const double r_max = std::max(1.0, cfg.r_a);
  for (std::size_t layer = 0; layer < h.layers.size(); ++layer) {
    const SimilarityConfig sim{cfg.metric, h.lambdas[layer], cfg.eta};
    std::size_t fails = 0;
    for (std::size_t sample = 0; sample < build.max_samples && fails < build.budget; ++sample) {
      const std::size_t c = eligible[rng.below(eligible.size())];
      const Vec2 cpos = cell_pos(space.cols(), c);
      const ActivationMap local = activate_local(space, c, cfg.r_a, sim);
      std::vector<std::size_t> scan;
      const Box b = disc_box(space.rows(), space.cols(), cpos, cfg.r_a);
      for (int y = b.y_lo; y <= b.y_hi; ++y) {
        for (int x = b.x_lo; x <= b.x_hi; ++x) {
          scan.push_back(space.index(static_cast<std::size_t>(y), static_cast<std::size_t>(x)));
        }
      }
      bool changed = false;
      for (const auto& cluster : cluster_cells(local, e, cfg.mu, cfg.dbscan, scan)) {
        double w = 0.0;
        for (std::size_t idx : cluster) w += local.values[idx] * e.values[idx];
        if (!(w > 0.0)) continue;
        const Vec2 centre = cluster_centroid(cluster, local, e);
        std::vector<Vec2> pts;
        pts.reserve(cluster.size());
        for (std::size_t idx : cluster) pts.push_back(cell_pos(space.cols(), idx));
        const double radius = std::min(optimal_radius(pts, centre), r_max);

        std::size_t probe_cell = cluster.front();
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t idx : cluster) {
          const Vec2 p = cell_pos(space.cols(), idx);
          const double d = std::hypot(p.y - centre.y, p.x - centre.x);
          if (d < best) {
            best = d;
            probe_cell = idx;
          }
        }
        Point probe = *space.point(probe_cell);
        const ActivationMap act = activate_disc(space, probe, centre, radius, sim);
        const ReceptiveSum rs = receptive_sum(act, e, centre, radius, cfg.mu);
        if (rs.count == 0 || !(rs.energy > 0.0)) continue;

        Detector d;
        d.layer = layer;
        d.centre = centre;
        d.radius = radius;
        d.lambda = h.lambdas[layer];
        d.count = rs.count;
        d.energy = rs.energy;
        d.output = BitCode(h.output_bits);
        d.output.set(static_cast<std::size_t>(rng.below(h.output_bits)));
        d.probe = std::move(probe);
        if (try_insert(h, std::move(d))) changed = true;
      }
      fails = changed ? 0 : fails + 1;
    }
  }
  return h;
}

std::size_t containment_violations(const DetectorHierarchy& h) {
  std::size_t bad = 0;
  for (const auto& layer : h.layers) {
    for (std::size_t i = 0; i < layer.size(); ++i) {
      for (std::size_t j = i + 1; j < layer.size(); ++j) {
        const double d = std::hypot(layer[i].centre.y - layer[j].centre.y, layer[i].centre.x - layer[j].centre.x);
        if (d <= std::max(layer[i].radius, layer[j].radius)) ++bad;
      }
    }
  }
  return bad;
}

double detector_activation(const Detector& d, const ActivationMap& a, const EnergyMap& e, double mu_e) {
  if (!(d.energy > 0.0)) throw InvalidOperands("detector has no creation energy");
  return receptive_sum(a, e, d.centre, d.radius, mu_e).energy / d.energy;
}

std::vector<ActiveDetector> active_detectors(const DetectorHierarchy& h, const ActivationMap& a, const EnergyMap& e,
                                             const DetectionConfig& cfg) {
  std::vector<ActiveDetector> out;
  for (const Detector* d : h.ordered()) {
    const double level = detector_activation(*d, a, e, cfg.mu_e);
    if (level > 0.0 && level >= cfg.mu_d) out.push_back({d, level});
  }
  return out;
}

std::vector<ActiveDetector> selected_detectors(const DetectorHierarchy& h, const ActivationMap& a,
                                               const EnergyMap& e, const DetectionConfig& cfg) {
  auto active = active_detectors(h, a, e, cfg);
  const double floor = std::max(cfg.mu_d, cfg.mu_c);
  std::erase_if(active, [&](const ActiveDetector& d) { return d.level < floor; });
  if (active.size() > cfg.max_active) {
    std::vector<double> levels;
    for (const auto& d : active) levels.push_back(d.level);
    std::nth_element(levels.begin(), levels.begin() + static_cast<std::ptrdiff_t>(cfg.max_active), levels.end(),
                     std::greater<>());
    const double cut = levels[cfg.max_active];
    std::erase_if(active, [&](const ActiveDetector& d) { return !(d.level > cut); });
  }
  return active;
}

ColouredCode embed(const DetectorHierarchy& h, const ActivationMap& a, const EnergyMap& e, const DetectionConfig& cfg) {
  const auto chosen = selected_detectors(h, a, e, cfg);
  if (chosen.empty()) return ColouredCode(h.output_bits);
  std::vector<ColouredCode> parts;
  parts.reserve(chosen.size());
  for (const auto& d : chosen) parts.emplace_back(d.detector->output, static_cast<ColourRank>(d.detector->layer));
  return colour_merge(parts, MergePolicy{cfg.sigma, Retention::keep_long_wave});
}

FeatureVector activation_vector(const DetectorHierarchy& h, const ActivationMap& a, const EnergyMap& e,
                                const DetectionConfig& cfg) {
  std::vector<double> v;
  for (const Detector* d : h.ordered()) v.push_back(std::clamp(detector_activation(*d, a, e, cfg.mu_e), 0.0, 1.0));
  return FeatureVector(std::move(v));
}

namespace {

nlohmann::ordered_json point_json(const Point& p) {
  if (const auto* c = std::get_if<BitCode>(&p)) return to_literal(*c);
  const auto v = std::get<FeatureVector>(p).values();
  return std::vector<double>(v.begin(), v.end());
}

Point point_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_literal(j.get<std::string>());
  return FeatureVector(j.get<std::vector<double>>());
}

}  // namespace

void write_hierarchy(std::ostream& out, const DetectorHierarchy& h) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["output_bits"] = h.output_bits;
  j["next_id"] = h.next_id;
  j["layers"] = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < h.layers.size(); ++l) {
    nlohmann::ordered_json layer;
    layer["lambda"] = h.lambdas[l];
    layer["detectors"] = nlohmann::ordered_json::array();
    for (const auto& d : h.layers[l]) {
      nlohmann::ordered_json dj;
      dj["id"] = d.id;
      dj["centre"] = {d.centre.y, d.centre.x};
      dj["radius"] = d.radius;
      dj["lambda"] = d.lambda;
      dj["count"] = d.count;
      dj["energy"] = d.energy;
      dj["output"] = to_literal(d.output);
      dj["probe"] = point_json(d.probe);
      layer["detectors"].push_back(std::move(dj));
    }
    j["layers"].push_back(std::move(layer));
  }
  out << j.dump(1) << '\n';
}

DetectorHierarchy read_hierarchy(std::istream& in) {
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("version").get<int>() != 1) throw FormatError("unsupported hierarchy version");
    std::vector<double> lambdas;
    for (const auto& layer : j.at("layers")) lambdas.push_back(layer.at("lambda").get<double>());
    DetectorHierarchy h = make_hierarchy(lambdas, j.at("output_bits").get<std::size_t>());
    h.next_id = j.at("next_id").get<std::size_t>();
    std::size_t l = 0;
    for (const auto& layer : j.at("layers")) {
      for (const auto& dj : layer.at("detectors")) {
        Detector d;
        d.id = dj.at("id").get<std::size_t>();
        d.layer = l;
        d.centre = {dj.at("centre").at(0).get<double>(), dj.at("centre").at(1).get<double>()};
        d.radius = dj.at("radius").get<double>();
        d.lambda = dj.at("lambda").get<double>();
        d.count = dj.at("count").get<std::size_t>();
        d.energy = dj.at("energy").get<double>();
        d.output = parse_literal(dj.at("output").get<std::string>());
        if (d.output.length() != h.output_bits) throw FormatError("detector output length mismatch");
        d.probe = point_from_json(dj.at("probe"));
        h.layers[l].push_back(std::move(d));
      }
      ++l;
    }
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad hierarchy document: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("bad hierarchy document: ") + e.what());
  }
}

void save_hierarchy(const std::filesystem::path& path, const DetectorHierarchy& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_hierarchy(out, h);
  if (!out) throw IoError("failed writing " + path.string());
}

DetectorHierarchy load_hierarchy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_hierarchy(in);
}

}  // namespace damp
