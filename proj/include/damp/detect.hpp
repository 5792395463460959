#pragma once

// Activation of a laid-out space, detector hierarchies and structural embeddings.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "damp/bitcode.hpp"
#include "damp/chroma.hpp"
#include "damp/layout.hpp"
#include "damp/space.hpp"

namespace damp {

struct ActivationMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double lambda_a = 0.0;
  std::vector<double> values;

  double at(std::size_t idx) const { return values.at(idx); }
};

struct Vec2 {
  double y = 0.0;
  double x = 0.0;
};

// Per-cell maximum of sim_lambda over the stimuli.
ActivationMap activate(const CodeSpace& space, std::span<const Point> stimuli, const SimilarityConfig& sim);

// Activation by the centre cell's own code, restricted to the disc of radius r_a; zero elsewhere.
ActivationMap activate_local(const CodeSpace& space, std::size_t centre, double r_a, const SimilarityConfig& sim);

struct DbscanParams {
  double eps = 1.9;
  std::size_t min_pts = 4;
};

using PointCluster = std::vector<std::size_t>;

// DBSCAN over cells with a > 0 and e >= mu. Clusters are ordered by their smallest cell index.
std::vector<PointCluster> cluster_activated(const ActivationMap& a, const EnergyMap& e, double mu,
                                            const DbscanParams& params = {});

// Mean of cell coordinates weighted by a * e.
Vec2 cluster_centroid(const PointCluster& cluster, const ActivationMap& a, const EnergyMap& e);

// Radius r(p) maximising |{q : r(q) <= r(p)}| / (pi (r(p) + pad)^2). Points at the centroid are
// counted but never chosen; ties go to the smaller radius; the result is at least floor.
double optimal_radius(std::span<const Vec2> points, Vec2 centroid, double pad = 0.5, double floor = 1.0);

struct Detector {
  std::size_t id = 0;
  std::size_t layer = 0;
  Vec2 centre;
  double radius = 1.0;
  double lambda = 0.0;
  std::size_t count = 0;
  double energy = 0.0;
  BitCode output;
  // Code whose activation at lambda defined count and energy.
  Point probe;

  double fill_factor() const noexcept { return static_cast<double>(count) / radius; }
};

struct ReceptiveSum {
  std::size_t count = 0;
  double energy = 0.0;
};

// Sum of a * e over cells with e >= mu and |cell - centre| <= r; count covers cells with a > 0.
ReceptiveSum receptive_sum(const ActivationMap& a, const EnergyMap& e, Vec2 centre, double r, double mu);

struct DetectorHierarchy {
  std::vector<double> lambdas;
  std::vector<std::vector<Detector>> layers;
  std::size_t output_bits = 256;
  std::size_t next_id = 0;

  std::size_t size() const noexcept;
  std::vector<const Detector*> ordered() const;
};

DetectorHierarchy make_hierarchy(std::vector<double> lambdas, std::size_t output_bits);

// Overlap means |c_d - c_e| <= max(r_d, r_e). Inserted if nothing overlaps, or if the candidate's
// fill factor is strictly above every overlapped detector's, which are then removed.
bool try_insert(DetectorHierarchy& h, Detector candidate);

struct DetectionConfig {
  double mu = 0.05;
  double mu_e = 0.05;
  double mu_d = 0.5;
  double mu_c = 0.0;
  std::size_t max_active = 50;
  std::size_t sigma = 50;
  double r_a = 8.0;
  // Stimulus activation threshold, near the lambda the layout finished at.
  double lambda_a = 0.8;
  Metric metric = Metric::cosine_discrete;
  double eta = std::numeric_limits<double>::infinity();
  DbscanParams dbscan;

  void validate(std::size_t output_bits) const;
};

struct HierarchyBuild {
  std::vector<double> lambdas{0.5, 0.6, 0.7, 0.8};
  std::size_t output_bits = 256;
  // Consecutive samples without a change that close a layer.
  std::size_t budget = 200;
  std::size_t max_samples = 20000;
  std::uint64_t seed = 0;

  void validate() const;
};

DetectorHierarchy build_hierarchy(const CodeSpace& space, const EnergyMap& e, const HierarchyBuild& build,
                                  const DetectionConfig& cfg);

// Pairs (d, e) of one layer with |c_d - c_e| <= max(r_d, r_e).
std::size_t containment_violations(const DetectorHierarchy& h);

double detector_activation(const Detector& d, const ActivationMap& a, const EnergyMap& e, double mu_e);

struct ActiveDetector {
  const Detector* detector = nullptr;
  double level = 0.0;
};

// Detectors with activation >= mu_d, in (layer, id) order.
std::vector<ActiveDetector> active_detectors(const DetectorHierarchy& h, const ActivationMap& a, const EnergyMap& e,
                                             const DetectionConfig& cfg);

// Detectors above max(mu_d, mu_c), keeping only levels strictly above the (K+1)-th when more than K remain.
std::vector<ActiveDetector> selected_detectors(const DetectorHierarchy& h, const ActivationMap& a,
                                               const EnergyMap& e, const DetectionConfig& cfg);

ColouredCode embed(const DetectorHierarchy& h, const ActivationMap& a, const EnergyMap& e, const DetectionConfig& cfg);

// Activation levels clamped to [0, 1] in (layer, id) order.
FeatureVector activation_vector(const DetectorHierarchy& h, const ActivationMap& a, const EnergyMap& e,
                                const DetectionConfig& cfg);

void write_hierarchy(std::ostream& out, const DetectorHierarchy& h);
DetectorHierarchy read_hierarchy(std::istream& in);
void save_hierarchy(const std::filesystem::path& path, const DetectorHierarchy& h);
DetectorHierarchy load_hierarchy(const std::filesystem::path& path);

}  // namespace damp
