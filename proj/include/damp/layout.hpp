#pragma once

// Stochastic pairwise-swap layout of a code space.

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "damp/bitcode.hpp"
#include "damp/rng.hpp"
#include "damp/space.hpp"

namespace damp {

enum class LayoutMode { long_range, short_range };

std::string_view to_string(LayoutMode m);
LayoutMode layout_mode_from_string(std::string_view name);

struct CellPair {
  std::size_t a = 0;
  std::size_t b = 0;
};

struct PairBatch {
  std::vector<CellPair> pairs;
};

struct PairEnergy {
  double phi_c = 0.0;
  double phi_s = 0.0;
};

struct EnergyMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double radius = 0.0;
  double e_max = 1.0;
  std::vector<double> values;

  double at(std::size_t idx) const { return values.at(idx); }
};

// Thresholded similarity of two cells; empty cells give 0.
double cell_sim_lambda(const CodeSpace& space, std::size_t a, std::size_t b, const SimilarityConfig& cfg);

std::vector<PairEnergy> pair_energies_long(const CodeSpace& space, const PairBatch& batch,
                                           const SimilarityConfig& cfg, std::size_t threads = 1);
// Sums over the disc centred on the pair midpoint with radius max(r, pair separation).
std::vector<PairEnergy> pair_energies_short(const CodeSpace& space, const PairBatch& batch, double r,
                                            const SimilarityConfig& cfg, std::size_t threads = 1);

// Long range swaps when phi_s < phi_c, short range when phi_s > phi_c; ties stay.
std::size_t apply_swaps(CodeSpace& space, const PairBatch& batch, std::span<const PairEnergy> energies,
                        LayoutMode mode);

// Sum of sim_lambda / distance over occupied cells within r, self excluded.
double point_energy(const CodeSpace& space, std::size_t cell, double r, const SimilarityConfig& cfg);

// normalise_radius 0 normalises by the global maximum, otherwise by the maximum within that radius.
EnergyMap energy_map(const CodeSpace& space, double r_e, const SimilarityConfig& cfg, double normalise_radius = 0.0);

double layout_quality(const CodeSpace& space, const EnergyMap& map);
double layout_quality(const CodeSpace& space, double r_e, const SimilarityConfig& cfg);

// Sum over all point pairs of sim_lambda * distance.
double total_long_energy(const CodeSpace& space, const SimilarityConfig& cfg);

// Spearman rank correlation between raw similarity and negative grid distance over random pairs of
// distinct occupied cells.
double similarity_distance_spearman(const CodeSpace& space, std::size_t pairs, Metric metric, std::uint64_t seed);

// Draws occupied cells with probability proportional to -ln(max(E, floor)).
class EnergySampler {
 public:
  static constexpr double kFloor = 1e-6;

  EnergySampler(const CodeSpace& space, const EnergyMap& map);
  bool uniform() const noexcept { return cumulative_.empty(); }
  std::size_t draw(Rng& rng) const;
  const std::vector<std::size_t>& cells() const noexcept { return cells_; }

 private:
  std::vector<std::size_t> cells_;
  std::vector<double> cumulative_;
};

std::vector<std::size_t> energy_weighted_first_points(const CodeSpace& space, const EnergyMap& map, std::size_t count,
                                                      Rng& rng);

struct PairSelection {
  std::size_t pairs = 256;
  double radius = 1.0;
  // Pairs of two occupied cells with raw similarity below this are redrawn; 0 disables.
  double early_cutoff = 0.0;
  Metric metric = Metric::cosine_discrete;
  std::size_t attempts = 8;
};

// First cells from the sampler (uniform over occupied cells when null), second cells uniform
// within the radius. No cell appears twice in a batch; at most one side of a pair is empty.
PairBatch select_pairs(const CodeSpace& space, const PairSelection& sel, Rng& rng,
                       const EnergySampler* sampler = nullptr);

struct LayoutSchedule {
  LayoutMode mode = LayoutMode::long_range;
  double lambda_start = 0.65;
  double lambda_end = 0.8;
  double lambda_step = 0.05;
  // 0 selects half the larger grid side.
  double radius_start = 0.0;
  double radius_end = 1.0;
  double radius_factor = 0.25;
  std::size_t pairs_per_step = 256;
  double stop = 0.01;
  double short_radius = 3.0;
  double early_cutoff = 0.0;

  void validate() const;
  std::size_t stage_count(double radius0) const;
  double lambda_at(std::size_t stage) const;
  double radius_at(std::size_t stage, double radius0) const;
};

struct QualityConfig {
  double radius = 3.0;
  SimilarityConfig sim{Metric::cosine_discrete, 0.65};
  // Quality is sampled every this many steps (and at stage ends); 0 samples only at stage ends.
  std::size_t every = 1;
};

struct LayoutPlan {
  std::vector<LayoutSchedule> phases;
  Metric metric = Metric::cosine_discrete;
  double eta = std::numeric_limits<double>::infinity();
  std::size_t window = 10;
  std::size_t max_stage_steps = 20000;
  std::size_t max_total_steps = 200000;
  bool energy_weighted = false;
  std::size_t energy_refresh = 50;
  QualityConfig quality;
  std::size_t threads = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Long phase ramps lambda 0.65 to 0.8 and the selection radius from half the side down to 1,
// then a short phase polishes neighbourhoods. Uses the sigmoid threshold with eta 3.
LayoutPlan default_plan();

struct StepRecord {
  std::size_t step = 0;
  std::size_t phase = 0;
  std::size_t stage = 0;
  std::size_t batch = 0;
  std::size_t swaps = 0;
  double lambda = 0.0;
  double radius = 0.0;
  std::optional<double> quality;
};

struct StageRecord {
  std::size_t phase = 0;
  std::size_t stage = 0;
  LayoutMode mode = LayoutMode::long_range;
  double lambda = 0.0;
  double radius = 0.0;
  std::size_t steps = 0;
  double initial_rate = 0.0;
  double final_rate = 0.0;
  bool converged = false;
};

struct LayoutReport {
  std::vector<StepRecord> steps;
  std::vector<StageRecord> stages;
  bool converged = false;
  double initial_quality = 0.0;
  double final_quality = 0.0;
  std::size_t total_swaps = 0;
};

using ProgressSink = std::function<void(const StepRecord&)>;

// One select, evaluate, apply step. Returns (batch size, swaps).
std::pair<std::size_t, std::size_t> layout_step(CodeSpace& space, const LayoutSchedule& sched, double lambda,
                                                double radius, const LayoutPlan& plan, Rng& rng,
                                                const EnergySampler* sampler);

LayoutReport run_layout(CodeSpace& space, const LayoutPlan& plan, const ProgressSink& sink = {});

}  // namespace damp
