#pragma once

// JSON documents for every configuration struct. Readers reject unknown keys and report the
// offending field path in ConfigError.

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "damp/detect.hpp"
#include "damp/encoders.hpp"
#include "damp/layout.hpp"
#include "damp/memory.hpp"
#include "damp/morph.hpp"

namespace damp {

using Json = nlohmann::ordered_json;

// The 100 x 100 (angle, modulus) polar gradient problem.
struct GradientSpaceConfig {
  std::size_t angles = 100;
  std::size_t moduli = 100;
  double fill_margin = 0.0;

  void validate() const;
};

// Energy map parameters shared by quality, visualisation and detection.
struct EnergyConfig {
  double radius = 3.0;
  SimilarityConfig similarity{Metric::cosine_discrete, 0.65};
  double normalise_radius = 0.0;

  void validate() const;
};

// One configuration document for every CLI subcommand; each section is optional.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  PolarConfig polar;
  GradientSpaceConfig gradient;
  LayoutPlan layout = default_plan();
  EnergyConfig energy;
  DetectionConfig detection;
  HierarchyBuild hierarchy;
  MorphConfig morph;
  FuzzyConfig fuzzy;
  ScalarSpaceConfig scalar;
  LexicalConfig lexical;
};

Json load_json_file(const std::filesystem::path& path);

// Missing fields keep the defaults already in out.
void from_json(const Json& j, SimilarityConfig& out, const std::string& path = "");
void from_json(const Json& j, ScalarSpaceConfig& out, const std::string& path = "");
void from_json(const Json& j, PolarConfig& out, const std::string& path = "");
void from_json(const Json& j, LexicalConfig& out, const std::string& path = "");
void from_json(const Json& j, FuzzyConfig& out, const std::string& path = "");
void from_json(const Json& j, ListConfig& out, const std::string& path = "");
void from_json(const Json& j, LayoutSchedule& out, const std::string& path = "");
void from_json(const Json& j, QualityConfig& out, const std::string& path = "");
void from_json(const Json& j, LayoutPlan& out, const std::string& path = "");
void from_json(const Json& j, DbscanParams& out, const std::string& path = "");
void from_json(const Json& j, DetectionConfig& out, const std::string& path = "");
void from_json(const Json& j, HierarchyBuild& out, const std::string& path = "");
void from_json(const Json& j, DictionaryConfig& out, const std::string& path = "");
void from_json(const Json& j, TilingConfig& out, const std::string& path = "");
void from_json(const Json& j, SaturationTable& out, const std::string& path = "");
void from_json(const Json& j, MorphConfig& out, const std::string& path = "");
void from_json(const Json& j, GradientSpaceConfig& out, const std::string& path = "");
void from_json(const Json& j, EnergyConfig& out, const std::string& path = "");
void from_json(const Json& j, RunConfig& out, const std::string& path = "");

RunConfig load_run_config(const std::filesystem::path& path);

Json to_json(const SimilarityConfig& c);
Json to_json(const ScalarSpaceConfig& c);
Json to_json(const PolarConfig& c);
Json to_json(const LexicalConfig& c);
Json to_json(const FuzzyConfig& c);
Json to_json(const ListConfig& c);
Json to_json(const LayoutSchedule& c);
Json to_json(const QualityConfig& c);
Json to_json(const LayoutPlan& c);
Json to_json(const DbscanParams& c);
Json to_json(const DetectionConfig& c);
Json to_json(const HierarchyBuild& c);
Json to_json(const DictionaryConfig& c);
Json to_json(const TilingConfig& c);
Json to_json(const SaturationTable& c);
Json to_json(const MorphConfig& c);
Json to_json(const GradientSpaceConfig& c);
Json to_json(const EnergyConfig& c);
Json to_json(const RunConfig& c);

}  // namespace damp
