#include "damp/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace damp {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads typed fields of one JSON object and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }
  ~Fields() noexcept(false) {
    if (std::uncaught_exceptions() != 0) return;
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(join(path_, k), "unknown field");
    }
  }

  const Json* find(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string at(const std::string& key) const { return join(path_, key); }

  void get(const std::string& key, double& out) {
    if (const Json* v = find(key)) out = as_double(*v, at(key));
  }
  void get(const std::string& key, std::size_t& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
        throw ConfigError(at(key), "expected a non-negative integer");
      }
      out = v->get<std::size_t>();
    }
  }
  void get(const std::string& key, std::uint64_t& out, int) {
    if (const Json* v = find(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
        throw ConfigError(at(key), "expected a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }
  void get(const std::string& key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(at(key), "expected a boolean");
      out = v->get<bool>();
    }
  }
  template <class E, class Parse>
  void get_enum(const std::string& key, E& out, Parse parse) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(at(key), "expected a string");
      try {
        out = parse(v->get<std::string>());
      } catch (const Error& e) {
        throw ConfigError(at(key), e.what());
      }
    }
  }
  template <class T>
  void nested(const std::string& key, T& out) {
    if (const Json* v = find(key)) from_json(*v, out, at(key));
  }

  static double as_double(const Json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    }
    throw ConfigError(where, "expected a number");
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class T>
void validated(const T& cfg, const std::string& path) {
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(join(path, e.path()), std::string(e.what()).substr(e.path().size() + 2));
  }
}

Json number(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

PairMode pair_mode_from_string(std::string_view s) {
  if (s == "tuple") return PairMode::tuple;
  if (s == "merge") return PairMode::merge;
  throw InvalidOperands("unknown pair mode '" + std::string(s) + "'");
}

}  // namespace

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string(), std::string("malformed JSON: ") + e.what());
  }
}

void from_json(const Json& j, SimilarityConfig& out, const std::string& path) {
  {
    Fields f(j, path);
    f.get_enum("metric", out.metric, metric_from_string);
    f.get("lambda", out.lambda);
    f.get("eta", out.eta);
  }
  validated(out, path);
}

void from_json(const Json& j, ScalarSpaceConfig& out, const std::string& path) {
  {
    Fields f(j, path);
    f.get("lo", out.lo);
    f.get("hi", out.hi);
    f.get_enum("scale", out.scale, scale_from_string);
    f.get("layer_count", out.layer_count);
    f.get("overlap_fraction", out.overlap_fraction);
    f.get("code_length", out.code_length);
    f.get("bits_per_detector", out.bits_per_detector);
    f.get("multiplier", out.multiplier);
    f.get("seed", out.seed, 0);
  }
  validated(out, path);
}

void from_json(const Json& j, PolarConfig& out, const std::string& path) {
  {
    Fields f(j, path);
    f.get("angle_overlap_deg", out.angle_overlap_deg);
    f.get("modulus_overlap", out.modulus_overlap);
    f.get("layers", out.layers);
    f.get("code_length", out.code_length);
    f.get("bits_per_detector", out.bits_per_detector);
    f.get("base_sectors", out.base_sectors);
    f.get("min_radius", out.min_radius);
    f.get("modulus_lo", out.modulus_lo);
    f.get("modulus_hi", out.modulus_hi);
    f.get("seed", out.seed, 0);
  }
  validated(out, path);
}

void from_json(const Json& j, LexicalConfig& out, const std::string& path) {
  {
    Fields f(j, path);
    f.get("code_length", out.code_length);
    f.get("bits_per_symbol", out.bits_per_symbol);
    f.get("max_positions", out.max_positions);
    f.get_enum("indexing", out.indexing, position_indexing_from_string);
    f.get("omit_zeros", out.omit_zeros);
    f.get("seed", out.seed, 0);
  }
  validated(out, path);
}

void from_json(const Json& j, FuzzyConfig& out, const std::string& path) {
  {
    Fields f(j, path);
    f.get("code_length", out.code_length);
    f.get("bucket_count", out.bucket_count);
    f.get("mask_density", out.mask_density);
    f.get("seed", out.seed, 0);
  }
  validated(out, path);
}

void from_json(const Json& j, ListConfig& out, const std::string& path) {
  {
    Fields f(j, path);
    f.get("code_length", out.code_length);
    f.get("marker_bits", out.marker_bits);
    f.get_enum("mode", out.mode, pair_mode_from_string);
    f.get("match_threshold", out.match_threshold);
    f.get("merge_budget", out.merge_budget);
    f.nested("index_alphabet", out.index_alphabet);
    f.get("seed", out.seed, 0);
  }
  validated(out, path);
}

void from_json(const Json& j, LayoutSchedule& out, const std::string& path) {
  {
    Fields f(j, path);
    f.get_enum("mode", out.mode, layout_mode_from_string);
    f.get("lambda_start", out.lambda_start);
    f.get("lambda_end", out.lambda_end);
    f.get("lambda_step", out.lambda_step);
    f.get("radius_start", out.radius_start);
    f.get("radius_end", out.radius_end);
    f.get("radius_factor", out.radius_factor);
    f.get("pairs_per_step", out.pairs_per_step);
    f.get("stop", out.stop);
    f.get("short_radius", out.short_radius);
    f.get("early_cutoff", out.early_cutoff);
  }
  validated(out, path);
}

void from_json(const Json& j, QualityConfig& out, const std::string& path) {
  Fields f(j, path);
  f.get("radius", out.radius);
  f.nested("sim", out.sim);
  f.get("every", out.every);
}

void from_json(const Json& j, LayoutPlan& out, const std::string& path) {
  {
    Fields f(j, path);
    if (const Json* phases = f.find("phases")) {
      if (!phases->is_array()) throw ConfigError(f.at("phases"), "expected an array");
      out.phases.clear();
      for (std::size_t i = 0; i < phases->size(); ++i) {
        LayoutSchedule s;
        from_json((*phases)[i], s, f.at("phases[" + std::to_string(i) + "]"));
        out.phases.push_back(s);
      }
    }
    f.get_enum("metric", out.metric, metric_from_string);
    f.get("eta", out.eta);
    f.get("window", out.window);
    f.get("max_stage_steps", out.max_stage_steps);
    f.get("max_total_steps", out.max_total_steps);
    f.get("energy_weighted", out.energy_weighted);
    f.get("energy_refresh", out.energy_refresh);
    f.nested("quality", out.quality);
    f.get("threads", out.threads);
    f.get("seed", out.seed, 0);
  }
  validated(out, path);
}

void from_json(const Json& j, DbscanParams& out, const std::string& path) {
  Fields f(j, path);
  f.get("eps", out.eps);
  f.get("min_pts", out.min_pts);
}

void from_json(const Json& j, DetectionConfig& out, const std::string& path) {
  Fields f(j, path);
  f.get("mu", out.mu);
  f.get("mu_e", out.mu_e);
  f.get("mu_d", out.mu_d);
  f.get("mu_c", out.mu_c);
  f.get("max_active", out.max_active);
  f.get("sigma", out.sigma);
  f.get("r_a", out.r_a);
  f.get("lambda_a", out.lambda_a);
  f.get_enum("metric", out.metric, metric_from_string);
  f.get("eta", out.eta);
  f.nested("dbscan", out.dbscan);
}

void from_json(const Json& j, HierarchyBuild& out, const std::string& path) {
  {
    Fields f(j, path);
    if (const Json* l = f.find("lambdas")) {
      if (!l->is_array()) throw ConfigError(f.at("lambdas"), "expected an array");
      out.lambdas.clear();
      for (std::size_t i = 0; i < l->size(); ++i) {
        out.lambdas.push_back(Fields::as_double((*l)[i], f.at("lambdas[" + std::to_string(i) + "]")));
      }
    }
    f.get("output_bits", out.output_bits);
    f.get("budget", out.budget);
    f.get("max_samples", out.max_samples);
    f.get("seed", out.seed, 0);
  }
  validated(out, path);
}

void from_json(const Json& j, DictionaryConfig& out, const std::string& path) {
  {
    Fields f(j, path);
    f.get("min_word", out.min_word);
    f.get("max_word", out.max_word);
    f.get("min_prefix", out.min_prefix);
  }
  validated(out, path);
}

void from_json(const Json& j, TilingConfig& out, const std::string& path) {
  Fields f(j, path);
  f.get("max_tilings", out.max_tilings);
  f.get("max_kept", out.max_kept);
  if (out.max_tilings == 0) throw ConfigError(f.at("max_tilings"), "must be positive");
}

void from_json(const Json& j, SaturationTable& out, const std::string& path) {
  {
    Fields f(j, path);
    if (const Json* m = f.find("mode")) {
      if (!m->is_string()) throw ConfigError(f.at("mode"), "expected a string");
      try {
        const auto mode = saturation_mode_from_string(m->get<std::string>());
        if (mode != out.mode) {
          out = mode == SaturationMode::per_character  ? SaturationTable::per_character_default()
                : mode == SaturationMode::per_fragment ? SaturationTable::per_fragment_default()
                                                       : SaturationTable::analytic();
        }
      } catch (const InvalidOperands& e) {
        throw ConfigError(f.at("mode"), e.what());
      }
    }
    if (const Json* rows = f.find("rows")) {
      if (!rows->is_object()) throw ConfigError(f.at("rows"), "expected an object keyed by row length");
      out.rows.clear();
      for (const auto& [k, v] : rows->items()) {
        std::size_t n = 0;
        try {
          n = static_cast<std::size_t>(std::stoul(k));
        } catch (const std::exception&) {
          throw ConfigError(f.at("rows." + k), "row keys must be integers");
        }
        if (!v.is_array()) throw ConfigError(f.at("rows." + k), "expected an array");
        std::vector<std::size_t> row;
        for (const auto& x : v) {
          if (!x.is_number_unsigned()) throw ConfigError(f.at("rows." + k), "expected non-negative integers");
          row.push_back(x.get<std::size_t>());
        }
        out.rows[n] = std::move(row);
      }
    }
    f.get("sigma_max", out.sigma_max);
    f.get("cdf_mean", out.cdf_mean);
    f.get("cdf_sd_fraction", out.cdf_sd_fraction);
  }
  validated(out, path);
}

void from_json(const Json& j, MorphConfig& out, const std::string& path) {
  {
    Fields f(j, path);
    f.nested("dictionary", out.dictionary);
    f.nested("tiling", out.tiling);
    f.nested("table", out.table);
    f.nested("alphabet", out.alphabet);
    f.get("fill_margin", out.fill_margin);
    f.get("seed", out.seed, 0);
  }
  validated(out, path);
}

Json to_json(const SimilarityConfig& c) {
  return {{"metric", std::string(to_string(c.metric))}, {"lambda", c.lambda}, {"eta", number(c.eta)}};
}

Json to_json(const ScalarSpaceConfig& c) {
  return {{"lo", c.lo},
          {"hi", c.hi},
          {"scale", std::string(to_string(c.scale))},
          {"layer_count", c.layer_count},
          {"overlap_fraction", c.overlap_fraction},
          {"code_length", c.code_length},
          {"bits_per_detector", c.bits_per_detector},
          {"multiplier", c.multiplier},
          {"seed", c.seed}};
}

Json to_json(const PolarConfig& c) {
  return {{"angle_overlap_deg", c.angle_overlap_deg},
          {"modulus_overlap", c.modulus_overlap},
          {"layers", c.layers},
          {"code_length", c.code_length},
          {"bits_per_detector", c.bits_per_detector},
          {"base_sectors", c.base_sectors},
          {"min_radius", c.min_radius},
          {"modulus_lo", c.modulus_lo},
          {"modulus_hi", c.modulus_hi},
          {"seed", c.seed}};
}

Json to_json(const LexicalConfig& c) {
  return {{"code_length", c.code_length},
          {"bits_per_symbol", c.bits_per_symbol},
          {"max_positions", c.max_positions},
          {"indexing", std::string(to_string(c.indexing))},
          {"omit_zeros", c.omit_zeros},
          {"seed", c.seed}};
}

Json to_json(const FuzzyConfig& c) {
  return {{"code_length", c.code_length},
          {"bucket_count", c.bucket_count},
          {"mask_density", c.mask_density},
          {"seed", c.seed}};
}

Json to_json(const ListConfig& c) {
  return {{"code_length", c.code_length},
          {"marker_bits", c.marker_bits},
          {"mode", c.mode == PairMode::tuple ? "tuple" : "merge"},
          {"match_threshold", c.match_threshold},
          {"merge_budget", c.merge_budget},
          {"index_alphabet", to_json(c.index_alphabet)},
          {"seed", c.seed}};
}

Json to_json(const LayoutSchedule& c) {
  return {{"mode", std::string(to_string(c.mode))},
          {"lambda_start", c.lambda_start},
          {"lambda_end", c.lambda_end},
          {"lambda_step", c.lambda_step},
          {"radius_start", c.radius_start},
          {"radius_end", c.radius_end},
          {"radius_factor", c.radius_factor},
          {"pairs_per_step", c.pairs_per_step},
          {"stop", c.stop},
          {"short_radius", c.short_radius},
          {"early_cutoff", c.early_cutoff}};
}

Json to_json(const QualityConfig& c) {
  return {{"radius", c.radius}, {"sim", to_json(c.sim)}, {"every", c.every}};
}

Json to_json(const LayoutPlan& c) {
  Json phases = Json::array();
  for (const auto& p : c.phases) phases.push_back(to_json(p));
  return {{"phases", phases},
          {"metric", std::string(to_string(c.metric))},
          {"eta", number(c.eta)},
          {"window", c.window},
          {"max_stage_steps", c.max_stage_steps},
          {"max_total_steps", c.max_total_steps},
          {"energy_weighted", c.energy_weighted},
          {"energy_refresh", c.energy_refresh},
          {"quality", to_json(c.quality)},
          {"threads", c.threads},
          {"seed", c.seed}};
}

Json to_json(const DbscanParams& c) { return {{"eps", c.eps}, {"min_pts", c.min_pts}}; }

Json to_json(const DetectionConfig& c) {
  return {{"mu", c.mu},
          {"mu_e", c.mu_e},
          {"mu_d", c.mu_d},
          {"mu_c", c.mu_c},
          {"max_active", c.max_active},
          {"sigma", c.sigma},
          {"r_a", c.r_a},
          {"lambda_a", c.lambda_a},
          {"metric", std::string(to_string(c.metric))},
          {"eta", number(c.eta)},
          {"dbscan", to_json(c.dbscan)}};
}

Json to_json(const HierarchyBuild& c) {
  return {{"lambdas", c.lambdas},
          {"output_bits", c.output_bits},
          {"budget", c.budget},
          {"max_samples", c.max_samples},
          {"seed", c.seed}};
}

Json to_json(const DictionaryConfig& c) {
  return {{"min_word", c.min_word}, {"max_word", c.max_word}, {"min_prefix", c.min_prefix}};
}

Json to_json(const TilingConfig& c) { return {{"max_tilings", c.max_tilings}, {"max_kept", c.max_kept}}; }

Json to_json(const SaturationTable& c) {
  Json rows = Json::object();
  for (const auto& [n, row] : c.rows) rows[std::to_string(n)] = row;
  return {{"mode", std::string(to_string(c.mode))},
          {"rows", rows},
          {"sigma_max", c.sigma_max},
          {"cdf_mean", c.cdf_mean},
          {"cdf_sd_fraction", c.cdf_sd_fraction}};
}

Json to_json(const MorphConfig& c) {
  return {{"dictionary", to_json(c.dictionary)},
          {"tiling", to_json(c.tiling)},
          {"table", to_json(c.table)},
          {"alphabet", to_json(c.alphabet)},
          {"fill_margin", c.fill_margin},
          {"seed", c.seed}};
}

void GradientSpaceConfig::validate() const {
  if (angles == 0) throw ConfigError("angles", "must be positive");
  if (moduli < 2) throw ConfigError("moduli", "must be at least 2");
  if (!(fill_margin >= 0.0)) throw ConfigError("fill_margin", "must be non-negative");
}

void EnergyConfig::validate() const {
  if (!(radius > 0.0)) throw ConfigError("radius", "must be positive");
  if (!(normalise_radius >= 0.0)) throw ConfigError("normalise_radius", "must be non-negative");
  validated(similarity, "similarity");
}

void from_json(const Json& j, GradientSpaceConfig& out, const std::string& path) {
  {
    Fields f(j, path);
    f.get("angles", out.angles);
    f.get("moduli", out.moduli);
    f.get("fill_margin", out.fill_margin);
  }
  validated(out, path);
}

void from_json(const Json& j, EnergyConfig& out, const std::string& path) {
  {
    Fields f(j, path);
    f.get("radius", out.radius);
    f.nested("similarity", out.similarity);
    f.get("normalise_radius", out.normalise_radius);
  }
  validated(out, path);
}

void from_json(const Json& j, RunConfig& out, const std::string& path) {
  Fields f(j, path);
  if (f.find("seed") != nullptr) {
    std::uint64_t seed = 0;
    f.get("seed", seed, 0);
    out.seed = seed;
  }
  f.nested("polar", out.polar);
  f.nested("gradient", out.gradient);
  f.nested("layout", out.layout);
  f.nested("energy", out.energy);
  f.nested("detection", out.detection);
  f.nested("hierarchy", out.hierarchy);
  f.nested("morph", out.morph);
  f.nested("fuzzy", out.fuzzy);
  f.nested("scalar", out.scalar);
  f.nested("lexical", out.lexical);
  try {
    out.detection.validate(out.hierarchy.output_bits);
  } catch (const ConfigError& e) {
    throw ConfigError(join(path, "detection." + e.path()), std::string(e.what()).substr(e.path().size() + 2));
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig cfg;
  from_json(load_json_file(path), cfg);
  return cfg;
}

Json to_json(const GradientSpaceConfig& c) {
  return {{"angles", c.angles}, {"moduli", c.moduli}, {"fill_margin", c.fill_margin}};
}

Json to_json(const EnergyConfig& c) {
  return {{"radius", c.radius}, {"similarity", to_json(c.similarity)}, {"normalise_radius", c.normalise_radius}};
}

Json to_json(const RunConfig& c) {
  Json j = Json::object();
  if (c.seed) j["seed"] = *c.seed;
  j["polar"] = to_json(c.polar);
  j["gradient"] = to_json(c.gradient);
  j["layout"] = to_json(c.layout);
  j["energy"] = to_json(c.energy);
  j["detection"] = to_json(c.detection);
  j["hierarchy"] = to_json(c.hierarchy);
  j["morph"] = to_json(c.morph);
  j["fuzzy"] = to_json(c.fuzzy);
  j["scalar"] = to_json(c.scalar);
  j["lexical"] = to_json(c.lexical);
  return j;
}

}  // namespace damp
