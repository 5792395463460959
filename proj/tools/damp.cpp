// damp command-line front end.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "damp/config.hpp"
#include "damp/detect.hpp"
#include "damp/encoders.hpp"
#include "damp/image.hpp"
#include "damp/layout.hpp"
#include "damp/memory.hpp"
#include "damp/morph.hpp"
#include "damp/space.hpp"

namespace fs = std::filesystem;
using namespace damp;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kNotConverged = 3, kIo = 4 };

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string out = ".";
};

// Sub-stream ids for the run seed.
enum Stream : std::uint64_t { kPlacement = 1, kLayout = 2, kHierarchy = 3, kMorphPlacement = 4 };

RunConfig load_config(const Globals& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  cfg.layout.threads = g.threads;
  return cfg;
}

// Command line beats the config document; otherwise a fresh seed is drawn and echoed.
std::uint64_t resolve_seed(const Globals& g, const RunConfig& cfg) {
  if (g.seed) return *g.seed;
  if (cfg.seed) return *cfg.seed;
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "damp: generated seed " << seed << '\n';
  return seed;
}

fs::path out_dir(const Globals& g) {
  fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void write_run_record(const fs::path& dir, const std::string& command, std::uint64_t seed, const RunConfig& cfg) {
  Json j;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = to_json(cfg);
  auto out = open_out(dir / "run.json");
  out << j.dump(2) << '\n';
}

EnergyMap energy_of(const CodeSpace& space, const EnergyConfig& e) {
  return energy_map(space, e.radius, e.similarity, e.normalise_radius);
}

void write_views(const fs::path& dir, const CodeSpace& space, const EnergyMap& map) {
  save_pgm(dir / "energy.pgm", energy_image(map));
  save_ppm(dir / "composite.ppm", composite_image(space, map));
}

SimilarityConfig activation_sim(const DetectionConfig& d) { return {d.metric, d.lambda_a, d.eta}; }

// "literal" or "id<TAB>literal"; bare literals are numbered from 0.
std::vector<std::pair<std::string, Point>> read_stimuli(const fs::path& path) {
  std::vector<std::pair<std::string, Point>> out;
  for (const auto& line : read_lines(path)) {
    const auto tab = line.find('\t');
    std::string id = tab == std::string::npos ? std::to_string(out.size()) : line.substr(0, tab);
    const std::string lit = tab == std::string::npos ? line : line.substr(tab + 1);
    out.emplace_back(std::move(id), parse_coloured_literal(lit).code());
  }
  return out;
}

void check_dims(const CodeSpace& space, const Point& p) {
  if (point_length(p) != space.code_bits()) {
    throw InvalidOperands("stimulus has " + std::to_string(point_length(p)) + " bits, space codes have " +
                          std::to_string(space.code_bits()));
  }
}

Json embedding_record(const std::string& id, const ColouredCode& code, std::span<const ActiveDetector> active) {
  Json j;
  j["stimulus"] = id;
  j["code"] = to_literal(code);
  Json ids = Json::array();
  Json levels = Json::array();
  for (const auto& a : active) {
    ids.push_back(a.detector->id);
    levels.push_back(a.level);
  }
  j["detectors"] = ids;
  j["levels"] = levels;
  return j;
}

Gray16Image heatmap_image(const std::vector<std::vector<double>>& m) {
  const std::size_t n = m.size();
  Gray16Image img{n, n, std::vector<std::uint16_t>(n * n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = std::clamp(m[i][j], 0.0, 1.0);
      img.pixels[i * n + j] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    }
  }
  return img;
}

std::vector<std::u32string> words_from(const std::vector<std::string>& utf8, const DictionaryConfig& cfg) {
  std::vector<std::u32string> words;
  for (const auto& w : utf8) {
    for (auto& x : corpus_words(w, cfg)) words.push_back(std::move(x));
  }
  return words;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete code-space layout, detector hierarchies and structural embeddings"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON configuration document")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Run seed for stochastic commands");
  app.add_option("--threads", g.threads, "Worker threads for layout evaluation")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory");

  int status = kOk;

  // encode
  std::string encoder = "scalar";
  std::vector<std::string> values;
  auto* encode = app.add_subcommand("encode", "Print coloured code literals for values");
  encode->add_option("--encoder", encoder, "scalar, polar (angle,modulus), integer or word")
      ->check(CLI::IsMember({"scalar", "polar", "integer", "word"}));
  encode->add_option("values", values, "Values to encode")->required();
  encode->callback([&] {
    const RunConfig cfg = load_config(g);
    if (encoder == "scalar") {
      const auto space = build_scalar_space(cfg.scalar);
      for (const auto& v : values) std::cout << to_literal(encode_scalar(space, std::stod(v))) << '\n';
    } else if (encoder == "polar") {
      const auto enc = build_polar_encoder(cfg.polar);
      for (const auto& v : values) {
        const auto comma = v.find(',');
        if (comma == std::string::npos) throw CLI::ValidationError("polar values are angle,modulus");
        std::cout << to_literal(encode_polar(enc, std::stod(v.substr(0, comma)), std::stod(v.substr(comma + 1))))
                  << '\n';
      }
    } else if (encoder == "integer") {
      const LexicalAlphabet alphabet(cfg.lexical);
      for (const auto& v : values) std::cout << to_literal(encode_integer_lexical(std::stoll(v), alphabet)) << '\n';
    } else {
      const LexicalAlphabet alphabet(cfg.lexical);
      for (const auto& v : values) std::cout << to_literal(encode_word_positional(v, alphabet)) << '\n';
    }
  });

  // gradient-space
  auto* gradient = app.add_subcommand("gradient-space", "Polar gradient code space and its resolution report");
  gradient->callback([&] {
    RunConfig cfg = load_config(g);
    const std::uint64_t seed = resolve_seed(g, cfg);
    const auto dir = out_dir(g);
    const auto enc = build_polar_encoder(cfg.polar);
    const auto codes = gradient_codes(enc, cfg.gradient.angles, cfg.gradient.moduli);
    std::vector<Point> points;
    std::vector<BitCode> bits;
    std::vector<std::string> payloads;
    for (std::size_t k = 0; k < codes.size(); ++k) {
      points.emplace_back(codes[k].code());
      bits.push_back(codes[k].code());
      payloads.push_back(std::to_string(k / cfg.gradient.moduli) + "," + std::to_string(k % cfg.gradient.moduli));
    }
    const CodeSpace space = init_space(points, cfg.gradient.fill_margin, derive_seed(seed, kPlacement), payloads);
    save_space(dir / "space.jsonl", space);
    const auto r = code_resolution(bits);
    Json rep{{"points", r.points},
             {"distinct", r.distinct},
             {"largest_cluster", r.largest_cluster},
             {"ratio", r.ratio},
             {"seed", seed}};
    open_out(dir / "resolution.json") << rep.dump(2) << '\n';
    write_run_record(dir, "gradient-space", seed, cfg);
    std::cout << rep.dump() << '\n';
  });

  // layout
  std::string input;
  std::optional<std::size_t> steps;
  auto* layout = app.add_subcommand("layout", "Run the layout schedule over a code space");
  layout->add_option("--input", input, "Code space container")->required();
  layout->add_option("--steps", steps, "Step limit; 0 copies the input through");
  layout->callback([&] {
    RunConfig cfg = load_config(g);
    const std::uint64_t seed = resolve_seed(g, cfg);
    CodeSpace space = load_space(input);
    const auto dir = out_dir(g);
    auto csv = open_out(dir / "layout.csv");
    csv << "step,swaps,quality,lambda,radius\n";
    bool converged = true;
    if (!steps || *steps > 0) {
      cfg.layout.seed = derive_seed(seed, kLayout);
      if (steps) cfg.layout.max_total_steps = *steps;
      const auto report = run_layout(space, cfg.layout, [&](const StepRecord& r) {
        csv << r.step << ',' << r.swaps << ',';
        if (r.quality) csv << *r.quality;
        csv << ',' << r.lambda << ',' << r.radius << '\n';
      });
      converged = report.converged;
      std::cout << Json{{"initial_quality", report.initial_quality},
                        {"final_quality", report.final_quality},
                        {"steps", report.steps.size()},
                        {"swaps", report.total_swaps},
                        {"converged", report.converged}}
                       .dump()
                << '\n';
    }
    if (!csv) throw IoError("failed writing layout.csv");
    save_space(dir / "space.jsonl", space);
    write_views(dir, space, energy_of(space, cfg.energy));
    write_run_record(dir, "layout", seed, cfg);
    if (!converged) {
      std::cerr << "damp: layout did not converge within the step limits\n";
      status = kNotConverged;
    }
  });

  // energy-map
  auto* energy = app.add_subcommand("energy-map", "Point energy map as 16-bit PGM and layout quality");
  energy->add_option("--input", input, "Code space container")->required();
  energy->callback([&] {
    const RunConfig cfg = load_config(g);
    const CodeSpace space = load_space(input);
    const auto map = energy_of(space, cfg.energy);
    save_pgm(out_dir(g) / "energy.pgm", energy_image(map));
    std::cout << Json{{"quality", layout_quality(space, map)}, {"e_max", map.e_max}}.dump() << '\n';
  });

  // viz
  auto* viz = app.add_subcommand("viz", "Colour composite of a code space as PPM");
  viz->add_option("--input", input, "Code space container")->required();
  viz->callback([&] {
    const RunConfig cfg = load_config(g);
    const CodeSpace space = load_space(input);
    write_views(out_dir(g), space, energy_of(space, cfg.energy));
  });

  // build-detectors
  auto* build = app.add_subcommand("build-detectors", "Build a detector hierarchy over a laid-out space");
  build->add_option("--input", input, "Code space container")->required();
  build->callback([&] {
    RunConfig cfg = load_config(g);
    const std::uint64_t seed = resolve_seed(g, cfg);
    const CodeSpace space = load_space(input);
    cfg.hierarchy.seed = derive_seed(seed, kHierarchy);
    const auto h = build_hierarchy(space, energy_of(space, cfg.energy), cfg.hierarchy, cfg.detection);
    const auto dir = out_dir(g);
    save_hierarchy(dir / "hierarchy.json", h);
    write_run_record(dir, "build-detectors", seed, cfg);
    Json layers = Json::array();
    for (const auto& l : h.layers) layers.push_back(l.size());
    std::cout << Json{{"detectors", h.size()}, {"layers", layers}}.dump() << '\n';
  });

  // activate
  std::string hierarchy_path;
  std::vector<std::string> stimulus_literals;
  auto* activate_cmd = app.add_subcommand("activate", "Activate a space by stimuli and list active detectors");
  activate_cmd->add_option("--input", input, "Code space container")->required();
  activate_cmd->add_option("--hierarchy", hierarchy_path, "Detector hierarchy JSON")->required();
  activate_cmd->add_option("--stimulus", stimulus_literals, "Code literal")->required();
  activate_cmd->callback([&] {
    const RunConfig cfg = load_config(g);
    const CodeSpace space = load_space(input);
    const auto h = load_hierarchy(hierarchy_path);
    std::vector<Point> stimuli;
    for (const auto& lit : stimulus_literals) {
      stimuli.emplace_back(parse_coloured_literal(lit).code());
      check_dims(space, stimuli.back());
    }
    const auto e = energy_of(space, cfg.energy);
    const auto a = activate(space, stimuli, activation_sim(cfg.detection));
    EnergyMap view{a.rows, a.cols, 0.0, 1.0, a.values};
    save_pgm(out_dir(g) / "activation.pgm", energy_image(view));
    for (const auto& d : active_detectors(h, a, e, cfg.detection)) {
      std::cout << Json{{"id", d.detector->id}, {"layer", d.detector->layer}, {"level", d.level}}.dump() << '\n';
    }
  });

  // embed
  std::string stimuli_path;
  auto* embed_cmd = app.add_subcommand("embed", "Structural embeddings of stimuli as JSON lines");
  embed_cmd->add_option("--input", input, "Code space container")->required();
  embed_cmd->add_option("--hierarchy", hierarchy_path, "Detector hierarchy JSON")->required();
  embed_cmd->add_option("--stimuli", stimuli_path, "One literal per line, optionally id<TAB>literal")->required();
  embed_cmd->callback([&] {
    const RunConfig cfg = load_config(g);
    const CodeSpace space = load_space(input);
    const auto h = load_hierarchy(hierarchy_path);
    const auto e = energy_of(space, cfg.energy);
    auto out = open_out(out_dir(g) / "embeddings.jsonl");
    for (const auto& [id, p] : read_stimuli(stimuli_path)) {
      check_dims(space, p);
      const auto a = activate(space, std::span<const Point>(&p, 1), activation_sim(cfg.detection));
      const auto sel = selected_detectors(h, a, e, cfg.detection);
      out << embedding_record(id, embed(h, a, e, cfg.detection), sel).dump() << '\n';
    }
    if (!out) throw IoError("failed writing embeddings.jsonl");
  });

  // dict-build
  std::string corpus;
  auto* dict_build = app.add_subcommand("dict-build", "Fragment dictionary from a UTF-8 corpus");
  dict_build->add_option("--corpus", corpus, "UTF-8 text")->required();
  dict_build->callback([&] {
    const RunConfig cfg = load_config(g);
    const auto dict = build_dictionary(read_text(corpus), cfg.morph.dictionary);
    save_dictionary(out_dir(g) / "dictionary.json", dict);
    std::cout << Json{{"tokens", dict.size()}}.dump() << '\n';
  });

  // morph-fill
  std::string dictionary_path;
  auto* morph_fill = app.add_subcommand("morph-fill", "Code space of accented word fragmentations");
  morph_fill->add_option("--corpus", corpus, "UTF-8 text")->required();
  morph_fill->add_option("--dictionary", dictionary_path, "Fragment dictionary JSON")->required();
  morph_fill->callback([&] {
    RunConfig cfg = load_config(g);
    const std::uint64_t seed = resolve_seed(g, cfg);
    const auto dict = load_dictionary(dictionary_path);
    cfg.morph.seed = derive_seed(seed, kMorphPlacement);
    const auto words = corpus_words(read_text(corpus), cfg.morph.dictionary);
    const auto space = fill_morph_space(words, dict, cfg.morph);
    const auto dir = out_dir(g);
    save_space(dir / "space.jsonl", space);
    write_run_record(dir, "morph-fill", seed, cfg);
    std::cout << Json{{"points", space.point_count()}, {"side", space.rows()}}.dump() << '\n';
  });

  // morph-embed
  std::vector<std::string> embed_words;
  auto* morph_embed = app.add_subcommand("morph-embed", "Word embeddings and their similarity heatmap");
  morph_embed->add_option("--input", input, "Laid-out morphology space")->required();
  morph_embed->add_option("--hierarchy", hierarchy_path, "Detector hierarchy JSON")->required();
  morph_embed->add_option("--dictionary", dictionary_path, "Fragment dictionary JSON")->required();
  morph_embed->add_option("words", embed_words, "Words to embed")->required();
  morph_embed->callback([&] {
    const RunConfig cfg = load_config(g);
    const CodeSpace space = load_space(input);
    const auto h = load_hierarchy(hierarchy_path);
    const auto dict = load_dictionary(dictionary_path);
    const auto e = energy_of(space, cfg.energy);
    const auto words = words_from(embed_words, cfg.morph.dictionary);
    std::vector<ColouredCode> codes;
    const auto dir = out_dir(g);
    auto out = open_out(dir / "embeddings.jsonl");
    for (const auto& w : words) {
      codes.push_back(word_embedding(w, space, e, h, dict, cfg.morph, cfg.detection));
      out << Json{{"word", encode_utf8(w)}, {"code", to_literal(codes.back())}}.dump() << '\n';
    }
    if (!out) throw IoError("failed writing embeddings.jsonl");
    save_pgm(dir / "heatmap.pgm", heatmap_image(similarity_heatmap(codes)));
  });

  // fuzzy-store
  std::string codes_path;
  auto* fuzzy_store = app.add_subcommand("fuzzy-store", "Build a fuzzy store file from code literals");
  fuzzy_store->add_option("--codes", codes_path, "One literal per line, optionally literal<TAB>payload")->required();
  fuzzy_store->callback([&] {
    const RunConfig cfg = load_config(g);
    FuzzyStore store(cfg.fuzzy);
    for (const auto& line : read_lines(codes_path)) {
      const auto tab = line.find('\t');
      store.store(parse_literal(line.substr(0, tab)), tab == std::string::npos ? "" : line.substr(tab + 1));
    }
    store.save(out_dir(g) / "store.jsonl");
    std::cout << Json{{"entries", store.size()}}.dump() << '\n';
  });

  // fuzzy-query
  std::string store_path;
  std::vector<std::string> probes;
  double epsilon = 0.1;
  std::string metric_name = "cosine_discrete";
  auto* fuzzy_query = app.add_subcommand("fuzzy-query", "Epsilon-ball query against a fuzzy store");
  fuzzy_query->add_option("--store", store_path, "Store file")->required();
  fuzzy_query->add_option("--probe", probes, "Code literal")->required();
  fuzzy_query->add_option("--epsilon", epsilon, "Ball radius in 1 - similarity")->check(CLI::Range(0.0, 1.0));
  fuzzy_query->add_option("--metric", metric_name, "Similarity metric");
  fuzzy_query->callback([&] {
    const RunConfig cfg = load_config(g);
    const Metric metric = metric_from_string(metric_name);
    const FuzzyStore store = FuzzyStore::load(store_path, cfg.fuzzy);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      for (const auto& m : store.query(parse_literal(probes[i]), metric, epsilon)) {
        const auto entry = store.entry(m.id);
        std::cout << Json{{"probe", i}, {"id", m.id}, {"similarity", m.similarity}, {"payload", entry.payload}}
                         .dump()
                  << '\n';
      }
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  } catch (const ConfigError& e) {
    std::cerr << "damp: config error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "damp: I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "damp: format error: " << e.what() << '\n';
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "damp: bad value: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "damp: " << e.what() << '\n';
    return kOther;
  }
  return status;
}
