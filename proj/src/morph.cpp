#include "damp/morph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>

#include <json.hpp>

namespace damp {

void DictionaryConfig::validate() const {
  if (min_word == 0) throw ConfigError("min_word", "must be positive");
  if (max_word < min_word) throw ConfigError("max_word", "must be at least min_word");
  if (min_prefix == 0) throw ConfigError("min_prefix", "must be positive");
}

bool is_letter(char32_t c) noexcept {
  if ((c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z')) return true;
  if (c >= 0xC0 && c <= 0x24F) return c != 0xD7 && c != 0xF7;
  if (c >= 0x370 && c <= 0x3FF) return c != 0x37E && c != 0x387;
  if (c >= 0x400 && c <= 0x52F) return !(c >= 0x482 && c <= 0x489);
  return false;
}

char32_t to_lower(char32_t c) noexcept {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

std::vector<std::u32string> corpus_words(std::string_view utf8, const DictionaryConfig& cfg) {
  cfg.validate();
  const std::u32string text = decode_utf8(utf8);
  std::vector<std::u32string> out;
  std::u32string cur;
  const auto flush = [&] {
    if (cur.size() >= cfg.min_word && cur.size() <= cfg.max_word) out.push_back(cur);
    cur.clear();
  };
  for (char32_t c : text) {
    if (is_letter(c)) {
      cur.push_back(to_lower(c));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

double FragmentDictionary::weight(const std::u32string& t) const {
  const auto it = tokens_.find(t);
  return it == tokens_.end() ? 0.0 : it->second;
}

void FragmentDictionary::add(const std::u32string& token, double w) {
  if (token.empty()) throw InvalidOperands("empty token");
  if (!(w >= 0.0)) throw InvalidOperands("token weights must be non-negative");
  tokens_[token] += w;
}

void FragmentDictionary::set(const std::u32string& token, double w) {
  if (token.empty()) throw InvalidOperands("empty token");
  if (!(w >= 0.0)) throw InvalidOperands("token weights must be non-negative");
  tokens_[token] = w;
}

std::vector<std::pair<std::u32string, double>> FragmentDictionary::ranked() const {
  std::vector<std::pair<std::u32string, double>> out(tokens_.begin(), tokens_.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

namespace {

// Substrings [i, j) produced by splitting a word into prefix and suffix, recursively.
void split_tokens(const std::u32string& w, std::size_t min_prefix, std::set<std::u32string>& out) {
  std::set<std::tuple<std::size_t, std::size_t, bool>> seen;
  const std::function<void(std::size_t, std::size_t, bool)> rec = [&](std::size_t i, std::size_t j, bool at_start) {
    if (!seen.insert({i, j, at_start}).second) return;
    for (std::size_t k = i + 1; k < j; ++k) {
      if (at_start && k - i < min_prefix) continue;
      out.insert(w.substr(i, k - i));
      out.insert(w.substr(k, j - k));
      rec(i, k, at_start);
      rec(k, j, false);
    }
  };
  out.insert(w);
  rec(0, w.size(), true);
}

// reach[i]: [0, i) tiles; finish[j]: [j, n) tiles.
void tileable(const std::u32string& w, const std::set<std::u32string>& tokens, std::vector<char>& reach,
              std::vector<char>& finish) {
  const std::size_t n = w.size();
  reach.assign(n + 1, 0);
  finish.assign(n + 1, 0);
  reach[0] = 1;
  for (std::size_t j = 1; j <= n; ++j) {
    for (std::size_t i = 0; i < j && !reach[j]; ++i) {
      if (reach[i] && tokens.count(w.substr(i, j - i))) reach[j] = 1;
    }
  }
  finish[n] = 1;
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = n; j > i && !finish[i]; --j) {
      if (finish[j] && tokens.count(w.substr(i, j - i))) finish[i] = 1;
    }
  }
}

}  // namespace

FragmentDictionary build_dictionary(std::span<const std::u32string> words, const DictionaryConfig& cfg) {
  cfg.validate();
  std::set<std::u32string> tokens;
  std::map<std::u32string, std::size_t> counts;
  for (const auto& w : words) {
    if (w.size() < cfg.min_word || w.size() > cfg.max_word) continue;
    ++counts[w];
  }
  for (const auto& [w, c] : counts) split_tokens(w, cfg.min_prefix, tokens);

  FragmentDictionary dict(cfg);
  std::vector<char> reach, finish;
  for (const auto& [w, c] : counts) {
    tileable(w, tokens, reach, finish);
    const double n = static_cast<double>(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!reach[i]) continue;
      for (std::size_t j = i + 1; j <= w.size(); ++j) {
        if (!finish[j]) continue;
        const auto t = w.substr(i, j - i);
        if (tokens.count(t)) dict.add(t, static_cast<double>(c) * static_cast<double>(j - i) / n);
      }
    }
  }
  return dict;
}

FragmentDictionary build_dictionary(std::string_view utf8_corpus, const DictionaryConfig& cfg) {
  const auto words = corpus_words(utf8_corpus, cfg);
  return build_dictionary(words, cfg);
}

std::string_view to_string(Accent a) { return a == Accent::head ? "head" : "tail"; }

Accent accent_from_string(std::string_view name) {
  if (name == "head") return Accent::head;
  if (name == "tail") return Accent::tail;
  throw InvalidOperands("unknown accent '" + std::string(name) + "'");
}

std::u32string Fragmentation::joined() const {
  std::u32string out;
  for (const auto& f : fragments) out += f;
  return out;
}

std::string Fragmentation::display() const {
  std::u32string out(1, kWordStart);
  for (const auto& f : fragments) {
    out += U'·';
    out += f;
  }
  out += U'·';
  out += kWordEnd;
  return encode_utf8(out);
}

std::vector<Fragmentation> enumerate_tilings(const std::u32string& word, const FragmentDictionary& dict,
                                             std::size_t max_tilings) {
  if (max_tilings == 0) throw ConfigError("max_tilings", "must be positive");
  struct Partial {
    double weight;
    std::size_t prev;
    std::size_t rank;
  };
  const std::size_t n = word.size();
  std::vector<std::vector<Partial>> best(n + 1);
  best[0].push_back({0.0, 0, 0});
  for (std::size_t j = 1; j <= n; ++j) {
    std::vector<Partial> cand;
    for (std::size_t i = 0; i < j; ++i) {
      if (best[i].empty()) continue;
      const auto t = word.substr(i, j - i);
      if (!dict.contains(t)) continue;
      const double w = dict.weight(t);
      for (std::size_t k = 0; k < best[i].size(); ++k) cand.push_back({best[i][k].weight + w, i, k});
    }
    std::stable_sort(cand.begin(), cand.end(), [](const Partial& a, const Partial& b) {
      if (a.weight != b.weight) return a.weight > b.weight;
      if (a.prev != b.prev) return a.prev > b.prev;
      return a.rank < b.rank;
    });
    if (cand.size() > max_tilings) cand.resize(max_tilings);
    best[j] = std::move(cand);
  }
  std::vector<Fragmentation> out;
  for (std::size_t k = 0; k < best[n].size(); ++k) {
    Fragmentation f;
    f.word = word;
    f.weight = best[n][k].weight;
    std::size_t j = n;
    std::size_t r = k;
    while (j > 0) {
      const Partial& p = best[j][r];
      f.fragments.push_back(word.substr(p.prev, j - p.prev));
      j = p.prev;
      r = p.rank;
    }
    std::reverse(f.fragments.begin(), f.fragments.end());
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Fragmentation> fragmentations(const std::u32string& word, const FragmentDictionary& dict,
                                          const TilingConfig& cfg) {
  const auto& dc = dict.config();
  if (word.size() < dc.min_word || word.size() > dc.max_word) {
    throw OutOfDomain("word length " + std::to_string(word.size()) + " outside [" + std::to_string(dc.min_word) +
                      ", " + std::to_string(dc.max_word) + "]");
  }
  auto all = enumerate_tilings(word, dict, cfg.max_tilings);
  if (all.empty()) return {Fragmentation{word, {word}, 0.0}};
  std::vector<double> w;
  for (const auto& f : all) w.push_back(f.weight);
  std::sort(w.begin(), w.end());
  const std::size_t m = w.size();
  const double median = m % 2 ? w[m / 2] : (w[m / 2 - 1] + w[m / 2]) / 2.0;
  std::vector<Fragmentation> kept;
  for (const auto& f : all) {
    if (f.weight > median) kept.push_back(f);
  }
  if (kept.empty()) kept.push_back(all.front());
  if (cfg.max_kept != 0 && kept.size() > cfg.max_kept) kept.resize(cfg.max_kept);
  return kept;
}

std::string_view to_string(SaturationMode m) {
  switch (m) {
    case SaturationMode::per_character: return "per_character";
    case SaturationMode::per_fragment: return "per_fragment";
    case SaturationMode::analytic_cdf: return "analytic_cdf";
  }
  return "per_fragment";
}

SaturationMode saturation_mode_from_string(std::string_view name) {
  if (name == "per_character") return SaturationMode::per_character;
  if (name == "per_fragment") return SaturationMode::per_fragment;
  if (name == "analytic_cdf") return SaturationMode::analytic_cdf;
  throw InvalidOperands("unknown saturation mode '" + std::string(name) + "'");
}

SaturationTable SaturationTable::per_character_default() {
  SaturationTable t;
  t.mode = SaturationMode::per_character;
  t.sigma_max = 7.0;
  t.rows = {{1, {7}},
            {2, {7, 5}},
            {3, {7, 5, 3}},
            {4, {8, 7, 3, 2}},
            {5, {6, 5, 4, 3, 2}},
            {6, {6, 5, 4, 3, 2, 1}},
            {7, {6, 5, 4, 3, 2, 1, 1}},
            {8, {6, 5, 4, 3, 2, 1, 1, 1}},
            {9, {5, 5, 3, 3, 3, 1, 1, 1, 1}}};
  return t;
}

SaturationTable SaturationTable::per_fragment_default() {
  SaturationTable t;
  t.mode = SaturationMode::per_fragment;
  t.sigma_max = 15.0;
  t.rows = {{1, {15}}, {2, {15, 5}}, {3, {15, 7, 3}}, {4, {15, 7, 3, 2}}, {5, {15, 6, 5, 3, 1}}};
  return t;
}

SaturationTable SaturationTable::analytic(double sigma_max) {
  SaturationTable t;
  t.mode = SaturationMode::analytic_cdf;
  t.sigma_max = sigma_max;
  return t;
}

std::vector<std::size_t> analytic_budgets(std::size_t n, double sigma_max, double mean, double sd_fraction) {
  std::vector<std::size_t> out(n);
  const double sd = std::max(1e-9, sd_fraction * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double z = (static_cast<double>(i) - mean) / sd;
    const double tail = 0.5 * std::erfc(z / std::sqrt(2.0));
    out[i] = static_cast<std::size_t>(std::max(1.0, std::round(sigma_max * 2.0 * tail)));
  }
  return out;
}

std::vector<std::size_t> SaturationTable::budgets(std::size_t n) const {
  if (mode != SaturationMode::analytic_cdf) {
    const auto it = rows.find(n);
    if (it != rows.end()) return it->second;
    if (mode == SaturationMode::per_character && n >= 10) {
      std::vector<std::size_t> row{5, 5, 3, 3, 3, 2, 1, 1, 1};
      row.resize(n, 1);
      return row;
    }
  }
  return analytic_budgets(n, sigma_max, cdf_mean, cdf_sd_fraction);
}

void SaturationTable::validate() const {
  for (const auto& [n, row] : rows) {
    const std::string path = "rows." + std::to_string(n);
    if (row.size() != n) throw ConfigError(path, "row length must equal the row key");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] == 0) throw ConfigError(path, "entries must be positive");
      if (i > 0 && row[i] > row[i - 1]) throw ConfigError(path, "entries must be non-increasing");
    }
  }
  if (!(sigma_max >= 1.0)) throw ConfigError("sigma_max", "must be at least 1");
  if (!(cdf_sd_fraction > 0.0)) throw ConfigError("cdf_sd_fraction", "must be positive");
}

ColouredCode encode_fragmentation(const Fragmentation& frag, const LexicalAlphabet& alphabet,
                                  const SaturationTable& table, Accent accent) {
  const std::size_t len = alphabet.config().code_length;
  std::vector<ColouredCode> parts;
  const std::size_t nf = frag.fragments.size();
  if (table.mode == SaturationMode::per_fragment) {
    const auto budget = table.budgets(nf);
    for (std::size_t k = 0; k < nf; ++k) {
      const std::size_t tier = accent == Accent::head ? k : nf - k - 1;
      const auto& f = frag.fragments[k];
      const std::size_t m = f.size();
      ColouredCode c(len);
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t q = budget[tier] / m + (j < budget[tier] % m ? 1 : 0);
        for (std::size_t bit : alphabet.bits(j, f[j], q)) c.add(bit, static_cast<ColourRank>(tier));
      }
      parts.push_back(std::move(c));
    }
  } else {
    const std::size_t n = frag.joined().size();
    const auto budget = table.budgets(n);
    std::size_t i = 0;
    for (const auto& f : frag.fragments) {
      ColouredCode c(len);
      for (std::size_t j = 0; j < f.size(); ++j, ++i) {
        const std::size_t tier = accent == Accent::head ? i : n - i - 1;
        for (std::size_t bit : alphabet.bits(j, f[j], budget[tier])) c.add(bit, static_cast<ColourRank>(tier));
      }
      parts.push_back(std::move(c));
    }
  }
  if (parts.empty()) return ColouredCode(len);
  return colour_merge(parts, MergePolicy{len, Retention::keep_long_wave});
}

void MorphConfig::validate() const {
  try {
    dictionary.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("dictionary." + e.path(), e.what());
  }
  if (tiling.max_tilings == 0) throw ConfigError("tiling.max_tilings", "must be positive");
  try {
    table.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("table." + e.path(), e.what());
  }
  try {
    alphabet.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("alphabet." + e.path(), e.what());
  }
  if (!(fill_margin >= 0.0)) throw ConfigError("fill_margin", "must be non-negative");
}

std::string MorphPoint::payload() const {
  return encode_utf8(fragmentation.word) + "|" + fragmentation.display() + "|" + std::string(to_string(accent));
}

std::vector<MorphPoint> word_points(const std::u32string& word, const FragmentDictionary& dict,
                                    const LexicalAlphabet& alphabet, const MorphConfig& cfg) {
  std::vector<MorphPoint> out;
  for (const auto& f : fragmentations(word, dict, cfg.tiling)) {
    for (Accent a : {Accent::head, Accent::tail}) out.push_back({f, a, encode_fragmentation(f, alphabet, cfg.table, a)});
  }
  return out;
}

CodeSpace fill_morph_space(std::span<const std::u32string> words, const FragmentDictionary& dict,
                           const MorphConfig& cfg) {
  cfg.validate();
  if (words.empty()) throw InvalidOperands("fill_morph_space needs at least one word");
  const LexicalAlphabet alphabet(cfg.alphabet);
  std::vector<Point> points;
  std::vector<std::string> payloads;
  std::set<std::u32string> seen;
  for (const auto& w : words) {
    if (!seen.insert(w).second) continue;
    for (auto& p : word_points(w, dict, alphabet, cfg)) {
      payloads.push_back(p.payload());
      points.emplace_back(p.code.code());
    }
  }
  return init_space(points, cfg.fill_margin, cfg.seed, payloads);
}

ColouredCode word_embedding(const std::u32string& word, const CodeSpace& space, const EnergyMap& e,
                            const DetectorHierarchy& h, const FragmentDictionary& dict, const MorphConfig& cfg,
                            const DetectionConfig& det) {
  const LexicalAlphabet alphabet(cfg.alphabet);
  std::vector<Point> stimuli;
  for (auto& p : word_points(word, dict, alphabet, cfg)) stimuli.emplace_back(p.code.code());
  const ActivationMap a = activate(space, stimuli, SimilarityConfig{det.metric, det.lambda_a, det.eta});
  return embed(h, a, e, det);
}

std::vector<std::vector<double>> similarity_heatmap(std::span<const ColouredCode> embeddings) {
  const std::size_t n = embeddings.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  const SimilarityConfig half{Metric::cosine_discrete, 0.5, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::pow(sim_lambda(embeddings[i].code(), embeddings[j].code(), half), 1.5);
      m[i][j] = v;
      m[j][i] = v;
    }
  }
  return m;
}

void write_dictionary(std::ostream& out, const FragmentDictionary& dict) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["config"] = {{"min_word", dict.config().min_word},
                 {"max_word", dict.config().max_word},
                 {"min_prefix", dict.config().min_prefix}};
  nlohmann::ordered_json tokens = nlohmann::ordered_json::object();
  for (const auto& [t, w] : dict.tokens()) tokens[encode_utf8(t)] = w;
  j["tokens"] = std::move(tokens);
  out << j.dump(1) << '\n';
}

FragmentDictionary read_dictionary(std::istream& in) {
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("version").get<int>() != 1) throw FormatError("unsupported dictionary version");
    DictionaryConfig cfg;
    const auto& c = j.at("config");
    cfg.min_word = c.at("min_word").get<std::size_t>();
    cfg.max_word = c.at("max_word").get<std::size_t>();
    cfg.min_prefix = c.at("min_prefix").get<std::size_t>();
    FragmentDictionary dict(cfg);
    for (const auto& [t, w] : j.at("tokens").items()) dict.set(decode_utf8(t), w.get<double>());
    return dict;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad dictionary document: ") + e.what());
  } catch (const InvalidOperands& e) {
    throw FormatError(std::string("bad dictionary document: ") + e.what());
  }
}

void save_dictionary(const std::filesystem::path& path, const FragmentDictionary& dict) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_dictionary(out, dict);
  if (!out) throw IoError("failed writing " + path.string());
}

FragmentDictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_dictionary(in);
}

}  // namespace damp
