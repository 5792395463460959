#pragma once

// Toy morphology pipeline: fragment dictionary, accented fragmentation codes, space filling
// and word embeddings.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "damp/chroma.hpp"
#include "damp/detect.hpp"
#include "damp/encoders.hpp"
#include "damp/space.hpp"

namespace damp {

struct DictionaryConfig {
  std::size_t min_word = 2;
  std::size_t max_word = 20;
  std::size_t min_prefix = 3;

  void validate() const;
};

inline constexpr char32_t kWordStart = U'^';
inline constexpr char32_t kWordEnd = U'$';

bool is_letter(char32_t c) noexcept;
char32_t to_lower(char32_t c) noexcept;

// Lowercased letter runs within the length limits, in corpus order.
std::vector<std::u32string> corpus_words(std::string_view utf8, const DictionaryConfig& cfg = {});

class FragmentDictionary {
 public:
  FragmentDictionary() = default;
  explicit FragmentDictionary(DictionaryConfig cfg) : cfg_(cfg) {}

  const DictionaryConfig& config() const noexcept { return cfg_; }
  const std::map<std::u32string, double>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool contains(const std::u32string& t) const { return tokens_.count(t) != 0; }
  double weight(const std::u32string& t) const;

  void add(const std::u32string& token, double w);
  void set(const std::u32string& token, double w);

  // Tokens sorted by weight descending, then by token.
  std::vector<std::pair<std::u32string, double>> ranked() const;

 private:
  DictionaryConfig cfg_;
  std::map<std::u32string, double> tokens_;
};

// Tokens come from recursive prefix/suffix splits of every word; each occurrence of a token that
// can sit in a gapless tiling of the word then adds len(token) / len(word) to its weight.
FragmentDictionary build_dictionary(std::string_view utf8_corpus, const DictionaryConfig& cfg = {});
FragmentDictionary build_dictionary(std::span<const std::u32string> words, const DictionaryConfig& cfg = {});

enum class Accent { head, tail };

std::string_view to_string(Accent a);
Accent accent_from_string(std::string_view name);

struct Fragmentation {
  std::u32string word;
  std::vector<std::u32string> fragments;
  double weight = 0.0;

  std::u32string joined() const;
  // "^·frag·frag·$"
  std::string display() const;
};

struct TilingConfig {
  std::size_t max_tilings = 64;
  // Retained tilings kept per word after the median filter, best first; 0 keeps all.
  std::size_t max_kept = 8;
};

// Up to max_tilings best tilings by total token weight, weight descending.
std::vector<Fragmentation> enumerate_tilings(const std::u32string& word, const FragmentDictionary& dict,
                                             std::size_t max_tilings = 64);

// Tilings with weight strictly above their median; the heaviest when none is. A word no token
// tiles becomes a single whole-word fragment of weight 0.
std::vector<Fragmentation> fragmentations(const std::u32string& word, const FragmentDictionary& dict,
                                          const TilingConfig& cfg = {});

enum class SaturationMode { per_character, per_fragment, analytic_cdf };

std::string_view to_string(SaturationMode m);
SaturationMode saturation_mode_from_string(std::string_view name);

struct SaturationTable {
  SaturationMode mode = SaturationMode::per_fragment;
  // Row n lists budgets for n positions; missing rows use the analytic curve.
  std::map<std::size_t, std::vector<std::size_t>> rows;
  double sigma_max = 15.0;
  double cdf_mean = 0.0;
  // Standard deviation as a fraction of the row length.
  double cdf_sd_fraction = 1.0 / 3.0;

  static SaturationTable per_character_default();
  static SaturationTable per_fragment_default();
  static SaturationTable analytic(double sigma_max = 7.0);

  std::vector<std::size_t> budgets(std::size_t n) const;
  void validate() const;
};

// max(1, round(sigma_max * 2 * (1 - Phi((i - mean) / sd)))), sd = fraction * n.
std::vector<std::size_t> analytic_budgets(std::size_t n, double sigma_max, double mean, double sd_fraction);

// Union of fragment codes; tail accent indexes budgets from the end. Alphabet positions restart
// at zero in each fragment; colour rank is the budget index.
ColouredCode encode_fragmentation(const Fragmentation& frag, const LexicalAlphabet& alphabet,
                                  const SaturationTable& table, Accent accent);

struct MorphConfig {
  DictionaryConfig dictionary;
  TilingConfig tiling;
  SaturationTable table = SaturationTable::per_fragment_default();
  LexicalConfig alphabet{256, 16, 20, PositionIndexing::from_start, false, 0};
  double fill_margin = 0.15;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MorphPoint {
  Fragmentation fragmentation;
  Accent accent = Accent::head;
  ColouredCode code;

  // "word|^·frag·$|head"
  std::string payload() const;
};

// Both accents of every retained fragmentation of each word.
std::vector<MorphPoint> word_points(const std::u32string& word, const FragmentDictionary& dict,
                                    const LexicalAlphabet& alphabet, const MorphConfig& cfg);

CodeSpace fill_morph_space(std::span<const std::u32string> words, const FragmentDictionary& dict,
                           const MorphConfig& cfg);

ColouredCode word_embedding(const std::u32string& word, const CodeSpace& space, const EnergyMap& e,
                            const DetectorHierarchy& h, const FragmentDictionary& dict, const MorphConfig& cfg,
                            const DetectionConfig& det);

// (sim_0.5 cosine)^1.5 off the diagonal, zero on it.
std::vector<std::vector<double>> similarity_heatmap(std::span<const ColouredCode> embeddings);

void write_dictionary(std::ostream& out, const FragmentDictionary& dict);
FragmentDictionary read_dictionary(std::istream& in);
void save_dictionary(const std::filesystem::path& path, const FragmentDictionary& dict);
FragmentDictionary load_dictionary(const std::filesystem::path& path);

}  // namespace damp
