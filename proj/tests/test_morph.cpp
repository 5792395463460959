#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "damp/morph.hpp"

using namespace damp;

namespace {

std::u32string u(std::string_view s) { return decode_utf8(s); }

// Tokens of the recursive splits: every prefix of length >= min_prefix and every substring
// starting at or beyond min_prefix.
std::set<std::u32string> split_oracle(const std::u32string& w, std::size_t min_prefix) {
  std::set<std::u32string> out{w};
  for (std::size_t k = min_prefix; k < w.size(); ++k) out.insert(w.substr(0, k));
  for (std::size_t i = min_prefix; i < w.size(); ++i) {
    for (std::size_t j = i + 1; j <= w.size(); ++j) out.insert(w.substr(i, j - i));
  }
  return out;
}

// Spans used by at least one full tiling, by exhaustive enumeration.
std::set<std::pair<std::size_t, std::size_t>> tiling_spans(const std::u32string& w,
                                                           const std::set<std::u32string>& tokens) {
  std::set<std::pair<std::size_t, std::size_t>> spans;
  std::vector<std::pair<std::size_t, std::size_t>> path;
  const std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == w.size()) {
      spans.insert(path.begin(), path.end());
      return;
    }
    for (std::size_t j = i + 1; j <= w.size(); ++j) {
      if (!tokens.count(w.substr(i, j - i))) continue;
      path.emplace_back(i, j);
      rec(j);
      path.pop_back();
    }
  };
  rec(0);
  return spans;
}

std::set<std::size_t> bit_set(const ColouredCode& c) {
  const auto idx = c.code().indices();
  return {idx.begin(), idx.end()};
}

}  // namespace

TEST_CASE("corpus words are lowercased letter runs") {
  const auto words = corpus_words("Hello, wörld! a 42 Straße");
  REQUIRE(words.size() == 3);
  CHECK(words[0] == u("hello"));
  CHECK(words[1] == u("wörld"));
  CHECK(words[2] == u("straße"));
}

TEST_CASE("dictionary weights match an exhaustive oracle") {
  const std::vector<std::u32string> words{u("walking"), u("walked"), u("talking"), u("talked"), u("walks"),
                                          u("walking"), u("un"), u("undo")};
  const DictionaryConfig cfg;
  const auto dict = build_dictionary(words, cfg);
  std::set<std::u32string> tokens;
  std::map<std::u32string, int> counts;
  for (const auto& w : words) ++counts[w];
  for (const auto& [w, c] : counts) {
    const auto t = split_oracle(w, cfg.min_prefix);
    tokens.insert(t.begin(), t.end());
  }
  std::map<std::u32string, double> want;
  for (const auto& [w, c] : counts) {
    for (const auto& [i, j] : tiling_spans(w, tokens)) {
      want[w.substr(i, j - i)] += c * static_cast<double>(j - i) / static_cast<double>(w.size());
    }
  }
  REQUIRE(dict.size() == want.size());
  for (const auto& [t, w] : want) CHECK(dict.weight(t) == doctest::Approx(w).epsilon(1e-12));
  CHECK(dict.contains(u("ing")));
  CHECK(dict.contains(u("walk")));
  CHECK_FALSE(dict.contains(u("alk")));
  const auto ranked = dict.ranked();
  for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].second >= ranked[i].second);
}

TEST_CASE("tilings cover the word with dictionary tokens") {
  const auto dict = build_dictionary("walking walked talking talked walks jumping jumped");
  for (const auto& w : {u("walking"), u("talked"), u("jumps"), u("walks")}) {
    const auto all = enumerate_tilings(w, dict, 64);
    for (std::size_t i = 0; i < all.size(); ++i) {
      CHECK(all[i].joined() == w);
      double total = 0.0;
      for (const auto& f : all[i].fragments) {
        CHECK(dict.contains(f));
        total += dict.weight(f);
      }
      CHECK(all[i].weight == doctest::Approx(total));
      if (i > 0) CHECK(all[i - 1].weight >= all[i].weight);
    }
    const auto kept = fragmentations(w, dict);
    REQUIRE_FALSE(kept.empty());
    CHECK(kept.size() <= 8);
  }
  const auto unknown = fragmentations(u("xyzzy"), dict);
  REQUIRE(unknown.size() == 1);
  CHECK(unknown[0].fragments == std::vector<std::u32string>{u("xyzzy")});
  CHECK(unknown[0].weight == 0.0);
  CHECK(unknown[0].display() == "^·xyzzy·$");
  CHECK_THROWS_AS(fragmentations(u("a"), dict), OutOfDomain);
}

TEST_CASE("tilings match brute force on short words") {
  const auto dict = build_dictionary("abab abba baba abaab");
  for (const auto& w : {u("abab"), u("abba"), u("abaab")}) {
    std::set<std::u32string> toks;
    for (const auto& [t, wt] : dict.tokens()) toks.insert(t);
    std::size_t expected = 0;
    const std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == w.size()) {
        ++expected;
        return;
      }
      for (std::size_t j = i + 1; j <= w.size(); ++j)
        if (toks.count(w.substr(i, j - i))) rec(j);
    };
    rec(0);
    CHECK(enumerate_tilings(w, dict, 1000).size() == expected);
  }
}

TEST_CASE("default saturation rows") {
  const auto pc = SaturationTable::per_character_default();
  CHECK(pc.budgets(4) == std::vector<std::size_t>{8, 7, 3, 2});
  CHECK(pc.budgets(12).size() == 12);
  const auto pf = SaturationTable::per_fragment_default();
  CHECK(pf.budgets(3) == std::vector<std::size_t>{15, 7, 3});
  CHECK(pf.budgets(7).size() == 7);
  CHECK_NOTHROW(pc.validate());
  CHECK_NOTHROW(pf.validate());
  const auto curve = analytic_budgets(6, 7.0, 0.0, 1.0 / 3.0);
  CHECK(curve[0] == 7);
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] <= curve[i - 1]);
  CHECK(curve.back() >= 1);
  SaturationTable bad;
  bad.rows = {{2, {3, 5}}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("per-character encoding follows row budgets and accent") {
  const LexicalAlphabet alphabet(LexicalConfig{256, 16, 20, PositionIndexing::from_start, false, 0});
  const auto table = SaturationTable::per_character_default();
  const Fragmentation frag{u("abcd"), {u("ab"), u("cd")}, 1.0};
  const std::vector<std::size_t> row{8, 7, 3, 2};
  const std::vector<std::pair<std::size_t, char32_t>> slots{{0, U'a'}, {1, U'b'}, {0, U'c'}, {1, U'd'}};
  for (Accent accent : {Accent::head, Accent::tail}) {
    const auto code = encode_fragmentation(frag, alphabet, table, accent);
    std::set<std::size_t> want;
    for (std::size_t i = 0; i < 4; ++i) {
      const std::size_t tier = accent == Accent::head ? i : 3 - i;
      const auto bits = alphabet.bits(slots[i].first, slots[i].second, row[tier]);
      for (std::size_t b : bits) {
        want.insert(b);
        CHECK(code.rank(b) <= tier);
      }
    }
    CHECK(bit_set(code) == want);
  }
  const auto head = encode_fragmentation(frag, alphabet, table, Accent::head);
  const auto tail = encode_fragmentation(frag, alphabet, table, Accent::tail);
  CHECK(head != tail);
}

TEST_CASE("per-fragment encoding splits each budget across the fragment") {
  const LexicalAlphabet alphabet(LexicalConfig{256, 16, 20, PositionIndexing::from_start, false, 0});
  const auto table = SaturationTable::per_fragment_default();
  const Fragmentation frag{u("undoing"), {u("un"), u("do"), u("ing")}, 1.0};
  const auto code = encode_fragmentation(frag, alphabet, table, Accent::head);
  std::set<std::size_t> want;
  const std::vector<std::size_t> row{15, 7, 3};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& f = frag.fragments[k];
    std::size_t used = 0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      const std::size_t q = row[k] / f.size() + (j < row[k] % f.size() ? 1 : 0);
      used += q;
      for (std::size_t b : alphabet.bits(j, f[j], q)) want.insert(b);
    }
    CHECK(used == row[k]);
  }
  CHECK(bit_set(code) == want);

  // A palindromic split gives mirrored budgets under the two accents.
  const Fragmentation pal{u("abxab"), {u("ab"), u("x"), u("ab")}, 1.0};
  const auto h = encode_fragmentation(pal, alphabet, table, Accent::head);
  const auto t = encode_fragmentation(pal, alphabet, table, Accent::tail);
  CHECK(bit_set(h) == bit_set(t));
  const auto ab = alphabet.bits(0, U'a', 8);
  CHECK(h.rank(ab[0]) == 0);
  CHECK(t.rank(ab[0]) == 0);
}

TEST_CASE("morph space holds both accents of every kept fragmentation") {
  const std::string corpus = "walking walked talking talked walks talks";
  const auto dict = build_dictionary(corpus);
  MorphConfig cfg;
  const auto words = corpus_words(corpus);
  const LexicalAlphabet alphabet(cfg.alphabet);
  std::size_t expected = 0;
  std::set<std::u32string> uniq(words.begin(), words.end());
  for (const auto& w : uniq) {
    const auto pts = word_points(w, dict, alphabet, cfg);
    CHECK(pts.size() % 2 == 0);
    expected += pts.size();
    for (const auto& p : pts) CHECK(p.code.count() > 0);
  }
  const auto space = fill_morph_space(words, dict, cfg);
  CHECK(space.point_count() == expected);
  std::size_t heads = 0;
  for (std::size_t idx : space.occupied_cells()) heads += space.payload(idx).ends_with("|head");
  CHECK(heads * 2 == expected);
}

TEST_CASE("heatmap is symmetric with a zero diagonal") {
  std::vector<ColouredCode> e;
  e.emplace_back(BitCode::from_indices(32, {1, 2, 3, 4}), 0);
  e.emplace_back(BitCode::from_indices(32, {1, 2, 3, 5}), 0);
  e.emplace_back(BitCode::from_indices(32, {10, 11}), 0);
  const auto m = similarity_heatmap(e);
  CHECK(m[0][0] == 0.0);
  CHECK(m[0][1] == doctest::Approx(std::pow(0.75, 1.5)));
  CHECK(m[1][0] == m[0][1]);
  CHECK(m[0][2] == 0.0);
}

TEST_CASE("dictionary json round-trip") {
  const auto dict = build_dictionary("naïve naïvely walking walked");
  std::stringstream ss;
  write_dictionary(ss, dict);
  const auto back = read_dictionary(ss);
  CHECK(back.tokens() == dict.tokens());
  CHECK(back.config().min_prefix == dict.config().min_prefix);
  std::stringstream bad("{\"version\": 2}");
  CHECK_THROWS_AS(read_dictionary(bad), FormatError);
}
