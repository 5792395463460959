#include "damp/memory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>

#include <json.hpp>

#include "damp/rng.hpp"

namespace damp {

void FuzzyConfig::validate() const {
  if (code_length == 0) throw ConfigError("code_length", "must be positive");
  if (bucket_count == 0) throw ConfigError("bucket_count", "must be positive");
  if (!(mask_density > 0.0 && mask_density <= 1.0)) throw ConfigError("mask_density", "must lie in (0, 1]");
}

FuzzyStore::FuzzyStore(const FuzzyConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(cfg_.seed, 0x6d61736bULL));
  const auto mask_bits = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(cfg_.mask_density * static_cast<double>(cfg_.code_length))));
  std::vector<std::size_t> all(cfg_.code_length);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t b = 0; b < cfg_.bucket_count; ++b) {
    rng.shuffle(all.begin(), all.end());
    const std::span<const std::size_t> chosen(all.data(), std::min(mask_bits, all.size()));
    masks_.push_back(BitCode::from_indices(cfg_.code_length, chosen));
    // ceil(ceil(density * |mask|) * 0.5), never below one bit.
    const double raw = std::ceil(cfg_.mask_density * static_cast<double>(chosen.size()));
    thresholds_.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(raw * 0.5))));
  }
  buckets_.resize(cfg_.bucket_count);
}

std::size_t FuzzyStore::size() const {
  std::shared_lock lock(*mutex_);
  return entries_.size();
}

FuzzyEntry FuzzyStore::entry(std::size_t id) const {
  std::shared_lock lock(*mutex_);
  return entries_.at(id);
}

std::size_t FuzzyStore::admission_threshold(std::size_t bucket) const { return thresholds_.at(bucket); }

std::size_t FuzzyStore::store(const BitCode& code, std::string payload) {
  if (code.length() != cfg_.code_length) {
    throw InvalidOperands("store expects codes of length " + std::to_string(cfg_.code_length) + ", got " +
                          std::to_string(code.length()));
  }
  std::unique_lock lock(*mutex_);
  entries_.push_back({code, std::move(payload)});
  const std::size_t id = entries_.size() - 1;
  index_entry(id);
  return id;
}

void FuzzyStore::index_entry(std::size_t id) {
  const BitCode& code = entries_[id].code;
  for (std::size_t b = 0; b < masks_.size(); ++b) {
    BitCode key = bit_and(code, masks_[b]);
    if (key.count() >= thresholds_[b]) buckets_[b][std::move(key)].push_back(id);
  }
}

namespace {

constexpr std::size_t kMaxSubsetBits = 10;

bool within(double sim, double epsilon) { return 1.0 - sim <= epsilon; }

}  // namespace

std::vector<FuzzyMatch> FuzzyStore::query(const BitCode& probe, Metric metric, double epsilon) const {
  if (probe.length() != cfg_.code_length) {
    throw InvalidOperands("query expects probes of length " + std::to_string(cfg_.code_length) + ", got " +
                          std::to_string(probe.length()));
  }
  // Everything, including disjoint entries, lies within a radius of 1.
  if (epsilon >= 1.0) return query_exhaustive(probe, metric, epsilon);

  std::shared_lock lock(*mutex_);
  std::vector<std::size_t> candidates;
  for (std::size_t b = 0; b < masks_.size(); ++b) {
    const BitCode key = bit_and(probe, masks_[b]);
    const auto bits = key.indices();
    if (bits.size() < thresholds_[b]) continue;
    const auto& table = buckets_[b];
    auto visit = [&](const BitCode& k) {
      auto it = table.find(k);
      if (it != table.end()) candidates.insert(candidates.end(), it->second.begin(), it->second.end());
    };
    // Entries filed under the full projection or any admissible sub-projection.
    if (bits.size() <= kMaxSubsetBits) {
      const std::size_t n = bits.size();
      for (std::uint32_t subset = 1; subset < (1U << n); ++subset) {
        if (static_cast<std::size_t>(std::popcount(subset)) < thresholds_[b]) continue;
        BitCode k(cfg_.code_length);
        for (std::size_t i = 0; i < n; ++i) {
          if ((subset >> i) & 1U) k.set(bits[i]);
        }
        visit(k);
      }
    } else {
      visit(key);
      for (std::size_t drop : bits) {
        BitCode k = key;
        k.reset(drop);
        visit(k);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<FuzzyMatch> out;
  for (std::size_t id : candidates) {
    const double sim = similarity(probe, entries_[id].code, metric);
    if (within(sim, epsilon)) out.push_back({id, sim});
  }
  return out;
}

std::vector<FuzzyMatch> FuzzyStore::query_exhaustive(const BitCode& probe, Metric metric, double epsilon) const {
  if (probe.length() != cfg_.code_length) {
    throw InvalidOperands("query expects probes of length " + std::to_string(cfg_.code_length));
  }
  std::shared_lock lock(*mutex_);
  std::vector<FuzzyMatch> out;
  for (std::size_t id = 0; id < entries_.size(); ++id) {
    const double sim = similarity(probe, entries_[id].code, metric);
    if (within(sim, epsilon)) out.push_back({id, sim});
  }
  return out;
}

std::vector<FuzzyMatch> FuzzyStore::query_prefix(const BitCode& probe, Metric metric, double epsilon) const {
  if (probe.length() > cfg_.code_length) throw InvalidOperands("prefix probe longer than stored codes");
  std::shared_lock lock(*mutex_);
  std::vector<FuzzyMatch> out;
  BitCode head(probe.length());
  for (std::size_t id = 0; id < entries_.size(); ++id) {
    head = BitCode(probe.length());
    for (std::size_t i : entries_[id].code.indices()) {
      if (i >= probe.length()) break;
      head.set(i);
    }
    const double sim = similarity(probe, head, metric);
    if (within(sim, epsilon)) out.push_back({id, sim});
  }
  return out;
}

void FuzzyStore::scan(const std::function<void(std::size_t, const FuzzyEntry&)>& visit) const {
  std::shared_lock lock(*mutex_);
  for (std::size_t id = 0; id < entries_.size(); ++id) visit(id, entries_[id]);
}

void FuzzyStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  std::shared_lock lock(*mutex_);
  for (const auto& e : entries_) {
    nlohmann::ordered_json j;
    j["code"] = to_literal(e.code);
    if (!e.payload.empty()) j["payload"] = e.payload;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

FuzzyStore FuzzyStore::load(const std::filesystem::path& path, const FuzzyConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  FuzzyStore s(cfg);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      s.store(parse_literal(j.at("code").get<std::string>()), j.value("payload", std::string{}));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return s;
}

void ListConfig::validate() const {
  if (code_length == 0) throw ConfigError("code_length", "must be positive");
  if (marker_bits == 0 || marker_bits > code_length) throw ConfigError("marker_bits", "must lie in [1, code_length]");
  if (!(match_threshold > 0.0 && match_threshold <= 1.0)) throw ConfigError("match_threshold", "must lie in (0, 1]");
  if (index_alphabet.code_length != code_length) {
    throw ConfigError("index_alphabet.code_length", "must equal code_length");
  }
  index_alphabet.validate();
}

namespace {

BitCode random_code(std::size_t length, std::size_t bits, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> all(length);
  std::iota(all.begin(), all.end(), std::size_t{0});
  rng.shuffle(all.begin(), all.end());
  return BitCode::from_indices(length, std::span<const std::size_t>(all.data(), bits));
}

}  // namespace

ListEncoding::ListEncoding(const ListConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  top_ = random_code(cfg_.code_length, cfg_.marker_bits, derive_seed(cfg_.seed, 1));
  bottom_ = random_code(cfg_.code_length, cfg_.marker_bits, derive_seed(cfg_.seed, 2));
  LexicalConfig lc = cfg_.index_alphabet;
  lc.seed = derive_seed(cfg_.seed, 3);
  alphabet_ = LexicalAlphabet(lc);
}

BitCode ListEncoding::make_id(std::uint64_t salt) const {
  return random_code(cfg_.code_length, cfg_.marker_bits, derive_seed(cfg_.seed, 0x1000 + salt));
}

BitCode ListEncoding::index_code(std::size_t i) const {
  return encode_integer_lexical(static_cast<long long>(i), alphabet_).code();
}

namespace {

BitCode make_pair(const BitCode& left, const BitCode& right, const ListConfig& cfg) {
  if (cfg.mode == PairMode::tuple) return concat(left, right);
  const ColouredCode parts[] = {ColouredCode(left, 0), ColouredCode(right, 0)};
  return colour_merge(parts, MergePolicy{cfg.merge_budget, Retention::keep_long_wave}).code();
}

void require_length(const BitCode& c, std::size_t n, const char* what) {
  if (c.length() != n) {
    throw InvalidOperands(std::string(what) + " must have length " + std::to_string(n) + ", got " +
                          std::to_string(c.length()));
  }
}

}  // namespace

std::vector<BitCode> encode_list(const std::vector<BitCode>& items, const BitCode& id, const ListEncoding& enc,
                                 bool indexed) {
  const auto& cfg = enc.config();
  if (items.empty()) throw InvalidOperands("encode_list needs at least one item");
  require_length(id, cfg.code_length, "list id");
  for (const auto& x : items) require_length(x, cfg.code_length, "list item");

  std::vector<BitCode> pairs;
  if (indexed) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      BitCode left = bit_or(enc.index_code(i + 1), id);
      if (i + 1 == items.size()) left = bit_or(left, enc.bottom());
      pairs.push_back(make_pair(left, items[i], cfg));
    }
    return pairs;
  }
  pairs.push_back(make_pair(bit_or(id, enc.top()), items.front(), cfg));
  for (std::size_t i = 0; i + 1 < items.size(); ++i) {
    pairs.push_back(make_pair(bit_or(id, items[i]), items[i + 1], cfg));
  }
  pairs.push_back(make_pair(bit_or(id, items.back()), enc.bottom(), cfg));
  return pairs;
}

namespace {

struct Half {
  BitCode left;
  BitCode right;
};

Half split(const BitCode& pair, std::size_t n) {
  Half h{BitCode(n), BitCode(n)};
  for (std::size_t i : pair.indices()) {
    if (i < n) {
      h.left.set(i);
    } else {
      h.right.set(i - n);
    }
  }
  return h;
}

// Fraction of the probe's bits present in the candidate.
double coverage(const BitCode& probe, const BitCode& candidate) {
  const std::size_t c = probe.count();
  return c == 0 ? 0.0 : static_cast<double>(intersection_count(probe, candidate)) / static_cast<double>(c);
}

struct Found {
  bool ok = false;
  Half halves;
};

// Best pair whose left half covers the probe, ties broken by cosine then by entry id.
Found find_pair(const FuzzyStore& store, const BitCode& probe, const ListConfig& cfg) {
  Found best;
  double best_cov = -1.0;
  double best_cos = -1.0;
  store.scan([&](std::size_t, const FuzzyEntry& e) {
    if (e.code.length() != 2 * cfg.code_length) return;
    Half h = split(e.code, cfg.code_length);
    const double cov = coverage(probe, h.left);
    if (cov < cfg.match_threshold) return;
    const double cos = similarity(probe, h.left, Metric::cosine_discrete);
    if (cov > best_cov || (cov == best_cov && cos > best_cos)) {
      best_cov = cov;
      best_cos = cos;
      best.ok = true;
      best.halves = std::move(h);
    }
  });
  return best;
}

}  // namespace

std::vector<BitCode> traverse_list(const FuzzyStore& store, const BitCode& id, const ListEncoding& enc,
                                   bool indexed) {
  const auto& cfg = enc.config();
  if (cfg.mode != PairMode::tuple) throw InvalidOperands("traversal needs tuple pairs");
  require_length(id, cfg.code_length, "list id");
  if (store.config().code_length != 2 * cfg.code_length) {
    throw InvalidOperands("store code length must be twice the list code length");
  }
  std::vector<BitCode> out;
  const std::size_t cap = store.size() + 1;

  if (indexed) {
    for (std::size_t i = 1; i <= cap; ++i) {
      const Found f = find_pair(store, bit_or(enc.index_code(i), id), cfg);
      if (!f.ok) throw PartialListError("no pair for index " + std::to_string(i), out);
      out.push_back(f.halves.right);
      if (coverage(enc.bottom(), f.halves.left) >= cfg.match_threshold) return out;
    }
    throw PartialListError("indexed list has no terminating pair", out);
  }

  BitCode prev = enc.top();
  for (std::size_t step = 0; step < cap; ++step) {
    const Found f = find_pair(store, bit_or(id, prev), cfg);
    if (!f.ok) {
      throw PartialListError(out.empty() ? "no head pair for list id" : "list chain broken", out);
    }
    if (coverage(enc.bottom(), f.halves.right) >= cfg.match_threshold &&
        similarity(enc.bottom(), f.halves.right, Metric::cosine_discrete) >= cfg.match_threshold) {
      if (out.empty()) throw PartialListError("list has no items", out);
      return out;
    }
    prev = f.halves.right;
    out.push_back(prev);
  }
  throw PartialListError("list chain does not terminate", out);
}

std::size_t indexed_list_length(const FuzzyStore& store, const BitCode& id, const ListEncoding& enc) {
  const auto& cfg = enc.config();
  const Found f = find_pair(store, bit_or(id, enc.bottom()), cfg);
  if (!f.ok) throw PartialListError("no terminating pair for list id", {});
  std::size_t best = 0;
  double best_cov = -1.0;
  for (std::size_t i = 1; i <= store.size(); ++i) {
    const double cov = coverage(enc.index_code(i), f.halves.left);
    if (cov > best_cov) {
      best_cov = cov;
      best = i;
    }
  }
  if (best_cov < cfg.match_threshold) throw PartialListError("terminating pair carries no index", {});
  return best;
}

}  // namespace damp
