#pragma once

// Fuzzy associative store over bit codes and list encoding on top of it.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "damp/bitcode.hpp"
#include "damp/encoders.hpp"

namespace damp {

struct FuzzyConfig {
  std::size_t code_length = 128;
  std::size_t bucket_count = 48;
  double mask_density = 0.08;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FuzzyEntry {
  BitCode code;
  std::string payload;
};

struct FuzzyMatch {
  std::size_t id = 0;
  double similarity = 0.0;
};

// Random-subspace index. Each bucket owns a random mask; an entry joins the bucket when
// its overlap with the mask reaches the bucket's admission threshold and is filed under
// its projection onto the mask. Query results are always re-checked with the exact metric.
class FuzzyStore {
 public:
  explicit FuzzyStore(const FuzzyConfig& cfg);

  const FuzzyConfig& config() const noexcept { return cfg_; }
  std::size_t size() const;
  FuzzyEntry entry(std::size_t id) const;

  std::size_t store(const BitCode& code, std::string payload = {});

  // Entries with 1 - similarity <= epsilon, ascending by id.
  std::vector<FuzzyMatch> query(const BitCode& probe, Metric metric, double epsilon) const;
  std::vector<FuzzyMatch> query_exhaustive(const BitCode& probe, Metric metric, double epsilon) const;

  // Compares the probe with the leading probe.length() bits of each entry.
  std::vector<FuzzyMatch> query_prefix(const BitCode& probe, Metric metric, double epsilon) const;

  // Visits every entry under a shared lock.
  void scan(const std::function<void(std::size_t, const FuzzyEntry&)>& visit) const;

  std::size_t admission_threshold(std::size_t bucket) const;
  const BitCode& mask(std::size_t bucket) const { return masks_.at(bucket); }

  void save(const std::filesystem::path& path) const;
  static FuzzyStore load(const std::filesystem::path& path, const FuzzyConfig& cfg);

 private:
  void index_entry(std::size_t id);

  FuzzyConfig cfg_;
  std::vector<BitCode> masks_;
  std::vector<std::size_t> thresholds_;
  std::vector<std::unordered_map<BitCode, std::vector<std::size_t>, BitCodeHash>> buckets_;
  std::vector<FuzzyEntry> entries_;
  std::unique_ptr<std::shared_mutex> mutex_ = std::make_unique<std::shared_mutex>();
};

enum class PairMode { tuple, merge };

struct ListConfig {
  std::size_t code_length = 128;
  std::size_t marker_bits = 16;
  PairMode mode = PairMode::tuple;
  // Similarity floor for chaining a pair during traversal.
  double match_threshold = 0.8;
  std::size_t merge_budget = 64;
  LexicalConfig index_alphabet{.code_length = 128, .bits_per_symbol = 6, .max_positions = 8,
                               .indexing = PositionIndexing::from_low_digit};
  std::uint64_t seed = 0;

  void validate() const;
};

// Reserved codes and the index alphabet shared by every list of one store.
class ListEncoding {
 public:
  explicit ListEncoding(const ListConfig& cfg);

  const ListConfig& config() const noexcept { return cfg_; }
  const BitCode& top() const noexcept { return top_; }
  const BitCode& bottom() const noexcept { return bottom_; }
  // Reserved random code for a fresh list id.
  BitCode make_id(std::uint64_t salt) const;
  BitCode index_code(std::size_t i) const;

 private:
  ListConfig cfg_;
  BitCode top_;
  BitCode bottom_;
  LexicalAlphabet alphabet_;
};

std::vector<BitCode> encode_list(const std::vector<BitCode>& items, const BitCode& id, const ListEncoding& enc,
                                 bool indexed);

// Raised when the chain breaks; carries what was recovered before the break.
class PartialListError : public Error {
 public:
  PartialListError(const std::string& what, std::vector<BitCode> prefix)
      : Error(what), prefix_(std::move(prefix)) {}
  const std::vector<BitCode>& prefix() const noexcept { return prefix_; }

 private:
  std::vector<BitCode> prefix_;
};

std::vector<BitCode> traverse_list(const FuzzyStore& store, const BitCode& id, const ListEncoding& enc,
                                   bool indexed);

// Length of an indexed list, found from the id|bottom pair.
std::size_t indexed_list_length(const FuzzyStore& store, const BitCode& id, const ListEncoding& enc);

}  // namespace damp
