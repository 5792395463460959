#pragma once

// Colour-ranked codes and the saturation-bounded merge.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "damp/bitcode.hpp"

namespace damp {

using ColourRank = std::uint32_t;

// Bit code with one colour rank per set bit. Rank 0 is the longest wavelength.
class ColouredCode {
 public:
  ColouredCode() = default;
  explicit ColouredCode(std::size_t length) : code_(length), ranks_(length, 0) {}
  // Every set bit of code gets the same rank.
  ColouredCode(BitCode code, ColourRank rank);

  std::size_t length() const noexcept { return code_.length(); }
  std::size_t count() const noexcept { return code_.count(); }
  const BitCode& code() const noexcept { return code_; }
  bool test(std::size_t i) const { return code_.test(i); }

  // Rank of a set bit; throws for cleared bits.
  ColourRank rank(std::size_t i) const;

  // Sets bit i; an already set bit keeps the smaller of the two ranks.
  void add(std::size_t i, ColourRank rank);
  void add(const ColouredCode& other);
  void remove(std::size_t i);

  // (bit, rank) for every set bit, ascending by bit.
  std::vector<std::pair<std::size_t, ColourRank>> entries() const;

  friend bool operator==(const ColouredCode& a, const ColouredCode& b) = default;

 private:
  BitCode code_;
  std::vector<ColourRank> ranks_;
};

enum class Retention { keep_long_wave, keep_short_wave, keep_mid };

std::string_view to_string(Retention r);
Retention retention_from_string(std::string_view name);

struct MergePolicy {
  std::size_t saturation_budget = 0;
  Retention retention = Retention::keep_long_wave;
};

// Union of the inputs; over budget, bits are ordered by (rank per retention, bit index)
// and truncated to the budget.
ColouredCode colour_merge(std::span<const ColouredCode> inputs, const MergePolicy& policy);

struct DetectorOutput {
  BitCode bits;
  double lambda = 0.0;
};

// Colour rank is the position of lambda among the distinct lambdas present; long waves kept.
ColouredCode merge_detector_outputs(std::span<const DetectorOutput> outputs, std::size_t budget);

// "<len>:<hex>;colours=[(bit,rank),...]"
std::string to_literal(const ColouredCode& code);
ColouredCode parse_coloured_literal(std::string_view text);

}  // namespace damp
