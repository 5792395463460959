#pragma once

// Wide-detector encoders: scalars, polar/gradient positions, lexical numbers and words.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "damp/bitcode.hpp"
#include "damp/chroma.hpp"

namespace damp {

enum class Scale { linear, logarithmic };

std::string_view to_string(Scale s);
Scale scale_from_string(std::string_view name);

struct ScalarSpaceConfig {
  double lo = 0.0;
  double hi = 1.0;
  Scale scale = Scale::linear;
  std::size_t layer_count = 7;
  double overlap_fraction = 0.25;
  std::size_t code_length = 128;
  std::size_t bits_per_detector = 1;
  std::size_t multiplier = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Interval1D {
  // Bounds in the working domain (log of the value for logarithmic scale).
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> bits;
};

struct ScalarLayer {
  // Colour rank of every detector in the layer.
  ColourRank rank = 0;
  std::vector<Interval1D> detectors;
};

struct DetectorRef {
  std::size_t layer = 0;
  std::size_t index = 0;
  friend bool operator==(const DetectorRef&, const DetectorRef&) = default;
};

class DetectorSpace1D {
 public:
  DetectorSpace1D() = default;
  DetectorSpace1D(const ScalarSpaceConfig& cfg, std::vector<ScalarLayer> layers);

  const ScalarSpaceConfig& config() const noexcept { return cfg_; }
  std::size_t code_length() const noexcept { return cfg_.code_length; }
  const std::vector<ScalarLayer>& layers() const noexcept { return layers_; }

  bool in_range(double x) const noexcept;
  // Maps a value into the working domain.
  double to_domain(double x) const;

  // Detectors whose receptive interval contains x.
  std::vector<DetectorRef> active(double x) const;

  // Copy holding only layers [first, last).
  DetectorSpace1D keep_layers(std::size_t first, std::size_t last) const;

 private:
  friend DetectorSpace1D refine_region(const DetectorSpace1D&, double, double, std::size_t);

  ScalarSpaceConfig cfg_;
  std::vector<ScalarLayer> layers_;
};

DetectorSpace1D build_scalar_space(const ScalarSpaceConfig& cfg);
ColouredCode encode_scalar(const DetectorSpace1D& space, double x);

// Adds extra_layers finer layers confined to [sub_lo, sub_hi].
DetectorSpace1D refine_region(const DetectorSpace1D& space, double sub_lo, double sub_hi, std::size_t extra_layers);

struct PolarConfig {
  double angle_overlap_deg = 170.0;
  double modulus_overlap = 0.3;
  std::size_t layers = 6;
  std::size_t code_length = 128;
  std::size_t bits_per_detector = 1;
  // Sectors of a band at unit radius in the root layer; doubled per layer.
  double base_sectors = 2.2;
  // Effective radius at modulus 0, so short vectors keep a few wide sectors.
  double min_radius = 0.3;
  double modulus_lo = 0.0;
  double modulus_hi = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PolarDetector {
  double angle = 0.0;
  double half_angle = 0.0;
  double modulus = 0.0;
  double half_modulus = 0.0;
  std::size_t layer = 0;
  std::vector<std::size_t> bits;
};

class PolarEncoder {
 public:
  PolarEncoder() = default;
  PolarEncoder(const PolarConfig& cfg, std::vector<PolarDetector> detectors)
      : cfg_(cfg), detectors_(std::move(detectors)) {}

  const PolarConfig& config() const noexcept { return cfg_; }
  const std::vector<PolarDetector>& detectors() const noexcept { return detectors_; }
  std::vector<std::size_t> active(double angle_deg, double modulus) const;

 private:
  PolarConfig cfg_;
  std::vector<PolarDetector> detectors_;
};

// Signed difference a - b folded into (-180, 180].
double angle_difference(double a_deg, double b_deg) noexcept;

PolarEncoder build_polar_encoder(const PolarConfig& cfg);
ColouredCode encode_polar(const PolarEncoder& enc, double angle_deg, double modulus);

// Codes of the angles x moduli grid: angle i * 360 / angles, modulus lo + j * (hi - lo) / (moduli - 1),
// angle-major.
std::vector<ColouredCode> gradient_codes(const PolarEncoder& enc, std::size_t angles = 100, std::size_t moduli = 100);

struct ResolutionReport {
  std::size_t points = 0;
  std::size_t distinct = 0;
  std::size_t largest_cluster = 0;
  // points / distinct
  double ratio = 0.0;
};

ResolutionReport code_resolution(std::span<const BitCode> codes);

// f1(sin) | f2(cos) | f3(modulus) merged under the given policy (budget 0 means code length).
ColouredCode encode_cyclic_componentwise(const DetectorSpace1D& f1, const DetectorSpace1D& f2,
                                         const DetectorSpace1D& f3, double angle_deg, double modulus,
                                         MergePolicy policy = {});

enum class PositionIndexing { from_low_digit, from_start, from_end };

std::string_view to_string(PositionIndexing p);
PositionIndexing position_indexing_from_string(std::string_view name);

struct LexicalConfig {
  std::size_t code_length = 128;
  std::size_t bits_per_symbol = 4;
  std::size_t max_positions = 32;
  PositionIndexing indexing = PositionIndexing::from_start;
  bool omit_zeros = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Stateless map (position, symbol) -> code derived from a seeded hash.
class LexicalAlphabet {
 public:
  static constexpr std::size_t kSignPosition = static_cast<std::size_t>(-1);

  LexicalAlphabet() = default;
  explicit LexicalAlphabet(const LexicalConfig& cfg);

  const LexicalConfig& config() const noexcept { return cfg_; }

  // First k bits of the (position, symbol) bit sequence; distinct and deterministic.
  // Prefixes are nested: bits(p, s, k) is a prefix of bits(p, s, k + 1).
  std::vector<std::size_t> bits(std::size_t position, char32_t symbol, std::size_t k) const;
  BitCode code(std::size_t position, char32_t symbol) const;

 private:
  LexicalConfig cfg_;
};

ColouredCode encode_integer_lexical(long long n, const LexicalAlphabet& alphabet);
ColouredCode encode_word_positional(std::string_view utf8, const LexicalAlphabet& alphabet);

// UTF-8 decoding; malformed input throws FormatError.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

}  // namespace damp
