#include "damp/encoders.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "damp/rng.hpp"

namespace damp {

std::string_view to_string(Scale s) {
  return s == Scale::linear ? "linear" : "logarithmic";
}

Scale scale_from_string(std::string_view name) {
  if (name == "linear") return Scale::linear;
  if (name == "logarithmic" || name == "log") return Scale::logarithmic;
  throw InvalidOperands("unknown scale '" + std::string(name) + "'");
}

void ScalarSpaceConfig::validate() const {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) throw ConfigError("range", "need finite lo < hi");
  if (scale == Scale::logarithmic && !(lo > 0.0)) throw ConfigError("range.lo", "logarithmic scale needs lo > 0");
  if (layer_count < 2) throw ConfigError("layer_count", "must be at least 2");
  if (!(overlap_fraction > 0.0 && overlap_fraction < 1.0)) {
    throw ConfigError("overlap_fraction", "must lie in (0, 1)");
  }
  if (code_length == 0) throw ConfigError("code_length", "must be positive");
  if (bits_per_detector == 0) throw ConfigError("bits_per_detector", "must be positive");
  if (multiplier < 2) throw ConfigError("multiplier", "must be at least 2");
  if (std::pow(static_cast<double>(multiplier), static_cast<double>(layer_count - 1)) > 1e7) {
    throw ConfigError("layer_count", "too many detectors in the finest layer");
  }
}

namespace {

std::vector<std::size_t> draw_bits(Rng& rng, std::size_t code_length, std::size_t count) {
  std::vector<std::size_t> bits(count);
  for (auto& b : bits) b = static_cast<std::size_t>(rng.below(code_length));
  return bits;
}

// Bits dealt from reshuffled permutations of the code, so a layer repeats a bit only once
// it has used them all.
class BitPool {
 public:
  BitPool(Rng& rng, std::size_t code_length) : rng_(rng), bits_(code_length) {
    std::iota(bits_.begin(), bits_.end(), std::size_t{0});
    next_ = bits_.size();
  }
  std::vector<std::size_t> take(std::size_t count) {
    std::vector<std::size_t> out;
    out.reserve(count);
    while (out.size() < count) {
      if (next_ == bits_.size()) {
        rng_.shuffle(bits_.begin(), bits_.end());
        next_ = 0;
      }
      out.push_back(bits_[next_++]);
    }
    return out;
  }

 private:
  Rng& rng_;
  std::vector<std::size_t> bits_;
  std::size_t next_ = 0;
};

// Tiles [lo, lo + count * spacing] clipped to [clip_lo, clip_hi].
ScalarLayer tile_layer(double lo, double spacing, std::size_t count, double overlap, double clip_lo, double clip_hi,
                       ColourRank rank, Rng& rng, const ScalarSpaceConfig& cfg) {
  ScalarLayer layer;
  layer.rank = rank;
  layer.detectors.reserve(count);
  const double pad = overlap * spacing / 2.0;
  BitPool pool(rng, cfg.code_length);
  for (std::size_t j = 0; j < count; ++j) {
    Interval1D d;
    d.lo = std::max(clip_lo, lo + static_cast<double>(j) * spacing - pad);
    d.hi = std::min(clip_hi, lo + static_cast<double>(j + 1) * spacing + pad);
    if (j == 0) d.lo = clip_lo;
    if (j + 1 == count) d.hi = clip_hi;
    d.bits = pool.take(cfg.bits_per_detector);
    layer.detectors.push_back(std::move(d));
  }
  return layer;
}

}  // namespace

DetectorSpace1D::DetectorSpace1D(const ScalarSpaceConfig& cfg, std::vector<ScalarLayer> layers)
    : cfg_(cfg), layers_(std::move(layers)) {}

bool DetectorSpace1D::in_range(double x) const noexcept {
  return std::isfinite(x) && x >= cfg_.lo && x <= cfg_.hi;
}

double DetectorSpace1D::to_domain(double x) const {
  return cfg_.scale == Scale::logarithmic ? std::log(x) : x;
}

std::vector<DetectorRef> DetectorSpace1D::active(double x) const {
  if (!in_range(x)) {
    throw OutOfDomain("value " + std::to_string(x) + " outside [" + std::to_string(cfg_.lo) + ", " +
                      std::to_string(cfg_.hi) + "]");
  }
  const double t = to_domain(x);
  std::vector<DetectorRef> out;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& dets = layers_[k].detectors;
    // Intervals are sorted by lo and hi; scan the few that can contain t.
    auto it = std::lower_bound(dets.begin(), dets.end(), t, [](const Interval1D& d, double v) { return d.hi < v; });
    for (; it != dets.end() && it->lo <= t; ++it) {
      if (it->hi >= t) out.push_back({k, static_cast<std::size_t>(it - dets.begin())});
    }
  }
  return out;
}

DetectorSpace1D DetectorSpace1D::keep_layers(std::size_t first, std::size_t last) const {
  last = std::min(last, layers_.size());
  if (first > last) first = last;
  DetectorSpace1D out = *this;
  out.layers_.assign(layers_.begin() + static_cast<std::ptrdiff_t>(first),
                     layers_.begin() + static_cast<std::ptrdiff_t>(last));
  return out;
}

DetectorSpace1D build_scalar_space(const ScalarSpaceConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  DetectorSpace1D probe(cfg, {});
  const double lo = probe.to_domain(cfg.lo);
  const double hi = probe.to_domain(cfg.hi);
  std::vector<ScalarLayer> layers;
  std::size_t count = 1;
  for (std::size_t k = 0; k < cfg.layer_count; ++k) {
    const double spacing = (hi - lo) / static_cast<double>(count);
    layers.push_back(tile_layer(lo, spacing, count, cfg.overlap_fraction, lo, hi, static_cast<ColourRank>(k), rng, cfg));
    count *= cfg.multiplier;
  }
  return DetectorSpace1D(cfg, std::move(layers));
}

ColouredCode encode_scalar(const DetectorSpace1D& space, double x) {
  ColouredCode out(space.code_length());
  for (const auto& ref : space.active(x)) {
    const auto& layer = space.layers()[ref.layer];
    for (std::size_t b : layer.detectors[ref.index].bits) out.add(b, layer.rank);
  }
  return out;
}

DetectorSpace1D refine_region(const DetectorSpace1D& space, double sub_lo, double sub_hi, std::size_t extra_layers) {
  const auto& cfg = space.config();
  if (!(sub_lo < sub_hi) || !space.in_range(sub_lo) || !space.in_range(sub_hi)) {
    throw OutOfDomain("refinement subrange must be an interval inside the space range");
  }
  DetectorSpace1D out = space;
  if (extra_layers == 0) return out;
  const double lo = space.to_domain(cfg.lo);
  const double hi = space.to_domain(cfg.hi);
  const double a = space.to_domain(sub_lo);
  const double b = space.to_domain(sub_hi);

  ColourRank next_rank = 0;
  for (const auto& l : space.layers()) next_rank = std::max(next_rank, l.rank + 1);
  const std::uint64_t salt = std::bit_cast<std::uint64_t>(a) ^ splitmix64(std::bit_cast<std::uint64_t>(b));
  Rng rng(derive_seed(cfg.seed, salt + space.layers().size()));

  // Continue the geometric refinement from the current depth.
  const std::size_t depth = space.layers().size();
  for (std::size_t e = 0; e < extra_layers; ++e) {
    const double spacing =
        (hi - lo) / std::pow(static_cast<double>(cfg.multiplier), static_cast<double>(depth + e));
    const auto count = static_cast<std::size_t>(std::ceil((b - a) / spacing - 1e-9));
    if (count > 10'000'000) throw ConfigError("extra_layers", "refinement too deep");
    const double cell = (b - a) / static_cast<double>(std::max<std::size_t>(count, 1));
    out.layers_.push_back(
        tile_layer(a, cell, std::max<std::size_t>(count, 1), cfg.overlap_fraction, a, b, next_rank++, rng, cfg));
  }
  return out;
}

void PolarConfig::validate() const {
  if (!(angle_overlap_deg > 0.0)) throw ConfigError("angle_overlap_deg", "must be positive");
  if (!(modulus_overlap > 0.0)) throw ConfigError("modulus_overlap", "must be positive");
  if (layers == 0 || layers > 16) throw ConfigError("layers", "must lie in [1, 16]");
  if (code_length == 0) throw ConfigError("code_length", "must be positive");
  if (bits_per_detector == 0) throw ConfigError("bits_per_detector", "must be positive");
  if (!(base_sectors > 0.0)) throw ConfigError("base_sectors", "must be positive");
  if (!(min_radius >= 0.0 && min_radius <= 1.0)) throw ConfigError("min_radius", "must lie in [0, 1]");
  if (!(modulus_lo < modulus_hi)) throw ConfigError("modulus_range", "need lo < hi");
}

double angle_difference(double a_deg, double b_deg) noexcept {
  double d = std::fmod(a_deg - b_deg, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

PolarEncoder build_polar_encoder(const PolarConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<PolarDetector> dets;
  const double overlap_ratio = cfg.angle_overlap_deg / (360.0 / cfg.base_sectors);
  std::size_t bands = 1;
  for (std::size_t k = 0; k < cfg.layers; ++k) {
    const double h = 1.0 / static_cast<double>(bands);
    for (std::size_t j = 0; j < bands; ++j) {
      const double centre = (static_cast<double>(j) + 0.5) * h;
      const double half_modulus = h / 2.0 * (1.0 + cfg.modulus_overlap);
      const double radius = cfg.min_radius + (1.0 - cfg.min_radius) * centre;
      const auto sectors = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(cfg.base_sectors * static_cast<double>(bands) * radius)));
      const double step = 360.0 / static_cast<double>(sectors);
      const double half_angle = sectors > 1 ? step / 2.0 * (1.0 + overlap_ratio) : 180.0;
      const double offset = rng.uniform(0.0, step);
      for (std::size_t i = 0; i < sectors; ++i) {
        PolarDetector d;
        d.angle = std::fmod(offset + static_cast<double>(i) * step, 360.0);
        d.half_angle = half_angle;
        d.modulus = centre;
        d.half_modulus = half_modulus;
        d.layer = k;
        d.bits = draw_bits(rng, cfg.code_length, cfg.bits_per_detector);
        dets.push_back(std::move(d));
      }
    }
    bands *= 2;
  }
  return PolarEncoder(cfg, std::move(dets));
}

std::vector<std::size_t> PolarEncoder::active(double angle_deg, double modulus) const {
  if (!std::isfinite(angle_deg)) throw OutOfDomain("angle must be finite");
  if (!(modulus >= cfg_.modulus_lo && modulus <= cfg_.modulus_hi)) {
    throw OutOfDomain("modulus " + std::to_string(modulus) + " outside [" + std::to_string(cfg_.modulus_lo) + ", " +
                      std::to_string(cfg_.modulus_hi) + "]");
  }
  const double u = (modulus - cfg_.modulus_lo) / (cfg_.modulus_hi - cfg_.modulus_lo);
  angle_deg = std::fmod(angle_deg, 360.0);
  if (angle_deg < 0.0) angle_deg += 360.0;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < detectors_.size(); ++i) {
    const auto& d = detectors_[i];
    if (std::abs(u - d.modulus) > d.half_modulus) continue;
    if (std::abs(angle_difference(angle_deg, d.angle)) > d.half_angle) continue;
    out.push_back(i);
  }
  return out;
}

ColouredCode encode_polar(const PolarEncoder& enc, double angle_deg, double modulus) {
  ColouredCode out(enc.config().code_length);
  for (std::size_t i : enc.active(angle_deg, modulus)) {
    const auto& d = enc.detectors()[i];
    for (std::size_t b : d.bits) out.add(b, static_cast<ColourRank>(d.layer));
  }
  return out;
}

std::vector<ColouredCode> gradient_codes(const PolarEncoder& enc, std::size_t angles, std::size_t moduli) {
  if (angles == 0 || moduli < 2) throw InvalidOperands("gradient grid needs angles >= 1 and moduli >= 2");
  const double lo = enc.config().modulus_lo;
  const double hi = enc.config().modulus_hi;
  std::vector<ColouredCode> out;
  out.reserve(angles * moduli);
  for (std::size_t i = 0; i < angles; ++i) {
    const double angle = 360.0 * static_cast<double>(i) / static_cast<double>(angles);
    for (std::size_t j = 0; j < moduli; ++j) {
      const double m = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(moduli - 1);
      out.push_back(encode_polar(enc, angle, m));
    }
  }
  return out;
}

ResolutionReport code_resolution(std::span<const BitCode> codes) {
  std::unordered_map<BitCode, std::size_t, BitCodeHash> counts;
  for (const auto& c : codes) ++counts[c];
  ResolutionReport r;
  r.points = codes.size();
  r.distinct = counts.size();
  for (const auto& [code, n] : counts) r.largest_cluster = std::max(r.largest_cluster, n);
  r.ratio = r.distinct == 0 ? 0.0 : static_cast<double>(r.points) / static_cast<double>(r.distinct);
  return r;
}

ColouredCode encode_cyclic_componentwise(const DetectorSpace1D& f1, const DetectorSpace1D& f2,
                                         const DetectorSpace1D& f3, double angle_deg, double modulus,
                                         MergePolicy policy) {
  const double rad = angle_deg * std::numbers::pi / 180.0;
  // Clamp rounding noise so sin/cos stay inside [-1, 1].
  const double s = std::clamp(std::sin(rad), -1.0, 1.0);
  const double c = std::clamp(std::cos(rad), -1.0, 1.0);
  const ColouredCode parts[] = {encode_scalar(f1, s), encode_scalar(f2, c), encode_scalar(f3, modulus)};
  if (policy.saturation_budget == 0) policy.saturation_budget = parts[0].length();
  return colour_merge(parts, policy);
}

std::string_view to_string(PositionIndexing p) {
  switch (p) {
    case PositionIndexing::from_low_digit: return "from_low_digit";
    case PositionIndexing::from_start: return "from_start";
    case PositionIndexing::from_end: return "from_end";
  }
  return "?";
}

PositionIndexing position_indexing_from_string(std::string_view name) {
  for (auto p : {PositionIndexing::from_low_digit, PositionIndexing::from_start, PositionIndexing::from_end}) {
    if (to_string(p) == name) return p;
  }
  throw InvalidOperands("unknown position indexing '" + std::string(name) + "'");
}

void LexicalConfig::validate() const {
  if (code_length == 0) throw ConfigError("code_length", "must be positive");
  if (bits_per_symbol == 0 || bits_per_symbol > code_length) {
    throw ConfigError("bits_per_symbol", "must lie in [1, code_length]");
  }
  if (max_positions == 0) throw ConfigError("max_positions", "must be positive");
}

LexicalAlphabet::LexicalAlphabet(const LexicalConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

std::vector<std::size_t> LexicalAlphabet::bits(std::size_t position, char32_t symbol, std::size_t k) const {
  if (k > cfg_.code_length) throw InvalidOperands("cannot draw more distinct bits than the code length");
  const std::uint64_t base =
      splitmix64(cfg_.seed ^ splitmix64(static_cast<std::uint64_t>(position) * 0x9e3779b97f4a7c15ULL) ^
                 splitmix64(static_cast<std::uint64_t>(symbol) + 0xd1b54a32d192ed03ULL));
  std::vector<std::size_t> out;
  out.reserve(k);
  std::vector<bool> seen(cfg_.code_length, false);
  for (std::uint64_t counter = 0; out.size() < k; ++counter) {
    const std::uint64_t h = splitmix64(base + counter);
    const auto idx = static_cast<std::size_t>(h % cfg_.code_length);
    if (!seen[idx]) {
      seen[idx] = true;
      out.push_back(idx);
    }
  }
  return out;
}

BitCode LexicalAlphabet::code(std::size_t position, char32_t symbol) const {
  const auto b = bits(position, symbol, cfg_.bits_per_symbol);
  return BitCode::from_indices(cfg_.code_length, b);
}

ColouredCode encode_integer_lexical(long long n, const LexicalAlphabet& alphabet) {
  const auto& cfg = alphabet.config();
  unsigned long long magnitude = n < 0 ? 0ULL - static_cast<unsigned long long>(n) : static_cast<unsigned long long>(n);
  std::vector<unsigned> digits;  // low digit first
  do {
    digits.push_back(static_cast<unsigned>(magnitude % 10));
    magnitude /= 10;
  } while (magnitude != 0);
  if (digits.size() > cfg.max_positions) {
    throw OutOfDomain(std::to_string(n) + " needs " + std::to_string(digits.size()) + " digit positions, only " +
                      std::to_string(cfg.max_positions) + " configured");
  }
  ColouredCode out(cfg.code_length);
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (cfg.omit_zeros && digits[i] == 0 && digits.size() > 1) continue;
    const std::size_t pos = cfg.indexing == PositionIndexing::from_start ? digits.size() - 1 - i : i;
    for (std::size_t b : alphabet.bits(pos, U'0' + digits[i], cfg.bits_per_symbol)) {
      out.add(b, static_cast<ColourRank>(pos));
    }
  }
  if (n < 0) {
    for (std::size_t b : alphabet.bits(LexicalAlphabet::kSignPosition, U'-', cfg.bits_per_symbol)) out.add(b, 0);
  }
  return out;
}

ColouredCode encode_word_positional(std::string_view utf8, const LexicalAlphabet& alphabet) {
  const auto& cfg = alphabet.config();
  const std::u32string word = decode_utf8(utf8);
  if (word.size() > cfg.max_positions) {
    throw OutOfDomain("word of length " + std::to_string(word.size()) + " exceeds " +
                      std::to_string(cfg.max_positions) + " positions");
  }
  ColouredCode out(cfg.code_length);
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (word[i] < 0x20 || word[i] == 0x7f) throw OutOfDomain("unsupported control character in word");
    const std::size_t pos = cfg.indexing == PositionIndexing::from_start ? i : word.size() - 1 - i;
    for (std::size_t b : alphabet.bits(pos, word[i], cfg.bits_per_symbol)) out.add(b, static_cast<ColourRank>(pos));
  }
  return out;
}

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xe0) == 0xc0) {
      extra = 1;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      extra = 2;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      throw FormatError("invalid UTF-8 lead byte");
    }
    if (i + extra >= s.size() && extra > 0) throw FormatError("truncated UTF-8 sequence");
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xc0) != 0x80) throw FormatError("invalid UTF-8 continuation byte");
      cp = (cp << 6) | (cc & 0x3f);
    }
    static constexpr char32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) {
      throw FormatError("invalid UTF-8 code point");
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  for (char32_t cp : s) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xc0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3f));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xe0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
      out += static_cast<char>(0x80 | (cp & 0x3f));
    } else {
      out += static_cast<char>(0xf0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
      out += static_cast<char>(0x80 | (cp & 0x3f));
    }
  }
  return out;
}

}  // namespace damp
