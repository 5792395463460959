#include "damp/bitcode.hpp"

#include <algorithm>
#include <charconv>

namespace damp {

BitCode BitCode::from_indices(std::size_t length, std::span<const std::size_t> indices) {
  BitCode c(length);
  for (std::size_t i : indices) c.set(i);
  return c;
}

BitCode BitCode::from_bit_string(std::string_view bits) {
  BitCode c(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      c.set(i);
    } else if (bits[i] != '0') {
      throw FormatError("bit string may only contain '0' and '1'");
    }
  }
  return c;
}

std::vector<std::size_t> BitCode::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    word_type word = words_[w];
    while (word != 0) {
      const int b = std::countr_zero(word);
      out.push_back(w * kWordBits + static_cast<std::size_t>(b));
      word &= word - 1;
    }
  }
  return out;
}

std::string BitCode::to_bit_string() const {
  std::string s(length_, '0');
  for (std::size_t i : indices()) s[i] = '1';
  return s;
}

std::size_t BitCodeHash::operator()(const BitCode& c) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ c.length();
  for (auto w : c.words()) {
    h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

namespace {

void require_same_length(const BitCode& a, const BitCode& b) {
  if (a.length() != b.length()) {
    throw InvalidOperands("code length mismatch: " + std::to_string(a.length()) + " vs " +
                          std::to_string(b.length()));
  }
}

}  // namespace

BitCode bit_or(const BitCode& a, const BitCode& b) {
  require_same_length(a, b);
  BitCode out = a;
  auto ow = out.mutable_words();
  auto bw = b.words();
  for (std::size_t i = 0; i < ow.size(); ++i) ow[i] |= bw[i];
  return out;
}

BitCode bit_and(const BitCode& a, const BitCode& b) {
  require_same_length(a, b);
  BitCode out = a;
  auto ow = out.mutable_words();
  auto bw = b.words();
  for (std::size_t i = 0; i < ow.size(); ++i) ow[i] &= bw[i];
  return out;
}

BitCode concat(const BitCode& a, const BitCode& b) {
  BitCode out(a.length() + b.length());
  for (std::size_t i : a.indices()) out.set(i);
  for (std::size_t i : b.indices()) out.set(a.length() + i);
  return out;
}

std::size_t intersection_count(const BitCode& a, const BitCode& b) {
  require_same_length(a, b);
  return detail::and_count(a.words(), b.words());
}

std::string to_literal(const BitCode& code) {
  static constexpr char kHex[] = "0123456789abcdef";
  const std::size_t digits = (code.length() + 3) / 4;
  std::string hex(digits, '0');
  for (std::size_t i : code.indices()) {
    const std::size_t nibble = i / 4;
    const std::size_t pos = digits - 1 - nibble;
    const auto v = static_cast<unsigned>(hex[pos] <= '9' ? hex[pos] - '0' : hex[pos] - 'a' + 10);
    hex[pos] = kHex[v | (1U << (i % 4))];
  }
  return std::to_string(code.length()) + ":" + hex;
}

BitCode parse_literal(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw FormatError("code literal missing ':'");
  std::size_t length = 0;
  const auto* first = text.data();
  const auto* last = text.data() + colon;
  auto [ptr, ec] = std::from_chars(first, last, length);
  if (ec != std::errc{} || ptr != last) throw FormatError("code literal has a bad length prefix");
  const std::string_view hex = text.substr(colon + 1);
  const std::size_t digits = (length + 3) / 4;
  if (hex.size() != digits) {
    throw FormatError("code literal of length " + std::to_string(length) + " needs " + std::to_string(digits) +
                      " hex digits, got " + std::to_string(hex.size()));
  }
  BitCode code(length);
  for (std::size_t pos = 0; pos < digits; ++pos) {
    const char ch = hex[pos];
    unsigned v = 0;
    if (ch >= '0' && ch <= '9') {
      v = static_cast<unsigned>(ch - '0');
    } else if (ch >= 'a' && ch <= 'f') {
      v = static_cast<unsigned>(ch - 'a' + 10);
    } else {
      throw FormatError("code literal must be lowercase hex");
    }
    const std::size_t nibble = digits - 1 - pos;
    for (unsigned b = 0; b < 4; ++b) {
      if ((v >> b) & 1U) {
        const std::size_t idx = nibble * 4 + b;
        if (idx >= length) throw FormatError("code literal sets a bit beyond its length");
        code.set(idx);
      }
    }
  }
  return code;
}

double code_capacity(std::size_t length, std::size_t saturation) {
  if (saturation > length) return 0.0;
  const std::size_t k = std::min(saturation, length - saturation);
  long double result = 1.0L;
  for (std::size_t i = 0; i < k; ++i) {
    result = result * static_cast<long double>(length - i) / static_cast<long double>(i + 1);
  }
  return static_cast<double>(result);
}

FeatureVector::FeatureVector(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidOperands("feature vector components must be finite");
    if (v < 0.0 || v > 1.0) throw InvalidOperands("feature vector components must lie in [0, 1]");
  }
}

FeatureVector FeatureVector::normalise(std::span<const double> raw) {
  if (raw.empty()) return FeatureVector{};
  for (double v : raw) {
    if (!std::isfinite(v)) throw InvalidOperands("feature vector components must be finite");
  }
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double span = *hi - *lo;
  std::vector<double> out(raw.size(), 0.0);
  if (span > 0.0) {
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - *lo) / span;
  }
  return FeatureVector(std::move(out));
}

bool FeatureVector::none() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

std::size_t point_length(const Point& p) {
  return std::visit([](const auto& v) { return v.length(); }, p);
}

bool point_is_zero(const Point& p) {
  return std::visit([](const auto& v) { return v.none(); }, p);
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::jaccard: return "jaccard";
    case Metric::jaccard_quadratic: return "jaccard_quadratic";
    case Metric::cosine_discrete: return "cosine_discrete";
    case Metric::cosine_real: return "cosine_real";
    case Metric::cosine_relaxed: return "cosine_relaxed";
  }
  return "?";
}

Metric metric_from_string(std::string_view name) {
  for (Metric m : {Metric::jaccard, Metric::jaccard_quadratic, Metric::cosine_discrete, Metric::cosine_real,
                   Metric::cosine_relaxed}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidOperands("unknown metric '" + std::string(name) + "'");
}

void SimilarityConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda", "must lie in [0, 1]");
  if (!(eta > 0.0)) throw ConfigError("eta", "must be positive");
}

namespace detail {

double real_similarity(Metric metric, std::span<const double> a, std::span<const double> b) noexcept {
  double num = 0.0;
  double den_a = 0.0;
  double den_b = 0.0;
  double result = 0.0;
  switch (metric) {
    case Metric::jaccard: {
      double mx = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::min(a[i], b[i]);
        mx += std::max(a[i], b[i]);
      }
      result = mx == 0.0 ? 0.0 : num / mx;
      break;
    }
    case Metric::jaccard_quadratic: {
      double mx = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        num += a[i] * b[i];
        mx += std::max(a[i] * a[i], b[i] * b[i]);
      }
      result = mx == 0.0 ? 0.0 : num / mx;
      break;
    }
    case Metric::cosine_real:
    case Metric::cosine_discrete: {
      for (std::size_t i = 0; i < a.size(); ++i) {
        num += a[i] * b[i];
        den_a += a[i] * a[i];
        den_b += b[i] * b[i];
      }
      const double den = std::sqrt(den_a) * std::sqrt(den_b);
      result = den == 0.0 ? 0.0 : num / den;
      break;
    }
    case Metric::cosine_relaxed: {
      for (std::size_t i = 0; i < a.size(); ++i) {
        num += a[i] * b[i];
        den_a += a[i];
        den_b += b[i];
      }
      const double den = std::sqrt(den_a) * std::sqrt(den_b);
      result = den == 0.0 ? 0.0 : num / den;
      break;
    }
  }
  return std::clamp(result, 0.0, 1.0);
}

}  // namespace detail

double similarity(const BitCode& a, const BitCode& b, Metric metric) {
  require_same_length(a, b);
  return detail::bit_similarity(metric, a.words(), a.count(), b.words(), b.count());
}

double similarity(const FeatureVector& a, const FeatureVector& b, Metric metric) {
  if (a.length() != b.length()) {
    throw InvalidOperands("feature vector length mismatch: " + std::to_string(a.length()) + " vs " +
                          std::to_string(b.length()));
  }
  if (metric == Metric::cosine_discrete) {
    throw InvalidOperands("cosine_discrete requires bit codes");
  }
  return detail::real_similarity(metric, a.values(), b.values());
}

double similarity(const Point& a, const Point& b, Metric metric) {
  if (a.index() != b.index()) throw InvalidOperands("cannot compare a bit code with a feature vector");
  if (a.index() == 0) return similarity(std::get<BitCode>(a), std::get<BitCode>(b), metric);
  return similarity(std::get<FeatureVector>(a), std::get<FeatureVector>(b), metric);
}

}  // namespace damp
