#pragma once

// Fixed-length sparse bit vectors, real feature vectors and the similarity
// measures defined over them.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "damp/errors.hpp"

namespace damp {

class BitCode {
 public:
  using word_type = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  BitCode() = default;
  explicit BitCode(std::size_t length)
      : length_(length), words_((length + kWordBits - 1) / kWordBits, 0) {}

  static BitCode from_indices(std::size_t length, std::span<const std::size_t> indices);
  static BitCode from_indices(std::size_t length, std::initializer_list<std::size_t> indices) {
    return from_indices(length, std::span<const std::size_t>(indices.begin(), indices.size()));
  }
  // '0'/'1' string, character k is bit k.
  static BitCode from_bit_string(std::string_view bits);

  std::size_t length() const noexcept { return length_; }
  std::size_t word_count() const noexcept { return words_.size(); }
  std::span<const word_type> words() const noexcept { return words_; }
  std::span<word_type> mutable_words() noexcept { return words_; }

  bool test(std::size_t i) const {
    check_index(i);
    return (words_[i / kWordBits] >> (i % kWordBits)) & 1U;
  }
  void set(std::size_t i, bool value = true) {
    check_index(i);
    const word_type mask = word_type{1} << (i % kWordBits);
    if (value) {
      words_[i / kWordBits] |= mask;
    } else {
      words_[i / kWordBits] &= ~mask;
    }
  }
  void reset(std::size_t i) { set(i, false); }

  // Saturation: number of set bits.
  std::size_t count() const noexcept {
    std::size_t c = 0;
    for (word_type w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  bool none() const noexcept { return count() == 0; }

  // Set bit indices in ascending order.
  std::vector<std::size_t> indices() const;
  std::string to_bit_string() const;

  friend bool operator==(const BitCode& a, const BitCode& b) = default;

 private:
  void check_index(std::size_t i) const {
    if (i >= length_) throw InvalidOperands("bit index " + std::to_string(i) + " out of range for length " + std::to_string(length_));
  }

  std::size_t length_ = 0;
  std::vector<word_type> words_;
};

struct BitCodeHash {
  std::size_t operator()(const BitCode& c) const noexcept;
};

BitCode bit_or(const BitCode& a, const BitCode& b);
BitCode bit_and(const BitCode& a, const BitCode& b);
BitCode concat(const BitCode& a, const BitCode& b);
std::size_t intersection_count(const BitCode& a, const BitCode& b);

// Literal format: "<length>:<hex>", lowercase, most significant digit first.
std::string to_literal(const BitCode& code);
BitCode parse_literal(std::string_view text);

// Number of distinct codes of the given length and saturation, C(length, saturation).
double code_capacity(std::size_t length, std::size_t saturation);

// Real-valued feature vector with components in [0, 1].
class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(std::vector<double> values);
  // Min-max scales arbitrary finite values into [0, 1].
  static FeatureVector normalise(std::span<const double> raw);

  std::size_t length() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_.at(i); }
  bool none() const noexcept;

  friend bool operator==(const FeatureVector& a, const FeatureVector& b) = default;

 private:
  std::vector<double> values_;
};

using Point = std::variant<BitCode, FeatureVector>;

std::size_t point_length(const Point& p);
bool point_is_zero(const Point& p);

enum class Metric { jaccard, jaccard_quadratic, cosine_discrete, cosine_real, cosine_relaxed };

std::string_view to_string(Metric m);
Metric metric_from_string(std::string_view name);

struct SimilarityConfig {
  Metric metric = Metric::cosine_discrete;
  double lambda = 0.0;
  // Sigmoid slope; infinity selects the hard cutoff.
  double eta = std::numeric_limits<double>::infinity();

  void validate() const;
  bool hard() const noexcept { return std::isinf(eta); }
};

namespace detail {

inline double bit_similarity_from_counts(Metric metric, std::size_t inter, std::size_t ca, std::size_t cb) noexcept {
  switch (metric) {
    case Metric::jaccard:
    case Metric::jaccard_quadratic: {
      const std::size_t uni = ca + cb - inter;
      return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    case Metric::cosine_discrete:
    case Metric::cosine_real: {
      const std::size_t denom = ca * cb;
      return denom == 0 ? 0.0 : static_cast<double>(inter) / std::sqrt(static_cast<double>(denom));
    }
    case Metric::cosine_relaxed: {
      if (ca == 0 || cb == 0) return 0.0;
      return static_cast<double>(inter) /
             (std::sqrt(static_cast<double>(ca)) * std::sqrt(static_cast<double>(cb)));
    }
  }
  return 0.0;
}

inline std::size_t and_count(std::span<const BitCode::word_type> a, std::span<const BitCode::word_type> b) noexcept {
  std::size_t c = 0;
  for (std::size_t i = 0; i < a.size(); ++i) c += static_cast<std::size_t>(std::popcount(a[i] & b[i]));
  return c;
}

inline std::size_t word_count(std::span<const BitCode::word_type> a) noexcept {
  std::size_t c = 0;
  for (auto w : a) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

inline double bit_similarity(Metric metric, std::span<const BitCode::word_type> a, std::size_t ca,
                             std::span<const BitCode::word_type> b, std::size_t cb) noexcept {
  return bit_similarity_from_counts(metric, and_count(a, b), ca, cb);
}

// cosine_discrete is rejected by the caller for real operands.
double real_similarity(Metric metric, std::span<const double> a, std::span<const double> b) noexcept;

inline double sigmoid(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

double similarity(const BitCode& a, const BitCode& b, Metric metric);
double similarity(const FeatureVector& a, const FeatureVector& b, Metric metric);
double similarity(const Point& a, const Point& b, Metric metric);

// x * sigmoid(eta * (x - lambda)); hard cutoff when eta is infinite.
inline double threshold(double x, const SimilarityConfig& cfg) noexcept {
  if (cfg.hard()) return x >= cfg.lambda ? x : 0.0;
  return x * detail::sigmoid(cfg.eta * (x - cfg.lambda));
}

template <class A>
double sim_lambda(const A& a, const A& b, const SimilarityConfig& cfg) {
  return threshold(similarity(a, b, cfg.metric), cfg);
}

}  // namespace damp
