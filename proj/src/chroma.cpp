#include "damp/chroma.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace damp {

ColouredCode::ColouredCode(BitCode code, ColourRank rank) : code_(std::move(code)), ranks_(code_.length(), 0) {
  for (std::size_t i : code_.indices()) ranks_[i] = rank;
}

ColourRank ColouredCode::rank(std::size_t i) const {
  if (!code_.test(i)) throw InvalidOperands("bit " + std::to_string(i) + " is not set and has no colour");
  return ranks_[i];
}

void ColouredCode::add(std::size_t i, ColourRank rank) {
  if (code_.test(i)) {
    ranks_[i] = std::min(ranks_[i], rank);
  } else {
    code_.set(i);
    ranks_[i] = rank;
  }
}

void ColouredCode::add(const ColouredCode& other) {
  if (other.length() != length()) {
    throw InvalidOperands("code length mismatch: " + std::to_string(length()) + " vs " +
                          std::to_string(other.length()));
  }
  for (std::size_t i : other.code_.indices()) add(i, other.ranks_[i]);
}

void ColouredCode::remove(std::size_t i) {
  code_.reset(i);
  ranks_[i] = 0;
}

std::vector<std::pair<std::size_t, ColourRank>> ColouredCode::entries() const {
  std::vector<std::pair<std::size_t, ColourRank>> out;
  for (std::size_t i : code_.indices()) out.emplace_back(i, ranks_[i]);
  return out;
}

std::string_view to_string(Retention r) {
  switch (r) {
    case Retention::keep_long_wave: return "keep_long_wave";
    case Retention::keep_short_wave: return "keep_short_wave";
    case Retention::keep_mid: return "keep_mid";
  }
  return "?";
}

Retention retention_from_string(std::string_view name) {
  for (Retention r : {Retention::keep_long_wave, Retention::keep_short_wave, Retention::keep_mid}) {
    if (to_string(r) == name) return r;
  }
  throw InvalidOperands("unknown retention '" + std::string(name) + "'");
}

ColouredCode colour_merge(std::span<const ColouredCode> inputs, const MergePolicy& policy) {
  if (inputs.empty()) throw InvalidOperands("colour_merge needs at least one input");
  const std::size_t length = inputs.front().length();
  if (policy.saturation_budget > length) {
    throw InvalidOperands("saturation budget " + std::to_string(policy.saturation_budget) +
                          " exceeds code length " + std::to_string(length));
  }
  ColouredCode merged(length);
  for (const auto& in : inputs) merged.add(in);

  const std::size_t t = policy.saturation_budget;
  if (merged.count() <= t) return merged;

  auto bits = merged.entries();
  // Ascending (rank, bit): the front holds long waves.
  std::sort(bits.begin(), bits.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });

  std::vector<std::pair<std::size_t, ColourRank>> kept;
  switch (policy.retention) {
    case Retention::keep_long_wave:
      kept.assign(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(t));
      break;
    case Retention::keep_short_wave:
      std::stable_sort(bits.begin(), bits.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
      kept.assign(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(t));
      break;
    case Retention::keep_mid: {
      std::size_t lo = 0;
      std::size_t hi = bits.size();
      bool from_back = true;
      while (hi - lo > t) {
        if (from_back) {
          --hi;
        } else {
          ++lo;
        }
        from_back = !from_back;
      }
      kept.assign(bits.begin() + static_cast<std::ptrdiff_t>(lo), bits.begin() + static_cast<std::ptrdiff_t>(hi));
      break;
    }
  }

  ColouredCode out(length);
  for (const auto& [bit, rank] : kept) out.add(bit, rank);
  return out;
}

ColouredCode merge_detector_outputs(std::span<const DetectorOutput> outputs, std::size_t budget) {
  if (outputs.empty()) throw InvalidOperands("merge_detector_outputs needs at least one input");
  std::vector<double> lambdas;
  for (const auto& o : outputs) lambdas.push_back(o.lambda);
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

  std::vector<ColouredCode> coloured;
  coloured.reserve(outputs.size());
  for (const auto& o : outputs) {
    const auto rank = static_cast<ColourRank>(std::lower_bound(lambdas.begin(), lambdas.end(), o.lambda) -
                                              lambdas.begin());
    coloured.emplace_back(o.bits, rank);
  }
  return colour_merge(coloured, MergePolicy{budget, Retention::keep_long_wave});
}

std::string to_literal(const ColouredCode& code) {
  std::string out = to_literal(code.code()) + ";colours=[";
  bool first = true;
  for (const auto& [bit, rank] : code.entries()) {
    if (!first) out += ',';
    first = false;
    out += '(' + std::to_string(bit) + ',' + std::to_string(rank) + ')';
  }
  out += ']';
  return out;
}

namespace {

std::size_t parse_number(std::string_view text, std::size_t& pos) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), v);
  if (ec != std::errc{}) throw FormatError("expected a number in colour list");
  pos = static_cast<std::size_t>(ptr - text.data());
  return v;
}

void expect(std::string_view text, std::size_t& pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw FormatError(std::string("expected '") + c + "' in colour list");
  }
  ++pos;
}

}  // namespace

ColouredCode parse_coloured_literal(std::string_view text) {
  const auto semi = text.find(';');
  const BitCode bits = parse_literal(text.substr(0, semi));
  if (semi == std::string_view::npos) return ColouredCode(bits, 0);

  constexpr std::string_view kPrefix = "colours=[";
  std::string_view rest = text.substr(semi + 1);
  if (rest.substr(0, kPrefix.size()) != kPrefix) throw FormatError("expected 'colours=[' after ';'");
  std::size_t pos = kPrefix.size();
  ColouredCode out(bits.length());
  while (pos < rest.size() && rest[pos] != ']') {
    expect(rest, pos, '(');
    const std::size_t bit = parse_number(rest, pos);
    expect(rest, pos, ',');
    const std::size_t rank = parse_number(rest, pos);
    expect(rest, pos, ')');
    if (bit >= bits.length() || !bits.test(bit)) throw FormatError("colour given for a bit that is not set");
    if (out.test(bit)) throw FormatError("bit " + std::to_string(bit) + " coloured twice");
    out.add(bit, static_cast<ColourRank>(rank));
    if (pos < rest.size() && rest[pos] == ',') ++pos;
  }
  expect(rest, pos, ']');
  if (pos != rest.size()) throw FormatError("trailing characters after colour list");
  if (out.code() != bits) throw FormatError("every set bit needs a colour");
  return out;
}

}  // namespace damp
