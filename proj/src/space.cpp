#include "damp/space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "damp/rng.hpp"

namespace damp {

std::string_view to_string(PointKind k) { return k == PointKind::bit ? "bit" : "real"; }

PointKind point_kind_from_string(std::string_view name) {
  if (name == "bit") return PointKind::bit;
  if (name == "real") return PointKind::real;
  throw FormatError("unknown point kind '" + std::string(name) + "'");
}

CodeSpace::CodeSpace(std::size_t m, std::size_t n, PointKind kind, std::size_t code_bits)
    : m_(m), n_(n), kind_(kind), code_bits_(code_bits) {
  if (m == 0 || n == 0) throw InvalidOperands("code space needs positive dimensions");
  if (code_bits == 0) throw InvalidOperands("code space needs a positive code length");
  const std::size_t cells = m * n;
  if (kind == PointKind::bit) {
    words_ = (code_bits + BitCode::kWordBits - 1) / BitCode::kWordBits;
    bit_words_.assign(cells * words_, 0);
    counts_.assign(cells, 0);
  } else {
    real_values_.assign(cells * code_bits, 0.0);
  }
  occupied_.assign(cells, 0);
  payloads_.resize(cells);
}

std::vector<std::size_t> CodeSpace::occupied_cells() const {
  std::vector<std::size_t> out;
  out.reserve(points_);
  for (std::size_t i = 0; i < occupied_.size(); ++i) {
    if (occupied_[i]) out.push_back(i);
  }
  return out;
}

void CodeSpace::set(std::size_t idx, const Point& p, std::string payload) {
  if (idx >= cell_count()) throw InvalidOperands("cell index out of range");
  if (point_length(p) != code_bits_) {
    throw InvalidOperands("point length " + std::to_string(point_length(p)) + " does not match space code length " +
                          std::to_string(code_bits_));
  }
  if (kind_ == PointKind::bit) {
    const auto* code = std::get_if<BitCode>(&p);
    if (code == nullptr) throw InvalidOperands("bit space cannot hold a feature vector");
    std::copy(code->words().begin(), code->words().end(), bit_words_.begin() + static_cast<std::ptrdiff_t>(idx * words_));
    counts_[idx] = static_cast<std::uint32_t>(code->count());
  } else {
    const auto* fv = std::get_if<FeatureVector>(&p);
    if (fv == nullptr) throw InvalidOperands("real space cannot hold a bit code");
    std::copy(fv->values().begin(), fv->values().end(),
              real_values_.begin() + static_cast<std::ptrdiff_t>(idx * code_bits_));
  }
  if (!occupied_[idx]) ++points_;
  occupied_[idx] = 1;
  payloads_[idx] = std::move(payload);
}

void CodeSpace::clear(std::size_t idx) {
  if (idx >= cell_count()) throw InvalidOperands("cell index out of range");
  if (kind_ == PointKind::bit) {
    std::fill_n(bit_words_.begin() + static_cast<std::ptrdiff_t>(idx * words_), words_, 0);
    counts_[idx] = 0;
  } else {
    std::fill_n(real_values_.begin() + static_cast<std::ptrdiff_t>(idx * code_bits_), code_bits_, 0.0);
  }
  if (occupied_[idx]) --points_;
  occupied_[idx] = 0;
  payloads_[idx].clear();
}

std::optional<Point> CodeSpace::point(std::size_t idx) const {
  if (idx >= cell_count()) throw InvalidOperands("cell index out of range");
  if (!occupied_[idx]) return std::nullopt;
  if (kind_ == PointKind::bit) {
    BitCode c(code_bits_);
    auto w = words(idx);
    std::copy(w.begin(), w.end(), c.mutable_words().begin());
    return Point{std::move(c)};
  }
  auto v = values(idx);
  return Point{FeatureVector(std::vector<double>(v.begin(), v.end()))};
}

void CodeSpace::swap_cells(std::size_t a, std::size_t b) {
  if (a == b) return;
  if (kind_ == PointKind::bit) {
    std::swap_ranges(bit_words_.begin() + static_cast<std::ptrdiff_t>(a * words_),
                     bit_words_.begin() + static_cast<std::ptrdiff_t>((a + 1) * words_),
                     bit_words_.begin() + static_cast<std::ptrdiff_t>(b * words_));
    std::swap(counts_[a], counts_[b]);
  } else {
    std::swap_ranges(real_values_.begin() + static_cast<std::ptrdiff_t>(a * code_bits_),
                     real_values_.begin() + static_cast<std::ptrdiff_t>((a + 1) * code_bits_),
                     real_values_.begin() + static_cast<std::ptrdiff_t>(b * code_bits_));
  }
  std::swap(occupied_[a], occupied_[b]);
  std::swap(payloads_[a], payloads_[b]);
}

double CodeSpace::similarity(std::size_t a, std::size_t b, Metric metric) const {
  if (!occupied_[a] || !occupied_[b]) return 0.0;
  if (kind_ == PointKind::bit) return detail::bit_similarity(metric, words(a), counts_[a], words(b), counts_[b]);
  if (metric == Metric::cosine_discrete) throw InvalidOperands("cosine_discrete requires bit codes");
  return detail::real_similarity(metric, values(a), values(b));
}

double CodeSpace::similarity(std::size_t a, const Point& p, Metric metric) const {
  if (point_length(p) != code_bits_) throw InvalidOperands("point length does not match space code length");
  if (!occupied_[a]) return 0.0;
  if (kind_ == PointKind::bit) {
    const auto* code = std::get_if<BitCode>(&p);
    if (code == nullptr) throw InvalidOperands("cannot compare a bit space with a feature vector");
    return detail::bit_similarity(metric, words(a), counts_[a], code->words(), code->count());
  }
  const auto* fv = std::get_if<FeatureVector>(&p);
  if (fv == nullptr) throw InvalidOperands("cannot compare a real space with a bit code");
  if (metric == Metric::cosine_discrete) throw InvalidOperands("cosine_discrete requires bit codes");
  return detail::real_similarity(metric, values(a), fv->values());
}

bool operator==(const CodeSpace& a, const CodeSpace& b) {
  return a.m_ == b.m_ && a.n_ == b.n_ && a.kind_ == b.kind_ && a.code_bits_ == b.code_bits_ &&
         a.bit_words_ == b.bit_words_ && a.real_values_ == b.real_values_ && a.occupied_ == b.occupied_ &&
         a.payloads_ == b.payloads_;
}

std::size_t fill_side(std::size_t n, double fill_margin) {
  const double target = static_cast<double>(n) * (1.0 + fill_margin);
  auto d = static_cast<std::size_t>(std::ceil(std::sqrt(target)));
  while (static_cast<double>(d * d) < target) ++d;
  while (d > 1 && static_cast<double>((d - 1) * (d - 1)) >= target) --d;
  return std::max<std::size_t>(d, 1);
}

CodeSpace init_space(std::span<const Point> points, double fill_margin, std::uint64_t seed,
                     std::span<const std::string> payloads) {
  if (points.empty()) throw InvalidOperands("init_space needs at least one point");
  if (!(fill_margin >= 0.0)) throw ConfigError("fill_margin", "must be non-negative");
  if (!payloads.empty() && payloads.size() != points.size()) {
    throw InvalidOperands("payload count must match point count");
  }
  const std::size_t d = fill_side(points.size(), fill_margin);
  const PointKind kind = std::holds_alternative<BitCode>(points.front()) ? PointKind::bit : PointKind::real;
  CodeSpace space(d, d, kind, point_length(points.front()));
  std::vector<std::size_t> cells(d * d);
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(cells.begin(), cells.end());
  for (std::size_t i = 0; i < points.size(); ++i) {
    space.set(cells[i], points[i], payloads.empty() ? std::string{} : payloads[i]);
  }
  return space;
}

void write_space(std::ostream& out, const CodeSpace& space) {
  nlohmann::ordered_json header;
  header["version"] = 1;
  header["m"] = space.rows();
  header["n"] = space.cols();
  header["code_bits"] = space.code_bits();
  header["kind"] = std::string(to_string(space.kind()));
  out << header.dump() << '\n';
  for (std::size_t idx = 0; idx < space.cell_count(); ++idx) {
    if (!space.occupied(idx)) continue;
    const Cell c = space.cell(idx);
    nlohmann::ordered_json j;
    j["y"] = c.y;
    j["x"] = c.x;
    const Point p = *space.point(idx);
    if (space.kind() == PointKind::bit) {
      j["code"] = to_literal(std::get<BitCode>(p));
    } else {
      const auto v = std::get<FeatureVector>(p).values();
      j["values"] = std::vector<double>(v.begin(), v.end());
    }
    if (!space.payload(idx).empty()) j["payload"] = space.payload(idx);
    out << j.dump() << '\n';
  }
}

CodeSpace read_space(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("space container is empty");
  CodeSpace space;
  try {
    const auto h = nlohmann::json::parse(line);
    if (h.at("version").get<int>() != 1) throw FormatError("unsupported space container version");
    space = CodeSpace(h.at("m").get<std::size_t>(), h.at("n").get<std::size_t>(),
                      point_kind_from_string(h.at("kind").get<std::string>()), h.at("code_bits").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad space header: ") + e.what());
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const int y = j.at("y").get<int>();
      const int x = j.at("x").get<int>();
      if (!space.contains(y, x)) throw FormatError("cell outside the grid");
      const std::size_t idx = space.index(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
      if (space.occupied(idx)) throw FormatError("cell listed twice");
      std::string payload = j.value("payload", std::string{});
      if (space.kind() == PointKind::bit) {
        space.set(idx, Point{parse_literal(j.at("code").get<std::string>())}, std::move(payload));
      } else {
        space.set(idx, Point{FeatureVector(j.at("values").get<std::vector<double>>())}, std::move(payload));
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("space container line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw FormatError("space container line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return space;
}

void save_space(const std::filesystem::path& path, const CodeSpace& space) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_space(out, space);
  if (!out) throw IoError("failed writing " + path.string());
}

CodeSpace load_space(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_space(in);
}

}  // namespace damp
