#pragma once

// Code space: an m x n grid of cells, each empty or holding one point.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "damp/bitcode.hpp"

namespace damp {

enum class PointKind { bit, real };

std::string_view to_string(PointKind k);
PointKind point_kind_from_string(std::string_view name);

struct Cell {
  int y = 0;
  int x = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

// Flat arena storage so the layout kernels can stream over cells without indirection.
class CodeSpace {
 public:
  CodeSpace() = default;
  CodeSpace(std::size_t m, std::size_t n, PointKind kind, std::size_t code_bits);

  std::size_t rows() const noexcept { return m_; }
  std::size_t cols() const noexcept { return n_; }
  std::size_t cell_count() const noexcept { return m_ * n_; }
  PointKind kind() const noexcept { return kind_; }
  std::size_t code_bits() const noexcept { return code_bits_; }
  std::size_t words_per_cell() const noexcept { return words_; }

  std::size_t index(std::size_t y, std::size_t x) const noexcept { return y * n_ + x; }
  Cell cell(std::size_t idx) const noexcept {
    return {static_cast<int>(idx / n_), static_cast<int>(idx % n_)};
  }
  bool contains(int y, int x) const noexcept {
    return y >= 0 && x >= 0 && static_cast<std::size_t>(y) < m_ && static_cast<std::size_t>(x) < n_;
  }

  bool occupied(std::size_t idx) const noexcept { return occupied_[idx] != 0; }
  std::size_t point_count() const noexcept { return points_; }
  std::vector<std::size_t> occupied_cells() const;

  void set(std::size_t idx, const Point& p, std::string payload = {});
  void clear(std::size_t idx);
  std::optional<Point> point(std::size_t idx) const;
  const std::string& payload(std::size_t idx) const { return payloads_.at(idx); }
  void set_payload(std::size_t idx, std::string payload) { payloads_.at(idx) = std::move(payload); }

  // Exchanges the full contents of two cells, payloads included.
  void swap_cells(std::size_t a, std::size_t b);

  // Raw views used by the kernels.
  std::span<const std::uint64_t> words(std::size_t idx) const noexcept {
    return {bit_words_.data() + idx * words_, words_};
  }
  std::uint32_t popcount(std::size_t idx) const noexcept { return counts_[idx]; }
  std::span<const double> values(std::size_t idx) const noexcept {
    return {real_values_.data() + idx * code_bits_, code_bits_};
  }

  // Raw metric between two cells; 0 if either is empty.
  double similarity(std::size_t a, std::size_t b, Metric metric) const;
  double similarity(std::size_t a, const Point& p, Metric metric) const;

  friend bool operator==(const CodeSpace& a, const CodeSpace& b);

 private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  PointKind kind_ = PointKind::bit;
  std::size_t code_bits_ = 0;
  std::size_t words_ = 0;
  std::size_t points_ = 0;
  std::vector<std::uint64_t> bit_words_;
  std::vector<std::uint32_t> counts_;
  std::vector<double> real_values_;
  std::vector<std::uint8_t> occupied_;
  std::vector<std::string> payloads_;
};

// Square grid with side ceil(sqrt(n * (1 + fill_margin))); points placed at random distinct cells.
CodeSpace init_space(std::span<const Point> points, double fill_margin, std::uint64_t seed,
                     std::span<const std::string> payloads = {});

std::size_t fill_side(std::size_t n, double fill_margin);

// Container format: JSON header line, then one JSON line per occupied cell in row-major order.
void write_space(std::ostream& out, const CodeSpace& space);
CodeSpace read_space(std::istream& in);
void save_space(const std::filesystem::path& path, const CodeSpace& space);
CodeSpace load_space(const std::filesystem::path& path);

}  // namespace damp
