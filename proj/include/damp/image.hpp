#pragma once

// Netpbm output for energy maps and composite views.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "damp/layout.hpp"
#include "damp/space.hpp"

namespace damp {

struct Gray16Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint16_t> pixels;
};

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // rgb triples, row-major
};

// Value round(E * 65535) per cell.
Gray16Image energy_image(const EnergyMap& map);

// Hue from the mean set-bit (or component) position, red for low indices and violet for high;
// brightness from the energy map; empty cells black.
RgbImage composite_image(const CodeSpace& space, const EnergyMap& map);

void write_pgm(std::ostream& out, const Gray16Image& img);
void write_ppm(std::ostream& out, const RgbImage& img);
Gray16Image read_pgm(std::istream& in);
RgbImage read_ppm(std::istream& in);

void save_pgm(const std::filesystem::path& path, const Gray16Image& img);
void save_ppm(const std::filesystem::path& path, const RgbImage& img);

// h in degrees, s and v in [0, 1].
void hsv_to_rgb(double h, double s, double v, std::uint8_t rgb[3]);

}  // namespace damp
