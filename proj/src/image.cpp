#include "damp/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace damp {

Gray16Image energy_image(const EnergyMap& map) {
  Gray16Image img{map.cols, map.rows, std::vector<std::uint16_t>(map.values.size(), 0)};
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    const double v = std::clamp(map.values[i], 0.0, 1.0);
    img.pixels[i] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
  }
  return img;
}

void hsv_to_rgb(double h, double s, double v, std::uint8_t rgb[3]) {
  h = std::fmod(h, 360.0);
  if (h < 0.0) h += 360.0;
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0.0, g = 0.0, b = 0.0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  rgb[0] = static_cast<std::uint8_t>(std::lround((r + m) * 255.0));
  rgb[1] = static_cast<std::uint8_t>(std::lround((g + m) * 255.0));
  rgb[2] = static_cast<std::uint8_t>(std::lround((b + m) * 255.0));
}

RgbImage composite_image(const CodeSpace& space, const EnergyMap& map) {
  if (map.rows != space.rows() || map.cols != space.cols()) {
    throw InvalidOperands("energy map dimensions do not match the space");
  }
  RgbImage img{space.cols(), space.rows(), std::vector<std::uint8_t>(space.cell_count() * 3, 0)};
  const double top = space.code_bits() > 1 ? static_cast<double>(space.code_bits() - 1) : 1.0;
  for (std::size_t idx = 0; idx < space.cell_count(); ++idx) {
    if (!space.occupied(idx)) continue;
    double weight = 0.0;
    double sum = 0.0;
    if (space.kind() == PointKind::bit) {
      auto w = space.words(idx);
      for (std::size_t k = 0; k < w.size(); ++k) {
        std::uint64_t word = w[k];
        while (word) {
          sum += static_cast<double>(k * 64 + static_cast<std::size_t>(std::countr_zero(word)));
          weight += 1.0;
          word &= word - 1;
        }
      }
    } else {
      auto v = space.values(idx);
      for (std::size_t k = 0; k < v.size(); ++k) {
        sum += static_cast<double>(k) * v[k];
        weight += v[k];
      }
    }
    const double hue = weight > 0.0 ? sum / weight / top * 270.0 : 0.0;
    hsv_to_rgb(hue, 1.0, std::clamp(map.values[idx], 0.0, 1.0), &img.pixels[idx * 3]);
  }
  return img;
}

void write_pgm(std::ostream& out, const Gray16Image& img) {
  out << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  for (std::uint16_t p : img.pixels) {
    const char be[2] = {static_cast<char>(p >> 8), static_cast<char>(p & 0xff)};
    out.write(be, 2);
  }
}

void write_ppm(std::ostream& out, const RgbImage& img) {
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

namespace {

std::size_t read_header_number(std::istream& in) {
  in >> std::ws;
  while (in.peek() == '#') {
    std::string skip;
    std::getline(in, skip);
    in >> std::ws;
  }
  std::size_t v = 0;
  if (!(in >> v)) throw FormatError("bad netpbm header");
  return v;
}

void read_header(std::istream& in, const char* magic, std::size_t& w, std::size_t& h, std::size_t& maxval) {
  std::string m(2, '\0');
  in.read(m.data(), 2);
  if (m != magic) throw FormatError(std::string("expected netpbm magic ") + magic);
  w = read_header_number(in);
  h = read_header_number(in);
  maxval = read_header_number(in);
  if (in.get() == EOF) throw FormatError("truncated netpbm header");
}

}  // namespace

Gray16Image read_pgm(std::istream& in) {
  Gray16Image img;
  std::size_t maxval = 0;
  read_header(in, "P5", img.width, img.height, maxval);
  if (maxval != 65535) throw FormatError("expected a 16-bit PGM");
  img.pixels.resize(img.width * img.height);
  for (auto& p : img.pixels) {
    unsigned char be[2];
    if (!in.read(reinterpret_cast<char*>(be), 2)) throw FormatError("truncated PGM data");
    p = static_cast<std::uint16_t>((be[0] << 8) | be[1]);
  }
  return img;
}

RgbImage read_ppm(std::istream& in) {
  RgbImage img;
  std::size_t maxval = 0;
  read_header(in, "P6", img.width, img.height, maxval);
  if (maxval != 255) throw FormatError("expected an 8-bit PPM");
  img.pixels.resize(img.width * img.height * 3);
  if (!in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()))) {
    throw FormatError("truncated PPM data");
  }
  return img;
}

void save_pgm(const std::filesystem::path& path, const Gray16Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_pgm(out, img);
  if (!out) throw IoError("failed writing " + path.string());
}

void save_ppm(const std::filesystem::path& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_ppm(out, img);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace damp
