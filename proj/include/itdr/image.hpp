#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace itdr {

/// Fixed-size RGB raster, 8 bits per channel, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height bytes

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(3) * w * h, 0) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("Image: dimensions must be positive");
  }

  std::uint8_t* at(int x, int y) { return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// FNV-1a over dimensions and pixel bytes; used to fingerprint captures in
/// fusion traces.
inline std::uint64_t image_digest(const Image& img) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  };
  mix(static_cast<std::uint64_t>(img.width));
  mix(static_cast<std::uint64_t>(img.height));
  for (std::uint8_t b : img.pixels) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Writes binary PPM (P6, maxval 255).
inline void write_ppm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ppm: cannot open '" + path.string() + "'");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw std::runtime_error("write_ppm: write failed for '" + path.string() + "'");
}

inline Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_ppm: cannot open '" + path.string() + "'");
  std::string magic;
  in >> magic;
  if (magic != "P6") throw std::runtime_error("read_ppm: '" + path.string() + "' is not a P6 file");
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  if (!in || w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("read_ppm: bad header in '" + path.string() + "'");
  in.get();  // single whitespace byte after the header
  Image img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw std::runtime_error("read_ppm: truncated pixel data in '" + path.string() + "'");
  return img;
}

}  // namespace itdr
