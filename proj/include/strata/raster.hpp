#pragma once

// Dense RGBA rasters, sprite blitting, and PNG / PPM export.

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "strata/pixelset.hpp"
#include "strata/sprite.hpp"

namespace strata {

/// Dense premultiplied raster covering [x0, x0+width) x [y0, y0+height).
class Raster {
 public:
  Raster() = default;
  Raster(std::int32_t x0, std::int32_t y0, std::int32_t width,
         std::int32_t height, Color fill = Color::transparent())
      : x0_(x0), y0_(y0), width_(width), height_(height) {
    if (width < 0 || height < 0) throw std::invalid_argument("negative raster size");
    px_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  static Raster for_rect(const Rect& r, Color fill = Color::transparent()) {
    return Raster(r.x0, r.y0, r.width(), r.height(), fill);
  }

  std::int32_t x0() const { return x0_; }
  std::int32_t y0() const { return y0_; }
  std::int32_t width() const { return width_; }
  std::int32_t height() const { return height_; }
  Rect rect() const { return {x0_, y0_, x0_ + width_ - 1, y0_ + height_ - 1}; }

  bool in_bounds(std::int32_t x, std::int32_t y) const {
    return x >= x0_ && y >= y0_ && x < x0_ + width_ && y < y0_ + height_;
  }

  Color& at(std::int32_t x, std::int32_t y) { return px_[index(x, y)]; }
  const Color& at(std::int32_t x, std::int32_t y) const { return px_[index(x, y)]; }

  const std::vector<Color>& pixels() const { return px_; }

  Raster crop(const Rect& r) const {
    Raster out = Raster::for_rect(r);
    for (std::int32_t y = r.y0; y <= r.y1; ++y) {
      for (std::int32_t x = r.x0; x <= r.x1; ++x) {
        if (in_bounds(x, y)) out.at(x, y) = at(x, y);
      }
    }
    return out;
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(std::int32_t x, std::int32_t y) const {
    return static_cast<std::size_t>(y - y0_) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x - x0_);
  }

  std::int32_t x0_ = 0, y0_ = 0, width_ = 0, height_ = 0;
  std::vector<Color> px_;
};

/// Fills `surface` with the sprite composited over `background`; pixels absent
/// from the sprite take the background. Sprite pixels outside the surface are
/// clipped.
inline void blit(const Sprite& s, Raster& surface, const Color& background) {
  for (std::int32_t y = surface.y0(); y < surface.y0() + surface.height(); ++y) {
    for (std::int32_t x = surface.x0(); x < surface.x0() + surface.width(); ++x) {
      surface.at(x, y) = background;
    }
  }
  for_each_sprite_pixel(s, [&](std::int32_t x, std::int32_t y, const Color& c) {
    if (surface.in_bounds(x, y)) surface.at(x, y) = over(c, background);
  });
}

/// Overwrites the pixels of `region` in `surface` with the sprite over
/// `background` (absent sprite pixels count as transparent).
inline void patch(const Sprite& s, const Shape& region, Raster& surface,
                  const Color& background) {
  for_each_pixel(region, [&](std::int32_t x, std::int32_t y) {
    if (!surface.in_bounds(x, y)) return;
    const auto c = s.pixel(x, y);
    surface.at(x, y) = c ? over(*c, background) : background;
  });
}

/// Largest per-channel absolute difference; rasters must share geometry.
inline float max_channel_diff(const Raster& a, const Raster& b) {
  if (a.rect() != b.rect()) throw std::invalid_argument("raster size mismatch");
  float m = 0.f;
  for (std::size_t i = 0; i < a.pixels().size(); ++i) {
    const Color& p = a.pixels()[i];
    const Color& q = b.pixels()[i];
    m = std::max({m, std::abs(p.r - q.r), std::abs(p.g - q.g),
                  std::abs(p.b - q.b), std::abs(p.a - q.a)});
  }
  return m;
}

namespace detail {

inline std::uint8_t to_byte(float v) {
  v = std::clamp(v, 0.f, 1.f);
  return static_cast<std::uint8_t>(std::lround(v * 255.f));
}

// Straight-alpha 8-bit RGBA.
inline std::array<std::uint8_t, 4> export_pixel(const Color& c) {
  if (c.a <= 0.f) return {0, 0, 0, 0};
  const float inv = 1.f / c.a;
  return {to_byte(c.r * inv), to_byte(c.g * inv), to_byte(c.b * inv), to_byte(c.a)};
}

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_chunk(std::vector<std::uint8_t>& out, const char* type,
                      const std::vector<std::uint8_t>& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + type_at,
                          static_cast<uInt>(out.size() - type_at));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

/// 8-bit RGBA PNG, straight alpha.
inline std::vector<std::uint8_t> encode_png(const Raster& r) {
  const auto w = static_cast<std::uint32_t>(r.width());
  const auto h = static_cast<std::uint32_t>(r.height());
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(h) * (1 + 4 * static_cast<std::size_t>(w)));
  for (std::int32_t y = r.y0(); y < r.y0() + r.height(); ++y) {
    raw.push_back(0);  // filter: none
    for (std::int32_t x = r.x0(); x < r.x0() + r.width(); ++x) {
      const auto p = detail::export_pixel(r.at(x, y));
      raw.insert(raw.end(), p.begin(), p.end());
    }
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> z(zlen);
  if (compress2(z.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw std::runtime_error("zlib compression failed");
  }
  z.resize(zlen);

  std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  detail::put_be32(ihdr, w);
  detail::put_be32(ihdr, h);
  ihdr.insert(ihdr.end(), {8, 6, 0, 0, 0});  // 8-bit, RGBA
  detail::put_chunk(out, "IHDR", ihdr);
  detail::put_chunk(out, "IDAT", z);
  detail::put_chunk(out, "IEND", {});
  return out;
}

/// Binary PPM (P6). Colour is written premultiplied, i.e. over black.
inline std::string encode_ppm(const Raster& r) {
  std::string out = "P6\n" + std::to_string(r.width()) + " " +
                    std::to_string(r.height()) + "\n255\n";
  out.reserve(out.size() + 3 * r.pixels().size());
  for (const Color& c : r.pixels()) {
    out.push_back(static_cast<char>(detail::to_byte(c.r)));
    out.push_back(static_cast<char>(detail::to_byte(c.g)));
    out.push_back(static_cast<char>(detail::to_byte(c.b)));
  }
  return out;
}

}  // namespace strata
