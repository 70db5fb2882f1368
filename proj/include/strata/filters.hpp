#pragma once

// Built-in filters (blur, hole, affine, monochrome) and update propagation
// through filters.

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "strata/geometry.hpp"
#include "strata/pixelset.hpp"
#include "strata/scene.hpp"
#include "strata/sprite.hpp"
#include "strata/vec.hpp"

namespace strata {

/// Box blur with an odd kernel. Pixels missing from the rendering count as
/// transparent.
class BlurFilter final : public FilterKind {
 public:
  BlurFilter(int w, int h) : w_(w), h_(h) {
    if (w < 1 || h < 1 || w % 2 == 0 || h % 2 == 0) {
      throw std::invalid_argument("blur kernel dimensions must be odd and >= 1");
    }
  }
  int kernel_w() const { return w_; }
  int kernel_h() const { return h_; }

  std::string name() const override { return "blur"; }

  SceneFnResult scene_fn(const Scene& below, const Shape& requested,
                         const FilterEnv&) const override {
    return {below, dilate_rect(requested, w_ / 2, h_ / 2), requested};
  }

  Sprite filter_fn(const Sprite& in, const Shape& render_shape) const override {
    const int rx = w_ / 2, ry = h_ / 2;
    const float k = 1.0f / static_cast<float>(w_ * h_);
    SpriteBuilder out;
    for_each_pixel(render_shape, [&](std::int32_t x, std::int32_t y) {
      float r = 0, g = 0, b = 0, a = 0;
      for (int dy = -ry; dy <= ry; ++dy) {
        const SpriteScanline* row = in.row(y + dy);
        if (!row) continue;
        for (int dx = -rx; dx <= rx; ++dx) {
          const auto c = in.pixel(x + dx, y + dy);
          if (!c) continue;
          r += c->r;
          g += c->g;
          b += c->b;
          a += c->a;
        }
      }
      out.push_pixel(x, y, {r * k, g * k, b * k, a * k});
    });
    return out.build();
  }

  Shape update_fn(const Shape& u, const Shape& filter_shape) const override {
    return intersect(dilate_rect(u, w_ / 2, h_ / 2), filter_shape);
  }

  bool equals(const FilterKind& o) const override {
    const auto* b = dynamic_cast<const BlurFilter*>(&o);
    return b && b->w_ == w_ && b->h_ == h_;
  }

 private:
  int w_, h_;
};

/// Cuts through every object (no target) or through one object.
class HoleFilter final : public FilterKind {
 public:
  HoleFilter() = default;
  explicit HoleFilter(ObjectId target) : target_(std::move(target)) {}
  const std::optional<ObjectId>& target() const { return target_; }

  std::string name() const override { return "hole"; }

  SceneFnResult scene_fn(const Scene& below, const Shape& requested,
                         const FilterEnv& env) const override {
    Scene s;
    s.canvas = below.canvas;
    if (target_) {
      const Scene& root = env.root ? *env.root : below;
      if (!root.find(*target_) && !below.find(*target_)) {
        throw std::invalid_argument("hole filter target '" + *target_ + "' not in scene");
      }
      s = below;
      if (auto i = s.find(*target_)) {
        s.objects.erase(s.objects.begin() + static_cast<std::ptrdiff_t>(*i));
      }
    }
    return {std::move(s), requested, requested};
  }

  Sprite filter_fn(const Sprite& in, const Shape&) const override { return in; }

  Shape update_fn(const Shape&, const Shape&) const override { return {}; }

  bool equals(const FilterKind& o) const override {
    const auto* h = dynamic_cast<const HoleFilter*>(&o);
    return h && h->target_ == target_;
  }

 private:
  std::optional<ObjectId> target_;
};

/// Shows the scene behind mapped forward through an invertible affine map.
class AffineFilter final : public FilterKind {
 public:
  explicit AffineFilter(const Affine& m) : m_(m) {
    if (!m.invertible()) throw std::invalid_argument("affine filter matrix is singular");
  }
  const Affine& matrix() const { return m_; }

  std::string name() const override { return "affine"; }

  SceneFnResult scene_fn(const Scene& below, const Shape& requested,
                         const FilterEnv&) const override {
    Scene s = below;
    for (auto& o : s.objects) {
      o.cacheable = false;
      if (auto* p = std::get_if<PlainObject>(&o.body)) {
        p->geometry = transform(p->geometry, m_);
        p->fill = transform(p->fill, m_);
      } else {
        auto& f = std::get<FilterObject>(o.body);
        f.geometry = transform(f.geometry, m_);
      }
    }
    return {std::move(s), requested, requested};
  }

  Sprite filter_fn(const Sprite& in, const Shape&) const override { return in; }

  /// Forward image of the pixels' footprints, rounded outward by an extra
  /// pixel.
  Shape update_fn(const Shape& u, const Shape& filter_shape) const override {
    constexpr double h = kDefaultFootprint / 2;
    ShapeBuilder b;
    for (const auto& row : u.scanlines()) {
      for (const auto& sp : row.spans) {
        const double x0 = sp.start + 0.5 - h, x1 = sp.end + 0.5 + h;
        const double y0 = row.y + 0.5 - h, y1 = row.y + 0.5 + h;
        const Point cs[4] = {m_.apply({x0, y0}), m_.apply({x1, y0}), m_.apply({x1, y1}),
                             m_.apply({x0, y1})};
        double lx = cs[0].x, hx = lx, ly = cs[0].y, hy = ly;
        for (const auto& p : cs) {
          lx = std::min(lx, p.x);
          hx = std::max(hx, p.x);
          ly = std::min(ly, p.y);
          hy = std::max(hy, p.y);
        }
        const auto px0 = detail::first_touching(lx, h) - 1;
        const auto px1 = detail::last_touching(hx, h) + 1;
        const auto py0 = detail::first_touching(ly, h) - 1;
        const auto py1 = detail::last_touching(hy, h) + 1;
        for (std::int32_t y = py0; y <= py1; ++y) b.add_span(y, px0, px1);
      }
    }
    return intersect(b.build(), filter_shape);
  }

  bool equals(const FilterKind& o) const override {
    const auto* a = dynamic_cast<const AffineFilter*>(&o);
    return a && a->m_ == m_;
  }

 private:
  Affine m_;
};

/// Rec. 709 luminance; alpha preserved.
class MonochromeFilter final : public FilterKind {
 public:
  std::string name() const override { return "monochrome"; }

  SceneFnResult scene_fn(const Scene& below, const Shape& requested,
                         const FilterEnv&) const override {
    return {below, requested, requested};
  }

  Sprite filter_fn(const Sprite& in, const Shape&) const override {
    SpriteBuilder out;
    for (const auto& row : in.scanlines()) {
      for (const auto& sp : row.spans) {
        if (sp.is_run()) {
          out.push_run(row.y, sp.start, sp.end, gray(std::get<Color>(sp.payload)));
        } else {
          const auto& px = std::get<std::vector<Color>>(sp.payload);
          for (std::size_t i = 0; i < px.size(); ++i) {
            out.push_pixel(sp.start + static_cast<std::int32_t>(i), row.y, gray(px[i]));
          }
        }
      }
    }
    return out.build();
  }

  Shape update_fn(const Shape&, const Shape&) const override { return {}; }

  bool equals(const FilterKind& o) const override {
    return dynamic_cast<const MonochromeFilter*>(&o) != nullptr;
  }

  static Color gray(const Color& c) {
    const float y = std::min(c.a, 0.2126f * c.r + 0.7152f * c.g + 0.0722f * c.b);
    return {y, y, y, c.a};
  }
};

inline FilterObject builtin_blur(int kernel_w, int kernel_h, Geometry g, float opacity = 1.0f) {
  return {std::move(g), opacity, std::make_shared<const BlurFilter>(kernel_w, kernel_h)};
}
inline FilterObject builtin_hole(Geometry g, std::optional<ObjectId> target = std::nullopt,
                                 float opacity = 1.0f) {
  auto kind = target ? std::make_shared<const HoleFilter>(*target)
                     : std::make_shared<const HoleFilter>();
  return {std::move(g), opacity, std::move(kind)};
}
inline FilterObject builtin_affine(const Affine& m, Geometry g, float opacity = 1.0f) {
  return {std::move(g), opacity, std::make_shared<const AffineFilter>(m)};
}
inline FilterObject builtin_monochrome(Geometry g, float opacity = 1.0f) {
  return {std::move(g), opacity, std::make_shared<const MonochromeFilter>()};
}

/// Grows an update shape for a change at `modified_index` through every
/// filter in front of it, back to front, then clips to `roi`.
inline Shape propagate_update(const Scene& scene, const Shape& initial,
                              std::size_t modified_index, const Shape& roi,
                              double footprint = kDefaultFootprint) {
  if (modified_index > scene.objects.size()) {
    throw std::out_of_range("modified index outside the scene");
  }
  Shape u = initial;
  for (std::size_t i = modified_index; i-- > 0;) {
    const auto* f = scene.objects[i].filter();
    if (!f || !f->kind) continue;
    u = unite(u, f->kind->update_fn(u, shape(f->geometry, footprint)));
  }
  return intersect(u, roi);
}

}  // namespace strata
