#pragma once

// Partial rasterizations: a pixel set whose spans carry premultiplied RGBA,
// either as a constant run or as per-pixel samples.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "strata/pixelset.hpp"

namespace strata {

/// Premultiplied RGBA with channels in [0,1].
struct Color {
  float r = 0.f, g = 0.f, b = 0.f, a = 0.f;

  static constexpr Color transparent() { return {0.f, 0.f, 0.f, 0.f}; }

  friend bool operator==(const Color&, const Color&) = default;
};

/// A pixel counts as finished once its alpha reaches 1 - kOpaqueEpsilon.
inline constexpr float kOpaqueEpsilon = 1.0f / 512.0f;

inline bool is_opaque(const Color& c) { return c.a >= 1.0f - kOpaqueEpsilon; }

inline Color scale(const Color& c, float k) {
  return {c.r * k, c.g * k, c.b * k, c.a * k};
}

/// Porter-Duff over: above + (1 - alpha_above) * below.
inline Color over(const Color& above, const Color& below) {
  const float k = 1.0f - above.a;
  return {above.r + k * below.r, above.g + k * below.g, above.b + k * below.b,
          above.a + k * below.a};
}

/// Porter-Duff plus, clamped per channel.
inline Color plus(const Color& x, const Color& y) {
  return {std::min(1.0f, x.r + y.r), std::min(1.0f, x.g + y.g),
          std::min(1.0f, x.b + y.b), std::min(1.0f, x.a + y.a)};
}

struct SpriteSpan {
  std::int32_t start = 0;
  std::int32_t end = 0;
  // A Color is a run covering the whole span; a vector holds one sample per
  // pixel (size end - start + 1).
  std::variant<Color, std::vector<Color>> payload;

  bool is_run() const { return std::holds_alternative<Color>(payload); }
  std::int64_t length() const { return std::int64_t{end} - start + 1; }

  Color at(std::int32_t x) const {
    if (const auto* c = std::get_if<Color>(&payload)) return *c;
    return std::get<std::vector<Color>>(payload)[static_cast<std::size_t>(
        x - start)];
  }

  /// The part of this span covering [s, e], which must lie inside it.
  SpriteSpan slice(std::int32_t s, std::int32_t e) const {
    if (const auto* c = std::get_if<Color>(&payload)) return {s, e, *c};
    const auto& v = std::get<std::vector<Color>>(payload);
    return {s, e,
            std::vector<Color>(v.begin() + (s - start),
                               v.begin() + (e - start) + 1)};
  }

  friend bool operator==(const SpriteSpan&, const SpriteSpan&) = default;
};

struct SpriteScanline {
  std::int32_t y = 0;
  std::vector<SpriteSpan> spans;

  friend bool operator==(const SpriteScanline&, const SpriteScanline&) =
      default;
};

class Sprite;

/// Appends spans in strictly increasing (y, x) order. Adjacent runs of equal
/// colour merge, as do consecutive sample pixels.
class SpriteBuilder {
 public:
  void push_run(std::int32_t y, std::int32_t start, std::int32_t end,
                const Color& c) {
    if (start > end) return;
    auto& row = row_for(y, start);
    if (!row.spans.empty()) {
      auto& last = row.spans.back();
      if (last.end + 1 == start && last.is_run() &&
          std::get<Color>(last.payload) == c) {
        last.end = end;
        return;
      }
    }
    row.spans.push_back({start, end, c});
  }

  void push_pixel(std::int32_t x, std::int32_t y, const Color& c) {
    auto& row = row_for(y, x);
    if (!row.spans.empty()) {
      auto& last = row.spans.back();
      if (last.end + 1 == x && !last.is_run()) {
        std::get<std::vector<Color>>(last.payload).push_back(c);
        last.end = x;
        return;
      }
    }
    row.spans.push_back({x, x, std::vector<Color>{c}});
  }

  void push_span(std::int32_t y, SpriteSpan span) {
    if (span.start > span.end) return;
    if (span.is_run()) {
      push_run(y, span.start, span.end, std::get<Color>(span.payload));
      return;
    }
    auto& row = row_for(y, span.start);
    if (!row.spans.empty()) {
      auto& last = row.spans.back();
      if (last.end + 1 == span.start && !last.is_run()) {
        auto& dst = std::get<std::vector<Color>>(last.payload);
        const auto& src = std::get<std::vector<Color>>(span.payload);
        dst.insert(dst.end(), src.begin(), src.end());
        last.end = span.end;
        return;
      }
    }
    row.spans.push_back(std::move(span));
  }

  Sprite build();

 private:
  SpriteScanline& row_for(std::int32_t y, std::int32_t x) {
    if (rows_.empty() || rows_.back().y < y) {
      rows_.push_back({y, {}});
    } else if (rows_.back().y > y) {
      throw std::logic_error("SpriteBuilder rows out of order");
    }
    auto& row = rows_.back();
    if (!row.spans.empty() && row.spans.back().end >= x) {
      throw std::logic_error("SpriteBuilder spans out of order");
    }
    return row;
  }

  std::vector<SpriteScanline> rows_;
};

class Sprite {
 public:
  Sprite() = default;

  const std::vector<SpriteScanline>& scanlines() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  const SpriteScanline* row(std::int32_t y) const {
    auto it = std::lower_bound(
        rows_.begin(), rows_.end(), y,
        [](const SpriteScanline& r, std::int32_t v) { return r.y < v; });
    if (it == rows_.end() || it->y != y) return nullptr;
    return &*it;
  }

  std::optional<Color> pixel(std::int32_t x, std::int32_t y) const {
    const SpriteScanline* r = row(y);
    if (r == nullptr) return std::nullopt;
    auto it = std::upper_bound(
        r->spans.begin(), r->spans.end(), x,
        [](std::int32_t v, const SpriteSpan& s) { return v < s.start; });
    if (it == r->spans.begin()) return std::nullopt;
    --it;
    if (x > it->end) return std::nullopt;
    return it->at(x);
  }

  std::int64_t pixel_count() const {
    std::int64_t n = 0;
    for (const auto& row : rows_) {
      for (const auto& sp : row.spans) n += sp.length();
    }
    return n;
  }

  std::size_t byte_size() const {
    std::size_t n = sizeof(Sprite) + rows_.size() * sizeof(SpriteScanline);
    for (const auto& row : rows_) {
      n += row.spans.size() * sizeof(SpriteSpan);
      for (const auto& sp : row.spans) {
        if (!sp.is_run()) n += static_cast<std::size_t>(sp.length()) * sizeof(Color);
      }
    }
    return n;
  }

  friend bool operator==(const Sprite&, const Sprite&) = default;

 private:
  friend class SpriteBuilder;
  std::vector<SpriteScanline> rows_;
};

inline Sprite SpriteBuilder::build() {
  Sprite s;
  for (auto& row : rows_) {
    if (!row.spans.empty()) s.rows_.push_back(std::move(row));
  }
  rows_.clear();
  return s;
}

/// Every pixel of `s`, in row-major order.
template <typename F>
void for_each_sprite_pixel(const Sprite& s, F&& f) {
  for (const auto& row : s.scanlines()) {
    for (const auto& sp : row.spans) {
      for (std::int32_t x = sp.start;; ++x) {
        f(x, row.y, sp.at(x));
        if (x == sp.end) break;
      }
    }
  }
}

inline Shape shape_of(const Sprite& s) {
  ShapeBuilder b;
  for (const auto& row : s.scanlines()) {
    for (const auto& sp : row.spans) b.add_span(row.y, sp.start, sp.end);
  }
  return b.build();
}

/// Pixels with alpha >= 1 - kOpaqueEpsilon.
inline Shape opaque_shape(const Sprite& s) {
  ShapeBuilder b;
  for (const auto& row : s.scanlines()) {
    for (const auto& sp : row.spans) {
      if (const auto* c = std::get_if<Color>(&sp.payload)) {
        if (is_opaque(*c)) b.add_span(row.y, sp.start, sp.end);
        continue;
      }
      const auto& v = std::get<std::vector<Color>>(sp.payload);
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (is_opaque(v[i])) {
          const auto x = static_cast<std::int32_t>(sp.start + i);
          b.add_span(row.y, x, x);
        }
      }
    }
  }
  return b.build();
}

namespace detail {

// Keeps (inside == true) or drops (inside == false) the pixels of `s` that lie
// in `r`. Runs stay runs.
inline Sprite clip_sprite(const Sprite& s, const Shape& r, bool inside) {
  SpriteBuilder b;
  for (const auto& row : s.scanlines()) {
    const Scanline* mask = r.row(row.y);
    if (mask == nullptr) {
      if (!inside) {
        for (const auto& sp : row.spans) b.push_span(row.y, sp);
      }
      continue;
    }
    for (const auto& sp : row.spans) {
      std::vector<Span> piece{{sp.start, sp.end}};
      const auto keep = inside ? intersect_spans(piece, mask->spans)
                               : subtract_spans(piece, mask->spans);
      for (const auto& k : keep) b.push_span(row.y, sp.slice(k.start, k.end));
    }
  }
  return b.build();
}

}  // namespace detail

/// The pixels of `s` inside `r`, values unchanged.
inline Sprite restrict(const Sprite& s, const Shape& r) {
  return detail::clip_sprite(s, r, true);
}

/// The pixels of `s` outside `r`.
inline Sprite exclude(const Sprite& s, const Shape& r) {
  return detail::clip_sprite(s, r, false);
}

inline Sprite translate(const Sprite& s, std::int64_t dx, std::int64_t dy) {
  if (dx == 0 && dy == 0) return s;
  SpriteBuilder b;
  for (const auto& row : s.scanlines()) {
    const std::int64_t y = std::int64_t{row.y} + dy;
    detail::check_coord(y);
    for (const auto& sp : row.spans) {
      const std::int64_t st = std::int64_t{sp.start} + dx;
      const std::int64_t en = std::int64_t{sp.end} + dx;
      detail::check_coord(st);
      detail::check_coord(en);
      SpriteSpan moved = sp;
      moved.start = static_cast<std::int32_t>(st);
      moved.end = static_cast<std::int32_t>(en);
      b.push_span(static_cast<std::int32_t>(y), std::move(moved));
    }
  }
  return b.build();
}

/// Union of two sprites whose shapes are disjoint.
inline Sprite merge_disjoint(const Sprite& a, const Sprite& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  SpriteBuilder out;
  const auto& ra = a.scanlines();
  const auto& rb = b.scanlines();
  std::size_t i = 0, j = 0;
  while (i < ra.size() || j < rb.size()) {
    if (j == rb.size() || (i < ra.size() && ra[i].y < rb[j].y)) {
      for (const auto& sp : ra[i].spans) out.push_span(ra[i].y, sp);
      ++i;
    } else if (i == ra.size() || rb[j].y < ra[i].y) {
      for (const auto& sp : rb[j].spans) out.push_span(rb[j].y, sp);
      ++j;
    } else {
      const auto& sa = ra[i].spans;
      const auto& sb = rb[j].spans;
      std::size_t p = 0, q = 0;
      while (p < sa.size() || q < sb.size()) {
        if (q == sb.size() || (p < sa.size() && sa[p].start < sb[q].start)) {
          out.push_span(ra[i].y, sa[p++]);
        } else {
          if (p < sa.size() && sa[p].start == sb[q].start) {
            throw std::invalid_argument("merge_disjoint: sprites overlap");
          }
          out.push_span(ra[i].y, sb[q++]);
        }
      }
      ++i;
      ++j;
    }
  }
  return out.build();
}

struct Composite {
  Sprite composite;
  Shape finished;
};

/// Composes `below` under `above`. `finished` holds the pixels of `below`
/// whose composite value is opaque. Overlapping runs produce a run.
inline Composite compose_under(const Sprite& above, const Sprite& below) {
  SpriteBuilder out;
  ShapeBuilder fin;

  auto emit_below = [&](std::int32_t y, const SpriteSpan& sp, std::int32_t s,
                        std::int32_t e) {
    SpriteSpan piece = sp.slice(s, e);
    if (const auto* c = std::get_if<Color>(&piece.payload)) {
      if (is_opaque(*c)) fin.add_span(y, s, e);
    } else {
      const auto& v = std::get<std::vector<Color>>(piece.payload);
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (is_opaque(v[k])) {
          const auto x = static_cast<std::int32_t>(s + k);
          fin.add_span(y, x, x);
        }
      }
    }
    out.push_span(y, std::move(piece));
  };

  auto emit_both = [&](std::int32_t y, const SpriteSpan& top,
                       const SpriteSpan& bot, std::int32_t s, std::int32_t e) {
    if (top.is_run() && bot.is_run()) {
      const Color c = over(std::get<Color>(top.payload),
                           std::get<Color>(bot.payload));
      if (is_opaque(c)) fin.add_span(y, s, e);
      out.push_run(y, s, e, c);
      return;
    }
    std::vector<Color> v;
    v.reserve(static_cast<std::size_t>(e - s + 1));
    for (std::int32_t x = s;; ++x) {
      const Color c = over(top.at(x), bot.at(x));
      if (is_opaque(c)) fin.add_span(y, x, x);
      v.push_back(c);
      if (x == e) break;
    }
    out.push_span(y, SpriteSpan{s, e, std::move(v)});
  };

  auto compose_row = [&](std::int32_t y, const std::vector<SpriteSpan>& ta,
                         const std::vector<SpriteSpan>& tb) {
    // Sweep breakpoints of both span lists left to right.
    std::size_t i = 0, j = 0;
    std::int64_t pos = std::numeric_limits<std::int64_t>::min();
    while (i < ta.size() || j < tb.size()) {
      const SpriteSpan* a = i < ta.size() ? &ta[i] : nullptr;
      const SpriteSpan* b = j < tb.size() ? &tb[j] : nullptr;
      const std::int64_t a_from = a ? std::max<std::int64_t>(a->start, pos) : 0;
      const std::int64_t b_from = b ? std::max<std::int64_t>(b->start, pos) : 0;
      if (a && (!b || a_from < b_from)) {
        // Above alone until b starts or a ends.
        const std::int64_t stop =
            b ? std::min<std::int64_t>(a->end, b_from - 1) : a->end;
        out.push_span(y, a->slice(static_cast<std::int32_t>(a_from),
                                  static_cast<std::int32_t>(stop)));
        pos = stop + 1;
        if (stop == a->end) ++i;
      } else if (b && (!a || b_from < a_from)) {
        const std::int64_t stop =
            a ? std::min<std::int64_t>(b->end, a_from - 1) : b->end;
        emit_below(y, *b, static_cast<std::int32_t>(b_from),
                   static_cast<std::int32_t>(stop));
        pos = stop + 1;
        if (stop == b->end) ++j;
      } else {
        const std::int64_t stop = std::min(a->end, b->end);
        emit_both(y, *a, *b, static_cast<std::int32_t>(a_from),
                  static_cast<std::int32_t>(stop));
        pos = stop + 1;
        if (stop == a->end) ++i;
        if (stop == b->end) ++j;
      }
    }
  };

  const auto& ra = above.scanlines();
  const auto& rb = below.scanlines();
  std::size_t i = 0, j = 0;
  while (i < ra.size() || j < rb.size()) {
    if (j == rb.size() || (i < ra.size() && ra[i].y < rb[j].y)) {
      for (const auto& sp : ra[i].spans) out.push_span(ra[i].y, sp);
      ++i;
    } else if (i == ra.size() || rb[j].y < ra[i].y) {
      for (const auto& sp : rb[j].spans) {
        emit_below(rb[j].y, sp, sp.start, sp.end);
      }
      ++j;
    } else {
      compose_row(ra[i].y, ra[i].spans, rb[j].spans);
      ++i;
      ++j;
    }
  }
  return {out.build(), fin.build()};
}

}  // namespace strata
