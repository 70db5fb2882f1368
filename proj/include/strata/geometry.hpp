#pragma once

// Primitive geometries, their finite-width scanline shapes, and partial
// rasterization to sprites.
//
// Pixel (x, y) covers [x, x+1] x [y, y+1]; its antialiasing footprint is the
// open square of side D centred on (x + 0.5, y + 0.5).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "strata/antialias.hpp"
#include "strata/pixelset.hpp"
#include "strata/sprite.hpp"
#include "strata/vec.hpp"

namespace strata {

inline constexpr double kDefaultFootprint = 2.0;

/// Closed polygon, even-odd fill.
struct Polygon {
  std::vector<Point> vertices;
  friend bool operator==(const Polygon&, const Polygon&) = default;
};

/// Points within `radius` of the polyline `path`.
struct BrushStroke {
  std::vector<Point> path;
  double radius = 1.0;
  friend bool operator==(const BrushStroke&, const BrushStroke&) = default;
};

enum class CombineOp { Union, Intersection, Difference };

struct Geometry;

struct Combine {
  CombineOp op = CombineOp::Union;
  std::shared_ptr<const Geometry> left, right;
};

struct Geometry {
  std::variant<Polygon, BrushStroke, Combine> v;

  Geometry() = default;
  Geometry(Polygon p) : v(std::move(p)) {}
  Geometry(BrushStroke b) : v(std::move(b)) {}
  Geometry(Combine c) : v(std::move(c)) {}

  friend bool operator==(const Geometry& a, const Geometry& b);
};

inline Geometry combine(CombineOp op, Geometry left, Geometry right) {
  return Combine{op, std::make_shared<const Geometry>(std::move(left)),
                 std::make_shared<const Geometry>(std::move(right))};
}

inline bool operator==(const Combine& a, const Combine& b) {
  if (a.op != b.op) return false;
  auto eq = [](const std::shared_ptr<const Geometry>& x,
               const std::shared_ptr<const Geometry>& y) {
    if (!x || !y) return x == y;
    return *x == *y;
  };
  return eq(a.left, b.left) && eq(a.right, b.right);
}

inline bool operator==(const Geometry& a, const Geometry& b) { return a.v == b.v; }

struct SolidFill {
  Color color;
  friend bool operator==(const SolidFill&, const SolidFill&) = default;
};

/// Colour varies linearly from c0 at p0 to c1 at p1 along p1 - p0, clamped
/// beyond the endpoints.
struct LinearGradient {
  Point p0, p1;
  Color c0, c1;
  friend bool operator==(const LinearGradient&, const LinearGradient&) = default;
};

using Fill = std::variant<SolidFill, LinearGradient>;

inline bool is_solid(const Fill& f) { return std::holds_alternative<SolidFill>(f); }

inline Color fill_color(const Fill& f, Point p) {
  if (const auto* s = std::get_if<SolidFill>(&f)) return s->color;
  const auto& g = std::get<LinearGradient>(f);
  const Point d = g.p1 - g.p0;
  const double len2 = dot(d, d);
  const double t = len2 > 0.0 ? std::clamp(dot(p - g.p0, d) / len2, 0.0, 1.0) : 0.0;
  const auto mix = [t](float a, float b) {
    return static_cast<float>(a + (b - a) * t);
  };
  return {mix(g.c0.r, g.c1.r), mix(g.c0.g, g.c1.g), mix(g.c0.b, g.c1.b),
          mix(g.c0.a, g.c1.a)};
}

/// Maps geometry forward through `m`. Brush radii scale by sqrt|det m|.
inline Geometry transform(const Geometry& g, const Affine& m) {
  if (const auto* p = std::get_if<Polygon>(&g.v)) {
    Polygon out;
    for (const auto& q : p->vertices) out.vertices.push_back(m.apply(q));
    return out;
  }
  if (const auto* b = std::get_if<BrushStroke>(&g.v)) {
    BrushStroke out;
    for (const auto& q : b->path) out.path.push_back(m.apply(q));
    out.radius = b->radius * std::sqrt(std::abs(m.determinant()));
    return out;
  }
  const auto& c = std::get<Combine>(g.v);
  return combine(c.op, transform(*c.left, m), transform(*c.right, m));
}

/// Fill seen through `m`: the colour at m(p) equals the original at p.
inline Fill transform(const Fill& f, const Affine& m) {
  if (is_solid(f)) return f;
  const auto& g = std::get<LinearGradient>(f);
  const Point d = g.p1 - g.p0;
  const double len2 = dot(d, d);
  if (len2 == 0.0) return LinearGradient{m.apply(g.p0), m.apply(g.p1), g.c0, g.c1};
  // Gradient parameter t(q) = dot(q - m(p0), w) with w = m^-T d / |d|^2.
  const Affine inv = m.inverse();
  const Point w{(inv.a * d.x + inv.d * d.y) / len2, (inv.b * d.x + inv.e * d.y) / len2};
  const double w2 = dot(w, w);
  const Point p0 = m.apply(g.p0);
  return LinearGradient{p0, p0 + w * (1.0 / w2), g.c0, g.c1};
}

namespace detail {

inline std::int32_t to_pixel(double v) {
  if (!std::isfinite(v)) throw std::out_of_range("non-finite coordinate");
  const double lim = static_cast<double>(kCoordLimit);
  if (v < -lim || v > lim) throw std::out_of_range("coordinate outside representable range");
  return static_cast<std::int32_t>(v);
}

// First pixel whose open footprint interval (x+.5-h, x+.5+h) reaches past a.
inline std::int32_t first_touching(double a, double h) {
  return to_pixel(std::floor(a - 0.5 - h) + 1.0);
}
// Last pixel whose open footprint interval starts before b.
inline std::int32_t last_touching(double b, double h) {
  return to_pixel(std::ceil(b - 0.5 + h) - 1.0);
}

inline double cross_x(const Segment& e, double y) {
  return e.a.x + (y - e.a.y) * (e.b.x - e.a.x) / (e.b.y - e.a.y);
}

struct PolyEdges {
  std::vector<Segment> edges;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool degenerate = true;
};

inline PolyEdges polygon_edges(const Polygon& p) {
  PolyEdges out;
  const auto& v = p.vertices;
  if (v.size() < 3) return out;
  for (const auto& q : v) {
    if (!std::isfinite(q.x) || !std::isfinite(q.y)) {
      throw std::invalid_argument("non-finite polygon vertex");
    }
  }
  // Zero area: every vertex on one line.
  std::size_t k = 1;
  while (k < v.size() && v[k] == v[0]) ++k;
  bool collinear = true;
  for (std::size_t i = k + 1; i < v.size() && k < v.size(); ++i) {
    if (cross(v[k] - v[0], v[i] - v[0]) != 0.0) {
      collinear = false;
      break;
    }
  }
  if (k >= v.size() || collinear) return out;
  out.degenerate = false;
  out.x0 = out.x1 = v[0].x;
  out.y0 = out.y1 = v[0].y;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point a = v[i], b = v[(i + 1) % v.size()];
    out.x0 = std::min(out.x0, a.x);
    out.x1 = std::max(out.x1, a.x);
    out.y0 = std::min(out.y0, a.y);
    out.y1 = std::max(out.y1, a.y);
    if (a != b) out.edges.push_back({a, b});
  }
  return out;
}

// Even-odd crossings of the horizontal line at y. With lower_inclusive an
// edge counts when ya <= y < yb, otherwise when ya < y <= yb.
inline void crossings(std::span<const Segment> edges, double y, bool lower_inclusive,
                      std::vector<double>& xs) {
  xs.clear();
  for (const auto& e : edges) {
    const double ya = std::min(e.a.y, e.b.y), yb = std::max(e.a.y, e.b.y);
    const bool hit = lower_inclusive ? (ya <= y && y < yb) : (ya < y && y <= yb);
    if (hit) xs.push_back(cross_x(e, y));
  }
  std::sort(xs.begin(), xs.end());
}

inline bool polygon_inside(const PolyEdges& pe, Point p) {
  if (pe.degenerate) return false;
  bool in = false;
  for (const auto& e : pe.edges) {
    const double ya = std::min(e.a.y, e.b.y), yb = std::max(e.a.y, e.b.y);
    if (ya <= p.y && p.y < yb && cross_x(e, p.y) <= p.x) in = !in;
  }
  return in;
}

inline double path_distance(const BrushStroke& b, Point p) {
  if (b.path.size() == 1) return norm(p - b.path[0]);
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < b.path.size(); ++i) {
    d = std::min(d, distance_to_segment(p, {b.path[i], b.path[i + 1]}));
  }
  return d;
}

inline void check_brush(const BrushStroke& b) {
  if (!(b.radius > 0.0) || !std::isfinite(b.radius)) {
    throw std::invalid_argument("brush radius must be positive");
  }
  for (const auto& q : b.path) {
    if (!std::isfinite(q.x) || !std::isfinite(q.y)) {
      throw std::invalid_argument("non-finite brush point");
    }
  }
}

}  // namespace detail

/// Edges relevant to one finite-width scanline band: those crossing its top
/// line (t), its bottom line (b), and every edge reaching into the open band (e).
struct EdgeList {
  std::vector<Segment> t, b, e;
};

inline EdgeList edge_list(const Polygon& p, std::int32_t y, double footprint) {
  const auto pe = detail::polygon_edges(p);
  const double h = footprint / 2;
  const double yt = y + 0.5 - h, yb = y + 0.5 + h;
  EdgeList out;
  for (const auto& e : pe.edges) {
    const double ya = std::min(e.a.y, e.b.y), yz = std::max(e.a.y, e.b.y);
    if (ya <= yt && yt < yz) out.t.push_back(e);
    if (ya < yb && yb <= yz) out.b.push_back(e);
    if (ya < yb && yz > yt) out.e.push_back(e);
  }
  return out;
}

/// One band's shape spans: spans(t) ∪ spans(b) ∪ covered(e).
inline std::vector<Span> band_spans(const std::vector<Span>& top,
                                    const std::vector<Span>& bottom,
                                    const std::vector<Span>& covered) {
  return detail::unite_spans(detail::unite_spans(top, bottom), covered);
}

namespace detail {

// Pixels whose open footprint overlaps the interior just inside a band line.
inline std::vector<Span> line_spans(std::span<const Segment> edges, double y,
                                    bool lower_inclusive, double h,
                                    std::vector<double>& xs) {
  crossings(edges, y, lower_inclusive, xs);
  std::vector<Span> out;
  for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
    const auto s = first_touching(xs[k], h), e = last_touching(xs[k + 1], h);
    if (s <= e) out.push_back({s, e});
  }
  normalize_spans(out);
  return out;
}

// Pixels whose open footprint meets some edge inside the open band.
inline std::vector<Span> covered_spans(std::span<const Segment> edges, double yt,
                                       double yb, double h) {
  std::vector<Span> out;
  for (const auto& e : edges) {
    const double ya = std::min(e.a.y, e.b.y), yz = std::max(e.a.y, e.b.y);
    if (!(ya < yb && yz > yt)) continue;
    double xa, xb;
    if (ya == yz) {
      xa = std::min(e.a.x, e.b.x);
      xb = std::max(e.a.x, e.b.x);
    } else {
      const double u = cross_x(e, std::max(ya, yt));
      const double v = cross_x(e, std::min(yz, yb));
      xa = std::min(u, v);
      xb = std::max(u, v);
    }
    const auto s = first_touching(xa, h), t = last_touching(xb, h);
    if (s <= t) out.push_back({s, t});
  }
  normalize_spans(out);
  return out;
}

// Pixels whose centre lies inside; interior intervals are half-open [a, b).
inline std::vector<Span> centre_spans(std::span<const Segment> edges, double yc,
                                      std::vector<double>& xs) {
  crossings(edges, yc, true, xs);
  std::vector<Span> out;
  for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
    const auto s = to_pixel(std::ceil(xs[k] - 0.5));
    const auto e = to_pixel(std::ceil(xs[k + 1] - 0.5) - 1.0);
    if (s <= e) out.push_back({s, e});
  }
  normalize_spans(out);
  return out;
}

}  // namespace detail

/// Shape and minshape computed together.
struct ShapePair {
  Shape shape;
  Shape min;
};

namespace detail {

inline ShapePair polygon_shapes(const Polygon& p, double D) {
  const auto pe = polygon_edges(p);
  if (pe.degenerate) return {};
  const double h = D / 2;
  const std::int32_t r0 = first_touching(pe.y0, h), r1 = last_touching(pe.y1, h);
  std::vector<Scanline> rows, min_rows;
  std::vector<double> xs;
  for (std::int32_t y = r0; y <= r1; ++y) {
    const double yt = y + 0.5 - h, yb = y + 0.5 + h;
    const auto covered = covered_spans(pe.edges, yt, yb, h);
    const auto row = band_spans(line_spans(pe.edges, yt, true, h, xs),
                                line_spans(pe.edges, yb, false, h, xs), covered);
    if (!row.empty()) rows.push_back({y, row});
    auto inner = subtract_spans(centre_spans(pe.edges, y + 0.5, xs), covered);
    if (!inner.empty()) min_rows.push_back({y, std::move(inner)});
  }
  return {Shape::from_rows(std::move(rows)), Shape::from_rows(std::move(min_rows))};
}

// x-interval of centres on the line y = yc lying within distance R of the
// segment a-b (a capsule, so the set is an interval).
inline bool capsule_row(Point a, Point b, double R, double yc, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  auto disc = [&](Point c) {
    const double dy = yc - c.y;
    if (std::abs(dy) >= R) return;
    const double w = std::sqrt(R * R - dy * dy);
    lo = std::min(lo, c.x - w);
    hi = std::max(hi, c.x + w);
  };
  disc(a);
  disc(b);
  const Point d = b - a;
  const double len = norm(d);
  if (len > 0.0) {
    // Body: |cross(d, p - a)| < R len and 0 <= dot(d, p - a) <= len^2, each
    // linear in x.
    double blo = -std::numeric_limits<double>::infinity(), bhi = -blo;
    auto constrain = [&](double coef, double c0, double lower, double upper) {
      // lower <= coef * x + c0 <= upper
      if (coef == 0.0) {
        if (c0 < lower || c0 > upper) {
          blo = 1;
          bhi = 0;
        }
        return;
      }
      double x0 = (lower - c0) / coef, x1 = (upper - c0) / coef;
      if (x0 > x1) std::swap(x0, x1);
      blo = std::max(blo, x0);
      bhi = std::min(bhi, x1);
    };
    constrain(-d.y, d.x * (yc - a.y) + d.y * a.x, -R * len, R * len);
    constrain(d.x, -d.x * a.x + d.y * (yc - a.y), 0.0, len * len);
    if (blo <= bhi) {
      lo = std::min(lo, blo);
      hi = std::max(hi, bhi);
    }
  }
  return lo <= hi;
}

inline ShapePair brush_shapes(const BrushStroke& b, double D) {
  check_brush(b);
  if (b.path.empty()) return {};
  const double h = D / 2;
  const double R = b.radius + h;
  const double min_d = b.radius - h * std::sqrt(2.0);
  double y0 = b.path[0].y, y1 = y0;
  for (const auto& q : b.path) {
    y0 = std::min(y0, q.y);
    y1 = std::max(y1, q.y);
  }
  const std::int32_t r0 = to_pixel(std::floor(y0 - R - 0.5));
  const std::int32_t r1 = to_pixel(std::ceil(y1 + R - 0.5));
  std::vector<Scanline> rows, min_rows;
  for (std::int32_t y = r0; y <= r1; ++y) {
    const double yc = y + 0.5;
    std::vector<Span> cand;
    for (std::size_t i = 0; i < b.path.size(); ++i) {
      const Point a = b.path[i];
      const Point c = i + 1 < b.path.size() ? b.path[i + 1] : a;
      if (i + 1 == b.path.size() && b.path.size() > 1) break;
      double lo, hi;
      if (!capsule_row(a, c, R, yc, lo, hi)) continue;
      // Widened by a pixel; every candidate is verified below.
      cand.push_back({to_pixel(std::floor(lo - 0.5)) - 1, to_pixel(std::ceil(hi - 0.5)) + 1});
    }
    normalize_spans(cand);
    std::vector<Span> row, min_row;
    for (const auto& sp : cand) {
      for (std::int32_t x = sp.start; x <= sp.end; ++x) {
        const double d = path_distance(b, {x + 0.5, yc});
        if (d < R) row.push_back({x, x});
        if (d <= min_d) min_row.push_back({x, x});
      }
    }
    normalize_spans(row);
    normalize_spans(min_row);
    if (!row.empty()) rows.push_back({y, std::move(row)});
    if (!min_row.empty()) min_rows.push_back({y, std::move(min_row)});
  }
  return {Shape::from_rows(std::move(rows)), Shape::from_rows(std::move(min_rows))};
}

}  // namespace detail

inline ShapePair compute_shapes(const Geometry& g, double footprint = kDefaultFootprint) {
  if (!(footprint > 0.0)) throw std::invalid_argument("footprint must be positive");
  if (const auto* p = std::get_if<Polygon>(&g.v)) return detail::polygon_shapes(*p, footprint);
  if (const auto* b = std::get_if<BrushStroke>(&g.v)) return detail::brush_shapes(*b, footprint);
  const auto& c = std::get<Combine>(g.v);
  if (!c.left || !c.right) throw std::invalid_argument("combine without operands");
  const ShapePair a = compute_shapes(*c.left, footprint);
  const ShapePair b = compute_shapes(*c.right, footprint);
  switch (c.op) {
    case CombineOp::Union:
      return {unite(a.shape, b.shape), unite(a.min, b.min)};
    case CombineOp::Intersection:
      return {intersect(a.shape, b.shape), intersect(a.min, b.min)};
    case CombineOp::Difference:
      return {a.shape, subtract(a.min, b.shape)};
  }
  throw std::logic_error("unknown combine op");
}

inline Shape shape(const Geometry& g, double footprint = kDefaultFootprint) {
  return compute_shapes(g, footprint).shape;
}
inline Shape minshape(const Geometry& g, double footprint = kDefaultFootprint) {
  return compute_shapes(g, footprint).min;
}
inline Shape maxshape(const Geometry& g, double footprint = kDefaultFootprint) {
  auto sp = compute_shapes(g, footprint);
  return subtract(sp.shape, sp.min);
}

/// Point membership (even-odd for polygons, distance <= radius for brushes).
inline bool inside(const Geometry& g, Point p) {
  if (const auto* poly = std::get_if<Polygon>(&g.v)) {
    return detail::polygon_inside(detail::polygon_edges(*poly), p);
  }
  if (const auto* b = std::get_if<BrushStroke>(&g.v)) {
    return !b->path.empty() && detail::path_distance(*b, p) <= b->radius;
  }
  const auto& c = std::get<Combine>(g.v);
  switch (c.op) {
    case CombineOp::Union: return inside(*c.left, p) || inside(*c.right, p);
    case CombineOp::Intersection: return inside(*c.left, p) && inside(*c.right, p);
    case CombineOp::Difference: return inside(*c.left, p) && !inside(*c.right, p);
  }
  return false;
}

/// Per-pixel membership in shape and minshape, matching compute_shapes.
struct PixelClass {
  bool in_shape = false;
  bool is_min = false;
};

namespace detail {

struct Footprint {
  double x0, y0, size;
  double x1() const { return x0 + size; }
  double y1() const { return y0 + size; }
  bool strictly_inside(Point p) const {
    return p.x > x0 && p.x < x1() && p.y > y0 && p.y < y1();
  }
  Point to_unit(Point p) const { return {(p.x - x0) / size, (p.y - y0) / size}; }
  Point from_unit(Point u) const { return {x0 + u.x * size, y0 + u.y * size}; }
};

inline Footprint footprint_of(std::int32_t x, std::int32_t y, double D) {
  return {x + 0.5 - D / 2, y + 0.5 - D / 2, D};
}

// Edge clipped to the closed footprint, if part of it lies in the open square.
inline std::optional<Segment> meets_open(const Segment& e, const Footprint& f) {
  if (std::max(e.a.x, e.b.x) < f.x0 || std::min(e.a.x, e.b.x) > f.x1() ||
      std::max(e.a.y, e.b.y) < f.y0 || std::min(e.a.y, e.b.y) > f.y1()) {
    return std::nullopt;
  }
  auto c = clip_segment(e, f.x0, f.y0, f.x1(), f.y1());
  if (!c) return std::nullopt;
  const Point mid = (c->a + c->b) * 0.5;
  if (!f.strictly_inside(mid)) return std::nullopt;
  return c;
}

inline PixelClass classify_polygon(const PolyEdges& pe, std::int32_t x, std::int32_t y,
                                   double D) {
  if (pe.degenerate) return {};
  const auto f = footprint_of(x, y, D);
  bool edge = false;
  for (const auto& e : pe.edges) {
    if (meets_open(e, f)) {
      edge = true;
      break;
    }
  }
  const bool centre = polygon_inside(pe, {x + 0.5, y + 0.5});
  return {edge || centre, !edge && centre};
}

}  // namespace detail

inline PixelClass classify_pixel(const Geometry& g, std::int32_t x, std::int32_t y,
                                 double footprint = kDefaultFootprint) {
  if (const auto* p = std::get_if<Polygon>(&g.v)) {
    return detail::classify_polygon(detail::polygon_edges(*p), x, y, footprint);
  }
  if (const auto* b = std::get_if<BrushStroke>(&g.v)) {
    if (b->path.empty()) return {};
    const double h = footprint / 2;
    const double d = detail::path_distance(*b, {x + 0.5, y + 0.5});
    return {d < b->radius + h, d <= b->radius - h * std::sqrt(2.0)};
  }
  const auto& c = std::get<Combine>(g.v);
  const auto a = classify_pixel(*c.left, x, y, footprint);
  const auto b = classify_pixel(*c.right, x, y, footprint);
  switch (c.op) {
    case CombineOp::Union: return {a.in_shape || b.in_shape, a.is_min || b.is_min};
    case CombineOp::Intersection: return {a.in_shape && b.in_shape, a.is_min && b.is_min};
    case CombineOp::Difference: return {a.in_shape, a.is_min && !b.in_shape};
  }
  return {};
}

namespace detail {

inline double polygon_coverage(const PolyEdges& pe, std::int32_t x, std::int32_t y,
                               const AntialiasTables& t) {
  if (pe.degenerate) return 0.0;
  const auto f = footprint_of(x, y, t.footprint());
  const Segment* only = nullptr;
  std::optional<Segment> only_clip;
  int count = 0;
  for (const auto& e : pe.edges) {
    if (auto c = meets_open(e, f)) {
      if (++count == 1) {
        only = &e;
        only_clip = c;
      } else {
        break;
      }
    }
  }
  if (count == 0) return polygon_inside(pe, {x + 0.5, y + 0.5}) ? 1.0 : 0.0;
  if (count == 1) {
    const Point ua = f.to_unit(only_clip->a), ub = f.to_unit(only_clip->b);
    constexpr double eps = 1e-9;
    auto on_boundary = [](Point u) {
      return std::abs(u.x) <= eps || std::abs(u.x - 1) <= eps || std::abs(u.y) <= eps ||
             std::abs(u.y - 1) <= eps;
    };
    if (on_boundary(ua) && on_boundary(ub)) {
      const EdgeTable& table = t.edges;
      const double s = table.perimeter_param(ua), tt = table.perimeter_param(ub);
      const double P = table.positions();
      // A point strictly inside the region bounded by the chord and the arc
      // running forward from tt to s.
      const double arc = std::fmod(s - tt + P, P);
      const Point pm = table.perimeter_point(tt + arc / 2);
      const Point q = f.from_unit((pm + (ua + ub) * 0.5) * 0.5);
      const bool q_in = polygon_inside(pe, q);
      const bool corner_inside = s < tt ? q_in : !q_in;
      return coverage_single_edge(table, {f.to_unit(only->a), f.to_unit(only->b)},
                                  corner_inside);
    }
  }
  std::vector<Segment> local;
  for (const auto& e : pe.edges) {
    if (std::max(e.a.y, e.b.y) < f.y0 || std::min(e.a.y, e.b.y) > f.y1()) continue;
    if (e.a.y == e.b.y) continue;
    local.push_back({f.to_unit(e.a), f.to_unit(e.b)});
  }
  return coverage_multi_edge(t.subspans, local);
}

inline double brush_coverage(const BrushStroke& b, std::int32_t x, std::int32_t y,
                             const AntialiasTables& t) {
  if (b.path.empty()) return 0.0;
  const double D = t.footprint();
  const double d = path_distance(b, {x + 0.5, y + 0.5});
  const double u = (b.radius + D / 2 - d) / D;
  if (u >= 1.0) return 1.0;
  if (u <= 0.0) return 0.0;
  return t.filter.cdf(u);
}

template <typename Inside>
double sampled_coverage(Inside&& in, std::int32_t x, std::int32_t y,
                        const AntialiasTables& t) {
  const int n = t.granularity();
  const auto f = footprint_of(x, y, t.footprint());
  double c = 0.0;
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k < n; ++k) {
      const Point p{f.x0 + (k + 0.5) * f.size / n, f.y0 + (r + 0.5) * f.size / n};
      if (in(p)) c += t.cell_weights[static_cast<std::size_t>(r * n + k)];
    }
  }
  return std::clamp(c, 0.0, 1.0);
}

}  // namespace detail

/// Filtered coverage of pixel (x, y): exactly 1 on minshape pixels, 0 outside
/// the shape. Shared by rasterize and by the painter reference.
inline double pixel_coverage(const Geometry& g, std::int32_t x, std::int32_t y,
                             const AntialiasTables& t) {
  if (const auto* p = std::get_if<Polygon>(&g.v)) {
    return detail::polygon_coverage(detail::polygon_edges(*p), x, y, t);
  }
  if (const auto* b = std::get_if<BrushStroke>(&g.v)) return detail::brush_coverage(*b, x, y, t);
  const auto cls = classify_pixel(g, x, y, t.footprint());
  if (cls.is_min) return 1.0;
  if (!cls.in_shape) return 0.0;
  return detail::sampled_coverage([&](Point p) { return inside(g, p); }, x, y, t);
}

struct RasterizeStats {
  std::int64_t pixels = 0;  // pixels whose value was computed
};

namespace detail {

// Per-geometry state reused across the pixels of one rasterize call.
class CoverageFn {
 public:
  CoverageFn(const Geometry& g, const AntialiasTables& t) : g_(g), t_(t) {
    if (const auto* p = std::get_if<Polygon>(&g.v)) edges_ = polygon_edges(*p);
  }
  double operator()(std::int32_t x, std::int32_t y) const {
    if (std::holds_alternative<Polygon>(g_.v)) return polygon_coverage(edges_, x, y, t_);
    return pixel_coverage(g_, x, y, t_);
  }

 private:
  const Geometry& g_;
  const AntialiasTables& t_;
  PolyEdges edges_;
};

}  // namespace detail

/// Partial rasterization of geometry + fill over R ∩ shape. Solid fills emit
/// Run spans across minshape pixels.
inline Sprite rasterize(const Geometry& g, const Fill& fill, const Shape& R,
                        const ShapePair& shapes, const AntialiasTables& t,
                        RasterizeStats* stats = nullptr) {
  const Shape todo = intersect(R, shapes.shape);
  const detail::CoverageFn cov(g, t);
  const bool solid = is_solid(fill);
  SpriteBuilder out;
  std::int64_t computed = 0;
  for (const auto& row : todo.scanlines()) {
    const Scanline* mrow = shapes.min.row(row.y);
    std::size_t mi = 0;
    for (const auto& sp : row.spans) {
      std::int32_t x = sp.start;
      while (true) {
        // Advance to the first min span that could contain x.
        while (mrow && mi < mrow->spans.size() && mrow->spans[mi].end < x) ++mi;
        const bool in_min = mrow && mi < mrow->spans.size() && mrow->spans[mi].start <= x;
        if (in_min && solid) {
          const std::int32_t e = std::min(sp.end, mrow->spans[mi].end);
          out.push_run(row.y, x, e, std::get<SolidFill>(fill).color);
          computed += std::int64_t{e} - x + 1;
          if (e == sp.end) break;
          x = e + 1;
          continue;
        }
        const Color c = fill_color(fill, {x + 0.5, row.y + 0.5});
        const double k = in_min ? 1.0 : cov(x, row.y);
        out.push_pixel(x, row.y, in_min ? c : scale(c, static_cast<float>(k)));
        ++computed;
        if (x == sp.end) break;
        ++x;
      }
    }
  }
  if (stats) stats->pixels += computed;
  return out.build();
}

inline Sprite rasterize(const Geometry& g, const Fill& fill, const Shape& R,
                        const AntialiasTables& t, RasterizeStats* stats = nullptr) {
  return rasterize(g, fill, R, compute_shapes(g, t.footprint()), t, stats);
}

/// n x n point samples over one pixel's footprint, row-major.
struct SubpixelMatrix {
  std::int32_t x = 0, y = 0;
  std::vector<Color> cells;
  friend bool operator==(const SubpixelMatrix&, const SubpixelMatrix&) = default;
};

/// Subsample (row, col) is the fill colour at the pixel centre when the
/// subsample centre is inside the geometry, else transparent.
inline std::vector<SubpixelMatrix> rasterize_subpixel(const Geometry& g, const Fill& fill,
                                                      const Shape& R,
                                                      const AntialiasTables& t,
                                                      RasterizeStats* stats = nullptr) {
  const int n = t.granularity();
  const double D = t.footprint();
  std::vector<SubpixelMatrix> out;
  std::optional<detail::PolyEdges> pe;
  if (const auto* p = std::get_if<Polygon>(&g.v)) pe = detail::polygon_edges(*p);
  auto in = [&](Point p) { return pe ? detail::polygon_inside(*pe, p) : inside(g, p); };
  for_each_pixel(R, [&](std::int32_t x, std::int32_t y) {
    const auto f = detail::footprint_of(x, y, D);
    const Color c = fill_color(fill, {x + 0.5, y + 0.5});
    SubpixelMatrix m{x, y, std::vector<Color>(static_cast<std::size_t>(n) * n)};
    for (int r = 0; r < n; ++r) {
      for (int k = 0; k < n; ++k) {
        const Point p{f.x0 + (k + 0.5) * D / n, f.y0 + (r + 0.5) * D / n};
        m.cells[static_cast<std::size_t>(r * n + k)] = in(p) ? c : Color::transparent();
      }
    }
    out.push_back(std::move(m));
  });
  if (stats) stats->pixels += static_cast<std::int64_t>(out.size());
  return out;
}

}  // namespace strata
