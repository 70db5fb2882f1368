#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace strata {

struct Point {
  double x = 0.0, y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(Point a, double k) { return {a.x * k, a.y * k}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

struct Segment {
  Point a, b;
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Euclidean distance from p to segment s.
inline double distance_to_segment(Point p, const Segment& s) {
  const Point d = s.b - s.a;
  const double len2 = dot(d, d);
  if (len2 == 0.0) return norm(p - s.a);
  const double t = std::clamp(dot(p - s.a, d) / len2, 0.0, 1.0);
  return norm(p - (s.a + d * t));
}

/// Liang-Barsky clip of a segment to the closed box [x0,x1] x [y0,y1].
inline std::optional<Segment> clip_segment(const Segment& s, double x0, double y0,
                                           double x1, double y1) {
  double t0 = 0.0, t1 = 1.0;
  const double dx = s.b.x - s.a.x;
  const double dy = s.b.y - s.a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {s.a.x - x0, x1 - s.a.x, s.a.y - y0, y1 - s.a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      if (r > t1) return std::nullopt;
      t0 = std::max(t0, r);
    } else {
      if (r < t0) return std::nullopt;
      t1 = std::min(t1, r);
    }
  }
  auto at = [&](double t) -> Point {
    if (t == 0.0) return s.a;
    if (t == 1.0) return s.b;
    return {std::clamp(s.a.x + t * dx, x0, x1), std::clamp(s.a.y + t * dy, y0, y1)};
  };
  return Segment{at(t0), at(t1)};
}

/// 2x3 affine map: x' = a x + b y + c, y' = d x + e y + f.
struct Affine {
  double a = 1, b = 0, c = 0, d = 0, e = 1, f = 0;

  static Affine identity() { return {}; }
  static Affine translation(double dx, double dy) { return {1, 0, dx, 0, 1, dy}; }
  /// Rotation by `degrees` about `centre` (clockwise on screen, y down).
  static Affine rotation(double degrees, Point centre) {
    const double r = degrees * 3.14159265358979323846 / 180.0;
    const double cs = std::cos(r), sn = std::sin(r);
    return {cs, -sn, centre.x - cs * centre.x + sn * centre.y,
            sn, cs,  centre.y - sn * centre.x - cs * centre.y};
  }

  Point apply(Point p) const { return {a * p.x + b * p.y + c, d * p.x + e * p.y + f}; }
  double determinant() const { return a * e - b * d; }
  bool invertible() const { return std::abs(determinant()) > 1e-12; }

  Affine inverse() const {
    const double det = determinant();
    if (std::abs(det) <= 1e-12) throw std::invalid_argument("singular affine transform");
    const double ia = e / det, ib = -b / det, id = -d / det, ie = a / det;
    return {ia, ib, -(ia * c + ib * f), id, ie, -(id * c + ie * f)};
  }

  /// this after other: p -> this(other(p)).
  Affine compose(const Affine& o) const {
    return {a * o.a + b * o.d, a * o.b + b * o.e, a * o.c + b * o.f + c,
            d * o.a + e * o.d, d * o.b + e * o.e, d * o.c + e * o.f + f};
  }

  friend bool operator==(const Affine&, const Affine&) = default;
};

}  // namespace strata
