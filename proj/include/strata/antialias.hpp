#pragma once

// Antialiasing filter footprints and the two precomputed coverage tables:
// a single-edge table keyed by chord endpoints on the footprint perimeter, and
// a subspan table of partial row integrals.
//
// All table lookups work in footprint-local unit coordinates: the footprint
// square maps to [0,1]^2 with (0,0) at its top-left corner.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include "strata/sprite.hpp"
#include "strata/vec.hpp"

namespace strata {

struct AAFilter {
  enum class Kind { Gaussian, Box };

  Kind kind = Kind::Gaussian;
  double footprint = 2.0;  // in units of interpixel spacing
  int granularity = 16;

  static AAFilter gaussian(double footprint = 2.0, int granularity = 16) {
    return {Kind::Gaussian, footprint, granularity};
  }
  static AAFilter box(double footprint = 2.0, int granularity = 16) {
    return {Kind::Box, footprint, granularity};
  }

  // Gaussian sigma is a quarter of the footprint; in unit coordinates, 0.25.
  static constexpr double kUnitSigma = 0.25;

  /// Normalized 1D density on [0,1]; the 2D weight is its separable product.
  double density(double u) const {
    if (u < 0.0 || u > 1.0) return 0.0;
    if (kind == Kind::Box) return 1.0;
    const double z = (u - 0.5) / kUnitSigma;
    return std::exp(-0.5 * z * z) / (kUnitSigma * std::sqrt(2.0 * M_PI)) / mass();
  }

  /// Cumulative 1D weight over [0, u]: 0 at u <= 0, exactly 1 at u >= 1.
  double cdf(double u) const {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    if (kind == Kind::Box) return u;
    return (phi((u - 0.5) / kUnitSigma) - phi(-0.5 / kUnitSigma)) / mass();
  }

  double weight(double u, double v) const { return density(u) * density(v); }

 private:
  static double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
  static double mass() { return phi(0.5 / kUnitSigma) - phi(-0.5 / kUnitSigma); }
};

namespace detail {

// 12-point Gauss-Legendre nodes/weights on [-1, 1].
inline constexpr std::array<double, 12> kGLNodes = {
    -0.9815606342467192, -0.9041172563704749, -0.7699026741943047,
    -0.5873179542866175, -0.3678314989981802, -0.1252334085114689,
    0.1252334085114689,  0.3678314989981802,  0.5873179542866175,
    0.7699026741943047,  0.9041172563704749,  0.9815606342467192};
inline constexpr std::array<double, 12> kGLWeights = {
    0.0471753363865118, 0.1069393259953184, 0.1600783285433462,
    0.2031674267230659, 0.2334925365383548, 0.2491470458134028,
    0.2491470458134028, 0.2334925365383548, 0.2031674267230659,
    0.1600783285433462, 0.1069393259953184, 0.0471753363865118};

// Integral of the filter weight over a convex polygon (unit coordinates),
// by Gauss-Legendre over vertical slabs between vertex abscissae.
inline double integrate_convex(const AAFilter& f, std::span<const Point> poly) {
  if (poly.size() < 3) return 0.0;
  std::vector<double> xs;
  for (const auto& p : poly) xs.push_back(p.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  auto extent = [&](double x, double& lo, double& hi) {
    lo = 1e300;
    hi = -1e300;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Point a = poly[i];
      const Point b = poly[(i + 1) % poly.size()];
      const double mn = std::min(a.x, b.x), mx = std::max(a.x, b.x);
      if (x < mn || x > mx) continue;
      double y;
      if (a.x == b.x) {
        lo = std::min({lo, a.y, b.y});
        hi = std::max({hi, a.y, b.y});
        continue;
      }
      y = a.y + (x - a.x) * (b.y - a.y) / (b.x - a.x);
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  };
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < xs.size(); ++s) {
    const double x0 = xs[s], x1 = xs[s + 1];
    const double hx = 0.5 * (x1 - x0), cx = 0.5 * (x1 + x0);
    for (std::size_t i = 0; i < kGLNodes.size(); ++i) {
      const double x = cx + hx * kGLNodes[i];
      double lo, hi;
      extent(x, lo, hi);
      if (hi <= lo) continue;
      const double hy = 0.5 * (hi - lo), cy = 0.5 * (hi + lo);
      double inner = 0.0;
      for (std::size_t j = 0; j < kGLNodes.size(); ++j) {
        inner += kGLWeights[j] * f.weight(x, cy + hy * kGLNodes[j]);
      }
      total += kGLWeights[i] * hx * inner * hy;
    }
  }
  return total;
}

}  // namespace detail

/// Single-edge coverage table. Perimeter positions 0..4n-1 run clockwise (on
/// screen) from the top-left corner. For an ordered pair (a, b) the stored
/// quantity is the filter integral over the region bounded by the chord a-b
/// and the perimeter arc running forward from b back to a. Entries are folded
/// by the square's eight symmetries and by complementation.
class EdgeTable {
 public:
  static EdgeTable build(const AAFilter& f) {
    EdgeTable t;
    t.n_ = f.granularity;
    t.positions_ = 4 * f.granularity;
    std::vector<std::uint16_t> keys;
    for (int i = 0; i < t.positions_; ++i) {
      for (int j = i + 1; j < t.positions_; ++j) {
        keys.push_back(t.canonical(i, j).key);
      }
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    t.keys_ = keys;
    t.values_.reserve(keys.size());
    for (auto k : keys) {
      const int a = k / t.positions_, b = k % t.positions_;
      t.values_.push_back(static_cast<float>(t.integrate(f, a, b)));
    }
    return t;
  }

  int granularity() const { return n_; }
  int positions() const { return positions_; }
  std::size_t entry_count() const { return keys_.size(); }
  std::size_t storage_bytes() const {
    return keys_.size() * sizeof(std::uint16_t) + values_.size() * sizeof(float);
  }

  /// Stored value for grid positions a != b (taken modulo the position count).
  double grid_value(int a, int b) const {
    a = wrap(a);
    b = wrap(b);
    if (a == b) throw std::invalid_argument("edge table: coincident endpoints");
    const Canon c = canonical(a, b);
    auto it = std::lower_bound(keys_.begin(), keys_.end(), c.key);
    if (it == keys_.end() || *it != c.key) throw std::logic_error("edge table key missing");
    const double v = values_[static_cast<std::size_t>(it - keys_.begin())];
    return c.complement ? 1.0 - v : v;
  }

  /// Region value for continuous perimeter parameters, bilinearly
  /// interpolated between grid entries.
  double value(double s, double t) const {
    const double p = positions_;
    s = std::fmod(std::fmod(s, p) + p, p);
    t = std::fmod(std::fmod(t, p) + p, p);
    const int a0 = static_cast<int>(std::floor(s));
    const int b0 = static_cast<int>(std::floor(t));
    const double fs = s - a0, ft = t - b0;
    const int d0 = wrap(b0 - a0);
    const bool near_diagonal = d0 == 0 || d0 == 1 || d0 == positions_ - 1;
    // Which side of the s == t discontinuity the query lies on.
    const bool long_arc = std::fmod(t - s + p, p) < p / 2;
    auto corner = [&](int a, int b) -> double {
      a = wrap(a);
      b = wrap(b);
      if (!near_diagonal) return grid_value(a, b);
      const int d = wrap(b - a);
      if (d == 0) return long_arc ? 1.0 : 0.0;
      const bool same_side = (d < positions_ / 2) == long_arc;
      return same_side ? grid_value(a, b) : 1.0 - grid_value(a, b);
    };
    const double v00 = corner(a0, b0), v10 = corner(a0 + 1, b0);
    const double v01 = corner(a0, b0 + 1), v11 = corner(a0 + 1, b0 + 1);
    const double v = (1 - fs) * (1 - ft) * v00 + fs * (1 - ft) * v10 +
                     (1 - fs) * ft * v01 + fs * ft * v11;
    return std::clamp(v, 0.0, 1.0);
  }

  /// Perimeter parameter in [0, 4n) of a point on the unit square's boundary.
  double perimeter_param(Point q) const {
    constexpr double eps = 1e-9;
    const double n = n_;
    double k;
    if (std::abs(q.y) <= eps) {
      k = std::clamp(q.x, 0.0, 1.0) * n;
    } else if (std::abs(q.x - 1.0) <= eps) {
      k = n + std::clamp(q.y, 0.0, 1.0) * n;
    } else if (std::abs(q.y - 1.0) <= eps) {
      k = 2 * n + (1.0 - std::clamp(q.x, 0.0, 1.0)) * n;
    } else if (std::abs(q.x) <= eps) {
      k = 3 * n + (1.0 - std::clamp(q.y, 0.0, 1.0)) * n;
    } else {
      throw std::invalid_argument("point is not on the footprint boundary");
    }
    return k >= 4 * n ? k - 4 * n : k;
  }

  Point perimeter_point(double k) const {
    const double n = n_;
    k = std::fmod(std::fmod(k, 4 * n) + 4 * n, 4 * n);
    const int side = std::min(3, static_cast<int>(k / n));
    const double f = (k - side * n) / n;
    switch (side) {
      case 0: return {f, 0.0};
      case 1: return {1.0, f};
      case 2: return {1.0 - f, 1.0};
      default: return {0.0, 1.0 - f};
    }
  }

  /// Region polygon for grid pair (a, b): chord, then the forward arc b -> a.
  std::vector<Point> region_polygon(int a, int b) const {
    std::vector<Point> poly{perimeter_point(a), perimeter_point(b)};
    int k = wrap(b);
    const int stop = wrap(a);
    for (;;) {
      const int next_corner = (k / n_ + 1) * n_;  // next multiple of n after k
      const int steps_to_stop = wrap(stop - k);
      const int steps_to_corner = next_corner - k;
      if (steps_to_stop <= steps_to_corner && steps_to_stop != 0) break;
      k = wrap(next_corner);
      if (k == stop) break;
      poly.push_back(perimeter_point(k));
    }
    return poly;
  }

 private:
  struct Canon {
    std::uint16_t key;
    bool complement;
  };

  int wrap(int k) const { return ((k % positions_) + positions_) % positions_; }

  // Minimum key over the orbit of (i, j) under the dihedral group, allowing
  // swapped (complemented) pairs.
  Canon canonical(int i, int j) const {
    Canon best{0xffff, false};
    for (int r = 0; r < 4; ++r) {
      for (int reflect = 0; reflect < 2; ++reflect) {
        int a, b;
        if (reflect == 0) {
          a = wrap(i + r * n_);
          b = wrap(j + r * n_);
        } else {
          // k -> -k reverses orientation: V(i,j) = V(-j,-i).
          a = wrap(-j + r * n_);
          b = wrap(-i + r * n_);
        }
        const auto direct = static_cast<std::uint16_t>(a * positions_ + b);
        const auto swapped = static_cast<std::uint16_t>(b * positions_ + a);
        if (direct < best.key) best = {direct, false};
        if (swapped < best.key) best = {swapped, true};
      }
    }
    return best;
  }

  double integrate(const AAFilter& f, int a, int b) const {
    const auto poly = region_polygon(a, b);
    return std::clamp(detail::integrate_convex(f, poly), 0.0, 1.0);
  }

  int n_ = 0;
  int positions_ = 0;
  std::vector<std::uint16_t> keys_;
  std::vector<float> values_;
};

/// Partial row integrals: value(start, row, length) is the filter weight of
/// `length` subpixel cells starting at column `start` in subpixel row `row`.
class SubspanTable {
 public:
  static SubspanTable build(const std::vector<double>& cell_weights, int n) {
    SubspanTable t;
    t.n_ = n;
    t.cumulative_.assign(static_cast<std::size_t>(n) * (n + 1), 0.0);
    for (int r = 0; r < n; ++r) {
      double acc = 0.0;
      for (int c = 0; c < n; ++c) {
        acc += cell_weights[static_cast<std::size_t>(r * n + c)];
        t.cumulative_[static_cast<std::size_t>(r * (n + 1) + c + 1)] = acc;
      }
    }
    return t;
  }

  int granularity() const { return n_; }

  double value(int start, int row, int length) const {
    if (row < 0 || row >= n_ || start < 0 || length < 0 || start + length > n_) {
      throw std::out_of_range("subspan outside footprint");
    }
    return cum(row, start + length) - cum(row, start);
  }

  /// Integral over [u0, u1] (subpixel units, fractional) of row `row`; the
  /// cumulative values are linearly interpolated inside a cell.
  double row_integral(int row, double u0, double u1) const {
    u0 = std::clamp(u0, 0.0, static_cast<double>(n_));
    u1 = std::clamp(u1, 0.0, static_cast<double>(n_));
    if (u1 <= u0) return 0.0;
    return cumulative_at(row, u1) - cumulative_at(row, u0);
  }

  std::size_t storage_bytes() const { return cumulative_.size() * sizeof(double); }

 private:
  double cum(int row, int k) const {
    return cumulative_[static_cast<std::size_t>(row * (n_ + 1) + k)];
  }
  double cumulative_at(int row, double u) const {
    const int k = std::min(n_ - 1, static_cast<int>(std::floor(u)));
    const double frac = u - k;
    return cum(row, k) + frac * value(k, row, 1);
  }

  int n_ = 0;
  std::vector<double> cumulative_;
};

/// Everything derived from one filter.
struct AntialiasTables {
  AAFilter filter;
  std::vector<double> cell_weights;  // n*n, row-major, sums to 1
  EdgeTable edges;
  SubspanTable subspans;

  int granularity() const { return filter.granularity; }
  double footprint() const { return filter.footprint; }
};

/// Precomputes the tables for `filter`. Throws std::invalid_argument for a
/// filter that cannot be normalized.
inline AntialiasTables build_tables(const AAFilter& filter) {
  const int n = filter.granularity;
  if (n < 1 || n > 64) throw std::invalid_argument("granularity must be in [1, 64]");
  if (!(filter.footprint > 0.0) || !std::isfinite(filter.footprint)) {
    throw std::invalid_argument("footprint must be positive");
  }
  AntialiasTables t;
  t.filter = filter;
  t.cell_weights.resize(static_cast<std::size_t>(n) * n);
  double sum = 0.0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double u0 = static_cast<double>(c) / n, v0 = static_cast<double>(r) / n;
      const std::array<Point, 4> cell = {Point{u0, v0}, Point{u0 + 1.0 / n, v0},
                                         Point{u0 + 1.0 / n, v0 + 1.0 / n},
                                         Point{u0, v0 + 1.0 / n}};
      const double w = detail::integrate_convex(filter, cell);
      t.cell_weights[static_cast<std::size_t>(r * n + c)] = w;
      sum += w;
    }
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw std::invalid_argument("filter weight is not normalizable");
  }
  for (auto& w : t.cell_weights) w /= sum;
  t.edges = EdgeTable::build(filter);
  t.subspans = SubspanTable::build(t.cell_weights, n);
  return t;
}

/// Shared tables for the default gaussian at the given granularity.
inline const AntialiasTables& default_tables(int granularity = 16) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<AntialiasTables>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[granularity];
  if (!slot) {
    slot = std::make_unique<AntialiasTables>(
        build_tables(AAFilter::gaussian(2.0, granularity)));
  }
  return *slot;
}

/// Coverage of one straight edge crossing the footprint. `chord` is in unit
/// footprint coordinates; its line is clipped to the square and must cross it.
/// `corner_inside` says whether the footprint's top-left corner is inside
/// the geometry.
inline double coverage_single_edge(const EdgeTable& table, const Segment& chord,
                                   bool corner_inside) {
  const auto clipped = clip_segment(chord, 0.0, 0.0, 1.0, 1.0);
  if (!clipped) throw std::invalid_argument("edge does not intersect the footprint");
  const double s = table.perimeter_param(clipped->a);
  const double t = table.perimeter_param(clipped->b);
  if (s == t) return corner_inside ? 1.0 : 0.0;
  // The region holding perimeter position 0 is the one whose forward arc wraps.
  const double with_corner = s < t ? table.value(s, t) : table.value(t, s);
  return corner_inside ? with_corner : 1.0 - with_corner;
}

/// Sample lines per subpixel row used by the multi-edge integrator.
inline constexpr int kLinesPerSubpixelRow = 8;

/// Coverage of the even-odd region bounded by `edges` (unit footprint
/// coordinates; every edge of the geometry, not only those near the
/// footprint, so that parity is correct).
inline double coverage_multi_edge(const SubspanTable& table,
                                  std::span<const Segment> edges) {
  const int n = table.granularity();
  std::vector<double> xs;
  double total = 0.0;
  for (int row = 0; row < n; ++row) {
    double row_sum = 0.0;
    for (int l = 0; l < kLinesPerSubpixelRow; ++l) {
      const double y = (row + (l + 0.5) / kLinesPerSubpixelRow) / n;
      xs.clear();
      for (const auto& e : edges) {
        const double ya = std::min(e.a.y, e.b.y), yb = std::max(e.a.y, e.b.y);
        if (!(ya <= y && y < yb)) continue;
        xs.push_back(e.a.x + (y - e.a.y) * (e.b.x - e.a.x) / (e.b.y - e.a.y));
      }
      std::sort(xs.begin(), xs.end());
      for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
        row_sum += table.row_integral(row, xs[k] * n, xs[k + 1] * n);
      }
    }
    total += row_sum / kLinesPerSubpixelRow;
  }
  return std::clamp(total, 0.0, 1.0);
}

/// Filter-weighted sum of an n*n subsample matrix (row-major).
inline Color resolve_subpixel(std::span<const Color> matrix, const AntialiasTables& t) {
  if (matrix.size() != t.cell_weights.size()) {
    throw std::invalid_argument("subpixel matrix size does not match granularity");
  }
  double r = 0, g = 0, b = 0, a = 0;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    const double w = t.cell_weights[i];
    r += w * matrix[i].r;
    g += w * matrix[i].g;
    b += w * matrix[i].b;
    a += w * matrix[i].a;
  }
  auto f = [](double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); };
  return {f(r), f(g), f(b), f(a)};
}

}  // namespace strata
