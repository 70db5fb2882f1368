#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "support/oracles.hpp"

using namespace strata;

namespace {

const AntialiasTables& tables16() { return default_tables(16); }

// Random point on the unit square's boundary.
Point boundary_point(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double f = u(rng);
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0: return {f, 0.0};
    case 1: return {1.0, f};
    case 2: return {f, 1.0};
    default: return {0.0, f};
  }
}

bool left_of(Point a, Point b, Point p) { return cross(b - a, p - a) > 0; }

}  // namespace

TEST(AAFilter, GaussianCdf) {
  const AAFilter f = AAFilter::gaussian();
  EXPECT_EQ(f.cdf(0.0), 0.0);
  EXPECT_EQ(f.cdf(1.0), 1.0);
  EXPECT_NEAR(f.cdf(0.5), 0.5, 1e-12);
  double prev = 0;
  for (int i = 1; i <= 100; ++i) {
    const double v = f.cdf(i / 100.0);
    EXPECT_GE(v, prev);
    prev = v;
  }
  // Density integrates to one (midpoint rule).
  double sum = 0;
  for (int i = 0; i < 10000; ++i) sum += f.density((i + 0.5) / 10000) / 10000;
  EXPECT_NEAR(sum, 1.0, 1e-6);
}

TEST(AAFilter, BoxCdfIsLinear) {
  const AAFilter f = AAFilter::box();
  EXPECT_DOUBLE_EQ(f.cdf(0.3), 0.3);
  EXPECT_DOUBLE_EQ(f.weight(0.2, 0.9), 1.0);
}

TEST(Tables, CellWeightsAreNormalisedAndSymmetric) {
  const auto& t = tables16();
  const int n = t.granularity();
  const double sum = std::accumulate(t.cell_weights.begin(), t.cell_weights.end(), 0.0);
  EXPECT_NEAR(sum, 1.0, 1e-12);
  const auto w = [&](int r, int c) { return t.cell_weights[static_cast<std::size_t>(r * n + c)]; };
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      EXPECT_NEAR(w(r, c), w(c, r), 1e-12);
      EXPECT_NEAR(w(r, c), w(n - 1 - r, c), 1e-12);
    }
  }
  // Independent check against a fine grid of the same gaussian.
  const auto fine = oracle::gaussian_grid(n * 16);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double acc = 0;
      for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
          acc += fine[static_cast<std::size_t>((r * 16 + i) * n * 16 + c * 16 + j)];
        }
      }
      EXPECT_NEAR(w(r, c), acc, 2e-5);
    }
  }
}

TEST(Tables, RejectBadParameters) {
  EXPECT_THROW(build_tables(AAFilter::gaussian(2.0, 0)), std::invalid_argument);
  EXPECT_THROW(build_tables(AAFilter::gaussian(2.0, 65)), std::invalid_argument);
  EXPECT_THROW(build_tables(AAFilter::gaussian(0.0, 16)), std::invalid_argument);
}

TEST(Tables, IntegrateConvexMatchesQuadrature) {
  const AAFilter f = AAFilter::gaussian();
  const std::vector<Point> tri{{0.1, 0.2}, {0.9, 0.35}, {0.4, 0.95}};
  const double want = oracle::quadrature([&](Point p) { return oracle::point_in_polygon(tri, p); }, 512);
  EXPECT_NEAR(detail::integrate_convex(f, tri), want, 1e-3);
}

TEST(EdgeTable, FoldedSizeAtGranularity16) {
  const EdgeTable& e = tables16().edges;
  EXPECT_EQ(e.positions(), 64);
  EXPECT_LE(e.storage_bytes(), 4096u);
  // Unfolded, every ordered pair would be stored.
  EXPECT_LT(e.entry_count(), static_cast<std::size_t>(64 * 63) / 8);
}

TEST(EdgeTable, ComplementAndSymmetry) {
  const EdgeTable& e = tables16().edges;
  const int P = e.positions(), n = e.granularity();
  std::mt19937 rng(2);
  std::uniform_int_distribution<int> pos(0, P - 1);
  for (int i = 0; i < 500; ++i) {
    const int a = pos(rng), b = pos(rng);
    if (a == b) continue;
    EXPECT_NEAR(e.grid_value(a, b) + e.grid_value(b, a), 1.0, 1e-6);
    // Quarter turn of the square.
    EXPECT_NEAR(e.grid_value(a, b), e.grid_value(a + n, b + n), 1e-6);
    if (i % 5 != 0) continue;
    // Each stored value is the filter mass of its region polygon.
    const auto poly = e.region_polygon(a, b);
    const double want = oracle::quadrature(
        [&](Point p) { return oracle::point_in_polygon(poly, p); }, 512);
    EXPECT_NEAR(e.grid_value(a, b), want, 1e-3);
  }
}

TEST(EdgeTable, PerimeterParameterRoundTrip) {
  const EdgeTable& e = tables16().edges;
  for (double k = 0; k < 64; k += 0.37) {
    EXPECT_NEAR(e.perimeter_param(e.perimeter_point(k)), k, 1e-9);
  }
  EXPECT_THROW(e.perimeter_param({0.5, 0.5}), std::invalid_argument);
}

TEST(Coverage, SingleEdgeAgainstQuadrature) {
  const auto& t = tables16();
  std::mt19937 rng(1000);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const Point a = boundary_point(rng), b = boundary_point(rng);
    // A chord along one side of the square is not a crossing edge.
    const bool same_side = (a.x == b.x && (a.x == 0 || a.x == 1)) ||
                           (a.y == b.y && (a.y == 0 || a.y == 1));
    if (same_side || norm(b - a) < 1e-3) continue;
    const bool corner = left_of(a, b, {0, 0});
    const double got = coverage_single_edge(t.edges, {a, b}, corner);
    const double want = oracle::quadrature([&](Point p) { return left_of(a, b, p); });
    worst = std::max(worst, std::abs(got - want));
  }
  EXPECT_LE(worst, 0.01);
}

TEST(Coverage, MultiEdgeAgainstQuadrature) {
  const auto& t = tables16();
  std::mt19937 rng(1001);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::vector<Point> tri{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
    const std::vector<Segment> edges{{tri[0], tri[1]}, {tri[1], tri[2]}, {tri[2], tri[0]}};
    const double got = coverage_multi_edge(t.subspans, edges);
    const double want = oracle::quadrature([&](Point p) { return oracle::point_in_polygon(tri, p); });
    worst = std::max(worst, std::abs(got - want));
  }
  EXPECT_LE(worst, 0.01);
}

TEST(Coverage, EdgeThroughCentreIsHalf) {
  const auto& t = tables16();
  for (double angle = 0; angle < 180; angle += 7.5) {
    const double r = angle * M_PI / 180;
    const Point d{std::cos(r), std::sin(r)};
    const Point a = Point{0.5, 0.5} - d * 2.0, b = Point{0.5, 0.5} + d * 2.0;
    const double got = coverage_single_edge(t.edges, {a, b}, left_of(a, b, {0, 0}));
    EXPECT_NEAR(got, 0.5, 0.01) << angle;
  }
  // Through a pixel of a polygon: the half-plane x < 10.5 at pixel (10, 4).
  const Geometry g = oracle::rect_poly(-20, -20, 10.5, 40);
  EXPECT_NEAR(pixel_coverage(g, 10, 4, t), 0.5, 1e-6);
}

TEST(Coverage, PolygonPixelsAgainstQuadrature) {
  // Whole-pipeline coverage: edge classification, chord orientation and the
  // tables, for random polygons around pixel (0, 0).
  const auto& t = tables16();
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> u(-1.5, 2.5);
  double worst = 0;
  for (int i = 0; i < 400; ++i) {
    Polygon p;
    const int k = 3 + i % 3;
    for (int j = 0; j < k; ++j) p.vertices.push_back({u(rng), u(rng)});
    const double got = pixel_coverage(p, 0, 0, t);
    // Footprint of pixel 0 spans [-0.5, 1.5]^2.
    const double want = oracle::quadrature([&](Point q) {
      return oracle::point_in_polygon(p.vertices, {q.x * 2 - 0.5, q.y * 2 - 0.5});
    });
    worst = std::max(worst, std::abs(got - want));
  }
  EXPECT_LE(worst, 0.01);
}

TEST(Coverage, BrushAgainstQuadrature) {
  // Away from the caps a thick stroke's boundary is straight across the
  // footprint, where the distance profile is exact.
  const auto& t = tables16();
  std::mt19937 rng(78);
  std::uniform_real_distribution<double> off(-6, 6), rad(3, 8), ang(0, M_PI);
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    const double th = ang(rng);
    const Point d{std::cos(th), std::sin(th)};
    const Point c{0.5 + off(rng) * -d.y, 0.5 + off(rng) * d.x};
    const BrushStroke b{{c - d * 40.0, c + d * 40.0}, rad(rng)};
    const double got = pixel_coverage(b, 0, 0, t);
    const double want = oracle::quadrature([&](Point q) {
      return oracle::segment_distance({q.x * 2 - 0.5, q.y * 2 - 0.5}, b.path[0], b.path[1]) <= b.radius;
    });
    worst = std::max(worst, std::abs(got - want));
  }
  EXPECT_LE(worst, 0.01);
}

TEST(Subpixel, ResolveUniformMatrix) {
  const auto& t = tables16();
  const Color c{0.25f, 0.5f, 0.f, 0.5f};
  const std::vector<Color> m(256, c);
  const Color r = resolve_subpixel(m, t);
  EXPECT_NEAR(r.r, c.r, 1e-6);
  EXPECT_NEAR(r.a, c.a, 1e-6);
  EXPECT_THROW(resolve_subpixel(std::vector<Color>(10), t), std::invalid_argument);
}
