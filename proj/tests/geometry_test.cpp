#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"

using namespace strata;

namespace {

const AntialiasTables& T() { return default_tables(16); }

// Pixels whose open footprint contains a sample inside `in` (any) or only
// samples inside (all), from an m x m grid strictly inside the footprint.
template <typename In>
std::pair<oracle::PixelSet, oracle::PixelSet> sampled(In&& in, const Rect& box, int m = 24) {
  oracle::PixelSet any, all;
  for (std::int32_t y = box.y0; y <= box.y1; ++y) {
    for (std::int32_t x = box.x0; x <= box.x1; ++x) {
      bool a = false, b = true;
      for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
          const Point p{x - 0.5 + (c + 0.5) * 2.0 / m, y - 0.5 + (r + 0.5) * 2.0 / m};
          const bool v = in(p);
          a = a || v;
          b = b && v;
        }
      }
      if (a) any.insert({y, x});
      if (b) all.insert({y, x});
    }
  }
  return {any, all};
}

Polygon random_polygon(std::mt19937& rng, int k, double lo = 0, double hi = 24) {
  std::uniform_real_distribution<double> u(lo, hi);
  Polygon p;
  for (int i = 0; i < k; ++i) p.vertices.push_back({u(rng), u(rng)});
  return p;
}

oracle::PixelSet classified(const Geometry& g, const Rect& box, bool min) {
  oracle::PixelSet out;
  for (std::int32_t y = box.y0; y <= box.y1; ++y) {
    for (std::int32_t x = box.x0; x <= box.x1; ++x) {
      const auto c = classify_pixel(g, x, y);
      if (min ? c.is_min : c.in_shape) out.insert({y, x});
    }
  }
  return out;
}

const Rect kBox{-4, -4, 28, 28};

}  // namespace

TEST(PolygonShape, AxisAlignedSquare) {
  const Geometry g = oracle::rect_poly(10, 10, 20, 20);
  EXPECT_EQ(shape(g), Shape::from_rect(9, 9, 20, 20));
  EXPECT_EQ(minshape(g), Shape::from_rect(11, 11, 18, 18));
  EXPECT_EQ(maxshape(g), subtract(Shape::from_rect(9, 9, 20, 20), Shape::from_rect(11, 11, 18, 18)));
}

TEST(PolygonShape, EdgeListCrossingRule) {
  // A vertex exactly on the band's top line belongs to one edge only.
  const Polygon diamond{{{10, 4}, {14, 9.5}, {10, 15}, {6, 9.5}}};
  const EdgeList e = edge_list(diamond, 9, 2.0);  // top line y = 8.5, bottom 10.5
  EXPECT_EQ(e.t.size(), 2u);
  EXPECT_EQ(e.b.size(), 2u);
  EXPECT_EQ(e.e.size(), 4u);
  const EdgeList at_vertex = edge_list(diamond, 10, 2.0);  // top line y = 9.5
  EXPECT_EQ(at_vertex.t.size(), 2u);
}

TEST(PolygonShape, SpansMatchPerPixelClassification) {
  std::mt19937 rng(31);
  for (int i = 0; i < 150; ++i) {
    const Geometry g = random_polygon(rng, 3 + i % 5);
    const ShapePair sp = compute_shapes(g);
    ASSERT_EQ(oracle::pixels(sp.shape), classified(g, kBox, false)) << i;
    ASSERT_EQ(oracle::pixels(sp.min), classified(g, kBox, true)) << i;
  }
}

TEST(PolygonShape, BoundsSampledGeometry) {
  std::mt19937 rng(32);
  for (int i = 0; i < 60; ++i) {
    const Polygon p = random_polygon(rng, 3 + i % 4);
    const ShapePair sp = compute_shapes(p);
    const auto [any, all] =
        sampled([&](Point q) { return oracle::point_in_polygon(p.vertices, q); }, kBox);
    // Every pixel the geometry visibly touches is in the shape; every
    // minshape pixel is fully covered.
    const auto got = oracle::pixels(sp.shape);
    ASSERT_TRUE(std::includes(got.begin(), got.end(), any.begin(), any.end()));
    const auto mins = oracle::pixels(sp.min);
    ASSERT_TRUE(std::includes(all.begin(), all.end(), mins.begin(), mins.end()));
  }
}

TEST(PolygonShape, DegenerateIsEmpty) {
  EXPECT_TRUE(shape(Polygon{{{0, 0}, {5, 5}, {10, 10}}}).empty());
  EXPECT_TRUE(shape(Polygon{{{0, 0}, {5, 5}}}).empty());
  EXPECT_EQ(pixel_coverage(Polygon{{{0, 0}, {5, 5}, {10, 10}}}, 2, 2, T()), 0.0);
}

TEST(BrushShape, WithinOnePixelOfSweptDisc) {
  std::mt19937 rng(33);
  std::uniform_real_distribution<double> u(2, 22), rad(0.3, 5);
  for (int i = 0; i < 40; ++i) {
    BrushStroke b;
    b.radius = rad(rng);
    for (int k = 0; k < 1 + i % 4; ++k) b.path.push_back({u(rng), u(rng)});
    auto in = [&](Point q) {
      double d = 1e300;
      for (std::size_t k = 0; k < b.path.size(); ++k) {
        const Point c = b.path[k], n = b.path[std::min(k + 1, b.path.size() - 1)];
        d = std::min(d, oracle::segment_distance(q, c, n));
      }
      return d <= b.radius;
    };
    const auto [any, all] = sampled(in, kBox);
    const Shape s = shape(b);
    const auto got = oracle::pixels(s);
    ShapeBuilder sb;
    for (auto [y, x] : any) sb.add_pixel(x, y);
    const Shape touched = sb.build();
    // The shape tests distance to the pixel centre, so a disc grazing only a
    // footprint corner may be left out; both directions hold within a pixel.
    ASSERT_TRUE(subtract(s, dilate_rect(touched, 1, 1)).empty()) << i;
    ASSERT_TRUE(subtract(touched, dilate_rect(s, 1, 1)).empty()) << i;
    const auto mins = oracle::pixels(minshape(b));
    ASSERT_TRUE(std::includes(all.begin(), all.end(), mins.begin(), mins.end())) << i;
    ASSERT_EQ(got, classified(b, kBox, false)) << i;
    ASSERT_EQ(mins, classified(b, kBox, true)) << i;
  }
}

TEST(BrushShape, RejectsBadRadius) {
  EXPECT_THROW(shape(BrushStroke{{{0, 0}}, 0.0}), std::invalid_argument);
  EXPECT_THROW(shape(BrushStroke{{{0, 0}}, -1.0}), std::invalid_argument);
}

TEST(Combine, ShapeRules) {
  std::mt19937 rng(34);
  for (int i = 0; i < 30; ++i) {
    const Geometry a = random_polygon(rng, 4), b = BrushStroke{{{6, 6}, {18, 14}}, 3};
    const ShapePair pa = compute_shapes(a), pb = compute_shapes(b);
    const ShapePair u = compute_shapes(combine(CombineOp::Union, a, b));
    const ShapePair n = compute_shapes(combine(CombineOp::Intersection, a, b));
    const ShapePair d = compute_shapes(combine(CombineOp::Difference, a, b));
    EXPECT_EQ(u.shape, unite(pa.shape, pb.shape));
    EXPECT_EQ(u.min, unite(pa.min, pb.min));
    EXPECT_EQ(n.shape, intersect(pa.shape, pb.shape));
    EXPECT_EQ(n.min, intersect(pa.min, pb.min));
    EXPECT_EQ(d.shape, pa.shape);
    EXPECT_EQ(d.min, subtract(pa.min, pb.shape));
    for (const auto& g : {combine(CombineOp::Union, a, b), combine(CombineOp::Difference, a, b)}) {
      const ShapePair sp = compute_shapes(g);
      EXPECT_EQ(oracle::pixels(sp.shape), classified(g, kBox, false));
      EXPECT_EQ(oracle::pixels(sp.min), classified(g, kBox, true));
    }
  }
}

TEST(Combine, InsideFollowsOperator) {
  const Geometry a = oracle::rect_poly(0, 0, 10, 10), b = oracle::rect_poly(5, 0, 15, 10);
  EXPECT_TRUE(inside(combine(CombineOp::Union, a, b), {12, 5}));
  EXPECT_FALSE(inside(combine(CombineOp::Intersection, a, b), {2, 5}));
  EXPECT_TRUE(inside(combine(CombineOp::Difference, a, b), {2, 5}));
  EXPECT_FALSE(inside(combine(CombineOp::Difference, a, b), {7, 5}));
}

TEST(Rasterize, ValuesFollowCoverage) {
  std::mt19937 rng(35);
  for (int i = 0; i < 20; ++i) {
    const Geometry g = random_polygon(rng, 5);
    const Fill fill = LinearGradient{{0, 0}, {24, 24}, {1, 0, 0, 1}, {0, 0, 0.5f, 0.5f}};
    const Shape R = Shape::from_rect(0, 0, 23, 23);
    RasterizeStats st;
    const ShapePair sp = compute_shapes(g);
    const Sprite s = rasterize(g, fill, R, T(), &st);
    EXPECT_EQ(shape_of(s), intersect(R, sp.shape));
    EXPECT_EQ(st.pixels, intersect(R, sp.shape).area());
    for_each_sprite_pixel(s, [&](std::int32_t x, std::int32_t y, const Color& c) {
      const Color f = fill_color(fill, {x + 0.5, y + 0.5});
      const auto k = static_cast<float>(pixel_coverage(g, x, y, T()));
      if (sp.min.contains(x, y)) {
        ASSERT_EQ(k, 1.0f);
      }
      ASSERT_LE(oracle::max_diff(c, scale(f, k)), 1e-6f);
    });
  }
}

TEST(Rasterize, SolidMinshapeBecomesRuns) {
  const Geometry g = oracle::rect_poly(10, 10, 20, 20);
  const Sprite s = rasterize(g, SolidFill{{0, 0, 1, 1}}, Shape::from_rect(0, 0, 30, 30), T());
  const SpriteScanline* row = s.row(15);
  ASSERT_NE(row, nullptr);
  bool run = false;
  for (const auto& sp : row->spans) run |= sp.is_run() && sp.start == 11 && sp.end == 18;
  EXPECT_TRUE(run);
}

TEST(Rasterize, PartialRegion) {
  const Geometry g = oracle::rect_poly(10.3, 10.3, 20.7, 20.7);
  const Shape R = Shape::from_rect(0, 0, 14, 30);
  const Sprite part = rasterize(g, SolidFill{{1, 1, 1, 1}}, R, T());
  const Sprite whole = rasterize(g, SolidFill{{1, 1, 1, 1}}, Shape::from_rect(0, 0, 30, 30), T());
  EXPECT_EQ(part, restrict(whole, R));
}

TEST(Subpixel, MatrixMeanTracksCoverage) {
  // Point-sampled matrices converge on the filtered coverage as the
  // granularity grows.
  auto worst_at = [&](int n) {
    const AntialiasTables& t = default_tables(n);
    double worst = 0;
    std::mt19937 local(36);
    for (int i = 0; i < 30; ++i) {
      const Geometry g = random_polygon(local, 3, 0, 12);
      const Shape R = maxshape(g);
      const auto ms = rasterize_subpixel(g, SolidFill{{1, 1, 1, 1}}, R, t);
      for (const auto& m : ms) {
        worst = std::max(worst, std::abs(resolve_subpixel(m.cells, t).a -
                                         pixel_coverage(g, m.x, m.y, t)));
      }
    }
    return worst;
  };
  EXPECT_LE(worst_at(64), 0.02);
  EXPECT_LE(worst_at(16), 0.07);
}

TEST(Subpixel, CellsAreFillOrTransparent) {
  const Geometry g = oracle::rect_poly(3.25, 3.25, 8.5, 9);
  const Color c{0.5f, 0, 0, 0.5f};
  const auto ms = rasterize_subpixel(g, SolidFill{c}, Shape::from_rect(2, 2, 3, 3), T());
  ASSERT_EQ(ms.size(), 4u);
  for (const auto& m : ms) {
    ASSERT_EQ(m.cells.size(), 256u);
    for (const auto& cell : m.cells) EXPECT_TRUE(cell == c || cell == Color::transparent());
  }
}

TEST(Transform, BrushRadiusAndGradient) {
  const Affine m{2, 0, 1, 0, 2, -3};
  const Geometry b = transform(Geometry(BrushStroke{{{0, 0}, {4, 0}}, 1.5}), m);
  EXPECT_DOUBLE_EQ(std::get<BrushStroke>(b.v).radius, 3.0);

  const Fill f = LinearGradient{{0, 0}, {10, 5}, {1, 0, 0, 1}, {0, 0, 1, 1}};
  const Affine r = Affine::rotation(30, {4, 4}).compose(Affine{1.5, 0.25, 0, 0, 1, 2});
  const Fill g = transform(f, r);
  std::mt19937 rng(37);
  std::uniform_real_distribution<double> u(-5, 15);
  for (int i = 0; i < 100; ++i) {
    const Point p{u(rng), u(rng)};
    EXPECT_LE(oracle::max_diff(fill_color(g, r.apply(p)), fill_color(f, p)), 1e-5f);
  }
}

TEST(Fill, GradientClampsBeyondEndpoints) {
  const Fill f = LinearGradient{{0, 0}, {10, 0}, {1, 0, 0, 1}, {0, 0, 1, 1}};
  EXPECT_EQ(fill_color(f, {-5, 3}), (Color{1, 0, 0, 1}));
  EXPECT_EQ(fill_color(f, {50, 3}), (Color{0, 0, 1, 1}));
  EXPECT_LE(oracle::max_diff(fill_color(f, {5, 0}), Color{0.5f, 0, 0.5f, 1}), 1e-6f);
}
