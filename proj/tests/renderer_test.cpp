#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"

using namespace strata;

namespace {

Scene demo(const std::string& name) {
  return parse_scene(oracle::read_file(std::string(STRATA_DEMO_DIR) + "/" + name));
}

// Returns whatever scene it is given as the full root, so it renders itself
// forever.
class SelfReadingFilter final : public FilterKind {
 public:
  std::string name() const override { return "self"; }
  SceneFnResult scene_fn(const Scene&, const Shape& r, const FilterEnv& env) const override {
    return {*env.root, r, r};
  }
  Sprite filter_fn(const Sprite& s, const Shape&) const override { return s; }
  Shape update_fn(const Shape&, const Shape&) const override { return {}; }
  bool equals(const FilterKind& o) const override { return &o == this; }
};

// Claims to render more than it was asked for.
class GreedyFilter final : public FilterKind {
 public:
  std::string name() const override { return "greedy"; }
  SceneFnResult scene_fn(const Scene& below, const Shape& r, const FilterEnv&) const override {
    return {below, r, dilate_rect(r, 1, 1)};
  }
  Sprite filter_fn(const Sprite& s, const Shape&) const override { return s; }
  Shape update_fn(const Shape&, const Shape&) const override { return {}; }
  bool equals(const FilterKind& o) const override { return &o == this; }
};

Scene square_over_polygons(int behind) {
  Scene s;
  s.canvas = {0, 0, 31, 31};
  s.background = Color{1, 1, 1, 1};
  s.objects.push_back(oracle::plain("front", oracle::rect_poly(-2, -2, 34, 34), {0, 0, 0, 1}));
  for (int i = 0; i < behind; ++i) {
    s.objects.push_back(oracle::plain("p" + std::to_string(i),
                                      oracle::rect_poly(3 + i, 2, 20 + i, 25.5),
                                      oracle::premul(0.2f * i, 0.5f, 0.1f, 0.5f)));
  }
  return s;
}

}  // namespace

TEST(Render, BackgroundOnly) {
  Scene s;
  s.canvas = {0, 0, 15, 15};
  s.background = Color{1, 1, 1, 1};
  RenderStats st;
  const Raster r = render_region(s, {2, 3, 9, 7}, {}, &st);
  for (const Color& c : r.pixels()) EXPECT_EQ(c, (Color{1, 1, 1, 1}));
  EXPECT_EQ(st.background_pixels, 8 * 5);
  EXPECT_EQ(st.compose_ops, 1);
}

TEST(Render, EmptySceneWithoutBackgroundIsEmpty) {
  Scene s;
  s.canvas = {0, 0, 15, 15};
  EXPECT_TRUE(render(s, Shape::from_rect(0, 0, 15, 15)).empty());
}

TEST(Render, MatchesPainterOnRandomScenes) {
  std::mt19937 rng(314159);
  const auto& t = default_tables(16);
  float worst = 0;
  for (int i = 0; i < 200; ++i) {
    const Scene s = oracle::random_polygon_scene(rng);
    const Raster got = render_region(s, s.canvas);
    const Raster want = oracle::painter(s, t);
    worst = std::max(worst, max_channel_diff(got, want));
  }
  EXPECT_LE(worst, 1.0f / 256);
}

TEST(Render, ResultShapeIsTheUpdateShapeWithBackground) {
  std::mt19937 rng(2);
  for (int i = 0; i < 20; ++i) {
    Scene s = oracle::random_polygon_scene(rng, 32, 5);
    const Shape u = oracle::random_shape(rng);
    EXPECT_EQ(shape_of(render(s, u)), u);
    s.background.reset();
    const Shape got = shape_of(render(s, u));
    EXPECT_TRUE(subtract(got, u).empty());
  }
}

TEST(Render, OpaqueFrontSkipsEverythingBehind) {
  const Scene s = square_over_polygons(5);
  RenderStats st;
  const Raster r = render_region(s, s.canvas, {}, &st);
  for (const Color& c : r.pixels()) EXPECT_EQ(c, (Color{0, 0, 0, 1}));
  for (int i = 0; i < 5; ++i) EXPECT_EQ(st.pixels("p" + std::to_string(i)), 0);
  // The update shape is empty after the first object: nothing else is looked at.
  EXPECT_EQ(st.objects_visited, 1);
  EXPECT_EQ(st.shape_calls, 1);
  EXPECT_EQ(st.compose_ops, 1);
  EXPECT_EQ(st.background_pixels, 0);
}

TEST(Render, OccludedDemoRegion) {
  const Scene s = demo("occluded.scene");
  ASSERT_EQ(s.objects.front().id, "cover");
  RenderStats st;
  render_region(s, {8, 8, 55, 55}, {}, &st);
  int hidden = 0;
  for (const auto& o : s.objects) {
    if (o.id == "cover") continue;
    ++hidden;
    EXPECT_EQ(st.pixels(o.id), 0) << o.id;
  }
  EXPECT_EQ(hidden, 20);
  EXPECT_GT(st.pixels("cover"), 0);
}

TEST(Render, RasterizedPixelsBoundedByShapeAndUpdate) {
  std::mt19937 rng(3);
  for (int i = 0; i < 30; ++i) {
    const Scene s = oracle::random_polygon_scene(rng, 48, 8);
    const Shape u = Shape::from_rect(5, 7, 40, 30);
    RenderStats st;
    render(s, u, {}, &st);
    for (const auto& o : s.objects) {
      const Shape bound = intersect(shape(o.geometry()), u);
      EXPECT_LE(st.pixels(o.id), bound.area()) << o.id;
    }
  }
}

TEST(Render, HalvesStitchToWhole) {
  std::mt19937 rng(4);
  for (int i = 0; i < 10; ++i) {
    const Scene s = oracle::random_polygon_scene(rng);
    const Raster whole = render_region(s, s.canvas);
    const Raster top = render_region(s, {0, 0, 63, 30});
    const Raster bottom = render_region(s, {0, 31, 63, 63});
    for (std::int32_t y = 0; y < 64; ++y) {
      for (std::int32_t x = 0; x < 64; ++x) {
        const Color& part = y <= 30 ? top.at(x, y) : bottom.at(x, y);
        ASSERT_EQ(part, whole.at(x, y));
      }
    }
  }
}

TEST(Render, RepeatedRenderIsByteIdentical) {
  const Scene s = demo("demo.scene");
  const auto a = encode_png(render_region(s, s.canvas));
  const auto b = encode_png(render_region(s, s.canvas));
  EXPECT_EQ(a, b);
}

TEST(Render, CacheChangesNoPixel) {
  const Scene s = demo("demo.scene");
  const Raster plain = render_region(s, s.canvas);
  RenderCache cache;
  RenderOptions opt;
  opt.cache = &cache;
  RenderStats first, second;
  const Raster a = render_region(s, s.canvas, opt, &first);
  const Raster b = render_region(s, s.canvas, opt, &second);
  EXPECT_EQ(a.pixels(), plain.pixels());
  EXPECT_EQ(b.pixels(), plain.pixels());
  EXPECT_GT(second.cache_hits, first.cache_hits);
  EXPECT_LT(second.total_rasterized(), first.total_rasterized());
}

TEST(Subpixel, StackedIdenticalPolygonsLookLikeOne) {
  const Scene s = demo("stacked.scene");
  ASSERT_EQ(s.objects.size(), 2u);
  Scene top = s;
  top.objects.pop_back();
  RenderOptions sub;
  sub.mode = RenderMode::Subpixel;
  const Raster stacked = render_region(s, s.canvas, sub);
  const Raster alone = render_region(top, s.canvas, sub);
  EXPECT_LE(max_channel_diff(stacked, alone), 1.0f / 256);
}

TEST(Subpixel, NormalModeDiffersExactlyOnEdgePixels) {
  const Scene s = demo("stacked.scene");
  Scene top = s;
  top.objects.pop_back();
  const Raster normal = render_region(s, s.canvas);
  const Raster alone = render_region(top, s.canvas);
  const ShapePair sp = compute_shapes(s.objects[0].geometry());
  const Shape maxshape = subtract(sp.shape, sp.min);
  int differing = 0;
  for (std::int32_t y = 0; y < 48; ++y) {
    for (std::int32_t x = 0; x < 48; ++x) {
      const float d = oracle::max_diff(normal.at(x, y), alone.at(x, y));
      if (d > 1.0f / 256) {
        ++differing;
        EXPECT_TRUE(maxshape.contains(x, y)) << x << "," << y;
      }
    }
  }
  EXPECT_GT(differing, 0);
}

TEST(Subpixel, MinshapePixelsStayUniform) {
  const Scene s = demo("stacked.scene");
  RenderOptions sub;
  sub.mode = RenderMode::Subpixel;
  RenderStats st;
  render_region(s, s.canvas, sub, &st);
  const ShapePair sp = compute_shapes(s.objects[0].geometry());
  // Only the front polygon's edge pixels (and nothing it finished) go through
  // matrices; the one behind only sees the edge pixels left open.
  EXPECT_LE(st.subpixel_pixels, 2 * subtract(sp.shape, sp.min).area());
  EXPECT_GT(st.subpixel_pixels, 0);
}

TEST(Subpixel, OpaqueSceneAgreesWithNormalModeInside) {
  std::mt19937 rng(5);
  RenderOptions sub;
  sub.mode = RenderMode::Subpixel;
  for (int i = 0; i < 10; ++i) {
    const Scene s = oracle::random_polygon_scene(rng, 32, 6);
    const Raster a = render_region(s, s.canvas);
    const Raster b = render_region(s, s.canvas, sub);
    Shape edges;
    for (const auto& o : s.objects) {
      const ShapePair sp = compute_shapes(o.geometry());
      edges = unite(edges, subtract(sp.shape, sp.min));
    }
    for (std::int32_t y = 0; y < 32; ++y) {
      for (std::int32_t x = 0; x < 32; ++x) {
        if (edges.contains(x, y)) continue;
        ASSERT_LE(oracle::max_diff(a.at(x, y), b.at(x, y)), 1e-6f);
      }
    }
  }
}

TEST(Render, RecursionLimit) {
  Scene s;
  s.canvas = {0, 0, 7, 7};
  s.background = Color{1, 1, 1, 1};
  auto kind = std::make_shared<const SelfReadingFilter>();
  s.objects.push_back(oracle::filter("loop", FilterObject{oracle::rect_poly(0, 0, 8, 8), 1.0f, kind}));
  RenderOptions opt;
  opt.max_depth = 4;
  EXPECT_THROW(render_region(s, s.canvas, opt), RecursionLimitError);
}

TEST(Render, FilterRenderingOutsideRequestIsReported) {
  Scene s;
  s.canvas = {0, 0, 7, 7};
  s.background = Color{1, 1, 1, 1};
  auto kind = std::make_shared<const GreedyFilter>();
  s.objects.push_back(oracle::filter("greedy", FilterObject{oracle::rect_poly(2, 2, 6, 6), 1.0f, kind}));
  EXPECT_THROW(render_region(s, s.canvas), FilterContractError);
}
