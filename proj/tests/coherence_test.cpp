#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "support/oracles.hpp"

using namespace strata;

namespace {

constexpr float kTol = 1.0f / 256;

Scene demo(const std::string& name) {
  return parse_scene(oracle::read_file(std::string(STRATA_DEMO_DIR) + "/" + name));
}

Polygon oval(Point c, double rx, double ry, int n = 32) {
  Polygon p;
  for (int i = 0; i < n; ++i) {
    const double t = 2 * M_PI * i / n;
    p.vertices.push_back({c.x + rx * std::cos(t), c.y + ry * std::sin(t)});
  }
  return p;
}

Scene oval_scene(Fill fill) {
  Scene s;
  s.canvas = {0, 0, 63, 63};
  s.background = Color{1, 1, 1, 1};
  SceneObject o = oracle::plain("oval", oval({32, 32}, 20, 11), {});
  std::get<PlainObject>(o.body).fill = std::move(fill);
  s.objects.push_back(std::move(o));
  return s;
}

Shape frame_diff(const Raster& a, const Raster& b) {
  ShapeBuilder sb;
  for (std::int32_t y = a.y0(); y < a.y0() + a.height(); ++y) {
    for (std::int32_t x = a.x0(); x < a.x0() + a.width(); ++x) {
      if (!(a.at(x, y) == b.at(x, y))) sb.add_pixel(x, y);
    }
  }
  return sb.build();
}

struct Replay {
  std::map<std::string, Raster> snapshots;
  std::map<std::string, float> errors;  // frame vs fresh render at each snapshot
  std::vector<Patch> patches;
  std::vector<ScriptCommand> commands;
};

Replay replay(const Scene& scene, const std::string& script, EditorConfig cfg = {}) {
  Editor ed(scene, cfg);
  ed.render_all();
  Replay r;
  for (const auto& cmd : parse_script(script, &scene).commands) {
    r.patches.push_back(apply_command(ed, cmd));
    r.commands.push_back(cmd);
    if (cmd.kind == CommandKind::Snapshot) {
      r.snapshots.emplace(cmd.name, ed.frame());
      r.errors[cmd.name] = max_channel_diff(ed.frame(), ed.render_fresh());
    }
  }
  return r;
}

const std::string& coherence_script() {
  static const std::string s = oracle::read_file(std::string(STRATA_DEMO_DIR) + "/coherence.script");
  return s;
}

}  // namespace

// ---- cache ---------------------------------------------------------------

TEST(Cache, GetAfterPutHits) {
  RenderCache c;
  const CacheKey k{"a", 1, CacheKind::Shape};
  EXPECT_FALSE(c.get_shape(k));
  c.put_shape(k, Shape::from_rect(0, 0, 3, 3), 16);
  ASSERT_TRUE(c.get_shape(k));
  EXPECT_EQ(*c.get_shape(k), Shape::from_rect(0, 0, 3, 3));
  EXPECT_EQ(c.stats().hits, 2);
  EXPECT_EQ(c.stats().misses, 1);
  // A shape key does not answer a sprite lookup.
  EXPECT_FALSE(c.get_sprite(k));
}

TEST(Cache, EvictsLowestScoreAndStaysInBudget) {
  const std::size_t one = Shape::from_rect(0, 0, 9, 0).byte_size();
  RenderCache c(one * 3 + 3 * 256);
  for (int i = 0; i < 3; ++i) {
    c.put_shape({"o" + std::to_string(i), 1, CacheKind::Shape}, Shape::from_rect(0, i, 9, i), 10);
  }
  const std::size_t before = c.size();
  // Touch o0 and o2 so o1 is the stalest, then add one more.
  c.get_shape({"o0", 1, CacheKind::Shape});
  c.get_shape({"o2", 1, CacheKind::Shape});
  std::optional<CacheKey> lowest;
  double low = 1e300;
  for (const auto& k : c.keys()) {
    if (*c.score(k) < low) {
      low = *c.score(k);
      lowest = k;
    }
  }
  ASSERT_TRUE(lowest);
  EXPECT_EQ(lowest->id, "o1");
  c.put_shape({"o3", 1, CacheKind::Shape}, Shape::from_rect(0, 3, 9, 3), 10);
  EXPECT_LE(c.bytes(), c.budget());
  if (c.stats().evictions > 0) {
    EXPECT_FALSE(c.contains(*lowest));
    EXPECT_TRUE(c.contains({"o3", 1, CacheKind::Shape}));
  } else {
    EXPECT_EQ(c.size(), before + 1);
  }
}

TEST(Cache, BudgetHoldsUnderPressure) {
  std::mt19937 rng(12);
  RenderCache c(4096);
  for (int i = 0; i < 300; ++i) {
    const CacheKey k{"o" + std::to_string(i % 37), static_cast<Generation>(i % 5),
                     i % 2 ? CacheKind::Shape : CacheKind::MinShape};
    c.put_shape(k, oracle::random_shape(rng, 8, 4), i % 13);
    ASSERT_LE(c.bytes(), c.budget());
  }
  EXPECT_GT(c.stats().evictions, 0);
}

TEST(Cache, OversizedItemIsNotCached) {
  RenderCache c(64);
  const CacheKey k{"big", 1, CacheKind::Shape};
  c.put_shape(k, Shape::from_rect(0, 0, 99, 99), 1);
  EXPECT_FALSE(c.contains(k));
  EXPECT_EQ(c.stats().rejected, 1);
  EXPECT_EQ(c.bytes(), 0u);
}

TEST(Cache, ShapesOutscoreSprites) {
  RenderCache c;
  const Shape s = Shape::from_rect(0, 0, 3, 0);
  SpriteBuilder b;
  b.push_run(0, 0, 3, {1, 1, 1, 1});
  c.put_sprite({"a", 1, CacheKind::Sprite}, SpriteEntry{b.build(), s}, 4);
  c.put_shape({"a", 1, CacheKind::Shape}, s, 4);
  // Same cost; the sprite is older and larger, so strictly lower either way.
  EXPECT_LT(*c.score({"a", 1, CacheKind::Sprite}), *c.score({"a", 1, CacheKind::Shape}));
  // Kind alone: equal recency comparison with the shape made older.
  RenderCache d(kDefaultCacheBudget, {0, 0, 0, 2});
  d.put_shape({"a", 1, CacheKind::Shape}, s, 4);
  d.put_sprite({"a", 1, CacheKind::Sprite}, SpriteEntry{b.build(), s}, 4);
  EXPECT_LT(*d.score({"a", 1, CacheKind::Sprite}), *d.score({"a", 1, CacheKind::Shape}));
}

TEST(Cache, GenerationsCoexistUnlessSingle) {
  RenderCache main;
  RenderCache one = RenderCache::single_generation();
  for (Generation g = 1; g <= 3; ++g) {
    main.put_shape({"a", g, CacheKind::Shape}, Shape::from_rect(0, 0, 1, 1), 1);
    one.put_shape({"a", g, CacheKind::Shape}, Shape::from_rect(0, 0, 1, 1), 1);
  }
  EXPECT_EQ(main.size(), 3u);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.keys()[0].generation, 3u);
}

// ---- update shapes -------------------------------------------------------

TEST(UpdateShape, UnchangedSolidObjectLeavesOnlyEdges) {
  const Scene s = oval_scene(SolidFill{{0, 0, 1, 1}});
  const SceneObject& o = s.objects[0];
  const Shape roi = Shape::from_rect(s.canvas);
  const ShapePair sp = compute_shapes(o.geometry());
  EXPECT_EQ(update_shape_for_edit(EditOp::rotate(0, {32, 32}), &o, &o, roi),
            subtract(sp.shape, sp.min));
  // With a vanishing footprint, shape and minshape of an axis-aligned
  // pixel-aligned rectangle coincide and nothing needs redrawing.
  const SceneObject r = oracle::plain("r", oracle::rect_poly(4, 4, 12, 12), {1, 0, 0, 1});
  EXPECT_TRUE(update_shape_for_edit(EditOp::translate(0, 0), &r, &r, roi, nullptr, 1e-9).empty());
}

TEST(UpdateShape, RotatedSolidOvalIsARing) {
  const Scene s = oval_scene(SolidFill{{0, 0, 1, 1}});
  const SceneObject& a = s.objects[0];
  const EditOp op = EditOp::rotate(30, {32, 32});
  const SceneObject b = transformed(a, op_matrix(op));
  const Shape u = update_shape_for_edit(op, &a, &b, Shape::from_rect(s.canvas));
  const Shape both = unite(shape(a.geometry()), shape(b.geometry()));
  EXPECT_LT(u.area(), both.area());
  EXPECT_FALSE(u.contains(32, 32));
  EXPECT_TRUE(subtract(u, both).empty());
}

TEST(UpdateShape, RotatedGradientTakesBothShapes) {
  const Scene s = oval_scene(LinearGradient{{12, 32}, {52, 32}, {1, 0, 0, 1}, {0, 0, 1, 1}});
  const SceneObject& a = s.objects[0];
  const EditOp op = EditOp::rotate(30, {32, 32});
  const SceneObject b = transformed(a, op_matrix(op));
  const Shape u = update_shape_for_edit(op, &a, &b, Shape::from_rect(s.canvas));
  EXPECT_EQ(u, unite(shape(a.geometry()), shape(b.geometry())));
}

TEST(UpdateShape, DeleteAndAddUseOneShapeClipped) {
  const SceneObject o = oracle::plain("o", oracle::rect_poly(50, 50, 80, 80), {1, 0, 0, 1});
  const Shape roi = Shape::from_rect(0, 0, 63, 63);
  const Shape want = intersect(shape(o.geometry()), roi);
  EXPECT_EQ(update_shape_for_edit({EditKind::Delete, "o", 0, 0, 0, {}}, &o, nullptr, roi), want);
  EXPECT_EQ(update_shape_for_edit({EditKind::Add, "o", 0, 0, 0, {}}, nullptr, &o, roi), want);
}

TEST(UpdateShape, CoversEveryChangedPixel) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> off(-5, 5), ang(-40, 40);
  for (int i = 0; i < 60; ++i) {
    const Scene before = oracle::random_polygon_scene(rng, 48, 6);
    if (before.objects.empty()) continue;
    const std::size_t k = rng() % before.objects.size();
    const EditOp op = i % 2 ? EditOp::translate(off(rng), off(rng))
                            : EditOp::rotate(ang(rng), {24 + off(rng), 24 + off(rng)});
    Scene after = before;
    after.objects[k] = transformed(before.objects[k], op_matrix(op));
    const Shape u = update_shape_for_edit(op, &before.objects[k], &after.objects[k],
                                          Shape::from_rect(before.canvas));
    const Raster r0 = render_region(before, before.canvas);
    const Raster r1 = render_region(after, after.canvas);
    ASSERT_TRUE(subtract(frame_diff(r0, r1), u).empty()) << i;
    Raster patched = r0;
    patch(render(after, u), u, patched, Color::transparent());
    ASSERT_LE(max_channel_diff(patched, r1), kTol) << i;
  }
}

// ---- translation shortcut ------------------------------------------------

TEST(Fastpath, TranslateThereAndBackIsIdentical) {
  const SceneObject o = oracle::plain("sq", oval({20, 20}, 7.3, 5.1), {0.5f, 0, 0, 0.5f});
  RenderCache a, b, c;
  const ShapePair sp = object_shapes(o, &a);
  const Shape r = sp.shape;
  const Sprite s0 = rasterize(o.plain()->geometry, o.plain()->fill, r, sp, default_tables(16));
  a.put_sprite({o.id, o.generation, CacheKind::Sprite}, SpriteEntry{s0, r}, 1);
  SceneObject moved = transformed(o, Affine::translation(5, 3));
  moved.generation = 2;
  ASSERT_TRUE(translate_fastpath(a, b, o, moved, 5, 3));
  SceneObject back = transformed(moved, Affine::translation(-5, -3));
  back.generation = 3;
  ASSERT_TRUE(translate_fastpath(b, c, moved, back, -5, -3));
  EXPECT_EQ(c.get_sprite({"sq", 3, CacheKind::Sprite})->sprite, s0);
  EXPECT_EQ(*c.get_shape({"sq", 3, CacheKind::Shape}), sp.shape);
  // The translated entry is what rasterizing the moved object gives.
  const ShapePair msp = compute_shapes(moved.geometry());
  EXPECT_EQ(*b.get_shape({"sq", 2, CacheKind::Shape}), msp.shape);
  const Sprite direct = rasterize(moved.plain()->geometry, moved.plain()->fill, msp.shape, msp, default_tables(16));
  float worst = 0;
  for_each_sprite_pixel(direct, [&](std::int32_t x, std::int32_t y, const Color& c1) {
    worst = std::max(worst, oracle::max_diff(c1, *b.get_sprite({"sq", 2, CacheKind::Sprite})->sprite.pixel(x, y)));
  });
  EXPECT_LE(worst, 1e-6f);
}

TEST(Fastpath, MissingEntriesFallBack) {
  const SceneObject o = oracle::plain("sq", oracle::rect_poly(1, 1, 5, 5), {1, 0, 0, 1});
  RenderCache a, b;
  EXPECT_FALSE(translate_fastpath(a, b, o, transformed(o, Affine::translation(1, 0)), 1, 0));
  EXPECT_EQ(b.size(), 0u);
  const SceneObject f = oracle::filter("f", builtin_blur(3, 3, oracle::rect_poly(1, 1, 5, 5)));
  EXPECT_FALSE(fastpath_eligible(f, EditOp::translate(1, 0)));
  EXPECT_FALSE(fastpath_eligible(o, EditOp::translate(0.5, 0)));
}

TEST(Fastpath, IntegerPreviewRasterizesNothing) {
  Editor ed(demo("demo.scene"));
  ed.render_all();
  ed.begin({"chip"});
  const Patch p = ed.preview(EditOp::translate(-7, 2));
  EXPECT_EQ(p.stats.pixels("chip"), 0);
  EXPECT_LE(max_channel_diff(ed.frame(), ed.render_fresh()), kTol);
}

TEST(Fastpath, FramesMatchRenderingWithoutIt) {
  EditorConfig off;
  off.fastpath = false;
  const Scene s = demo("demo.scene");
  const Replay with = replay(s, coherence_script());
  const Replay without = replay(s, coherence_script(), off);
  for (const auto& [name, frame] : with.snapshots) {
    EXPECT_EQ(frame.pixels(), without.snapshots.at(name).pixels()) << name;
  }
}

// ---- sessions ------------------------------------------------------------

TEST(Session, ImmediateAbandonRestoresFrame) {
  Editor ed(demo("demo.scene"));
  ed.render_all();
  const Raster before = ed.frame();
  ed.begin({"sun"});
  ed.abandon();
  EXPECT_EQ(ed.frame().pixels(), before.pixels());
}

TEST(Session, PreviewThenAbandonRestoresFrameAndCache) {
  Editor ed(demo("demo.scene"));
  ed.render_all();
  const Raster before = ed.frame();
  const auto keys = ed.cache().keys();
  ed.begin({"house", "sun"});
  for (int i = 1; i <= 5; ++i) ed.preview(EditOp::rotate(7.0 * i, {64, 48}));
  EXPECT_FALSE(ed.frame().pixels() == before.pixels());
  ed.abandon();
  EXPECT_LE(max_channel_diff(ed.frame(), before), kTol);
  EXPECT_EQ(ed.cache().keys(), keys);
  EXPECT_FALSE(ed.can_undo());
}

TEST(Session, CommitPromotesOnlyTheFinalGeneration) {
  Editor ed(demo("demo.scene"));
  ed.render_all();
  const auto keys = ed.cache().keys();
  ed.begin({"house"});
  Patch last;
  for (int i = 1; i <= 10; ++i) last = ed.preview(EditOp::translate(0.75 * i, -0.5 * i));
  ed.commit();
  const SceneObject& h = ed.scene().objects[*ed.scene().find("house")];
  std::vector<CacheKey> gained;
  for (const auto& k : ed.cache().keys()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) gained.push_back(k);
  }
  ASSERT_FALSE(gained.empty());
  for (const auto& k : gained) {
    EXPECT_EQ(k.id, "house");
    EXPECT_EQ(k.generation, h.generation);
  }
  // Redrawing what the last preview drew needs nothing new from the house.
  const Patch p = ed.refresh(last.update);
  EXPECT_GT(p.update.area(), 0);
  EXPECT_EQ(p.stats.pixels("house"), 0);
  EXPECT_LE(max_channel_diff(ed.frame(), ed.render_fresh()), kTol);
}

TEST(Session, CommittedIntegerMoveNeedsNoRasterizing) {
  Editor ed(demo("demo.scene"));
  ed.render_all();
  ed.begin({"chip"});
  for (int i = 1; i <= 10; ++i) ed.preview(EditOp::translate(-i, -i / 2));
  ed.commit();
  const Patch p = ed.refresh(ed.roi());
  EXPECT_EQ(p.stats.pixels("chip"), 0);
  EXPECT_EQ(ed.frame().pixels(), ed.render_fresh().pixels());
}

TEST(Session, PreviewsAreRelativeToTheSessionStart) {
  Editor a(demo("demo.scene")), b(demo("demo.scene"));
  a.render_all();
  b.render_all();
  a.begin({"roof"});
  a.preview(EditOp::translate(3, 1));
  a.preview(EditOp::translate(-2, 4));
  a.commit();
  b.begin({"roof"});
  b.preview(EditOp::translate(-2, 4));
  b.commit();
  EXPECT_EQ(a.scene().objects, b.scene().objects);
  EXPECT_LE(max_channel_diff(a.frame(), b.frame()), kTol);
}

TEST(Session, ProtocolErrors) {
  Editor ed(demo("demo.scene"));
  EXPECT_THROW(ed.preview(EditOp::translate(1, 0)), ProtocolError);
  EXPECT_THROW(ed.commit(), ProtocolError);
  EXPECT_THROW(ed.abandon(), ProtocolError);
  EXPECT_THROW(ed.begin({}), ProtocolError);
  EXPECT_THROW(ed.begin({"nobody"}), std::invalid_argument);
  ed.begin({"sun"});
  EXPECT_THROW(ed.begin({"house"}), ProtocolError);
  EXPECT_THROW(ed.erase("house"), ProtocolError);
  EXPECT_THROW(ed.undo(), ProtocolError);
  ed.commit();
  // An empty preview sequence still commits cleanly; nothing changed.
  EXPECT_FALSE(ed.can_undo());
  EXPECT_THROW(ed.undo(), ProtocolError);
}

TEST(Editor, HoleTargetCannotBeDeleted) {
  Editor ed(demo("demo.scene"));
  EXPECT_THROW(ed.erase("house"), std::invalid_argument);
  EXPECT_THROW(ed.add(oracle::plain("sun", oracle::rect_poly(0, 0, 2, 2), {0, 0, 0, 1})),
               std::invalid_argument);
}

TEST(Editor, UndoRestoresFrameFromCache) {
  const Scene s = demo("demo.scene");
  Editor ed(s);
  ed.render_all();
  const Raster start = ed.frame();
  ed.begin({"roof"});
  ed.preview(EditOp::rotate(20, {40, 40}));
  ed.commit();
  const Patch u = ed.undo();
  EXPECT_LE(max_channel_diff(ed.frame(), start), kTol);
  EXPECT_EQ(ed.scene(), s);
  // The old generation is still cached: the roof is not rasterized again.
  EXPECT_EQ(u.stats.pixels("roof"), 0);

  EditorConfig off;
  off.use_cache = false;
  Editor cold(s, off);
  cold.render_all();
  cold.begin({"roof"});
  cold.preview(EditOp::rotate(20, {40, 40}));
  cold.commit();
  const Patch v = cold.undo();
  EXPECT_GT(v.stats.total_rasterized(), u.stats.total_rasterized());
  EXPECT_EQ(cold.frame().pixels(), ed.frame().pixels());
}

// ---- the scripted suite --------------------------------------------------

TEST(Script, EverySnapshotMatchesAFreshRender) {
  const Replay r = replay(demo("demo.scene"), coherence_script());
  EXPECT_GE(r.snapshots.size(), 12u);
  for (const auto& [name, err] : r.errors) EXPECT_LE(err, kTol) << name;
}

TEST(Script, CacheChangesNoPixel) {
  EditorConfig off;
  off.use_cache = false;
  const Scene s = demo("demo.scene");
  const Replay with = replay(s, coherence_script());
  const Replay without = replay(s, coherence_script(), off);
  for (const auto& [name, frame] : with.snapshots) {
    EXPECT_EQ(frame.pixels(), without.snapshots.at(name).pixels()) << name;
  }
  std::int64_t a = 0, b = 0;
  for (const auto& p : with.patches) a += p.stats.total_rasterized();
  for (const auto& p : without.patches) b += p.stats.total_rasterized();
  EXPECT_LT(a, b);
}

TEST(Script, IntegerTranslatesRasterizeNothingOfTheTarget) {
  // chip and badge are plain objects outside every filter; the other integer
  // moves target filters or objects seen through the affine lens, whose
  // transformed copies are rasterized afresh.
  const Replay r = replay(demo("demo.scene"), coherence_script());
  std::vector<ObjectId> targets;
  std::set<ObjectId> checked;
  for (std::size_t i = 0; i < r.commands.size(); ++i) {
    const auto& c = r.commands[i];
    if (c.kind == CommandKind::Select) targets = c.ids;
    if (c.kind != CommandKind::Translate || targets.size() != 1) continue;
    if (targets[0] != "chip" && targets[0] != "badge") continue;
    ASSERT_EQ(c.a, std::round(c.a));
    ASSERT_EQ(c.b, std::round(c.b));
    EXPECT_EQ(r.patches[i].stats.pixels(targets[0]), 0) << targets[0] << " line " << c.line;
    checked.insert(targets[0]);
  }
  EXPECT_EQ(checked.size(), 2u);
}

TEST(Script, SolidRotationRedrawsLessThanBothShapes) {
  const Scene s = demo("demo.scene");
  const Replay r = replay(s, coherence_script());
  const SceneObject& sun = s.objects[*s.find("sun")];
  for (std::size_t i = 0; i < r.commands.size(); ++i) {
    const auto& c = r.commands[i];
    if (c.kind != CommandKind::Rotate) continue;
    const SceneObject moved = transformed(sun, Affine::rotation(c.a, {c.b, c.c}));
    const Shape both = unite(shape(sun.geometry()), shape(moved.geometry()));
    EXPECT_LT(r.patches[i].update.area(), both.area());
    return;
  }
  FAIL() << "no rotate in the script";
}

TEST(Script, RandomSessionsOnRandomScenes) {
  std::mt19937 rng(404);
  std::uniform_real_distribution<double> off(-6, 6), ang(-60, 60);
  for (int i = 0; i < 25; ++i) {
    Scene s = oracle::random_polygon_scene(rng, 48, 6);
    if (s.objects.size() < 2) continue;
    const Geometry fg = oracle::rect_poly(6, 6, 40, 30);
    const FilterObject filters[] = {builtin_blur(3, 5, fg), builtin_hole(fg, "p0"),
                                    builtin_affine(Affine::rotation(15, {24, 24}), fg),
                                    builtin_monochrome(fg, 0.5f)};
    s.objects.insert(s.objects.begin() + 1, oracle::filter("filter", filters[i % 4]));
    Editor ed(s);
    ed.render_all();
    const ObjectId target = s.objects[rng() % s.objects.size()].id;
    ed.begin({target});
    for (int k = 0; k < 3; ++k) {
      ed.preview(k % 2 ? EditOp::rotate(ang(rng), {24, 24}) : EditOp::translate(off(rng), off(rng)));
      ASSERT_LE(max_channel_diff(ed.frame(), ed.render_fresh()), kTol) << i << " " << target;
    }
    if (rng() % 2) {
      ed.commit();
    } else {
      ed.abandon();
    }
    ASSERT_LE(max_channel_diff(ed.frame(), ed.render_fresh()), kTol) << i << " " << target;
  }
}
