#pragma once

// Front-to-back hidden surface removal over a depth-ordered scene.

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "strata/antialias.hpp"
#include "strata/cache.hpp"
#include "strata/geometry.hpp"
#include "strata/pixelset.hpp"
#include "strata/raster.hpp"
#include "strata/scene.hpp"
#include "strata/sprite.hpp"

namespace strata {

struct RenderStats {
  std::map<ObjectId, std::int64_t> rasterized;  // pixels computed per object
  std::int64_t objects_visited = 0;
  std::int64_t shape_calls = 0;
  std::int64_t rasterize_calls = 0;
  std::int64_t compose_ops = 0;
  std::int64_t cache_hits = 0;
  std::int64_t cache_misses = 0;
  std::int64_t subpixel_pixels = 0;
  std::int64_t background_pixels = 0;
  std::int64_t filter_calls = 0;

  std::int64_t pixels(const ObjectId& id) const {
    auto it = rasterized.find(id);
    return it == rasterized.end() ? 0 : it->second;
  }
  std::int64_t total_rasterized() const {
    std::int64_t n = 0;
    for (const auto& [id, v] : rasterized) n += v;
    return n;
  }
  void merge(const RenderStats& o) {
    for (const auto& [id, v] : o.rasterized) rasterized[id] += v;
    objects_visited += o.objects_visited;
    shape_calls += o.shape_calls;
    rasterize_calls += o.rasterize_calls;
    compose_ops += o.compose_ops;
    cache_hits += o.cache_hits;
    cache_misses += o.cache_misses;
    subpixel_pixels += o.subpixel_pixels;
    background_pixels += o.background_pixels;
    filter_calls += o.filter_calls;
  }
};

class RecursionLimitError : public std::runtime_error {
 public:
  explicit RecursionLimitError(int depth)
      : std::runtime_error("filter recursion deeper than " + std::to_string(depth)) {}
};

/// A filter broke its contract (e.g. render shape outside the request).
class FilterContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class RenderMode { Normal, Subpixel };

struct RenderOptions {
  RenderMode mode = RenderMode::Normal;
  int max_depth = 16;
  const AntialiasTables* tables = nullptr;  // null: default_tables(16)
  RenderCache* cache = nullptr;             // null: no caching
  // Objects named here use `overlay_cache` instead of `cache`.
  RenderCache* overlay_cache = nullptr;
  std::vector<ObjectId> overlay_ids;

  RenderCache* cache_for(const SceneObject& o) const {
    if (!o.cacheable) return nullptr;
    if (overlay_cache &&
        std::find(overlay_ids.begin(), overlay_ids.end(), o.id) != overlay_ids.end()) {
      return overlay_cache;
    }
    return cache;
  }
};

/// Shape and minshape of an object, through `cache` when given.
inline ShapePair object_shapes(const SceneObject& o, RenderCache* cache,
                               double footprint = kDefaultFootprint,
                               RenderStats* stats = nullptr) {
  if (stats) ++stats->shape_calls;
  if (!o.cacheable) cache = nullptr;
  const CacheKey ks{o.id, o.generation, CacheKind::Shape};
  const CacheKey km{o.id, o.generation, CacheKind::MinShape};
  if (cache) {
    auto s = cache->get_shape(ks);
    auto m = s ? cache->get_shape(km) : nullptr;
    if (s && m) {
      if (stats) ++stats->cache_hits;
      return {*s, *m};
    }
    if (stats) ++stats->cache_misses;
  }
  ShapePair sp = compute_shapes(o.geometry(), footprint);
  if (cache) {
    cache->put_shape(ks, sp.shape, static_cast<double>(sp.shape.area()));
    cache->put_shape(km, sp.min, static_cast<double>(sp.min.area()));
  }
  return sp;
}

struct FilterOutput {
  Sprite sprite;
  Shape finished;
};

namespace detail {

// In-progress composite. In subpixel mode, pixels may instead hold an n x n
// matrix; such pixels are absent from the normal composite.
class Accumulator {
 public:
  explicit Accumulator(const AntialiasTables& t) : t_(t) {}

  /// Composites `s` beneath. Pixels of `forced` count as finished whatever
  /// their opacity. Returns the newly finished pixels.
  Shape add_uniform(const Sprite& s, const Shape* forced = nullptr) {
    if (store_.empty()) {
      auto comp = compose_under(a_, s);
      a_ = std::move(comp.composite);
      return forced ? unite(comp.finished, *forced) : std::move(comp.finished);
    }
    const Shape held = store_shape();
    const Sprite hit = restrict(s, held);
    auto comp = compose_under(a_, exclude(s, held));
    std::vector<std::pair<std::pair<std::int32_t, std::int32_t>, Color>> resolved;
    for_each_sprite_pixel(hit, [&](std::int32_t x, std::int32_t y, const Color& c) {
      auto it = store_.find({y, x});
      bool opaque = true;
      for (auto& cell : it->second) {
        cell = over(cell, c);
        opaque = opaque && is_opaque(cell);
      }
      if (opaque || (forced && forced->contains(x, y))) {
        resolved.push_back({{y, x}, resolve_subpixel(it->second, t_)});
        store_.erase(it);
      }
    });
    const auto [rs, rshape] = build(resolved);
    a_ = merge_disjoint(comp.composite, rs);
    Shape f = unite(comp.finished, rshape);
    return forced ? unite(f, *forced) : f;
  }

  /// Composites subsample matrices beneath. Returns the newly finished pixels.
  Shape add_matrices(const std::vector<SubpixelMatrix>& ms) {
    ShapeBuilder moved;
    std::vector<std::pair<std::pair<std::int32_t, std::int32_t>, Color>> resolved;
    for (const auto& m : ms) {
      const std::pair<std::int32_t, std::int32_t> key{m.y, m.x};
      auto it = store_.find(key);
      std::vector<Color> cells;
      if (it != store_.end()) {
        cells = std::move(it->second);
        store_.erase(it);
      } else {
        const Color base = a_.pixel(m.x, m.y).value_or(Color::transparent());
        cells.assign(m.cells.size(), base);
        moved.add_pixel(m.x, m.y);
      }
      bool opaque = true;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        cells[i] = over(cells[i], m.cells[i]);
        opaque = opaque && is_opaque(cells[i]);
      }
      if (opaque) {
        resolved.push_back({key, resolve_subpixel(cells, t_)});
      } else {
        store_.emplace(key, std::move(cells));
      }
    }
    std::sort(resolved.begin(), resolved.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    const auto [rs, rshape] = build(resolved);
    a_ = merge_disjoint(exclude(a_, moved.build()), rs);
    return rshape;
  }

  /// Normalizes any remaining matrices and returns the composite.
  Sprite finish() {
    std::vector<std::pair<std::pair<std::int32_t, std::int32_t>, Color>> resolved;
    for (const auto& [key, cells] : store_) {
      resolved.push_back({key, resolve_subpixel(cells, t_)});
    }
    store_.clear();
    a_ = merge_disjoint(a_, build(resolved).first);
    return std::move(a_);
  }

 private:
  Shape store_shape() const {
    ShapeBuilder b;
    for (const auto& [key, cells] : store_) b.add_pixel(key.second, key.first);
    return b.build();
  }

  // `px` must be sorted by (y, x).
  static std::pair<Sprite, Shape> build(
      const std::vector<std::pair<std::pair<std::int32_t, std::int32_t>, Color>>& px) {
    SpriteBuilder sb;
    ShapeBuilder shb;
    for (const auto& [key, c] : px) {
      sb.push_pixel(key.second, key.first, c);
      shb.add_pixel(key.second, key.first);
    }
    return {sb.build(), shb.build()};
  }

  const AntialiasTables& t_;
  Sprite a_;
  std::map<std::pair<std::int32_t, std::int32_t>, std::vector<Color>> store_;
};

struct RenderContext {
  const RenderOptions& opt;
  const AntialiasTables& tables;
  RenderStats& stats;
  const Scene* root;
};

inline ShapePair object_shapes(const SceneObject& o, RenderContext& c) {
  return strata::object_shapes(o, c.opt.cache_for(o), c.tables.footprint(), &c.stats);
}

inline Sprite rasterize_plain(const SceneObject& o, const PlainObject& p, const Shape& R,
                              const ShapePair& sp, RenderContext& c) {
  ++c.stats.rasterize_calls;
  RasterizeStats rs;
  RenderCache* cache = c.opt.cache_for(o);
  Sprite out;
  if (cache) {
    const CacheKey k{o.id, o.generation, CacheKind::Sprite};
    auto e = cache->get_sprite(k);
    if (e) {
      const Shape missing = subtract(R, e->computed);
      if (missing.empty()) {
        ++c.stats.cache_hits;
        return restrict(e->sprite, R);
      }
      ++c.stats.cache_misses;
      Sprite fresh = rasterize(p.geometry, p.fill, missing, sp, c.tables, &rs);
      SpriteEntry merged{merge_disjoint(e->sprite, fresh), unite(e->computed, missing)};
      out = restrict(merged.sprite, R);
      cache->put_sprite(k, std::move(merged), static_cast<double>(rs.pixels));
    } else {
      ++c.stats.cache_misses;
      out = rasterize(p.geometry, p.fill, R, sp, c.tables, &rs);
      cache->put_sprite(k, SpriteEntry{out, R}, static_cast<double>(rs.pixels));
    }
  } else {
    out = rasterize(p.geometry, p.fill, R, sp, c.tables, &rs);
  }
  c.stats.rasterized[o.id] += rs.pixels;
  return out;
}

Sprite render_scene(const Scene& scene, const Shape& u0, RenderContext& c, int depth);

inline FilterOutput render_filter_object(const SceneObject& o, const ShapePair& sp,
                                         const Scene& below, const Shape& R,
                                         RenderContext& c, int depth) {
  const FilterObject& f = *o.filter();
  if (!f.kind) throw std::invalid_argument("filter object '" + o.id + "' has no kind");
  ++c.stats.filter_calls;
  SceneFnResult res = f.kind->scene_fn(below, R, FilterEnv{c.root});
  if (!subtract(res.render, R).empty()) {
    throw FilterContractError("filter '" + f.kind->name() +
                              "' render shape exceeds the requested shape");
  }
  const Sprite rendered = render_scene(res.scene, res.reading, c, depth + 1);
  const Sprite filtered = restrict(f.kind->filter_fn(rendered, res.render), res.render);

  const float op = std::clamp(f.opacity, 0.0f, 1.0f);
  RasterizeStats rs;
  const Sprite alpha =
      rasterize(f.geometry, SolidFill{{op, op, op, op}}, res.render, sp, c.tables, &rs);
  c.stats.rasterized[o.id] += rs.pixels;
  ShapeBuilder full;
  for_each_sprite_pixel(alpha, [&](std::int32_t x, std::int32_t y, const Color& a) {
    if (a.a >= 1.0f) full.add_pixel(x, y);
  });
  const Shape need_original = subtract(res.render, full.build());
  const Sprite original =
      need_original.empty() ? Sprite{} : render_scene(below, need_original, c, depth + 1);

  SpriteBuilder out;
  for_each_pixel(res.render, [&](std::int32_t x, std::int32_t y) {
    const float a = alpha.pixel(x, y).value_or(Color::transparent()).a;
    const Color d = filtered.pixel(x, y).value_or(Color::transparent());
    Color v = scale(d, a);
    if (a < 1.0f) {
      const Color g = original.pixel(x, y).value_or(Color::transparent());
      v = plus(v, scale(g, 1.0f - a));
    }
    out.push_pixel(x, y, v);
  });
  return {out.build(), res.render};
}

inline Sprite render_scene(const Scene& scene, const Shape& u0, RenderContext& c,
                           int depth) {
  if (depth > c.opt.max_depth) throw RecursionLimitError(c.opt.max_depth);
  const bool subpixel = c.opt.mode == RenderMode::Subpixel;
  Accumulator acc(c.tables);
  Shape u = u0;
  for (std::size_t i = 0; i < scene.objects.size() && !u.empty(); ++i) {
    const SceneObject& o = scene.objects[i];
    ++c.stats.objects_visited;
    c.stats.rasterized.try_emplace(o.id, 0);
    const ShapePair sp = object_shapes(o, c);
    const Shape r = intersect(u, sp.shape);
    if (r.empty()) continue;
    Shape finished;
    if (const auto* p = o.plain()) {
      if (!subpixel) {
        const Sprite s = rasterize_plain(o, *p, r, sp, c);
        ++c.stats.compose_ops;
        finished = acc.add_uniform(s);
      } else {
        const Shape rmin = intersect(r, sp.min);
        const Shape rmax = subtract(r, sp.min);
        if (!rmin.empty()) {
          const Sprite s = rasterize_plain(o, *p, rmin, sp, c);
          ++c.stats.compose_ops;
          finished = acc.add_uniform(s);
        }
        if (!rmax.empty()) {
          RasterizeStats rs;
          ++c.stats.rasterize_calls;
          const auto ms = rasterize_subpixel(p->geometry, p->fill, rmax, c.tables, &rs);
          c.stats.rasterized[o.id] += rs.pixels;
          c.stats.subpixel_pixels += static_cast<std::int64_t>(ms.size());
          ++c.stats.compose_ops;
          finished = unite(finished, acc.add_matrices(ms));
        }
      }
    } else {
      const FilterOutput fo = render_filter_object(o, sp, scene.below(i), r, c, depth);
      ++c.stats.compose_ops;
      finished = acc.add_uniform(fo.sprite, &fo.finished);
    }
    u = subtract(u, finished);
  }
  if (!u.empty() && scene.background) {
    SpriteBuilder b;
    for (const auto& row : u.scanlines()) {
      for (const auto& sp : row.spans) b.push_run(row.y, sp.start, sp.end, *scene.background);
    }
    c.stats.background_pixels += u.area();
    ++c.stats.compose_ops;
    acc.add_uniform(b.build());
  }
  return acc.finish();
}

}  // namespace detail

/// Renders `scene` over the update shape `u0`. The result's shape is a subset
/// of u0, and equals it when the scene has a background.
inline Sprite render(const Scene& scene, const Shape& u0, const RenderOptions& opt = {},
                     RenderStats* stats = nullptr) {
  RenderStats local;
  const AntialiasTables& t = opt.tables ? *opt.tables : default_tables(16);
  detail::RenderContext c{opt, t, stats ? *stats : local, &scene};
  return detail::render_scene(scene, u0, c, 0);
}

/// Renders one filter object over R against the scene behind it.
inline FilterOutput render_filter(const SceneObject& filter, const Scene& below,
                                  const Shape& R, const RenderOptions& opt = {},
                                  RenderStats* stats = nullptr,
                                  const Scene* root = nullptr) {
  if (!filter.is_filter()) throw std::invalid_argument("not a filter object");
  RenderStats local;
  const AntialiasTables& t = opt.tables ? *opt.tables : default_tables(16);
  detail::RenderContext c{opt, t, stats ? *stats : local, root ? root : &below};
  const ShapePair sp = detail::object_shapes(filter, c);
  return detail::render_filter_object(filter, sp, below, intersect(R, sp.shape), c, 0);
}

/// Dense render of `rect`; pixels the scene leaves empty are transparent.
inline Raster render_region(const Scene& scene, const Rect& rect,
                            const RenderOptions& opt = {}, RenderStats* stats = nullptr) {
  Raster out = Raster::for_rect(rect);
  if (rect.empty()) return out;
  blit(render(scene, Shape::from_rect(rect), opt, stats), out, Color::transparent());
  return out;
}

}  // namespace strata
