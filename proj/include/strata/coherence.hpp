#pragma once

// Frame-to-frame coherence: update shapes for edits, the integer-translation
// shortcut, interactive sessions with a private cache, and undo.

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "strata/cache.hpp"
#include "strata/filters.hpp"
#include "strata/geometry.hpp"
#include "strata/pixelset.hpp"
#include "strata/raster.hpp"
#include "strata/renderer.hpp"
#include "strata/scene.hpp"

namespace strata {

enum class EditKind { Translate, Rotate, Delete, Add, ModifyFill, ModifyGeometry };

struct EditOp {
  EditKind kind = EditKind::Translate;
  ObjectId target;
  double dx = 0, dy = 0;  // translate
  double angle = 0;       // rotate, degrees
  Point centre;           // rotate

  static EditOp translate(double dx, double dy, ObjectId target = {}) {
    return {EditKind::Translate, std::move(target), dx, dy, 0, {}};
  }
  static EditOp rotate(double angle, Point centre, ObjectId target = {}) {
    return {EditKind::Rotate, std::move(target), 0, 0, angle, centre};
  }
};

/// Matrix of a translate or rotate op.
inline Affine op_matrix(const EditOp& op) {
  switch (op.kind) {
    case EditKind::Translate: return Affine::translation(op.dx, op.dy);
    case EditKind::Rotate: return Affine::rotation(op.angle, op.centre);
    default: throw std::invalid_argument("edit has no geometric transform");
  }
}

inline bool is_integer_translate(const EditOp& op) {
  return op.kind == EditKind::Translate && std::isfinite(op.dx) && std::isfinite(op.dy) &&
         op.dx == std::round(op.dx) && op.dy == std::round(op.dy);
}

/// True when the op leaves every pixel that stays fully covered with exactly
/// the same colour: solid fills under translation and rotation.
inline bool rasterization_independent(const SceneObject& o, const EditOp& op) {
  const auto* p = o.plain();
  if (!p || !is_solid(p->fill)) return false;
  return op.kind == EditKind::Translate || op.kind == EditKind::Rotate;
}

/// True when the op moves the object's rasterization rigidly by whole pixels.
inline bool fastpath_eligible(const SceneObject& o, const EditOp& op) {
  return o.plain() != nullptr && is_integer_translate(op);
}

/// Geometry (and fill) mapped through `m`; identity and bookkeeping kept.
inline SceneObject transformed(const SceneObject& o, const Affine& m) {
  SceneObject out = o;
  if (auto* p = std::get_if<PlainObject>(&out.body)) {
    p->geometry = transform(p->geometry, m);
    p->fill = transform(p->fill, m);
  } else {
    auto& f = std::get<FilterObject>(out.body);
    f.geometry = transform(f.geometry, m);
  }
  return out;
}

/// Pixels an edit may change, before filter propagation and clipping.
/// `shapes_of` yields the shape pair of an object.
template <typename ShapesOf>
Shape base_update_shape(const EditOp& op, const SceneObject* old_obj,
                        const SceneObject* new_obj, ShapesOf&& shapes_of) {
  if (op.kind == EditKind::Delete) {
    if (!old_obj) throw std::invalid_argument("delete needs the old object");
    return shapes_of(*old_obj).shape;
  }
  if (op.kind == EditKind::Add) {
    if (!new_obj) throw std::invalid_argument("add needs the new object");
    return shapes_of(*new_obj).shape;
  }
  if (!old_obj || !new_obj) throw std::invalid_argument("edit needs old and new objects");
  const ShapePair a = shapes_of(*old_obj);
  const ShapePair b = shapes_of(*new_obj);
  if (rasterization_independent(*old_obj, op) && old_obj->plain() && new_obj->plain() &&
      old_obj->plain()->fill == new_obj->plain()->fill) {
    return unite(subtract(a.shape, b.min), subtract(b.shape, a.min));
  }
  return unite(a.shape, b.shape);
}

inline Shape update_shape_for_edit(const EditOp& op, const SceneObject* old_obj,
                                   const SceneObject* new_obj, const Shape& roi,
                                   RenderCache* cache = nullptr,
                                   double footprint = kDefaultFootprint) {
  auto shapes_of = [&](const SceneObject& o) { return object_shapes(o, cache, footprint); };
  return intersect(base_update_shape(op, old_obj, new_obj, shapes_of), roi);
}

/// Stores `moved`'s shape, minshape and sprite in `dst` by translating the
/// entries of `original` found in `src`. `moved` must be `original`
/// translated by (dx, dy). Returns false (storing nothing) when the
/// precondition fails or the entries are missing.
inline bool translate_fastpath(RenderCache& src, RenderCache& dst, const SceneObject& original,
                               const SceneObject& moved, std::int64_t dx, std::int64_t dy) {
  if (!original.plain() || !moved.plain() || !original.cacheable || !moved.cacheable) {
    return false;
  }
  const CacheKey ks{original.id, original.generation, CacheKind::Shape};
  const CacheKey km{original.id, original.generation, CacheKind::MinShape};
  const CacheKey kp{original.id, original.generation, CacheKind::Sprite};
  auto s = src.get_shape(ks);
  auto m = src.get_shape(km);
  if (!s || !m) return false;
  auto sp = src.get_sprite(kp);
  const Generation g = moved.generation;
  dst.put_shape({moved.id, g, CacheKind::Shape}, translate(*s, dx, dy),
                static_cast<double>(s->area()));
  dst.put_shape({moved.id, g, CacheKind::MinShape}, translate(*m, dx, dy),
                static_cast<double>(m->area()));
  if (sp) {
    dst.put_sprite({moved.id, g, CacheKind::Sprite},
                   SpriteEntry{translate(sp->sprite, dx, dy), translate(sp->computed, dx, dy)},
                   static_cast<double>(sp->sprite.pixel_count()));
  }
  return true;
}

/// Preview, commit or abandon without a matching begin, or a second begin.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// What a step re-rendered.
struct Patch {
  std::uint64_t seq = 0;
  Shape update;  // pixels re-rendered and patched into the frame
  RenderStats stats;
};

struct EditorConfig {
  RenderMode mode = RenderMode::Normal;
  const AntialiasTables* tables = nullptr;
  std::size_t cache_budget = kDefaultCacheBudget;
  bool use_cache = true;
  bool fastpath = true;
  int max_depth = 16;
};

/// A scene being edited, its current frame, and the caches behind it.
class Editor {
 public:
  explicit Editor(Scene scene, EditorConfig cfg = {})
      : scene_(std::move(scene)), cfg_(cfg), cache_(cfg.cache_budget) {
    for (auto& o : scene_.objects) {
      if (o.generation == 0) o.generation = next_gen_++;
      next_gen_ = std::max(next_gen_, o.generation + 1);
    }
    check_ids(scene_);
    frame_ = Raster::for_rect(scene_.canvas);
  }

  const Scene& scene() const { return scene_; }
  /// The scene as displayed: the session's preview when one is live.
  const Scene& visible_scene() const { return session_ ? session_->working : scene_; }
  const Raster& frame() const { return frame_; }
  RenderCache& cache() { return cache_; }
  const RenderCache* session_cache() const { return session_ ? &session_->cache : nullptr; }
  bool in_session() const { return session_.has_value(); }
  std::uint64_t seq() const { return seq_; }
  Shape roi() const { return Shape::from_rect(scene_.canvas); }
  const EditorConfig& config() const { return cfg_; }

  /// Renders the whole canvas into the frame.
  Patch render_all() { return render_into(visible_scene(), roi(), {}); }

  /// Re-renders `region` of the visible scene into the frame.
  Patch refresh(const Shape& region) {
    return render_into(visible_scene(), intersect(region, roi()), session_ids());
  }

  /// From-scratch render of the visible scene, ignoring every cache.
  Raster render_fresh() const {
    RenderOptions o = base_options();
    o.cache = nullptr;
    return render_region(visible_scene(), scene_.canvas, o);
  }

  // Interactive sessions.

  void begin(std::vector<ObjectId> ids) {
    if (session_) throw ProtocolError("a session is already active");
    if (ids.empty()) throw ProtocolError("session needs at least one target");
    std::set<ObjectId> seen;
    for (const auto& id : ids) {
      if (!scene_.find(id)) throw std::invalid_argument("unknown object '" + id + "'");
      if (!seen.insert(id).second) throw std::invalid_argument("duplicate target '" + id + "'");
    }
    session_.emplace(Session{std::move(ids), scene_, RenderCache::single_generation(), std::nullopt});
  }

  /// Shows the targets transformed by `op`, relative to the session start.
  Patch preview(const EditOp& op) {
    if (!session_) throw ProtocolError("preview without an active session");
    if (op.kind != EditKind::Translate && op.kind != EditKind::Rotate) {
      throw std::invalid_argument("preview supports translate and rotate");
    }
    const Affine m = op_matrix(op);
    Session& s = *session_;
    Scene next = s.working;
    Shape u;
    for (const auto& id : s.targets) {
      const std::size_t i = *scene_.find(id);
      const SceneObject& original = scene_.objects[i];
      const SceneObject& shown = s.working.objects[i];
      SceneObject moved = transformed(original, m);
      moved.generation = next_gen_++;
      // The private cache keeps one generation per id, so the shown object's
      // shapes are fetched before the moved object's entries replace them.
      const ShapePair before =
          shapes(shown, shown.generation == original.generation ? &cache_ : &s.cache);
      if (cfg_.fastpath && cfg_.use_cache && fastpath_eligible(original, op)) {
        translate_fastpath(cache_, s.cache, original, moved,
                           static_cast<std::int64_t>(op.dx), static_cast<std::int64_t>(op.dy));
      }
      const ShapePair after = shapes(moved, &s.cache);
      EditOp step = op;
      step.target = id;
      const Shape base = base_update_shape(
          step, &shown, &moved,
          [&](const SceneObject& o) { return &o == &shown ? before : after; });
      u = unite(u, propagate_update(next, base, i, roi(), footprint()));
      next.objects[i] = std::move(moved);
    }
    s.working = std::move(next);
    s.last_op = op;
    return render_into(s.working, u, s.targets);
  }

  /// Applies the previewed edit; the private entries move to the main cache.
  Patch commit() {
    if (!session_) throw ProtocolError("commit without an active session");
    Session s = std::move(*session_);
    session_.reset();
    for (const auto& id : s.targets) {
      const SceneObject& o = s.working.objects[*s.working.find(id)];
      for (CacheKind k : {CacheKind::Shape, CacheKind::MinShape, CacheKind::Sprite}) {
        s.cache.transfer_to(cache_, {o.id, o.generation, k});
      }
    }
    if (!(s.working.objects == scene_.objects) || changed_generations(scene_, s.working)) {
      undo_.push_back(scene_);
    }
    scene_ = std::move(s.working);
    Patch p;
    p.seq = ++seq_;
    return p;
  }

  /// Drops the preview and restores the committed scene on screen.
  Patch abandon() {
    if (!session_) throw ProtocolError("abandon without an active session");
    Session s = std::move(*session_);
    session_.reset();
    Shape u;
    for (const auto& id : s.targets) {
      const std::size_t i = *scene_.find(id);
      const ShapePair a = shapes(scene_.objects[i], &cache_);
      const ShapePair b = shapes(s.working.objects[i], &s.cache);
      u = unite(u, propagate_update(scene_, unite(a.shape, b.shape), i, roi(), footprint()));
    }
    return render_into(scene_, u, {});
  }

  // Immediate edits (each is its own undo step).

  Patch erase(const ObjectId& id) {
    require_idle();
    const auto i = scene_.find(id);
    if (!i) throw std::invalid_argument("unknown object '" + id + "'");
    for (const auto& o : scene_.objects) {
      const auto* f = o.filter();
      const auto* h = f && f->kind ? dynamic_cast<const HoleFilter*>(f->kind.get()) : nullptr;
      if (h && h->target() == id) {
        throw std::invalid_argument("object '" + id + "' is the target of hole filter '" +
                                    o.id + "'");
      }
    }
    undo_.push_back(scene_);
    const SceneObject old = scene_.objects[*i];
    const Shape base = shapes(old, &cache_).shape;
    const Shape u = propagate_update(scene_, base, *i, roi(), footprint());
    scene_.objects.erase(scene_.objects.begin() + static_cast<std::ptrdiff_t>(*i));
    return render_into(scene_, u, {});
  }

  /// Adds `obj` in front of everything, or directly behind `below`.
  Patch add(SceneObject obj, const std::optional<ObjectId>& below = std::nullopt) {
    require_idle();
    if (scene_.find(obj.id)) throw std::invalid_argument("duplicate object id '" + obj.id + "'");
    std::size_t at = 0;
    if (below) {
      const auto j = scene_.find(*below);
      if (!j) throw std::invalid_argument("unknown object '" + *below + "'");
      at = *j + 1;
    }
    undo_.push_back(scene_);
    obj.generation = next_gen_++;
    scene_.objects.insert(scene_.objects.begin() + static_cast<std::ptrdiff_t>(at), obj);
    const Shape base = shapes(scene_.objects[at], &cache_).shape;
    const Shape u = propagate_update(scene_, base, at, roi(), footprint());
    return render_into(scene_, u, {});
  }

  Patch set_fill(const ObjectId& id, const Fill& fill) {
    require_idle();
    const auto i = scene_.find(id);
    if (!i) throw std::invalid_argument("unknown object '" + id + "'");
    auto* p = std::get_if<PlainObject>(&scene_.objects[*i].body);
    if (!p) throw std::invalid_argument("object '" + id + "' has no fill");
    undo_.push_back(scene_);
    p->fill = fill;
    scene_.objects[*i].generation = next_gen_++;
    const Shape base = shapes(scene_.objects[*i], &cache_).shape;
    const Shape u = propagate_update(scene_, base, *i, roi(), footprint());
    return render_into(scene_, u, {});
  }

  /// Restores the scene before the last committed edit, generations included.
  Patch undo() {
    require_idle();
    if (undo_.empty()) throw ProtocolError("nothing to undo");
    Scene prev = std::move(undo_.back());
    undo_.pop_back();
    const Shape u = diff_update(scene_, prev);
    scene_ = std::move(prev);
    return render_into(scene_, u, {});
  }

  bool can_undo() const { return !undo_.empty(); }

 private:
  struct Session {
    std::vector<ObjectId> targets;
    Scene working;
    RenderCache cache;
    std::optional<EditOp> last_op;
  };

  double footprint() const { return tables().footprint(); }
  const AntialiasTables& tables() const {
    return cfg_.tables ? *cfg_.tables : default_tables(16);
  }

  RenderOptions base_options() const {
    RenderOptions o;
    o.mode = cfg_.mode;
    o.max_depth = cfg_.max_depth;
    o.tables = &tables();
    return o;
  }

  std::vector<ObjectId> session_ids() const {
    return session_ ? session_->targets : std::vector<ObjectId>{};
  }

  ShapePair shapes(const SceneObject& o, RenderCache* c) {
    return object_shapes(o, cfg_.use_cache ? c : nullptr, footprint());
  }

  Patch render_into(const Scene& scene, const Shape& u, const std::vector<ObjectId>& overlay) {
    RenderOptions o = base_options();
    if (cfg_.use_cache) {
      o.cache = &cache_;
      if (session_ && !overlay.empty()) {
        o.overlay_cache = &session_->cache;
        o.overlay_ids = overlay;
      }
    }
    Patch p;
    p.seq = ++seq_;
    p.update = intersect(u, roi());
    const Sprite s = render(scene, p.update, o, &p.stats);
    patch(s, p.update, frame_, Color::transparent());
    return p;
  }

  void require_idle() const {
    if (session_) throw ProtocolError("edit not allowed during a session");
  }

  static bool changed_generations(const Scene& a, const Scene& b) {
    if (a.objects.size() != b.objects.size()) return true;
    for (std::size_t i = 0; i < a.objects.size(); ++i) {
      if (a.objects[i].generation != b.objects[i].generation) return true;
    }
    return false;
  }

  static void check_ids(const Scene& s) {
    std::set<ObjectId> ids;
    for (const auto& o : s.objects) {
      if (!ids.insert(o.id).second) throw std::invalid_argument("duplicate object id '" + o.id + "'");
    }
  }

  // Update shape between two versions of the scene: every object whose
  // (id, generation) differs contributes old and new shapes, propagated from
  // its depth in the scene it belongs to.
  Shape diff_update(const Scene& from, const Scene& to) {
    Shape u;
    auto contribute = [&](const Scene& owner, const Scene& other) {
      for (std::size_t i = 0; i < owner.objects.size(); ++i) {
        const SceneObject& o = owner.objects[i];
        const auto j = other.find(o.id);
        if (j && other.objects[*j].generation == o.generation) continue;
        const Shape base = shapes(o, &cache_).shape;
        u = unite(u, propagate_update(owner, base, i, roi(), footprint()));
      }
    };
    contribute(from, to);
    contribute(to, from);
    return u;
  }

  Scene scene_;
  EditorConfig cfg_;
  RenderCache cache_;
  Raster frame_;
  Generation next_gen_ = 1;
  std::uint64_t seq_ = 0;
  std::optional<Session> session_;
  std::vector<Scene> undo_;
};

}  // namespace strata
