#pragma once

// Depth-ordered scenes of plain and filter objects.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "strata/geometry.hpp"
#include "strata/pixelset.hpp"
#include "strata/sprite.hpp"

namespace strata {

using ObjectId = std::string;
using Generation = std::uint64_t;

class FilterKind;

struct PlainObject {
  Geometry geometry;
  Fill fill;
  friend bool operator==(const PlainObject&, const PlainObject&) = default;
};

/// Only the alpha of the geometry is used: opacity x coverage.
struct FilterObject {
  Geometry geometry;
  float opacity = 1.0f;
  std::shared_ptr<const FilterKind> kind;
};

bool operator==(const FilterObject& a, const FilterObject& b);

struct SceneObject {
  ObjectId id;
  Generation generation = 0;
  std::variant<PlainObject, FilterObject> body;
  // False for derived objects (e.g. geometry remapped by a filter) whose
  // (id, generation) no longer identifies their rasterization.
  bool cacheable = true;

  bool is_filter() const { return std::holds_alternative<FilterObject>(body); }
  const PlainObject* plain() const { return std::get_if<PlainObject>(&body); }
  const FilterObject* filter() const { return std::get_if<FilterObject>(&body); }
  const Geometry& geometry() const {
    return is_filter() ? filter()->geometry : plain()->geometry;
  }

  /// Structural equality; generation and cacheability are bookkeeping.
  friend bool operator==(const SceneObject& a, const SceneObject& b) {
    return a.id == b.id && a.body == b.body;
  }
};

/// objects[0] is front-most. The background, when present, is an
/// everywhere-opaque entry behind the last object.
struct Scene {
  Rect canvas{0, 0, -1, -1};
  std::vector<SceneObject> objects;
  std::optional<Color> background;

  /// Objects strictly behind index i, with the same background.
  Scene below(std::size_t i) const {
    Scene s;
    s.canvas = canvas;
    s.background = background;
    if (i + 1 < objects.size()) s.objects.assign(objects.begin() + i + 1, objects.end());
    return s;
  }

  std::optional<std::size_t> find(const ObjectId& id) const {
    for (std::size_t i = 0; i < objects.size(); ++i) {
      if (objects[i].id == id) return i;
    }
    return std::nullopt;
  }

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct SceneFnResult {
  Scene scene;
  Shape reading;  // where the modified scene must be rendered
  Shape render;   // where the filter produces output; subset of the request
};

/// Context handed to scene functions.
struct FilterEnv {
  const Scene* root = nullptr;  // the whole scene being rendered
};

/// A filter's scene, filter and update functions. Implementations must be
/// pure and reentrant.
class FilterKind {
 public:
  virtual ~FilterKind() = default;
  virtual std::string name() const = 0;
  virtual SceneFnResult scene_fn(const Scene& below, const Shape& requested,
                                 const FilterEnv& env) const = 0;
  virtual Sprite filter_fn(const Sprite& rendered, const Shape& render_shape) const = 0;
  /// Extra pixels of this filter's output affected by changes to `u` behind
  /// it; `filter_shape` is the shape of the filter geometry.
  virtual Shape update_fn(const Shape& u, const Shape& filter_shape) const = 0;
  virtual bool equals(const FilterKind& other) const = 0;
};

inline bool operator==(const FilterObject& a, const FilterObject& b) {
  if (!(a.geometry == b.geometry) || a.opacity != b.opacity) return false;
  if (!a.kind || !b.kind) return a.kind == b.kind;
  return a.kind->equals(*b.kind);
}

}  // namespace strata
