#pragma once

// JSON reports shared by the command-line tool and the service.

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "strata/coherence.hpp"
#include "strata/pixelset.hpp"
#include "strata/renderer.hpp"

namespace strata {

inline nlohmann::json stats_json(const RenderStats& s) {
  nlohmann::json per_object = nlohmann::json::object();
  for (const auto& [id, n] : s.rasterized) per_object[id] = n;
  return {
      {"rasterized", per_object},
      {"total_rasterized", s.total_rasterized()},
      {"objects_visited", s.objects_visited},
      {"shape_calls", s.shape_calls},
      {"rasterize_calls", s.rasterize_calls},
      {"compose_ops", s.compose_ops},
      {"cache_hits", s.cache_hits},
      {"cache_misses", s.cache_misses},
      {"subpixel_pixels", s.subpixel_pixels},
      {"background_pixels", s.background_pixels},
      {"filter_calls", s.filter_calls},
  };
}

/// Covers a shape with rectangles: vertically adjacent rows with the same
/// span are merged.
inline std::vector<Rect> shape_rects(const Shape& s) {
  std::vector<Rect> done;
  std::vector<Rect> open;  // rects ending on the previous row
  std::optional<std::int32_t> prev_y;
  for (const auto& row : s.scanlines()) {
    std::vector<Rect> next;
    const bool adjacent = prev_y && *prev_y + 1 == row.y;
    std::size_t j = 0;
    for (const auto& sp : row.spans) {
      while (adjacent && j < open.size() && open[j].x0 < sp.start) done.push_back(open[j++]);
      if (adjacent && j < open.size() && open[j].x0 == sp.start && open[j].x1 == sp.end) {
        Rect r = open[j++];
        r.y1 = row.y;
        next.push_back(r);
      } else {
        next.push_back({sp.start, row.y, sp.end, row.y});
      }
    }
    if (adjacent) {
      for (; j < open.size(); ++j) done.push_back(open[j]);
    } else {
      done.insert(done.end(), open.begin(), open.end());
    }
    open = std::move(next);
    prev_y = row.y;
  }
  done.insert(done.end(), open.begin(), open.end());
  std::sort(done.begin(), done.end(), [](const Rect& a, const Rect& b) {
    return std::tie(a.y0, a.x0) < std::tie(b.y0, b.x0);
  });
  return done;
}

inline nlohmann::json rect_json(const Rect& r) { return {r.x0, r.y0, r.x1, r.y1}; }

/// Update region and stats of a patch; no pixels.
inline nlohmann::json patch_json(const Patch& p) {
  nlohmann::json rects = nlohmann::json::array();
  for (const auto& r : shape_rects(p.update)) rects.push_back(rect_json(r));
  nlohmann::json j = {
      {"seq", p.seq},
      {"area", p.update.area()},
      {"rects", rects},
      {"spans", p.update.to_string()},
      {"stats", stats_json(p.stats)},
  };
  if (auto b = p.update.bounds()) j["bounds"] = rect_json(*b);
  return j;
}

}  // namespace strata
