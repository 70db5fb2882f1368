#pragma once

// HTTP service over an Editor: scene description, region renders, one edit
// session at a time, and a long-poll patch stream.
//
//   GET  /scene                      scene text and object list
//   GET  /render?region=x0,y0,x1,y1  PNG of the displayed frame (&fresh=1
//                                    renders the committed scene from scratch)
//   POST /session/begin?ids=a,b
//   POST /session/preview?op=translate&dx=..&dy=..
//   POST /session/preview?op=rotate&angle=..&cx=..&cy=..
//   POST /session/commit
//   POST /session/abandon
//   GET  /patch?after=N&timeout_ms=T  first patch with seq > N (204 on timeout)
//   GET  /stats
//
// Errors are JSON: {"error": {"kind": ..., "message": ...}}.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "strata/coherence.hpp"
#include "strata/raster.hpp"
#include "strata/report.hpp"
#include "strata/scene_io.hpp"

namespace strata {

struct Reply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

using Params = std::map<std::string, std::string>;

class Service {
 public:
  static constexpr std::size_t kPatchLog = 1024;

  explicit Service(Scene scene, EditorConfig cfg = {}) : editor_(std::move(scene), cfg) {
    record("render", editor_.render_all());
  }

  Reply scene() {
    std::lock_guard<std::mutex> lock(mu_);
    nlohmann::json objects = nlohmann::json::array();
    const Scene& s = editor_.visible_scene();
    for (const auto& o : s.objects) {
      std::string kind;
      if (const auto* f = o.filter()) {
        kind = "filter:" + (f->kind ? f->kind->name() : std::string("?"));
      } else {
        kind = detail::geometry_kind(o.plain()->geometry);
      }
      objects.push_back({{"id", o.id}, {"kind", kind}, {"generation", o.generation}});
    }
    return json_reply(200, {{"text", serialize_scene(editor_.scene())},
                            {"width", s.canvas.width()},
                            {"height", s.canvas.height()},
                            {"objects", objects},
                            {"in_session", editor_.in_session()},
                            {"seq", editor_.seq()}});
  }

  Reply render(const Params& q) {
    return guarded([&] {
      std::optional<Rect> region;
      if (auto it = q.find("region"); it != q.end()) region = parse_region(it->second);
      const bool fresh = q.count("fresh") && q.at("fresh") == "1";
      Raster out;
      if (fresh) {
        Scene committed;
        EditorConfig cfg;
        {
          std::lock_guard<std::mutex> lock(mu_);
          committed = editor_.scene();
          cfg = editor_.config();
        }
        RenderOptions o;
        o.mode = cfg.mode;
        o.max_depth = cfg.max_depth;
        o.tables = cfg.tables;
        out = render_region(committed, region.value_or(committed.canvas), o);
      } else {
        std::lock_guard<std::mutex> lock(mu_);
        out = editor_.frame().crop(region.value_or(editor_.frame().rect()));
      }
      const auto png = encode_png(out);
      return Reply{200, "image/png", std::string(png.begin(), png.end())};
    });
  }

  Reply begin(const Params& q) {
    return guarded([&] {
      std::vector<ObjectId> ids;
      std::stringstream ss(required(q, "ids"));
      for (std::string id; std::getline(ss, id, ',');) {
        if (!id.empty()) ids.push_back(id);
      }
      std::lock_guard<std::mutex> lock(mu_);
      editor_.begin(ids);
      return json_reply(200, {{"seq", editor_.seq()}, {"in_session", true}});
    });
  }

  Reply preview(const Params& q) {
    return guarded([&] {
      const std::string op = required(q, "op");
      EditOp e;
      if (op == "translate") {
        e = EditOp::translate(number(q, "dx"), number(q, "dy"));
      } else if (op == "rotate") {
        e = EditOp::rotate(number(q, "angle"), {number(q, "cx"), number(q, "cy")});
      } else {
        throw std::invalid_argument("unknown op '" + op + "'");
      }
      std::lock_guard<std::mutex> lock(mu_);
      return json_reply(200, record("preview", editor_.preview(e)));
    });
  }

  Reply commit() {
    return guarded([&] {
      std::lock_guard<std::mutex> lock(mu_);
      return json_reply(200, record("commit", editor_.commit()));
    });
  }

  Reply abandon() {
    return guarded([&] {
      std::lock_guard<std::mutex> lock(mu_);
      return json_reply(200, record("abandon", editor_.abandon()));
    });
  }

  /// First recorded patch with seq > after, waiting up to timeout_ms.
  Reply next_patch(const Params& q) {
    return guarded([&] {
      const auto after = static_cast<std::uint64_t>(number(q, "after"));
      const double wait = q.count("timeout_ms") ? number(q, "timeout_ms") : 0.0;
      std::unique_lock<std::mutex> lock(mu_);
      auto ready = [&] { return !log_.empty() && log_.back()["seq"].get<std::uint64_t>() > after; };
      if (!ready() && wait > 0) {
        changed_.wait_for(lock, std::chrono::duration<double, std::milli>(wait), ready);
      }
      if (!ready()) return Reply{204, "application/json", ""};
      for (const auto& p : log_) {
        if (p["seq"].get<std::uint64_t>() > after) {
          if (p["seq"].get<std::uint64_t>() > after + 1 && after + 1 < first_seq()) {
            return error_reply(410, "gone", "patches after " + std::to_string(after) +
                                                " were dropped; fetch /render");
          }
          return json_reply(200, p);
        }
      }
      return Reply{204, "application/json", ""};
    });
  }

  Reply stats() {
    std::lock_guard<std::mutex> lock(mu_);
    const CacheStats c = editor_.cache().stats();
    return json_reply(200, {{"seq", editor_.seq()},
                            {"in_session", editor_.in_session()},
                            {"total", stats_json(total_)},
                            {"last", last_ ? (*last_)["stats"] : nlohmann::json(nullptr)},
                            {"cache",
                             {{"hits", c.hits},
                              {"misses", c.misses},
                              {"insertions", c.insertions},
                              {"evictions", c.evictions},
                              {"rejected", c.rejected},
                              {"bytes", editor_.cache().bytes()},
                              {"entries", editor_.cache().size()}}}});
  }

  void mount(httplib::Server& srv) {
    auto params = [](const httplib::Request& r) {
      Params p;
      for (const auto& [k, v] : r.params) p[k] = v;
      return p;
    };
    auto send = [](httplib::Response& res, const Reply& r) {
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    srv.Get("/scene", [=, this](const httplib::Request&, httplib::Response& res) {
      send(res, scene());
    });
    srv.Get("/render", [=, this](const httplib::Request& r, httplib::Response& res) {
      send(res, render(params(r)));
    });
    srv.Post("/session/begin", [=, this](const httplib::Request& r, httplib::Response& res) {
      send(res, begin(params(r)));
    });
    srv.Post("/session/preview", [=, this](const httplib::Request& r, httplib::Response& res) {
      send(res, preview(params(r)));
    });
    srv.Post("/session/commit", [=, this](const httplib::Request&, httplib::Response& res) {
      send(res, commit());
    });
    srv.Post("/session/abandon", [=, this](const httplib::Request&, httplib::Response& res) {
      send(res, abandon());
    });
    srv.Get("/patch", [=, this](const httplib::Request& r, httplib::Response& res) {
      send(res, next_patch(params(r)));
    });
    srv.Get("/stats", [=, this](const httplib::Request&, httplib::Response& res) {
      send(res, stats());
    });
  }

  static Rect parse_region(const std::string& text) {
    std::int32_t v[4];
    std::stringstream ss(text);
    std::string part;
    for (int i = 0; i < 4; ++i) {
      if (!std::getline(ss, part, ',')) throw std::invalid_argument("region needs x0,y0,x1,y1");
      auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v[i]);
      if (ec != std::errc{} || p != part.data() + part.size()) {
        throw std::invalid_argument("bad region value '" + part + "'");
      }
    }
    if (std::getline(ss, part, ',')) throw std::invalid_argument("region needs x0,y0,x1,y1");
    if (v[0] > v[2] || v[1] > v[3]) throw std::invalid_argument("empty region");
    return {v[0], v[1], v[2], v[3]};
  }

 private:
  static Reply json_reply(int status, const nlohmann::json& j) {
    return {status, "application/json", j.dump()};
  }
  static Reply error_reply(int status, const std::string& kind, const std::string& msg) {
    return json_reply(status, {{"error", {{"kind", kind}, {"message", msg}}}});
  }

  template <typename F>
  Reply guarded(F&& f) {
    try {
      return f();
    } catch (const ProtocolError& e) {
      return error_reply(409, "protocol", e.what());
    } catch (const std::invalid_argument& e) {
      return error_reply(400, "bad_request", e.what());
    } catch (const std::out_of_range& e) {
      return error_reply(400, "bad_request", e.what());
    } catch (const std::exception& e) {
      return error_reply(500, "internal", e.what());
    }
  }

  static const std::string& required(const Params& q, const std::string& key) {
    auto it = q.find(key);
    if (it == q.end() || it->second.empty()) {
      throw std::invalid_argument("missing parameter '" + key + "'");
    }
    return it->second;
  }

  static double number(const Params& q, const std::string& key) {
    const std::string& s = required(q, key);
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) {
      throw std::invalid_argument("parameter '" + key + "' is not a number");
    }
    return v;
  }

  std::uint64_t first_seq() const {
    return log_.empty() ? 0 : log_.front()["seq"].get<std::uint64_t>();
  }

  // Logs a patch with the frame pixels over its bounds. Caller holds mu_
  // (or is the constructor).
  nlohmann::json record(const std::string& kind, const Patch& p) {
    nlohmann::json j = patch_json(p);
    j["kind"] = kind;
    if (auto b = p.update.bounds()) {
      const auto png = encode_png(editor_.frame().crop(*b));
      j["png"] = httplib::detail::base64_encode(std::string(png.begin(), png.end()));
    }
    total_.merge(p.stats);
    log_.push_back(j);
    if (log_.size() > kPatchLog) log_.pop_front();
    last_ = j;
    changed_.notify_all();
    return j;
  }

  std::mutex mu_;
  std::condition_variable changed_;
  Editor editor_;
  std::deque<nlohmann::json> log_;
  std::optional<nlohmann::json> last_;
  RenderStats total_;
};

}  // namespace strata
