// strata: render scenes, replay edit scripts, serve the editor endpoints.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "strata/service.hpp"
#include "strata/strata.hpp"

namespace fs = std::filesystem;
using namespace strata;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(data.data(), static_cast<std::streamsize>(data.size()))) {
    throw Failure("cannot write " + path);
  }
}

void write_image(const std::string& path, const Raster& r) {
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".ppm") {
    write_file(path, encode_ppm(r));
  } else if (ext == ".png") {
    const auto png = encode_png(r);
    write_file(path, std::string(png.begin(), png.end()));
  } else {
    throw Failure("output must end in .png or .ppm: " + path);
  }
}

Scene load_scene(const std::string& path) {
  try {
    return parse_scene(read_file(path));
  } catch (const ParseError& e) {
    throw Failure(path + ":" + e.what());
  }
}

std::size_t env_size(const char* name, std::size_t fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v, v + std::strlen(v), out);
  if (ec != std::errc{} || *p != '\0') throw Failure(std::string(name) + " must be an integer");
  return out;
}

const AntialiasTables& tables_from_env() {
  const auto n = env_size("STRATA_SUBPIXEL_N", 16);
  if (n < 1 || n > 64) throw Failure("STRATA_SUBPIXEL_N must be in [1, 64]");
  return default_tables(static_cast<int>(n));
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_render(const std::string& scene_path, const std::string& out_path,
               const std::string& region, bool subpixel, const std::string& stats_path,
               bool no_cache) {
  const Scene scene = load_scene(scene_path);
  Rect rect = scene.canvas;
  if (!region.empty()) {
    try {
      rect = Service::parse_region(region);
    } catch (const std::invalid_argument& e) {
      throw Failure(std::string("--region: ") + e.what());
    }
  }
  RenderCache cache(env_size("STRATA_CACHE_BUDGET", kDefaultCacheBudget));
  RenderOptions opt;
  opt.mode = subpixel ? RenderMode::Subpixel : RenderMode::Normal;
  opt.tables = &tables_from_env();
  opt.cache = no_cache ? nullptr : &cache;
  RenderStats stats;
  // Objects the render never reaches are reported with zero pixels.
  for (const auto& o : scene.objects) stats.rasterized.try_emplace(o.id, 0);
  const auto t0 = std::chrono::steady_clock::now();
  const Raster r = render_region(scene, rect, opt, &stats);
  const double wall = ms_since(t0);
  write_image(out_path, r);
  if (!stats_path.empty()) {
    nlohmann::json j = stats_json(stats);
    j["region"] = rect_json(rect);
    j["wall_ms"] = wall;
    write_file(stats_path, j.dump(2) + "\n");
  }
  return 0;
}

const char* command_name(CommandKind k) {
  switch (k) {
    case CommandKind::Select: return "select";
    case CommandKind::Translate: return "translate";
    case CommandKind::Rotate: return "rotate";
    case CommandKind::Commit: return "commit";
    case CommandKind::Abandon: return "abandon";
    case CommandKind::Delete: return "delete";
    case CommandKind::Add: return "add";
    case CommandKind::SetFill: return "fill";
    case CommandKind::Undo: return "undo";
    case CommandKind::Snapshot: return "snapshot";
  }
  return "?";
}

int cmd_replay(const std::string& scene_path, const std::string& script_path,
               const std::string& out_dir, bool verify, bool subpixel,
               const std::string& stats_path, bool no_cache, bool no_fastpath) {
  const Scene scene = load_scene(scene_path);
  EditScript script;
  try {
    script = parse_script(read_file(script_path), &scene);
  } catch (const ParseError& e) {
    throw Failure(script_path + ":" + e.what());
  }
  EditorConfig cfg;
  cfg.mode = subpixel ? RenderMode::Subpixel : RenderMode::Normal;
  cfg.tables = &tables_from_env();
  cfg.cache_budget = env_size("STRATA_CACHE_BUDGET", kDefaultCacheBudget);
  cfg.use_cache = !no_cache;
  cfg.fastpath = !no_fastpath;
  Editor ed(scene, cfg);
  if (!out_dir.empty()) fs::create_directories(out_dir);

  const auto t0 = std::chrono::steady_clock::now();
  nlohmann::json steps = nlohmann::json::array();
  RenderStats total;
  const Patch first = ed.render_all();
  total.merge(first.stats);
  int mismatches = 0;
  for (const auto& cmd : script.commands) {
    Patch p;
    try {
      p = apply_command(ed, cmd);
    } catch (const std::exception& e) {
      throw Failure(script_path + ":" + std::to_string(cmd.line) + ": " + e.what());
    }
    total.merge(p.stats);
    nlohmann::json step = patch_json(p);
    step.erase("spans");
    step["line"] = cmd.line;
    step["command"] = command_name(cmd.kind);
    if (cmd.kind == CommandKind::Snapshot) {
      step["name"] = cmd.name;
      if (!out_dir.empty()) write_image((fs::path(out_dir) / (cmd.name + ".png")).string(), ed.frame());
      if (verify) {
        const float diff = max_channel_diff(ed.frame(), ed.render_fresh());
        step["max_diff"] = diff;
        step["verified"] = diff <= 1.0f / 256.0f;
        if (diff > 1.0f / 256.0f) {
          ++mismatches;
          std::cerr << "snapshot " << cmd.name << ": frame differs from a full render by "
                    << diff << "\n";
        }
      }
    }
    steps.push_back(std::move(step));
  }
  if (!stats_path.empty()) {
    nlohmann::json j = {{"initial", stats_json(first.stats)},
                        {"steps", steps},
                        {"total", stats_json(total)},
                        {"wall_ms", ms_since(t0)}};
    write_file(stats_path, j.dump(2) + "\n");
  }
  return mismatches == 0 ? 0 : 3;
}

int cmd_serve(const std::string& scene_path, const std::string& host, int port, bool subpixel) {
  EditorConfig cfg;
  cfg.mode = subpixel ? RenderMode::Subpixel : RenderMode::Normal;
  cfg.tables = &tables_from_env();
  cfg.cache_budget = env_size("STRATA_CACHE_BUDGET", kDefaultCacheBudget);
  Service svc(load_scene(scene_path), cfg);
  httplib::Server srv;
  svc.mount(srv);
  std::cerr << "serving " << scene_path << " on http://" << host << ":" << port << "\n";
  if (!srv.listen(host, port)) throw Failure("cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strata: scanline scene renderer"};
  app.require_subcommand(1);

  std::string scene_path, out_path, region, stats_path, script_path, out_dir, host = "127.0.0.1";
  bool subpixel = false, no_cache = false, verify = false, no_fastpath = false;
  int port = 8080;

  auto* render = app.add_subcommand("render", "render a scene to PNG or PPM");
  render->add_option("scene", scene_path, "scene file")->required();
  render->add_option("out", out_path, "output .png or .ppm")->required();
  render->add_option("--region", region, "x0,y0,x1,y1 (inclusive)");
  render->add_flag("--subpixel", subpixel, "resolve partial pixels with subpixel matrices");
  render->add_option("--stats", stats_path, "write a JSON stats report");
  render->add_flag("--no-cache", no_cache, "disable the shape and sprite cache");

  auto* replay = app.add_subcommand("replay", "apply an edit script incrementally");
  replay->add_option("scene", scene_path, "scene file")->required();
  replay->add_option("script", script_path, "edit script")->required();
  replay->add_option("--out-dir", out_dir, "write snapshot PNGs here");
  replay->add_flag("--verify", verify, "compare each snapshot with a full render");
  replay->add_flag("--subpixel", subpixel, "resolve partial pixels with subpixel matrices");
  replay->add_option("--stats", stats_path, "write a JSON stats report");
  replay->add_flag("--no-cache", no_cache, "disable the shape and sprite cache");
  replay->add_flag("--no-fastpath", no_fastpath, "rasterize integer translations again");

  auto* serve = app.add_subcommand("serve", "serve the editor endpoints over HTTP");
  serve->add_option("scene", scene_path, "scene file")->required();
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port")->check(CLI::Range(1, 65535));
  serve->add_flag("--subpixel", subpixel, "resolve partial pixels with subpixel matrices");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*render) return cmd_render(scene_path, out_path, region, subpixel, stats_path, no_cache);
    if (*replay) {
      return cmd_replay(scene_path, script_path, out_dir, verify, subpixel, stats_path, no_cache,
                        no_fastpath);
    }
    if (*serve) return cmd_serve(scene_path, host, port, subpixel);
  } catch (const std::exception& e) {
    std::cerr << "strata: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
