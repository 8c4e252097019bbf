#pragma once

// SVG snapshots of the world. One <circle> per entity; landmarks first, then
// agents in index order.
//
// World-to-canvas transform, with S = canvas_px and H = view_half_extent:
//   k = S / (2H),  cx = (x + H) k,  cy = (H - y) k,  r_px = radius k
// so the world origin maps to the canvas centre and +y points up.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "escort/scenario.hpp"

namespace escort {

struct RenderPalette {
  std::string vip = "#8b4513";        // brown
  std::string bodyguard = "#1f5fd6";  // blue
  std::string bystander = "#d62728";  // red
  std::string landmark = "#9e9e9e";   // gray
  std::string goal = "#2ca02c";       // green
  std::string background = "#ffffff";

  friend bool operator==(const RenderPalette&, const RenderPalette&) = default;
};

struct RenderStyle {
  int canvas_px = 600;
  double view_half_extent = 2.0;
  int frame_stride = 1;
  RenderPalette palette;

  friend bool operator==(const RenderStyle&, const RenderStyle&) = default;
};

struct CanvasPoint {
  double x = 0.0;
  double y = 0.0;
};

inline CanvasPoint to_canvas(Vec2 p, const RenderStyle& style) {
  const double k = style.canvas_px / (2.0 * style.view_half_extent);
  return {(p.x + style.view_half_extent) * k, (style.view_half_extent - p.y) * k};
}

namespace detail {
inline void append_circle(std::string& out, const char* cls, Vec2 pos, double radius, const std::string& fill,
                          const RenderStyle& style) {
  const CanvasPoint c = to_canvas(pos, style);
  const double r = radius * style.canvas_px / (2.0 * style.view_half_extent);
  char buf[256];
  std::snprintf(buf, sizeof buf, "  <circle class=\"%s\" cx=\"%.3f\" cy=\"%.3f\" r=\"%.3f\" fill=\"%s\"/>\n", cls, c.x, c.y,
                r, fill.c_str());
  out += buf;
}
}  // namespace detail

inline std::string render_frame(const WorldState& state, const RoleAssignment& roles, const RenderStyle& style) {
  const int s = style.canvas_px;
  const RenderPalette& pal = style.palette;
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\">\n", s, s, s, s);
  out += buf;
  std::snprintf(buf, sizeof buf, "  <rect x=\"0\" y=\"0\" width=\"%d\" height=\"%d\" fill=\"%s\"/>\n", s, s,
                pal.background.c_str());
  out += buf;

  for (std::size_t j = 0; j < state.landmarks.size(); ++j) {
    const bool goal = j == roles.vip_goal_landmark;
    detail::append_circle(out, goal ? "goal" : "landmark", state.landmarks[j].position, state.landmarks[j].radius,
                          goal ? pal.goal : pal.landmark, style);
  }
  for (std::size_t i = 0; i < state.agents.size(); ++i) {
    const char* cls = "bystander";
    const std::string* fill = &pal.bystander;
    if (i == roles.vip_index) {
      cls = "vip";
      fill = &pal.vip;
    } else if (roles.is_bodyguard(i)) {
      cls = "bodyguard";
      fill = &pal.bodyguard;
    }
    detail::append_circle(out, cls, state.agents[i].position, state.agents[i].radius, *fill, style);
  }
  std::snprintf(buf, sizeof buf, "  <text x=\"8\" y=\"20\" font-family=\"monospace\" font-size=\"14\">step %d</text>\n",
                state.step_index);
  out += buf;
  out += "</svg>\n";
  return out;
}

/// Writes frame_NNNN.svg for every `frame_stride`-th record. Returns the paths.
inline std::vector<std::filesystem::path> render_trace(const EpisodeTrace& trace, const RenderStyle& style,
                                                       const std::filesystem::path& out_dir) {
  require(style.frame_stride >= 1, "render_trace: frame_stride must be positive");
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (std::size_t t = 0; t < trace.records.size(); t += static_cast<std::size_t>(style.frame_stride)) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.svg", t);
    const std::filesystem::path path = out_dir / name;
    std::ofstream f(path, std::ios::binary);
    f << render_frame(trace.records[t].state, trace.roles, style);
    if (!f) throw std::runtime_error("render_trace: cannot write " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace escort
