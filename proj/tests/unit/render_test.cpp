#include <gtest/gtest.h>

#include <map>
#include <regex>

#include "escort/evaluate.hpp"
#include "escort/render.hpp"
#include "oracles.hpp"

using namespace escort;

namespace {

EpisodeTrace sample_trace() {
  ScenarioConfig s;
  s.n_bodyguards = 2;
  s.n_bystanders = 4;
  s.n_landmarks = 5;
  return run_episode(s, scripted_ring_controller(s)(0), 11);
}

std::vector<std::pair<std::string, std::string>> circles(const std::string& svg) {
  static const std::regex re("<circle class=\"([a-z]+)\"[^>]*fill=\"([^\"]+)\"/>");
  std::vector<std::pair<std::string, std::string>> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    out.emplace_back((*it)[1], (*it)[2]);
  return out;
}

}  // namespace

TEST(ToCanvas, CornersAndCentre) {
  RenderStyle s;
  s.canvas_px = 400;
  s.view_half_extent = 2.0;
  const CanvasPoint c = to_canvas({0, 0}, s);
  EXPECT_EQ(c.x, 200.0);
  EXPECT_EQ(c.y, 200.0);
  const CanvasPoint tl = to_canvas({-2, 2}, s);
  EXPECT_EQ(tl.x, 0.0);
  EXPECT_EQ(tl.y, 0.0);
  const CanvasPoint br = to_canvas({2, -2}, s);
  EXPECT_EQ(br.x, 400.0);
  EXPECT_EQ(br.y, 400.0);
  EXPECT_EQ(to_canvas({1, 0.5}, s).x, 300.0);
  EXPECT_EQ(to_canvas({1, 0.5}, s).y, 150.0);
}

TEST(RenderFrame, OneCirclePerEntityInPalette) {
  const EpisodeTrace trace = sample_trace();
  const RenderStyle style;
  const std::string svg = render_frame(trace.records[0].state, trace.roles, style);
  const auto cs = circles(svg);
  ASSERT_EQ(cs.size(), 7u + 5u);
  const RenderPalette& pal = style.palette;
  const std::map<std::string, std::string> colors = {{"vip", pal.vip},           {"bodyguard", pal.bodyguard},
                                                     {"bystander", pal.bystander}, {"landmark", pal.landmark},
                                                     {"goal", pal.goal}};
  std::map<std::string, int> count;
  for (const auto& [cls, fill] : cs) {
    ++count[cls];
    ASSERT_TRUE(colors.count(cls)) << cls;
    EXPECT_EQ(fill, colors.at(cls)) << cls;
  }
  EXPECT_EQ(count["vip"], 1);
  EXPECT_EQ(count["bodyguard"], 2);
  EXPECT_EQ(count["bystander"], 4);
  EXPECT_EQ(count["goal"], 1);
  EXPECT_EQ(count["landmark"], 4);
  EXPECT_NE(svg.find("fill=\"#ffffff\""), std::string::npos);
}

TEST(RenderFrame, CirclePositionMatchesTransform) {
  WorldState w;
  EntityState vip;
  vip.position = {0.5, -0.25};
  vip.radius = 0.1;
  w.agents = {vip};
  w.utterances = {{}};
  RoleAssignment roles;
  RenderStyle style;
  style.canvas_px = 100;
  style.view_half_extent = 1.0;
  const std::string svg = render_frame(w, roles, style);
  EXPECT_NE(svg.find("<circle class=\"vip\" cx=\"75.000\" cy=\"62.500\" r=\"5.000\" fill=\"#8b4513\"/>"),
            std::string::npos)
      << svg;
}

TEST(RenderFrame, CustomPaletteApplied) {
  const EpisodeTrace trace = sample_trace();
  RenderStyle style;
  style.palette.bystander = "black";
  for (const auto& [cls, fill] : circles(render_frame(trace.records[3].state, trace.roles, style)))
    EXPECT_EQ(fill == "black", cls == "bystander") << cls;
}

TEST(RenderTrace, StrideAndDeterminism) {
  const EpisodeTrace trace = sample_trace();
  ASSERT_EQ(trace.records.size(), 25u);
  RenderStyle style;
  const auto a = oracle::temp_dir("render_a"), b = oracle::temp_dir("render_b");
  const auto files = render_trace(trace, style, a);
  ASSERT_EQ(files.size(), 25u);
  EXPECT_EQ(files.front().filename(), "frame_0000.svg");
  EXPECT_EQ(files.back().filename(), "frame_0024.svg");
  const auto again = render_trace(trace, style, b);
  for (std::size_t k = 0; k < files.size(); ++k)
    EXPECT_EQ(oracle::read_file(files[k]), oracle::read_file(again[k]));

  style.frame_stride = 4;
  EXPECT_EQ(render_trace(trace, style, oracle::temp_dir("render_c")).size(), 7u);
  style.frame_stride = 100;
  EXPECT_EQ(render_trace(trace, style, oracle::temp_dir("render_d")).size(), 1u);
  style.frame_stride = 0;
  EXPECT_THROW(render_trace(trace, style, oracle::temp_dir("render_e")), ContractViolation);
}
