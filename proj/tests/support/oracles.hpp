#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

struct Point {
  double x = 0.0, y = 0.0;
};

/// Scalar evaluation of the bodyguard reward written directly from its
/// definition, with plain loops and no shared helpers.
inline double bodyguard_reward(Point vip, Point guard, const std::vector<Point>& bystanders,
                               const std::vector<double>& utterance, double A, double B, double m, double d, double p,
                               double threshold) {
  double product = 1.0;
  for (const Point& b : bystanders) {
    const double dx = vip.x - b.x, dy = vip.y - b.y;
    const double dist = std::sqrt(dx * dx + dy * dy);
    product = product * (1.0 - std::exp(-(A * dist) / B));
  }
  const double gx = guard.x - vip.x, gy = guard.y - vip.y;
  const double gd = std::sqrt(gx * gx + gy * gy);
  const double band = (gd >= m && gd <= d) ? 0.0 : -1.0;
  bool loud = false;
  for (double u : utterance)
    if (std::fabs(u) > threshold) loud = true;
  return (product - 1.0) + band + (loud ? p : 0.0);
}

/// Placement rule: one mt19937_64 seeded with `seed`; agents first then
/// landmarks; x then y; each coordinate uniform in [-h, h).
inline std::vector<Point> placement(std::uint64_t seed, std::size_t n_agents, std::size_t n_landmarks, double h) {
  std::mt19937_64 engine(seed);
  std::vector<Point> out;
  for (std::size_t i = 0; i < n_agents + n_landmarks; ++i) {
    Point p;
    p.x = std::uniform_real_distribution<double>(-h, h)(engine);
    p.y = std::uniform_real_distribution<double>(-h, h)(engine);
    out.push_back(p);
  }
  return out;
}

/// Contact magnitude contact_force * margin * log(1 + exp(pen / margin)),
/// evaluated in long double.
inline double contact_magnitude(double penetration, double contact_force, double margin) {
  const long double z = static_cast<long double>(penetration) / margin;
  return static_cast<double>(contact_force * margin * std::log1p(std::exp(z)));
}

/// Central difference of f at x[k].
inline double central_difference(const std::function<double()>& f, double& x, double h) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

/// |a - b| / max(|a|, |b|, floor). The floor keeps near-zero gradients from
/// dominating the relative error.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("escort_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << text;
}

}  // namespace oracle
