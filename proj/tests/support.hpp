#pragma once

#include "decktrack/error.hpp"
#include "decktrack/geom.hpp"

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace testing {

using namespace decktrack;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 uniform_vec(std::mt19937_64& rng, double lo, double hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

inline Rotation random_rotation(std::mt19937_64& rng) {
  return Rotation::from_ypr(uniform(rng, -kPi, kPi), uniform(rng, -1.4, 1.4), uniform(rng, -kPi, kPi));
}

inline Intrinsics random_intrinsics(std::mt19937_64& rng) {
  const int w = 640 + 2 * static_cast<int>(uniform(rng, 0.0, 700.0));
  const int h = 480 + 2 * static_cast<int>(uniform(rng, 0.0, 400.0));
  const double f = uniform(rng, 500.0, 2500.0);
  return {f, f * uniform(rng, 0.9, 1.1), w * uniform(rng, 0.4, 0.6), h * uniform(rng, 0.4, 0.6), w, h};
}

// Camera somewhere within `spread` of the origin looking roughly at it.
inline CameraModel random_camera(std::mt19937_64& rng, double spread = 50.0) {
  const Vec3 center = uniform_vec(rng, -spread, spread);
  const Vec3 fwd = (uniform_vec(rng, -2.0, 2.0) - center).normalized();
  Vec3 up = Vec3::UnitZ();
  if (std::abs(fwd.dot(up)) > 0.95) up = Vec3::UnitX();
  const Vec3 right = fwd.cross(up).normalized();
  const Vec3 down = fwd.cross(right);
  Mat3 c2w;
  c2w << right, down, fwd;
  return CameraModel::from_center(random_intrinsics(rng), Rotation::from_matrix(c2w), center);
}

// Identity-orientation camera at the origin looking down +z.
inline CameraModel axis_camera(double f = 1000.0, double cx = 500.0, double cy = 400.0) {
  return CameraModel({f, f, cx, cy, 1000, 800}, Rotation(), Vec3::Zero());
}

template <class F>
std::optional<ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline std::filesystem::path data_dir() { return DECKTRACK_DATA_DIR; }

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("decktrack_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
