#include "decktrack/locate.hpp"

#include "decktrack/error.hpp"

#include <cmath>

namespace decktrack::locate {

namespace {
constexpr double kParallelTol = 1e-9;
}

void BoundingBox::validate() const {
  require_finite(Vec2(u_min, v_min), "bbox min corner");
  require_finite(Vec2(u_max, v_max), "bbox max corner");
  if (!(u_min < u_max && v_min < v_max)) throw Error(ErrorCode::InvalidArgument, "bounding box is empty");
}

Vec3 intersect_deck(const CameraModel& camera, const Vec2& pixel, const DeckPlane& deck) {
  require_finite(deck.z0, "deck z0");
  const Ray ray = backproject(camera, pixel);
  const double dz = ray.direction.z();
  if (std::abs(dz) < kParallelTol) throw Error(ErrorCode::RayParallelToDeck, "pixel ray does not descend to the deck");
  const double s = (deck.z0 - ray.origin.z()) / dz;
  if (!(s > 0.0)) throw Error(ErrorCode::IntersectionBehindCamera, "deck intersection lies behind the camera");
  Vec3 p = ray.at(s);
  p.z() = deck.z0;
  return p;
}

Eigen::Vector2d locate_bbox_center(const CameraModel& camera, const BoundingBox& bbox, const DeckPlane& deck) {
  bbox.validate();
  return intersect_deck(camera, bbox.center(), deck).head<2>();
}

}  // namespace decktrack::locate
