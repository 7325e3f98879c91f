#pragma once

// Deck-plane localization: intersect a pixel's camera ray with Z = z0.

#include "decktrack/geom.hpp"

namespace decktrack::locate {

struct DeckPlane {
  double z0 = 0.0;
};

struct BoundingBox {
  double u_min;
  double v_min;
  double u_max;
  double v_max;

  // Throws InvalidArgument unless u_min < u_max and v_min < v_max.
  void validate() const;
  Vec2 center() const { return {0.5 * (u_min + u_max), 0.5 * (v_min + v_max)}; }
};

// Throws RayParallelToDeck or IntersectionBehindCamera.
Vec3 intersect_deck(const CameraModel& camera, const Vec2& pixel, const DeckPlane& deck = {});

Eigen::Vector2d locate_bbox_center(const CameraModel& camera, const BoundingBox& bbox, const DeckPlane& deck = {});

}  // namespace decktrack::locate
