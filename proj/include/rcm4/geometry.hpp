#pragma once

#include <array>
#include <span>

namespace rcm4 {

/// Closed Euclidean disk, lattice units.
struct Disk {
  double x = 0.0;
  double y = 0.0;
  double r = 0.0;
};

using Vec2 = std::array<double, 2>;

/// Euclidean distance from (px, py) to the segment [a, b].
double segment_distance(double px, double py, Vec2 a, Vec2 b);

/// Area of the intersection of a disk with a simple polygon (vertices in
/// either orientation). Exact up to floating-point rounding.
double disk_polygon_area(const Disk& d, std::span<const Vec2> polygon);

/// Area of the disk inside the medial face (a diamond of area 1/2) centred at
/// the doubled-coordinate point c2.
double disk_face_area(const Disk& d, int cx2, int cy2);

}  // namespace rcm4
