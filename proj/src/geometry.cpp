#include "rcm4/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace rcm4 {

namespace {

double cross(Vec2 a, Vec2 b) { return a[0] * b[1] - a[1] * b[0]; }
double dot(Vec2 a, Vec2 b) { return a[0] * b[0] + a[1] * b[1]; }

double sector(Vec2 u, Vec2 v, double r) {
  return 0.5 * r * r * std::atan2(cross(u, v), dot(u, v));
}

// Signed area of the disk of radius r at the origin intersected with the
// triangle (0, a, b).
double triangle_disk_area(Vec2 a, Vec2 b, double r) {
  const double r2 = r * r;
  const double aa = dot(a, a);
  const double bb = dot(b, b);
  if (aa <= r2 && bb <= r2) return 0.5 * cross(a, b);
  const Vec2 d{b[0] - a[0], b[1] - a[1]};
  const double qa = dot(d, d);
  if (qa == 0.0) return 0.0;
  const double qb = dot(a, d);
  const double qc = aa - r2;
  const double disc = qb * qb - qa * qc;
  if (disc <= 0.0) return sector(a, b, r);
  const double s = std::sqrt(disc);
  const double t1 = (-qb - s) / qa;
  const double t2 = (-qb + s) / qa;
  if (t2 <= 0.0 || t1 >= 1.0) return sector(a, b, r);
  const double u = std::max(t1, 0.0);
  const double v = std::min(t2, 1.0);
  const Vec2 p1{a[0] + u * d[0], a[1] + u * d[1]};
  const Vec2 p2{a[0] + v * d[0], a[1] + v * d[1]};
  return sector(a, p1, r) + 0.5 * cross(p1, p2) + sector(p2, b, r);
}

}  // namespace

double segment_distance(double px, double py, Vec2 a, Vec2 b) {
  const Vec2 d{b[0] - a[0], b[1] - a[1]};
  const Vec2 w{px - a[0], py - a[1]};
  const double len2 = dot(d, d);
  double t = len2 > 0.0 ? dot(w, d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(w[0] - t * d[0], w[1] - t * d[1]);
}

double disk_polygon_area(const Disk& d, std::span<const Vec2> polygon) {
  double total = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = polygon[i];
    const Vec2& q = polygon[(i + 1) % n];
    total += triangle_disk_area({p[0] - d.x, p[1] - d.y}, {q[0] - d.x, q[1] - d.y}, d.r);
  }
  return std::abs(total);
}

double disk_face_area(const Disk& d, int cx2, int cy2) {
  const double cx = 0.5 * cx2;
  const double cy = 0.5 * cy2;
  const double dist = std::hypot(cx - d.x, cy - d.y);
  // The diamond has circumradius 1/2 and inradius sqrt(2)/4.
  if (dist + 0.5 <= d.r) return 0.5;
  if (dist - 0.5 >= d.r) return 0.0;
  const std::array<Vec2, 4> diamond{Vec2{cx + 0.5, cy}, Vec2{cx, cy + 0.5}, Vec2{cx - 0.5, cy},
                                    Vec2{cx, cy - 0.5}};
  return disk_polygon_area(d, diamond);
}

}  // namespace rcm4
