#include "rcm4/loops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace rcm4 {

namespace {

std::int64_t cross3(Point o, Point a, Point b) {
  return static_cast<std::int64_t>(a.x - o.x) * (b.y - o.y) -
         static_cast<std::int64_t>(a.y - o.y) * (b.x - o.x);
}

// Diameter of a point set via its convex hull; input in doubled coordinates,
// output in lattice units.
double hull_diameter(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 2) return 0.0;
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross3(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross3(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  std::int64_t best = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    for (std::size_t j = i + 1; j < hull.size(); ++j) {
      const std::int64_t dx = hull[i].x - hull[j].x;
      const std::int64_t dy = hull[i].y - hull[j].y;
      best = std::max(best, dx * dx + dy * dy);
    }
  }
  return 0.5 * std::sqrt(static_cast<double>(best));
}

}  // namespace

Loop::Loop(std::vector<int> slots, std::vector<Point> points, bool exterior)
    : slots_(std::move(slots)), points_(std::move(points)), exterior_(exterior) {
  if (points_.size() < 4) throw std::invalid_argument("Loop: fewer than four points");
  min_x_ = max_x_ = points_[0].x;
  min_y_ = max_y_ = points_[0].y;
  for (const Point& p : points_) {
    min_x_ = std::min(min_x_, p.x);
    max_x_ = std::max(max_x_, p.x);
    min_y_ = std::min(min_y_, p.y);
    max_y_ = std::max(max_y_, p.y);
  }
  diameter_ = hull_diameter(points_);

  const int rows = max_y_ - min_y_;
  std::vector<std::vector<std::pair<int, int>>> by_row(rows);
  const std::size_t n = points_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = points_[i];
    const Point b = points_[(i + 1) % n];
    if (std::abs(a.x - b.x) != 1 || std::abs(a.y - b.y) != 1) {
      throw std::invalid_argument("Loop: steps must be unit diagonals");
    }
    const Point lo = a.y < b.y ? a : b;
    const Point hi = a.y < b.y ? b : a;
    by_row[lo.y - min_y_].push_back({lo.x, hi.x - lo.x});
  }
  row_start_.assign(rows + 1, 0);
  row_x_.reserve(n);
  row_dir_.reserve(n);
  for (int r = 0; r < rows; ++r) {
    auto& v = by_row[r];
    std::sort(v.begin(), v.end());
    for (const auto& [x, dir] : v) {
      row_x_.push_back(x);
      row_dir_.push_back(static_cast<std::int8_t>(dir));
    }
    row_start_[r + 1] = static_cast<int>(row_x_.size());
  }
}

int Loop::crossings_right(int row, double x) const {
  const int i = row - min_y_;
  if (i < 0 || i >= max_y_ - min_y_) return 0;
  const auto first = row_x_.begin() + row_start_[i];
  const auto last = row_x_.begin() + row_start_[i + 1];
  return static_cast<int>(last - std::upper_bound(first, last, x));
}

bool Loop::encloses(double x, double y) const {
  const double xx = 2.0 * x;
  const double yy = 2.0 * y;
  if (yy < min_y_ || yy > max_y_ || xx < min_x_ || xx > max_x_) return false;
  const int row = static_cast<int>(std::floor(yy));
  const double t = yy - row;
  if (t == 0.0) return crossings_right(row, xx) % 2 == 1;
  const int i = row - min_y_;
  if (i < 0 || i >= max_y_ - min_y_) return false;
  int count = 0;
  for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) {
    if (row_x_[k] + row_dir_[k] * t > xx) ++count;
  }
  return count % 2 == 1;
}

bool Loop::encloses_by_winding(double x, double y) const {
  const double px = 2.0 * x;
  const double py = 2.0 * y;
  double total = 0.0;
  const std::size_t n = points_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double ax = points_[i].x - px;
    const double ay = points_[i].y - py;
    const double bx = points_[(i + 1) % n].x - px;
    const double by = points_[(i + 1) % n].y - py;
    total += std::atan2(ax * by - ay * bx, ax * bx + ay * by);
  }
  return std::abs(total) > std::numbers::pi;
}

bool Loop::encloses_face(int cx2, int cy2) const {
  if (cy2 < min_y_ || cy2 >= max_y_) return false;
  return crossings_right(cy2, cx2) % 2 == 1;
}

double Loop::distance_to(double x, double y) const {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = points_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = points_[i];
    const Point b = points_[(i + 1) % n];
    best = std::min(best, segment_distance(x, y, {0.5 * a.x, 0.5 * a.y}, {0.5 * b.x, 0.5 * b.y}));
  }
  return best;
}

bool Loop::intersects(const Disk& d) const {
  const double gap_x = std::max({0.5 * min_x_ - d.x, d.x - 0.5 * max_x_, 0.0});
  const double gap_y = std::max({0.5 * min_y_ - d.y, d.y - 0.5 * max_y_, 0.0});
  if (std::hypot(gap_x, gap_y) > d.r) return false;
  return distance_to(d.x, d.y) <= d.r;
}

double Loop::area_in(const Disk& d) const {
  const double gap_x = std::max({0.5 * min_x_ - d.x, d.x - 0.5 * max_x_, 0.0});
  const double gap_y = std::max({0.5 * min_y_ - d.y, d.y - 0.5 * max_y_, 0.0});
  if (std::hypot(gap_x, gap_y) > d.r) return 0.0;
  if (!intersects(d)) return encloses(d.x, d.y) ? std::numbers::pi * d.r * d.r : 0.0;
  const int x0 = std::max(min_x_, static_cast<int>(std::floor(2.0 * (d.x - d.r))) - 1);
  const int x1 = std::min(max_x_, static_cast<int>(std::ceil(2.0 * (d.x + d.r))) + 1);
  const int y0 = std::max(min_y_, static_cast<int>(std::floor(2.0 * (d.y - d.r))) - 1);
  const int y1 = std::min(max_y_, static_cast<int>(std::ceil(2.0 * (d.y + d.r))) + 1);
  double area = 0.0;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0 + ((x0 + y) & 1); x <= x1; x += 2) {
      const double a = disk_face_area(d, x, y);
      if (a > 0.0 && encloses_face(x, y)) area += a;
    }
  }
  return area;
}

LoopTracer::LoopTracer(const Domain& d, const FkConfig& cfg)
    : domain_(&d), cfg_(&cfg), medial_(d), wired_(cfg.bc.kind() == BoundarySpec::Kind::Wired) {
  if (static_cast<int>(cfg.open.size()) != d.num_edges()) {
    throw std::invalid_argument("LoopTracer: configuration does not match the domain");
  }
}

MedialSlot LoopTracer::partner(MedialSlot s) const {
  const int e = s.vertex;
  const bool open = (wired_ && domain_->is_perimeter_edge(e)) || cfg_->open[e] != 0;
  const bool horizontal = domain_->is_horizontal(e);
  return {e, horizontal == open ? (s.quadrant ^ 1) : (3 - s.quadrant)};
}

Loop LoopTracer::trace(MedialSlot s, std::vector<int>* seen) const {
  std::vector<int> slots;
  std::vector<Point> points;
  bool exterior = false;
  MedialSlot cur = s;
  do {
    points.push_back(domain_->edge_midpoint2(cur.vertex));
    const std::size_t before = points.size();
    const MedialSlot arrival = medial_.follow(cur, &points);
    if (points.size() - before > 1) exterior = true;
    points.pop_back();
    slots.push_back(cur.code());
    if (seen) {
      seen->push_back(cur.code());
      seen->push_back(arrival.code());
    }
    cur = partner(arrival);
  } while (!(cur == s));
  return Loop(std::move(slots), std::move(points), exterior);
}

LoopSet extract_loops(const Domain& d, const FkConfig& cfg) {
  const LoopTracer tracer(d, cfg);
  LoopSet out;
  const int codes = 4 * d.num_edges();
  out.owner.assign(codes, -2);
  std::vector<int> seen;
  for (int c = 0; c < codes; ++c) {
    if (out.owner[c] != -2) continue;
    seen.clear();
    Loop loop = tracer.trace(MedialSlot::from_code(c), &seen);
    int index = -1;
    if (!(tracer.wired() && loop.exterior())) {
      index = static_cast<int>(out.loops.size());
      out.loops.push_back(std::move(loop));
    }
    for (int s : seen) out.owner[s] = index;
  }
  return out;
}

void require_disjoint(std::span<const Disk> disks) {
  for (std::size_t i = 0; i < disks.size(); ++i) {
    if (!(disks[i].r > 0.0)) throw std::invalid_argument("disk radius must be positive");
    for (std::size_t j = i + 1; j < disks.size(); ++j) {
      const double dist = std::hypot(disks[i].x - disks[j].x, disks[i].y - disks[j].y);
      if (!(dist > disks[i].r + disks[j].r)) throw std::invalid_argument("balls overlap");
    }
  }
}

std::vector<Loop> loops_near(const Domain& d, const FkConfig& cfg, std::span<const Disk> disks) {
  const int n = d.half_width();
  std::vector<int> starts;
  auto add_vertex = [&](int e) {
    for (int q = 0; q < 4; ++q) starts.push_back(4 * e + q);
  };
  for (const Disk& disk : disks) {
    if (disk.x - disk.r < -n || disk.x + disk.r > n || disk.y - disk.r < -n || disk.y + disk.r > n) {
      throw std::invalid_argument("loops_near: disk leaves the box");
    }
    // Medial vertices near the disk catch every loop meeting it.
    const double reach = disk.r + 2.0;
    const int x0 = static_cast<int>(std::floor(2.0 * (disk.x - reach)));
    const int x1 = static_cast<int>(std::ceil(2.0 * (disk.x + reach)));
    const int y0 = static_cast<int>(std::floor(2.0 * (disk.y - reach)));
    const int y1 = static_cast<int>(std::ceil(2.0 * (disk.y + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0 + ((x0 + y + 1) & 1); x <= x1; x += 2) {
        if (std::hypot(0.5 * x - disk.x, 0.5 * y - disk.y) > reach) continue;
        if (const int e = d.edge_at_midpoint2({x, y}); e >= 0) add_vertex(e);
      }
    }
    // A loop surrounding the disk crosses the row of the nearest lattice
    // point at a horizontal-edge midpoint to its right.
    const int cx = static_cast<int>(std::lround(disk.x));
    const int cy = static_cast<int>(std::lround(disk.y));
    for (int x = std::max(cx, -n); x < n; ++x) add_vertex(d.horizontal_edge(x, cy));
  }
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
  std::vector<char> done(starts.size(), 0);

  const LoopTracer tracer(d, cfg);
  std::vector<Loop> out;
  std::vector<int> seen;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (done[i]) continue;
    seen.clear();
    Loop loop = tracer.trace(MedialSlot::from_code(starts[i]), &seen);
    for (int s : seen) {
      const auto it = std::lower_bound(starts.begin(), starts.end(), s);
      if (it != starts.end() && *it == s) done[it - starts.begin()] = 1;
    }
    if (tracer.wired() && loop.exterior()) continue;
    const bool keep = std::any_of(disks.begin(), disks.end(), [&](const Disk& disk) {
      return loop.encloses(disk.x, disk.y) || loop.intersects(disk);
    });
    if (keep) out.push_back(std::move(loop));
  }
  return out;
}

int SurroundResult::count() const {
  int c = 0;
  for (auto s : surrounds) c += s;
  return c;
}

SurroundResult surround_count(const Loop& loop, std::span<const Disk> disks) {
  require_disjoint(disks);
  SurroundResult r;
  r.surrounds.assign(disks.size(), 0);
  for (std::size_t i = 0; i < disks.size(); ++i) {
    const bool hit = loop.intersects(disks[i]);
    r.intersects_any = r.intersects_any || hit;
    r.surrounds[i] = (!hit && loop.encloses(disks[i].x, disks[i].y)) ? 1 : 0;
  }
  return r;
}

LoopClassification classify(std::span<const Loop> loops, std::span<const Disk> disks) {
  LoopClassification c;
  for (std::size_t i = 0; i < loops.size(); ++i) {
    SurroundResult s = surround_count(loops[i], disks);
    const int idx = static_cast<int>(i);
    if (!s.intersects_any) {
      c.free.push_back(idx);
      const int k = s.count();
      if (k % 2 == 1) c.odd.push_back(idx);
      if (disks.size() == 4 && k == 2) {
        c.two.push_back(idx);
        if (s.surrounds[0] + s.surrounds[1] == 1) c.two_one.push_back(idx);
      }
    }
    c.per_loop.push_back(std::move(s));
  }
  return c;
}

bool loop_tail_event(std::span<const Loop> loops, const Disk& ball, double eta, double lambda) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("loop_tail_event: need 0 < eta < 1");
  const double min_diameter = eta * ball.r / 2.0;
  int count = 0;
  for (const Loop& l : loops) {
    if (l.diameter() >= min_diameter && l.intersects(ball)) ++count;
  }
  return count > lambda / (eta * eta);
}

void write_loops(std::ostream& os, std::span<const Loop> loops) {
  os << "rcm4-loops v1 count=" << loops.size() << '\n';
  for (std::size_t i = 0; i < loops.size(); ++i) {
    const Loop& l = loops[i];
    os << "loop " << i << " points=" << l.points().size() << " exterior=" << (l.exterior() ? 1 : 0)
       << '\n';
    for (const Point& p : l.points()) os << p.x << ' ' << p.y << '\n';
  }
}

}  // namespace rcm4
