#include "rcm4/heightfield.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace rcm4 {

OrientedLoops orient(std::span<const Loop> loops, Engine& rng) {
  OrientedLoops o{loops, {}};
  o.sign.reserve(loops.size());
  for (std::size_t i = 0; i < loops.size(); ++i) o.sign.push_back(uniform_sign(rng));
  return o;
}

HeightField::HeightField(const Domain& d) : domain_(&d), h_(d.medial().num_faces(), 0) {}

int HeightField::face_index(int cx2, int cy2) const {
  const Domain& d = *domain_;
  const int n = d.half_width();
  if (((cx2 + cy2) & 1) != 0) throw std::invalid_argument("HeightField: not a face centre");
  if ((cx2 & 1) == 0) {
    const Point v{cx2 / 2, cy2 / 2};
    return d.contains(v) ? d.vertex_index(v) : -1;
  }
  const int x = (cx2 - 1) / 2;
  const int y = (cy2 - 1) / 2;
  if (x < -n || x > n - 1 || y < -n || y > n - 1) return -1;
  return d.num_vertices() + d.dual_vertex_index(x, y);
}

int HeightField::at(int cx2, int cy2) const {
  const int f = face_index(cx2, cy2);
  return f < 0 ? 0 : h_[f];
}

void HeightField::add(int cx2, int cy2, int value) {
  const int f = face_index(cx2, cy2);
  if (f >= 0) h_[f] += value;
}

HeightField height(const Domain& d, const OrientedLoops& oriented) {
  if (oriented.sign.size() != oriented.loops.size()) {
    throw std::invalid_argument("height: one sign per loop");
  }
  HeightField h(d);
  const int lim = 2 * d.half_width();
  for (std::size_t i = 0; i < oriented.loops.size(); ++i) {
    const Loop& l = oriented.loops[i];
    const int y0 = std::max(l.min_y2(), -lim);
    const int y1 = std::min(l.max_y2(), lim);
    for (int y = y0; y <= y1; ++y) {
      const int x0 = std::max(l.min_x2(), -lim);
      const int x1 = std::min(l.max_x2(), lim);
      for (int x = x0 + ((x0 + y) & 1); x <= x1; x += 2) {
        if (l.encloses_face(x, y)) h.add(x, y, oriented.sign[i]);
      }
    }
  }
  return h;
}

namespace {

void require_inside(const Domain& d, std::span<const Disk> disks) {
  const double lim = d.half_width() - 1.0;
  for (const Disk& b : disks) {
    if (b.x - b.r < -lim || b.x + b.r > lim || b.y - b.r < -lim || b.y + b.r > lim) {
      throw std::invalid_argument("test function support touches the box boundary");
    }
  }
}

}  // namespace

double test_integral(const HeightField& h, const TestFunction& f) {
  f.validate();
  const Domain& d = h.domain();
  const std::vector<Disk> disks = f.lattice_disks(d.delta());
  require_inside(d, disks);
  double total = 0.0;
  for (std::size_t i = 0; i < disks.size(); ++i) {
    const Disk& b = disks[i];
    const double weight = f.charges[i] / (2.0 * b.r * b.r);
    const int x0 = static_cast<int>(std::floor(2.0 * (b.x - b.r))) - 1;
    const int x1 = static_cast<int>(std::ceil(2.0 * (b.x + b.r))) + 1;
    const int y0 = static_cast<int>(std::floor(2.0 * (b.y - b.r))) - 1;
    const int y1 = static_cast<int>(std::ceil(2.0 * (b.y + b.r))) + 1;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0 + ((x0 + y) & 1); x <= x1; x += 2) {
        const int hv = h.at(x, y);
        if (hv != 0) total += weight * hv * disk_face_area(b, x, y);
      }
    }
  }
  return total;
}

double loop_integral(const Loop& loop, const TestFunction& f, double delta) {
  const std::vector<Disk> disks = f.lattice_disks(delta);
  double total = 0.0;
  for (std::size_t i = 0; i < disks.size(); ++i) {
    const double a = loop.area_in(disks[i]);
    if (a != 0.0) total += f.charges[i] * a / (2.0 * disks[i].r * disks[i].r);
  }
  return total;
}

double cosine_product(std::span<const Loop> loops, const TestFunction& f, double delta) {
  double prod = 1.0;
  for (const Loop& l : loops) prod *= std::cos(loop_integral(l, f, delta));
  return prod;
}

void write_heights(std::ostream& os, const HeightField& h) {
  const Domain& d = h.domain();
  const int n = d.half_width();
  os << "rcm4-heights v1 N=" << n << '\n';
  os << "primal " << 2 * n + 1 << '\n';
  for (int y = n; y >= -n; --y) {
    for (int x = -n; x <= n; ++x) os << (x > -n ? " " : "") << h.at(2 * x, 2 * y);
    os << '\n';
  }
  os << "dual " << 2 * n << '\n';
  for (int y = n - 1; y >= -n; --y) {
    for (int x = -n; x <= n - 1; ++x) os << (x > -n ? " " : "") << h.at(2 * x + 1, 2 * y + 1);
    os << '\n';
  }
}

}  // namespace rcm4
