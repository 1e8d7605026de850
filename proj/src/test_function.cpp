#include "rcm4/test_function.hpp"

#include <cmath>
#include <stdexcept>

namespace rcm4 {

void TestFunction::validate() const {
  if (!(eps > 0.0)) throw std::invalid_argument("test function: eps must be positive");
  if (centers.size() != charges.size()) {
    throw std::invalid_argument("test function: one charge per centre");
  }
  for (int q : charges) {
    if (q != 1 && q != -1) throw std::invalid_argument("test function: charges must be +1 or -1");
  }
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (std::size_t j = i + 1; j < centers.size(); ++j) {
      const double d = std::hypot(centers[i][0] - centers[j][0], centers[i][1] - centers[j][1]);
      if (!(d > 2.0 * eps)) throw std::invalid_argument("test function: balls overlap");
    }
  }
}

bool TestFunction::mean_zero() const {
  int total = 0;
  for (int q : charges) total += q;
  return total == 0;
}

std::vector<Disk> TestFunction::lattice_disks(double delta) const {
  std::vector<Disk> out;
  out.reserve(centers.size());
  for (const Vec2& c : centers) out.push_back({c[0] / delta, c[1] / delta, eps / delta});
  return out;
}

TestFunction TestFunction::two_ball(double separation, double eps) {
  TestFunction f;
  f.centers = {Vec2{-separation / 2, 0.0}, Vec2{separation / 2, 0.0}};
  f.charges = {1, -1};
  f.eps = eps;
  f.validate();
  return f;
}

TestFunction TestFunction::four_ball(Vec2 x, Vec2 y, double eps) {
  TestFunction f;
  f.centers = {Vec2{0.0, 0.0}, y, x, Vec2{x[0] + y[0], x[1] + y[1]}};
  f.charges = {1, 1, -1, -1};
  f.eps = eps;
  f.validate();
  return f;
}

}  // namespace rcm4
