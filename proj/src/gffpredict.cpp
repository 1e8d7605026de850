#include "rcm4/gffpredict.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace rcm4::gff {

namespace {

constexpr double kPi = std::numbers::pi;

// Area of the intersection of two unit disks at distance r ∈ [0, 2].
double lens_area(double r) {
  if (r >= 2.0) return 0.0;
  return 2.0 * std::acos(r / 2.0) - 0.5 * r * std::sqrt(4.0 - r * r);
}

double integrate(const std::function<double(double)>& f, double a, double b, double* error) {
  static thread_local boost::math::quadrature::tanh_sinh<double> q;
  double err = 0.0;
  const double v = q.integrate(f, a, b, 1e-13, &err);
  if (error) *error += err;
  return v;
}

struct B0 {
  double value;
  double error;
};

const B0& b0_cached() {
  static const B0 cached = [] {
    double err = 0.0;
    const double integral = integrate(
        [](double r) { return 2.0 * kPi * r * std::log(r) * lens_area(r); }, 0.0, 2.0, &err);
    return B0{integral / (8.0 * kPi * kPi), err / (8.0 * kPi * kPi)};
  }();
  return cached;
}

}  // namespace

double b0() { return b0_cached().value; }
double b0_error() { return b0_cached().error; }

double b0_composite(int panels) {
  if (panels < 1) throw std::invalid_argument("b0_composite: need at least one panel");
  auto f = [](double r) { return r > 0.0 ? 2.0 * kPi * r * std::log(r) * lens_area(r) : 0.0; };
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double a = 2.0 * std::pow(static_cast<double>(i) / panels, 4);
    const double b = 2.0 * std::pow(static_cast<double>(i + 1) / panels, 4);
    total += boost::math::quadrature::gauss<double, 10>::integrate(f, a, b);
  }
  return total / (8.0 * kPi * kPi);
}

double b_eps(double dist, double eps, double* error) {
  if (!(dist > 0.0 && eps > 0.0)) throw std::invalid_argument("b_eps: need dist, eps > 0");
  const double lower = dist / eps;
  if (lower >= 2.0) return 0.0;
  // ∫_0^{2π} log|1 + s e^{iθ}| dθ = 2π log max(1, s), so only r > dist/ε counts.
  double err = 0.0;
  const double v = integrate(
      [&](double r) { return r * lens_area(r) * std::log(eps * r / dist); }, lower, 2.0, &err);
  if (error) *error += err / (4.0 * kPi);
  return v / (4.0 * kPi);
}

double b_eps_polar(double dist, double eps, double* error) {
  if (!(dist > 0.0 && eps > 0.0)) throw std::invalid_argument("b_eps_polar: need dist, eps > 0");
  // Integrand over the difference u = z − z', whose density is A(|u|):
  // (1/8π²) ∫_0^2 r A(r) ∫_0^{2π} log|1 + (εr/dist) e^{iθ}| dθ dr.
  double err = 0.0;
  auto angular = [&](double r) {
    const double s = eps * r / dist;
    auto f = [s](double t) { return std::log(std::hypot(1.0 + s * std::cos(t), s * std::sin(t))); };
    // Symmetric in θ ↔ −θ; the only possible singularity sits at θ = π.
    static thread_local boost::math::quadrature::tanh_sinh<double> q;
    double e = 0.0;
    const double v = 2.0 * q.integrate(f, 0.0, kPi, 1e-12, &e);
    err += 2.0 * e * r * lens_area(r);
    return v;
  };
  auto radial = [&](double r) { return r * lens_area(r) * angular(r); };
  const double kink = dist / eps;
  double total = 0.0;
  double outer_err = 0.0;
  if (kink < 2.0) {
    total = integrate(radial, 0.0, kink, &outer_err) + integrate(radial, kink, 2.0, &outer_err);
  } else {
    total = integrate(radial, 0.0, 2.0, &outer_err);
  }
  if (error) *error += (err + outer_err) / (8.0 * kPi * kPi);
  return total / (8.0 * kPi * kPi);
}

double self_term(double eps) { return kPi * kPi / 4.0 * std::log(eps) + 2.0 * kPi * kPi * b0(); }

double cross_term(double dist, double eps) {
  return kPi * kPi / 4.0 * std::log(dist) + 2.0 * kPi * kPi * b_eps(dist, eps);
}

double log_kernel(const TestFunction& f, double* error) {
  f.validate();
  double total = 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    total += self_term(f.eps);
    err += 2.0 * kPi * kPi * b0_error();
    for (std::size_t j = i + 1; j < f.size(); ++j) {
      const double d = std::hypot(f.centers[i][0] - f.centers[j][0], f.centers[i][1] - f.centers[j][1]);
      double e = 0.0;
      const double b = b_eps(d, f.eps, &e);
      total += 2.0 * f.charges[i] * f.charges[j] * (kPi * kPi / 4.0 * std::log(d) + 2.0 * kPi * kPi * b);
      err += 4.0 * kPi * kPi * e;
    }
  }
  if (error) *error += err;
  return total;
}

double gff_characteristic(const TestFunction& f) {
  f.validate();
  if (!f.mean_zero()) throw std::invalid_argument("gff_characteristic: F must be mean-zero");
  return std::exp(log_kernel(f) / (2.0 * kPi * kPi));
}

Prediction predict_two_ball(double dist, double eps) {
  if (!(eps > 0.0) || !(dist > 2.0 * eps)) {
    throw std::invalid_argument("predict_two_ball: need |x| > 2 eps");
  }
  Prediction p;
  p.pattern = "two-ball";
  p.x = {dist};
  p.eps = eps;
  p.b0 = b0();
  double err = 0.0;
  const double b = b_eps(dist, eps, &err);
  p.b_terms = {b};
  p.prefactor = std::exp(2.0 * p.b0 - 2.0 * b);
  p.value = p.prefactor * std::pow(eps / dist, 0.25);
  double kerr = 0.0;
  p.kernel = log_kernel(TestFunction::two_ball(dist, eps), &kerr);
  p.error_bound = p.value * (2.0 * b0_error() + 2.0 * err);
  return p;
}

Prediction predict_four_ball(Vec2 x, Vec2 y, double eps) {
  const double nx = std::hypot(x[0], x[1]);
  const double ny = std::hypot(y[0], y[1]);
  const double nplus = std::hypot(x[0] + y[0], x[1] + y[1]);
  const double nminus = std::hypot(x[0] - y[0], x[1] - y[1]);
  if (!(eps > 0.0) || !(std::min({nx, ny, nplus, nminus}) > 2.0 * eps)) {
    throw std::invalid_argument("predict_four_ball: need min(|x|,|y|,|x-y|,|x+y|) > 2 eps");
  }
  Prediction p;
  p.pattern = "four-ball";
  p.x = {x[0], x[1]};
  p.y = {y[0], y[1]};
  p.eps = eps;
  p.b0 = b0();
  double err = 0.0;
  const double bx = b_eps(nx, eps, &err);
  const double by = b_eps(ny, eps, &err);
  const double bp = b_eps(nplus, eps, &err);
  const double bm = b_eps(nminus, eps, &err);
  p.b_terms = {bx, by, bp, bm};
  p.prefactor = std::exp(4.0 * p.b0 - 4.0 * bx + 4.0 * by - 2.0 * bp - 2.0 * bm);
  p.value = p.prefactor * std::sqrt(eps) * std::sqrt(ny) /
            (std::sqrt(nx) * std::pow(nminus, 0.25) * std::pow(nplus, 0.25));
  p.kernel = log_kernel(TestFunction::four_ball(x, y, eps));
  p.error_bound = p.value * (4.0 * b0_error() + 4.0 * err);
  return p;
}

void write_predictions_csv(std::ostream& os, const std::vector<Prediction>& rows) {
  os << "pattern,x1,x2,y1,y2,eps,kernel,value,prefactor,b0,error_bound\r\n";
  os << std::setprecision(17);
  for (const Prediction& p : rows) {
    const double x1 = p.x.empty() ? 0.0 : p.x[0];
    const double x2 = p.x.size() > 1 ? p.x[1] : 0.0;
    const double y1 = p.y.empty() ? 0.0 : p.y[0];
    const double y2 = p.y.size() > 1 ? p.y[1] : 0.0;
    os << p.pattern << ',' << x1 << ',' << x2 << ',' << y1 << ',' << y2 << ',' << p.eps << ','
       << p.kernel << ',' << p.value << ',' << p.prefactor << ',' << p.b0 << ',' << p.error_bound
       << "\r\n";
  }
}

}  // namespace rcm4::gff
