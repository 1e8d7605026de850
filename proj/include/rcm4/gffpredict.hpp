#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rcm4/test_function.hpp"

namespace rcm4::gff {

/// b₀ = (1/8π²) ∬_{B₁×B₁} log|z − z'|, by one-dimensional quadrature over
/// the distance density 2πr·A(r), A the area of the lens of two unit disks
/// at distance r. Computed once and cached.
double b0();
/// Quadrature error estimate attached to b0().
double b0_error();

/// Independent refinement route for b₀: composite 10-point Gauss–Legendre
/// on `panels` panels graded toward r = 0 (nodes 2(i/panels)^4). Doubling
/// `panels` halves the step in the graded variable.
double b0_composite(int panels);

/// b_ε(x) = (1/8π²) ∬_{B₁×B₁} log(|x + ε(z − z')| / |x|) for |x| = dist.
/// The angular integral is done in closed form (Jensen's formula), which
/// leaves a radial integral that vanishes identically when dist ≥ 2ε.
double b_eps(double dist, double eps, double* error = nullptr);

/// Same quantity by direct adaptive quadrature in polar coordinates, with
/// no use of the mean-value property. Slow; used to validate b_eps.
double b_eps_polar(double dist, double eps, double* error = nullptr);

/// (1/4ε⁴) ∬_{B_ε×B_ε} log|z − z'| = (π²/4) log ε + 2π² b₀.
double self_term(double eps);
/// (1/4ε⁴) ∬_{B_ε(0)×B_ε(x)} log|z − z'| = (π²/4) log|x| + 2π² b_ε(x).
double cross_term(double dist, double eps);

/// ∬ F(z)F(z') log|z − z'| dz dz'. Any charges; balls must be disjoint.
double log_kernel(const TestFunction& f, double* error = nullptr);

/// exp((1/2π²) log_kernel(F)); F must be mean-zero.
double gff_characteristic(const TestFunction& f);

struct Prediction {
  std::string pattern;
  std::vector<double> x;  // |x| for two balls, (x1, x2) for four balls
  std::vector<double> y;
  double eps = 0.0;
  double kernel = 0.0;
  double value = 0.0;
  double b0 = 0.0;
  std::vector<double> b_terms;  // the b_ε values entering the prefactor
  double prefactor = 0.0;       // a_ε(x) or a_ε(x, y)
  double error_bound = 0.0;
};

/// a_ε(x)(ε/|x|)^{1/4} with a_ε(x) = exp(2b₀ − 2b_ε(x)); requires |x| > 2ε.
Prediction predict_two_ball(double dist, double eps);

/// Four balls, charges + at 0 and y, − at x and x + y:
///   a_ε(x,y) ε^{1/2}|y|^{1/2} / (|x|^{1/2}|x−y|^{1/4}|x+y|^{1/4}),
/// a_ε(x,y) = exp(4b₀ − 4b_ε(x) + 4b_ε(y) − 2b_ε(x+y) − 2b_ε(x−y)).
/// Requires min(|x|, |y|, |x−y|, |x+y|) > 2ε.
Prediction predict_four_ball(Vec2 x, Vec2 y, double eps);

/// CSV with header pattern,x1,x2,y1,y2,eps,kernel,value,prefactor,b0,error_bound.
void write_predictions_csv(std::ostream& os, const std::vector<Prediction>& rows);

}  // namespace rcm4::gff
