#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcm4/lattice.hpp"
#include "rcm4/observables.hpp"

namespace rcm4 {

/// One scale of a scaling series: ε = r/R (or |x|/N), the estimate of
/// υ(εN, N), its standard error and the batch means behind it.
struct ScalePoint {
  double eps = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::vector<double> batch_means;

  static ScalePoint from(double eps, const EstimatorResult& r);
};

struct ScalingSeries {
  std::string observable;
  int N = 0;
  Rational delta{1};
  std::string bc;
  std::vector<ScalePoint> points;

  /// Throws unless ε is strictly decreasing and every estimate is positive.
  void validate() const;
};

struct FitOptions {
  /// Drop the `exclude_largest` largest-ε points before fitting.
  int exclude_largest = 2;
  int bootstrap = 1000;
  std::uint64_t seed = 1;
  double level = 0.95;
};

/// Slope of log υ against log ε.
struct ExponentFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;  // weighted least squares
  double ci_low = 0.0;
  double ci_high = 0.0;
  double bootstrap_se = 0.0;
  int bootstrap_used = 0;
  std::vector<double> used_eps;
  std::vector<double> residuals;  // standardised, per used point
  double chi2 = 0.0;
  int dof = 0;
};

/// Weighted least squares of log(estimate) on log(ε), weights (estimate /
/// stderr)², with a bootstrap over batch means for the interval. Needs at
/// least four points, and three after exclusion.
ExponentFit fit_exponent(const ScalingSeries& series, const FitOptions& options = {});

/// Fit report as a JSON document.
struct LadderFit {
  int N = 0;
  ExponentFit fit;
};
std::string fit_report_json(const ScalingSeries& series, const ExponentFit& fit,
                            const std::vector<LadderFit>& ladder, const std::string& config_hash);

// ---------------------------------------------------------------------------

struct Scaled {
  double value = 0.0;
  double std_error = 0.0;
};

/// One quasi-multiplicativity triple r ≤ ρ ≤ R with π(r,ρ), π(ρ,R), π(r,R).
struct QmTriple {
  double r = 0.0, rho = 0.0, R = 0.0;
  Scaled inner, outer, whole;
};

struct QmEntry {
  QmTriple triple;
  double ratio = 0.0;  // π(r,R) / (π(r,ρ) π(ρ,R))
  double std_error = 0.0;
  bool violates = false;
};

struct QmReport {
  std::vector<QmEntry> entries;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double band = 1.0;  // smallest C with every ratio in [1/C, C]
  double tested_c = 0.0;
  int violations = 0;
};

/// A triple violates the band [1/C, C] when its ratio lies outside by more
/// than `sigmas` standard errors. Throws on inconsistent scales or
/// nonpositive inputs.
QmReport quasi_mult_audit(const std::vector<QmTriple>& triples, double c, double sigmas = 2.0);

// ---------------------------------------------------------------------------

struct ScalingExponents {
  Rational xi1, iota;
  Rational nu, beta, gamma, alpha, eta, volume_tail;
};

/// ν = 1/(2−ι), β = ξ₁ν, γ = (2−2ξ₁)ν, α = 2−2ν, η = 2ξ₁, volume tail
/// ξ₁/(2−ξ₁). Needs 0 ≤ ξ₁ < 1 and 0 < ι < 2.
ScalingExponents scaling_relations(Rational xi1, Rational iota);

std::string to_string(const Rational& q);

}  // namespace rcm4
