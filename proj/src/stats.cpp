#include "rcm4/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace rcm4 {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double integrated_autocorrelation(std::span<const double> series, double window_c) {
  const std::size_t n = series.size();
  if (n < 4) return 0.5;
  const double m = mean(series);
  double c0 = 0.0;
  for (double x : series) c0 += (x - m) * (x - m);
  c0 /= static_cast<double>(n);
  if (c0 <= 0.0) return 0.5;
  double tau = 0.5;
  for (std::size_t t = 1; t < n / 2; ++t) {
    double ct = 0.0;
    for (std::size_t i = 0; i + t < n; ++i) ct += (series[i] - m) * (series[i + t] - m);
    ct /= static_cast<double>(n);
    tau += ct / c0;
    if (static_cast<double>(t) >= window_c * tau) break;
  }
  return std::max(tau, 0.5);
}

ChiSquare chi_square(const std::vector<double>& prob, const std::map<std::uint64_t, long>& counts, long n,
                     double min_expected) {
  ChiSquare out;
  double pooled_expected = 0.0;
  long pooled_observed = 0;
  int cells = 0;
  for (std::size_t w = 0; w < prob.size(); ++w) {
    const double expected = prob[w] * static_cast<double>(n);
    const auto it = counts.find(w);
    const long observed = it == counts.end() ? 0 : it->second;
    if (expected < min_expected) {
      pooled_expected += expected;
      pooled_observed += observed;
      continue;
    }
    out.statistic += (observed - expected) * (observed - expected) / expected;
    ++cells;
  }
  if (pooled_expected > 0.0) {
    out.statistic += (pooled_observed - pooled_expected) * (pooled_observed - pooled_expected) / pooled_expected;
    ++cells;
  }
  out.dof = cells - 1;
  out.quantile999 = boost::math::quantile(boost::math::chi_squared(out.dof), 0.999);
  return out;
}

}  // namespace rcm4
