#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace rcm4 {

/// Integrated autocorrelation time τ_int = 1/2 + Σ_{t≥1} ρ(t), summed with
/// Sokal's automatic window (stop at the first M with M ≥ c·τ_int(M)).
/// Returns 0.5 for series that are too short or constant.
double integrated_autocorrelation(std::span<const double> series, double window_c = 6.0);

double mean(std::span<const double> xs);
/// Unbiased sample variance (0 when fewer than two values).
double variance(std::span<const double> xs);

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double quantile999 = 0.0;
  bool pass() const { return statistic < quantile999; }
};

/// Pearson chi-square of observed counts against exact probabilities. Cells
/// with expected count below `min_expected` are pooled into one cell.
ChiSquare chi_square(const std::vector<double>& prob, const std::map<std::uint64_t, long>& counts, long n,
                     double min_expected = 5.0);

}  // namespace rcm4
