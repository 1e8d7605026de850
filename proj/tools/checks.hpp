#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rcm4/lattice.hpp"
#include "rcm4/sampler.hpp"

namespace rcm4::tools {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct CheckOptions {
  /// Thinned samples per (graph, bc) in the enumeration-oracle suite.
  long oracle_samples = 200000;
  int oracle_thin = 10;
  int bkw_configs = 100;
  int euler_random = 10000;
  std::uint64_t seed = 20240601;
  std::filesystem::path goldens;
};

/// Swendsen–Wang chains on small graphs against exact enumeration.
CheckResult check_sampler_oracle(const CheckOptions& o);
/// Orientation average of exp(i∫F h) against the cosine product.
CheckResult check_bkw_identity(const CheckOptions& o);
/// Loop count against k(ω) + k(ω*) − 1.
CheckResult check_euler(const CheckOptions& o);
/// Quadrature values against the refinement oracle and the goldens file.
CheckResult check_quadrature(const CheckOptions& o);
CheckResult check_scaling_relations(const CheckOptions& o);

std::vector<CheckResult> run_fast_suites(const CheckOptions& o);

/// Components of ω* on the box: free boundary conditions add the exterior
/// face, which every closed perimeter edge joins.
int dual_components(const Domain& d, const FkConfig& cfg);

std::filesystem::path default_goldens_path();

}  // namespace rcm4::tools
