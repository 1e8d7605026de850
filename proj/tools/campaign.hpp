#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "runner.hpp"

namespace rcm4::tools {

struct CampaignOptions {
  std::filesystem::path work_dir;
  int threads = 1;
  std::uint64_t seed = 20240917;
  /// Multiplies every sample count (and burn-in). 1 is the registered
  /// campaign; smaller values give a smoke run whose verdicts mean little.
  double scale = 1.0;
  long oracle_samples = 1000000;
  Logger log;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Runs the correctness suites and the Monte Carlo campaign and evaluates
/// every acceptance criterion. Chains checkpoint into work_dir, so a rerun
/// with the same code resumes (or simply reloads) finished chains. A full
/// report (acceptance.json, acceptance.csv) is written to work_dir.
std::vector<CriterionResult> run_acceptance(const CampaignOptions& options);

}  // namespace rcm4::tools
