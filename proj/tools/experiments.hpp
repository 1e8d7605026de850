#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "io.hpp"
#include "rcm4/observables.hpp"
#include "runner.hpp"

namespace rcm4::tools {

struct RunOptions {
  int threads = 1;
  std::filesystem::path out_dir;
  Logger log;
};

/// Executes a validated configuration and commits its outputs (CSV, JSON,
/// manifest) into options.out_dir. On any exception nothing but the
/// checkpoints is left behind.
Manifest run_experiment(const ExperimentConfig& config, const RunOptions& options);

/// Estimate for one column over several chains: every chain is cut into
/// batches of a common length (the largest automatic length among them),
/// and the batch tables are merged.
EstimatorResult column_estimate(std::span<const ChainOutput* const> chains, const std::string& column,
                                std::size_t batch_len = 0);
std::size_t common_batch_length(std::span<const ChainOutput* const> chains, std::span<const std::string> columns);

/// Equal-weight average of two estimates whose batch tables are paired by
/// position (independent chain families of the same length).
EstimatorResult average_pair(const EstimatorResult& a, const EstimatorResult& b);

/// results.json row with the batch table, as read back by the fit kind.
nlohmann::json result_row_json(const ResultRow& row);
std::string results_json(std::span<const ResultRow> rows, const ExperimentConfig& config);

}  // namespace rcm4::tools
