#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rcm4/lattice.hpp"
#include "rcm4/sampler.hpp"

namespace rcm4::tools {

using Logger = std::function<void(const std::string&)>;

/// Per-sample measurement: fills one value per column.
using Measure = std::function<void(const Domain&, const FkConfig&, std::vector<double>& row)>;

struct ChainJob {
  std::string label;
  int N = 0;
  Rational delta{1};
  BoundarySpec bc = BoundarySpec::free();
  ChainSchedule schedule;
  std::uint64_t seed = 0;
  std::uint64_t chain_index = 0;
  std::vector<std::string> columns;
  Measure measure;
  /// Called after each measured sample (e.g. to dump it). Jobs with a
  /// sink never resume from a checkpoint, since the sink's output would be
  /// incomplete.
  std::function<void(const FkConfig&, std::uint64_t sweep)> sink;
  int checkpoint_every = 0;  // sweeps, 0 = no checkpoints
  std::filesystem::path checkpoint_dir;
  /// Mixed into the checkpoint fingerprint (config hash, code version).
  std::string fingerprint_salt;

  std::string fingerprint() const;
};

struct ChainOutput {
  std::string label;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> series;  // [column][sample]
  std::uint64_t sweeps = 0;
  /// Chain time including any earlier run it was resumed from.
  double seconds = 0.0;
  bool resumed = false;

  const std::vector<double>& column(const std::string& name) const;
};

/// Runs one chain: burn-in, then n_samples measurements `thin` sweeps
/// apart. With checkpointing enabled, the chain state and the series so
/// far are written every `checkpoint_every` sweeps (atomically), and a
/// matching checkpoint is picked up on start. The output is bit-identical
/// with or without an interruption.
ChainOutput run_chain(const ChainJob& job, const Logger& log = {});

/// Runs jobs on a pool of `threads` workers. The result order follows the
/// job order, whatever the scheduling.
std::vector<ChainOutput> run_chains(const std::vector<ChainJob>& jobs, int threads, const Logger& log = {});

}  // namespace rcm4::tools
