#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcm4/lattice.hpp"
#include "rcm4/sampler.hpp"

namespace rcm4::tools {

/// Raised for any problem with a configuration document. `field` is a
/// JSON-pointer-like path ("/schedule/thin").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& reason)
      : std::runtime_error(reason), field_(std::move(field)) {}
  const std::string& field() const { return field_; }
  /// error=invalid-config field=<path> reason="<text>"
  std::string line() const;

 private:
  std::string field_;
};

enum class Kind { Sample, Arms, Delta, TwoPoint, MFormula, Cdelta, Heights, Fit, Relations };

std::string to_string(Kind k);
Kind kind_from_string(const std::string& s);

/// A whole experiment. Every field has a default; the document only lists
/// what differs. Kind-specific parameters stay as JSON in `params` and are
/// checked by validate().
struct ExperimentConfig {
  Kind kind = Kind::Sample;
  int N = 16;
  Rational delta{1};
  std::string bc = "free";  // free | wired | both
  std::uint64_t seed = 1;
  int chains = 1;
  ChainSchedule schedule{128, 256, 2};
  int checkpoint_every = 0;  // sweeps between checkpoints, 0 = off
  nlohmann::json params = nlohmann::json::object();
  std::string output_dir;  // optional; not part of the hash

  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Canonical document with every default filled in.
  nlohmann::json to_json() const;
  /// First 16 hex digits of the SHA-256 of the canonical document,
  /// output_dir excluded.
  std::string hash() const;
  /// Throws ConfigError.
  void validate() const;

  std::vector<BoundarySpec> boundary_conditions() const;
};

/// Named kind-specific parameter accessors used by validate() and the
/// experiment drivers.
std::vector<int> int_list(const nlohmann::json& params, const std::string& key);
std::vector<double> double_list(const nlohmann::json& params, const std::string& key);

Rational parse_rational(const std::string& s);

const char* code_version();

}  // namespace rcm4::tools
