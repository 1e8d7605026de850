#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <iomanip>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "checks.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "io.hpp"

namespace rcm4::tools {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string quoted(const std::string& s) {
  std::string q = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') q += '\\';
    q += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return q + "\"";
}

int run_command(const fs::path& config_path, std::optional<std::uint64_t> seed, int threads,
                const std::string& out_arg, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::load(config_path);
    if (seed) cfg.seed = *seed;
    cfg.validate();
  } catch (const ConfigError& e) {
    err << e.line() << "\n";
    return kExitInvalidConfig;
  }
  fs::path out_dir;
  if (!out_arg.empty()) {
    out_dir = out_arg;
  } else if (!cfg.output_dir.empty()) {
    out_dir = cfg.output_dir;
  } else {
    out_dir = default_output_root() / (tools::to_string(cfg.kind) + "-" + cfg.hash());
  }
  RunOptions opts;
  opts.threads = threads;
  opts.out_dir = out_dir;
  opts.log = [&err](const std::string& m) { err << "[rcm4] " << m << "\n" << std::flush; };
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Manifest m = run_experiment(cfg, opts);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << "ok kind=" << tools::to_string(cfg.kind) << " config-hash=" << cfg.hash() << " files=" << m.entries.size()
        << " out=" << out_dir.string() << " seconds=" << std::fixed << std::setprecision(1) << secs << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << e.line() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    err << "error=runtime reason=" << quoted(e.what()) << "\n";
    return kExitRuntime;
  }
}

int verify_command(const std::string& goldens, const std::string& out_arg, std::optional<std::uint64_t> seed,
                   long oracle_samples, std::ostream& out, std::ostream& err) {
  CheckOptions o;
  if (!goldens.empty()) o.goldens = goldens;
  if (seed) o.seed = *seed;
  if (oracle_samples > 0) o.oracle_samples = oracle_samples;
  const std::vector<CheckResult> results = run_fast_suites(o);
  json doc = {{"code-version", code_version()}, {"seed", o.seed}, {"suites", json::array()}};
  bool all = true;
  for (const CheckResult& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << std::fixed << std::setprecision(1) << r.seconds
        << " s): " << r.detail << "\n";
    doc["suites"].push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}});
    all = all && r.passed;
  }
  doc["passed"] = all;
  if (!out_arg.empty()) {
    try {
      OutputStage stage(out_arg);
      stage.write("verify.json", doc.dump(2) + "\n");
      stage.commit({{"kind", "verify"}, {"seed", std::to_string(o.seed)}, {"code-version", code_version()}});
    } catch (const std::exception& e) {
      err << "error=runtime reason=" << quoted(e.what()) << "\n";
      return kExitRuntime;
    }
  }
  out << (all ? "verify: all suites passed" : "verify: FAILED") << "\n";
  return all ? kExitOk : kExitFailure;
}

int report_command(const std::string& out_arg, const fs::path& config_path, std::ostream& out, std::ostream& err) {
  fs::path dir = out_arg;
  if (dir.empty()) {
    if (config_path.empty()) {
      err << "error=usage reason=\"report needs --out DIR or --config PATH\"\n";
      return kExitUsage;
    }
    try {
      const ExperimentConfig cfg = ExperimentConfig::load(config_path);
      dir = cfg.output_dir.empty() ? default_output_root() / (tools::to_string(cfg.kind) + "-" + cfg.hash())
                                   : fs::path(cfg.output_dir);
    } catch (const ConfigError& e) {
      err << e.line() << "\n";
      return kExitInvalidConfig;
    }
  }
  Manifest m;
  try {
    m = Manifest::parse(read_file(dir / kManifestName));
  } catch (const std::exception& e) {
    err << "error=missing-manifest dir=" << quoted(dir.string()) << " reason=" << quoted(e.what()) << "\n";
    return kExitFailure;
  }
  for (const auto& [k, v] : m.meta) out << k << ": " << v << "\n";
  const std::vector<std::string> bad = m.verify(dir);
  out << "files: " << m.entries.size() << ", checksum mismatches: " << bad.size() << "\n";
  for (const std::string& b : bad) out << "MISMATCH " << b << "\n";
  if (fs::exists(dir / "results.json")) {
    try {
      const json doc = json::parse(read_file(dir / "results.json"));
      for (const json& r : doc.at("rows")) {
        std::ostringstream line;
        line << std::left << std::setw(18) << r.at("observable").get<std::string>() << std::setw(12)
             << r.at("bc").get<std::string>() << " N=" << r.at("N").get<int>() << " r=" << r.at("r").get<double>()
             << " eps=" << r.at("eps").get<double>() << "  " << std::setprecision(6) << r.at("estimate").get<double>()
             << " +- " << r.at("stderr").get<double>();
        out << line.str() << "\n";
      }
    } catch (const std::exception& e) {
      err << "error=corrupted-results reason=" << quoted(e.what()) << "\n";
      return kExitFailure;
    }
  }
  if (fs::exists(dir / "fit.json")) {
    const json fit = json::parse(read_file(dir / "fit.json"));
    out << "fit: " << fit.dump() << "\n";
  }
  out << (bad.empty() ? "report: manifest verified" : "report: MANIFEST MISMATCH") << "\n";
  return bad.empty() ? kExitOk : kExitFailure;
}

}  // namespace

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"rcm4: critical FK(q=4) random-cluster sampler and measurements"};
  app.require_subcommand(1);

  std::string config_path, out_dir, goldens;
  std::uint64_t seed_value = 0;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  long oracle_samples = 0;

  CLI::App* run = app.add_subcommand("run", "run an experiment described by a JSON config");
  run->add_option("--config", config_path, "experiment configuration (JSON)")->required();
  CLI::Option* run_seed = run->add_option("--seed", seed_value, "override the configuration seed");
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory (default $RCM4_OUT/<kind>-<hash>)");

  CLI::App* verify = app.add_subcommand("verify", "run the fast correctness suites");
  verify->add_option("--goldens", goldens, "golden values file");
  CLI::Option* verify_seed = verify->add_option("--seed", seed_value, "seed for the Monte Carlo suites");
  verify->add_option("--threads", threads, "accepted for symmetry; the suites are serial");
  verify->add_option("--out", out_dir, "write verify.json and a manifest here");
  verify->add_option("--config", config_path, "ignored; accepted for symmetry");
  verify->add_option("--oracle-samples", oracle_samples, "samples per graph in the enumeration oracle");

  CLI::App* report = app.add_subcommand("report", "check an output directory and summarise it");
  report->add_option("--out", out_dir, "output directory");
  report->add_option("--config", config_path, "locate the default output directory of this config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error=usage reason=" << quoted(e.what()) << "\n";
    return kExitUsage;
  }
  if (run->parsed()) {
    return run_command(config_path, run_seed->count() ? std::optional(seed_value) : std::nullopt, threads, out_dir,
                       out, err);
  }
  if (verify->parsed()) {
    return verify_command(goldens, out_dir, verify_seed->count() ? std::optional(seed_value) : std::nullopt,
                          oracle_samples, out, err);
  }
  return report_command(out_dir, config_path, out, err);
}

}  // namespace rcm4::tools
