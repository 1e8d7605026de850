#include "config.hpp"

#include <fstream>
#include <set>

#include "io.hpp"
#include "rcm4/analysis.hpp"
#include "rcm4/test_function.hpp"

#ifndef RCM4_CODE_VERSION
#define RCM4_CODE_VERSION "unknown"
#endif

namespace rcm4::tools {

using nlohmann::json;

const char* code_version() { return RCM4_CODE_VERSION; }

std::string ConfigError::line() const {
  std::string reason = what();
  for (char& c : reason) {
    if (c == '"' || c == '\n' || c == '\r') c = '\'';
  }
  return "error=invalid-config field=" + (field_.empty() ? std::string("/") : field_) + " reason=\"" + reason + "\"";
}

namespace {

const std::pair<Kind, const char*> kKinds[] = {
    {Kind::Sample, "sample"}, {Kind::Arms, "arms"},       {Kind::Delta, "delta"},
    {Kind::TwoPoint, "two-point"}, {Kind::MFormula, "mformula"}, {Kind::Cdelta, "cdelta"},
    {Kind::Heights, "heights"}, {Kind::Fit, "fit"},         {Kind::Relations, "relations"},
};

void only_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where.empty() ? "/" : where, "expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw ConfigError(where + "/" + k, "unknown key");
  }
}

template <class T>
T get_as(const json& obj, const std::string& key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "/" + key, "wrong type");
  }
}

std::uint64_t get_u64(const json& obj, const std::string& key, const std::string& where, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ConfigError(where + "/" + key, "must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

int get_int(const json& obj, const std::string& key, const std::string& where, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number_integer()) throw ConfigError(where + "/" + key, "must be an integer");
  const long long v = obj.at(key).get<long long>();
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(where + "/" + key, "out of range");
  return static_cast<int>(v);
}

}  // namespace

std::string to_string(Kind k) {
  for (const auto& [kind, name] : kKinds) {
    if (kind == k) return name;
  }
  return "?";
}

Kind kind_from_string(const std::string& s) {
  for (const auto& [kind, name] : kKinds) {
    if (s == name) return kind;
  }
  throw ConfigError("/kind", "unknown experiment kind '" + s + "'");
}

Rational parse_rational(const std::string& s) {
  try {
    const auto slash = s.find('/');
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const long long v = std::stoll(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return Rational(v);
    }
    const long long num = std::stoll(s.substr(0, slash), &used);
    if (used != slash) throw std::invalid_argument(s);
    const std::string den_text = s.substr(slash + 1);
    const long long den = std::stoll(den_text, &used);
    if (used != den_text.size() || den == 0) throw std::invalid_argument(s);
    return Rational(num, den);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a rational: '" + s + "'");
  }
}

std::vector<int> int_list(const json& params, const std::string& key) {
  std::vector<int> out;
  if (!params.contains(key)) return out;
  const json& v = params.at(key);
  if (!v.is_array()) throw ConfigError("/params/" + key, "expected an array of integers");
  for (const json& x : v) {
    if (!x.is_number_integer()) throw ConfigError("/params/" + key, "expected an array of integers");
    out.push_back(x.get<int>());
  }
  return out;
}

std::vector<double> double_list(const json& params, const std::string& key) {
  std::vector<double> out;
  if (!params.contains(key)) return out;
  const json& v = params.at(key);
  if (!v.is_array()) throw ConfigError("/params/" + key, "expected an array of numbers");
  for (const json& x : v) {
    if (!x.is_number()) throw ConfigError("/params/" + key, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  only_keys(doc, "", {"kind", "N", "delta", "bc", "seed", "chains", "schedule", "checkpoint_every", "params", "output"});
  ExperimentConfig c;
  if (!doc.contains("kind")) throw ConfigError("/kind", "missing");
  c.kind = kind_from_string(get_as<std::string>(doc, "kind", "", ""));
  c.N = get_int(doc, "N", "", c.N);
  if (doc.contains("delta")) {
    const json& d = doc.at("delta");
    try {
      c.delta = d.is_string() ? parse_rational(d.get<std::string>()) : Rational(d.get<long long>());
    } catch (const std::exception& e) {
      throw ConfigError("/delta", "expected a rational such as \"1/64\"");
    }
  }
  c.bc = get_as<std::string>(doc, "bc", "", c.bc);
  c.seed = get_u64(doc, "seed", "", c.seed);
  c.chains = get_int(doc, "chains", "", c.chains);
  if (doc.contains("schedule")) {
    const json& s = doc.at("schedule");
    only_keys(s, "/schedule", {"burn_in", "samples", "thin"});
    c.schedule.burn_in = get_int(s, "burn_in", "/schedule", c.schedule.burn_in);
    c.schedule.n_samples = get_int(s, "samples", "/schedule", c.schedule.n_samples);
    c.schedule.thin = get_int(s, "thin", "/schedule", c.schedule.thin);
  }
  c.checkpoint_every = get_int(doc, "checkpoint_every", "", c.checkpoint_every);
  if (doc.contains("params")) {
    c.params = doc.at("params");
    if (!c.params.is_object()) throw ConfigError("/params", "expected an object");
  }
  if (doc.contains("output")) {
    const json& o = doc.at("output");
    only_keys(o, "/output", {"dir"});
    c.output_dir = get_as<std::string>(o, "dir", "/output", "");
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception&) {
    throw ConfigError("/", "cannot read config file " + path.string());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("/", std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(doc);
}

json ExperimentConfig::to_json() const {
  json doc = {
      {"kind", tools::to_string(kind)},
      {"N", N},
      {"delta", rcm4::to_string(delta)},
      {"bc", bc},
      {"seed", seed},
      {"chains", chains},
      {"schedule", {{"burn_in", schedule.burn_in}, {"samples", schedule.n_samples}, {"thin", schedule.thin}}},
      {"checkpoint_every", checkpoint_every},
      {"params", params},
  };
  if (!output_dir.empty()) doc["output"] = {{"dir", output_dir}};
  return doc;
}

std::string ExperimentConfig::hash() const {
  json doc = to_json();
  doc.erase("output");
  return sha256_hex(doc.dump()).substr(0, 16);
}

std::vector<BoundarySpec> ExperimentConfig::boundary_conditions() const {
  if (bc == "free") return {BoundarySpec::free()};
  if (bc == "wired") return {BoundarySpec::wired()};
  return {BoundarySpec::free(), BoundarySpec::wired()};
}

void ExperimentConfig::validate() const {
  if (N < 1 || N > 4096) throw ConfigError("/N", "must be in [1, 4096]");
  if (delta <= Rational(0)) throw ConfigError("/delta", "must be positive");
  if (bc != "free" && bc != "wired" && bc != "both") throw ConfigError("/bc", "must be free, wired or both");
  if (chains < 1 || chains > 1024) throw ConfigError("/chains", "must be in [1, 1024]");
  if (schedule.burn_in < 0) throw ConfigError("/schedule/burn_in", "must be >= 0");
  if (schedule.n_samples < 1) throw ConfigError("/schedule/samples", "must be >= 1");
  if (schedule.thin < 1) throw ConfigError("/schedule/thin", "must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("/checkpoint_every", "must be >= 0");

  const json& p = params;
  auto require_radius_list = [&](const std::string& key, int lo, int hi) {
    const std::vector<int> v = int_list(p, key);
    if (v.empty()) throw ConfigError("/params/" + key, "must be a nonempty list");
    for (int x : v) {
      if (x < lo || x > hi) {
        throw ConfigError("/params/" + key, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                                                std::to_string(hi) + "]");
      }
    }
    return v;
  };
  switch (kind) {
    case Kind::Sample:
      only_keys(p, "/params", {"dump"});
      if (p.contains("dump") && !p.at("dump").is_boolean()) throw ConfigError("/params/dump", "must be a boolean");
      break;
    case Kind::Arms: {
      only_keys(p, "/params", {"r", "R", "k"});
      const int R = get_int(p, "R", "/params", N);
      if (R < 1 || R > N) throw ConfigError("/params/R", "must be in [1, N]");
      require_radius_list("r", 0, R);
      if (p.contains("k")) require_radius_list("k", 1, 64);
      break;
    }
    case Kind::Delta: {
      only_keys(p, "/params", {"r", "tile_half"});
      if (bc != "both") throw ConfigError("/bc", "delta needs bc \"both\" (free and wired families)");
      const int half = get_int(p, "tile_half", "/params", 0);
      if (half < 0 || half > N) throw ConfigError("/params/tile_half", "must be in [0, N]");
      for (int r : require_radius_list("r", 1, N)) {
        if (half > 0 && (2 * half) % r != 0) throw ConfigError("/params/r", "each r must divide 2*tile_half");
      }
      break;
    }
    case Kind::TwoPoint: {
      only_keys(p, "/params", {"s", "offset"});
      const int offset = get_int(p, "offset", "/params", 0);
      if (offset < 0) throw ConfigError("/params/offset", "must be >= 0");
      for (int s : require_radius_list("s", 0, 2 * N)) {
        if (s - s / 2 + offset > N) throw ConfigError("/params/s", "separation " + std::to_string(s) + " leaves the box");
      }
      break;
    }
    case Kind::MFormula: {
      only_keys(p, "/params", {"patterns"});
      if (!p.contains("patterns") || !p.at("patterns").is_array() || p.at("patterns").empty()) {
        throw ConfigError("/params/patterns", "must be a nonempty list");
      }
      const double dlt = boost::rational_cast<double>(delta);
      int i = 0;
      for (const json& pat : p.at("patterns")) {
        const std::string where = "/params/patterns/" + std::to_string(i++);
        only_keys(pat, where, {"type", "distance", "x", "y", "eps"});
        const std::string type = get_as<std::string>(pat, "type", where, "");
        const double eps = get_as<double>(pat, "eps", where, 0.0);
        TestFunction f;
        try {
          if (type == "two-ball") {
            f = TestFunction::two_ball(get_as<double>(pat, "distance", where, 0.0), eps);
          } else if (type == "four-ball") {
            const auto x = get_as<std::vector<double>>(pat, "x", where, {});
            const auto y = get_as<std::vector<double>>(pat, "y", where, {});
            if (x.size() != 2 || y.size() != 2) throw ConfigError(where, "x and y must be 2-vectors");
            f = TestFunction::four_ball({x[0], x[1]}, {y[0], y[1]}, eps);
          } else {
            throw ConfigError(where + "/type", "must be two-ball or four-ball");
          }
          f.validate();
        } catch (const std::invalid_argument& e) {
          throw ConfigError(where, e.what());
        }
        for (const Disk& dk : f.lattice_disks(dlt)) {
          if (std::max(std::abs(dk.x), std::abs(dk.y)) + dk.r + 1.0 > N) {
            throw ConfigError(where, "a ball leaves the box");
          }
        }
      }
      break;
    }
    case Kind::Cdelta: {
      only_keys(p, "/params", {"eps"});
      if (bc != "wired") throw ConfigError("/bc", "cdelta samples must be drawn under wired bc");
      for (int e : require_radius_list("eps", 1, N)) {
        if (N < 32 * e) throw ConfigError("/params/eps", "need N >= 32 eps for eps=" + std::to_string(e));
      }
      break;
    }
    case Kind::Heights:
      only_keys(p, "/params", {"orientation_seed"});
      break;
    case Kind::Fit: {
      only_keys(p, "/params", {"input", "observable", "bc", "exclude_largest", "bootstrap"});
      if (get_as<std::string>(p, "input", "/params", "").empty()) throw ConfigError("/params/input", "missing");
      if (get_as<std::string>(p, "observable", "/params", "").empty()) throw ConfigError("/params/observable", "missing");
      const int ex = get_int(p, "exclude_largest", "/params", 2);
      if (ex < 0) throw ConfigError("/params/exclude_largest", "must be >= 0");
      if (get_int(p, "bootstrap", "/params", 1000) < 1000) throw ConfigError("/params/bootstrap", "must be >= 1000");
      break;
    }
    case Kind::Relations: {
      only_keys(p, "/params", {"xi1", "iota"});
      for (const char* key : {"xi1", "iota"}) {
        try {
          parse_rational(get_as<std::string>(p, key, "/params", ""));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("/params/") + key, e.what());
        }
      }
      break;
    }
  }
}

}  // namespace rcm4::tools
