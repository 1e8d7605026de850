#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "rcm4/analysis.hpp"
#include "rcm4/gffpredict.hpp"
#include "rcm4/heightfield.hpp"
#include "rcm4/loops.hpp"

namespace rcm4::tools {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Aggregation helpers

std::size_t common_batch_length(std::span<const ChainOutput* const> chains, std::span<const std::string> columns) {
  std::size_t len = 1;
  std::size_t shortest = SIZE_MAX;
  for (const ChainOutput* c : chains) {
    for (const std::string& col : columns) {
      const std::vector<double>& s = c->column(col);
      shortest = std::min(shortest, s.size());
      len = std::max(len, auto_batch_length(s));
    }
  }
  // Keep at least kMinBatches batches per chain when the series allows it.
  if (shortest != SIZE_MAX && shortest >= kMinBatches) len = std::min(len, shortest / kMinBatches);
  return std::max<std::size_t>(1, len);
}

EstimatorResult column_estimate(std::span<const ChainOutput* const> chains, const std::string& column,
                                std::size_t batch_len) {
  if (batch_len == 0) {
    const std::string cols[] = {column};
    batch_len = common_batch_length(chains, cols);
  }
  std::vector<EstimatorResult> parts;
  std::uint64_t index = 0;
  for (const ChainOutput* c : chains) parts.push_back(batch_means(c->column(column), batch_len, index++));
  return merge(parts);
}

EstimatorResult average_pair(const EstimatorResult& a, const EstimatorResult& b) {
  EstimatorResult r;
  r.estimate = 0.5 * (a.estimate + b.estimate);
  r.std_error = 0.5 * std::hypot(a.std_error, b.std_error);
  r.n_eff = a.n_eff + b.n_eff;
  r.n_samples = a.n_samples + b.n_samples;
  const std::size_t n = std::min(a.batches.size(), b.batches.size());
  for (std::size_t i = 0; i < n; ++i) {
    Batch x = a.batches[i];
    x.mean = 0.5 * (a.batches[i].mean + b.batches[i].mean);
    x.size = a.batches[i].size + b.batches[i].size;
    x.sum_sq = 0.0;
    r.batches.push_back(x);
  }
  return r;
}

json result_row_json(const ResultRow& row) {
  json batches = json::array();
  for (const Batch& b : row.result.batches) batches.push_back(b.mean);
  return {{"observable", row.observable},
          {"r", row.r},
          {"R", row.R},
          {"eps", row.eps},
          {"x", row.x},
          {"y", row.y},
          {"N", row.N},
          {"delta", rcm4::to_string(row.delta)},
          {"bc", row.bc},
          {"estimate", row.result.estimate},
          {"stderr", row.result.std_error},
          {"n_eff", row.result.n_eff},
          {"n_samples", row.result.n_samples},
          {"batch_means", batches}};
}

std::string results_json(std::span<const ResultRow> rows, const ExperimentConfig& config) {
  json doc = {{"format", "rcm4-results v1"},
              {"config-hash", config.hash()},
              {"seed", config.seed},
              {"code-version", code_version()},
              {"rows", json::array()}};
  for (const ResultRow& r : rows) doc["rows"].push_back(result_row_json(r));
  return doc.dump(1) + "\n";
}

namespace {

std::string csv_results(std::span<const ResultRow> rows) {
  std::ostringstream os;
  write_results_csv(os, rows);
  return os.str();
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct Context {
  const ExperimentConfig& config;
  const RunOptions& options;
  OutputStage& stage;
  std::string hash;
  std::vector<ResultRow> rows;

  ResultRow row(const std::string& observable, const std::string& bc, const EstimatorResult& r) const {
    ResultRow row;
    row.observable = observable;
    row.N = config.N;
    row.delta = config.delta;
    row.bc = bc;
    row.result = r;
    row.seed = config.seed;
    row.config_hash = hash;
    row.code_version = code_version();
    return row;
  }
};

/// One job per (bc, chain). Chain indices are stable: 1000·bc + chain.
std::vector<ChainJob> make_jobs(const Context& ctx, const std::vector<std::string>& columns, const Measure& measure) {
  std::vector<ChainJob> jobs;
  const auto bcs = ctx.config.boundary_conditions();
  for (const BoundarySpec& bc : bcs) {
    const std::uint64_t bc_slot = bc.kind() == BoundarySpec::Kind::Wired ? 1 : 0;
    for (int c = 0; c < ctx.config.chains; ++c) {
      ChainJob j;
      j.label = bc.name() + "-" + std::to_string(c);
      j.N = ctx.config.N;
      j.delta = ctx.config.delta;
      j.bc = bc;
      j.schedule = ctx.config.schedule;
      j.seed = ctx.config.seed;
      j.chain_index = 1000 * bc_slot + static_cast<std::uint64_t>(c);
      j.columns = columns;
      j.measure = measure;
      j.checkpoint_every = ctx.config.checkpoint_every;
      j.checkpoint_dir = ctx.options.out_dir / "checkpoints";
      j.fingerprint_salt = ctx.hash + "|" + code_version();
      jobs.push_back(std::move(j));
    }
  }
  return jobs;
}

std::map<std::string, std::vector<const ChainOutput*>> by_bc(const std::vector<ChainOutput>& outs) {
  std::map<std::string, std::vector<const ChainOutput*>> m;
  for (const ChainOutput& o : outs) m[o.label.substr(0, o.label.rfind('-'))].push_back(&o);
  return m;
}

void write_series(Context& ctx, const std::vector<ChainOutput>& outs) {
  for (const ChainOutput& o : outs) {
    std::ostringstream os;
    os << "sample";
    for (const std::string& c : o.columns) os << ',' << csv_field(c);
    os << ",seed,config_hash,code_version\r\n";
    const std::size_t n = o.series.empty() ? 0 : o.series[0].size();
    for (std::size_t s = 0; s < n; ++s) {
      os << s;
      for (const auto& col : o.series) os << ',' << num(col[s]);
      os << ',' << ctx.config.seed << ',' << ctx.hash << ',' << code_version() << "\r\n";
    }
    ctx.stage.write("series/" + o.label + ".csv", os.str());
  }
}

std::vector<ChainOutput> run_jobs(Context& ctx, const std::vector<ChainJob>& jobs) {
  std::vector<ChainOutput> outs = run_chains(jobs, ctx.options.threads, ctx.options.log);
  write_series(ctx, outs);
  return outs;
}

// ---------------------------------------------------------------------------
// Kinds

void run_sample(Context& ctx) {
  const bool dump = ctx.config.params.value("dump", false);
  const std::vector<std::string> cols = {"density", "clusters"};
  Measure m = [](const Domain& d, const FkConfig& cfg, std::vector<double>& row) {
    row[0] = static_cast<double>(cfg.num_open()) / static_cast<double>(cfg.open.size());
    row[1] = clusters(d.graph(), cfg).count;
  };
  std::vector<ChainJob> jobs = make_jobs(ctx, cols, m);
  std::vector<std::shared_ptr<std::ofstream>> files;
  if (dump) {
    for (ChainJob& j : jobs) {
      auto f = std::make_shared<std::ofstream>(ctx.stage.file("samples/" + j.label + ".txt"));
      const Domain d(j.N, j.delta);
      write_sample_header(*f, {j.N, j.delta, j.bc.name(), j.seed, d.num_edges()});
      files.push_back(f);
      j.sink = [f](const FkConfig& cfg, std::uint64_t sweep) { write_sample_record(*f, cfg, sweep); };
    }
  }
  const auto outs = run_jobs(ctx, jobs);
  for (auto& f : files) f->close();
  for (const auto& [bc, chains] : by_bc(outs)) {
    for (const std::string& c : cols) ctx.rows.push_back(ctx.row(c, bc, column_estimate(chains, c)));
  }
}

void run_arms(Context& ctx) {
  const json& p = ctx.config.params;
  const int R = p.value("R", ctx.config.N);
  const std::vector<int> radii = int_list(p, "r");
  std::vector<int> ks = int_list(p, "k");
  if (ks.empty()) ks = {1};
  // pi1 columns first, then one block per requested k.
  std::vector<std::string> cols;
  for (int r : radii) cols.push_back("pi1_" + std::to_string(r));
  for (int k : ks) {
    for (int r : radii) cols.push_back("pi" + std::to_string(2 * k) + "_" + std::to_string(r));
  }
  Measure m = [radii, ks, R](const Domain& d, const FkConfig& cfg, std::vector<double>& row) {
    ArmProbe probe(d, cfg, R);
    std::size_t i = 0;
    std::vector<char> primal(radii.size());
    for (std::size_t j = 0; j < radii.size(); ++j) row[i++] = primal[j] = probe.primal_arm(radii[j]);
    for (int k : ks) {
      for (std::size_t j = 0; j < radii.size(); ++j) {
        if (k == 1) {
          row[i++] = primal[j] && probe.dual_arm(radii[j]);
        } else {
          row[i++] = radii[j] < R && crossing_clusters(d, cfg, radii[j], R) >= k;
        }
      }
    }
  };
  const auto outs = run_jobs(ctx, make_jobs(ctx, cols, m));
  for (const auto& [bc, chains] : by_bc(outs)) {
    const std::size_t len = common_batch_length(chains, cols);
    std::size_t i = 0;
    auto emit = [&](const std::string& obs, int r) {
      ResultRow row = ctx.row(obs, bc, column_estimate(chains, cols[i++], len));
      row.r = r;
      row.R = R;
      row.eps = static_cast<double>(r) / R;
      ctx.rows.push_back(row);
    };
    for (int r : radii) emit("pi1", r);
    for (int k : ks) {
      for (int r : radii) emit("pi" + std::to_string(2 * k), r);
    }
  }
}

void run_delta(Context& ctx) {
  const json& p = ctx.config.params;
  const std::vector<int> radii = int_list(p, "r");
  const int half = p.value("tile_half", 0);
  std::vector<std::string> cols;
  for (int r : radii) cols.push_back("cross_" + std::to_string(r));
  Measure m = [radii, half](const Domain& d, const FkConfig& cfg, std::vector<double>& row) {
    for (std::size_t j = 0; j < radii.size(); ++j) {
      row[j] = half > 0 ? tiled_square_crossing(d, cfg, radii[j], half) : symmetric_square_crossing(d, cfg, radii[j]);
    }
  };
  const auto outs = run_jobs(ctx, make_jobs(ctx, cols, m));
  const auto groups = by_bc(outs);
  std::vector<const ChainOutput*> all;
  for (const auto& o : outs) all.push_back(&o);
  const std::size_t len = common_batch_length(all, cols);
  for (std::size_t j = 0; j < radii.size(); ++j) {
    const EstimatorResult f = column_estimate(groups.at("free"), cols[j], len);
    const EstimatorResult w = column_estimate(groups.at("wired"), cols[j], len);
    for (const auto& [name, res] : {std::pair{"free", f}, std::pair{"wired", w}}) {
      ResultRow row = ctx.row("crossing", name, res);
      row.r = radii[j];
      row.R = ctx.config.N;
      row.eps = static_cast<double>(radii[j]) / ctx.config.N;
      ctx.rows.push_back(row);
    }
    ResultRow row = ctx.row("delta", "wired-free", difference(w, f));
    row.r = radii[j];
    row.R = ctx.config.N;
    row.eps = static_cast<double>(radii[j]) / ctx.config.N;
    ctx.rows.push_back(row);
  }
}

void run_two_point(Context& ctx) {
  const json& p = ctx.config.params;
  const std::vector<int> seps = int_list(p, "s");
  const int offset = p.value("offset", 0);
  std::vector<std::string> cols;
  for (int s : seps) cols.push_back("tp_" + std::to_string(s));
  Measure m = [seps, offset](const Domain& d, const FkConfig& cfg, std::vector<double>& row) {
    Connectivity conn(d, cfg);
    for (std::size_t j = 0; j < seps.size(); ++j) {
      row[j] = offset > 0 ? two_point_average(conn, seps[j], offset) : two_point_value(conn, seps[j]);
    }
  };
  const auto outs = run_jobs(ctx, make_jobs(ctx, cols, m));
  for (const auto& [bc, chains] : by_bc(outs)) {
    const std::size_t len = common_batch_length(chains, cols);
    for (std::size_t j = 0; j < seps.size(); ++j) {
      const EstimatorResult tp = column_estimate(chains, cols[j], len);
      for (const auto& [name, res] : {std::pair{"two_point", tp}, std::pair{"potts_correlation", potts_correlation(tp)}}) {
        ResultRow row = ctx.row(name, bc, res);
        row.x = seps[j];
        row.eps = static_cast<double>(seps[j]) / ctx.config.N;
        ctx.rows.push_back(row);
      }
    }
  }
}

struct Pattern {
  std::string name;
  TestFunction f;
  std::vector<double> x, y;
  double prediction = 0.0;
};

std::vector<Pattern> patterns_of(const json& p) {
  std::vector<Pattern> out;
  for (const json& pat : p.at("patterns")) {
    Pattern q;
    q.name = pat.at("type").get<std::string>();
    const double eps = pat.at("eps").get<double>();
    if (q.name == "two-ball") {
      const double dist = pat.at("distance").get<double>();
      q.f = TestFunction::two_ball(dist, eps);
      q.x = {dist, 0.0};
      q.y = {0.0, 0.0};
    } else {
      q.x = pat.at("x").get<std::vector<double>>();
      q.y = pat.at("y").get<std::vector<double>>();
      q.f = TestFunction::four_ball({q.x[0], q.x[1]}, {q.y[0], q.y[1]}, eps);
    }
    q.prediction = gff::gff_characteristic(q.f);
    out.push_back(q);
  }
  return out;
}

void run_mformula(Context& ctx) {
  const std::vector<Pattern> pats = patterns_of(ctx.config.params);
  std::vector<std::string> cols;
  for (std::size_t i = 0; i < pats.size(); ++i) cols.push_back("af_" + std::to_string(i));
  Measure m = [pats](const Domain& d, const FkConfig& cfg, std::vector<double>& row) {
    for (std::size_t i = 0; i < pats.size(); ++i) row[i] = af_value(d, cfg, pats[i].f);
  };
  const auto outs = run_jobs(ctx, make_jobs(ctx, cols, m));
  std::vector<const ChainOutput*> all;
  for (const auto& o : outs) all.push_back(&o);
  const std::size_t len = common_batch_length(all, cols);
  std::ostringstream table;
  table << "pattern,x1,x2,y1,y2,eps,bc,estimate_AF,stderr,n_eff,gff_characteristic,relative_difference,seed,"
           "config_hash,code_version\r\n";
  const auto groups = by_bc(outs);
  for (std::size_t i = 0; i < pats.size(); ++i) {
    std::vector<std::pair<std::string, EstimatorResult>> ests;
    for (const auto& [bc, chains] : groups) ests.emplace_back(bc, column_estimate(chains, cols[i], len));
    if (ests.size() == 2) ests.emplace_back("pooled", average_pair(ests[0].second, ests[1].second));
    for (const auto& [bc, est] : ests) {
      ResultRow row = ctx.row("af", bc, est);
      row.x = pats[i].x[0];
      row.y = pats[i].y[0];
      row.eps = pats[i].f.eps;
      ctx.rows.push_back(row);
      table << pats[i].name << ',' << num(pats[i].x[0]) << ',' << num(pats[i].x[1]) << ',' << num(pats[i].y[0]) << ','
            << num(pats[i].y[1]) << ',' << num(pats[i].f.eps) << ',' << bc << ',' << num(est.estimate) << ','
            << num(est.std_error) << ',' << num(est.n_eff) << ',' << num(pats[i].prediction) << ','
            << num((est.estimate - pats[i].prediction) / pats[i].prediction) << ',' << ctx.config.seed << ','
            << ctx.hash << ',' << code_version() << "\r\n";
    }
  }
  ctx.stage.write("mformula.csv", table.str());
}

void run_cdelta(Context& ctx) {
  const std::vector<int> eps = int_list(ctx.config.params, "eps");
  std::vector<std::string> cols;
  for (int e : eps) {
    cols.push_back("accepted_" + std::to_string(e));
    cols.push_back("value_" + std::to_string(e));
  }
  Measure m = [eps](const Domain& d, const FkConfig& cfg, std::vector<double>& row) {
    for (std::size_t j = 0; j < eps.size(); ++j) {
      const CdeltaSample s = cdelta_sample(d, cfg, eps[j]);
      row[2 * j] = s.accepted ? 1.0 : 0.0;
      row[2 * j + 1] = s.accepted ? s.value : 0.0;
    }
  };
  const auto outs = run_jobs(ctx, make_jobs(ctx, cols, m));
  std::vector<const ChainOutput*> chains;
  for (const auto& o : outs) chains.push_back(&o);
  const std::size_t len = common_batch_length(chains, cols);
  for (std::size_t j = 0; j < eps.size(); ++j) {
    const EstimatorResult den = column_estimate(chains, cols[2 * j], len);
    const EstimatorResult numer = column_estimate(chains, cols[2 * j + 1], len);
    if (den.estimate < kMinAcceptance) {
      throw std::runtime_error("cdelta: acceptance rate " + num(den.estimate) + " below " + num(kMinAcceptance) +
                               " at eps=" + std::to_string(eps[j]));
    }
    for (const auto& [name, res] : {std::pair{"cdelta", ratio(numer, den)}, std::pair{"cdelta_acceptance", den}}) {
      ResultRow row = ctx.row(name, "wired", res);
      row.eps = eps[j];
      row.R = ctx.config.N;
      ctx.rows.push_back(row);
    }
  }
}

void run_heights(Context& ctx) {
  if (ctx.config.N > 512) throw ConfigError("/N", "heights dumps are limited to N <= 512");
  const std::uint64_t orient_seed = ctx.config.params.value("orientation_seed", ctx.config.seed);
  std::vector<ChainJob> jobs = make_jobs(ctx, {}, {});
  for (ChainJob& j : jobs) {
    auto last = std::make_shared<FkConfig>();
    j.sink = [last](const FkConfig& cfg, std::uint64_t) { *last = cfg; };
    run_chain(j, ctx.options.log);
    const Domain d(j.N, j.delta);
    const LoopSet ls = extract_loops(d, *last);
    Engine rng = make_stream(orient_seed, j.chain_index);
    const HeightField h = height(d, orient(ls.loops, rng));
    std::ostringstream hs, lsout;
    write_heights(hs, h);
    write_loops(lsout, ls.loops);
    ctx.stage.write("heights/" + j.label + ".txt", hs.str());
    ctx.stage.write("loops/" + j.label + ".txt", lsout.str());
  }
}

void run_fit(Context& ctx) {
  const json& p = ctx.config.params;
  const fs::path input = p.at("input").get<std::string>();
  json doc;
  try {
    doc = json::parse(read_file(input));
  } catch (const std::exception& e) {
    throw std::runtime_error("fit: cannot read results file " + input.string() + ": " + e.what());
  }
  const std::string observable = p.at("observable").get<std::string>();
  const std::string bc = p.value("bc", std::string("pooled"));
  // Per N: eps -> (bc -> row)
  std::map<int, std::map<double, std::map<std::string, json>>> table;
  for (const json& row : doc.at("rows")) {
    if (row.at("observable") != observable) continue;
    table[row.at("N").get<int>()][row.at("eps").get<double>()][row.at("bc").get<std::string>()] = row;
  }
  auto series_for = [&](int n) {
    ScalingSeries s;
    s.observable = observable;
    s.N = n;
    s.bc = bc;
    for (auto it = table[n].rbegin(); it != table[n].rend(); ++it) {
      const auto& bcs = it->second;
      auto point = [&](const json& row) {
        ScalePoint pt{it->first, row.at("estimate").get<double>(), row.at("stderr").get<double>(),
                      row.at("batch_means").get<std::vector<double>>()};
        if (s.delta == Rational(1)) s.delta = parse_rational(row.at("delta").get<std::string>());
        return pt;
      };
      if (bc == "pooled" && bcs.count("free") && bcs.count("wired")) {
        ScalePoint a = point(bcs.at("free")), b = point(bcs.at("wired"));
        ScalePoint c{a.eps, 0.5 * (a.estimate + b.estimate), 0.5 * std::hypot(a.std_error, b.std_error), {}};
        for (std::size_t i = 0; i < std::min(a.batch_means.size(), b.batch_means.size()); ++i) {
          c.batch_means.push_back(0.5 * (a.batch_means[i] + b.batch_means[i]));
        }
        s.points.push_back(c);
      } else if (bcs.count(bc)) {
        s.points.push_back(point(bcs.at(bc)));
      } else if (bcs.size() == 1 && bc == "pooled") {
        s.points.push_back(point(bcs.begin()->second));
      }
    }
    return s;
  };
  if (table.empty()) throw std::runtime_error("fit: no rows for observable " + observable + " in " + input.string());
  FitOptions fo;
  fo.exclude_largest = p.value("exclude_largest", 2);
  fo.bootstrap = p.value("bootstrap", 1000);
  fo.seed = ctx.config.seed;
  std::vector<LadderFit> ladder;
  for (const auto& [n, unused] : table) {
    const ScalingSeries s = series_for(n);
    if (s.points.size() >= 4) ladder.push_back({n, fit_exponent(s, fo)});
  }
  const int top = table.rbegin()->first;
  const ScalingSeries main = series_for(top);
  main.validate();
  const ExponentFit fit = fit_exponent(main, fo);
  ctx.stage.write("fit.json", fit_report_json(main, fit, ladder, ctx.hash));
}

void run_relations(Context& ctx) {
  const json& p = ctx.config.params;
  const ScalingExponents s = scaling_relations(parse_rational(p.at("xi1").get<std::string>()),
                                               parse_rational(p.at("iota").get<std::string>()));
  const std::pair<const char*, Rational> items[] = {{"xi1", s.xi1},     {"iota", s.iota},   {"nu", s.nu},
                                                    {"beta", s.beta},   {"gamma", s.gamma}, {"alpha", s.alpha},
                                                    {"eta", s.eta},     {"volume_tail", s.volume_tail}};
  json doc = {{"config-hash", ctx.hash}, {"seed", ctx.config.seed}, {"code-version", code_version()}};
  std::ostringstream csv;
  csv << "exponent,value,decimal,seed,config_hash,code_version\r\n";
  for (const auto& [name, q] : items) {
    doc[name] = rcm4::to_string(q);
    csv << name << ',' << rcm4::to_string(q) << ',' << num(boost::rational_cast<double>(q)) << ',' << ctx.config.seed
        << ',' << ctx.hash << ',' << code_version() << "\r\n";
  }
  ctx.stage.write("relations.json", doc.dump(2) + "\n");
  ctx.stage.write("relations.csv", csv.str());
}

}  // namespace

Manifest run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  OutputStage stage(options.out_dir);
  Context ctx{config, options, stage, config.hash(), {}};
  stage.write("config.json", config.to_json().dump(2) + "\n");
  switch (config.kind) {
    case Kind::Sample: run_sample(ctx); break;
    case Kind::Arms: run_arms(ctx); break;
    case Kind::Delta: run_delta(ctx); break;
    case Kind::TwoPoint: run_two_point(ctx); break;
    case Kind::MFormula: run_mformula(ctx); break;
    case Kind::Cdelta: run_cdelta(ctx); break;
    case Kind::Heights: run_heights(ctx); break;
    case Kind::Fit: run_fit(ctx); break;
    case Kind::Relations: run_relations(ctx); break;
  }
  if (!ctx.rows.empty()) {
    stage.write("results.csv", csv_results(ctx.rows));
    stage.write("results.json", results_json(ctx.rows, config));
  }
  return stage.commit({{"kind", tools::to_string(config.kind)},
                       {"config-hash", ctx.hash},
                       {"seed", std::to_string(config.seed)},
                       {"code-version", code_version()}});
}

}  // namespace rcm4::tools
