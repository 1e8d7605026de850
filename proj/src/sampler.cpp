#include "rcm4/sampler.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <new>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rcm4/stats.hpp"

namespace rcm4 {

void ModelParams::validate() const {
  if (!(p > 0.0 && p < 1.0) && p != 1.0) throw std::invalid_argument("ModelParams: p must lie in (0,1]");
  if (q < 1) throw std::invalid_argument("ModelParams: q must be a positive integer");
}

FkConfig FkConfig::all_closed(const Graph& g, BoundarySpec bc) {
  return FkConfig{std::vector<std::uint8_t>(g.num_edges(), 0), std::move(bc)};
}

FkConfig FkConfig::all_open(const Graph& g, BoundarySpec bc) {
  return FkConfig{std::vector<std::uint8_t>(g.num_edges(), 1), std::move(bc)};
}

FkConfig FkConfig::from_bits(const Graph& g, std::uint64_t bits, BoundarySpec bc) {
  FkConfig c = all_closed(g, std::move(bc));
  for (int e = 0; e < g.num_edges(); ++e) c.open[e] = static_cast<std::uint8_t>((bits >> e) & 1U);
  return c;
}

int FkConfig::num_open() const { return std::accumulate(open.begin(), open.end(), 0); }

void UnionFind::reset(int n) {
  parent_.resize(n);
  std::iota(parent_.begin(), parent_.end(), 0);
  size_.assign(n, 1);
  components_ = n;
}

bool UnionFind::unite(int a, int b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  --components_;
  return true;
}

namespace {

// Union-find over ω^ξ with one virtual vertex per wiring group.
void build_clusters(const Graph& g, const FkConfig& cfg, const std::vector<int>& wiring, int groups,
                    UnionFind& uf) {
  uf.reset(g.num_vertices + groups);
  for (int v = 0; v < g.num_vertices; ++v) {
    if (wiring[v] >= 0) uf.unite(v, g.num_vertices + wiring[v]);
  }
  for (int e = 0; e < g.num_edges(); ++e) {
    if (cfg.open[e]) uf.unite(g.edges[e][0], g.edges[e][1]);
  }
}

int draw_color(Engine& rng, int q) {
  if (q == 4) return uniform_color4(rng);
  return static_cast<int>(((rng() >> 32) * static_cast<std::uint64_t>(q)) >> 32);
}

}  // namespace

Clusters clusters(const Graph& g, const FkConfig& cfg) {
  const auto wiring = cfg.bc.wiring(g);
  const int groups = cfg.bc.num_groups(g);
  UnionFind uf;
  build_clusters(g, cfg, wiring, groups, uf);
  Clusters c;
  c.num_graph_vertices = g.num_vertices;
  c.root.resize(g.num_vertices + groups);
  for (int v = 0; v < g.num_vertices + groups; ++v) c.root[v] = uf.find(v);
  // Virtual vertices of empty groups would be spurious components.
  std::vector<char> used(groups, 0);
  for (int v = 0; v < g.num_vertices; ++v) {
    if (wiring[v] >= 0) used[wiring[v]] = 1;
  }
  c.count = uf.components();
  for (int i = 0; i < groups; ++i) c.count -= used[i] ? 0 : 1;
  return c;
}

namespace {

void es_update_wired(const Graph& g, FkConfig& cfg, const std::vector<int>& wiring, int groups,
                     const ModelParams& params, Engine& rng) {
  thread_local UnionFind uf;
  build_clusters(g, cfg, wiring, groups, uf);

  const int total = g.num_vertices + groups;
  thread_local std::vector<std::int8_t> root_color;
  root_color.assign(total, -1);
  if (cfg.bc.kind() == BoundarySpec::Kind::Wired && groups == 1) {
    root_color[uf.find(g.num_vertices)] = 0;
  }
  thread_local std::vector<std::int8_t> color;
  color.resize(g.num_vertices);
  for (int v = 0; v < g.num_vertices; ++v) {
    const int r = uf.find(v);
    if (root_color[r] < 0) root_color[r] = static_cast<std::int8_t>(draw_color(rng, params.q));
    color[v] = root_color[r];
  }
  const double p = params.p;
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto& ends = g.edges[e];
    cfg.open[e] = (color[ends[0]] == color[ends[1]] && uniform01(rng) < p) ? 1 : 0;
  }
}

}  // namespace

void es_update(const Graph& g, FkConfig& cfg, const ModelParams& params, Engine& rng) {
  es_update_wired(g, cfg, cfg.bc.wiring(g), cfg.bc.num_groups(g), params, rng);
}

FkConfig es_updated(const Graph& g, FkConfig cfg, const ModelParams& params, Engine& rng) {
  es_update(g, cfg, params, rng);
  return cfg;
}

PottsConfig potts_from_fk(const Graph& g, const FkConfig& cfg, Engine& rng) {
  const auto wiring = cfg.bc.wiring(g);
  const int groups = cfg.bc.num_groups(g);
  UnionFind uf;
  build_clusters(g, cfg, wiring, groups, uf);
  std::vector<std::int8_t> root_color(g.num_vertices + groups, -1);
  PottsConfig out;
  out.color.resize(g.num_vertices);
  for (int v = 0; v < g.num_vertices; ++v) {
    const int r = uf.find(v);
    if (root_color[r] < 0) root_color[r] = static_cast<std::int8_t>(uniform_color4(rng));
    out.color[v] = static_cast<std::uint8_t>(root_color[r]);
  }
  return out;
}

double ChainStats::mean_density() const { return mean(density_history); }

Chain::Chain(const Graph& g, BoundarySpec bc, ModelParams params, std::uint64_t master_seed,
             std::uint64_t chain_index)
    : graph_(&g),
      params_(params),
      cfg_(FkConfig::all_closed(g, std::move(bc))),
      rng_(make_stream(master_seed, chain_index)) {
  params_.validate();
  wiring_ = cfg_.bc.wiring(g);
  groups_ = cfg_.bc.num_groups(g);
}

void Chain::sweep(int count) {
  for (int i = 0; i < count; ++i) {
    es_update_wired(*graph_, cfg_, wiring_, groups_, params_, rng_);
    ++stats_.sweeps;
    const double density = graph_->num_edges() > 0
                               ? static_cast<double>(cfg_.num_open()) / graph_->num_edges()
                               : 0.0;
    stats_.density_history.push_back(density);
  }
}

void Chain::update_autocorrelation() {
  stats_.tau_int = integrated_autocorrelation(stats_.density_history);
}

void Chain::save(std::ostream& out) const {
  out << "rcm4-chain v1 sweeps=" << stats_.sweeps << " edges=" << cfg_.open.size() << '\n';
  out << rng_ << '\n';
  for (auto b : cfg_.open) out << static_cast<char>('0' + b);
  out << '\n';
}

void Chain::load(std::istream& in) {
  std::string magic, version, sweeps_field, edges_field;
  in >> magic >> version >> sweeps_field >> edges_field;
  if (magic != "rcm4-chain" || version != "v1") throw std::runtime_error("Chain::load: bad checkpoint header");
  const auto sweeps = std::stoull(sweeps_field.substr(sweeps_field.find('=') + 1));
  const auto edges = std::stoull(edges_field.substr(edges_field.find('=') + 1));
  if (edges != cfg_.open.size()) throw std::runtime_error("Chain::load: edge count mismatch");
  in >> rng_;
  std::string bits;
  in >> bits;
  if (!in || bits.size() != edges) throw std::runtime_error("Chain::load: truncated checkpoint");
  for (std::size_t e = 0; e < edges; ++e) cfg_.open[e] = bits[e] == '1' ? 1 : 0;
  stats_ = ChainStats{};
  stats_.sweeps = sweeps;
}

ChainSchedule ChainSchedule::defaults(int half_width, int n_samples) {
  return {8 * half_width, n_samples, std::max(1, half_width / 8)};
}

void ChainSchedule::validate() const {
  if (burn_in < 0) throw std::invalid_argument("ChainSchedule: burn_in must be >= 0");
  if (n_samples < 0) throw std::invalid_argument("ChainSchedule: n_samples must be >= 0");
  if (thin < 1) throw std::invalid_argument("ChainSchedule: thin must be >= 1");
}

void sample_chain(const Graph& g, const BoundarySpec& bc, const ChainSchedule& schedule,
                  std::uint64_t seed, std::uint64_t chain_index,
                  const std::function<void(const FkConfig&, std::uint64_t)>& sink,
                  ModelParams params) {
  schedule.validate();
  if (schedule.n_samples == 0) return;
  Chain chain(g, bc, params, seed, chain_index);
  chain.sweep(schedule.burn_in);
  for (int i = 0; i < schedule.n_samples; ++i) {
    chain.sweep(schedule.thin);
    sink(chain.state(), chain.stats().sweeps);
  }
}

std::vector<FkConfig> sample_chain(const Graph& g, const BoundarySpec& bc,
                                   const ChainSchedule& schedule, std::uint64_t seed,
                                   std::uint64_t chain_index, ModelParams params) {
  std::vector<FkConfig> out;
  try {
    out.reserve(static_cast<std::size_t>(schedule.n_samples));
    sample_chain(
        g, bc, schedule, seed, chain_index,
        [&](const FkConfig& c, std::uint64_t) { out.push_back(c); }, params);
  } catch (const std::bad_alloc&) {
    throw std::runtime_error("sample_chain: out of memory after " + std::to_string(out.size()) +
                             " of " + std::to_string(schedule.n_samples) + " samples");
  }
  return out;
}

double ExactDistribution::edge_marginal(int e) const {
  double s = 0.0;
  for (std::size_t w = 0; w < prob.size(); ++w) {
    if ((w >> e) & 1U) s += prob[w];
  }
  return s;
}

double ExactDistribution::mean_open_edges() const {
  double s = 0.0;
  for (std::size_t w = 0; w < prob.size(); ++w) s += prob[w] * std::popcount(w);
  return s;
}

double ExactDistribution::expect(const std::function<double(std::uint64_t)>& f) const {
  double s = 0.0;
  for (std::size_t w = 0; w < prob.size(); ++w) s += prob[w] * f(w);
  return s;
}

ExactDistribution brute_force_distribution(const Graph& g, const BoundarySpec& bc, ModelParams params) {
  if (g.num_edges() > kMaxEnumerationEdges) {
    throw std::invalid_argument("brute_force_distribution: more than " +
                                std::to_string(kMaxEnumerationEdges) + " edges");
  }
  if (!(params.p > 0.0 && params.p < 1.0)) throw std::invalid_argument("brute_force_distribution: p must lie in (0,1)");
  if (params.q < 1) throw std::invalid_argument("brute_force_distribution: q must be >= 1");
  ExactDistribution d;
  d.num_edges = g.num_edges();
  const std::uint64_t total = std::uint64_t{1} << g.num_edges();
  d.prob.resize(total);
  const double log_ratio = std::log(params.p / (1.0 - params.p));
  const double log_q = std::log(static_cast<double>(params.q));
  FkConfig cfg = FkConfig::all_closed(g, bc);
  double max_log = -INFINITY;
  std::vector<double> logw(total);
  for (std::uint64_t w = 0; w < total; ++w) {
    for (int e = 0; e < g.num_edges(); ++e) cfg.open[e] = static_cast<std::uint8_t>((w >> e) & 1U);
    const int k = clusters(g, cfg).count;
    logw[w] = std::popcount(w) * log_ratio + k * log_q;
    max_log = std::max(max_log, logw[w]);
  }
  double z = 0.0;
  for (std::uint64_t w = 0; w < total; ++w) {
    d.prob[w] = std::exp(logw[w] - max_log);
    z += d.prob[w];
  }
  for (auto& p : d.prob) p /= z;
  return d;
}

void write_sample_header(std::ostream& out, const SampleDumpHeader& h) {
  out << "rcm4-samples v1 N=" << h.half_width << " delta=" << h.delta.numerator() << '/'
      << h.delta.denominator() << " bc=" << h.bc << " seed=" << h.seed << " edges=" << h.num_edges
      << '\n';
}

void write_sample_record(std::ostream& out, const FkConfig& cfg, std::uint64_t sweep) {
  std::vector<std::size_t> runs;
  const auto& bits = cfg.open;
  std::size_t i = 0;
  while (i < bits.size()) {
    std::size_t j = i;
    while (j < bits.size() && bits[j] == bits[i]) ++j;
    runs.push_back(j - i);
    i = j;
  }
  out << "sweep=" << sweep << " first=" << (bits.empty() ? 0 : static_cast<int>(bits[0]))
      << " runs=" << runs.size();
  for (auto r : runs) out << ' ' << r;
  out << '\n';
}

namespace {

std::string field_value(const std::string& token, const std::string& key) {
  if (token.rfind(key + "=", 0) != 0) throw std::runtime_error("sample dump: expected field '" + key + "'");
  return token.substr(key.size() + 1);
}

}  // namespace

SampleDumpHeader read_sample_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("sample dump: missing header");
  std::istringstream ss(line);
  std::string magic, version, n, delta, bc, seed, edges;
  ss >> magic >> version >> n >> delta >> bc >> seed >> edges;
  if (magic != "rcm4-samples" || version != "v1") throw std::runtime_error("sample dump: bad magic");
  SampleDumpHeader h;
  h.half_width = std::stoi(field_value(n, "N"));
  const auto dv = field_value(delta, "delta");
  const auto slash = dv.find('/');
  h.delta = Rational(std::stoll(dv.substr(0, slash)), std::stoll(dv.substr(slash + 1)));
  h.bc = field_value(bc, "bc");
  h.seed = std::stoull(field_value(seed, "seed"));
  h.num_edges = std::stoi(field_value(edges, "edges"));
  return h;
}

bool read_sample_record(std::istream& in, int num_edges, std::vector<std::uint8_t>& open,
                        std::uint64_t& sweep) {
  std::string line;
  if (!std::getline(in, line) || line.empty()) return false;
  std::istringstream ss(line);
  std::string sweep_f, first_f, runs_f;
  ss >> sweep_f >> first_f >> runs_f;
  sweep = std::stoull(field_value(sweep_f, "sweep"));
  auto value = static_cast<std::uint8_t>(std::stoi(field_value(first_f, "first")));
  const auto nruns = std::stoull(field_value(runs_f, "runs"));
  open.clear();
  open.reserve(num_edges);
  for (std::size_t r = 0; r < nruns; ++r) {
    std::size_t len = 0;
    if (!(ss >> len)) throw std::runtime_error("sample dump: truncated record");
    open.insert(open.end(), len, value);
    value ^= 1U;
  }
  if (static_cast<int>(open.size()) != num_edges) throw std::runtime_error("sample dump: record length mismatch");
  return true;
}

}  // namespace rcm4
