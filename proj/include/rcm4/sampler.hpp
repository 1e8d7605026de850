#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rcm4/lattice.hpp"
#include "rcm4/rng.hpp"

namespace rcm4 {

/// Edge weight p and cluster weight q. Shipped experiments use the critical
/// point p_c = 2/3, q = 4, where p/(1-p) = 2.
struct ModelParams {
  double p = 2.0 / 3.0;
  int q = 4;

  static ModelParams critical() { return {}; }
  void validate() const;
};

/// Percolation configuration on a graph together with its boundary
/// condition. The dual configuration is implicit: a dual edge is open iff the
/// primal edge it crosses is closed.
struct FkConfig {
  std::vector<std::uint8_t> open;
  BoundarySpec bc = BoundarySpec::free();

  static FkConfig all_closed(const Graph& g, BoundarySpec bc = BoundarySpec::free());
  static FkConfig all_open(const Graph& g, BoundarySpec bc = BoundarySpec::free());
  /// Configuration whose bit e is bit e of `bits` (enumeration order).
  static FkConfig from_bits(const Graph& g, std::uint64_t bits, BoundarySpec bc = BoundarySpec::free());

  int num_open() const;
  bool dual_open(int e) const { return open[e] == 0; }
};

class UnionFind {
 public:
  explicit UnionFind(int n = 0) { reset(n); }
  void reset(int n);
  int find(int v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }
  bool unite(int a, int b);
  int size() const { return static_cast<int>(parent_.size()); }
  int components() const { return components_; }
  int component_size(int v) { return size_[find(v)]; }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
  int components_ = 0;
};

/// Connected components of ω^ξ: vertices wired together by the boundary
/// condition are identified. Entries [0, V) are vertices, [V, V+groups) the
/// virtual group vertices.
struct Clusters {
  std::vector<int> root;  // representative per vertex (including virtual ones)
  int count = 0;          // k(ω^ξ)
  int num_graph_vertices = 0;
  bool connected(int a, int b) const { return root[a] == root[b]; }
};
Clusters clusters(const Graph& g, const FkConfig& cfg);

/// Colour per vertex, values 0..3 standing for colours 1..4.
struct PottsConfig {
  std::vector<std::uint8_t> color;
};

/// Monitored-chain bookkeeping.
struct ChainStats {
  std::uint64_t sweeps = 0;
  double tau_int = 0.5;  // integrated autocorrelation of the open-edge density
  std::vector<double> density_history;
  double mean_density() const;
};

/// One Swendsen–Wang sweep through the Edwards–Sokal coupling: colour every
/// cluster of ω^ξ uniformly (the wired cluster is pinned to colour 0), then
/// reopen every monochromatic edge independently with probability p. The
/// random-cluster measure φ^ξ_{G,p,q} is invariant.
void es_update(const Graph& g, FkConfig& cfg, const ModelParams& params, Engine& rng);
FkConfig es_updated(const Graph& g, FkConfig cfg, const ModelParams& params, Engine& rng);

/// Uniform cluster colouring (part (a) of the sweep, returned as a Potts
/// configuration). Clusters touching a wired group are coloured uniformly as
/// well, so the law is that of the free-field Potts model coupled to φ.
PottsConfig potts_from_fk(const Graph& g, const FkConfig& cfg, Engine& rng);

/// Single-chain driver with checkpointing.
class Chain {
 public:
  Chain(const Graph& g, BoundarySpec bc, ModelParams params, std::uint64_t master_seed,
        std::uint64_t chain_index = 0);

  void sweep(int count = 1);
  const FkConfig& state() const { return cfg_; }
  const ChainStats& stats() const { return stats_; }
  /// Recompute tau_int from the density history (Sokal window, c = 6).
  void update_autocorrelation();

  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  const Graph* graph_;
  ModelParams params_;
  FkConfig cfg_;
  std::vector<int> wiring_;
  int groups_ = 0;
  Engine rng_;
  ChainStats stats_;
};

struct ChainSchedule {
  int burn_in = 0;
  int n_samples = 0;
  int thin = 1;

  /// 8N burn-in and max(1, N/8) thinning for a box of half width N.
  static ChainSchedule defaults(int half_width, int n_samples);
  void validate() const;
};

/// Runs a chain, invoking `sink(cfg, sweep_index)` for each of the n_samples
/// samples (taken every `thin` sweeps after `burn_in`). Deterministic in
/// (seed, chain_index).
void sample_chain(const Graph& g, const BoundarySpec& bc, const ChainSchedule& schedule,
                  std::uint64_t seed, std::uint64_t chain_index,
                  const std::function<void(const FkConfig&, std::uint64_t)>& sink,
                  ModelParams params = ModelParams::critical());
std::vector<FkConfig> sample_chain(const Graph& g, const BoundarySpec& bc,
                                   const ChainSchedule& schedule, std::uint64_t seed,
                                   std::uint64_t chain_index = 0,
                                   ModelParams params = ModelParams::critical());

/// Exact φ^ξ_{G,p,q}[ω] for all 2^|E| configurations (bit e of the index is ω_e).
struct ExactDistribution {
  int num_edges = 0;
  std::vector<double> prob;

  double edge_marginal(int e) const;
  double mean_open_edges() const;
  /// Σ_ω prob(ω) f(ω)
  double expect(const std::function<double(std::uint64_t)>& f) const;
};
inline constexpr int kMaxEnumerationEdges = 24;
ExactDistribution brute_force_distribution(const Graph& g, const BoundarySpec& bc,
                                           ModelParams params = ModelParams::critical());

/// Raw sample dump: plain text, one header line then one record per sample.
///
///   rcm4-samples v1 N=<N> delta=<num>/<den> bc=<free|wired|partition> seed=<u64> edges=<E>
///   sweep=<k> first=<0|1> runs=<r> <len_1> ... <len_r>
///
/// Each record run-length encodes the open-edge bitmap in edge-index order,
/// starting with a run of value `first`.
struct SampleDumpHeader {
  int half_width = 0;
  Rational delta{1};
  std::string bc;
  std::uint64_t seed = 0;
  int num_edges = 0;
};
void write_sample_header(std::ostream& out, const SampleDumpHeader& h);
void write_sample_record(std::ostream& out, const FkConfig& cfg, std::uint64_t sweep);
SampleDumpHeader read_sample_header(std::istream& in);
/// Returns false at end of stream.
bool read_sample_record(std::istream& in, int num_edges, std::vector<std::uint8_t>& open,
                        std::uint64_t& sweep);

}  // namespace rcm4
