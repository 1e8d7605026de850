#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rcm4/geometry.hpp"
#include "rcm4/lattice.hpp"
#include "rcm4/loops.hpp"
#include "rcm4/sampler.hpp"
#include "rcm4/test_function.hpp"

namespace rcm4 {

// ---------------------------------------------------------------------------
// Estimator plumbing

/// One batch of consecutive samples from one chain.
struct Batch {
  std::uint64_t chain = 0;
  std::uint64_t index = 0;
  std::uint64_t size = 0;
  double mean = 0.0;
  double sum_sq = 0.0;  // Σ x² over the batch, for the per-sample variance
  friend bool operator==(const Batch&, const Batch&) = default;
};

inline constexpr std::size_t kMinBatches = 16;

/// Point estimate with a batch-means standard error.
struct EstimatorResult {
  double estimate = 0.0;
  double std_error = 0.0;
  double n_eff = 0.0;
  std::uint64_t n_samples = 0;
  std::vector<Batch> batches;

  /// Errors are only reported with at least kMinBatches batches.
  bool reliable() const { return batches.size() >= kMinBatches; }
  /// Recompute estimate, std_error and n_eff from the batch table.
  void refresh();
};

/// Batches of fixed length `batch_len`; leftover samples join the last
/// batch, and a series shorter than one batch forms a single batch.
EstimatorResult batch_means(std::span<const double> series, std::size_t batch_len,
                            std::uint64_t chain = 0);

/// Batch length max(1, ceil(10 τ_int)), shrunk if that leaves fewer than
/// kMinBatches batches.
std::size_t auto_batch_length(std::span<const double> series);
EstimatorResult batch_means_auto(std::span<const double> series, std::uint64_t chain = 0);

/// Concatenate batch tables (canonically sorted by (chain, index)) and
/// recompute. Associative and commutative, bit for bit.
EstimatorResult merge(std::span<const EstimatorResult> parts);
EstimatorResult merge(const EstimatorResult& a, const EstimatorResult& b);

/// a − b for independent estimates. When both have the same number of
/// batches the batch table holds the pairwise differences, so resampling
/// batches still works downstream.
EstimatorResult difference(const EstimatorResult& a, const EstimatorResult& b);

/// Σ num / Σ den from two series sampled together (same batch layout), with
/// a delta-method error on the batch table.
EstimatorResult ratio(const EstimatorResult& num, const EstimatorResult& den);

/// Streaming consumer: observe one value per sample, result at the end.
class SeriesEstimator {
 public:
  explicit SeriesEstimator(std::uint64_t chain = 0) : chain_(chain) {}
  void observe(double v) { values_.push_back(v); }
  const std::vector<double>& values() const { return values_; }
  EstimatorResult result() const { return batch_means_auto(values_, chain_); }
  EstimatorResult result(std::size_t batch_len) const {
    return batch_means(values_, batch_len, chain_);
  }

 private:
  std::uint64_t chain_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Connectivity of one sample

/// Primal and dual clusters of a configuration on a Domain under its
/// boundary condition. Wired: all boundary vertices form one cluster and the
/// dual lives on interior faces. Free: the dual includes the exterior face,
/// reached through every perimeter edge.
class Connectivity {
 public:
  Connectivity(const Domain& d, const FkConfig& cfg);

  bool primal(Point a, Point b);
  /// Faces given by lower-left corner (x, y), centre (x + 1/2, y + 1/2).
  bool dual(Point fa, Point fb);

  /// Some cluster (resp. dual cluster) meets both disks. A vertex or face
  /// belongs to a disk when its medial face (a diamond around it) meets the
  /// closed disk.
  bool primal_disks(const Disk& a, const Disk& b);
  bool dual_disks(const Disk& a, const Disk& b);

  /// Λ_r ↔ ∂Λ_N in ω, and the dual counterpart (faces touching Λ_r joined
  /// to the outermost ring of faces). Same events as ArmProbe with R = N,
  /// without a second pass over the box.
  bool primal_boundary_arm(int r);
  bool dual_boundary_arm(int r);

 private:
  int dual_index(Point f) const;

  const Domain* domain_;
  bool wired_;
  Clusters primal_;
  UnionFind dual_;  // interior faces, then the exterior face
  std::vector<std::uint8_t> primal_reach_;
  std::vector<std::uint8_t> dual_reach_;
};

/// Vertices (doubled-coordinate centres with both coordinates even) and
/// faces (both odd) whose diamond meets the disk, lattice units.
std::vector<Point> disk_cells2(const Domain& d, const Disk& disk, bool primal);

// ---------------------------------------------------------------------------
// Arm events

/// Annulus Λ_R ∖ Λ_r in lattice units with arm multiplicity 2k.
struct ArmSpec {
  int r = 0;
  int R = 0;
  int k = 1;
  /// Throws unless 0 ≤ r ≤ R ≤ N and k ≥ 1.
  void validate(const Domain& d) const;
};

/// Union-finds restricted to Λ_R, built once and queried for any r ≤ R.
class ArmProbe {
 public:
  ArmProbe(const Domain& d, const FkConfig& cfg, int R);

  /// Λ_r ↔ ∂Λ_R inside Λ_R (for r = 0, the origin).
  bool primal_arm(int r);
  /// Dual path inside Λ_R from a face touching Λ_r to a face of the outer
  /// ring of Λ_R.
  bool dual_arm(int r);

 private:
  const Domain* domain_;
  int R_;
  UnionFind primal_;
  UnionFind dual_;
  std::vector<std::uint8_t> reach_;       // primal root touches ∂Λ_R
  std::vector<std::uint8_t> dual_reach_;  // dual root touches the outer ring
};

/// Number of distinct clusters of ω restricted to the annulus
/// {r ≤ |v|∞ ≤ R} (edges inside ∂Λ_r excluded) that join ∂Λ_r to ∂Λ_R.
int crossing_clusters(const Domain& d, const FkConfig& cfg, int r, int R);

/// π₁ event.
bool one_arm_event(const Domain& d, const FkConfig& cfg, int r, int R);
/// π₂ event for k = 1 (primal and dual arm); at least k crossing clusters
/// for k ≥ 2.
bool arm_event(const Domain& d, const FkConfig& cfg, const ArmSpec& spec);

/// Open crossing of [x0,x1]×[y0,y1] (lattice units) from its left to its
/// right side (horizontal) or bottom to top, using only edges inside it.
bool rect_crossing(const Domain& d, const FkConfig& cfg, int x0, int y0, int x1, int y1,
                   bool horizontal);
/// Average of the crossing indicator over the eight images of the horizontal
/// crossing of [0,r]² under the symmetries of the box.
double symmetric_square_crossing(const Domain& d, const FkConfig& cfg, int r);

/// The two points of the two-point function: separation s along the x
/// axis (or the y axis), placed symmetrically about the origin.
/// Mean of the horizontal and vertical crossings over the tiles of size r
/// covering [-half, half]²; `half` must be a positive multiple of r/2.
double tiled_square_crossing(const Domain& d, const FkConfig& cfg, int r, int half);

std::pair<Point, Point> two_point_pair(int s, bool vertical);
/// Average of 1{a ↔ b} over the horizontal and vertical placements.
double two_point_value(Connectivity& conn, int s);
/// two_point_value averaged over pair midpoints (i·offset, j·offset),
/// i, j ∈ {-1, 0, 1}.
double two_point_average(Connectivity& conn, int s, int offset);

// ---------------------------------------------------------------------------
// Loop observables of one sample

/// A_F(𝓛(ω)) restricted to the loops that can contribute. F must be
/// mean-zero.
double af_value(const Domain& d, const FkConfig& cfg, const TestFunction& f);

struct TildePi1Sample {
  bool no_odd = false;     // 𝓛^odd = ∅
  bool connected = false;  // the balls are joined in the primal or the dual
};
TildePi1Sample tilde_pi1_sample(const Domain& d, const FkConfig& cfg, const Disk& a,
                                const Disk& b);

struct FourBallSample {
  bool tilde_pi2 = false;     // |𝓛²₁| ≥ 1 and 𝓛^odd = ∅
  double tilde_delta = 0.0;   // (−1)^{|𝓛²|} 1{𝓛²₁ = 𝓛^odd = ∅}
  bool mixed = false;         // 𝓛²₁ ≠ ∅ and 𝓛² ∖ 𝓛²₁ ≠ ∅ (never expected)
  double af = 0.0;            // A_F for the ± pattern of these balls
};
/// Balls in the order 0, y, x, x + y with charges +, +, −, −.
FourBallSample four_ball_sample(const Domain& d, const FkConfig& cfg, const TestFunction& f);

struct CdeltaSample {
  bool accepted = false;  // no loop surrounds the ball without meeting it
  double value = 0.0;     // cosine product for (1/2ε²)1_{B_ε(0)}
};
CdeltaSample cdelta_sample(const Domain& d, const FkConfig& cfg, double eps_lattice);

// ---------------------------------------------------------------------------
// Estimators over sample streams

EstimatorResult estimate_pi1(const Domain& d, const ArmSpec& spec,
                             std::span<const FkConfig> samples);
EstimatorResult estimate_pi2k(const Domain& d, const ArmSpec& spec,
                              std::span<const FkConfig> samples);
/// Wired minus free symmetrised crossing of [0,r]².
EstimatorResult estimate_delta(const Domain& d, int r, std::span<const FkConfig> free_samples,
                               std::span<const FkConfig> wired_samples);
EstimatorResult estimate_af(const Domain& d, const TestFunction& f,
                            std::span<const FkConfig> samples);
/// Two balls of radius ε at x and y (physical units).
EstimatorResult estimate_tilde_pi1(const Domain& d, Vec2 x, Vec2 y, double eps,
                                   std::span<const FkConfig> samples);
/// Requires |x|/16 ≥ |y| ≥ 4ε.
std::pair<EstimatorResult, EstimatorResult> estimate_tilde_pi2_and_delta(
    const Domain& d, Vec2 x, Vec2 y, double eps, std::span<const FkConfig> samples);

struct CdeltaResult {
  EstimatorResult value;
  double acceptance = 0.0;
  std::uint64_t accepted = 0;
};
inline constexpr double kMinAcceptance = 1e-3;
/// ε in lattice units; wired samples on Λ_R with R ≥ 32ε. Throws with
/// diagnostics when the acceptance rate falls below kMinAcceptance.
CdeltaResult estimate_cdelta(const Domain& d, double eps_lattice,
                             std::span<const FkConfig> samples);
CdeltaResult cdelta_from_series(std::span<const double> accepted, std::span<const double> value,
                                std::size_t batch_len = 0);

/// φ[a ↔ b] averaged over the two axis placements, separation s.
EstimatorResult estimate_two_point(const Domain& d, int s, std::span<const FkConfig> samples);
/// P[σ_a = σ_b] − 1/4 = (3/4) φ[a ↔ b].
EstimatorResult potts_correlation(const EstimatorResult& two_point);

/// Pairs of ε-balls joined: L(s) is balls 0 and y joined, R(s) balls x and
/// x + y joined, in the primal (s = 1) or the dual (s = 0).
struct InfluenceSample {
  bool l1 = false, l0 = false, r1 = false, r0 = false;
};
InfluenceSample influence_sample(const Domain& d, const FkConfig& cfg, const TestFunction& f);

// ---------------------------------------------------------------------------
// Results table

struct ResultRow {
  std::string observable;
  double r = 0.0, R = 0.0, eps = 0.0, x = 0.0, y = 0.0;
  int N = 0;
  Rational delta{1};
  std::string bc;
  EstimatorResult result;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string code_version;
};

/// RFC-4180 CSV with header
/// observable,r,R,eps,x,y,N,delta,bc,estimate,stderr,n_eff,seed,config_hash,code_version
void write_results_csv(std::ostream& os, std::span<const ResultRow> rows);
std::string csv_field(const std::string& s);

}  // namespace rcm4
