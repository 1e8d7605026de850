#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rcm4/geometry.hpp"
#include "rcm4/lattice.hpp"
#include "rcm4/sampler.hpp"

namespace rcm4 {

/// A loop of the medial lattice: a closed, non-self-crossing chain of
/// diagonal unit steps (in doubled coordinates) separating a primal cluster
/// from a dual one.
///
/// The interior is indexed by scanline: for every doubled row Y the loop
/// stores the segments whose lower endpoint lies on that row, sorted by x.
/// A horizontal ray from any point then needs a binary search per query.
class Loop {
 public:
  Loop(std::vector<int> slots, std::vector<Point> points, bool exterior);

  /// Departure slot codes (MedialSlot::code) in traversal order.
  const std::vector<int>& slots() const { return slots_; }
  /// Closed polyline, doubled coordinates; the last point connects back to
  /// the first.
  const std::vector<Point>& points() const { return points_; }
  std::size_t length() const { return slots_.size(); }
  /// Whether the loop runs around the outside of the box.
  bool exterior() const { return exterior_; }

  /// Largest distance between two of its points, lattice units.
  double diameter() const { return diameter_; }
  /// Bounding box in doubled coordinates.
  int min_x2() const { return min_x_; }
  int max_x2() const { return max_x_; }
  int min_y2() const { return min_y_; }
  int max_y2() const { return max_y_; }

  /// Even-odd ray test for a point in lattice units. Points on the loop
  /// itself get an unspecified answer.
  bool encloses(double x, double y) const;
  /// Same test by winding number, O(length). Used to cross-check.
  bool encloses_by_winding(double x, double y) const;
  /// Whether the medial face with doubled-coordinate centre c2 (x + y even)
  /// lies in int(ℓ).
  bool encloses_face(int cx2, int cy2) const;

  double distance_to(double x, double y) const;
  /// Grazing counts as intersecting.
  bool intersects(const Disk& d) const;
  /// Area of int(ℓ) ∩ disk, lattice units.
  double area_in(const Disk& d) const;

 private:
  int crossings_right(int row, double x) const;

  std::vector<int> slots_;
  std::vector<Point> points_;
  bool exterior_ = false;
  double diameter_ = 0.0;
  int min_x_ = 0, max_x_ = 0, min_y_ = 0, max_y_ = 0;
  // Row index: segments with lower endpoint on row min_y_ + i are
  // row_x_[row_start_[i] .. row_start_[i+1]), with slope sign in row_dir_.
  std::vector<int> row_start_;
  std::vector<int> row_x_;
  std::vector<std::int8_t> row_dir_;
};

/// Loops of a configuration. In the free convention every medial edge of the
/// domain, including the ones wrapping around the outside of the box, is in
/// exactly one loop. In the wired convention perimeter edges count as open
/// and the single loop running outside the box is dropped; its slots map to
/// -1.
struct LoopSet {
  std::vector<Loop> loops;
  std::vector<int> owner;  // slot code -> loop index
};

/// Walks loops directly on the configuration without materialising the
/// medial graph, so it is cheap to trace a few loops in a huge box.
class LoopTracer {
 public:
  /// Wired boundary conditions use the wired convention, every other kind
  /// the free one.
  LoopTracer(const Domain& d, const FkConfig& cfg);

  bool wired() const { return wired_; }
  /// Slot paired with `s` at its medial vertex.
  MedialSlot partner(MedialSlot s) const;
  /// The loop leaving slot `s`. If `seen` is given, every slot code visited
  /// is reported to it.
  Loop trace(MedialSlot s, std::vector<int>* seen = nullptr) const;

 private:
  const Domain* domain_;
  const FkConfig* cfg_;
  MedialGraph medial_;
  bool wired_;
};

LoopSet extract_loops(const Domain& d, const FkConfig& cfg);

/// Loops that intersect or surround at least one of the disks (lattice
/// units). Every loop whose integral against a disk indicator is nonzero is
/// returned exactly once. The disks must lie inside the box.
std::vector<Loop> loops_near(const Domain& d, const FkConfig& cfg, std::span<const Disk> disks);

/// Throws std::invalid_argument unless the disks are pairwise at distance
/// more than r_i + r_j.
void require_disjoint(std::span<const Disk> disks);

struct SurroundResult {
  std::vector<std::uint8_t> surrounds;  // per disk
  bool intersects_any = false;
  int count() const;
};

/// Entry i is 1 iff disk i lies in int(ℓ) and the loop misses it.
SurroundResult surround_count(const Loop& loop, std::span<const Disk> disks);

/// Loop families attached to a collection of disjoint balls X:
///   free   loops meeting no ball (the family 𝓛_{X,ε});
///   odd    members of `free` surrounding an odd number of balls;
///   two    members of `free` surrounding exactly two balls (four balls only);
///   two_one  members of `two` surrounding exactly one of balls 0 and 1.
/// Entries are indices into the classified loop list.
struct LoopClassification {
  std::vector<SurroundResult> per_loop;
  std::vector<int> free;
  std::vector<int> odd;
  std::vector<int> two;
  std::vector<int> two_one;
};

LoopClassification classify(std::span<const Loop> loops, std::span<const Disk> disks);

/// The event that more than λ/η² loops of diameter at least ηε/2 intersect
/// the ball `ball` (radius ε), lattice units.
bool loop_tail_event(std::span<const Loop> loops, const Disk& ball, double eta, double lambda);

/// Plain-text dump, points in doubled coordinates:
///   rcm4-loops v1 count=<n>
///   loop <index> points=<k> exterior=<0|1>
///   <x2> <y2>           (k lines)
void write_loops(std::ostream& os, std::span<const Loop> loops);

}  // namespace rcm4
