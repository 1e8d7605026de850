#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rcm4/lattice.hpp"
#include "rcm4/loops.hpp"
#include "rcm4/rng.hpp"
#include "rcm4/test_function.hpp"

namespace rcm4 {

/// Loops together with independent uniform orientations σ_ℓ = ±1.
struct OrientedLoops {
  std::span<const Loop> loops;
  std::vector<std::int8_t> sign;
};

OrientedLoops orient(std::span<const Loop> loops, Engine& rng);

/// Integer height on the medial faces of a Domain, indexed like
/// MedialGraph faces (primal vertices, then inner dual vertices, then the
/// outer face, which always has height 0).
class HeightField {
 public:
  explicit HeightField(const Domain& d);

  const Domain& domain() const { return *domain_; }
  int at_face(int face) const { return h_[face]; }
  /// Height of the face centred at the doubled-coordinate point c2.
  int at(int cx2, int cy2) const;
  void add(int cx2, int cy2, int value);
  const std::vector<int>& values() const { return h_; }

 private:
  int face_index(int cx2, int cy2) const;

  const Domain* domain_;
  std::vector<int> h_;
};

/// h = Σ_ℓ σ_ℓ 1_{int ℓ}. Loops running outside the box contribute on the
/// faces of the box they enclose.
HeightField height(const Domain& d, const OrientedLoops& oriented);

/// ∫ F h dz as an exact sum over faces. F is given in physical units and
/// scaled by the domain's δ. Throws if a ball comes within one lattice step
/// of the box boundary.
double test_integral(const HeightField& h, const TestFunction& f);

/// ∫_{int ℓ} F, same conventions.
double loop_integral(const Loop& loop, const TestFunction& f, double delta);

/// A_F(𝓛) = Π_ℓ cos(∫_{int ℓ} F) over the given loops.
double cosine_product(std::span<const Loop> loops, const TestFunction& f, double delta);

/// Plain-text dump:
///   rcm4-heights v1 N=<N>
///   primal <2N+1>       then 2N+1 rows of 2N+1 integers, top row first
///   dual <2N>           then 2N rows of 2N integers, top row first
void write_heights(std::ostream& os, const HeightField& h);

}  // namespace rcm4
