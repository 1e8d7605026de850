#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <boost/rational.hpp>

namespace rcm4 {

using Rational = boost::rational<std::int64_t>;

/// Integer point. Depending on context it is either a lattice vertex
/// (lattice units) or a point of the doubled lattice 2^{-1}Z^2 stored as
/// twice its coordinates.
struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;
};

enum class Orientation : std::uint8_t { Horizontal, Vertical };

/// A primal or dual edge, endpoints in doubled coordinates, sorted so that
/// ends[0] < ends[1]. Primal endpoints have even coordinates, dual ones odd.
struct EdgeId {
  std::array<Point, 2> ends;

  Orientation orientation() const {
    return ends[0].y == ends[1].y ? Orientation::Horizontal : Orientation::Vertical;
  }
  bool is_dual() const { return (ends[0].x & 1) != 0; }
  friend bool operator==(const EdgeId&, const EdgeId&) = default;

  static EdgeId primal(Point a, Point b);
};

/// The edge of the other lattice crossing `e` in its middle. Involution.
EdgeId dual_edge(const EdgeId& e);

/// Plain undirected multigraph used by the sampler. Boundary vertices are
/// those incident to fewer than four edges.
struct Graph {
  int num_vertices = 0;
  std::vector<std::array<int, 2>> edges;
  std::vector<int> boundary;

  static Graph from_edges(int num_vertices, std::vector<std::array<int, 2>> edges);
  int num_edges() const { return static_cast<int>(edges.size()); }
};

/// Boundary condition: a partition of (a subset of) the boundary vertices.
class BoundarySpec {
 public:
  enum class Kind : std::uint8_t { Free, Wired, Partition };

  static BoundarySpec free() { return BoundarySpec(Kind::Free, {}); }
  static BoundarySpec wired() { return BoundarySpec(Kind::Wired, {}); }
  /// Groups must be disjoint; validated against a graph by `wiring`.
  static BoundarySpec partition(std::vector<std::vector<int>> groups);

  Kind kind() const { return kind_; }
  const std::vector<std::vector<int>>& groups() const { return groups_; }

  /// Per-vertex group label (-1 when unwired) for the given graph. Wired
  /// puts every boundary vertex in group 0. Throws std::invalid_argument on
  /// overlapping groups or non-boundary members.
  std::vector<int> wiring(const Graph& g) const;
  int num_groups(const Graph& g) const;

  std::string name() const;

 private:
  BoundarySpec(Kind k, std::vector<std::vector<int>> groups)
      : kind_(k), groups_(std::move(groups)) {}
  Kind kind_;
  std::vector<std::vector<int>> groups_;
};

/// a ≤ b in the wiring order: every pair wired in a is wired in b.
bool wiring_leq(const BoundarySpec& a, const BoundarySpec& b, const Graph& g);

class MedialGraph;

/// The box Λ_N = [-N, N]^2 ∩ Z^2 with lattice spacing δ. Geometry is kept in
/// integer lattice units; δ only enters when quantities are reported in
/// physical units.
///
/// Edge indexing: horizontal edges first, row-major over (y, x) with
/// x ∈ [-N, N-1]; then vertical edges row-major over (y, x) with y ∈ [-N, N-1].
class Domain {
 public:
  explicit Domain(int half_width, Rational scale = Rational(1));

  int half_width() const { return n_; }
  int side() const { return side_; }
  Rational scale() const { return scale_; }
  double delta() const { return boost::rational_cast<double>(scale_); }

  int num_vertices() const { return side_ * side_; }
  int num_edges() const { return 2 * side_ * (side_ - 1); }
  int num_horizontal_edges() const { return side_ * (side_ - 1); }

  bool contains(Point v) const { return v.x >= -n_ && v.x <= n_ && v.y >= -n_ && v.y <= n_; }
  int vertex_index(Point v) const { return (v.y + n_) * side_ + (v.x + n_); }
  Point vertex(int index) const { return {index % side_ - n_, index / side_ - n_}; }
  bool is_boundary(Point v) const {
    return v.x == -n_ || v.x == n_ || v.y == -n_ || v.y == n_;
  }

  /// Index of the horizontal edge (x,y)-(x+1,y) / vertical edge (x,y)-(x,y+1).
  int horizontal_edge(int x, int y) const { return (y + n_) * (side_ - 1) + (x + n_); }
  int vertical_edge(int x, int y) const {
    return num_horizontal_edges() + (y + n_) * side_ + (x + n_);
  }
  bool is_horizontal(int e) const { return e < num_horizontal_edges(); }
  /// West (resp. south) endpoint of edge e.
  Point edge_origin(int e) const;
  std::array<int, 2> endpoints(int e) const;
  EdgeId edge(int e) const;
  int edge_index(const EdgeId& e) const;
  /// Edge midpoint in doubled coordinates.
  Point edge_midpoint2(int e) const;
  /// Edge from a midpoint in doubled coordinates, or -1 if not in the box.
  int edge_at_midpoint2(Point m) const;
  /// Whether the edge lies on the outer perimeter of the box.
  bool is_perimeter_edge(int e) const;

  const Graph& graph() const { return graph_; }
  const std::vector<int>& boundary_vertices() const { return graph_.boundary; }

  /// Interior dual vertices (faces of the box): (2N)^2 of them, centred at
  /// (x+1/2, y+1/2) for x, y ∈ [-N, N-1].
  int num_dual_vertices() const { return (side_ - 1) * (side_ - 1); }
  int dual_vertex_index(int x, int y) const { return (y + n_) * (side_ - 1) + (x + n_); }

  /// Vertices within L^∞ distance r of c (the box Λ_r(c) ∩ domain).
  std::vector<int> box_vertices(Point c, int r) const;
  /// Vertices within Euclidean distance r of c (lattice units).
  std::vector<int> ball_vertices(double cx, double cy, double r) const;

  MedialGraph medial() const;

 private:
  int n_;
  int side_;
  Rational scale_;
  Graph graph_;
};

/// A quadrant slot at a medial vertex: direction (±1, ±1) in doubled
/// coordinates. Index: 0 = (+,+), 1 = (-,+), 2 = (-,-), 3 = (+,-).
inline constexpr std::array<Point, 4> kQuadrant = {Point{1, 1}, Point{-1, 1}, Point{-1, -1},
                                                   Point{1, -1}};
inline int quadrant_index(Point d) {
  return d.y > 0 ? (d.x > 0 ? 0 : 1) : (d.x > 0 ? 3 : 2);
}

/// End of a medial edge: medial vertex (= primal edge index) and slot.
struct MedialSlot {
  int vertex = 0;
  int quadrant = 0;
  int code() const { return 4 * vertex + quadrant; }
  static MedialSlot from_code(int c) { return {c / 4, c % 4}; }
  friend bool operator==(const MedialSlot&, const MedialSlot&) = default;
};

/// One medial edge as a polyline of unit diagonal steps in doubled
/// coordinates, with the two faces it borders.
struct MedialEdge {
  MedialSlot from;
  MedialSlot to;
  std::vector<Point> path;  // includes both endpoints
  int primal_face = -1;     // face index of the primal vertex it turns around
  int dual_face = -1;       // face index of the dual vertex / outer face
  bool exterior = false;    // goes around the outside of the box
};

/// Medial graph of a Domain: vertices at edge midpoints, edges are diagonal
/// segments turning around primal and dual vertices. Along the box perimeter
/// the medial edges on the outer side wrap around the missing edges, so every
/// medial vertex has degree 4.
///
/// Faces: primal vertex v -> v; interior dual vertex d -> V + d; the outer
/// face -> V + D.
class MedialGraph {
 public:
  explicit MedialGraph(const Domain& d) : domain_(&d) {}

  int num_vertices() const { return domain_->num_edges(); }
  int num_edges() const { return 2 * domain_->num_edges(); }
  int num_faces() const { return domain_->num_vertices() + domain_->num_dual_vertices() + 1; }
  int outer_face() const { return num_faces() - 1; }

  /// Follow the medial edge leaving `s`; returns the slot it arrives at.
  /// If `path` is non-null the traversed points (excluding the start) are
  /// appended.
  MedialSlot follow(MedialSlot s, std::vector<Point>* path = nullptr) const;
  MedialEdge edge_from(MedialSlot s) const;
  /// Every medial edge exactly once.
  std::vector<MedialEdge> edges() const;

  /// Centre of a face in doubled coordinates (outer face has none).
  Point face_center2(int face) const;

 private:
  const Domain* domain_;
};

}  // namespace rcm4
