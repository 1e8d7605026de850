#include "rcm4/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rcm4 {

EdgeId EdgeId::primal(Point a, Point b) {
  if (std::abs(a.x - b.x) + std::abs(a.y - b.y) != 1) {
    throw std::invalid_argument("EdgeId::primal: endpoints are not nearest neighbours");
  }
  Point a2{2 * a.x, 2 * a.y};
  Point b2{2 * b.x, 2 * b.y};
  if (b2 < a2) std::swap(a2, b2);
  return EdgeId{{a2, b2}};
}

EdgeId dual_edge(const EdgeId& e) {
  const Point m{(e.ends[0].x + e.ends[1].x) / 2, (e.ends[0].y + e.ends[1].y) / 2};
  const Point d{e.ends[1].x - e.ends[0].x, e.ends[1].y - e.ends[0].y};
  // Rotate the half-direction by 90 degrees around the midpoint.
  const Point r{-d.y / 2, d.x / 2};
  Point a{m.x - r.x, m.y - r.y};
  Point b{m.x + r.x, m.y + r.y};
  if (b < a) std::swap(a, b);
  return EdgeId{{a, b}};
}

Graph Graph::from_edges(int num_vertices, std::vector<std::array<int, 2>> edges) {
  Graph g;
  g.num_vertices = num_vertices;
  g.edges = std::move(edges);
  std::vector<int> degree(num_vertices, 0);
  for (const auto& [a, b] : g.edges) {
    if (a < 0 || b < 0 || a >= num_vertices || b >= num_vertices) {
      throw std::invalid_argument("Graph::from_edges: endpoint out of range");
    }
    ++degree[a];
    ++degree[b];
  }
  for (int v = 0; v < num_vertices; ++v) {
    if (degree[v] < 4) g.boundary.push_back(v);
  }
  return g;
}

BoundarySpec BoundarySpec::partition(std::vector<std::vector<int>> groups) {
  return BoundarySpec(Kind::Partition, std::move(groups));
}

std::vector<int> BoundarySpec::wiring(const Graph& g) const {
  std::vector<int> label(g.num_vertices, -1);
  switch (kind_) {
    case Kind::Free:
      break;
    case Kind::Wired:
      for (int v : g.boundary) label[v] = 0;
      break;
    case Kind::Partition: {
      std::vector<char> on_boundary(g.num_vertices, 0);
      for (int v : g.boundary) on_boundary[v] = 1;
      for (std::size_t i = 0; i < groups_.size(); ++i) {
        for (int v : groups_[i]) {
          if (v < 0 || v >= g.num_vertices || !on_boundary[v]) {
            throw std::invalid_argument("BoundarySpec: group member is not a boundary vertex");
          }
          if (label[v] != -1) {
            throw std::invalid_argument("BoundarySpec: partition groups overlap");
          }
          label[v] = static_cast<int>(i);
        }
      }
      break;
    }
  }
  return label;
}

int BoundarySpec::num_groups(const Graph& g) const {
  switch (kind_) {
    case Kind::Free:
      return 0;
    case Kind::Wired:
      return g.boundary.empty() ? 0 : 1;
    case Kind::Partition:
      return static_cast<int>(groups_.size());
  }
  return 0;
}

std::string BoundarySpec::name() const {
  switch (kind_) {
    case Kind::Free:
      return "free";
    case Kind::Wired:
      return "wired";
    case Kind::Partition:
      return "partition";
  }
  return "?";
}

bool wiring_leq(const BoundarySpec& a, const BoundarySpec& b, const Graph& g) {
  const auto la = a.wiring(g);
  const auto lb = b.wiring(g);
  // Every group of a must sit inside a single group of b.
  std::vector<int> image(a.num_groups(g), -2);
  for (int v = 0; v < g.num_vertices; ++v) {
    if (la[v] < 0) continue;
    if (lb[v] < 0) {
      // Singleton groups impose no wiring.
      continue;
    }
    if (image[la[v]] == -2) {
      image[la[v]] = lb[v];
    } else if (image[la[v]] != lb[v]) {
      return false;
    }
  }
  // A group of a that is partially unwired in b is only fine if it is a
  // singleton.
  std::vector<int> size(a.num_groups(g), 0), wired_in_b(a.num_groups(g), 0);
  for (int v = 0; v < g.num_vertices; ++v) {
    if (la[v] < 0) continue;
    ++size[la[v]];
    if (lb[v] >= 0) ++wired_in_b[la[v]];
  }
  for (std::size_t i = 0; i < size.size(); ++i) {
    if (size[i] > 1 && wired_in_b[i] != size[i]) return false;
  }
  return true;
}

Domain::Domain(int half_width, Rational scale) : n_(half_width), side_(2 * half_width + 1), scale_(scale) {
  if (half_width < 1) throw std::invalid_argument("Domain: half width must be >= 1");
  if (scale <= 0) throw std::invalid_argument("Domain: scale must be positive");
  std::vector<std::array<int, 2>> edges(num_edges());
  for (int e = 0; e < num_edges(); ++e) edges[e] = endpoints(e);
  graph_ = Graph::from_edges(num_vertices(), std::move(edges));
}

Point Domain::edge_origin(int e) const {
  if (e < num_horizontal_edges()) {
    return {e % (side_ - 1) - n_, e / (side_ - 1) - n_};
  }
  const int k = e - num_horizontal_edges();
  return {k % side_ - n_, k / side_ - n_};
}

std::array<int, 2> Domain::endpoints(int e) const {
  const Point o = edge_origin(e);
  const Point t = is_horizontal(e) ? Point{o.x + 1, o.y} : Point{o.x, o.y + 1};
  return {vertex_index(o), vertex_index(t)};
}

EdgeId Domain::edge(int e) const {
  const Point o = edge_origin(e);
  return EdgeId::primal(o, is_horizontal(e) ? Point{o.x + 1, o.y} : Point{o.x, o.y + 1});
}

int Domain::edge_index(const EdgeId& e) const {
  if (e.is_dual()) throw std::invalid_argument("Domain::edge_index: dual edge");
  const int idx = edge_at_midpoint2({(e.ends[0].x + e.ends[1].x) / 2, (e.ends[0].y + e.ends[1].y) / 2});
  if (idx < 0) throw std::invalid_argument("Domain::edge_index: edge outside the box");
  return idx;
}

Point Domain::edge_midpoint2(int e) const {
  const Point o = edge_origin(e);
  return is_horizontal(e) ? Point{2 * o.x + 1, 2 * o.y} : Point{2 * o.x, 2 * o.y + 1};
}

int Domain::edge_at_midpoint2(Point m) const {
  const bool xo = (m.x & 1) != 0;
  const bool yo = (m.y & 1) != 0;
  if (xo == yo) return -1;
  if (xo) {
    const int x = (m.x - 1) / 2;
    const int y = m.y / 2;
    if (x < -n_ || x > n_ - 1 || y < -n_ || y > n_) return -1;
    return horizontal_edge(x, y);
  }
  const int x = m.x / 2;
  const int y = (m.y - 1) / 2;
  if (x < -n_ || x > n_ || y < -n_ || y > n_ - 1) return -1;
  return vertical_edge(x, y);
}

bool Domain::is_perimeter_edge(int e) const {
  const Point o = edge_origin(e);
  return is_horizontal(e) ? (o.y == -n_ || o.y == n_) : (o.x == -n_ || o.x == n_);
}

std::vector<int> Domain::box_vertices(Point c, int r) const {
  std::vector<int> out;
  for (int y = std::max(-n_, c.y - r); y <= std::min(n_, c.y + r); ++y) {
    for (int x = std::max(-n_, c.x - r); x <= std::min(n_, c.x + r); ++x) {
      out.push_back(vertex_index({x, y}));
    }
  }
  return out;
}

std::vector<int> Domain::ball_vertices(double cx, double cy, double r) const {
  std::vector<int> out;
  const int y0 = std::max(-n_, static_cast<int>(std::ceil(cy - r)));
  const int y1 = std::min(n_, static_cast<int>(std::floor(cy + r)));
  for (int y = y0; y <= y1; ++y) {
    const int x0 = std::max(-n_, static_cast<int>(std::ceil(cx - r)));
    const int x1 = std::min(n_, static_cast<int>(std::floor(cx + r)));
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      if (dx * dx + dy * dy <= r * r) out.push_back(vertex_index({x, y}));
    }
  }
  return out;
}

MedialGraph Domain::medial() const { return MedialGraph(*this); }

namespace {

Point add(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
Point sub(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }

}  // namespace

MedialSlot MedialGraph::follow(MedialSlot s, std::vector<Point>* path) const {
  const Domain& dom = *domain_;
  const Point m = dom.edge_midpoint2(s.vertex);
  const Point d = kQuadrant[s.quadrant];
  const Point target = add(m, d);
  if (const int e = dom.edge_at_midpoint2(target); e >= 0) {
    if (path) path->push_back(target);
    return {e, quadrant_index({-d.x, -d.y})};
  }
  // Wrap around the primal corner p through the missing edges.
  const Point p = (m.x & 1) ? Point{m.x + d.x, m.y} : Point{m.x, m.y + d.y};
  const Point u = sub(m, p);
  Point prev = sub(target, p);
  const int sense = u.x * prev.y - u.y * prev.x;
  if (path) path->push_back(target);
  for (;;) {
    const Point next = sense > 0 ? Point{-prev.y, prev.x} : Point{prev.y, -prev.x};
    const Point cand = add(p, next);
    if (const int e = dom.edge_at_midpoint2(cand); e >= 0) {
      if (path) path->push_back(cand);
      return {e, quadrant_index(sub(prev, next))};
    }
    if (path) path->push_back(cand);
    prev = next;
  }
}

MedialEdge MedialGraph::edge_from(MedialSlot s) const {
  const Domain& dom = *domain_;
  MedialEdge me;
  me.from = s;
  const Point m = dom.edge_midpoint2(s.vertex);
  me.path.push_back(m);
  me.to = follow(s, &me.path);
  me.exterior = me.path.size() > 2;
  const Point d = kQuadrant[s.quadrant];
  const Point p = (m.x & 1) ? Point{m.x + d.x, m.y} : Point{m.x, m.y + d.y};
  me.primal_face = dom.vertex_index({p.x / 2, p.y / 2});
  if (me.exterior) {
    me.dual_face = outer_face();
  } else {
    const Point q = (m.x & 1) ? Point{m.x, m.y + d.y} : Point{m.x + d.x, m.y};
    const int x = (q.x - 1) / 2;
    const int y = (q.y - 1) / 2;
    const int n = dom.half_width();
    if (x >= -n && x <= n - 1 && y >= -n && y <= n - 1) {
      me.dual_face = dom.num_vertices() + dom.dual_vertex_index(x, y);
    } else {
      me.dual_face = outer_face();
    }
  }
  return me;
}

std::vector<MedialEdge> MedialGraph::edges() const {
  std::vector<MedialEdge> out;
  out.reserve(num_edges());
  for (int v = 0; v < num_vertices(); ++v) {
    for (int q = 0; q < 4; ++q) {
      const MedialSlot s{v, q};
      const MedialSlot t = follow(s);
      if (s.code() < t.code()) out.push_back(edge_from(s));
    }
  }
  return out;
}

Point MedialGraph::face_center2(int face) const {
  const Domain& dom = *domain_;
  if (face < dom.num_vertices()) {
    const Point v = dom.vertex(face);
    return {2 * v.x, 2 * v.y};
  }
  const int d = face - dom.num_vertices();
  if (d >= dom.num_dual_vertices()) throw std::invalid_argument("face_center2: outer face");
  const int w = dom.side() - 1;
  const int n = dom.half_width();
  return {2 * (d % w - n) + 1, 2 * (d / w - n) + 1};
}

}  // namespace rcm4
