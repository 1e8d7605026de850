#include "rcm4/observables.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rcm4/heightfield.hpp"
#include "rcm4/stats.hpp"

namespace rcm4 {

// ---------------------------------------------------------------------------
// Estimator plumbing

void EstimatorResult::refresh() {
  std::uint64_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const Batch& b : batches) {
    n += b.size;
    sum += static_cast<double>(b.size) * b.mean;
    sum_sq += b.sum_sq;
  }
  n_samples = n;
  if (n == 0) {
    estimate = std_error = n_eff = 0.0;
    return;
  }
  const double dn = static_cast<double>(n);
  estimate = sum / dn;
  const double per_sample = n > 1 ? std::max(0.0, (sum_sq - dn * estimate * estimate) / (dn - 1.0)) : 0.0;
  const std::size_t nb = batches.size();
  if (nb < 2) {
    std_error = std::sqrt(per_sample / dn);
    n_eff = dn;
    return;
  }
  double acc = 0.0;
  for (const Batch& b : batches) {
    const double w = static_cast<double>(b.size) / dn;
    acc += w * w * (b.mean - estimate) * (b.mean - estimate);
  }
  const double var = acc * static_cast<double>(nb) / static_cast<double>(nb - 1);
  std_error = std::sqrt(var);
  n_eff = var > 0.0 ? std::min(dn, per_sample / var) : dn;
}

EstimatorResult batch_means(std::span<const double> series, std::size_t batch_len,
                            std::uint64_t chain) {
  if (batch_len == 0) throw std::invalid_argument("batch_means: batch length must be positive");
  EstimatorResult r;
  const std::size_t n = series.size();
  const std::size_t full = std::max<std::size_t>(1, n / batch_len);
  for (std::size_t b = 0; b < full && n > 0; ++b) {
    const std::size_t lo = b * batch_len;
    const std::size_t hi = b + 1 == full ? n : lo + batch_len;
    Batch batch{chain, b, hi - lo, 0.0, 0.0};
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      s += series[i];
      batch.sum_sq += series[i] * series[i];
    }
    batch.mean = s / static_cast<double>(hi - lo);
    r.batches.push_back(batch);
  }
  r.refresh();
  return r;
}

std::size_t auto_batch_length(std::span<const double> series) {
  const double tau = integrated_autocorrelation(series);
  std::size_t len = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(10.0 * tau)));
  len = std::min(len, std::max<std::size_t>(1, series.size() / kMinBatches));
  return len;
}

EstimatorResult batch_means_auto(std::span<const double> series, std::uint64_t chain) {
  return batch_means(series, auto_batch_length(series), chain);
}

EstimatorResult merge(std::span<const EstimatorResult> parts) {
  EstimatorResult r;
  for (const EstimatorResult& p : parts) r.batches.insert(r.batches.end(), p.batches.begin(), p.batches.end());
  std::sort(r.batches.begin(), r.batches.end(), [](const Batch& a, const Batch& b) {
    return a.chain != b.chain ? a.chain < b.chain : a.index < b.index;
  });
  r.refresh();
  return r;
}

EstimatorResult merge(const EstimatorResult& a, const EstimatorResult& b) {
  const EstimatorResult parts[] = {a, b};
  return merge(parts);
}

EstimatorResult difference(const EstimatorResult& a, const EstimatorResult& b) {
  EstimatorResult r;
  r.estimate = a.estimate - b.estimate;
  r.std_error = std::hypot(a.std_error, b.std_error);
  r.n_eff = std::min(a.n_eff, b.n_eff);
  r.n_samples = a.n_samples + b.n_samples;
  if (a.batches.size() == b.batches.size()) {
    for (std::size_t i = 0; i < a.batches.size(); ++i) {
      Batch d = a.batches[i];
      d.mean = a.batches[i].mean - b.batches[i].mean;
      d.size = std::min(a.batches[i].size, b.batches[i].size);
      d.sum_sq = 0.0;
      r.batches.push_back(d);
    }
  }
  return r;
}

EstimatorResult ratio(const EstimatorResult& num, const EstimatorResult& den) {
  if (num.batches.size() != den.batches.size()) {
    throw std::invalid_argument("ratio: numerator and denominator batch layouts differ");
  }
  EstimatorResult r;
  double sn = 0.0, sd = 0.0, n = 0.0;
  for (std::size_t i = 0; i < num.batches.size(); ++i) {
    const Batch& a = num.batches[i];
    const Batch& b = den.batches[i];
    if (a.size != b.size || a.chain != b.chain || a.index != b.index) {
      throw std::invalid_argument("ratio: numerator and denominator batch layouts differ");
    }
    sn += static_cast<double>(a.size) * a.mean;
    sd += static_cast<double>(b.size) * b.mean;
    n += static_cast<double>(a.size);
  }
  r.n_samples = num.n_samples;
  if (sd <= 0.0) throw std::domain_error("ratio: denominator is zero");
  r.estimate = sn / sd;
  const double dbar = sd / n;
  const std::size_t nb = num.batches.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < nb; ++i) {
    const Batch& a = num.batches[i];
    const Batch& b = den.batches[i];
    const double w = static_cast<double>(a.size) / n;
    const double z = (a.mean - r.estimate * b.mean) / dbar;
    acc += w * w * z * z;
    Batch out = a;
    out.mean = b.mean > 0.0 ? a.mean / b.mean : r.estimate;
    out.sum_sq = 0.0;
    r.batches.push_back(out);
  }
  r.std_error = nb > 1 ? std::sqrt(acc * static_cast<double>(nb) / static_cast<double>(nb - 1)) : 0.0;
  r.n_eff = den.n_eff * dbar;  // effective number of accepted samples
  return r;
}

// ---------------------------------------------------------------------------
// Cells meeting a disk

namespace {

// Distance from (px, py) to the diamond |u| + |v| ≤ 1/2.
double diamond_distance(double px, double py) {
  const double ax = std::abs(px), ay = std::abs(py);
  if (ax + ay <= 0.5) return 0.0;
  return segment_distance(ax, ay, Vec2{0.5, 0.0}, Vec2{0.0, 0.5});
}

bool is_wired(const FkConfig& cfg) { return cfg.bc.kind() == BoundarySpec::Kind::Wired; }

void require_edges(const Domain& d, const FkConfig& cfg) {
  if (static_cast<int>(cfg.open.size()) != d.num_edges()) {
    throw std::invalid_argument("configuration does not belong to this domain");
  }
}

}  // namespace

std::vector<Point> disk_cells2(const Domain& d, const Disk& disk, bool primal) {
  const int n = d.half_width();
  std::vector<Point> out;
  const int off = primal ? 0 : 1;
  // Cell centres at (2i + off)/2.
  const int i0 = static_cast<int>(std::floor(disk.x - disk.r - 1.0));
  const int i1 = static_cast<int>(std::ceil(disk.x + disk.r + 1.0));
  const int j0 = static_cast<int>(std::floor(disk.y - disk.r - 1.0));
  const int j1 = static_cast<int>(std::ceil(disk.y + disk.r + 1.0));
  const int lo = -n, hi = primal ? n : n - 1;
  for (int j = std::max(j0, lo); j <= std::min(j1, hi); ++j) {
    for (int i = std::max(i0, lo); i <= std::min(i1, hi); ++i) {
      const double cx = i + 0.5 * off, cy = j + 0.5 * off;
      if (diamond_distance(disk.x - cx, disk.y - cy) <= disk.r) out.push_back({2 * i + off, 2 * j + off});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Connectivity

Connectivity::Connectivity(const Domain& d, const FkConfig& cfg)
    : domain_(&d), wired_(is_wired(cfg)), primal_((require_edges(d, cfg), clusters(d.graph(), cfg))) {
  const int faces = d.num_dual_vertices();
  dual_.reset(faces + 1);
  for (int e = 0; e < d.num_edges(); ++e) {
    if (cfg.open[e]) continue;
    const Point o = d.edge_origin(e);
    Point a, b;
    if (d.is_horizontal(e)) {
      a = {o.x, o.y - 1};
      b = {o.x, o.y};
    } else {
      a = {o.x - 1, o.y};
      b = {o.x, o.y};
    }
    const int ia = dual_index(a), ib = dual_index(b);
    if (ia < faces && ib < faces) {
      dual_.unite(ia, ib);
    } else if (!wired_) {
      dual_.unite(ia, ib);  // perimeter edge: joins a face to the exterior
    }
  }
}

int Connectivity::dual_index(Point f) const {
  const int n = domain_->half_width();
  if (f.x < -n || f.x > n - 1 || f.y < -n || f.y > n - 1) return domain_->num_dual_vertices();
  return domain_->dual_vertex_index(f.x, f.y);
}

bool Connectivity::primal(Point a, Point b) {
  return primal_.connected(domain_->vertex_index(a), domain_->vertex_index(b));
}

bool Connectivity::dual(Point fa, Point fb) { return dual_.find(dual_index(fa)) == dual_.find(dual_index(fb)); }

bool Connectivity::primal_disks(const Disk& a, const Disk& b) {
  std::vector<int> roots;
  for (const Point c : disk_cells2(*domain_, a, true)) {
    roots.push_back(primal_.root[domain_->vertex_index({c.x / 2, c.y / 2})]);
  }
  std::sort(roots.begin(), roots.end());
  for (const Point c : disk_cells2(*domain_, b, true)) {
    const int r = primal_.root[domain_->vertex_index({c.x / 2, c.y / 2})];
    if (std::binary_search(roots.begin(), roots.end(), r)) return true;
  }
  return false;
}

bool Connectivity::primal_boundary_arm(int r) {
  const Domain& d = *domain_;
  const int n = d.half_width();
  if (r < 0 || r > n) throw std::invalid_argument("primal_boundary_arm: need 0 <= r <= N");
  if (primal_reach_.empty()) {
    primal_reach_.assign(primal_.root.size(), 0);
    for (int v : d.boundary_vertices()) primal_reach_[primal_.root[v]] = 1;
  }
  if (r == 0) return primal_reach_[primal_.root[d.vertex_index({0, 0})]] != 0;
  for (int t = -r; t <= r; ++t) {
    for (const Point p : {Point{t, -r}, Point{t, r}, Point{-r, t}, Point{r, t}}) {
      if (primal_reach_[primal_.root[d.vertex_index(p)]]) return true;
    }
  }
  return false;
}

bool Connectivity::dual_boundary_arm(int r) {
  const Domain& d = *domain_;
  const int n = d.half_width();
  if (r < 0 || r > n) throw std::invalid_argument("dual_boundary_arm: need 0 <= r <= N");
  if (r >= n - 1) return true;
  if (dual_reach_.empty()) {
    dual_reach_.assign(d.num_dual_vertices() + 1, 0);
    for (int t = -n; t <= n - 1; ++t) {
      for (const Point f : {Point{t, -n}, Point{t, n - 1}, Point{-n, t}, Point{n - 1, t}}) {
        dual_reach_[dual_.find(d.dual_vertex_index(f.x, f.y))] = 1;
      }
    }
  }
  for (int t = -r - 1; t <= r; ++t) {
    for (const Point f : {Point{t, -r - 1}, Point{t, r}, Point{-r - 1, t}, Point{r, t}}) {
      if (dual_reach_[dual_.find(d.dual_vertex_index(f.x, f.y))]) return true;
    }
  }
  return false;
}

bool Connectivity::dual_disks(const Disk& a, const Disk& b) {
  std::vector<int> roots;
  for (const Point c : disk_cells2(*domain_, a, false)) {
    roots.push_back(dual_.find(dual_index({(c.x - 1) / 2, (c.y - 1) / 2})));
  }
  std::sort(roots.begin(), roots.end());
  for (const Point c : disk_cells2(*domain_, b, false)) {
    const int r = dual_.find(dual_index({(c.x - 1) / 2, (c.y - 1) / 2}));
    if (std::binary_search(roots.begin(), roots.end(), r)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Arm events

void ArmSpec::validate(const Domain& d) const {
  if (r < 0 || r > R) throw std::invalid_argument("ArmSpec: need 0 <= r <= R");
  if (R > d.half_width()) throw std::invalid_argument("ArmSpec: R exceeds the box");
  if (k < 1) throw std::invalid_argument("ArmSpec: k must be at least 1");
}

namespace {

int linf(Point p) { return std::max(std::abs(p.x), std::abs(p.y)); }

}  // namespace

ArmProbe::ArmProbe(const Domain& d, const FkConfig& cfg, int R) : domain_(&d), R_(R) {
  require_edges(d, cfg);
  if (R < 0 || R > d.half_width()) throw std::invalid_argument("ArmProbe: R outside the box");
  primal_.reset(d.num_vertices());
  dual_.reset(d.num_dual_vertices());
  for (int y = -R; y <= R; ++y) {
    for (int x = -R; x <= R; ++x) {
      const int v = d.vertex_index({x, y});
      if (x < R && cfg.open[d.horizontal_edge(x, y)]) primal_.unite(v, d.vertex_index({x + 1, y}));
      if (y < R && cfg.open[d.vertical_edge(x, y)]) primal_.unite(v, d.vertex_index({x, y + 1}));
    }
  }
  // Dual edges cross primal edges strictly inside Λ_R.
  for (int y = -R + 1; y <= R - 1; ++y) {
    for (int x = -R; x <= R - 1; ++x) {
      if (!cfg.open[d.horizontal_edge(x, y)]) dual_.unite(d.dual_vertex_index(x, y - 1), d.dual_vertex_index(x, y));
    }
  }
  for (int y = -R; y <= R - 1; ++y) {
    for (int x = -R + 1; x <= R - 1; ++x) {
      if (!cfg.open[d.vertical_edge(x, y)]) dual_.unite(d.dual_vertex_index(x - 1, y), d.dual_vertex_index(x, y));
    }
  }
  reach_.assign(d.num_vertices(), 0);
  for (int t = -R; t <= R; ++t) {
    for (const Point p : {Point{t, -R}, Point{t, R}, Point{-R, t}, Point{R, t}}) {
      reach_[primal_.find(d.vertex_index(p))] = 1;
    }
  }
  dual_reach_.assign(d.num_dual_vertices(), 0);
  if (R >= 1) {
    for (int t = -R; t <= R - 1; ++t) {
      for (const Point f : {Point{t, -R}, Point{t, R - 1}, Point{-R, t}, Point{R - 1, t}}) {
        dual_reach_[dual_.find(d.dual_vertex_index(f.x, f.y))] = 1;
      }
    }
  }
}

bool ArmProbe::primal_arm(int r) {
  if (r < 0 || r > R_) throw std::invalid_argument("primal_arm: need 0 <= r <= R");
  const Domain& d = *domain_;
  if (r == 0) return reach_[primal_.find(d.vertex_index({0, 0}))] != 0;
  for (int t = -r; t <= r; ++t) {
    for (const Point p : {Point{t, -r}, Point{t, r}, Point{-r, t}, Point{r, t}}) {
      if (reach_[primal_.find(d.vertex_index(p))]) return true;
    }
  }
  return false;
}

bool ArmProbe::dual_arm(int r) {
  if (r < 0 || r > R_) throw std::invalid_argument("dual_arm: need 0 <= r <= R");
  if (r >= R_ - 1) return true;
  const Domain& d = *domain_;
  // Faces touching Λ_r: centres at L∞ distance r + 1/2.
  for (int t = -r - 1; t <= r; ++t) {
    for (const Point f : {Point{t, -r - 1}, Point{t, r}, Point{-r - 1, t}, Point{r, t}}) {
      if (dual_reach_[dual_.find(d.dual_vertex_index(f.x, f.y))]) return true;
    }
  }
  return false;
}

int crossing_clusters(const Domain& d, const FkConfig& cfg, int r, int R) {
  require_edges(d, cfg);
  if (r < 0 || r > R || R > d.half_width()) throw std::invalid_argument("crossing_clusters: need 0 <= r <= R <= N");
  if (r == R) return 0;
  thread_local UnionFind uf;
  uf.reset(d.num_vertices());
  auto in = [&](Point p) { return linf(p) >= r && linf(p) <= R; };
  // An edge on ∂Λ_r or ∂Λ_R would merge clusters along the boundary.
  auto on_rim = [&](Point a, Point b) {
    return (linf(a) == r && linf(b) == r) || (linf(a) == R && linf(b) == R);
  };
  for (int y = -R; y <= R; ++y) {
    for (int x = -R; x <= R; ++x) {
      const Point p{x, y};
      if (!in(p)) continue;
      const Point right{x + 1, y}, up{x, y + 1};
      if (x < R && in(right) && !on_rim(p, right) && cfg.open[d.horizontal_edge(x, y)]) {
        uf.unite(d.vertex_index(p), d.vertex_index(right));
      }
      if (y < R && in(up) && !on_rim(p, up) && cfg.open[d.vertical_edge(x, y)]) {
        uf.unite(d.vertex_index(p), d.vertex_index(up));
      }
    }
  }
  std::vector<int> outer;
  for (int t = -R; t <= R; ++t) {
    for (const Point p : {Point{t, -R}, Point{t, R}, Point{-R, t}, Point{R, t}}) {
      outer.push_back(uf.find(d.vertex_index(p)));
    }
  }
  std::sort(outer.begin(), outer.end());
  std::vector<int> hits;
  auto consider = [&](Point p) {
    const int root = uf.find(d.vertex_index(p));
    if (std::binary_search(outer.begin(), outer.end(), root)) hits.push_back(root);
  };
  if (r == 0) {
    consider({0, 0});
  } else {
    for (int t = -r; t <= r; ++t) {
      for (const Point p : {Point{t, -r}, Point{t, r}, Point{-r, t}, Point{r, t}}) consider(p);
    }
  }
  std::sort(hits.begin(), hits.end());
  return static_cast<int>(std::unique(hits.begin(), hits.end()) - hits.begin());
}

bool one_arm_event(const Domain& d, const FkConfig& cfg, int r, int R) {
  ArmSpec{r, R, 1}.validate(d);
  return ArmProbe(d, cfg, R).primal_arm(r);
}

bool arm_event(const Domain& d, const FkConfig& cfg, const ArmSpec& spec) {
  spec.validate(d);
  if (spec.k == 1) {
    ArmProbe probe(d, cfg, spec.R);
    return probe.primal_arm(spec.r) && probe.dual_arm(spec.r);
  }
  return crossing_clusters(d, cfg, spec.r, spec.R) >= spec.k;
}

bool rect_crossing(const Domain& d, const FkConfig& cfg, int x0, int y0, int x1, int y1,
                   bool horizontal) {
  require_edges(d, cfg);
  if (x0 > x1 || y0 > y1 || !d.contains({x0, y0}) || !d.contains({x1, y1})) {
    throw std::invalid_argument("rect_crossing: rectangle outside the box");
  }
  const int w = x1 - x0 + 1, h = y1 - y0 + 1;
  thread_local UnionFind uf;
  uf.reset(w * h + 2);
  const int src = w * h, dst = w * h + 1;
  auto id = [&](int x, int y) { return (y - y0) * w + (x - x0); };
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (x < x1 && cfg.open[d.horizontal_edge(x, y)]) uf.unite(id(x, y), id(x + 1, y));
      if (y < y1 && cfg.open[d.vertical_edge(x, y)]) uf.unite(id(x, y), id(x, y + 1));
    }
  }
  if (horizontal) {
    for (int y = y0; y <= y1; ++y) {
      uf.unite(src, id(x0, y));
      uf.unite(dst, id(x1, y));
    }
  } else {
    for (int x = x0; x <= x1; ++x) {
      uf.unite(src, id(x, y0));
      uf.unite(dst, id(x, y1));
    }
  }
  return uf.find(src) == uf.find(dst);
}

double symmetric_square_crossing(const Domain& d, const FkConfig& cfg, int r) {
  if (r < 1 || r > d.half_width()) throw std::invalid_argument("square crossing: need 1 <= r <= N");
  int hits = 0;
  for (const auto& [sx, sy] : {std::pair{1, 1}, std::pair{-1, 1}, std::pair{-1, -1}, std::pair{1, -1}}) {
    const int x0 = std::min(0, sx * r), x1 = std::max(0, sx * r);
    const int y0 = std::min(0, sy * r), y1 = std::max(0, sy * r);
    hits += rect_crossing(d, cfg, x0, y0, x1, y1, true);
    hits += rect_crossing(d, cfg, x0, y0, x1, y1, false);
  }
  return hits / 8.0;
}

double tiled_square_crossing(const Domain& d, const FkConfig& cfg, int r, int half) {
  if (r < 1 || half < 1 || (2 * half) % r != 0 || half > d.half_width()) {
    throw std::invalid_argument("tiled crossing: need r | 2·half and half <= N");
  }
  const int tiles = 2 * half / r;
  int hits = 0;
  for (int j = 0; j < tiles; ++j) {
    for (int i = 0; i < tiles; ++i) {
      const int x0 = -half + i * r, y0 = -half + j * r;
      hits += rect_crossing(d, cfg, x0, y0, x0 + r, y0 + r, true);
      hits += rect_crossing(d, cfg, x0, y0, x0 + r, y0 + r, false);
    }
  }
  return hits / (2.0 * tiles * tiles);
}

std::pair<Point, Point> two_point_pair(int s, bool vertical) {
  if (s < 0) throw std::invalid_argument("two_point_pair: negative separation");
  const int a = -(s / 2), b = s - s / 2;
  return vertical ? std::pair{Point{0, a}, Point{0, b}} : std::pair{Point{a, 0}, Point{b, 0}};
}

double two_point_value(Connectivity& conn, int s) {
  const auto [a, b] = two_point_pair(s, false);
  const auto [c, e] = two_point_pair(s, true);
  return 0.5 * (conn.primal(a, b) + conn.primal(c, e));
}

double two_point_average(Connectivity& conn, int s, int offset) {
  double sum = 0.0;
  for (int j = -1; j <= 1; ++j) {
    for (int i = -1; i <= 1; ++i) {
      const Point c{i * offset, j * offset};
      for (bool vertical : {false, true}) {
        auto [a, b] = two_point_pair(s, vertical);
        sum += conn.primal({a.x + c.x, a.y + c.y}, {b.x + c.x, b.y + c.y});
      }
    }
  }
  return sum / 18.0;
}

// ---------------------------------------------------------------------------
// Loop observables

double af_value(const Domain& d, const FkConfig& cfg, const TestFunction& f) {
  f.validate();
  if (!f.mean_zero()) throw std::invalid_argument("A_F: test function must be mean-zero");
  const std::vector<Disk> disks = f.lattice_disks(d.delta());
  const std::vector<Loop> near = loops_near(d, cfg, disks);
  return cosine_product(near, f, d.delta());
}

TildePi1Sample tilde_pi1_sample(const Domain& d, const FkConfig& cfg, const Disk& a, const Disk& b) {
  const Disk disks[] = {a, b};
  require_disjoint(disks);
  const std::vector<Loop> near = loops_near(d, cfg, disks);
  const LoopClassification c = classify(near, disks);
  TildePi1Sample s;
  s.no_odd = c.odd.empty();
  Connectivity conn(d, cfg);
  s.connected = conn.primal_disks(a, b) || conn.dual_disks(a, b);
  return s;
}

FourBallSample four_ball_sample(const Domain& d, const FkConfig& cfg, const TestFunction& f) {
  f.validate();
  if (f.size() != 4) throw std::invalid_argument("four_ball_sample: need four balls");
  const std::vector<Disk> disks = f.lattice_disks(d.delta());
  const std::vector<Loop> near = loops_near(d, cfg, disks);
  const LoopClassification c = classify(near, disks);
  FourBallSample s;
  s.tilde_pi2 = !c.two_one.empty() && c.odd.empty();
  if (c.two_one.empty() && c.odd.empty()) s.tilde_delta = c.two.size() % 2 == 0 ? 1.0 : -1.0;
  s.mixed = !c.two_one.empty() && c.two.size() > c.two_one.size();
  s.af = cosine_product(near, f, d.delta());
  return s;
}

CdeltaSample cdelta_sample(const Domain& d, const FkConfig& cfg, double eps_lattice) {
  if (!(eps_lattice > 0.0)) throw std::invalid_argument("cdelta: eps must be positive");
  const Disk disks[] = {Disk{0.0, 0.0, eps_lattice}};
  const std::vector<Loop> near = loops_near(d, cfg, disks);
  CdeltaSample s;
  s.value = 1.0;
  s.accepted = true;
  const double w = 1.0 / (2.0 * eps_lattice * eps_lattice);
  for (const Loop& l : near) {
    if (!l.intersects(disks[0])) {
      s.accepted = false;  // surrounds the ball without touching it
      s.value = 0.0;
      return s;
    }
    s.value *= std::cos(w * l.area_in(disks[0]));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Estimators

namespace {

template <class F>
EstimatorResult fold(std::span<const FkConfig> samples, F&& per_sample) {
  SeriesEstimator est;
  for (const FkConfig& cfg : samples) est.observe(per_sample(cfg));
  return est.result();
}

}  // namespace

EstimatorResult estimate_pi1(const Domain& d, const ArmSpec& spec, std::span<const FkConfig> samples) {
  spec.validate(d);
  return fold(samples, [&](const FkConfig& c) { return one_arm_event(d, c, spec.r, spec.R) ? 1.0 : 0.0; });
}

EstimatorResult estimate_pi2k(const Domain& d, const ArmSpec& spec, std::span<const FkConfig> samples) {
  spec.validate(d);
  return fold(samples, [&](const FkConfig& c) { return arm_event(d, c, spec) ? 1.0 : 0.0; });
}

EstimatorResult estimate_delta(const Domain& d, int r, std::span<const FkConfig> free_samples,
                               std::span<const FkConfig> wired_samples) {
  for (auto fam : {free_samples, wired_samples}) {
    for (const FkConfig& c : fam) require_edges(d, c);
  }
  const EstimatorResult w = fold(wired_samples, [&](const FkConfig& c) { return symmetric_square_crossing(d, c, r); });
  const EstimatorResult f = fold(free_samples, [&](const FkConfig& c) { return symmetric_square_crossing(d, c, r); });
  return difference(w, f);
}

EstimatorResult estimate_af(const Domain& d, const TestFunction& f, std::span<const FkConfig> samples) {
  f.validate();
  if (!f.mean_zero()) throw std::invalid_argument("estimate_af: test function must be mean-zero");
  return fold(samples, [&](const FkConfig& c) { return af_value(d, c, f); });
}

EstimatorResult estimate_tilde_pi1(const Domain& d, Vec2 x, Vec2 y, double eps,
                                   std::span<const FkConfig> samples) {
  TestFunction f;
  f.centers = {x, y};
  f.charges = {1, -1};
  f.eps = eps;
  f.validate();
  const std::vector<Disk> disks = f.lattice_disks(d.delta());
  const double lim = d.half_width() - 1.0;
  for (const Disk& b : disks) {
    if (std::max(std::abs(b.x), std::abs(b.y)) + b.r > lim) {
      throw std::invalid_argument("estimate_tilde_pi1: balls do not fit inside the box");
    }
  }
  return fold(samples, [&](const FkConfig& c) {
    const TildePi1Sample s = tilde_pi1_sample(d, c, disks[0], disks[1]);
    if (s.no_odd && !s.connected) {
      throw std::logic_error("tilde_pi1: no odd loop but the balls are not connected");
    }
    return s.no_odd ? 1.0 : 0.0;
  });
}

std::pair<EstimatorResult, EstimatorResult> estimate_tilde_pi2_and_delta(
    const Domain& d, Vec2 x, Vec2 y, double eps, std::span<const FkConfig> samples) {
  const double nx = std::hypot(x[0], x[1]), ny = std::hypot(y[0], y[1]);
  if (!(nx / 16.0 >= ny && ny >= 4.0 * eps)) {
    throw std::invalid_argument("estimate_tilde_pi2_and_delta: need |x|/16 >= |y| >= 4 eps");
  }
  const TestFunction f = TestFunction::four_ball(x, y, eps);
  SeriesEstimator pi2, delta;
  for (const FkConfig& c : samples) {
    const FourBallSample s = four_ball_sample(d, c, f);
    if (s.mixed) throw std::logic_error("four-ball loop families are not disjoint");
    pi2.observe(s.tilde_pi2 ? 1.0 : 0.0);
    delta.observe(s.tilde_delta);
  }
  const std::size_t len = std::max(auto_batch_length(pi2.values()), auto_batch_length(delta.values()));
  return {pi2.result(len), delta.result(len)};
}

CdeltaResult cdelta_from_series(std::span<const double> accepted, std::span<const double> value,
                                std::size_t batch_len) {
  if (accepted.size() != value.size()) throw std::invalid_argument("cdelta: series lengths differ");
  std::vector<double> num(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) num[i] = accepted[i] * value[i];
  if (batch_len == 0) batch_len = std::max(auto_batch_length(accepted), auto_batch_length(num));
  CdeltaResult out;
  const EstimatorResult den = batch_means(accepted, batch_len);
  out.acceptance = den.estimate;
  out.accepted = 0;
  for (double a : accepted) out.accepted += a > 0.5;
  if (accepted.empty() || out.acceptance < kMinAcceptance) {
    std::ostringstream msg;
    msg << "cdelta: acceptance rate " << out.acceptance << " (" << out.accepted << " of "
        << accepted.size() << " samples) is below " << kMinAcceptance;
    throw std::runtime_error(msg.str());
  }
  out.value = ratio(batch_means(num, batch_len), den);
  return out;
}

CdeltaResult estimate_cdelta(const Domain& d, double eps_lattice, std::span<const FkConfig> samples) {
  if (d.half_width() < 32.0 * eps_lattice) throw std::invalid_argument("estimate_cdelta: need R >= 32 eps");
  std::vector<double> acc, val;
  for (const FkConfig& c : samples) {
    if (!is_wired(c)) throw std::invalid_argument("estimate_cdelta: samples must be wired");
    const CdeltaSample s = cdelta_sample(d, c, eps_lattice);
    acc.push_back(s.accepted ? 1.0 : 0.0);
    val.push_back(s.value);
  }
  return cdelta_from_series(acc, val);
}

EstimatorResult estimate_two_point(const Domain& d, int s, std::span<const FkConfig> samples) {
  const auto [a, b] = two_point_pair(s, false);
  if (!d.contains(a) || !d.contains(b)) throw std::invalid_argument("estimate_two_point: points outside the box");
  return fold(samples, [&](const FkConfig& c) {
    Connectivity conn(d, c);
    return two_point_value(conn, s);
  });
}

EstimatorResult potts_correlation(const EstimatorResult& two_point) {
  EstimatorResult r = two_point;
  for (Batch& b : r.batches) {
    b.mean *= 0.75;
    b.sum_sq *= 0.5625;
  }
  r.estimate *= 0.75;
  r.std_error *= 0.75;
  return r;
}

InfluenceSample influence_sample(const Domain& d, const FkConfig& cfg, const TestFunction& f) {
  f.validate();
  if (f.size() != 4) throw std::invalid_argument("influence_sample: need four balls");
  const std::vector<Disk> b = f.lattice_disks(d.delta());
  Connectivity conn(d, cfg);
  InfluenceSample s;
  s.l1 = conn.primal_disks(b[0], b[1]);
  s.l0 = conn.dual_disks(b[0], b[1]);
  s.r1 = conn.primal_disks(b[2], b[3]);
  s.r0 = conn.dual_disks(b[2], b[3]);
  return s;
}

// ---------------------------------------------------------------------------
// Results table

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void write_results_csv(std::ostream& os, std::span<const ResultRow> rows) {
  os << "observable,r,R,eps,x,y,N,delta,bc,estimate,stderr,n_eff,seed,config_hash,code_version\r\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const ResultRow& row : rows) {
    line.str("");
    std::ostringstream delta;
    delta << row.delta.numerator() << '/' << row.delta.denominator();
    line << csv_field(row.observable) << ',' << row.r << ',' << row.R << ',' << row.eps << ',' << row.x
         << ',' << row.y << ',' << row.N << ',' << delta.str() << ',' << csv_field(row.bc) << ','
         << row.result.estimate << ',' << row.result.std_error << ',' << row.result.n_eff << ','
         << row.seed << ',' << csv_field(row.config_hash) << ',' << csv_field(row.code_version) << "\r\n";
    os << line.str();
  }
}

}  // namespace rcm4
