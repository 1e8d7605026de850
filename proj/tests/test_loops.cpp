#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "rcm4/geometry.hpp"
#include "rcm4/loops.hpp"
#include "rcm4/sampler.hpp"

using namespace rcm4;

namespace {

// Components of the dual configuration. Free: all faces plus the exterior
// vertex, perimeter edges cross into the exterior. Wired: inner faces only.
int dual_components(const Domain& d, const FkConfig& cfg, bool wired) {
  const int n = d.half_width();
  const int faces = d.num_dual_vertices();
  const int exterior = faces;
  UnionFind uf(faces + (wired ? 0 : 1));
  auto face = [&](int x, int y) {
    if (x < -n || x > n - 1 || y < -n || y > n - 1) return -1;
    return d.dual_vertex_index(x, y);
  };
  for (int e = 0; e < d.num_edges(); ++e) {
    if (cfg.open[e]) continue;
    const Point o = d.edge_origin(e);
    int a, b;
    if (d.is_horizontal(e)) {
      a = face(o.x, o.y - 1);
      b = face(o.x, o.y);
    } else {
      a = face(o.x - 1, o.y);
      b = face(o.x, o.y);
    }
    if (a < 0 || b < 0) {
      if (wired) continue;
      a = a < 0 ? exterior : a;
      b = b < 0 ? exterior : b;
    }
    uf.unite(a, b);
  }
  return uf.components();
}

int euler_prediction(const Domain& d, const FkConfig& cfg) {
  const bool wired = cfg.bc.kind() == BoundarySpec::Kind::Wired;
  return clusters(d.graph(), cfg).count + dual_components(d, cfg, wired) - 1;
}

FkConfig random_config(const Domain& d, double p, std::mt19937_64& rng, BoundarySpec bc) {
  FkConfig c = FkConfig::all_closed(d.graph(), bc);
  std::bernoulli_distribution coin(p);
  for (auto& b : c.open) b = coin(rng) ? 1 : 0;
  return c;
}

// Traversal direction and starting point are arbitrary, so compare loops by
// their sorted point lists.
std::set<std::vector<Point>> canonical(const std::vector<Loop>& loops) {
  std::set<std::vector<Point>> out;
  for (const Loop& l : loops) {
    std::vector<Point> pts = l.points();
    std::sort(pts.begin(), pts.end());
    out.insert(std::move(pts));
  }
  return out;
}

}  // namespace

TEST(Loops, UnitBoxExamples) {
  const Domain d(1);
  EXPECT_EQ(extract_loops(d, FkConfig::all_closed(d.graph())).loops.size(), 9u);
  // All open with free bc: four plaquette loops plus the outer interface.
  EXPECT_EQ(extract_loops(d, FkConfig::all_open(d.graph())).loops.size(), 5u);
  EXPECT_EQ(extract_loops(d, FkConfig::all_open(d.graph(), BoundarySpec::wired())).loops.size(), 4u);
  EXPECT_EQ(extract_loops(d, FkConfig::all_closed(d.graph(), BoundarySpec::wired())).loops.size(),
            2u);
}

TEST(Loops, EulerIdentityExhaustiveUnitBox) {
  const Domain d(1);
  for (const BoundarySpec& bc : {BoundarySpec::free(), BoundarySpec::wired()}) {
    for (std::uint64_t bits = 0; bits < (1u << d.num_edges()); ++bits) {
      const FkConfig cfg = FkConfig::from_bits(d.graph(), bits, bc);
      const LoopSet ls = extract_loops(d, cfg);
      ASSERT_EQ(static_cast<int>(ls.loops.size()), euler_prediction(d, cfg))
          << bc.name() << " bits " << bits;
    }
  }
}

TEST(Loops, EulerIdentityRandomBoxes) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> size(1, 8);
  std::uniform_real_distribution<double> dens(0.05, 0.95);
  int violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Domain d(size(rng));
    const BoundarySpec bc = trial % 2 ? BoundarySpec::wired() : BoundarySpec::free();
    const FkConfig cfg = random_config(d, dens(rng), rng, bc);
    if (static_cast<int>(extract_loops(d, cfg).loops.size()) != euler_prediction(d, cfg)) {
      ++violations;
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST(Loops, PartitionAndDegree) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Domain d(1 + trial % 2);
    const bool wired = trial % 4 >= 2;
    const FkConfig cfg =
        random_config(d, 0.5, rng, wired ? BoundarySpec::wired() : BoundarySpec::free());
    const LoopSet ls = extract_loops(d, cfg);
    const MedialGraph mg = d.medial();
    std::size_t total = 0;
    for (const Loop& l : ls.loops) total += l.length();
    if (!wired) {
      EXPECT_EQ(total, static_cast<std::size_t>(mg.num_edges()));
      EXPECT_TRUE(std::none_of(ls.owner.begin(), ls.owner.end(), [](int o) { return o < 0; }));
    }
    // Each medial vertex is visited exactly twice (four slots, two visits).
    std::vector<int> visits(d.num_edges(), 0);
    for (const Loop& l : ls.loops) {
      for (int s : l.slots()) ++visits[s / 4];
    }
    for (int e = 0; e < d.num_edges(); ++e) {
      const bool dropped_side = wired && d.is_perimeter_edge(e);
      EXPECT_EQ(visits[e], dropped_side ? 1 : 2) << "edge " << e;
    }
    // Every slot owner points at a loop that actually contains it.
    for (std::size_t li = 0; li < ls.loops.size(); ++li) {
      for (int s : ls.loops[li].slots()) EXPECT_EQ(ls.owner[s], static_cast<int>(li));
    }
  }
}

TEST(Loops, PairingNeverCrossesOpenEdgesOrDualEdges) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const Domain d(1 + trial % 5);
    const FkConfig cfg = random_config(d, 0.5, rng, BoundarySpec::free());
    const LoopTracer tracer(d, cfg);
    for (int e = 0; e < d.num_edges(); ++e) {
      std::vector<int> seen;
      tracer.trace({e, 0}, &seen);
      // seen = dep0, arr0, dep1, arr1, ...; arr_i is paired with dep_{i+1}.
      for (std::size_t i = 1; i < seen.size(); i += 2) {
        const MedialSlot arr = MedialSlot::from_code(seen[i]);
        const MedialSlot dep = MedialSlot::from_code(seen[(i + 1) % seen.size()]);
        ASSERT_EQ(arr.vertex, dep.vertex);
        const Point a = kQuadrant[arr.quadrant];
        const Point b = kQuadrant[dep.quadrant];
        const bool horizontal = d.is_horizontal(arr.vertex);
        const bool open = cfg.open[arr.vertex] != 0;
        // Open: stay on one side of e. Closed: stay on one side of e*.
        const bool same_side_of_line_y = a.y == b.y;
        const bool same_side_of_line_x = a.x == b.x;
        if (horizontal == open) {
          EXPECT_TRUE(same_side_of_line_y);
          EXPECT_FALSE(same_side_of_line_x);
        } else {
          EXPECT_TRUE(same_side_of_line_x);
          EXPECT_FALSE(same_side_of_line_y);
        }
      }
    }
  }
}

TEST(Loops, RayParityMatchesWindingNumber) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int loops_checked = 0;
  while (loops_checked < 1000) {
    const Domain d(6);
    const FkConfig cfg = random_config(d, 0.5, rng, BoundarySpec::free());
    for (const Loop& l : extract_loops(d, cfg).loops) {
      for (int k = 0; k < 20; ++k) {
        const double x = 0.5 * (l.min_x2() - 1 + (l.max_x2() - l.min_x2() + 2) * u(rng));
        double y = 0.5 * (l.min_y2() - 1 + (l.max_y2() - l.min_y2() + 2) * u(rng));
        if (k % 4 == 0) y = std::round(y);  // exercise the integer-row branch
        if (l.distance_to(x, y) < 1e-6) continue;
        ASSERT_EQ(l.encloses(x, y), l.encloses_by_winding(x, y)) << x << ' ' << y;
      }
      for (int y = l.min_y2(); y <= l.max_y2(); ++y) {
        for (int x = l.min_x2() + ((l.min_x2() + y) & 1); x <= l.max_x2(); x += 2) {
          ASSERT_EQ(l.encloses_face(x, y), l.encloses_by_winding(0.5 * x, 0.5 * y));
        }
      }
      if (++loops_checked >= 1000) break;
    }
  }
}

TEST(Geometry, DiskAreas) {
  const Disk inside{0.3, -0.2, 0.4};
  const std::array<Vec2, 4> square{Vec2{-1, -1}, Vec2{1, -1}, Vec2{1, 1}, Vec2{-1, 1}};
  EXPECT_NEAR(disk_polygon_area(inside, square), std::numbers::pi * 0.16, 1e-14);
  EXPECT_NEAR(disk_polygon_area({0, 0, 5}, square), 4.0, 1e-14);
  EXPECT_NEAR(disk_polygon_area({1, 0, 0.5}, square), std::numbers::pi * 0.125, 1e-14);
  EXPECT_NEAR(disk_polygon_area({1, 1, 0.5}, square), std::numbers::pi * 0.0625, 1e-14);
  // Medial faces tile the plane, so their overlaps add up to the disk area.
  for (const Disk& d : {Disk{0.1, 0.37, 3.3}, Disk{2.0, -1.0, 1.0}, Disk{0.25, 0.25, 0.2}}) {
    double total = 0.0;
    for (int y = -20; y <= 20; ++y) {
      for (int x = -20; x <= 20; ++x) {
        if (((x + y) & 1) == 0) total += disk_face_area(d, x, y);
      }
    }
    EXPECT_NEAR(total, std::numbers::pi * d.r * d.r, 1e-11);
  }
  EXPECT_NEAR(segment_distance(0, 1, {-1, 0}, {1, 0}), 1.0, 1e-15);
  EXPECT_NEAR(segment_distance(3, 4, {-1, 0}, {0, 0}), 5.0, 1e-15);
}

TEST(Loops, AreaInsideDiskAgreesWithGrid) {
  std::mt19937_64 rng(19);
  const Domain d(6);
  const FkConfig cfg = random_config(d, 0.6, rng, BoundarySpec::free());
  const Disk disk{0.3, -0.4, 2.2};
  for (const Loop& l : extract_loops(d, cfg).loops) {
    const double exact = l.area_in(disk);
    // Midpoint rule on a fine grid; boundary cells limit accuracy.
    const int m = 400;
    const double h = 2.0 * disk.r / m;
    double approx = 0.0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        const double x = disk.x - disk.r + (i + 0.5) * h;
        const double y = disk.y - disk.r + (j + 0.5) * h;
        if (std::hypot(x - disk.x, y - disk.y) <= disk.r && l.encloses(x, y)) approx += h * h;
      }
    }
    EXPECT_NEAR(exact, approx, 0.05) << "loop length " << l.length();
  }
}

TEST(Loops, SurroundCountExamples) {
  const Domain d(6);
  // Isolated vertex far from the ball: tiny square loop.
  {
    const FkConfig cfg = FkConfig::all_closed(d.graph());
    const LoopSet ls = extract_loops(d, cfg);
    const std::vector<Disk> disks{{0, 0, 1}};
    const int slot = MedialSlot{d.horizontal_edge(4, 4), 0}.code();
    const Loop& tiny = ls.loops[ls.owner[slot]];
    EXPECT_EQ(tiny.length(), 4u);
    const SurroundResult r = surround_count(tiny, disks);
    EXPECT_EQ(r.count(), 0);
    EXPECT_FALSE(r.intersects_any);
  }
  // The outer interface of a fully open Λ_2 surrounds a ball of radius 1.5
  // at the origin and nothing else.
  {
    FkConfig cfg = FkConfig::all_closed(d.graph());
    for (int e = 0; e < d.num_edges(); ++e) {
      const auto [a, b] = d.endpoints(e);
      const Point pa = d.vertex(a), pb = d.vertex(b);
      if (std::max({std::abs(pa.x), std::abs(pa.y), std::abs(pb.x), std::abs(pb.y)}) <= 2) {
        cfg.open[e] = 1;
      }
    }
    const std::vector<Disk> disks{{0, 0, 1.5}, {0, -4.5, 1.0}};
    const LoopSet ls = extract_loops(d, cfg);
    const Loop& outer = ls.loops[ls.owner[MedialSlot{d.horizontal_edge(2, 0), 1}.code()]];
    const SurroundResult r = surround_count(outer, disks);
    EXPECT_EQ(r.surrounds, (std::vector<std::uint8_t>{1, 0}));
    EXPECT_FALSE(r.intersects_any);
    const LoopClassification c = classify(ls.loops, disks);
    const int outer_index = ls.owner[MedialSlot{d.horizontal_edge(2, 0), 1}.code()];
    EXPECT_NE(std::find(c.odd.begin(), c.odd.end(), outer_index), c.odd.end());
    EXPECT_NEAR(outer.area_in(disks[0]), std::numbers::pi * 2.25, 1e-12);
    // A plaquette loop inside Λ_2 crossing the ball is excluded from 𝓛_X.
    const int inner = ls.owner[MedialSlot{d.horizontal_edge(0, 0), 0}.code()];
    EXPECT_TRUE(c.per_loop[inner].intersects_any);
    EXPECT_EQ(std::find(c.free.begin(), c.free.end(), inner), c.free.end());
  }
  const std::vector<Disk> overlapping{{0, 0, 1}, {1.5, 0, 1}};
  const FkConfig cfg = FkConfig::all_closed(d.graph());
  EXPECT_THROW(surround_count(extract_loops(d, cfg).loops[0], overlapping), std::invalid_argument);
}

TEST(Loops, LoopsNearMatchesFullExtraction) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const Domain d(8);
    const BoundarySpec bc = trial % 2 ? BoundarySpec::wired() : BoundarySpec::free();
    const FkConfig cfg = random_config(d, 0.4 + 0.01 * (trial % 30), rng, bc);
    const std::vector<Disk> disks{{-3.3, 0.5, 1.2}, {2.0, 2.0, 1.7}};
    std::vector<Loop> expected;
    for (Loop& l : extract_loops(d, cfg).loops) {
      bool meets = false;
      for (const Disk& disk : disks) meets = meets || l.area_in(disk) > 0.0 || l.intersects(disk);
      if (meets) expected.push_back(std::move(l));
    }
    EXPECT_EQ(canonical(loops_near(d, cfg, disks)), canonical(expected));
  }
}

TEST(Loops, FourBallFamiliesAreDisjointEvents) {
  std::mt19937_64 rng(29);
  const Domain d(8);
  const std::vector<Disk> disks{{0, 0, 1}, {0, 3, 1}, {5, 0, 1}, {5, 3, 1}};
  for (int trial = 0; trial < 300; ++trial) {
    const FkConfig cfg = random_config(d, 0.5, rng, BoundarySpec::free());
    const std::vector<Loop> loops = loops_near(d, cfg, disks);
    const LoopClassification c = classify(loops, disks);
    const bool two_one = !c.two_one.empty();
    const bool two_rest = c.two.size() > c.two_one.size();
    EXPECT_FALSE(two_one && two_rest);
    for (int i : c.odd) EXPECT_EQ(c.per_loop[i].count() % 2, 1);
  }
}

TEST(Loops, TailEvent) {
  EXPECT_FALSE(loop_tail_event({}, {0, 0, 4}, 0.5, 1.0));
  const Domain d(4);
  const FkConfig cfg = FkConfig::all_closed(d.graph());
  const LoopSet ls = extract_loops(d, cfg);
  const Loop& tiny = ls.loops[ls.owner[MedialSlot{d.horizontal_edge(0, 0), 0}.code()]];
  const std::vector<Loop> one{tiny};
  EXPECT_TRUE(loop_tail_event(one, {0, 0, 2}, 0.5, 0.0));
  EXPECT_FALSE(loop_tail_event(one, {0, 0, 2}, 0.5, 1.0));
  EXPECT_THROW(loop_tail_event(one, {0, 0, 2}, 1.0, 0.0), std::invalid_argument);
}

TEST(Loops, DumpFormat) {
  const Domain d(1);
  const LoopSet ls = extract_loops(d, FkConfig::all_open(d.graph()));
  std::ostringstream os;
  write_loops(os, ls.loops);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "rcm4-loops v1 count=5");
  std::string word;
  is >> word;
  EXPECT_EQ(word, "loop");
}
