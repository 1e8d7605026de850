#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "rcm4/heightfield.hpp"
#include "rcm4/loops.hpp"
#include "rcm4/sampler.hpp"

using namespace rcm4;

namespace {

FkConfig random_config(const Domain& d, double p, std::mt19937_64& rng) {
  FkConfig c = FkConfig::all_closed(d.graph());
  std::bernoulli_distribution coin(p);
  for (auto& b : c.open) b = coin(rng) ? 1 : 0;
  return c;
}

// Λ_k fully open, everything else closed.
FkConfig open_box(const Domain& d, int k) {
  FkConfig cfg = FkConfig::all_closed(d.graph());
  for (int e = 0; e < d.num_edges(); ++e) {
    const auto [a, b] = d.endpoints(e);
    const Point pa = d.vertex(a), pb = d.vertex(b);
    if (std::max({std::abs(pa.x), std::abs(pa.y), std::abs(pb.x), std::abs(pb.y)}) <= k) {
      cfg.open[e] = 1;
    }
  }
  return cfg;
}

const Loop& loop_through(const Domain& d, const LoopSet& ls, int edge, int quadrant) {
  return ls.loops[ls.owner[MedialSlot{edge, quadrant}.code()]];
}

}  // namespace

TEST(Orient, FairAndReproducible) {
  Engine r(1);
  EXPECT_TRUE(orient({}, r).sign.empty());
  const Domain d(1);
  const LoopSet ls = extract_loops(d, FkConfig::all_open(d.graph()));
  const std::span<const Loop> one(ls.loops.data(), 1);
  Engine rng = make_stream(5, 0);
  int plus = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) plus += orient(one, rng).sign[0] == 1;
  EXPECT_NEAR(plus, n / 2, 4 * std::sqrt(n / 4.0));
  Engine a = make_stream(9, 3), b = make_stream(9, 3);
  EXPECT_EQ(orient(ls.loops, a).sign, orient(ls.loops, b).sign);
}

TEST(Height, Superposition) {
  const Domain d(6);
  {
    const HeightField h = height(d, OrientedLoops{{}, {}});
    for (int v : h.values()) EXPECT_EQ(v, 0);
  }
  // Λ_2 open: the outer interface of the cluster and, inside it, the
  // plaquette loops around each inner dual vertex.
  const FkConfig cfg = open_box(d, 2);
  const LoopSet ls = extract_loops(d, cfg);
  const Loop& outer = loop_through(d, ls, d.horizontal_edge(2, 0), 1);
  const Loop& inner = loop_through(d, ls, d.horizontal_edge(0, 0), 0);
  {
    const std::vector<Loop> one{outer};
    const HeightField h = height(d, OrientedLoops{one, {1}});
    EXPECT_EQ(h.at(0, 0), 1);
    EXPECT_EQ(h.at(4, 4), 1);
    EXPECT_EQ(h.at(6, 0), 0);
    EXPECT_EQ(h.at_face(d.medial().outer_face()), 0);
  }
  {
    const std::vector<Loop> two{outer, inner};
    const HeightField h = height(d, OrientedLoops{two, {1, -1}});
    EXPECT_EQ(h.at(1, 1), 0);  // innermost region: the dual vertex (1/2, 1/2)
    EXPECT_EQ(h.at(0, 0), 1);
  }
}

TEST(Height, UnitJumpAcrossEveryStrand) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Domain d(5);
    const LoopSet ls = extract_loops(d, random_config(d, 0.5, rng));
    Engine e = make_stream(trial, 0);
    const HeightField h = height(d, orient(ls.loops, e));
    for (const MedialEdge& me : d.medial().edges()) {
      EXPECT_EQ(std::abs(h.at_face(me.primal_face) - h.at_face(me.dual_face)), 1);
    }
  }
}

TEST(TestIntegral, Examples) {
  const Domain d(8);
  const TestFunction f = TestFunction::two_ball(5.0, 1.5);
  EXPECT_EQ(test_integral(HeightField(d), f), 0.0);

  // One loop containing the whole ball of charge +1 gives π/2.
  const FkConfig cfg = open_box(d, 2);
  const LoopSet ls = extract_loops(d, cfg);
  const std::vector<Loop> one{loop_through(d, ls, d.horizontal_edge(2, 0), 1)};
  TestFunction single;
  single.centers = {Vec2{0.0, 0.0}};
  single.charges = {1};
  single.eps = 1.5;
  const HeightField h = height(d, OrientedLoops{one, {1}});
  EXPECT_NEAR(test_integral(h, single), std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(loop_integral(one[0], single, 1.0), std::numbers::pi / 2, 1e-12);

  TestFunction near_edge = single;
  near_edge.centers = {Vec2{7.0, 0.0}};
  EXPECT_THROW(test_integral(h, near_edge), std::invalid_argument);
}

TEST(TestIntegral, Linearity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(-4.0, 4.0);
  for (int trial = 0; trial < 40; ++trial) {
    const Domain d(8);
    const LoopSet ls = extract_loops(d, random_config(d, 0.5, rng));
    Engine e = make_stream(trial, 1);
    const HeightField h = height(d, orient(ls.loops, e));
    TestFunction f, g, fg;
    f.eps = g.eps = fg.eps = 0.9;
    f.centers = {Vec2{pos(rng), -2.5}};
    f.charges = {1};
    g.centers = {Vec2{pos(rng), 2.5}};
    g.charges = {-1};
    fg.centers = {f.centers[0], g.centers[0]};
    fg.charges = {1, -1};
    EXPECT_NEAR(test_integral(h, fg), test_integral(h, f) + test_integral(h, g), 1e-12);
  }
}

// Averaging e^{i∫Fh} over all orientations of the loops meeting supp F gives
// the cosine product exactly.
TEST(TestIntegral, CosineIdentityExact) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> pos(-5.0, 5.0);
  std::uniform_real_distribution<double> rad(0.6, 1.4);
  const Domain d(8);
  int done = 0;
  while (done < 30) {
    const FkConfig cfg = random_config(d, 0.5, rng);
    TestFunction f;
    f.eps = rad(rng);
    f.centers = {Vec2{pos(rng), pos(rng)}, Vec2{pos(rng), pos(rng)}};
    f.charges = {1, -1};
    try {
      f.validate();
    } catch (const std::invalid_argument&) {
      continue;
    }
    const std::vector<Loop> near = loops_near(d, cfg, f.lattice_disks(1.0));
    const std::size_t m = near.size();
    if (m > 12) continue;
    OrientedLoops o{near, std::vector<std::int8_t>(m, 1)};
    std::complex<double> sum = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      for (std::size_t j = 0; j < m; ++j) o.sign[j] = (mask >> j) & 1 ? -1 : 1;
      sum += std::exp(std::complex<double>(0.0, test_integral(height(d, o), f)));
    }
    sum /= static_cast<double>(1u << m);
    const double af = cosine_product(extract_loops(d, cfg).loops, f, 1.0);
    EXPECT_NEAR(sum.real(), af, 1e-10);
    EXPECT_NEAR(sum.imag(), 0.0, 1e-10);
    ++done;
  }
}

TEST(Height, DumpFormat) {
  const Domain d(1);
  const LoopSet ls = extract_loops(d, FkConfig::all_open(d.graph()));
  const HeightField h = height(d, OrientedLoops{ls.loops, std::vector<std::int8_t>(5, 1)});
  std::ostringstream os;
  write_heights(os, h);
  EXPECT_EQ(os.str(),
            "rcm4-heights v1 N=1\nprimal 3\n1 1 1\n1 1 1\n1 1 1\ndual 2\n2 2\n2 2\n");
}
