#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "rcm4/heightfield.hpp"
#include "rcm4/observables.hpp"

using namespace rcm4;

namespace {

FkConfig random_config(const Domain& d, double p, std::mt19937_64& rng,
                       BoundarySpec bc = BoundarySpec::free()) {
  FkConfig c = FkConfig::all_closed(d.graph(), bc);
  std::bernoulli_distribution coin(p);
  for (auto& b : c.open) b = coin(rng) ? 1 : 0;
  return c;
}

// Opens every edge with both endpoints in [x0,x1]×[y0,y1].
void open_rect(const Domain& d, FkConfig& cfg, int x0, int y0, int x1, int y1) {
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (x < x1) cfg.open[d.horizontal_edge(x, y)] = 1;
      if (y < y1) cfg.open[d.vertical_edge(x, y)] = 1;
    }
  }
}

std::vector<FkConfig> chain(const Domain& d, BoundarySpec bc, int n, std::uint64_t seed, int thin = 2) {
  return sample_chain(d.graph(), bc, {50, n, thin}, seed);
}

}  // namespace

// ---------------------------------------------------------------------------
// Estimator plumbing

TEST(BatchMeans, ConstantAndKnownSeries) {
  const std::vector<double> ones(64, 1.0);
  const EstimatorResult r = batch_means(ones, 4);
  EXPECT_EQ(r.batches.size(), 16u);
  EXPECT_DOUBLE_EQ(r.estimate, 1.0);
  EXPECT_DOUBLE_EQ(r.std_error, 0.0);
  EXPECT_TRUE(r.reliable());

  std::vector<double> alt;
  for (int i = 0; i < 32; ++i) alt.push_back(i % 2);
  const EstimatorResult a = batch_means(alt, 2);
  EXPECT_DOUBLE_EQ(a.estimate, 0.5);
  EXPECT_DOUBLE_EQ(a.std_error, 0.0);  // every batch mean is 1/2

  // Leftover samples join the last batch; a short series is one batch.
  const std::vector<double> five{1, 2, 3, 4, 5};
  const EstimatorResult b = batch_means(five, 2);
  ASSERT_EQ(b.batches.size(), 2u);
  EXPECT_EQ(b.batches[1].size, 3u);
  EXPECT_DOUBLE_EQ(b.estimate, 3.0);
  EXPECT_EQ(batch_means(five, 10).batches.size(), 1u);
  EXPECT_FALSE(b.reliable());
  EXPECT_THROW(batch_means(five, 0), std::invalid_argument);
}

TEST(BatchMeans, IidErrorMatchesNaive) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<double> xs(64000);
  for (double& x : xs) x = g(rng);
  const EstimatorResult r = batch_means_auto(xs);
  EXPECT_GE(r.batches.size(), kMinBatches);
  EXPECT_NEAR(r.std_error, 1.0 / std::sqrt(64000.0), 0.3 / std::sqrt(64000.0));
  EXPECT_GT(r.n_eff, 30000.0);
}

TEST(BatchMeans, MergeIsAssociativeAndCommutative) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u;
  std::vector<EstimatorResult> parts;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> xs(100 + 37 * c);
    for (double& x : xs) x = u(rng);
    parts.push_back(batch_means(xs, 5, c));
  }
  const EstimatorResult ab_c = merge(merge(parts[0], parts[1]), parts[2]);
  const EstimatorResult a_bc = merge(parts[0], merge(parts[1], parts[2]));
  const EstimatorResult cba = merge(parts[2], merge(parts[1], parts[0]));
  EXPECT_EQ(ab_c.estimate, a_bc.estimate);
  EXPECT_EQ(ab_c.std_error, a_bc.std_error);
  EXPECT_EQ(ab_c.estimate, cba.estimate);
  EXPECT_EQ(ab_c.std_error, cba.std_error);
  EXPECT_EQ(ab_c.batches, cba.batches);
  EXPECT_EQ(ab_c.n_samples, 100u + 137u + 174u);
}

TEST(BatchMeans, RatioAndDifference) {
  std::vector<double> den, num;
  for (int i = 0; i < 64; ++i) {
    den.push_back(i % 4 == 0 ? 0.0 : 1.0);
    num.push_back(den.back() * 0.5);
  }
  const EstimatorResult r = ratio(batch_means(num, 4), batch_means(den, 4));
  EXPECT_DOUBLE_EQ(r.estimate, 0.5);
  EXPECT_NEAR(r.std_error, 0.0, 1e-15);
  EXPECT_THROW(ratio(batch_means(num, 4), batch_means(den, 8)), std::invalid_argument);

  const EstimatorResult a = batch_means(std::vector<double>(32, 2.0), 2);
  const EstimatorResult b = batch_means(std::vector<double>(32, 0.5), 2);
  const EstimatorResult d = difference(a, b);
  EXPECT_DOUBLE_EQ(d.estimate, 1.5);
  EXPECT_EQ(d.batches.size(), 16u);
  for (const Batch& x : d.batches) EXPECT_DOUBLE_EQ(x.mean, 1.5);
}

// ---------------------------------------------------------------------------
// Arm events

TEST(Arms, TrivialCases) {
  const Domain d(8);
  std::mt19937_64 rng(1);
  const FkConfig closed = FkConfig::all_closed(d.graph());
  const FkConfig open = FkConfig::all_open(d.graph());
  for (int r = 0; r <= 8; ++r) EXPECT_TRUE(one_arm_event(d, random_config(d, 0.3, rng), r, r));
  EXPECT_TRUE(one_arm_event(d, open, 0, 8));
  EXPECT_FALSE(one_arm_event(d, closed, 0, 8));
  EXPECT_FALSE(one_arm_event(d, closed, 2, 8));
  EXPECT_FALSE(arm_event(d, open, {2, 8, 1}));
  EXPECT_TRUE(ArmProbe(d, closed, 8).dual_arm(2));
  EXPECT_THROW(one_arm_event(d, open, 5, 4), std::invalid_argument);
  EXPECT_THROW(one_arm_event(d, open, 1, 9), std::invalid_argument);

  const std::vector<FkConfig> opens(20, open);
  const EstimatorResult p1 = estimate_pi1(d, {3, 8, 1}, opens);
  EXPECT_EQ(p1.estimate, 1.0);
  EXPECT_EQ(estimate_pi2k(d, {3, 8, 1}, opens).estimate, 0.0);
}

TEST(Arms, TwoDisjointCrossings) {
  const Domain d(10);
  FkConfig cfg = FkConfig::all_closed(d.graph());
  open_rect(d, cfg, 3, 0, 10, 0);
  open_rect(d, cfg, -10, 0, -3, 0);
  EXPECT_EQ(crossing_clusters(d, cfg, 3, 10), 2);
  EXPECT_TRUE(arm_event(d, cfg, {3, 10, 2}));
  EXPECT_FALSE(arm_event(d, cfg, {3, 10, 3}));
  // Joining the two arms along ∂Λ_3 does not merge them; joining them
  // through the annulus does.
  open_rect(d, cfg, -3, -3, 3, -3);
  EXPECT_EQ(crossing_clusters(d, cfg, 3, 10), 2);
  open_rect(d, cfg, -5, -5, 5, -5);
  open_rect(d, cfg, -5, -5, -5, 0);
  open_rect(d, cfg, 5, -5, 5, 0);
  EXPECT_EQ(crossing_clusters(d, cfg, 3, 10), 1);
  // Both arms with a dual path between them: the k = 1 event.
  FkConfig one = FkConfig::all_closed(d.graph());
  open_rect(d, one, 2, 0, 10, 0);
  EXPECT_TRUE(arm_event(d, one, {2, 10, 1}));
}

TEST(Arms, OneArmIsMonotone) {
  std::mt19937_64 rng(2);
  const Domain d(10);
  std::uniform_int_distribution<int> pick(0, d.num_edges() - 1);
  for (int trial = 0; trial < 300; ++trial) {
    FkConfig cfg = random_config(d, 0.45, rng);
    const int r = trial % 6;
    const bool before = one_arm_event(d, cfg, r, 10);
    for (int k = 0; k < 10; ++k) {
      const int e = pick(rng);
      if (cfg.open[e]) continue;
      cfg.open[e] = 1;
      const bool after = one_arm_event(d, cfg, r, 10);
      EXPECT_TRUE(!before || after);
    }
  }
}

TEST(Arms, TwoArmBelowOneArmSquared) {
  const Domain d(16);
  const auto samples = chain(d, BoundarySpec::free(), 1500, 21);
  const EstimatorResult p1 = estimate_pi1(d, {2, 16, 1}, samples);
  const EstimatorResult p2 = estimate_pi2k(d, {2, 16, 1}, samples);
  EXPECT_GT(p1.estimate, 0.2);
  EXPECT_LE(p2.estimate, 4.0 * p1.estimate * p1.estimate + 3 * p2.std_error);
  EXPECT_LE(p2.estimate, p1.estimate);
}

TEST(Crossing, SquareCrossing) {
  const Domain d(6);
  EXPECT_EQ(symmetric_square_crossing(d, FkConfig::all_open(d.graph()), 4), 1.0);
  EXPECT_EQ(symmetric_square_crossing(d, FkConfig::all_closed(d.graph()), 4), 0.0);
  FkConfig cfg = FkConfig::all_closed(d.graph());
  open_rect(d, cfg, 0, 2, 4, 2);  // crosses [0,4]² horizontally only
  EXPECT_EQ(symmetric_square_crossing(d, cfg, 4), 1.0 / 8.0);
  EXPECT_TRUE(rect_crossing(d, cfg, 0, 0, 4, 4, true));
  EXPECT_FALSE(rect_crossing(d, cfg, 0, 0, 4, 4, false));
}

TEST(Delta, SameBoundaryIsZeroAndWiredDominates) {
  const Domain d(12);
  const auto free_a = chain(d, BoundarySpec::free(), 800, 31);
  const auto free_b = chain(d, BoundarySpec::free(), 800, 32);
  const auto wired = chain(d, BoundarySpec::wired(), 800, 33);
  const EstimatorResult same = estimate_delta(d, 6, free_a, free_b);
  EXPECT_LT(std::abs(same.estimate), 4 * same.std_error + 1e-12);
  const EstimatorResult delta = estimate_delta(d, 6, free_a, wired);
  EXPECT_GT(delta.estimate, -2 * delta.std_error);
  EXPECT_GT(delta.estimate, 0.0);
  const Domain other(11);
  EXPECT_THROW(estimate_delta(other, 6, free_a, wired), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Two-point function

TEST(TwoPoint, ZeroSeparationAndPlacement) {
  const Domain d(8);
  const auto samples = chain(d, BoundarySpec::free(), 20, 4);
  EXPECT_EQ(estimate_two_point(d, 0, samples).estimate, 1.0);
  EXPECT_EQ(two_point_pair(5, false), (std::pair{Point{-2, 0}, Point{3, 0}}));
  EXPECT_EQ(two_point_pair(4, true), (std::pair{Point{0, -2}, Point{0, 2}}));
  EXPECT_THROW(estimate_two_point(d, 20, samples), std::invalid_argument);
}

// P[σ_a = σ_b] − 1/4 = (3/4) φ⁰[a ↔ b], checked against a direct sum over
// all 4^9 colourings of Λ_1 with e^β = 1/(1 − p).
TEST(TwoPoint, PottsIdentityAgainstEnumeration) {
  const Domain d(1);
  const Graph& g = d.graph();
  const int a = d.vertex_index({-1, 0}), b = d.vertex_index({1, 0});
  const double eb = 1.0 / (1.0 - ModelParams::critical().p);
  double z = 0.0, same = 0.0;
  std::vector<int> col(9);
  for (int code = 0; code < (1 << 18); ++code) {
    for (int v = 0; v < 9; ++v) col[v] = (code >> (2 * v)) & 3;
    int agree = 0;
    for (const auto& e : g.edges) agree += col[e[0]] == col[e[1]];
    const double w = std::pow(eb, agree);
    z += w;
    if (col[a] == col[b]) same += w;
  }
  const ExactDistribution exact = brute_force_distribution(g, BoundarySpec::free());
  const double conn = exact.expect([&](std::uint64_t bits) {
    const Clusters c = clusters(g, FkConfig::from_bits(g, bits));
    return c.connected(a, b) ? 1.0 : 0.0;
  });
  EXPECT_NEAR(same / z - 0.25, 0.75 * conn, 1e-12);

  EstimatorResult tp = batch_means(std::vector<double>{1, 0, 1, 1}, 1);
  const EstimatorResult pc = potts_correlation(tp);
  EXPECT_DOUBLE_EQ(pc.estimate, 0.75 * tp.estimate);
  EXPECT_DOUBLE_EQ(pc.std_error, 0.75 * tp.std_error);
}

// ---------------------------------------------------------------------------
// Loop observables

TEST(AF, ChargeArithmetic) {
  const Domain d(12);
  EXPECT_EQ(cosine_product({}, TestFunction::two_ball(8.0, 1.5), 1.0), 1.0);

  // The outer loop of an open Λ_2 surrounds the ball at 0 and misses it.
  FkConfig cfg = FkConfig::all_closed(d.graph());
  open_rect(d, cfg, -2, -2, 2, 2);
  TestFunction f;
  f.centers = {Vec2{0.0, 0.0}, Vec2{8.0, 0.0}};
  f.charges = {1, -1};
  f.eps = 1.5;
  EXPECT_NEAR(af_value(d, cfg, f), 0.0, 1e-12);

  // A loop around both balls: cos(0) for opposite charges, cos(π) for equal.
  FkConfig big = FkConfig::all_closed(d.graph());
  open_rect(d, big, -6, -6, 6, 6);
  const LoopSet ls = extract_loops(d, big);
  const Loop* outer = nullptr;
  for (const Loop& l : ls.loops) {
    if (l.encloses(0.0, 0.0) && l.diameter() > 12.0) outer = &l;
  }
  ASSERT_NE(outer, nullptr);
  TestFunction pm;
  pm.centers = {Vec2{-2.5, 0.0}, Vec2{2.5, 0.0}};
  pm.charges = {1, -1};
  pm.eps = 1.0;
  EXPECT_NEAR(std::cos(loop_integral(*outer, pm, 1.0)), 1.0, 1e-12);
  TestFunction pp = pm;
  pp.charges = {1, 1};
  EXPECT_NEAR(std::cos(loop_integral(*outer, pp, 1.0)), -1.0, 1e-12);

  TestFunction unbalanced = pp;
  EXPECT_THROW(af_value(d, cfg, unbalanced), std::invalid_argument);
}

TEST(AF, BoundedOnSamples) {
  const Domain d(16, Rational(1, 8));
  const TestFunction f = TestFunction::two_ball(1.0, 0.25);
  for (const BoundarySpec& bc : {BoundarySpec::free(), BoundarySpec::wired()}) {
    const auto samples = chain(d, bc, 200, 5);
    for (const FkConfig& c : samples) {
      const double v = af_value(d, c, f);
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
    const EstimatorResult r = estimate_af(d, f, samples);
    EXPECT_GT(r.estimate, 0.0);
    EXPECT_LT(r.estimate, 1.0);
  }
}

TEST(AF, EqualChargesWithOddLoopGiveZero) {
  // Remark: with equal charges, a loop surrounding one ball contributes
  // cos(π/2) = 0, and so does any odd family member.
  const Domain d(12);
  std::mt19937_64 rng(9);
  TestFunction f;
  f.centers = {Vec2{-3.0, 0.0}, Vec2{3.0, 0.0}};
  f.charges = {1, 1};
  f.eps = 1.2;
  const std::vector<Disk> disks = f.lattice_disks(1.0);
  int seen = 0;
  for (int t = 0; t < 300; ++t) {
    const FkConfig cfg = random_config(d, 0.5, rng);
    const std::vector<Loop> near = loops_near(d, cfg, disks);
    const LoopClassification c = classify(near, disks);
    if (c.odd.empty()) continue;
    ++seen;
    EXPECT_NEAR(cosine_product(near, f, 1.0), 0.0, 1e-12);
  }
  EXPECT_GT(seen, 0);
}

TEST(TildePi1, ImplicationAndSymmetry) {
  const Domain d(16, Rational(1, 4));
  const auto samples = chain(d, BoundarySpec::free(), 300, 6);
  const Vec2 x{-1.0, 0.0}, y{1.5, 0.5};
  // The estimator throws if a sample has no odd loop but no connection.
  const EstimatorResult a = estimate_tilde_pi1(d, x, y, 0.5, samples);
  const EstimatorResult b = estimate_tilde_pi1(d, y, x, 0.5, samples);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_GT(a.estimate, 0.0);
  EXPECT_LT(a.estimate, 1.0);
  EXPECT_THROW(estimate_tilde_pi1(d, x, y, 1.5, samples), std::invalid_argument);
  EXPECT_THROW(estimate_tilde_pi1(d, Vec2{-3.0, 0.0}, Vec2{3.0, 0.0}, 0.9, samples),
               std::invalid_argument);

  std::mt19937_64 rng(7);
  const Domain unit(12);
  for (int t = 0; t < 400; ++t) {
    const FkConfig cfg = random_config(unit, 0.5, rng, t % 2 ? BoundarySpec::wired() : BoundarySpec::free());
    const TildePi1Sample s = tilde_pi1_sample(unit, cfg, Disk{-3.0, 0.5, 1.3}, Disk{2.5, -1.0, 0.8});
    EXPECT_TRUE(!s.no_odd || s.connected);
  }
}

TEST(FourBall, HandConfigurations) {
  const Domain d(40);
  const TestFunction f = TestFunction::four_ball(Vec2{32.0, 0.0}, Vec2{0.0, 2.0}, 0.4);
  // Wired, everything open: only plaquette loops, none around two balls.
  {
    const FourBallSample s = four_ball_sample(d, FkConfig::all_open(d.graph(), BoundarySpec::wired()), f);
    EXPECT_FALSE(s.tilde_pi2);
    EXPECT_EQ(s.tilde_delta, 1.0);
  }
  // One cluster around balls 0 and y: one loop surrounding that pair.
  {
    FkConfig cfg = FkConfig::all_closed(d.graph());
    open_rect(d, cfg, -1, -1, 1, 3);
    const FourBallSample s = four_ball_sample(d, cfg, f);
    EXPECT_FALSE(s.tilde_pi2);
    EXPECT_EQ(s.tilde_delta, -1.0);
    EXPECT_FALSE(s.mixed);
  }
  // A cluster around balls 0 and x only: a loop in the split family.
  {
    FkConfig cfg = FkConfig::all_closed(d.graph());
    open_rect(d, cfg, -1, -1, 1, 1);
    open_rect(d, cfg, -1, -1, 33, -1);
    open_rect(d, cfg, 31, -1, 33, 1);
    const FourBallSample s = four_ball_sample(d, cfg, f);
    EXPECT_TRUE(s.tilde_pi2);
    EXPECT_EQ(s.tilde_delta, 0.0);
    EXPECT_FALSE(s.mixed);
  }
  EXPECT_THROW(estimate_tilde_pi2_and_delta(d, Vec2{16.0, 0.0}, Vec2{0.0, 2.0}, 0.4, {}),
               std::invalid_argument);
  EXPECT_THROW(estimate_tilde_pi2_and_delta(d, Vec2{32.0, 0.0}, Vec2{0.0, 1.0}, 0.4, {}),
               std::invalid_argument);
}

TEST(FourBall, FamiliesDisjointOnSamples) {
  const Domain d(40, Rational(1, 2));
  const auto samples = chain(d, BoundarySpec::free(), 150, 11);
  const auto [pi2, delta] = estimate_tilde_pi2_and_delta(d, Vec2{16.0, 0.0}, Vec2{0.0, 1.0}, 0.25, samples);
  EXPECT_GE(pi2.estimate, 0.0);
  EXPECT_LE(std::abs(delta.estimate), 1.0);
  const TestFunction f = TestFunction::four_ball(Vec2{16.0, 0.0}, Vec2{0.0, 1.0}, 0.25);
  for (const FkConfig& c : samples) {
    const FourBallSample s = four_ball_sample(d, c, f);
    EXPECT_FALSE(s.mixed);
    EXPECT_LE(std::abs(s.af), 1.0);
  }
}

TEST(Cdelta, BoundsAndRejection) {
  const Domain d(32);
  const auto samples = chain(d, BoundarySpec::wired(), 400, 12, 1);
  const CdeltaResult c = estimate_cdelta(d, 1.0, samples);
  EXPECT_GT(c.acceptance, 0.0);
  EXPECT_LE(c.value.estimate, 1.0);
  EXPECT_GT(c.value.estimate, 0.0);
  EXPECT_THROW(estimate_cdelta(d, 2.0, samples), std::invalid_argument);  // R < 32 eps
  const auto free_samples = chain(d, BoundarySpec::free(), 5, 12, 1);
  EXPECT_THROW(estimate_cdelta(d, 1.0, free_samples), std::invalid_argument);
  const std::vector<double> none(100, 0.0);
  EXPECT_THROW(cdelta_from_series(none, none), std::runtime_error);
}

TEST(Cdelta, SampleValues) {
  const Domain d(32);
  // All open, wired: only plaquette loops, none surrounds the ball.
  const CdeltaSample s = cdelta_sample(d, FkConfig::all_open(d.graph(), BoundarySpec::wired()), 2.0);
  EXPECT_TRUE(s.accepted);
  EXPECT_LE(s.value, 1.0);
  // An open box around the ball inside a closed wired box: rejected.
  FkConfig cfg = FkConfig::all_closed(d.graph(), BoundarySpec::wired());
  open_rect(d, cfg, -4, -4, 4, 4);
  EXPECT_FALSE(cdelta_sample(d, cfg, 2.0).accepted);
}

TEST(Influence, DirectionOnSamples) {
  const Domain d(24, Rational(1, 4));
  const auto samples = chain(d, BoundarySpec::free(), 600, 13);
  const TestFunction f = TestFunction::four_ball(Vec2{2.0, 0.0}, Vec2{0.0, 1.0}, 0.25);
  std::vector<double> diff;
  for (const FkConfig& c : samples) {
    const InfluenceSample s = influence_sample(d, c, f);
    diff.push_back((s.l1 && s.r1 ? 1.0 : 0.0) - (s.l1 && s.r0 ? 1.0 : 0.0));
  }
  const EstimatorResult r = batch_means_auto(diff);
  EXPECT_GT(r.estimate, -2 * r.std_error);
}

TEST(Connectivity, BoundaryConventions) {
  const Domain d(4);
  Connectivity wired(d, FkConfig::all_closed(d.graph(), BoundarySpec::wired()));
  EXPECT_TRUE(wired.primal({-4, 0}, {4, 3}));
  EXPECT_FALSE(wired.primal({0, 0}, {4, 3}));
  EXPECT_TRUE(wired.dual({-4, -4}, {3, 3}));
  Connectivity free(d, FkConfig::all_closed(d.graph()));
  EXPECT_FALSE(free.primal({-4, 0}, {4, 3}));
  Connectivity open_free(d, FkConfig::all_open(d.graph()));
  EXPECT_FALSE(open_free.dual({-4, -4}, {-3, -4}));
  FkConfig cfg = FkConfig::all_open(d.graph());
  cfg.open[d.horizontal_edge(-4, -4)] = 0;
  cfg.open[d.horizontal_edge(3, 4)] = 0;
  Connectivity via_exterior(d, cfg);
  EXPECT_TRUE(via_exterior.dual({-4, -4}, {3, 3}));
  // A disk meeting the diamond of a vertex counts the vertex.
  const auto cells = disk_cells2(d, Disk{0.0, 0.0, 0.3}, true);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0], (Point{0, 0}));
  EXPECT_EQ(disk_cells2(d, Disk{0.0, 0.0, 0.3}, false).size(), 0u);
  EXPECT_EQ(disk_cells2(d, Disk{0.0, 0.0, 0.36}, false).size(), 4u);
}

// The boundary-arm queries agree with a fresh ArmProbe at R = N.
TEST(Connectivity, BoundaryArmsMatchArmProbe) {
  std::mt19937_64 rng(12);
  const Domain d(7);
  for (int trial = 0; trial < 60; ++trial) {
    const BoundarySpec bc = trial % 2 ? BoundarySpec::wired() : BoundarySpec::free();
    const FkConfig cfg = random_config(d, 0.3 + 0.4 * (trial % 5) / 4.0, rng, bc);
    Connectivity conn(d, cfg);
    ArmProbe probe(d, cfg, 7);
    for (int r = 0; r <= 7; ++r) {
      ASSERT_EQ(conn.primal_boundary_arm(r), probe.primal_arm(r)) << trial << " r=" << r;
      ASSERT_EQ(conn.dual_boundary_arm(r), probe.dual_arm(r)) << trial << " r=" << r;
    }
  }
}

TEST(Crossing, TiledCrossing) {
  const Domain d(8);
  EXPECT_EQ(tiled_square_crossing(d, FkConfig::all_open(d.graph()), 2, 4), 1.0);
  FkConfig cfg = FkConfig::all_closed(d.graph());
  open_rect(d, cfg, -4, -3, 0, -3);  // crosses tile [-4,-2]x[-4,-2] and [-2,0]x[-4,-2] horizontally
  EXPECT_EQ(tiled_square_crossing(d, cfg, 2, 4), 2.0 / 32.0);
  EXPECT_EQ(tiled_square_crossing(d, cfg, 8, 4), 0.0);
  EXPECT_THROW(tiled_square_crossing(d, cfg, 3, 4), std::invalid_argument);
  EXPECT_THROW(tiled_square_crossing(d, cfg, 2, 9), std::invalid_argument);
}

TEST(TwoPoint, TranslateAverage) {
  const Domain d(8);
  Connectivity open(d, FkConfig::all_open(d.graph()));
  EXPECT_EQ(two_point_average(open, 6, 2), 1.0);
  Connectivity closed(d, FkConfig::all_closed(d.graph()));
  EXPECT_EQ(two_point_average(closed, 0, 2), 1.0);
  EXPECT_EQ(two_point_average(closed, 2, 2), 0.0);
}

TEST(ResultsCsv, Format) {
  ResultRow row;
  row.observable = "pi1";
  row.r = 16;
  row.R = 512;
  row.N = 512;
  row.delta = Rational(1, 64);
  row.bc = "wired";
  row.result.estimate = 0.5;
  row.result.std_error = 0.01;
  row.result.n_eff = 100;
  row.seed = 7;
  row.config_hash = "ab,c";
  row.code_version = "v\"1";
  std::ostringstream os;
  write_results_csv(os, std::span<const ResultRow>(&row, 1));
  EXPECT_EQ(os.str(),
            "observable,r,R,eps,x,y,N,delta,bc,estimate,stderr,n_eff,seed,config_hash,code_version\r\n"
            "pi1,16,512,0,0,0,512,1/64,wired,0.5,0.01,100,7,\"ab,c\",\"v\"\"1\"\r\n");
}
