#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "rcm4/sampler.hpp"
#include "rcm4/stats.hpp"
#include "test_support.hpp"

using namespace rcm4;

namespace {

Graph single_edge() { return Graph::from_edges(2, {{0, 1}}); }

std::uint64_t encode(const FkConfig& c) {
  std::uint64_t w = 0;
  for (std::size_t e = 0; e < c.open.size(); ++e) w |= std::uint64_t{c.open[e]} << e;
  return w;
}

// Mean and batch-means standard error of a series.
std::pair<double, double> mean_and_error(const std::vector<double>& xs) {
  const std::size_t batches = 32;
  const std::size_t len = xs.size() / batches;
  std::vector<double> bm;
  for (std::size_t b = 0; b < batches; ++b) {
    bm.push_back(mean(std::span<const double>(xs.data() + b * len, len)));
  }
  return {mean(xs), std::sqrt(variance(bm) / batches)};
}

}  // namespace

TEST(BruteForce, SingleEdgeFree) {
  const auto d = brute_force_distribution(single_edge(), BoundarySpec::free());
  // open: 2·4 = 8, closed: 4² = 16
  EXPECT_NEAR(d.prob[1], 8.0 / 24.0, 1e-15);
  EXPECT_NEAR(d.prob[0], 16.0 / 24.0, 1e-15);
}

TEST(BruteForce, SingleEdgeWiredEndpoints) {
  const Graph g = single_edge();
  const auto d = brute_force_distribution(g, BoundarySpec::wired());
  EXPECT_NEAR(d.prob[1], 2.0 / 3.0, 1e-15);
  const auto dp = brute_force_distribution(g, BoundarySpec::partition({{0, 1}}));
  EXPECT_NEAR(dp.prob[1], 2.0 / 3.0, 1e-15);
}

TEST(BruteForce, BoxNormalisedAndSymmetric) {
  const Domain dom(1);
  for (const auto& bc : {BoundarySpec::free(), BoundarySpec::wired()}) {
    const auto d = brute_force_distribution(dom.graph(), bc);
    ASSERT_EQ(d.prob.size(), 4096u);
    EXPECT_NEAR(std::accumulate(d.prob.begin(), d.prob.end(), 0.0), 1.0, 1e-12);
    // Edges incident to the centre form one orbit under the square's
    // symmetries, perimeter edges the other.
    const int centre = dom.vertex_index({0, 0});
    double inner = -1, outer = -1;
    for (int e = 0; e < dom.num_edges(); ++e) {
      const auto [a, b] = dom.endpoints(e);
      const double m = d.edge_marginal(e);
      double& ref = (a == centre || b == centre) ? inner : outer;
      if (ref < 0) ref = m;
      EXPECT_NEAR(m, ref, 1e-13);
    }
  }
}

TEST(BruteForce, PercolationLimitIsProductMeasure) {
  const Domain dom(1);
  ModelParams q1;
  q1.q = 1;
  for (const auto& bc : {BoundarySpec::free(), BoundarySpec::wired()}) {
    const auto d = brute_force_distribution(dom.graph(), bc, q1);
    for (std::uint64_t w = 0; w < d.prob.size(); w += 37) {
      const int k = std::popcount(w);
      EXPECT_NEAR(d.prob[w], std::pow(2.0 / 3.0, k) * std::pow(1.0 / 3.0, 12 - k), 1e-15);
    }
  }
}

TEST(BruteForce, RefusesLargeGraphs) {
  const Domain dom(3);  // 84 edges
  EXPECT_THROW(brute_force_distribution(dom.graph(), BoundarySpec::free()), std::invalid_argument);
}

TEST(EsUpdate, SingleEdgeStationaryLaw) {
  const Graph g = single_edge();
  for (const auto& [bc, target] :
       std::vector<std::pair<BoundarySpec, double>>{{BoundarySpec::free(), 1.0 / 3.0},
                                                    {BoundarySpec::wired(), 2.0 / 3.0}}) {
    std::vector<double> xs;
    sample_chain(g, bc, {10, 200000, 1}, 7, 0,
                 [&](const FkConfig& c, std::uint64_t) { xs.push_back(c.open[0]); });
    const auto [m, se] = mean_and_error(xs);
    EXPECT_NEAR(m, target, 4 * se) << bc.name();
  }
}

TEST(EsUpdate, AllOpenStaysOpenAtPEqualOne) {
  const Domain dom(3);
  FkConfig cfg = FkConfig::all_open(dom.graph());
  Engine rng = make_stream(1, 0);
  ModelParams params;
  params.p = 1.0;
  for (int i = 0; i < 5; ++i) es_update(dom.graph(), cfg, params, rng);
  EXPECT_EQ(cfg.num_open(), dom.num_edges());
}

TEST(SampleChain, DeterministicAndEmpty) {
  const Domain dom(1);
  const auto a = sample_chain(dom.graph(), BoundarySpec::free(), {5, 50, 2}, 12345);
  const auto b = sample_chain(dom.graph(), BoundarySpec::free(), {5, 50, 2}, 12345);
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].open, b[i].open);
  const auto c = sample_chain(dom.graph(), BoundarySpec::free(), {5, 50, 2}, 12346);
  bool differ = false;
  for (std::size_t i = 0; i < a.size(); ++i) differ |= a[i].open != c[i].open;
  EXPECT_TRUE(differ);
  EXPECT_TRUE(sample_chain(dom.graph(), BoundarySpec::free(), {5, 0, 2}, 1).empty());
  EXPECT_THROW(sample_chain(dom.graph(), BoundarySpec::free(), {5, 10, 0}, 1), std::invalid_argument);
}

TEST(SampleChain, WiredHasMoreOpenEdgesThanFree) {
  const Domain dom(1);
  const Graph& g = dom.graph();
  const double exact_free = brute_force_distribution(g, BoundarySpec::free()).mean_open_edges();
  const double exact_wired = brute_force_distribution(g, BoundarySpec::wired()).mean_open_edges();
  EXPECT_GT(exact_wired, exact_free);
  for (const auto& [bc, exact] : std::vector<std::pair<BoundarySpec, double>>{
           {BoundarySpec::free(), exact_free}, {BoundarySpec::wired(), exact_wired}}) {
    std::vector<double> xs;
    sample_chain(g, bc, {20, 100000, 1}, 99, 0,
                 [&](const FkConfig& c, std::uint64_t) { xs.push_back(c.num_open()); });
    const auto [m, se] = mean_and_error(xs);
    EXPECT_NEAR(m, exact, 4 * se) << bc.name();
  }
}

TEST(SampleChain, MatchesEnumerationChiSquare) {
  const Domain dom(1);
  const Graph& g = dom.graph();
  const int a = dom.vertex_index({-1, -1});
  const int b = dom.vertex_index({1, 1});
  const int c = dom.vertex_index({1, -1});
  for (const auto& bc : {BoundarySpec::free(), BoundarySpec::wired(), BoundarySpec::partition({{a, b}, {c}})}) {
    const auto exact = brute_force_distribution(g, bc);
    std::map<std::uint64_t, long> counts;
    const long n = 200000;
    sample_chain(g, bc, {50, static_cast<int>(n), 3}, 2024, 0,
                 [&](const FkConfig& cfg, std::uint64_t) { ++counts[encode(cfg)]; });
    const auto chi = test_support::chi_square(exact.prob, counts, n);
    EXPECT_TRUE(chi.pass()) << bc.name() << " chi2=" << chi.statistic << " q999=" << chi.quantile999;
  }
}

TEST(Clusters, CountsWithWiring) {
  const Domain dom(1);
  const Graph& g = dom.graph();
  EXPECT_EQ(clusters(g, FkConfig::all_closed(g)).count, 9);
  EXPECT_EQ(clusters(g, FkConfig::all_closed(g, BoundarySpec::wired())).count, 2);
  EXPECT_EQ(clusters(g, FkConfig::all_open(g)).count, 1);
  EXPECT_EQ(clusters(g, FkConfig::all_open(g, BoundarySpec::wired())).count, 1);
}

TEST(PottsFromFk, Examples) {
  const Domain dom(2);
  const Graph& g = dom.graph();
  Engine rng = make_stream(3, 0);
  const auto one = potts_from_fk(g, FkConfig::all_open(g), rng);
  for (auto c : one.color) EXPECT_EQ(c, one.color[0]);

  // All closed: i.i.d. uniform colours.
  std::vector<long> hist(4, 0);
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    const auto p = potts_from_fk(g, FkConfig::all_closed(g), rng);
    for (auto c : p.color) ++hist[c];
  }
  const double n = static_cast<double>(reps) * g.num_vertices;
  for (long h : hist) EXPECT_NEAR(h / n, 0.25, 4 * std::sqrt(0.25 * 0.75 / n));

  const Graph two = single_edge();
  for (int r = 0; r < 100; ++r) {
    const auto p = potts_from_fk(two, FkConfig::all_open(two), rng);
    EXPECT_EQ(p.color[0], p.color[1]);
  }
}

// Potts two-point function from direct enumeration of 4^V colourings at
// β = ln 3 (so that p = 1 - e^{-β} = 2/3), against the FK identity
// P[σ_0 = σ_x] - 1/4 = (3/4) φ[0 ↔ x].
TEST(EdwardsSokal, TwoPointIdentityAgainstPottsEnumeration) {
  const Domain dom(1);
  const Graph& g = dom.graph();
  const int o = dom.vertex_index({0, 0});
  const auto fk = brute_force_distribution(g, BoundarySpec::free());
  for (const Point x : {Point{1, 0}, Point{1, 1}, Point{-1, 1}}) {
    const int xv = dom.vertex_index(x);
    const double connect = fk.expect([&](std::uint64_t w) {
      return clusters(g, FkConfig::from_bits(g, w)).connected(o, xv) ? 1.0 : 0.0;
    });
    const double eb = 3.0;  // e^β
    double z = 0.0, same = 0.0;
    const int v = g.num_vertices;
    std::vector<int> sigma(v, 0);
    const long total = 1L << (2 * v);
    for (long s = 0; s < total; ++s) {
      for (int i = 0; i < v; ++i) sigma[i] = static_cast<int>((s >> (2 * i)) & 3);
      double w = 1.0;
      for (const auto& [a, b] : g.edges) w *= sigma[a] == sigma[b] ? eb : 1.0;
      z += w;
      if (sigma[o] == sigma[xv]) same += w;
    }
    EXPECT_NEAR(same / z - 0.25, 0.75 * connect, 1e-12);
  }
}

TEST(SampleDump, RoundTrip) {
  const Domain dom(2, Rational(1, 4));
  const auto samples = sample_chain(dom.graph(), BoundarySpec::wired(), {3, 5, 1}, 77);
  std::stringstream ss;
  write_sample_header(ss, {2, Rational(1, 4), "wired", 77, dom.num_edges()});
  std::uint64_t sweep = 4;
  for (const auto& s : samples) write_sample_record(ss, s, sweep++);
  const auto h = read_sample_header(ss);
  EXPECT_EQ(h.half_width, 2);
  EXPECT_EQ(h.delta, Rational(1, 4));
  EXPECT_EQ(h.bc, "wired");
  EXPECT_EQ(h.seed, 77u);
  std::vector<std::uint8_t> open;
  std::size_t i = 0;
  while (read_sample_record(ss, h.num_edges, open, sweep)) {
    ASSERT_LT(i, samples.size());
    EXPECT_EQ(open, samples[i].open);
    EXPECT_EQ(sweep, 4 + i);
    ++i;
  }
  EXPECT_EQ(i, samples.size());
}

TEST(Chain, CheckpointResumesBitIdentically) {
  const Domain dom(4);
  Chain a(dom.graph(), BoundarySpec::free(), ModelParams::critical(), 5, 2);
  a.sweep(10);
  std::stringstream ss;
  a.save(ss);
  a.sweep(7);
  Chain b(dom.graph(), BoundarySpec::free(), ModelParams::critical(), 999, 0);
  b.load(ss);
  b.sweep(7);
  EXPECT_EQ(a.state().open, b.state().open);
  EXPECT_EQ(b.stats().sweeps, 17u);
}

TEST(Chain, AutocorrelationAtLeastHalf) {
  const Domain dom(4);
  Chain c(dom.graph(), BoundarySpec::wired(), ModelParams::critical(), 8);
  c.sweep(500);
  c.update_autocorrelation();
  EXPECT_GE(c.stats().tau_int, 0.5);
}
