#include "checks.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "rcm4/analysis.hpp"
#include "rcm4/gffpredict.hpp"
#include "rcm4/heightfield.hpp"
#include "rcm4/loops.hpp"
#include "rcm4/stats.hpp"

#ifndef RCM4_DATA_DIR
#define RCM4_DATA_DIR "data"
#endif

namespace rcm4::tools {

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
CheckResult timed(const std::string& name, F&& body) {
  const auto t0 = Clock::now();
  CheckResult r;
  r.name = name;
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

std::uint64_t encode(const FkConfig& c) {
  std::uint64_t w = 0;
  for (std::size_t e = 0; e < c.open.size(); ++e) w |= std::uint64_t{c.open[e]} << e;
  return w;
}

struct NamedGraph {
  std::string name;
  Graph graph;
};

std::vector<NamedGraph> oracle_graphs() {
  std::vector<NamedGraph> gs;
  gs.push_back({"box-N1", Domain(1).graph()});
  // 2x3 grid: 6 vertices, 7 edges
  gs.push_back({"grid-2x3", Graph::from_edges(6, {{0, 1}, {1, 2}, {3, 4}, {4, 5}, {0, 3}, {1, 4}, {2, 5}})});
  gs.push_back({"K4", Graph::from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}})});
  // Triangle with a pendant path and a double edge.
  gs.push_back({"triangle-tail", Graph::from_edges(5, {{0, 1}, {1, 2}, {2, 0}, {2, 3}, {3, 4}, {3, 4}})});
  gs.push_back({"single-edge", Graph::from_edges(2, {{0, 1}})});
  return gs;
}

FkConfig random_config(const Domain& d, double p, Engine& rng, BoundarySpec bc) {
  FkConfig c = FkConfig::all_closed(d.graph(), bc);
  for (auto& b : c.open) b = uniform01(rng) < p ? 1 : 0;
  return c;
}

}  // namespace

std::filesystem::path default_goldens_path() {
  if (const char* env = std::getenv("RCM4_GOLDENS")) return env;
  return std::filesystem::path(RCM4_DATA_DIR) / "goldens.json";
}

int dual_components(const Domain& d, const FkConfig& cfg) {
  const bool wired = cfg.bc.kind() == BoundarySpec::Kind::Wired;
  const int n = d.half_width();
  const int faces = d.num_dual_vertices();
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
      a = a < 0 ? faces : a;
      b = b < 0 ? faces : b;
    }
    uf.unite(a, b);
  }
  return uf.components();
}

CheckResult check_sampler_oracle(const CheckOptions& o) {
  return timed("enumeration-oracle", [&](CheckResult& r) {
    std::ostringstream detail;
    bool ok = true;
    std::uint64_t index = 0;
    for (const NamedGraph& ng : oracle_graphs()) {
      for (const BoundarySpec& bc : {BoundarySpec::free(), BoundarySpec::wired()}) {
        const ExactDistribution exact = brute_force_distribution(ng.graph, bc);
        std::map<std::uint64_t, long> counts;
        sample_chain(ng.graph, bc, {100, static_cast<int>(o.oracle_samples), o.oracle_thin}, o.seed, index++,
                     [&](const FkConfig& cfg, std::uint64_t) { ++counts[encode(cfg)]; });
        const ChiSquare chi = chi_square(exact.prob, counts, o.oracle_samples);
        ok = ok && chi.pass();
        detail << ng.name << "/" << bc.name() << " chi2=" << chi.statistic << " dof=" << chi.dof
               << " q999=" << chi.quantile999 << (chi.pass() ? "" : " FAIL") << "; ";
      }
    }
    r.passed = ok;
    r.detail = detail.str();
  });
}

CheckResult check_bkw_identity(const CheckOptions& o) {
  return timed("bkw-cosine-identity", [&](CheckResult& r) {
    const Domain d(8);
    Engine rng = make_stream(o.seed, 101);
    double worst = 0.0;
    int done = 0;
    std::uint64_t chain_index = 0;
    for (const BoundarySpec& bc : {BoundarySpec::free(), BoundarySpec::wired()}) {
      const int want = o.bkw_configs / 2 + (bc.kind() == BoundarySpec::Kind::Free ? o.bkw_configs % 2 : 0);
      const std::vector<FkConfig> samples = sample_chain(d.graph(), bc, {200, want, 5}, o.seed, 500 + chain_index++);
      for (const FkConfig& cfg : samples) {
        // Draw balls until at most 12 loops meet them, so all 2^m
        // orientations can be enumerated.
        std::vector<Loop> near;
        TestFunction f;
        for (int attempt = 0;; ++attempt) {
          f.eps = 0.6 + 0.8 * uniform01(rng);
          f.centers = {Vec2{-5 + 10 * uniform01(rng), -5 + 10 * uniform01(rng)},
                       Vec2{-5 + 10 * uniform01(rng), -5 + 10 * uniform01(rng)}};
          f.charges = {1, -1};
          try {
            f.validate();
          } catch (const std::invalid_argument&) {
            continue;
          }
          near = loops_near(d, cfg, f.lattice_disks(1.0));
          if (near.size() <= 12) break;
          if (attempt > 10000) throw std::runtime_error("no test function with few enough loops");
        }
        const std::size_t m = near.size();
        OrientedLoops oriented{near, std::vector<std::int8_t>(m, 1)};
        std::complex<double> sum = 0.0;
        for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
          for (std::size_t j = 0; j < m; ++j) oriented.sign[j] = (mask >> j) & 1 ? -1 : 1;
          sum += std::exp(std::complex<double>(0.0, test_integral(height(d, oriented), f)));
        }
        sum /= static_cast<double>(1u << m);
        const double af = cosine_product(extract_loops(d, cfg).loops, f, 1.0);
        worst = std::max({worst, std::abs(sum.real() - af), std::abs(sum.imag())});
        ++done;
      }
    }
    r.passed = done == o.bkw_configs && worst <= 1e-10;
    std::ostringstream s;
    s << done << " configurations on N=8, max |average - A_F| = " << worst << " (tolerance 1e-10)";
    r.detail = s.str();
  });
}

CheckResult check_euler(const CheckOptions& o) {
  return timed("euler-loop-count", [&](CheckResult& r) {
    long checked = 0, violations = 0;
    const Domain unit(1);
    for (const BoundarySpec& bc : {BoundarySpec::free(), BoundarySpec::wired()}) {
      for (std::uint64_t bits = 0; bits < (1u << unit.num_edges()); ++bits) {
        const FkConfig cfg = FkConfig::from_bits(unit.graph(), bits, bc);
        const int loops = static_cast<int>(extract_loops(unit, cfg).loops.size());
        violations += loops != clusters(unit.graph(), cfg).count + dual_components(unit, cfg) - 1;
        ++checked;
      }
    }
    const Domain d(8);
    Engine rng = make_stream(o.seed, 202);
    for (int t = 0; t < o.euler_random; ++t) {
      const BoundarySpec bc = t % 2 ? BoundarySpec::wired() : BoundarySpec::free();
      const FkConfig cfg = random_config(d, 0.05 + 0.9 * uniform01(rng), rng, bc);
      const int loops = static_cast<int>(extract_loops(d, cfg).loops.size());
      violations += loops != clusters(d.graph(), cfg).count + dual_components(d, cfg) - 1;
      ++checked;
    }
    r.passed = violations == 0;
    r.detail = std::to_string(checked) + " configurations (all of N=1 under free and wired, " +
               std::to_string(o.euler_random) + " random on N=8), " + std::to_string(violations) + " violations";
  });
}

CheckResult check_quadrature(const CheckOptions& o) {
  return timed("quadrature-goldens", [&](CheckResult& r) {
    using nlohmann::json;
    const std::filesystem::path path = o.goldens.empty() ? default_goldens_path() : o.goldens;
    json g;
    {
      std::ifstream in(path);
      if (!in) throw std::runtime_error("golden file " + path.string() + " cannot be opened");
      try {
        g = json::parse(in);
      } catch (const json::exception& e) {
        throw std::runtime_error("golden file " + path.string() + " is corrupted: " + e.what());
      }
    }
    std::ostringstream s;
    bool ok = true;
    auto fail = [&](const std::string& what) {
      ok = false;
      s << what << " FAIL; ";
    };
    try {
      if (g.at("format") != "rcm4-goldens v1") fail("unknown golden format");
      // b₀: refinement oracle against the golden value and the cached result.
      const double golden_b0 = g.at("b0").at("value").get<double>();
      const double tol_b0 = g.at("b0").at("tolerance").get<double>();
      const double coarse = gff::b0_composite(64), fine = gff::b0_composite(128);
      s << "b0=" << gff::b0() << " refined=" << fine << " refinement-step=" << std::abs(fine - coarse) << "; ";
      if (std::abs(fine - golden_b0) > tol_b0) fail("b0 refinement vs golden");
      if (std::abs(gff::b0() - golden_b0) > tol_b0) fail("b0 vs golden");
      if (std::abs(fine - coarse) > tol_b0) fail("b0 refinement not converged");

      const json& mv = g.at("mean_value");
      const double mv_eps = mv.at("eps").get<double>(), mv_tol = mv.at("tolerance").get<double>();
      double worst = 0.0;
      for (const json& dist : mv.at("distances")) {
        const double x = dist.get<double>();
        if (x < 2.0 * mv_eps) fail("mean-value distance below 2eps in golden file");
        worst = std::max({worst, std::abs(gff::b_eps_polar(x, mv_eps)), std::abs(gff::b_eps(x, mv_eps))});
      }
      s << "max |b_eps| for |x|>=2eps = " << worst << "; ";
      if (worst > mv_tol) fail("mean-value identity");

      const json& inside = g.at("b_eps_inside");
      const double in_eps = inside.at("eps").get<double>(), in_tol = inside.at("tolerance").get<double>();
      for (const json& p : inside.at("points")) {
        const double x = p.at("distance").get<double>(), want = p.at("value").get<double>();
        if (std::abs(gff::b_eps(x, in_eps) - want) > in_tol) fail("b_eps at |x|=" + std::to_string(x));
      }

      const json& tb = g.at("two_ball");
      const double dist = tb.at("distance").get<double>(), eps = tb.at("eps").get<double>();
      const double value = gff::gff_characteristic(TestFunction::two_ball(dist, eps));
      const double closed = std::exp(2.0 * gff::b0()) * std::pow(eps / dist, 0.25);
      s << "two-ball=" << value << "; ";
      if (std::abs(value - tb.at("value").get<double>()) > tb.at("tolerance").get<double>()) fail("two-ball vs golden");
      if (std::abs(value - closed) > tb.at("tolerance").get<double>()) fail("two-ball vs closed form");
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("golden file " + path.string() + " is corrupted: " + e.what());
    }
    r.passed = ok;
    r.detail = s.str();
  });
}

CheckResult check_scaling_relations(const CheckOptions&) {
  return timed("scaling-relations", [&](CheckResult& r) {
    const ScalingExponents s = scaling_relations(Rational(1, 8), Rational(1, 2));
    const bool ok = s.nu == Rational(2, 3) && s.beta == Rational(1, 12) && s.gamma == Rational(7, 6) &&
                    s.alpha == Rational(2, 3) && s.eta == Rational(1, 4) && s.volume_tail == Rational(1, 15);
    r.passed = ok;
    r.detail = "nu=" + to_string(s.nu) + " beta=" + to_string(s.beta) + " gamma=" + to_string(s.gamma) +
               " alpha=" + to_string(s.alpha) + " eta=" + to_string(s.eta) + " vol=" + to_string(s.volume_tail);
  });
}

std::vector<CheckResult> run_fast_suites(const CheckOptions& o) {
  return {check_sampler_oracle(o), check_bkw_identity(o), check_euler(o), check_quadrature(o),
          check_scaling_relations(o)};
}

}  // namespace rcm4::tools
