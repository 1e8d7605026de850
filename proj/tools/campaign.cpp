#include "campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <span>
#include <sstream>

#include <json.hpp>

#include "checks.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "io.hpp"
#include "rcm4/analysis.hpp"
#include "rcm4/gffpredict.hpp"
#include "rcm4/heightfield.hpp"
#include "rcm4/loops.hpp"
#include "rcm4/observables.hpp"

namespace rcm4::tools {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Registered campaign parameters. Changing any of these changes the chain
// fingerprints, so cached chains are recomputed.

constexpr int kBoxSizes[] = {128, 256, 512};
constexpr int kBurnIn = 1000;
constexpr int kThin = 10;
constexpr int kSamples = 2048;
constexpr int kCheckpointEvery = 250;

// Continuum geometry of the test functions; the lattice scale is δ = 8/N,
// so the box is [-8, 8]² for every N.
constexpr double kTwoBallDistance = 0.5;
constexpr double kTwoBallEps = 0.125;
constexpr double kFourBallX = 2.0;
constexpr double kFourBallY = 0.125;
constexpr double kFourBallEps = 1.0 / 32.0;

constexpr int kCdeltaEps[] = {4, 8, 16};
constexpr int kCdeltaRadiusFactors[] = {32, 64, 128};

struct CdeltaChain {
  int R;
  int burn_in, thin, samples;
};
// Boxes that are not already covered by a wired box ensemble.
constexpr CdeltaChain kCdeltaChains[] = {{1024, 800, 5, 640}, {2048, 600, 3, 320}};

constexpr double kQmBand = 4.0;
constexpr double kSigmas = 2.0;
constexpr int kTailMinEvents = 20;
// eta = 1 is measured as a diagnostic only; the tail event needs 0 < eta < 1.
constexpr double kTailEtas[] = {1.0, 0.5, 0.25};
constexpr double kTailLambdas[] = {1.0, 2.0, 4.0, 8.0};

Rational box_delta(int N) { return Rational(8, N); }

std::vector<int> dyadic_radii(int N) {
  std::vector<int> r;
  for (int k = 1; k <= 5; ++k) r.push_back(N >> k);
  return r;  // decreasing: N/2 .. N/32
}

std::string key(const std::string& base, int a) { return base + "_" + std::to_string(a); }
std::string key(const std::string& base, int a, int b) { return key(key(base, a), b); }

std::vector<int> cdelta_eps_for(int R) {
  std::vector<int> out;
  for (int e : kCdeltaEps) {
    for (int f : kCdeltaRadiusFactors) {
      if (f * e == R) out.push_back(e);
    }
  }
  return out;
}

struct ColumnSet {
  std::vector<std::string> names;
  std::size_t add(const std::string& n) {
    names.push_back(n);
    return names.size() - 1;
  }
};

void cdelta_measure(const Domain& d, const FkConfig& cfg, const std::vector<int>& eps, std::size_t first,
                    std::vector<double>& row) {
  for (std::size_t j = 0; j < eps.size(); ++j) {
    const CdeltaSample s = cdelta_sample(d, cfg, eps[j]);
    row[first + 2 * j] = s.accepted ? 1.0 : 0.0;
    row[first + 2 * j + 1] = s.accepted ? s.value : 0.0;
  }
}

/// Everything measured on the box ensembles. Indices are fixed at build
/// time; the measure closure only fills `row`.
std::pair<std::vector<std::string>, Measure> box_measure(int N, bool wired) {
  const std::vector<int> radii = dyadic_radii(N);
  const int half = N / 4;
  const int offset = N / 8;
  const std::vector<int> qm_inner = {N / 32, N / 16};
  const std::vector<int> qm_mid = {N / 8, N / 4};
  const std::vector<int> mix_r = {N / 8, N / 16, N / 32};
  const bool four_ball = N >= 256;
  const std::vector<int> cd_eps = wired ? cdelta_eps_for(N) : std::vector<int>{};
  const double delta = boost::rational_cast<double>(box_delta(N));
  const TestFunction two = TestFunction::two_ball(kTwoBallDistance, kTwoBallEps);
  const TestFunction four = TestFunction::four_ball({kFourBallX, 0.0}, {0.0, kFourBallY}, kFourBallEps);
  const std::vector<Disk> two_disks = two.lattice_disks(delta);

  ColumnSet c;
  for (int r : radii) c.add(key("pi1", r));
  for (int r : radii) c.add(key("pi2", r));
  for (int r : radii) c.add(key("cross", r));
  for (int s : radii) c.add(key("tp", s));
  for (int r : qm_inner) {
    for (int rho : qm_mid) {
      c.add(key("qm1", r, rho));
      c.add(key("qm2", r, rho));
    }
  }
  c.add("mixB");
  for (int r : mix_r) {
    c.add(key("mixA", r));
    c.add(key("mixAB", r));
  }
  c.add("af2");
  c.add("af2_range_violation");
  c.add("tpi1_violation");
  for (double eta : kTailEtas) c.add(key("tail", static_cast<int>(std::lround(1.0 / eta))));
  if (four_ball) {
    c.add("fb_mixed");
    c.add("fb_range_violation");
    c.add("fb_pi2");
    c.add("fb_delta");
  }
  const std::size_t cd_first = c.names.size();
  for (int e : cd_eps) {
    c.add(key("cd_acc", e));
    c.add(key("cd_val", e));
  }

  Measure m = [=](const Domain& d, const FkConfig& cfg, std::vector<double>& row) {
    std::size_t i = 0;
    Connectivity conn(d, cfg);
    std::vector<char> p1(radii.size());
    for (std::size_t j = 0; j < radii.size(); ++j) row[i++] = p1[j] = conn.primal_boundary_arm(radii[j]);
    for (std::size_t j = 0; j < radii.size(); ++j) row[i++] = p1[j] && conn.dual_boundary_arm(radii[j]);
    for (int r : radii) row[i++] = tiled_square_crossing(d, cfg, r, half);
    for (int s : radii) row[i++] = two_point_average(conn, s, offset);
    std::map<int, ArmProbe> probes;
    auto probe = [&](int R) -> ArmProbe& {
      auto it = probes.find(R);
      if (it == probes.end()) it = probes.emplace(R, ArmProbe(d, cfg, R)).first;
      return it->second;
    };
    for (int r : qm_inner) {
      for (int rho : qm_mid) {
        ArmProbe& p = probe(rho);
        const bool a = p.primal_arm(r);
        row[i++] = a;
        row[i++] = a && p.dual_arm(r);
      }
    }
    const bool b = crossing_clusters(d, cfg, N / 4, N / 2) >= 1;
    row[i++] = b;
    for (int r : mix_r) {
      const bool a = probe(r).primal_arm(r / 2);
      row[i++] = a;
      row[i++] = a && b;
    }

    const std::vector<Loop> near = loops_near(d, cfg, two_disks);
    const double af = cosine_product(near, two, d.delta());
    row[i++] = af;
    row[i++] = std::abs(af) > 1.0 + 1e-12;
    const LoopClassification cls = classify(near, two_disks);
    const bool connected = conn.primal_disks(two_disks[0], two_disks[1]) || conn.dual_disks(two_disks[0], two_disks[1]);
    row[i++] = cls.odd.empty() && !connected;
    for (double eta : kTailEtas) {
      int count = 0;
      for (const Loop& l : near) count += l.intersects(two_disks[0]) && l.diameter() >= eta * two_disks[0].r / 2.0;
      row[i++] = count;
    }
    if (four_ball) {
      const FourBallSample s = four_ball_sample(d, cfg, four);
      row[i++] = s.mixed;
      row[i++] = std::abs(s.af) > 1.0 + 1e-12;
      row[i++] = s.tilde_pi2;
      row[i++] = s.tilde_delta;
    }
    cdelta_measure(d, cfg, cd_eps, cd_first, row);
  };
  return {c.names, m};
}

// ---------------------------------------------------------------------------
// Statistics helpers

struct Jack {
  double value = 0.0;
  double std_error = 0.0;
};

/// Delete-one-batch jackknife of f(column means). All columns must share
/// one batch layout.
Jack jackknife(const std::vector<const EstimatorResult*>& cols, const std::function<double(const std::vector<double>&)>& f) {
  const std::size_t nb = cols.front()->batches.size();
  std::vector<double> total(cols.size(), 0.0), means(cols.size());
  double n = 0.0;
  for (std::size_t b = 0; b < nb; ++b) n += static_cast<double>(cols.front()->batches[b].size);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c]->batches.size() != nb) throw std::logic_error("jackknife: batch layouts differ");
    for (const Batch& b : cols[c]->batches) total[c] += b.mean * static_cast<double>(b.size);
    means[c] = total[c] / n;
  }
  Jack out;
  out.value = f(means);
  std::vector<double> theta(nb);
  double avg = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    const double sz = static_cast<double>(cols.front()->batches[b].size);
    std::vector<double> loo(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) loo[c] = (total[c] - cols[c]->batches[b].mean * sz) / (n - sz);
    theta[b] = f(loo);
    avg += theta[b];
  }
  avg /= static_cast<double>(nb);
  double ss = 0.0;
  for (double t : theta) ss += (t - avg) * (t - avg);
  out.std_error = std::sqrt(ss * static_cast<double>(nb - 1) / static_cast<double>(nb));
  return out;
}

struct Line {
  double slope = 0.0, intercept = 0.0, slope_se = 0.0, chi2 = 0.0;
};

Line weighted_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& se) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 1.0 / (se[i] * se[i]);
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  Line l;
  l.slope = (sw * sxy - sx * sy) / det;
  l.intercept = (sy - l.slope * sx) / sw;
  l.slope_se = std::sqrt(sw / det);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = (y[i] - l.intercept - l.slope * x[i]) / se[i];
    l.chi2 += r * r;
  }
  return l;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

std::string pm(double v, double se, int prec = 4) { return fmt(v, prec) + "+-" + fmt(se, 2); }

// ---------------------------------------------------------------------------

class Campaign {
 public:
  explicit Campaign(const CampaignOptions& o) : o_(o) {}

  void sample() {
    std::vector<ChainJob> jobs;
    // Largest boxes first so a thread pool stays busy.
    for (const CdeltaChain& cc : kCdeltaChains) {
      const std::vector<int> eps = cdelta_eps_for(cc.R);
      ColumnSet c;
      for (int e : eps) {
        c.add(key("cd_acc", e));
        c.add(key("cd_val", e));
      }
      ChainJob j = base_job("cdelta-" + std::to_string(cc.R), cc.R, BoundarySpec::wired(), 50 + cc.R);
      j.schedule = {scaled(cc.burn_in), scaled(cc.samples), cc.thin};
      j.columns = c.names;
      j.measure = [eps](const Domain& d, const FkConfig& cfg, std::vector<double>& row) {
        cdelta_measure(d, cfg, eps, 0, row);
      };
      jobs.push_back(std::move(j));
    }
    for (auto it = std::rbegin(kBoxSizes); it != std::rend(kBoxSizes); ++it) {
      const int N = *it;
      for (const BoundarySpec& bc : {BoundarySpec::free(), BoundarySpec::wired()}) {
        const bool wired = bc.kind() == BoundarySpec::Kind::Wired;
        ChainJob j = base_job("box" + std::to_string(N) + "-" + bc.name(), N, bc, 10 * N + (wired ? 1 : 0));
        j.schedule = {scaled(kBurnIn), scaled(kSamples), kThin};
        auto [cols, m] = box_measure(N, wired);
        j.columns = cols;
        j.measure = m;
        jobs.push_back(std::move(j));
      }
    }
    outputs_ = run_chains(jobs, o_.threads, o_.log);
    // Chain time, summed over chains and across resumed runs.
    for (const ChainOutput& out : outputs_) sampling_seconds_ += out.seconds;
    for (const ChainOutput& out : outputs_) {
      by_label_[out.label] = &out;
      if (o_.log) {
        o_.log(out.label + ": " + std::to_string(out.sweeps) + " sweeps, " + fmt(out.seconds, 5) + " s" +
               (out.resumed ? " (resumed)" : ""));
      }
    }
    // One batch length per box size, shared by both boundary conditions so
    // that paired differences and averages line up batch by batch.
    for (int N : kBoxSizes) {
      std::size_t len = 1, shortest = SIZE_MAX;
      for (const char* bc : {"free", "wired"}) {
        const ChainOutput& c = chain(N, bc);
        const ChainOutput* one[] = {&c};
        len = std::max(len, common_batch_length(one, c.columns));
        shortest = std::min(shortest, c.series.front().size());
      }
      batch_len_[N] = std::max<std::size_t>(1, std::min(len, shortest / kMinBatches));
    }
  }

  const ChainOutput& chain(int N, const std::string& bc) const {
    return *by_label_.at("box" + std::to_string(N) + "-" + bc);
  }

  EstimatorResult est(int N, const std::string& bc, const std::string& col) const {
    return batch_means(chain(N, bc).column(col), batch_len_.at(N));
  }
  EstimatorResult pooled(int N, const std::string& col) const {
    return average_pair(est(N, "free", col), est(N, "wired", col));
  }

  void row(const std::string& obs, int N, const std::string& bc, const EstimatorResult& r, double eps, double rr = 0,
           double R = 0) {
    ResultRow x;
    x.observable = obs;
    x.N = N;
    x.delta = box_delta(N);
    x.bc = bc;
    x.result = r;
    x.eps = eps;
    x.r = rr;
    x.R = R;
    x.seed = o_.seed;
    x.config_hash = campaign_hash();
    x.code_version = code_version();
    rows_.push_back(x);
  }

  std::string campaign_hash() const {
    std::ostringstream os;
    os << "acceptance|" << o_.seed << '|' << o_.scale << '|' << kBurnIn << '|' << kThin << '|' << kSamples;
    return sha256_hex(os.str()).substr(0, 16);
  }

  /// Scaling series over ε = r/N (largest first) for a column family.
  ScalingSeries series(int N, const std::string& family, const std::string& bc,
                       const std::function<EstimatorResult(int)>& getter) {
    ScalingSeries s;
    s.observable = family;
    s.N = N;
    s.delta = box_delta(N);
    s.bc = bc;
    for (int r : dyadic_radii(N)) {
      const EstimatorResult e = getter(r);
      s.points.push_back(ScalePoint::from(static_cast<double>(r) / N, e));
      row(family, N, bc, e, static_cast<double>(r) / N, r, N);
    }
    return s;
  }

  FitOptions fit_options() const {
    FitOptions f;
    f.exclude_largest = 0;
    f.bootstrap = 2000;
    f.seed = o_.seed;
    return f;
  }

  /// Fits `family` pooled and per bc at every N. Returns the pooled fit at
  /// the largest N; the details go into `detail` and the report.
  ExponentFit exponent_ladder(const std::string& family, const std::string& label, std::ostringstream& detail,
                              json& report, bool negate) {
    ExponentFit top;
    json entry = json::object();
    const double sign = negate ? -1.0 : 1.0;
    for (int N : kBoxSizes) {
      for (const std::string bc : {"pooled", "free", "wired"}) {
        auto getter = [&](int r) { return bc == "pooled" ? pooled(N, key(family, r)) : est(N, bc, key(family, r)); };
        ScalingSeries s = series(N, label, bc, getter);
        json fj;
        try {
          const ExponentFit f = fit_exponent(s, fit_options());
          fj = {{"slope", sign * f.exponent},
                {"ci", {sign * (negate ? f.ci_high : f.ci_low), sign * (negate ? f.ci_low : f.ci_high)}},
                {"wls_se", f.std_error},
                {"bootstrap_se", f.bootstrap_se},
                {"chi2", f.chi2},
                {"dof", f.dof}};
          if (bc == "pooled" && N == kBoxSizes[2]) top = f;
          if (bc == "pooled") detail << "N=" << N << " slope " << fmt(sign * f.exponent) << "; ";
        } catch (const std::exception& e) {
          fj = {{"error", e.what()}};
          if (bc == "pooled") detail << "N=" << N << " fit failed (" << e.what() << "); ";
          if (bc == "pooled" && N == kBoxSizes[2]) throw;
        }
        entry[std::to_string(N)][bc] = fj;
      }
    }
    report[label] = entry;
    return top;
  }

  // -------------------------------------------------------------------------

  CriterionResult band_criterion(int id, const std::string& name, const std::string& family, double target,
                                 double tol, bool negate) {
    CriterionResult c{id, name, false, "", 0.0};
    std::ostringstream d;
    try {
      const ExponentFit f = exponent_ladder(family, name, d, report_["fits"], negate);
      const double slope = negate ? -f.exponent : f.exponent;
      const double lo = negate ? -f.ci_high : f.ci_low, hi = negate ? -f.ci_low : f.ci_high;
      c.passed = std::abs(slope - target) <= tol;
      std::ostringstream head;
      head << "slope " << fmt(slope) << " (95% CI [" << fmt(lo) << ", " << fmt(hi) << "]), band " << fmt(target)
           << " +- " << fmt(tol) << ", pooled bc at N=" << kBoxSizes[2] << "; ladder: " << d.str();
      c.detail = head.str();
    } catch (const std::exception& e) {
      c.detail = "fit failed: " + std::string(e.what()) + "; " + d.str();
    }
    return c;
  }

  CriterionResult criterion7() {
    CriterionResult c{7, "two-arm-and-delta-exponents", false, "", 0.0};
    std::ostringstream d;
    bool ok = true;
    try {
      const ExponentFit f2 = exponent_ladder("pi2", "pi2", d, report_["fits"], true);
      const double s2 = -f2.exponent;
      const bool ok2 = std::abs(s2 + 0.5) <= 0.10;
      ok = ok && ok2;
      d << "| pi2 slope " << fmt(s2) << (ok2 ? " in" : " OUTSIDE") << " band; ";
    } catch (const std::exception& e) {
      ok = false;
      d << "pi2 fit failed: " << e.what() << "; ";
    }
    // Δ(r) = wired crossing minus free crossing, batch tables paired.
    int negative = 0;
    json deltas = json::array();
    for (int N : kBoxSizes) {
      ScalingSeries s;
      s.observable = "delta";
      s.N = N;
      s.delta = box_delta(N);
      s.bc = "wired-free";
      bool positive = true;
      for (int r : dyadic_radii(N)) {
        const EstimatorResult e = difference(est(N, "wired", key("cross", r)), est(N, "free", key("cross", r)));
        row("delta", N, "wired-free", e, static_cast<double>(r) / N, r, N);
        deltas.push_back({{"N", N}, {"r", r}, {"estimate", e.estimate}, {"stderr", e.std_error}});
        if (e.estimate < -kSigmas * e.std_error) ++negative;
        positive = positive && e.estimate > 0.0;
        s.points.push_back(ScalePoint::from(static_cast<double>(r) / N, e));
      }
      if (!positive) {
        d << "Delta N=" << N << " has a nonpositive scale, no fit; ";
        if (N == kBoxSizes[2]) ok = false;
        continue;
      }
      try {
        const ExponentFit f = fit_exponent(s, fit_options());
        report_["fits"]["delta"][std::to_string(N)] = {{"slope", -f.exponent},
                                                       {"ci", {-f.ci_high, -f.ci_low}},
                                                       {"chi2", f.chi2},
                                                       {"dof", f.dof}};
        d << "Delta N=" << N << " slope " << fmt(-f.exponent);
        if (N == kBoxSizes[2]) {
          const bool okd = std::abs(-f.exponent + 0.5) <= 0.10;
          ok = ok && okd;
          d << " (CI [" << fmt(-f.ci_high) << ", " << fmt(-f.ci_low) << "])" << (okd ? " in" : " OUTSIDE") << " band";
        }
        d << "; ";
      } catch (const std::exception& e) {
        d << "Delta N=" << N << " fit failed: " << e.what() << "; ";
        if (N == kBoxSizes[2]) ok = false;
      }
    }
    report_["delta"] = deltas;
    d << "Delta < -2 sigma at " << negative << " of " << deltas.size() << " scales";
    c.passed = ok && negative == 0;
    c.detail = d.str();
    return c;
  }

  CriterionResult criterion9() {
    CriterionResult c{9, "m-formula-two-ball", false, "", 0.0};
    const double prediction = gff::gff_characteristic(TestFunction::two_ball(kTwoBallDistance, kTwoBallEps));
    std::ostringstream d;
    d << "prediction " << fmt(prediction, 8) << "; ";
    std::vector<double> disc;
    json arr = json::array();
    for (int N : kBoxSizes) {
      const EstimatorResult p = pooled(N, "af2");
      row("af_two_ball", N, "pooled", p, kTwoBallEps, 0, 0);
      const EstimatorResult f = est(N, "free", "af2"), w = est(N, "wired", "af2");
      row("af_two_ball", N, "free", f, kTwoBallEps);
      row("af_two_ball", N, "wired", w, kTwoBallEps);
      const double rel = (p.estimate - prediction) / prediction;
      disc.push_back(std::abs(rel));
      arr.push_back({{"N", N},
                     {"delta", rcm4::to_string(box_delta(N))},
                     {"pooled", p.estimate},
                     {"pooled_stderr", p.std_error},
                     {"free", f.estimate},
                     {"wired", w.estimate},
                     {"relative_difference", rel}});
      d << "delta=" << rcm4::to_string(box_delta(N)) << " A_F " << pm(p.estimate, p.std_error) << " rel "
        << fmt(rel, 3) << " (free " << fmt(f.estimate) << ", wired " << fmt(w.estimate) << "); ";
    }
    report_["mformula"] = arr;
    const bool close = disc.back() < 0.15;
    const bool monotone = disc[0] > disc[1] && disc[1] > disc[2];
    d << (close ? "within 15% at the finest delta" : "NOT within 15% at the finest delta") << ", "
      << (monotone ? "monotone" : "NOT monotone");
    c.passed = close && monotone;
    c.detail = d.str();
    return c;
  }

  CriterionResult criterion10() {
    CriterionResult c{10, "cdelta-bounds", false, "", 0.0};
    std::map<int, std::map<int, EstimatorResult>> values;  // eps -> R -> value
    std::ostringstream drift;
    auto collect = [&](const ChainOutput& out, int R, std::size_t len) {
      for (int e : cdelta_eps_for(R)) {
        // Equilibration diagnostic (reported, not part of the pass rule):
        // the two halves of the series should agree.
        const std::vector<double>& acc = out.column(key("cd_acc", e));
        const std::vector<double>& val = out.column(key("cd_val", e));
        const std::size_t h = acc.size() / 2;
        auto half = [&](std::size_t from, std::size_t to) {
          const std::span<const double> a(acc.data() + from, to - from), v(val.data() + from, to - from);
          const std::size_t l = std::max<std::size_t>(1, std::min(len, a.size() / kMinBatches));
          return ratio(batch_means(v, l), batch_means(a, l));
        };
        try {
          const EstimatorResult h1 = half(0, h), h2 = half(h, acc.size());
          drift << "eps=" << e << " R=" << R << " z=" << fmt((h2.estimate - h1.estimate) / std::hypot(h1.std_error, h2.std_error), 2)
                << "; ";
        } catch (const std::exception&) {
          drift << "eps=" << e << " R=" << R << " z=n/a; ";
        }
        const EstimatorResult den = batch_means(out.column(key("cd_acc", e)), len);
        const EstimatorResult num = batch_means(out.column(key("cd_val", e)), len);
        if (!(den.estimate > 0.0)) {
          throw std::runtime_error("cdelta eps=" + std::to_string(e) + " R=" + std::to_string(R) + ": no accepted sample");
        }
        const EstimatorResult v = ratio(num, den);
        values[e][R] = v;
        row("cdelta", R, "wired", v, e, 0, R);
        row("cdelta_acceptance", R, "wired", den, e, 0, R);
      }
    };
    for (int N : kBoxSizes) collect(chain(N, "wired"), N, batch_len_.at(N));
    for (const CdeltaChain& cc : kCdeltaChains) {
      const ChainOutput& out = *by_label_.at("cdelta-" + std::to_string(cc.R));
      const ChainOutput* one[] = {&out};
      collect(out, cc.R, common_batch_length(one, out.columns));
    }
    std::ostringstream d;
    bool ok = true;
    json arr = json::array();
    for (const auto& [e, byR] : values) {
      d << "eps=" << e << ":";
      const EstimatorResult* prev = nullptr;
      for (const auto& [R, v] : byR) {
        const bool inside = v.estimate > 0.0 && v.estimate <= 1.0;
        const bool positive = v.estimate - 4.0 * v.std_error > 0.0;
        bool stable = true;
        if (prev) {
          const double s = std::hypot(v.std_error, prev->std_error);
          stable = std::abs(v.estimate - prev->estimate) < kSigmas * s;
        }
        ok = ok && inside && positive && stable;
        d << " R=" << R << " " << pm(v.estimate, v.std_error) << (inside ? "" : " OUT-OF-RANGE")
          << (positive ? "" : " NOT-4SIGMA-POSITIVE") << (stable ? "" : " UNSTABLE");
        arr.push_back({{"eps", e}, {"R", R}, {"estimate", v.estimate}, {"stderr", v.std_error}});
        prev = &v;
      }
      d << "; ";
    }
    report_["cdelta"] = arr;
    c.passed = ok;
    c.detail = d.str() + "half-series drift: " + drift.str();
    return c;
  }

  CriterionResult criterion11() {
    CriterionResult c{11, "property-suites", false, "", 0.0};
    std::ostringstream d;
    int total = 0;
    json props = json::object();

    // Quasi-multiplicativity for pi1 and pi2 with band C.
    int qm_viol = 0, qm_checked = 0;
    double worst_band = 1.0;
    for (int N : kBoxSizes) {
      for (const std::string bc : {"free", "wired"}) {
        for (int k : {1, 2}) {
          const std::string fam = "pi" + std::to_string(k);
          std::vector<QmTriple> triples;
          for (int r : {N / 32, N / 16}) {
            for (int rho : {N / 8, N / 4}) {
              const EstimatorResult in = est(N, bc, key("qm" + std::to_string(k), r, rho));
              const EstimatorResult out = est(N, bc, key(fam, rho));
              const EstimatorResult whole = est(N, bc, key(fam, r));
              triples.push_back({static_cast<double>(r), static_cast<double>(rho), static_cast<double>(N),
                                 {in.estimate, in.std_error}, {out.estimate, out.std_error},
                                 {whole.estimate, whole.std_error}});
            }
          }
          try {
            const QmReport rep = quasi_mult_audit(triples, kQmBand, kSigmas);
            qm_viol += rep.violations;
            qm_checked += static_cast<int>(rep.entries.size());
            worst_band = std::max(worst_band, rep.band);
          } catch (const std::exception& e) {
            ++qm_viol;
            d << "QM N=" << N << " " << bc << " " << fam << " failed: " << e.what() << "; ";
          }
        }
      }
    }
    props["quasi_multiplicativity"] = {{"checked", qm_checked}, {"violations", qm_viol}, {"band", worst_band}};
    d << "QM " << qm_viol << "/" << qm_checked << " violations (C=" << kQmBand << ", observed band " << fmt(worst_band)
      << "); ";
    total += qm_viol;

    // Mixing ratio P(A_r ∩ B)/(P(A_r)P(B)) must not grow as r shrinks.
    int mix_viol = 0, mix_checked = 0;
    json mix = json::array();
    for (int N : kBoxSizes) {
      for (const std::string bc : {"free", "wired"}) {
        const EstimatorResult B = est(N, bc, "mixB");
        const std::vector<int> rs = {N / 8, N / 16, N / 32};
        std::vector<EstimatorResult> A, AB;
        for (int r : rs) {
          A.push_back(est(N, bc, key("mixA", r)));
          AB.push_back(est(N, bc, key("mixAB", r)));
        }
        auto ratio_at = [](double a, double ab, double b) { return ab / (a * b); };
        std::vector<double> ratios;
        for (std::size_t i = 0; i < rs.size(); ++i) {
          const Jack j = jackknife({&A[i], &AB[i], &B}, [&](const std::vector<double>& m) {
            return ratio_at(m[0], m[1], m[2]);
          });
          ratios.push_back(j.value);
          mix.push_back({{"N", N}, {"bc", bc}, {"r", rs[i]}, {"ratio", j.value}, {"stderr", j.std_error}});
        }
        for (std::size_t i = 0; i + 1 < rs.size(); ++i) {
          const Jack diff = jackknife({&A[i], &AB[i], &A[i + 1], &AB[i + 1], &B}, [&](const std::vector<double>& m) {
            return ratio_at(m[2], m[3], m[4]) - ratio_at(m[0], m[1], m[4]);
          });
          ++mix_checked;
          if (!std::isfinite(diff.value) || diff.value > kSigmas * diff.std_error) {
            ++mix_viol;
            d << "mixing increase N=" << N << " " << bc << " r=" << rs[i + 1] << ": " << pm(diff.value, diff.std_error)
              << "; ";
          }
        }
      }
    }
    props["mixing"] = {{"checked", mix_checked}, {"violations", mix_viol}, {"ratios", mix}};
    d << "mixing " << mix_viol << "/" << mix_checked << " violations; ";
    total += mix_viol;

    // Loop tail on the first ball of the two-ball pattern at the largest N.
    int tail_viol = 0;
    json tail = json::array();
    const int Nt = kBoxSizes[2];
    for (const std::string bc : {"free", "wired"}) {
      const ChainOutput& out = chain(Nt, bc);
      int chosen = -1;
      for (std::size_t k = 0; k < std::size(kTailEtas) && chosen < 0; ++k) {
        if (!(kTailEtas[k] < 1.0)) continue;
        const std::vector<double>& counts = out.column(key("tail", static_cast<int>(std::lround(1.0 / kTailEtas[k]))));
        const double thr = kTailLambdas[std::size(kTailLambdas) - 1] / (kTailEtas[k] * kTailEtas[k]);
        const auto events = std::count_if(counts.begin(), counts.end(), [&](double v) { return v > thr; });
        if (events >= kTailMinEvents) chosen = static_cast<int>(k);
      }
      if (chosen < 0) {
        ++tail_viol;
        d << "loop tail " << bc << ": fewer than " << kTailMinEvents << " events at lambda=8 for every eta; ";
        continue;
      }
      const double eta = kTailEtas[chosen];
      const std::vector<double>& counts = out.column(key("tail", static_cast<int>(std::lround(1.0 / eta))));
      std::vector<double> x, y, se;
      json pts = json::array();
      bool usable = true;
      for (double lam : kTailLambdas) {
        std::vector<double> ev(counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i) ev[i] = counts[i] > lam / (eta * eta) ? 1.0 : 0.0;
        const EstimatorResult p = batch_means(ev, batch_len_.at(Nt));
        pts.push_back({{"lambda", lam}, {"P", p.estimate}, {"stderr", p.std_error}});
        if (!(p.estimate > 0.0) || !(p.std_error > 0.0)) {
          usable = false;
          continue;
        }
        x.push_back(lam);
        y.push_back(std::log(p.estimate));
        se.push_back(p.std_error / p.estimate);
      }
      if (!usable || x.size() < 3) {
        ++tail_viol;
        d << "loop tail " << bc << " eta=" << eta << ": P=0 or P=1 with zero variance at some lambda, no log fit; ";
        tail.push_back({{"bc", bc}, {"eta", eta}, {"points", pts}});
        continue;
      }
      const Line l = weighted_line(x, y, se);
      const bool bad = !(l.slope + kSigmas * l.slope_se < 0.0);
      tail_viol += bad;
      tail.push_back({{"bc", bc}, {"eta", eta}, {"points", pts}, {"slope", l.slope}, {"slope_se", l.slope_se},
                      {"chi2", l.chi2}, {"dof", static_cast<int>(x.size()) - 2}});
      d << "loop tail " << bc << " eta=" << eta << " log-slope " << pm(l.slope, l.slope_se) << " chi2 " << fmt(l.chi2, 3)
        << (bad ? " VIOLATION" : "") << "; ";
    }
    props["loop_tail"] = {{"violations", tail_viol}, {"fits", tail}};
    total += tail_viol;

    // Deterministic per-sample properties.
    auto count_column = [&](const std::string& col, bool four_only) {
      double n = 0, s = 0;
      for (int N : kBoxSizes) {
        if (four_only && N < 256) continue;
        for (const char* bc : {"free", "wired"}) {
          for (double v : chain(N, bc).column(col)) {
            s += v != 0.0;
            ++n;
          }
        }
      }
      return std::pair<long, long>(static_cast<long>(s), static_cast<long>(n));
    };
    const auto [af_bad, af_n] = count_column("af2_range_violation", false);
    const auto [fb_bad, fb_n] = count_column("fb_range_violation", true);
    const auto [mixed, mixed_n] = count_column("fb_mixed", true);
    const auto [tp1_bad, tp1_n] = count_column("tpi1_violation", false);
    d << "A_F outside [-1,1]: " << af_bad + fb_bad << "/" << af_n + fb_n << "; four-ball families mixed: " << mixed << "/"
      << mixed_n << "; no odd loop without connection: " << tp1_bad << "/" << tp1_n;
    props["af_range"] = {{"checked", af_n + fb_n}, {"violations", af_bad + fb_bad}};
    props["disjointness"] = {{"checked", mixed_n}, {"violations", mixed}};
    props["tilde_pi1_implication"] = {{"checked", tp1_n}, {"violations", tp1_bad}};
    for (int N : {256, 512}) {
      for (const char* bc : {"free", "wired"}) {
        row("tilde_pi2", N, bc, est(N, bc, "fb_pi2"), kFourBallEps);
        row("tilde_delta", N, bc, est(N, bc, "fb_delta"), kFourBallEps);
      }
    }
    total += static_cast<int>(af_bad + fb_bad + mixed + tp1_bad);
    report_["properties"] = props;
    c.passed = total == 0;
    c.detail = d.str();
    return c;
  }

  std::vector<CriterionResult> evaluate(std::vector<CriterionResult> checks) {
    std::vector<CriterionResult> out = std::move(checks);
    // An exception inside one evaluation fails that criterion only.
    auto guarded = [&](int id, const std::string& name, const std::function<CriterionResult()>& fn) {
      try {
        out.push_back(fn());
      } catch (const std::exception& e) {
        out.push_back({id, name, false, std::string("evaluation error: ") + e.what(), 0.0});
      }
    };
    guarded(6, "one-arm-exponent", [&] { return band_criterion(6, "one-arm-exponent", "pi1", -0.125, 0.04, true); });
    guarded(7, "two-arm-and-delta-exponents", [&] { return criterion7(); });
    // Two-point: fitted in ε = s/N, the slope is the exponent itself.
    guarded(8, "two-point-exponent", [&] { return band_criterion(8, "two-point-exponent", "tp", -0.25, 0.06, false); });
    guarded(9, "m-formula-two-ball", [&] { return criterion9(); });
    guarded(10, "cdelta-bounds", [&] { return criterion10(); });
    guarded(11, "property-suites", [&] { return criterion11(); });
    for (auto& c : out) {
      if (c.id >= 6) c.seconds = sampling_seconds_;
    }
    return out;
  }

  void write_report(const std::vector<CriterionResult>& results) {
    json crit = json::array();
    for (const CriterionResult& c : results) {
      crit.push_back({{"id", c.id}, {"name", c.name}, {"passed", c.passed}, {"detail", c.detail}, {"seconds", c.seconds}});
    }
    report_["criteria"] = crit;
    report_["campaign-hash"] = campaign_hash();
    report_["seed"] = o_.seed;
    report_["scale"] = o_.scale;
    report_["code-version"] = code_version();
    report_["sampling_seconds"] = sampling_seconds_;
    json chains = json::array();
    for (const ChainOutput& out : outputs_) {
      chains.push_back({{"label", out.label}, {"sweeps", out.sweeps}, {"seconds", out.seconds}, {"resumed", out.resumed}});
    }
    report_["chains"] = chains;
    json bl = json::object();
    for (const auto& [N, l] : batch_len_) bl[std::to_string(N)] = l;
    report_["batch_length"] = bl;
    write_file_atomic(o_.work_dir / "acceptance.json", report_.dump(2) + "\n");
    std::ostringstream csv;
    write_results_csv(csv, rows_);
    write_file_atomic(o_.work_dir / "acceptance.csv", csv.str());
  }

 private:
  int scaled(int n) const { return std::max(1, static_cast<int>(std::lround(n * o_.scale))); }

  ChainJob base_job(const std::string& label, int N, const BoundarySpec& bc, std::uint64_t index) const {
    ChainJob j;
    j.label = label;
    j.N = N;
    j.delta = box_delta(N);
    j.bc = bc;
    j.seed = o_.seed;
    j.chain_index = index;
    j.checkpoint_every = kCheckpointEvery;
    j.checkpoint_dir = o_.work_dir / "checkpoints";
    j.fingerprint_salt = "acceptance|" + std::string(code_version());
    return j;
  }

  CampaignOptions o_;
  std::vector<ChainOutput> outputs_;
  std::map<std::string, const ChainOutput*> by_label_;
  std::map<int, std::size_t> batch_len_;
  std::vector<ResultRow> rows_;
  json report_ = json::object();
  double sampling_seconds_ = 0.0;
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const CampaignOptions& options) {
  fs::create_directories(options.work_dir);
  std::vector<CriterionResult> checks;
  CheckOptions co;
  co.oracle_samples = options.oracle_samples;
  const std::pair<int, std::function<CheckResult(const CheckOptions&)>> suites[] = {
      {1, check_sampler_oracle}, {2, check_bkw_identity}, {3, check_euler}, {4, check_quadrature},
      {5, check_scaling_relations}};
  for (const auto& [id, fn] : suites) {
    const CheckResult r = fn(co);
    checks.push_back({id, r.name, r.passed, r.detail, r.seconds});
    if (options.log) options.log("criterion " + std::to_string(id) + " " + r.name + (r.passed ? " passed" : " FAILED"));
  }
  Campaign c(options);
  c.sample();
  std::vector<CriterionResult> results = c.evaluate(std::move(checks));
  c.write_report(results);
  return results;
}

}  // namespace rcm4::tools
