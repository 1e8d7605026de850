#include "rcm4/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "rcm4/rng.hpp"

namespace rcm4 {

ScalePoint ScalePoint::from(double eps, const EstimatorResult& r) {
  ScalePoint p{eps, r.estimate, r.std_error, {}};
  for (const Batch& b : r.batches) p.batch_means.push_back(b.mean);
  return p;
}

void ScalingSeries::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].estimate > 0.0)) {
      throw std::invalid_argument("scaling series: estimates must be positive (" + observable + ")");
    }
    if (!(points[i].eps > 0.0)) throw std::invalid_argument("scaling series: eps must be positive");
    if (i > 0 && !(points[i].eps < points[i - 1].eps)) {
      throw std::invalid_argument("scaling series: eps must be strictly decreasing");
    }
  }
}

namespace {

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

// Weighted least squares y = a + b x.
Line wls(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_exponent: degenerate design (all eps equal)");
  Line l;
  l.slope = sxy / sxx;
  l.intercept = my - l.slope * mx;
  l.slope_se = std::sqrt(1.0 / sxx);
  return l;
}

}  // namespace

ExponentFit fit_exponent(const ScalingSeries& series, const FitOptions& options) {
  if (series.points.size() < 4) throw std::invalid_argument("fit_exponent: need at least four points");
  for (const ScalePoint& p : series.points) {
    if (!(p.estimate > 0.0)) throw std::invalid_argument("fit_exponent: nonpositive estimate");
  }
  std::vector<ScalePoint> pts = series.points;
  std::sort(pts.begin(), pts.end(), [](const ScalePoint& a, const ScalePoint& b) { return a.eps > b.eps; });
  if (pts.front().eps == pts.back().eps) throw std::invalid_argument("fit_exponent: degenerate design (all eps equal)");
  const int drop = std::max(0, options.exclude_largest);
  if (static_cast<int>(pts.size()) - drop < 3) {
    throw std::invalid_argument("fit_exponent: fewer than three points left after exclusion");
  }
  pts.erase(pts.begin(), pts.begin() + drop);

  const std::size_t n = pts.size();
  std::vector<double> x(n), y(n), w(n);
  const bool weighted = std::all_of(pts.begin(), pts.end(), [](const ScalePoint& p) { return p.std_error > 0.0; });
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::log(pts[i].eps);
    y[i] = std::log(pts[i].estimate);
    const double rel = pts[i].std_error / pts[i].estimate;
    w[i] = weighted ? 1.0 / (rel * rel) : 1.0;
  }
  const Line line = wls(x, y, w);
  ExponentFit fit;
  fit.exponent = line.slope;
  fit.intercept = line.intercept;
  fit.std_error = line.slope_se;
  fit.dof = static_cast<int>(n) - 2;
  for (std::size_t i = 0; i < n; ++i) {
    fit.used_eps.push_back(pts[i].eps);
    const double r = (y[i] - line.intercept - line.slope * x[i]) * std::sqrt(w[i]);
    fit.residuals.push_back(r);
    fit.chi2 += r * r;
  }
  if (!weighted) fit.std_error *= std::sqrt(fit.chi2 / std::max(1, fit.dof));

  // Bootstrap over batch means. Aligned tables (same batch count, which is
  // the case for points measured on one sample stream) are resampled with
  // common indices so correlations between scales survive.
  const bool have_batches = std::all_of(pts.begin(), pts.end(), [](const ScalePoint& p) { return p.batch_means.size() >= 2; });
  std::size_t nb = have_batches ? pts[0].batch_means.size() : 0;
  const bool aligned = have_batches && std::all_of(pts.begin(), pts.end(), [&](const ScalePoint& p) {
    return p.batch_means.size() == nb;
  });
  if (have_batches && !aligned) {
    nb = pts[0].batch_means.size();
    for (const ScalePoint& p : pts) nb = std::min(nb, p.batch_means.size());
  }
  std::vector<double> slopes;
  slopes.reserve(options.bootstrap);
  std::vector<double> yb(n), wb(n);
  for (int b = 0; b < options.bootstrap; ++b) {
    Engine rng = make_stream(options.seed, static_cast<std::uint64_t>(b));
    bool ok = true;
    wb = w;
    if (have_batches) {
      std::vector<std::size_t> common(nb);
      for (auto& k : common) k = std::uniform_int_distribution<std::size_t>(0, nb - 1)(rng);
      for (std::size_t i = 0; i < n && ok; ++i) {
        const auto& m = pts[i].batch_means;
        const double bm = static_cast<double>(m.size());
        double s = 0.0, s2 = 0.0;
        for (std::size_t j = 0; j < m.size(); ++j) {
          const std::size_t k = aligned ? common[j] : std::uniform_int_distribution<std::size_t>(0, m.size() - 1)(rng);
          s += m[k];
          s2 += m[k] * m[k];
        }
        const double est = s / bm;
        if (!(est > 0.0)) ok = false;
        yb[i] = ok ? std::log(est) : 0.0;
        // The weights are estimated too, so they are re-estimated per resample.
        const double se = std::sqrt(std::max(0.0, (s2 / bm - est * est) / (bm - 1.0)));
        if (weighted && se > 0.0 && ok) wb[i] = est * est / (se * se);
      }
    } else {
      std::normal_distribution<double> g;
      for (std::size_t i = 0; i < n && ok; ++i) {
        const double est = pts[i].estimate + pts[i].std_error * g(rng);
        if (!(est > 0.0)) ok = false;
        yb[i] = ok ? std::log(est) : 0.0;
      }
    }
    if (ok) slopes.push_back(wls(x, yb, wb).slope);
  }
  fit.bootstrap_used = static_cast<int>(slopes.size());
  if (slopes.size() >= 2) {
    double m = 0.0;
    for (double s : slopes) m += s;
    m /= static_cast<double>(slopes.size());
    double v = 0.0;
    for (double s : slopes) v += (s - m) * (s - m);
    v /= static_cast<double>(slopes.size() - 1);
    // Resampled batch means underestimate the spread by a factor (B−1)/B.
    const double scale = have_batches ? std::sqrt(static_cast<double>(nb) / static_cast<double>(nb - 1)) : 1.0;
    fit.bootstrap_se = std::sqrt(v) * scale;
  } else {
    fit.bootstrap_se = fit.std_error;
  }
  // With B batches the pivot is Student-t with B−1 degrees of freedom.
  double q = 1.959963984540054;
  if (have_batches && nb >= 2) {
    q = boost::math::quantile(boost::math::students_t(static_cast<double>(nb - 1)), 0.5 + options.level / 2.0);
  }
  // Both standard errors are estimates; the larger one keeps the interval
  // from undercovering when the batch count is small.
  const double half = q * std::max(fit.bootstrap_se, fit.std_error);
  fit.ci_low = fit.exponent - half;
  fit.ci_high = fit.exponent + half;
  return fit;
}

std::string fit_report_json(const ScalingSeries& series, const ExponentFit& fit,
                            const std::vector<LadderFit>& ladder, const std::string& config_hash) {
  using nlohmann::json;
  json points = json::array();
  for (const ScalePoint& p : series.points) {
    points.push_back({{"eps", p.eps}, {"estimate", p.estimate}, {"stderr", p.std_error},
                      {"batches", p.batch_means.size()}});
  }
  json lad = json::array();
  for (const LadderFit& l : ladder) {
    lad.push_back({{"N", l.N}, {"slope", l.fit.exponent}, {"CI", {l.fit.ci_low, l.fit.ci_high}}});
  }
  json doc = {
      {"observable", series.observable},
      {"N", series.N},
      {"delta", to_string(series.delta)},
      {"bc", series.bc},
      {"N-ladder", lad},
      {"points", points},
      {"used_eps", fit.used_eps},
      {"slope", fit.exponent},
      {"intercept", fit.intercept},
      {"wls_stderr", fit.std_error},
      {"bootstrap_stderr", fit.bootstrap_se},
      {"bootstrap_resamples", fit.bootstrap_used},
      {"CI", {fit.ci_low, fit.ci_high}},
      {"residuals", fit.residuals},
      {"chi2", fit.chi2},
      {"dof", fit.dof},
      {"config-hash", config_hash},
  };
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

QmReport quasi_mult_audit(const std::vector<QmTriple>& triples, double c, double sigmas) {
  if (!(c >= 1.0)) throw std::invalid_argument("quasi_mult_audit: C must be at least 1");
  QmReport rep;
  rep.tested_c = c;
  rep.min_ratio = HUGE_VAL;
  rep.max_ratio = 0.0;
  for (const QmTriple& t : triples) {
    if (!(0.0 <= t.r && t.r <= t.rho && t.rho <= t.R)) {
      throw std::invalid_argument("quasi_mult_audit: scales must satisfy r <= rho <= R");
    }
    for (const Scaled& s : {t.inner, t.outer, t.whole}) {
      if (!(s.value > 0.0)) throw std::invalid_argument("quasi_mult_audit: probabilities must be positive");
    }
    QmEntry e;
    e.triple = t;
    e.ratio = t.whole.value / (t.inner.value * t.outer.value);
    const double rel = std::sqrt(std::pow(t.whole.std_error / t.whole.value, 2) +
                                 std::pow(t.inner.std_error / t.inner.value, 2) +
                                 std::pow(t.outer.std_error / t.outer.value, 2));
    e.std_error = e.ratio * rel;
    e.violates = e.ratio - sigmas * e.std_error > c || e.ratio + sigmas * e.std_error < 1.0 / c;
    rep.violations += e.violates;
    rep.min_ratio = std::min(rep.min_ratio, e.ratio);
    rep.max_ratio = std::max(rep.max_ratio, e.ratio);
    rep.entries.push_back(e);
  }
  if (rep.entries.empty()) rep.min_ratio = rep.max_ratio = 1.0;
  rep.band = std::max(rep.max_ratio, 1.0 / rep.min_ratio);
  return rep;
}

// ---------------------------------------------------------------------------

ScalingExponents scaling_relations(Rational xi1, Rational iota) {
  if (xi1 < Rational(0) || xi1 >= Rational(1)) throw std::invalid_argument("scaling_relations: need 0 <= xi1 < 1");
  if (iota <= Rational(0) || iota >= Rational(2)) throw std::invalid_argument("scaling_relations: need 0 < iota < 2");
  ScalingExponents s;
  s.xi1 = xi1;
  s.iota = iota;
  s.nu = Rational(1) / (Rational(2) - iota);
  s.beta = xi1 * s.nu;
  s.gamma = (Rational(2) - Rational(2) * xi1) * s.nu;
  s.alpha = Rational(2) - Rational(2) * s.nu;
  s.eta = Rational(2) * xi1;
  s.volume_tail = xi1 / (Rational(2) - xi1);
  return s;
}

std::string to_string(const Rational& q) {
  std::ostringstream os;
  os << q.numerator();
  if (q.denominator() != 1) os << '/' << q.denominator();
  return os.str();
}

}  // namespace rcm4
