#include "tessgof/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace tessgof {

namespace {

bool counts(const Tessellation& tess, const Face& f) { return tess.window().periodic || !f.on_boundary; }

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

// log(1 - Phi(y)) without cancellation.
double log_upper_tail(double y) { return std::log(0.5 * std::erfc(y / std::numbers::sqrt2)); }

}  // namespace

std::vector<int> interior_faces(const Tessellation& tess) {
  std::vector<int> out;
  for (std::size_t id = 0; id < tess.count(2); ++id)
    if (counts(tess, tess.face(2, static_cast<int>(id)))) out.push_back(static_cast<int>(id));
  return out;
}

int t_area(const Tessellation& tess, double a) {
  int n = 0;
  for (int id : interior_faces(tess))
    if (face_area(tess, id) > a) ++n;
  return n;
}

int t_inradius(const Tessellation& tess, double a, std::span<const double> edge_thickness) {
  return edge_betti(tess, kInfinity, a, edge_thickness);
}

int edge_betti(const Tessellation& tess, double M, double s, std::span<const double> edge_thickness) {
  int n = 0;
  for (int id : interior_faces(tess)) {
    if (M < kInfinity && face_eccentricity(tess, 2, id) > M) continue;
    if (face_inradius(tess, id, edge_thickness) > s) ++n;
  }
  return n;
}

int t_persistence(const PersistenceDiagram& diagram, double a, int q) {
  int n = 0;
  for (const Feature& f : diagram.features)
    if (f.dim == q && !f.essential && f.lifetime() > a) ++n;
  return n;
}

double total_persistence(const PersistenceDiagram& diagram, int q) {
  double sum = 0.0;
  for (const Feature& f : diagram.features)
    if (f.dim == q && !f.essential) sum += f.lifetime();
  return sum;
}

namespace {

FilteredComplex statistics_complex(const Tessellation& tess, const NoiseConfig& noise) {
  FilteredComplex c = build_filtration(tess, noise);
  if (tess.window().periodic) return c;
  // Closure of the cells clear of the window boundary; boundaries precede their cofaces.
  std::vector<char> keep(c.size(), 0);
  for (std::size_t i = c.size(); i-- > 0;) {
    const FilteredFace& f = c.faces[i];
    if (f.dim == tess.dim() && !tess.face(f.dim, f.face).touches_boundary) keep[i] = 1;
    if (keep[i])
      for (int b : f.boundary) keep[b] = 1;
  }
  return restrict_complex(c, keep);
}

}  // namespace

PersistenceDiagram statistics_diagram(const Tessellation& tess, const NoiseConfig& noise) {
  return reduce(statistics_complex(tess, noise));
}

const char* kind_name(StatisticSpec::Kind kind) {
  switch (kind) {
    case StatisticSpec::Kind::area: return "area";
    case StatisticSpec::Kind::inradius: return "inradius";
    case StatisticSpec::Kind::persistence: return "persistence";
    case StatisticSpec::Kind::edge_betti: return "edge_betti";
    case StatisticSpec::Kind::localized_betti: return "localized_betti";
    case StatisticSpec::Kind::euler: return "euler";
  }
  return "?";
}

StatisticSpec::Kind parse_kind(const std::string& name) {
  for (auto k : {StatisticSpec::Kind::area, StatisticSpec::Kind::inradius, StatisticSpec::Kind::persistence,
                 StatisticSpec::Kind::edge_betti, StatisticSpec::Kind::localized_betti, StatisticSpec::Kind::euler})
    if (name == kind_name(k)) return k;
  throw DomainError("unknown statistic kind '" + name + "'");
}

void StatisticSpec::validate() const {
  if (kind == Kind::localized_betti) {
    if (quantile || threshold) throw DomainError("localized_betti takes levels b, d instead of a threshold");
    if (!(M > 0) || !std::isfinite(M)) throw DomainError("localized_betti needs a finite M > 0");
    if (!(b <= d)) throw DomainError("localized_betti needs b <= d");
  } else {
    if (quantile.has_value() == threshold.has_value())
      throw DomainError(std::string(kind_name(kind)) + ": set exactly one of quantile and threshold");
    if (quantile && !(*quantile > 0 && *quantile < 1)) throw DomainError("quantile must lie in (0, 1)");
    if (threshold && !std::isfinite(*threshold)) throw DomainError("threshold must be finite");
  }
  if (kind == Kind::edge_betti && !(M > 0)) throw DomainError("edge_betti needs M > 0");
  if ((kind == Kind::persistence || kind == Kind::localized_betti) && (q_dim < 0 || q_dim > 2))
    throw DomainError("feature dimension must lie in 0..2");
}

std::string StatisticSpec::name() const {
  std::string s = kind_name(kind);
  std::vector<std::string> parts;
  if (quantile) parts.push_back("quantile=" + fmt(*quantile));
  if (threshold) parts.push_back("a=" + fmt(*threshold));
  if (kind == Kind::persistence || kind == Kind::localized_betti) parts.push_back("q=" + std::to_string(q_dim));
  if (kind == Kind::edge_betti || kind == Kind::localized_betti) parts.push_back("M=" + fmt(M));
  if (kind == Kind::localized_betti) {
    parts.push_back("b=" + fmt(b));
    parts.push_back("d=" + fmt(d));
  }
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i == 0 ? "[" : ",") + parts[i];
  return parts.empty() ? s : s + "]";
}

Observation observe(const Tessellation& tess, const StatisticSpec& spec, const NoiseConfig& noise) {
  Observation obs;
  using Kind = StatisticSpec::Kind;
  switch (spec.kind) {
    case Kind::area:
      for (int id : interior_faces(tess)) obs.values.push_back(face_area(tess, id));
      break;
    case Kind::inradius:
    case Kind::edge_betti: {
      const std::vector<double> th = sample_edge_thickness(tess, noise);
      const double M = spec.kind == Kind::inradius ? kInfinity : spec.M;
      for (int id : interior_faces(tess)) {
        if (M < kInfinity && face_eccentricity(tess, 2, id) > M) continue;
        obs.values.push_back(face_inradius(tess, id, th));
      }
      break;
    }
    case Kind::persistence:
      for (const Feature& f : statistics_diagram(tess, noise).features)
        if (f.dim == spec.q_dim && !f.essential && f.lifetime() > 0) obs.values.push_back(f.lifetime());
      break;
    case Kind::localized_betti:
      obs.fixed = m_localized_betti(tess, spec.M, spec.q_dim, spec.b, spec.d, noise, spec.min_inradius, 1);
      break;
    case Kind::euler:
      for (const FilteredFace& f : statistics_complex(tess, noise).faces) {
        obs.values.push_back(f.value);
        obs.signs.push_back(f.dim % 2 == 0 ? 1 : -1);
      }
      break;
  }
  return obs;
}

double statistic_value(const Observation& obs, const StatisticSpec& spec, double threshold) {
  if (spec.kind == StatisticSpec::Kind::localized_betti) return obs.fixed;
  if (spec.kind == StatisticSpec::Kind::euler) {
    long chi = 0;
    for (std::size_t i = 0; i < obs.values.size(); ++i)
      if (obs.values[i] <= threshold) chi += obs.signs[i];
    return static_cast<double>(chi);
  }
  return static_cast<double>(std::count_if(obs.values.begin(), obs.values.end(), [&](double v) { return v > threshold; }));
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw EmptyInputError("empirical_quantile: no values");
  if (!(p >= 0 && p <= 1)) throw DomainError("empirical_quantile: p must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Calibration calibrate(std::span<const Observation> reps, const StatisticSpec& spec, std::span<const std::uint64_t> seeds,
                      const std::string& null_model) {
  spec.validate();
  if (reps.size() < 2) throw DomainError("calibration needs at least 2 replications");
  if (!seeds.empty() && seeds.size() != reps.size()) throw DomainError("calibration: one seed per replication");
  Calibration cal;
  cal.null_model = null_model;
  cal.statistic = spec.name();
  cal.n_reps = static_cast<int>(reps.size());
  if (spec.threshold) {
    cal.threshold = *spec.threshold;
  } else if (spec.quantile && spec.pooling == StatisticSpec::Pooling::pooled) {
    std::vector<double> pooled;
    for (const Observation& o : reps) pooled.insert(pooled.end(), o.values.begin(), o.values.end());
    if (pooled.empty()) throw EmptyInputError("calibration: null model produced no observables for " + spec.name());
    cal.threshold = empirical_quantile(std::move(pooled), *spec.quantile);
  } else if (spec.quantile) {
    std::vector<double> per_rep;
    for (const Observation& o : reps)
      if (!o.values.empty()) per_rep.push_back(empirical_quantile(o.values, *spec.quantile));
    if (per_rep.empty()) throw EmptyInputError("calibration: null model produced no observables for " + spec.name());
    cal.threshold = empirical_quantile(std::move(per_rep), 0.5);
  }
  for (const Observation& o : reps) cal.values.push_back(statistic_value(o, spec, cal.threshold));
  cal.seeds.assign(seeds.begin(), seeds.end());
  cal.mean = sample_mean(cal.values);
  cal.variance = sample_variance(cal.values);
  return cal;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0 && p < 1)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  // Acklam's rational approximation, then one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01, -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - p_low) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2 * std::numbers::pi) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

TestReport gof_test(double value, const Calibration& cal, double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw DomainError("alpha must lie in (0, 1)");
  if (!(cal.variance > 0) || !std::isfinite(cal.variance))
    throw DomainError("null variance is zero; the statistic is degenerate under the null model");
  TestReport r;
  r.value = value;
  r.mean = cal.mean;
  r.variance = cal.variance;
  r.alpha = alpha;
  r.z = (value - cal.mean) / std::sqrt(cal.variance);
  r.p_value = two_sided_p(r.z);
  r.reject = std::abs(r.z) > normal_quantile(1 - alpha / 2);
  return r;
}

double rejection_rate(const Calibration& cal, std::span<const double> test_values, double alpha,
                      std::span<const std::uint64_t> test_seeds) {
  if (test_values.empty()) throw EmptyInputError("rejection_rate: no test values");
  if (!test_seeds.empty() && !cal.seeds.empty()) {
    std::vector<std::uint64_t> a(cal.seeds), b(test_seeds.begin(), test_seeds.end()), common;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    if (!common.empty())
      throw SeedReuseError(std::to_string(common.size()) + " test replication seed(s) were already used for calibration of " +
                           cal.null_model);
  }
  int rejected = 0;
  for (double v : test_values) rejected += gof_test(v, cal, alpha).reject ? 1 : 0;
  return static_cast<double>(rejected) / static_cast<double>(test_values.size());
}

double sample_mean(std::span<const double> x) {
  if (x.empty()) throw EmptyInputError("sample_mean: no values");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw DomainError("sample_variance: need at least 2 values");
  const double m = sample_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double sample_skewness(std::span<const double> x) {
  const double m = sample_mean(x);
  double m2 = 0.0, m3 = 0.0;
  for (double v : x) {
    m2 += (v - m) * (v - m);
    m3 += (v - m) * (v - m) * (v - m);
  }
  m2 /= static_cast<double>(x.size());
  m3 /= static_cast<double>(x.size());
  if (!(m2 > 0)) throw DomainError("sample_skewness: zero variance");
  return m3 / std::pow(m2, 1.5);
}

AndersonDarling anderson_darling_normal(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 8) throw DomainError("anderson_darling_normal: need at least 8 values");
  std::vector<double> y(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double m = sample_mean(y), sd = std::sqrt(sample_variance(y));
  if (!(sd > 0)) throw DomainError("anderson_darling_normal: zero variance");
  for (double& v : y) v = (v - m) / sd;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += (2.0 * static_cast<double>(i) + 1) * (log_upper_tail(-y[i]) + log_upper_tail(y[n - 1 - i]));
  const double dn = static_cast<double>(n);
  AndersonDarling r;
  r.a2 = -dn - s / dn;
  r.a2_star = r.a2 * (1 + 0.75 / dn + 2.25 / (dn * dn));
  const double a = r.a2_star;
  if (a >= 0.6)
    r.p_value = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
  else if (a >= 0.34)
    r.p_value = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
  else if (a >= 0.2)
    r.p_value = 1 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
  else
    r.p_value = 1 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
  r.p_value = std::clamp(r.p_value, 0.0, 1.0);
  return r;
}

KolmogorovSmirnov ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw EmptyInputError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KolmogorovSmirnov r;
  r.d = d;
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  if (lambda < 0.2) {
    r.p_value = 1.0;
    return r;
  }
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  r.p_value = std::clamp(2 * sum, 0.0, 1.0);
  return r;
}

double silverman_bandwidth(std::span<const double> x) {
  if (x.size() < 2) throw DomainError("silverman_bandwidth: need at least 2 samples");
  const double sd = std::sqrt(sample_variance(x));
  std::vector<double> v(x.begin(), x.end());
  const double iqr = empirical_quantile(v, 0.75) - empirical_quantile(v, 0.25);
  const double spread = iqr > 0 ? std::min(sd, iqr / 1.34) : sd;
  if (!(spread > 0)) throw DomainError("density_export: all samples are equal");
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

Density density_export(std::span<const double> samples, double bandwidth) {
  if (samples.size() < 2) throw DomainError("density_export: need at least 2 samples");
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  if (*mn == *mx) throw DomainError("density_export: all samples are equal");
  Density out;
  out.bandwidth = bandwidth > 0 ? bandwidth : silverman_bandwidth(samples);
  const double h = out.bandwidth;
  const double lo = *mn - kDensityGridMargin * h, hi = *mx + kDensityGridMargin * h;
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2 * std::numbers::pi));
  out.grid.resize(kDensityGridPoints);
  out.density.resize(kDensityGridPoints);
  for (int k = 0; k < kDensityGridPoints; ++k) {
    const double x = lo + (hi - lo) * k / (kDensityGridPoints - 1);
    double s = 0.0;
    for (double v : samples) {
      const double u = (x - v) / h;
      s += std::exp(-0.5 * u * u);
    }
    out.grid[k] = x;
    out.density[k] = s * norm;
  }
  return out;
}

void write_density_csv(std::ostream& out, const Density& density) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "# bandwidth=%.17g\n", density.bandwidth);
  out << buf << "x,density\n";
  for (std::size_t k = 0; k < density.grid.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", density.grid[k], density.density[k]);
    out << buf;
  }
}

}  // namespace tessgof
