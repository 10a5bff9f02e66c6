#include "tessgof/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace tessgof {

namespace {

double uniform_coordinate(std::mt19937_64& rng, double len) {
  std::uniform_real_distribution<double> u(0.0, len);
  double x = u(rng);
  return x < len ? x : 0.0;
}

double wrap(double x, double len) {
  x -= len * std::floor(x / len);
  return x < len ? x : 0.0;
}

// Uniform grid over the window with cells at least `reach` wide, so that all
// pairs within reach sit in the same or adjacent cells.
class CellGrid {
 public:
  CellGrid(const Window& w, double reach) : w_(w) {
    m_ = reach > 0 ? static_cast<int>(std::floor(w.edge_length / reach)) : 1;
    m_ = std::clamp(m_, 1, 64);
    cells_.assign(static_cast<std::size_t>(m_) * m_ * m_, {});
  }

  int cell_of(const Vec3& x) const {
    int c[3];
    for (int k = 0; k < 3; ++k)
      c[k] = std::clamp(static_cast<int>(x[k] / w_.edge_length * m_), 0, m_ - 1);
    return (c[0] * m_ + c[1]) * m_ + c[2];
  }

  void insert(int id, const Vec3& x) { cells_[cell_of(x)].push_back(id); }

  void erase(int id, const Vec3& x) {
    auto& v = cells_[cell_of(x)];
    auto it = std::find(v.begin(), v.end(), id);
    *it = v.back();
    v.pop_back();
  }

  template <typename F>
  void for_near(const Vec3& x, F&& f) const {
    int idx[3][3] = {}, cnt[3] = {};
    for (int k = 0; k < 3; ++k) {
      const int c = std::clamp(static_cast<int>(x[k] / w_.edge_length * m_), 0, m_ - 1);
      cnt[k] = 0;
      for (int o = -1; o <= 1; ++o) {
        int j = c + o;
        if (w_.periodic) {
          j = (j + m_) % m_;
        } else if (j < 0 || j >= m_) {
          continue;
        }
        bool seen = false;
        for (int t = 0; t < cnt[k]; ++t) seen = seen || idx[k][t] == j;
        if (!seen) idx[k][cnt[k]++] = j;
      }
    }
    for (int a = 0; a < cnt[0]; ++a)
      for (int b = 0; b < cnt[1]; ++b)
        for (int c = 0; c < cnt[2]; ++c)
          for (int id : cells_[(idx[0][a] * m_ + idx[1][b]) * m_ + idx[2][c]]) f(id);
  }

 private:
  Window w_;
  int m_ = 1;
  std::vector<std::vector<int>> cells_;
};

void check_window(const Window& w) {
  if (!(w.edge_length > 0)) throw DomainError("window edge length must be positive");
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t seed_stream(std::uint64_t master, std::uint64_t model, std::uint64_t phase, std::uint64_t rep) {
  std::uint64_t h = mix_seed(master);
  h = mix_seed(h ^ model);
  h = mix_seed(h ^ (phase << 32));
  return mix_seed(h ^ rep);
}

Vec3 displacement(const Vec3& a, const Vec3& b, const Window& window) {
  Vec3 d = b - a;
  if (window.periodic) {
    const double len = window.edge_length;
    for (int k = 0; k < 3; ++k) d[k] -= len * std::round(d[k] / len);
  }
  return d;
}

std::vector<Vec3> sample_binomial(int n, const Window& window, std::uint64_t seed) {
  check_window(window);
  if (n < 1) throw DomainError("sample_binomial: n must be positive");
  std::mt19937_64 rng(seed);
  std::vector<Vec3> pts(n);
  for (Vec3& p : pts)
    for (int k = 0; k < 3; ++k) p[k] = uniform_coordinate(rng, window.edge_length);
  return pts;
}

long pair_count(std::span<const Vec3> points, double r0, const Window& window) {
  check_window(window);
  if (!(r0 >= 0)) throw DomainError("pair_count: r0 must be nonnegative");
  if (window.periodic && !(r0 < window.edge_length / 2))
    throw DomainError("pair_count: r0 must be below half the window edge");
  CellGrid grid(window, r0);
  for (std::size_t i = 0; i < points.size(); ++i) grid.insert(static_cast<int>(i), points[i]);
  const double r2 = r0 * r0;
  long s = 0;
  for (std::size_t i = 0; i < points.size(); ++i)
    grid.for_near(points[i], [&](int j) {
      if (static_cast<std::size_t>(j) > i && displacement(points[i], points[j], window).squaredNorm() <= r2) ++s;
    });
  return s;
}

StraussSample sample_strauss_fixed_n(const StraussParams& p, const Window& window) {
  check_window(window);
  if (p.n_points < 1) throw DomainError("strauss: n_points must be positive");
  if (!(p.gamma >= 0 && p.gamma <= 1)) throw DomainError("strauss: gamma must lie in [0, 1]");
  if (!(p.r0 > 0)) throw DomainError("strauss: r0 must be positive");
  if (window.periodic && !(p.r0 < window.edge_length / 2)) throw DomainError("strauss: r0 must be below half the window edge");
  if (p.n_sweeps < 1) throw DomainError("strauss: n_sweeps must be positive");

  StraussSample out;
  out.points = sample_binomial(p.n_points, window, p.seed);
  std::vector<Vec3>& x = out.points;
  std::mt19937_64 rng(mix_seed(p.seed ^ 0x5a5a5a5a5a5a5a5aULL));
  std::uniform_int_distribution<int> pick(0, p.n_points - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  CellGrid grid(window, p.r0);
  for (int i = 0; i < p.n_points; ++i) grid.insert(i, x[i]);
  const double r2 = p.r0 * p.r0;
  auto neighbours = [&](const Vec3& y, int skip) {
    long c = 0;
    grid.for_near(y, [&](int j) {
      if (j != skip && displacement(y, x[j], window).squaredNorm() <= r2) ++c;
    });
    return c;
  };

  long s = pair_count(x, p.r0, window);
  const int burn_in = p.n_sweeps / 2;
  long accepted_after_burn_in = 0;
  out.pair_trace.reserve(p.n_sweeps);
  for (int sweep = 0; sweep < p.n_sweeps; ++sweep) {
    long accepted = 0;
    for (int t = 0; t < p.n_points; ++t) {
      const int i = pick(rng);
      Vec3 y;
      for (int k = 0; k < 3; ++k) y[k] = uniform_coordinate(rng, window.edge_length);
      const long ds = neighbours(y, i) - neighbours(x[i], i);
      const double u = unif(rng);
      if (ds <= 0 || u < std::pow(p.gamma, static_cast<double>(ds))) {
        grid.erase(i, x[i]);
        x[i] = y;
        grid.insert(i, y);
        s += ds;
        ++accepted;
      }
    }
    out.pair_trace.push_back(s);
    if (sweep >= burn_in) accepted_after_burn_in += accepted;
    out.last_sweep_acceptance = static_cast<double>(accepted) / p.n_points;
  }
  out.acceptance_rate =
      static_cast<double>(accepted_after_burn_in) / (static_cast<double>(p.n_sweeps - burn_in) * p.n_points);
  if (out.last_sweep_acceptance < kLowAcceptance)
    out.warnings.push_back("strauss: acceptance rate " + std::to_string(out.last_sweep_acceptance) +
                           " on the last sweep; the chain may not have converged");
  return out;
}

double volume_fraction(std::span<const double> radii, const Window& window) {
  double v = 0.0;
  for (double r : radii) v += 4.0 / 3.0 * std::numbers::pi * r * r * r;
  return v / window.volume();
}

double max_pair_overlap(std::span<const MarkedPoint> s, const Window& window) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      worst = std::max(worst, s[i].radius + s[j].radius - displacement(s[i].location, s[j].location, window).norm());
  return worst;
}

PackingResult sample_force_biased(const PackingParams& p, const Window& window) {
  check_window(window);
  const int n = static_cast<int>(p.radii.size());
  if (n < 1) throw DomainError("packing: need at least one sphere");
  double rmax = 0.0;
  for (double r : p.radii) {
    if (!(r > 0)) throw DomainError("packing: radii must be positive");
    rmax = std::max(rmax, r);
  }
  if (window.periodic && !(2 * rmax < window.edge_length / 2))
    throw DomainError("packing: sphere diameter must be below half the window edge");
  if (volume_fraction(p.radii, window) > 0.64) throw DomainError("packing: volume fraction exceeds 0.64");
  if (p.max_iterations < 1) throw DomainError("packing: max_iterations must be positive");

  PackingResult out;
  if (!p.initial.empty() && static_cast<int>(p.initial.size()) != n)
    throw DomainError("packing: initial centers must match the number of radii");
  const std::vector<Vec3> start = p.initial.empty() ? sample_binomial(n, window, p.seed) : p.initial;
  out.spheres.resize(n);
  for (int i = 0; i < n; ++i) out.spheres[i] = {start[i], p.radii[i]};
  std::mt19937_64 rng(mix_seed(p.seed ^ 0xa5a5a5a5a5a5a5a5ULL));
  std::normal_distribution<double> gauss;

  std::vector<Vec3> push(n);
  for (int iter = 1; iter <= p.max_iterations; ++iter) {
    CellGrid grid(window, 2 * rmax);
    for (int i = 0; i < n; ++i) grid.insert(i, out.spheres[i].location);
    std::fill(push.begin(), push.end(), Vec3::Zero());
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const MarkedPoint& a = out.spheres[i];
      grid.for_near(a.location, [&](int j) {
        if (j <= i) return;
        const MarkedPoint& b = out.spheres[j];
        Vec3 d = displacement(a.location, b.location, window);
        const double dist = d.norm();
        const double overlap = a.radius + b.radius - dist;
        if (overlap <= 0) return;
        worst = std::max(worst, overlap);
        if (dist > 0) {
          d /= dist;
        } else {
          d = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
        }
        push[i] -= 0.5 * overlap * d;
        push[j] += 0.5 * overlap * d;
      });
    }
    out.iterations = iter;
    out.max_overlap = worst;
    if (worst <= p.overlap_tolerance) return out;
    for (int i = 0; i < n; ++i) {
      Vec3& x = out.spheres[i].location;
      x += push[i];
      for (int k = 0; k < 3; ++k)
        x[k] = window.periodic ? wrap(x[k], window.edge_length)
                               : std::clamp(x[k], 0.0, std::nextafter(window.edge_length, 0.0));
    }
  }
  throw ConvergenceError("packing did not converge after " + std::to_string(p.max_iterations) +
                         " iterations; residual max overlap " + std::to_string(out.max_overlap));
}

std::vector<double> sample_radii(const RadiusLaw& law, int n, std::uint64_t seed) {
  if (n < 0) throw DomainError("sample_radii: n must be nonnegative");
  if (law.kind == RadiusLaw::Kind::constant) {
    if (!(law.value >= 0)) throw DomainError("sample_radii: constant radius must be nonnegative");
    return std::vector<double>(n, law.value);
  }
  if (!(law.sigma >= 0)) throw DomainError("sample_radii: sigma must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(law.mu, law.sigma);
  std::vector<double> r(n);
  for (double& x : r) x = std::cbrt(3.0 * std::exp(law.sigma > 0 ? g(rng) : law.mu) / (4.0 * std::numbers::pi));
  return r;
}

}  // namespace tessgof
