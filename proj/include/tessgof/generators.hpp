#ifndef TESSGOF_GENERATORS_HPP
#define TESSGOF_GENERATORS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tessgof/geometry.hpp"

namespace tessgof {

/// splitmix64 finalizer.
std::uint64_t mix_seed(std::uint64_t x);

/// Seed of one replication: hash of (master, model, phase, replication). Streams
/// differing in any coordinate are independent for practical purposes.
std::uint64_t seed_stream(std::uint64_t master, std::uint64_t model, std::uint64_t phase, std::uint64_t rep);

/// Periodic (minimum image) or Euclidean difference b - a.
Vec3 displacement(const Vec3& a, const Vec3& b, const Window& window);

/// n i.i.d. uniform points in [0, L)^3.
std::vector<Vec3> sample_binomial(int n, const Window& window, std::uint64_t seed);

/// Number of pairs at distance <= r0 (torus distance when periodic).
long pair_count(std::span<const Vec3> points, double r0, const Window& window);

struct StraussParams {
  int n_points = 300;
  double gamma = 1.0;
  double r0 = 0.1;
  int n_sweeps = 500;
  std::uint64_t seed = 0;
};

struct StraussSample {
  std::vector<Vec3> points;
  std::vector<long> pair_trace;         // s_r0 after each sweep
  double acceptance_rate = 0.0;         // over the post-burn-in sweeps
  double last_sweep_acceptance = 0.0;
  std::vector<std::string> warnings;
};

/// Fixed-N Strauss process by Metropolis-Hastings: single-point relocation to
/// a uniform location, accepted with probability min(1, gamma^ds). Starts from
/// a Binomial configuration; the first n_sweeps/2 sweeps are burn-in.
StraussSample sample_strauss_fixed_n(const StraussParams& params, const Window& window);

/// Acceptance below this rate on the last sweep produces a warning.
inline constexpr double kLowAcceptance = 0.005;

struct PackingParams {
  std::vector<double> radii;  // one per sphere
  std::vector<Vec3> initial;  // starting centers; uniform when empty
  int max_iterations = 100000;
  double overlap_tolerance = 1e-9;
  std::uint64_t seed = 0;
};

struct PackingResult {
  std::vector<MarkedPoint> spheres;
  int iterations = 0;
  double max_overlap = 0.0;
};

/// Collective rearrangement: uniform start, then every overlapping pair is
/// pushed apart by half its overlap depth along the center line, all pairs at
/// once, until no overlap exceeds the tolerance.
PackingResult sample_force_biased(const PackingParams& params, const Window& window);

/// Sum of ball volumes over the window volume.
double volume_fraction(std::span<const double> radii, const Window& window);

/// Largest pair overlap r_i + r_j - |x_i - x_j| (negative when all separated), O(n^2).
double max_pair_overlap(std::span<const MarkedPoint> spheres, const Window& window);

struct RadiusLaw {
  enum class Kind { constant, lognormal_volume };
  Kind kind = Kind::constant;
  double value = 0.0;  // constant radius
  double mu = 0.0;     // log-volume mean
  double sigma = 0.0;  // log-volume standard deviation
};

/// Radii r = (3V / 4 pi)^(1/3) with log V ~ N(mu, sigma^2), or a constant.
std::vector<double> sample_radii(const RadiusLaw& law, int n, std::uint64_t seed);

}  // namespace tessgof

#endif  // TESSGOF_GENERATORS_HPP
