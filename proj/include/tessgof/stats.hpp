#ifndef TESSGOF_STATS_HPP
#define TESSGOF_STATS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tessgof/persistence.hpp"

namespace tessgof {

// ---- counting statistics on one tessellation -------------------------------

/// 2-faces that count in statistics: all of them on the torus, those not in
/// the window boundary otherwise.
std::vector<int> interior_faces(const Tessellation& tess);

/// #{interior 2-faces with area > a}.
int t_area(const Tessellation& tess, double a);

/// #{interior 2-faces with inradius > a}; optional edge thickness by global edge id.
int t_inradius(const Tessellation& tess, double a, std::span<const double> edge_thickness = {});

/// #{interior 2-faces with inradius > s and eccentricity <= M}.
int edge_betti(const Tessellation& tess, double M, double s, std::span<const double> edge_thickness = {});

/// #{finite q-features with death - birth > a}.
int t_persistence(const PersistenceDiagram& diagram, double a, int q = 1);

/// Sum of finite q-lifetimes.
double total_persistence(const PersistenceDiagram& diagram, int q = 1);

/// Persistence diagram of the tessellation used by the statistics. In a
/// bounded window only the closure of the cells not touching the window
/// boundary enters.
PersistenceDiagram statistics_diagram(const Tessellation& tess, const NoiseConfig& noise = {});

// ---- statistic specifications and per-realization observables -------------

struct StatisticSpec {
  enum class Kind { area, inradius, persistence, edge_betti, localized_betti, euler };
  Kind kind = Kind::area;
  std::optional<double> quantile;   // threshold from pooled null observables
  std::optional<double> threshold;  // absolute threshold
  int q_dim = 1;
  double M = kInfinity;
  double min_inradius = -1.0;  // localized_betti face selection, negative: 1/M
  double b = 0.0, d = 0.0;     // localized_betti levels
  enum class Pooling { pooled, per_rep_median };
  Pooling pooling = Pooling::pooled;  // how quantile thresholds combine replications

  /// Throws DomainError unless exactly one of quantile / threshold is set
  /// (localized_betti takes neither) and the ranges are valid.
  void validate() const;
  std::string name() const;
};

const char* kind_name(StatisticSpec::Kind kind);
StatisticSpec::Kind parse_kind(const std::string& name);

/// What one realization contributes: per-face or per-feature values that a
/// threshold is applied to, or a fixed value for threshold-free statistics.
struct Observation {
  std::vector<double> values;
  std::vector<int> signs;  // euler: +1 / -1 per face
  double fixed = 0.0;
};

Observation observe(const Tessellation& tess, const StatisticSpec& spec, const NoiseConfig& noise = {});

/// Statistic of one realization at a resolved threshold.
double statistic_value(const Observation& obs, const StatisticSpec& spec, double threshold);

// ---- calibration and testing ----------------------------------------------

/// Empirical quantile with linear interpolation between order statistics
/// (type 7). Throws EmptyInputError on empty input.
double empirical_quantile(std::vector<double> values, double p);

struct Calibration {
  std::string null_model;
  std::string statistic;
  int n_reps = 0;
  double threshold = 0.0;  // resolved absolute threshold
  double mean = 0.0;
  double variance = 0.0;   // unbiased sample variance
  std::vector<double> values;           // statistic per replication
  std::vector<std::uint64_t> seeds;     // replication seeds
};

/// Resolves the threshold (quantile of the pooled observables, median of the
/// per-replication quantiles, or absolute), then evaluates the
/// statistic of every replication at it. Needs at least 2 replications.
Calibration calibrate(std::span<const Observation> reps, const StatisticSpec& spec, std::span<const std::uint64_t> seeds = {},
                      const std::string& null_model = "");

struct TestReport {
  double value = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;
};

double normal_cdf(double x);
/// Two-sided tail probability 2 (1 - Phi(|z|)), accurate far into the tail.
double two_sided_p(double z);
/// Inverse standard normal CDF.
double normal_quantile(double p);

/// z = (value - mean) / sd; reject iff |z| > Phi^{-1}(1 - alpha/2) (strict).
/// Throws DomainError for zero variance.
TestReport gof_test(double value, const Calibration& calibration, double alpha = 0.05);

/// Fraction of test values rejected. Throws SeedReuseError when a test seed
/// was also used for calibration.
double rejection_rate(const Calibration& calibration, std::span<const double> test_values, double alpha,
                      std::span<const std::uint64_t> test_seeds = {});

// ---- distribution checks ---------------------------------------------------

double sample_mean(std::span<const double> x);
double sample_variance(std::span<const double> x);
/// Moment skewness m3 / m2^(3/2).
double sample_skewness(std::span<const double> x);

struct AndersonDarling {
  double a2 = 0.0;        // A^2
  double a2_star = 0.0;   // A^2 (1 + 0.75/n + 2.25/n^2)
  double p_value = 1.0;
};
/// Normality test with mean and variance estimated from the sample.
AndersonDarling anderson_darling_normal(std::span<const double> x);

struct KolmogorovSmirnov {
  double d = 0.0;
  double p_value = 1.0;
};
/// Two-sample test with the asymptotic Kolmogorov distribution.
KolmogorovSmirnov ks_two_sample(std::vector<double> a, std::vector<double> b);

// ---- density export --------------------------------------------------------

struct Density {
  double bandwidth = 0.0;
  std::vector<double> grid;
  std::vector<double> density;
};

inline constexpr int kDensityGridPoints = 1024;
inline constexpr double kDensityGridMargin = 6.0;  // bandwidths beyond the data range

/// Silverman's rule: 0.9 min(sd, IQR / 1.34) n^(-1/5).
double silverman_bandwidth(std::span<const double> x);

/// Gaussian KDE on kDensityGridPoints equispaced points from min - 6h to
/// max + 6h. bandwidth <= 0 selects Silverman's rule. Throws DomainError for
/// fewer than 2 samples or all-equal samples.
Density density_export(std::span<const double> samples, double bandwidth = 0.0);

void write_density_csv(std::ostream& out, const Density& density);

}  // namespace tessgof

#endif  // TESSGOF_STATS_HPP
