#ifndef TESSGOF_HARNESS_HPP
#define TESSGOF_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tessgof/generators.hpp"
#include "tessgof/stats.hpp"

namespace tessgof {

inline constexpr const char* kConfigSchema = "tessgof/experiment/v1";
inline constexpr const char* kReportSchema = "tessgof/test-report/v1";

struct PointSpec {
  enum class Kind { binomial, strauss, force_biased };
  Kind kind = Kind::binomial;
  int n = 100;
  double gamma = 1.0;  // strauss
  double r0 = 0.1;
  int sweeps = 500;
  int max_iterations = 100000;  // force_biased
  double tolerance = 1e-9;
};

struct RadiiSpec {
  bool present = false;
  RadiusLaw law;
  std::optional<double> volume_fraction;  // rescale radii to this fraction of the window
};

struct ModelSpec {
  std::string name;
  PointSpec points;
  RadiiSpec radii;
  bool laguerre = false;
};

struct ExperimentConfig {
  std::uint64_t master_seed = 0;
  Window window{1.0, true};
  std::vector<ModelSpec> models;
  std::vector<StatisticSpec> statistics;
  int n_calibration = 200;
  int n_test = 200;
  double alpha = 0.05;
  NoiseConfig noise;  // seed ignored; derived per replication
  std::string output_dir = "tessgof-out";
  int workers = 0;
  int export_diagrams = 1;          // calibration replications whose diagrams are written
  bool export_densities = true;
  int density_max_samples = 20000;  // pooled observables per density, first ones kept
  std::string hash;                 // of the normalized config, without output_dir and workers

  const ModelSpec& model(const std::string& name) const;
};

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// FNV-1a 64 of the text, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

/// Statistic from JSON ({"kind": "area", "quantile": 0.4, ...}) or from the
/// compact form "area:quantile=0.4" / "persistence:quantile=0.7,q=1".
StatisticSpec parse_statistic(const nlohmann::json& doc, const std::string& field = "statistic");
StatisticSpec parse_statistic(const std::string& text);
inline StatisticSpec parse_statistic(const char* text) { return parse_statistic(std::string(text)); }
nlohmann::json statistic_to_json(const StatisticSpec& spec);

/// Worker count: TESSGOF_WORKERS if set, else the configured value (0 = all cores).
int effective_workers(int configured);

// ---- model sampling --------------------------------------------------------

struct ModelSample {
  Tessellation tess;
  std::vector<std::string> warnings;
};

/// One realization of a model. Points and radii use independent substreams of `seed`.
ModelSample sample_model(const ModelSpec& model, const Window& window, std::uint64_t seed);

inline constexpr std::uint64_t kCalibrationPhase = 0;
inline constexpr std::uint64_t kTestPhase = 1;

/// Replication seed: seed_stream(master, fnv1a(model name), phase, rep).
std::uint64_t replication_seed(std::uint64_t master, const std::string& model, std::uint64_t phase, int rep);

/// Observations of every statistic over n_reps realizations of one model.
struct ReplicationSet {
  std::string model;
  std::uint64_t phase = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<Observation>> obs;  // [statistic][rep]
  std::vector<PersistenceDiagram> diagrams;   // first `keep_diagrams` reps
  std::vector<std::string> warnings;
};

using Progress = std::function<void(const std::string&)>;

/// Runs replications on `workers` threads; results are indexed by replication
/// and independent of the worker count. Failures are rethrown with the model
/// and replication index prepended.
ReplicationSet simulate(const ExperimentConfig& config, const ModelSpec& model, std::uint64_t phase, int n_reps,
                        int keep_diagrams = 0, const Progress& progress = {});

/// Null-model calibration of one statistic.
Calibration calibrate(const ExperimentConfig& config, const ModelSpec& model, const StatisticSpec& spec, int n_reps,
                      std::uint64_t master_seed);
Calibration calibrate(const ReplicationSet& reps, std::size_t spec_index, const StatisticSpec& spec);

struct PowerTable {
  std::string statistic;
  std::vector<std::string> nulls, alternatives;
  std::vector<std::vector<double>> rate;  // [null][alternative]
};

struct StudyResult {
  std::vector<ReplicationSet> calibration, test;       // per model
  std::vector<std::vector<Calibration>> calibrations;  // [statistic][model]
  std::vector<PowerTable> power;                       // per statistic
};

/// Calibrates every model as a null and tests every model against it. The
/// diagonal estimates the size. Throws SeedReuseError when the two phases
/// draw the same replication seeds.
StudyResult power_table(const ExperimentConfig& config, std::uint64_t calibration_phase = kCalibrationPhase,
                        std::uint64_t test_phase = kTestPhase, const Progress& progress = {});

/// Runs the study and writes its artifacts into config.output_dir.
/// Returns the written file names relative to the output directory.
std::vector<std::string> run_experiment(const ExperimentConfig& config, const Progress& progress = {});

/// Calibrates `model` of the config and tests the imported tessellation.
/// The null model is sampled in the data's window.
struct ImportTest {
  TestReport report;
  Calibration calibration;
};
ImportTest run_gof_on_import(const std::string& tess_path, const ExperimentConfig& config, const std::string& model,
                             const StatisticSpec& spec, double alpha, const Progress& progress = {});
ImportTest run_gof_on_tessellation(const Tessellation& data, const ExperimentConfig& config, const std::string& model,
                                   const StatisticSpec& spec, double alpha, const Progress& progress = {});

nlohmann::json report_to_json(const ImportTest& test, const ExperimentConfig& config, const std::string& model);

/// Text describing every file format read or written.
std::string format_description();

}  // namespace tessgof

#endif  // TESSGOF_HARNESS_HPP
