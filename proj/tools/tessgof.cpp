// tessgof command-line interface.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "tessgof/harness.hpp"
#include "tessgof/tessellation_io.hpp"

using namespace tessgof;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kConvergence = 3, kDegenerate = 4, kImport = 5 };

Progress stderr_progress(bool quiet) {
  if (quiet) return {};
  const auto start = std::chrono::steady_clock::now();
  return [start](const std::string& msg) {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "[%7.1fs] %s\n", s, msg.c_str());
  };
}

int fail(int code, const char* kind, const std::exception& e) {
  std::fprintf(stderr, "tessgof: %s: %s\n", kind, e.what());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goodness-of-fit tests for 3D Laguerre and Voronoi tessellations"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "No progress output");

  auto* run = app.add_subcommand("run", "Run a calibration and power study from a config file");
  std::string run_config, run_out;
  run->add_option("config", run_config, "Experiment config (JSON)")->required();
  run->add_option("-o,--output-dir", run_out, "Override output_dir");

  auto* test = app.add_subcommand("test", "Test an imported tessellation against a null model");
  std::string data_path, null_path, stat_text, model_name, report_path;
  double alpha = -1.0;
  int reps = 0;
  test->add_option("--data", data_path, "Tessellation file")->required();
  test->add_option("--null", null_path, "Experiment config holding the null model")->required();
  test->add_option("--stat", stat_text, "Statistic, e.g. area:quantile=0.4 or a JSON object")->required();
  test->add_option("--model", model_name, "Null model name (default: first model of the config)");
  test->add_option("--alpha", alpha, "Test level (default: config alpha)");
  test->add_option("--reps", reps, "Calibration replications (default: config)");
  test->add_option("--out", report_path, "Write the report here instead of standard output");

  auto* sample = app.add_subcommand("sample", "Write one realization of a model as a tessellation file");
  std::string sample_config, sample_model_name, sample_out;
  std::uint64_t sample_seed = 0;
  sample->add_option("--config", sample_config, "Experiment config")->required();
  sample->add_option("--model", sample_model_name, "Model name (default: first model)");
  sample->add_option("--seed", sample_seed, "Realization seed");
  sample->add_option("--out", sample_out, "Output file")->required();

  app.add_subcommand("export-formats", "Describe the file formats and exit codes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) {
      ExperimentConfig config = load_config(run_config);
      if (!run_out.empty()) config.output_dir = run_out;
      const auto files = run_experiment(config, stderr_progress(quiet));
      if (!quiet) std::fprintf(stderr, "wrote %zu files to %s (config_hash=%s)\n", files.size(), config.output_dir.c_str(),
                               config.hash.c_str());
    } else if (*test) {
      ExperimentConfig config = load_config(null_path);
      if (reps > 0) {
        if (reps < 2) throw ConfigError("--reps", "must be at least 2");
        config.n_calibration = reps;
      }
      const std::string model = model_name.empty() ? config.models.front().name : model_name;
      const StatisticSpec spec = parse_statistic(stat_text);
      const double a = alpha > 0 ? alpha : config.alpha;
      if (!(a > 0 && a < 1)) throw ConfigError("--alpha", "must lie in (0, 1)");
      const ImportTest result = run_gof_on_import(data_path, config, model, spec, a, stderr_progress(quiet));
      const std::string json = report_to_json(result, config, model).dump(2) + "\n";
      if (report_path.empty()) {
        std::cout << json;
      } else {
        std::ofstream out(report_path);
        if (!out) throw Error("cannot write '" + report_path + "'");
        out << json;
      }
    } else if (*sample) {
      const ExperimentConfig config = load_config(sample_config);
      const ModelSpec& m = sample_model_name.empty() ? config.models.front() : config.model(sample_model_name);
      const ModelSample s = sample_model(m, config.window, sample_seed);
      for (const std::string& w : s.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      export_tessellation(sample_out, s.tess);
    } else {
      std::cout << format_description();
    }
  } catch (const ConfigError& e) {
    return fail(kConfig, "config error", e);
  } catch (const ConvergenceError& e) {
    return fail(kConvergence, "sampler did not converge", e);
  } catch (const DegenerateInputError& e) {
    return fail(kDegenerate, "degenerate geometry", e);
  } catch (const ParseError& e) {
    return fail(kImport, "import error", e);
  } catch (const std::exception& e) {
    return fail(kOther, "error", e);
  }
  return kOk;
}
