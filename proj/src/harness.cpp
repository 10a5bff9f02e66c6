#include "tessgof/harness.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "tessgof/parallel.hpp"
#include "tessgof/tessellation_io.hpp"

namespace tessgof {

using nlohmann::json;

namespace {

// ---- JSON field access with ConfigError on misuse ---------------------------

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "config" : path, "expected an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(join(path, key), "unknown key");
  }
}

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double number(const json& j, const std::string& path, const char* key, std::optional<double> fallback = {}) {
  const json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "required");
  }
  if (!v->is_number()) throw ConfigError(join(path, key), "expected a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) throw ConfigError(join(path, key), "must be finite");
  return x;
}

long integer(const json& j, const std::string& path, const char* key, std::optional<long> fallback = {}) {
  const json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "required");
  }
  if (!v->is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
  return v->get<long>();
}

std::string text(const json& j, const std::string& path, const char* key, std::optional<std::string> fallback = {}) {
  const json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "required");
  }
  if (!v->is_string()) throw ConfigError(join(path, key), "expected a string");
  return v->get<std::string>();
}

bool boolean(const json& j, const std::string& path, const char* key, bool fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError(join(path, key), "expected true or false");
  return v->get<bool>();
}

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

// ---- model specs -------------------------------------------------------------

const char* point_kind_name(PointSpec::Kind k) {
  switch (k) {
    case PointSpec::Kind::binomial: return "binomial";
    case PointSpec::Kind::strauss: return "strauss";
    case PointSpec::Kind::force_biased: return "force_biased";
  }
  return "?";
}

double ball_volume(double r) { return 4.0 / 3.0 * std::numbers::pi * r * r * r; }

double expected_ball_volume(const RadiusLaw& law) {
  if (law.kind == RadiusLaw::Kind::constant) return ball_volume(law.value);
  return std::exp(law.mu + 0.5 * law.sigma * law.sigma);
}

ModelSpec parse_model(const json& j, const std::string& path, const Window& window) {
  check_object(j, path);
  check_keys(j, path, {"name", "points", "radii", "tessellation"});
  ModelSpec m;
  m.name = text(j, path, "name");
  check(!m.name.empty(), join(path, "name"), "must not be empty");

  const std::string pp = join(path, "points");
  const json* pj = find(j, "points");
  check(pj != nullptr, pp, "required");
  check_object(*pj, pp);
  check_keys(*pj, pp, {"kind", "n", "gamma", "r0", "sweeps", "max_iterations", "tolerance"});
  const std::string kind = text(*pj, pp, "kind");
  if (kind == "binomial") {
    m.points.kind = PointSpec::Kind::binomial;
  } else if (kind == "strauss") {
    m.points.kind = PointSpec::Kind::strauss;
  } else if (kind == "force_biased") {
    m.points.kind = PointSpec::Kind::force_biased;
  } else {
    throw ConfigError(join(pp, "kind"), "expected binomial, strauss or force_biased, got '" + kind + "'");
  }
  m.points.n = static_cast<int>(integer(*pj, pp, "n"));
  check(m.points.n >= 1, join(pp, "n"), "must be at least 1");
  if (m.points.kind == PointSpec::Kind::strauss) {
    m.points.gamma = number(*pj, pp, "gamma");
    check(m.points.gamma >= 0 && m.points.gamma <= 1, join(pp, "gamma"), "must lie in [0, 1]");
    m.points.r0 = number(*pj, pp, "r0");
    check(m.points.r0 > 0, join(pp, "r0"), "must be positive");
    check(!window.periodic || m.points.r0 < window.edge_length / 2, join(pp, "r0"),
          "must be below half the window edge in a periodic window");
    m.points.sweeps = static_cast<int>(integer(*pj, pp, "sweeps", 500));
    check(m.points.sweeps >= 1, join(pp, "sweeps"), "must be at least 1");
  } else {
    for (const char* k : {"gamma", "r0", "sweeps"}) check(!find(*pj, k), join(pp, k), "only valid for strauss points");
  }
  if (m.points.kind == PointSpec::Kind::force_biased) {
    m.points.max_iterations = static_cast<int>(integer(*pj, pp, "max_iterations", 100000));
    check(m.points.max_iterations >= 1, join(pp, "max_iterations"), "must be at least 1");
    m.points.tolerance = number(*pj, pp, "tolerance", 1e-9);
    check(m.points.tolerance > 0, join(pp, "tolerance"), "must be positive");
  } else {
    for (const char* k : {"max_iterations", "tolerance"})
      check(!find(*pj, k), join(pp, k), "only valid for force_biased points");
  }

  const std::string rp = join(path, "radii");
  if (const json* rj = find(j, "radii")) {
    check_object(*rj, rp);
    check_keys(*rj, rp, {"law", "value", "mu", "sigma", "volume_fraction"});
    m.radii.present = true;
    const std::string law = text(*rj, rp, "law");
    if (law == "constant") {
      m.radii.law.kind = RadiusLaw::Kind::constant;
      m.radii.law.value = number(*rj, rp, "value");
      check(m.radii.law.value > 0, join(rp, "value"), "must be positive");
    } else if (law == "lognormal_volume") {
      m.radii.law.kind = RadiusLaw::Kind::lognormal_volume;
      m.radii.law.mu = number(*rj, rp, "mu");
      m.radii.law.sigma = number(*rj, rp, "sigma");
      check(m.radii.law.sigma >= 0, join(rp, "sigma"), "must be nonnegative");
    } else {
      throw ConfigError(join(rp, "law"), "expected constant or lognormal_volume, got '" + law + "'");
    }
    if (find(*rj, "volume_fraction")) {
      const double phi = number(*rj, rp, "volume_fraction");
      check(phi > 0 && phi <= 0.64, join(rp, "volume_fraction"), "must lie in (0, 0.64]");
      m.radii.volume_fraction = phi;
    }
  }

  const std::string tess = text(j, path, "tessellation", std::string("voronoi"));
  if (tess == "voronoi") {
    m.laguerre = false;
  } else if (tess == "laguerre") {
    m.laguerre = true;
    check(m.radii.present, rp, "laguerre tessellations need a radius law");
  } else {
    throw ConfigError(join(path, "tessellation"), "expected voronoi or laguerre, got '" + tess + "'");
  }

  if (m.points.kind == PointSpec::Kind::force_biased) {
    check(m.radii.present, rp, "force_biased points need a radius law");
    const double phi = m.radii.volume_fraction.value_or(m.points.n * expected_ball_volume(m.radii.law) / window.volume());
    check(phi <= 0.64, rp, "volume fraction " + std::to_string(phi) + " exceeds 0.64");
  }
  return m;
}

json model_to_json(const ModelSpec& m) {
  json p = {{"kind", point_kind_name(m.points.kind)}, {"n", m.points.n}};
  if (m.points.kind == PointSpec::Kind::strauss) {
    p["gamma"] = m.points.gamma;
    p["r0"] = m.points.r0;
    p["sweeps"] = m.points.sweeps;
  }
  if (m.points.kind == PointSpec::Kind::force_biased) {
    p["max_iterations"] = m.points.max_iterations;
    p["tolerance"] = m.points.tolerance;
  }
  json out = {{"name", m.name}, {"points", p}, {"tessellation", m.laguerre ? "laguerre" : "voronoi"}};
  if (m.radii.present) {
    json r;
    if (m.radii.law.kind == RadiusLaw::Kind::constant) {
      r = {{"law", "constant"}, {"value", m.radii.law.value}};
    } else {
      r = {{"law", "lognormal_volume"}, {"mu", m.radii.law.mu}, {"sigma", m.radii.law.sigma}};
    }
    if (m.radii.volume_fraction) r["volume_fraction"] = *m.radii.volume_fraction;
    out["radii"] = r;
  }
  return out;
}

const char* thickness_name(ThicknessLaw::Kind k) {
  switch (k) {
    case ThicknessLaw::Kind::none: return "none";
    case ThicknessLaw::Kind::constant: return "constant";
    case ThicknessLaw::Kind::uniform: return "uniform";
  }
  return "?";
}

// ---- misc ----------------------------------------------------------------------

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string file_token(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ? c : '_';
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

template <typename F>
auto with_context(const std::string& ctx, F&& f) {
  try {
    return f();
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(ctx + e.what());
  } catch (const DegenerateInputError& e) {
    throw DegenerateInputError(ctx + e.what());
  } catch (const DomainError& e) {
    throw DomainError(ctx + e.what());
  } catch (const InvariantError& e) {
    throw InvariantError(ctx + e.what());
  } catch (const EmptyInputError& e) {
    throw EmptyInputError(ctx + e.what());
  }
}

NoiseConfig noise_for(const ExperimentConfig& config, std::uint64_t seed) {
  NoiseConfig n = config.noise;
  n.seed = mix_seed(seed ^ 0x6e6f697365ULL);
  return n;
}

void report(const Progress& progress, const std::string& msg) {
  if (progress) progress(msg);
}

}  // namespace

const ModelSpec& ExperimentConfig::model(const std::string& name) const {
  for (const ModelSpec& m : models)
    if (m.name == name) return m;
  throw ConfigError("models", "no model named '" + name + "'");
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

StatisticSpec parse_statistic(const json& j, const std::string& path) {
  check_object(j, path);
  check_keys(j, path, {"kind", "quantile", "threshold", "q", "M", "min_inradius", "b", "d", "pooling"});
  StatisticSpec s;
  const std::string kind = text(j, path, "kind");
  try {
    s.kind = parse_kind(kind);
  } catch (const DomainError&) {
    throw ConfigError(join(path, "kind"),
                      "expected area, inradius, persistence, edge_betti, localized_betti or euler, got '" + kind + "'");
  }
  if (find(j, "quantile")) {
    s.quantile = number(j, path, "quantile");
    check(*s.quantile > 0 && *s.quantile < 1, join(path, "quantile"), "must lie in (0, 1)");
  }
  if (find(j, "threshold")) s.threshold = number(j, path, "threshold");
  s.q_dim = static_cast<int>(integer(j, path, "q", 1));
  if (const json* M = find(j, "M")) {
    if (M->is_string() && M->get<std::string>() == "inf")
      s.M = kInfinity;
    else
      s.M = number(j, path, "M");
  }
  s.min_inradius = number(j, path, "min_inradius", -1.0);
  s.b = number(j, path, "b", 0.0);
  s.d = number(j, path, "d", 0.0);
  const std::string pooling = text(j, path, "pooling", std::string("pooled"));
  if (pooling == "pooled")
    s.pooling = StatisticSpec::Pooling::pooled;
  else if (pooling == "per_rep_median")
    s.pooling = StatisticSpec::Pooling::per_rep_median;
  else
    throw ConfigError(join(path, "pooling"), "expected pooled or per_rep_median");
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
  return s;
}

StatisticSpec parse_statistic(const std::string& spec) {
  std::string t = spec;
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.erase(t.begin());
  if (!t.empty() && t.front() == '{') {
    json j;
    try {
      j = json::parse(t);
    } catch (const json::exception& e) {
      throw ConfigError("stat", std::string("invalid JSON: ") + e.what());
    }
    return parse_statistic(j, "stat");
  }
  json j;
  const auto colon = t.find(':');
  j["kind"] = t.substr(0, colon);
  if (colon != std::string::npos) {
    std::stringstream rest(t.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("stat", "expected key=value, got '" + item + "'");
      const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
      if (key == "pooling" || (key == "M" && value == "inf")) {
        j[key] = value;
        continue;
      }
      char* end = nullptr;
      const double x = std::strtod(value.c_str(), &end);
      if (value.empty() || *end != '\0') throw ConfigError("stat." + key, "expected a number, got '" + value + "'");
      if (key == "q")
        j[key] = static_cast<long>(x);
      else
        j[key] = x;
    }
  }
  return parse_statistic(j, "stat");
}

json statistic_to_json(const StatisticSpec& s) {
  json j = {{"kind", kind_name(s.kind)}};
  if (s.quantile) j["quantile"] = *s.quantile;
  if (s.threshold) j["threshold"] = *s.threshold;
  if (s.kind == StatisticSpec::Kind::persistence || s.kind == StatisticSpec::Kind::localized_betti) j["q"] = s.q_dim;
  if (s.kind == StatisticSpec::Kind::edge_betti || s.kind == StatisticSpec::Kind::localized_betti) {
    if (std::isfinite(s.M))
      j["M"] = s.M;
    else
      j["M"] = "inf";
  }
  if (s.kind == StatisticSpec::Kind::localized_betti) {
    j["min_inradius"] = s.min_inradius;
    j["b"] = s.b;
    j["d"] = s.d;
  }
  if (s.pooling == StatisticSpec::Pooling::per_rep_median) j["pooling"] = "per_rep_median";
  return j;
}

ExperimentConfig parse_config(const json& doc) {
  check_object(doc, "");
  check_keys(doc, "", {"schema", "description", "master_seed", "window", "models", "statistics", "replications",
                       "alpha", "noise", "output_dir", "workers", "outputs"});
  const std::string schema = text(doc, "", "schema");
  check(schema == kConfigSchema, "schema", "expected '" + std::string(kConfigSchema) + "', got '" + schema + "'");
  ExperimentConfig c;
  {
    const json* s = find(doc, "master_seed");
    check(s != nullptr, "master_seed", "required");
    check(s->is_number_unsigned() || (s->is_number_integer() && s->get<long long>() >= 0), "master_seed",
          "expected a nonnegative integer");
    c.master_seed = s->get<std::uint64_t>();
  }
  if (const json* w = find(doc, "window")) {
    check_object(*w, "window");
    check_keys(*w, "window", {"edge_length", "periodic"});
    c.window.edge_length = number(*w, "window", "edge_length", 1.0);
    check(c.window.edge_length > 0, "window.edge_length", "must be positive");
    c.window.periodic = boolean(*w, "window", "periodic", true);
  }

  const json* models = find(doc, "models");
  check(models && models->is_array() && !models->empty(), "models", "expected a nonempty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < models->size(); ++i) {
    ModelSpec m = parse_model((*models)[i], "models[" + std::to_string(i) + "]", c.window);
    check(names.insert(m.name).second, "models[" + std::to_string(i) + "].name", "duplicate model name '" + m.name + "'");
    c.models.push_back(std::move(m));
  }

  const json* stats = find(doc, "statistics");
  check(stats && stats->is_array() && !stats->empty(), "statistics", "expected a nonempty array");
  for (std::size_t i = 0; i < stats->size(); ++i)
    c.statistics.push_back(parse_statistic((*stats)[i], "statistics[" + std::to_string(i) + "]"));

  if (const json* r = find(doc, "replications")) {
    check_object(*r, "replications");
    check_keys(*r, "replications", {"calibration", "test"});
    c.n_calibration = static_cast<int>(integer(*r, "replications", "calibration", 200));
    c.n_test = static_cast<int>(integer(*r, "replications", "test", 200));
    check(c.n_calibration >= 2, "replications.calibration", "must be at least 2");
    check(c.n_test >= 1, "replications.test", "must be at least 1");
  }
  c.alpha = number(doc, "", "alpha", 0.05);
  check(c.alpha > 0 && c.alpha < 1, "alpha", "must lie in (0, 1)");

  if (const json* n = find(doc, "noise")) {
    check_object(*n, "noise");
    check_keys(*n, "noise", {"vertex_h0", "thickness"});
    c.noise.vertex_noise_h0 = number(*n, "noise", "vertex_h0", 0.0);
    check(c.noise.vertex_noise_h0 >= 0, "noise.vertex_h0", "must be nonnegative");
    if (const json* t = find(*n, "thickness")) {
      check_object(*t, "noise.thickness");
      check_keys(*t, "noise.thickness", {"law", "a", "b"});
      const std::string law = text(*t, "noise.thickness", "law");
      if (law == "none")
        c.noise.thickness.kind = ThicknessLaw::Kind::none;
      else if (law == "constant")
        c.noise.thickness.kind = ThicknessLaw::Kind::constant;
      else if (law == "uniform")
        c.noise.thickness.kind = ThicknessLaw::Kind::uniform;
      else
        throw ConfigError("noise.thickness.law", "expected none, constant or uniform");
      c.noise.thickness.a = number(*t, "noise.thickness", "a", 0.0);
      c.noise.thickness.b = number(*t, "noise.thickness", "b", c.noise.thickness.a);
      check(c.noise.thickness.a >= 0, "noise.thickness.a", "must be nonnegative");
      check(c.noise.thickness.b >= c.noise.thickness.a, "noise.thickness.b", "must be at least a");
    }
  }
  c.output_dir = text(doc, "", "output_dir", std::string("tessgof-out"));
  c.workers = static_cast<int>(integer(doc, "", "workers", 0));
  check(c.workers >= 0, "workers", "must be nonnegative");
  if (const json* o = find(doc, "outputs")) {
    check_object(*o, "outputs");
    check_keys(*o, "outputs", {"diagrams", "densities", "density_max_samples"});
    c.export_diagrams = static_cast<int>(integer(*o, "outputs", "diagrams", 1));
    check(c.export_diagrams >= 0 && c.export_diagrams <= c.n_calibration, "outputs.diagrams",
          "must lie in 0..replications.calibration");
    c.export_densities = boolean(*o, "outputs", "densities", true);
    c.density_max_samples = static_cast<int>(integer(*o, "outputs", "density_max_samples", 20000));
    check(c.density_max_samples >= 2, "outputs.density_max_samples", "must be at least 2");
  }

  json normalized = config_to_json(c);
  normalized.erase("output_dir");
  normalized.erase("workers");
  c.hash = fnv1a_hex(normalized.dump());
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json models = json::array(), stats = json::array();
  for (const ModelSpec& m : c.models) models.push_back(model_to_json(m));
  for (const StatisticSpec& s : c.statistics) stats.push_back(statistic_to_json(s));
  json out = {{"schema", kConfigSchema},
              {"master_seed", c.master_seed},
              {"window", {{"edge_length", c.window.edge_length}, {"periodic", c.window.periodic}}},
              {"models", models},
              {"statistics", stats},
              {"replications", {{"calibration", c.n_calibration}, {"test", c.n_test}}},
              {"alpha", c.alpha},
              {"output_dir", c.output_dir},
              {"workers", c.workers},
              {"outputs",
               {{"diagrams", c.export_diagrams},
                {"densities", c.export_densities},
                {"density_max_samples", c.density_max_samples}}}};
  if (c.noise.vertex_noise_h0 > 0 || c.noise.thickness.kind != ThicknessLaw::Kind::none) {
    out["noise"] = {{"vertex_h0", c.noise.vertex_noise_h0},
                    {"thickness",
                     {{"law", thickness_name(c.noise.thickness.kind)},
                      {"a", c.noise.thickness.a},
                      {"b", c.noise.thickness.b}}}};
  }
  return out;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config", "'" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

int effective_workers(int configured) {
  if (const char* env = std::getenv("TESSGOF_WORKERS")) {
    char* end = nullptr;
    const long w = std::strtol(env, &end, 10);
    if (*env != '\0' && *end == '\0' && w >= 0) return static_cast<int>(w);
    throw ConfigError("TESSGOF_WORKERS", std::string("expected a nonnegative integer, got '") + env + "'");
  }
  return configured;
}

ModelSample sample_model(const ModelSpec& model, const Window& window, std::uint64_t seed) {
  const std::uint64_t point_seed = mix_seed(seed ^ 0x706f696e7473ULL);
  const std::uint64_t radius_seed = mix_seed(seed ^ 0x7261646969ULL);
  ModelSample out;
  std::vector<double> radii;
  if (model.radii.present) {
    radii = sample_radii(model.radii.law, model.points.n, radius_seed);
    if (model.radii.volume_fraction) {
      const double scale = std::cbrt(*model.radii.volume_fraction / volume_fraction(radii, window));
      for (double& r : radii) r *= scale;
    }
  }

  std::vector<MarkedPoint> marked;
  switch (model.points.kind) {
    case PointSpec::Kind::binomial:
      for (const Vec3& p : sample_binomial(model.points.n, window, point_seed)) marked.push_back({p, 0.0});
      break;
    case PointSpec::Kind::strauss: {
      StraussParams sp;
      sp.n_points = model.points.n;
      sp.gamma = model.points.gamma;
      sp.r0 = model.points.r0;
      sp.n_sweeps = model.points.sweeps;
      sp.seed = point_seed;
      StraussSample s = sample_strauss_fixed_n(sp, window);
      out.warnings = std::move(s.warnings);
      for (const Vec3& p : s.points) marked.push_back({p, 0.0});
      break;
    }
    case PointSpec::Kind::force_biased: {
      PackingParams pp;
      pp.radii = radii;
      pp.max_iterations = model.points.max_iterations;
      pp.overlap_tolerance = model.points.tolerance;
      pp.seed = point_seed;
      marked = sample_force_biased(pp, window).spheres;
      for (std::size_t i = 0; i < marked.size(); ++i) radii[i] = marked[i].radius;
      break;
    }
  }
  if (model.laguerre) {
    for (std::size_t i = 0; i < marked.size(); ++i) marked[i].radius = radii[i];
    out.tess = build_laguerre(marked, window);
  } else {
    std::vector<Vec3> locs;
    for (const MarkedPoint& m : marked) locs.push_back(m.location);
    out.tess = build_voronoi(locs, window);
  }
  return out;
}

std::uint64_t replication_seed(std::uint64_t master, const std::string& model, std::uint64_t phase, int rep) {
  return seed_stream(master, std::stoull(fnv1a_hex(model), nullptr, 16), phase, static_cast<std::uint64_t>(rep));
}

ReplicationSet simulate(const ExperimentConfig& config, const ModelSpec& model, std::uint64_t phase, int n_reps,
                        int keep_diagrams, const Progress& progress) {
  ReplicationSet out;
  out.model = model.name;
  out.phase = phase;
  const std::size_t nspec = config.statistics.size();
  out.obs.assign(nspec, std::vector<Observation>(n_reps));
  out.diagrams.resize(std::min(keep_diagrams, n_reps));
  out.seeds.resize(n_reps);
  std::vector<std::vector<std::string>> warnings(n_reps);
  for (int r = 0; r < n_reps; ++r) out.seeds[r] = replication_seed(config.master_seed, model.name, phase, r);

  std::atomic<int> done{0};
  std::mutex mu;
  const int step = std::max(1, n_reps / 10);
  parallel_for(static_cast<std::size_t>(n_reps), effective_workers(config.workers), [&](std::size_t r) {
    const std::string ctx = model.name + " replication " + std::to_string(r) + ": ";
    with_context(ctx, [&] {
      ModelSample s = sample_model(model, config.window, out.seeds[r]);
      const NoiseConfig noise = noise_for(config, out.seeds[r]);
      for (std::size_t k = 0; k < nspec; ++k) out.obs[k][r] = observe(s.tess, config.statistics[k], noise);
      if (r < out.diagrams.size()) out.diagrams[r] = statistics_diagram(s.tess, noise);
      warnings[r] = std::move(s.warnings);
      return 0;
    });
    const int n = ++done;
    if (progress && (n % step == 0 || n == n_reps)) {
      std::lock_guard<std::mutex> lock(mu);
      progress(model.name + (phase == kCalibrationPhase ? " calibration " : " test ") + std::to_string(n) + "/" +
               std::to_string(n_reps));
    }
  });
  for (int r = 0; r < n_reps; ++r)
    for (const std::string& w : warnings[r]) out.warnings.push_back(model.name + " replication " + std::to_string(r) + ": " + w);
  return out;
}

Calibration calibrate(const ReplicationSet& reps, std::size_t spec_index, const StatisticSpec& spec) {
  return calibrate(reps.obs.at(spec_index), spec, reps.seeds, reps.model);
}

Calibration calibrate(const ExperimentConfig& config, const ModelSpec& model, const StatisticSpec& spec, int n_reps,
                      std::uint64_t master_seed) {
  if (n_reps < 2) throw DomainError("calibration needs at least 2 replications");
  ExperimentConfig c = config;
  c.master_seed = master_seed;
  c.statistics = {spec};
  return calibrate(simulate(c, model, kCalibrationPhase, n_reps), 0, spec);
}

StudyResult power_table(const ExperimentConfig& config, std::uint64_t calibration_phase, std::uint64_t test_phase,
                        const Progress& progress) {
  StudyResult out;
  for (const ModelSpec& m : config.models) {
    out.calibration.push_back(simulate(config, m, calibration_phase, config.n_calibration, config.export_diagrams, progress));
    out.test.push_back(simulate(config, m, test_phase, config.n_test, 0, progress));
  }
  const std::size_t nm = config.models.size();
  for (std::size_t k = 0; k < config.statistics.size(); ++k) {
    const StatisticSpec& spec = config.statistics[k];
    std::vector<Calibration> cals;
    PowerTable table;
    table.statistic = spec.name();
    for (std::size_t i = 0; i < nm; ++i) {
      table.nulls.push_back(config.models[i].name);
      table.alternatives.push_back(config.models[i].name);
      cals.push_back(calibrate(out.calibration[i], k, spec));
    }
    table.rate.assign(nm, std::vector<double>(nm, 0.0));
    for (std::size_t i = 0; i < nm; ++i)
      for (std::size_t j = 0; j < nm; ++j) {
        std::vector<double> values;
        for (const Observation& o : out.test[j].obs[k]) values.push_back(statistic_value(o, spec, cals[i].threshold));
        table.rate[i][j] = rejection_rate(cals[i], values, config.alpha, out.test[j].seeds);
      }
    out.calibrations.push_back(std::move(cals));
    out.power.push_back(std::move(table));
  }
  return out;
}

namespace {

class Artifacts {
 public:
  Artifacts(const ExperimentConfig& c) : config_(c), root_(c.output_dir) { std::filesystem::create_directories(root_); }

  std::ofstream open(const std::string& name) {
    const auto path = root_ / name;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    files_.push_back(name);
    return out;
  }

  std::ofstream csv(const std::string& name) {
    std::ofstream out = open(name);
    out << "# config_hash=" << config_.hash << "\n# master_seed=" << config_.master_seed << '\n';
    return out;
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  const ExperimentConfig& config_;
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

bool has_density(StatisticSpec::Kind k) {
  return k == StatisticSpec::Kind::area || k == StatisticSpec::Kind::inradius || k == StatisticSpec::Kind::persistence ||
         k == StatisticSpec::Kind::edge_betti;
}

}  // namespace

std::vector<std::string> run_experiment(const ExperimentConfig& config, const Progress& progress) {
  const StudyResult study = power_table(config, kCalibrationPhase, kTestPhase, progress);
  Artifacts art(config);
  const std::size_t nm = config.models.size();

  {
    std::ofstream cfg = art.open("config.json");
    json j = config_to_json(config);
    j["config_hash"] = config.hash;
    cfg << j.dump(2) << '\n';
  }
  {
    std::ofstream out = art.csv("calibration.csv");
    out << "model,statistic,threshold,rep,seed,value\n";
    for (std::size_t k = 0; k < config.statistics.size(); ++k)
      for (std::size_t i = 0; i < nm; ++i) {
        const Calibration& c = study.calibrations[k][i];
        for (int r = 0; r < c.n_reps; ++r)
          out << c.null_model << ',' << c.statistic << ',' << fmt17(c.threshold) << ',' << r << ',' << c.seeds[r] << ','
              << fmt17(c.values[r]) << '\n';
      }
  }
  {
    std::ofstream out = art.csv("calibration_summary.csv");
    out << "model,statistic,threshold,n_reps,mean,variance,skewness,anderson_darling_p\n";
    for (std::size_t k = 0; k < config.statistics.size(); ++k)
      for (std::size_t i = 0; i < nm; ++i) {
        const Calibration& c = study.calibrations[k][i];
        std::string skew = "nan", ad = "nan";
        if (c.variance > 0) {
          skew = fmt17(sample_skewness(c.values));
          if (c.n_reps >= 8) ad = fmt17(anderson_darling_normal(c.values).p_value);
        }
        out << c.null_model << ',' << c.statistic << ',' << fmt17(c.threshold) << ',' << c.n_reps << ',' << fmt17(c.mean)
            << ',' << fmt17(c.variance) << ',' << skew << ',' << ad << '\n';
      }
  }
  {
    std::ofstream out = art.csv("test.csv");
    out << "null,alternative,statistic,rep,seed,value,z,reject\n";
    for (std::size_t k = 0; k < config.statistics.size(); ++k)
      for (std::size_t i = 0; i < nm; ++i) {
        const Calibration& c = study.calibrations[k][i];
        if (!(c.variance > 0)) continue;
        for (std::size_t j = 0; j < nm; ++j) {
          const ReplicationSet& t = study.test[j];
          for (std::size_t r = 0; r < t.seeds.size(); ++r) {
            const double v = statistic_value(t.obs[k][r], config.statistics[k], c.threshold);
            const TestReport rep = gof_test(v, c, config.alpha);
            out << c.null_model << ',' << t.model << ',' << c.statistic << ',' << r << ',' << t.seeds[r] << ',' << fmt17(v)
                << ',' << fmt17(rep.z) << ',' << (rep.reject ? 1 : 0) << '\n';
          }
        }
      }
  }
  for (std::size_t k = 0; k < study.power.size(); ++k) {
    const PowerTable& p = study.power[k];
    std::ofstream out = art.csv("power_" + std::to_string(k) + "_" + file_token(p.statistic) + ".csv");
    out << "# statistic=" << p.statistic << "\n# alpha=" << fmt6(config.alpha) << "\nnull";
    for (const std::string& a : p.alternatives) out << ',' << a;
    out << '\n';
    for (std::size_t i = 0; i < p.nulls.size(); ++i) {
      out << p.nulls[i];
      for (double r : p.rate[i]) out << ',' << fmt6(r);
      out << '\n';
    }
  }
  for (std::size_t i = 0; i < nm; ++i)
    for (std::size_t r = 0; r < study.calibration[i].diagrams.size(); ++r) {
      std::ofstream out = art.csv("diagrams/" + file_token(config.models[i].name) + "_rep" + std::to_string(r) + ".csv");
      write_diagram_csv(out, study.calibration[i].diagrams[r]);
    }
  if (config.export_densities) {
    for (std::size_t k = 0; k < config.statistics.size(); ++k) {
      if (!has_density(config.statistics[k].kind)) continue;
      for (std::size_t i = 0; i < nm; ++i) {
        std::vector<double> pooled;
        for (const Observation& o : study.calibration[i].obs[k]) {
          for (double v : o.values) {
            if (pooled.size() >= static_cast<std::size_t>(config.density_max_samples)) break;
            pooled.push_back(v);
          }
        }
        try {
          const Density d = density_export(pooled);
          std::ofstream out = art.csv("densities/" + file_token(config.models[i].name) + "_" + std::to_string(k) + "_" +
                                      kind_name(config.statistics[k].kind) + ".csv");
          write_density_csv(out, d);
        } catch (const DomainError& e) {
          report(progress, "warning: no density for " + config.models[i].name + " " + config.statistics[k].name() + ": " +
                               e.what());
        }
      }
    }
  }

  std::size_t nwarn = 0;
  for (const ReplicationSet& s : study.calibration) nwarn += s.warnings.size();
  for (const ReplicationSet& s : study.test) nwarn += s.warnings.size();
  for (const auto* sets : {&study.calibration, &study.test})
    for (const ReplicationSet& s : *sets)
      for (std::size_t w = 0; w < std::min<std::size_t>(s.warnings.size(), 3); ++w) report(progress, "warning: " + s.warnings[w]);
  if (nwarn > 0) report(progress, std::to_string(nwarn) + " sampler warning(s) in total");

  {
    std::ofstream out = art.open("manifest.json");
    json files = art.files();
    out << json{{"config_hash", config.hash}, {"master_seed", config.master_seed}, {"files", files}, {"warnings", nwarn}}.dump(2)
        << '\n';
  }
  std::vector<std::string> files = art.files();
  return files;
}

ImportTest run_gof_on_tessellation(const Tessellation& data, const ExperimentConfig& config, const std::string& model,
                                   const StatisticSpec& spec, double alpha, const Progress& progress) {
  spec.validate();
  ExperimentConfig c = config;
  const Window& w = data.window();
  if (std::abs(w.edge_length - c.window.edge_length) > 1e-12 * c.window.edge_length || w.periodic != c.window.periodic)
    report(progress, "warning: sampling the null model in the data window (edge " + fmt6(w.edge_length) +
                         (w.periodic ? ", periodic" : ", bounded") + ")");
  c.window = w;
  c.statistics = {spec};
  const ModelSpec& m = c.model(model);
  ImportTest out;
  out.calibration = calibrate(simulate(c, m, kCalibrationPhase, c.n_calibration, 0, progress), 0, spec);
  const Observation obs = observe(data, spec, noise_for(c, mix_seed(c.master_seed ^ 0x64617461ULL)));
  out.report = gof_test(statistic_value(obs, spec, out.calibration.threshold), out.calibration, alpha);
  return out;
}

ImportTest run_gof_on_import(const std::string& tess_path, const ExperimentConfig& config, const std::string& model,
                             const StatisticSpec& spec, double alpha, const Progress& progress) {
  const Tessellation data = import_tessellation(tess_path);
  return run_gof_on_tessellation(data, config, model, spec, alpha, progress);
}

json report_to_json(const ImportTest& t, const ExperimentConfig& config, const std::string& model) {
  return {{"schema", kReportSchema},
          {"config_hash", config.hash},
          {"master_seed", config.master_seed},
          {"null_model", model},
          {"statistic", t.calibration.statistic},
          {"threshold", t.calibration.threshold},
          {"n_calibration", t.calibration.n_reps},
          {"mean", t.report.mean},
          {"variance", t.report.variance},
          {"value", t.report.value},
          {"z", t.report.z},
          {"p_value", t.report.p_value},
          {"alpha", t.report.alpha},
          {"reject", t.report.reject}};
}

std::string format_description() {
  std::ostringstream s;
  s << R"(Tessellation file (.tess), text, version 1
  Comma-separated records; '#' starts a comment; blank lines are ignored.
    tessgof-tessellation,1
    window,<edge length>,<periodic 0|1>,<dimension>
    generators,<count>
    <id>,<x>,<y>,<z>,<radius>,<empty 0|1>
    vertices,<count>
    <id>,<x>,<y>,<z>
    faces q=<k>,<count>            one section per k = 0..dimension
    <id>,<vertex refs>,<boundary refs>,<cell refs>
    end
  A ref list is space separated; a ref is `id` or `id@sx:sy:sz`, the shift
  moving the referenced item's frame into the face frame (periodic windows).
  2-face vertices are in cyclic order; boundary[j] joins vertex j and j+1.

Experiment config (.json), schema ")"
    << kConfigSchema << R"("
  {
    "schema": ")" << kConfigSchema
    << R"(",
    "description": "<optional text>",
    "master_seed": <uint64>,
    "window": {"edge_length": <L>, "periodic": true},
    "models": [{
      "name": "<id>",
      "points": {"kind": "binomial" | "strauss" | "force_biased", "n": <count>,
                 strauss: "gamma" in [0,1], "r0" > 0, "sweeps" (500),
                 force_biased: "max_iterations" (100000), "tolerance" (1e-9)},
      "radii": {"law": "constant", "value": <r>}
             | {"law": "lognormal_volume", "mu": <mu>, "sigma": <sigma>},
               optional "volume_fraction" in (0, 0.64] rescales every draw,
      "tessellation": "voronoi" | "laguerre"
    }],
    "statistics": [{
      "kind": "area" | "inradius" | "persistence" | "edge_betti" | "localized_betti" | "euler",
      "quantile": <p in (0,1)> | "threshold": <a>,
      "q": <feature dim, 1>, "M": <window half-width or "inf">,
      "min_inradius": <floor, negative = 1/M>, "b": <birth>, "d": <death>,
      "pooling": "pooled" | "per_rep_median"
    }],
    "replications": {"calibration": 200, "test": 200},
    "alpha": 0.05,
    "noise": {"vertex_h0": 0, "thickness": {"law": "none" | "constant" | "uniform", "a": 0, "b": 0}},
    "output_dir": "<dir>",
    "workers": <0 = all cores; TESSGOF_WORKERS overrides>,
    "outputs": {"diagrams": 1, "densities": true, "density_max_samples": 20000}
  }

Statistic on the command line: "<kind>:key=value,..." or a JSON object,
  e.g. "area:quantile=0.4", "persistence:quantile=0.7,q=1".

Outputs of `run` (every CSV starts with '# config_hash=' and '# master_seed=' lines)
  config.json                normalized config with its hash
  calibration.csv            model,statistic,threshold,rep,seed,value
  calibration_summary.csv    model,statistic,threshold,n_reps,mean,variance,skewness,anderson_darling_p
  test.csv                   null,alternative,statistic,rep,seed,value,z,reject
  power_<k>_<statistic>.csv  rejection rates, rows = null model, columns = alternative
  diagrams/<model>_rep<r>.csv   dim,birth,death,birth_face,killing_face,essential
  densities/<model>_<k>_<kind>.csv   x,density (Gaussian KDE, bandwidth in header)
  manifest.json              hash, seed, file list, warning count

Test report (JSON), schema ")"
    << kReportSchema << R"("
  null_model, statistic, threshold, n_calibration, mean, variance, value, z,
  p_value (two-sided), alpha, reject (|z| > Phi^-1(1 - alpha/2)), config_hash, master_seed

Exit codes
  0 success, 1 other error, 2 configuration or usage error,
  3 sampler did not converge, 4 degenerate geometry, 5 tessellation import error
)";
  return s.str();
}

}  // namespace tessgof
