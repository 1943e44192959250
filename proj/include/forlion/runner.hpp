#ifndef FORLION_RUNNER_HPP
#define FORLION_RUNNER_HPP

// Config-driven run orchestration shared by the command-line tool and the
// integration tests. A run is described by one JSON document; the result
// is a machine-readable JSON report plus a human-readable design table.

#include "forlion/forlion.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace forlion {

using Json = nlohmann::ordered_json;

enum class Task { design, ew_design, round, efficiency, info };

inline Task task_from_string(const std::string& s) {
  if (s == "design") return Task::design;
  if (s == "ew-design") return Task::ew_design;
  if (s == "round") return Task::round;
  if (s == "efficiency") return Task::efficiency;
  if (s == "info") return Task::info;
  throw ConfigError("task: unknown task '" + s + "'");
}

struct RunConfig {
  Task task = Task::design;
  DesignSpace space;
  ModelSpec model;
  bool glm_adapted = false;

  // exactly one parameter mode
  std::optional<Vector> theta;
  std::optional<BoxPrior> prior;
  std::optional<ParameterSample> samples;

  ForLionConfig algorithm;
  std::optional<RoundingConfig> rounding;
  std::optional<ApproximateDesign> input_design;  // round/efficiency numerator
  std::optional<ApproximateDesign> input_design2; // efficiency denominator
  std::optional<Point> point;                     // info task

  Json raw; // post-override document, used for hashing
};

namespace runner_detail {

inline const Json& require(const Json& j, const std::string& key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(ctx + ": missing key '" + key + "'");
  return *it;
}

inline double number_at(const Json& j, const std::string& key, const std::string& ctx) {
  const Json& v = require(j, key, ctx);
  if (!v.is_number()) throw ConfigError(ctx + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::vector<Factor> parse_factors(const Json& j) {
  if (!j.is_array() || j.empty())
    throw ConfigError("factors: expected a non-empty array of factor declarations");
  std::vector<Factor> out;
  for (const auto& f : j) {
    const std::string name = require(f, "name", "factors").get<std::string>();
    const std::string type = require(f, "type", "factors[" + name + "]").get<std::string>();
    if (type == "continuous") {
      out.push_back(Factor::make_continuous(name, number_at(f, "lower", "factors[" + name + "]"),
                                            number_at(f, "upper", "factors[" + name + "]")));
    } else if (type == "discrete") {
      const Json& lv = require(f, "levels", "factors[" + name + "]");
      if (!lv.is_array()) throw ConfigError("factors[" + name + "].levels: expected an array");
      out.push_back(Factor::make_discrete(name, lv.get<std::vector<double>>()));
    } else {
      throw ConfigError("factors[" + name + "].type: expected 'continuous' or 'discrete'");
    }
  }
  return out;
}

inline ModelSpec parse_model(const Json& j, const DesignSpace& space) {
  const std::string family = require(j, "family", "model").get<std::string>();
  const Json& rows_json = require(j, "formula", "model");
  std::vector<std::string> rows;
  if (rows_json.is_string())
    rows.push_back(rows_json.get<std::string>());
  else if (rows_json.is_array())
    rows = rows_json.get<std::vector<std::string>>();
  else
    throw ConfigError("model.formula: expected a string or an array of row strings");
  PredictorFormula formula;
  try {
    formula = parse_formula(rows, space);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("model.formula: ") + e.what());
  }
  const std::string link = require(j, "link", "model").get<std::string>();
  if (family == "glm") {
    if (rows.size() != 1) throw ConfigError("model.formula: a GLM takes exactly one formula row");
    return ModelSpec::glm(glm_link_from_string(link), std::move(formula));
  }
  if (family == "mlm") {
    const auto J = static_cast<std::size_t>(number_at(j, "J", "model"));
    if (rows.size() != J)
      throw ConfigError("model.formula: an MLM takes exactly J = " + std::to_string(J) +
                        " rows, got " + std::to_string(rows.size()));
    return ModelSpec::mlm(mlm_link_from_string(link), J, std::move(formula));
  }
  throw ConfigError("model.family: expected 'glm' or 'mlm'");
}

inline ApproximateDesign parse_design(const Json& j, const DesignSpace& space,
                                      const std::string& ctx) {
  ApproximateDesign xi;
  const Json& pts = require(j, "points", ctx);
  const Json& w = require(j, "weights", ctx);
  if (!pts.is_array() || !w.is_array() || pts.size() != w.size() || pts.empty())
    throw ConfigError(ctx + ": points and weights must be equal-length non-empty arrays");
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Point x = pts[i].get<std::vector<double>>();
    if (!space.contains(x))
      throw ConfigError(ctx + ".points[" + std::to_string(i) + "]: outside the design space");
    const double wi = w[i].get<double>();
    if (wi < 0.0) throw ConfigError(ctx + ".weights: negative weight");
    total += wi;
    xi.points.push_back(std::move(x));
    xi.weights.push_back(wi);
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ConfigError(ctx + ".weights: weights must sum to 1");
  return xi;
}

inline void apply_algorithm(const Json& j, ForLionConfig& cfg) {
  if (auto it = j.find("delta0"); it != j.end()) cfg.delta0 = it->get<double>();
  if (auto it = j.find("delta"); it != j.end()) cfg.delta = it->get<double>();
  if (auto it = j.find("epsilon"); it != j.end()) cfg.epsilon = it->get<double>();
  if (auto it = j.find("reltol"); it != j.end()) cfg.reltol = it->get<double>();
  if (auto it = j.find("maxit"); it != j.end()) cfg.maxit = it->get<int>();
  if (auto it = j.find("random"); it != j.end()) cfg.random = it->get<bool>();
  if (auto it = j.find("nram"); it != j.end()) cfg.nram = it->get<int>();
  if (auto it = j.find("random_initial"); it != j.end()) cfg.random_initial = it->get<bool>();
  if (auto it = j.find("nram_initial"); it != j.end()) cfg.nram_initial = it->get<int>();
  if (auto it = j.find("optim_grad"); it != j.end()) cfg.optim_grad = it->get<bool>();
  if (auto it = j.find("logscale"); it != j.end()) cfg.logscale = it->get<bool>();
  if (auto it = j.find("rowmax"); it != j.end()) cfg.rowmax = it->get<std::size_t>();
  if (auto it = j.find("multistart_count"); it != j.end())
    cfg.multistart_count = it->get<int>();
  for (const auto& [key, value] : j.items()) {
    static const char* known[] = {"delta0", "delta",          "epsilon",
                                  "reltol", "maxit",          "random",
                                  "nram",   "random_initial", "nram_initial",
                                  "optim_grad", "logscale",   "rowmax",
                                  "multistart_count", "glm_adapted"};
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("algorithm." + key + ": unknown key");
    (void)value;
  }
  if (!(cfg.delta0 > 0.0)) throw ConfigError("algorithm.delta0: must be positive");
  if (!(cfg.epsilon > 0.0)) throw ConfigError("algorithm.epsilon: must be positive");
  if (!(cfg.reltol > 0.0)) throw ConfigError("algorithm.reltol: must be positive");
  if (cfg.maxit < 1) throw ConfigError("algorithm.maxit: must be >= 1");
}

// FNV-1a over the canonical serialized config.
inline std::string config_hash(const Json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace runner_detail

/// Parse and statically validate a config document. `base_dir` resolves
/// relative sample-file paths.
inline RunConfig parse_run_config(const Json& doc, const std::filesystem::path& base_dir = {}) {
  using namespace runner_detail;
  RunConfig cfg;
  cfg.raw = doc;
  cfg.task = task_from_string(require(doc, "task", "config").get<std::string>());
  cfg.space = DesignSpace(parse_factors(require(doc, "factors", "config")),
                          doc.contains("fixed_discrete_list")
                              ? std::optional(doc["fixed_discrete_list"]
                                                  .get<std::vector<std::vector<double>>>())
                              : std::nullopt);
  cfg.model = parse_model(require(doc, "model", "config"), cfg.space);

  const Json& params = require(doc, "parameters", "config");
  int modes = 0;
  if (params.contains("theta")) {
    const auto v = params["theta"].get<std::vector<double>>();
    cfg.theta = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    if (cfg.theta->size() != static_cast<Eigen::Index>(cfg.model.p()))
      throw ConfigError("parameters.theta: expected " + std::to_string(cfg.model.p()) +
                        " coefficients, got " + std::to_string(cfg.theta->size()));
    ++modes;
  }
  if (params.contains("prior")) {
    const Json& pj = params["prior"];
    BoxPrior prior;
    const auto lo = require(pj, "lower", "parameters.prior").get<std::vector<double>>();
    const auto hi = require(pj, "upper", "parameters.prior").get<std::vector<double>>();
    prior.lower = Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size()));
    prior.upper = Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()));
    if (lo.size() != cfg.model.p() || hi.size() != cfg.model.p())
      throw ConfigError("parameters.prior: bound length must equal the coefficient count " +
                        std::to_string(cfg.model.p()));
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i]))
        throw ConfigError("parameters.prior: lower must be < upper at coordinate " +
                          std::to_string(i + 1));
    if (pj.contains("density") && pj["density"].get<std::string>() != "uniform-product")
      throw ConfigError("parameters.prior.density: only 'uniform-product' is supported");
    if (pj.contains("cubature_reltol")) prior.cubature_reltol = pj["cubature_reltol"].get<double>();
    if (pj.contains("cubature_max_evals"))
      prior.cubature_max_evals = pj["cubature_max_evals"].get<std::size_t>();
    cfg.prior = std::move(prior);
    ++modes;
  }
  if (params.contains("samples")) {
    std::filesystem::path path = params["samples"].get<std::string>();
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    ParameterSample sample = load_parameter_sample(path.string());
    if (sample.names.size() != cfg.model.p())
      throw ConfigError("parameters.samples: CSV has " + std::to_string(sample.names.size()) +
                        " columns, model has " + std::to_string(cfg.model.p()) +
                        " coefficients");
    cfg.samples = std::move(sample);
    ++modes;
  }
  if (modes != 1)
    throw ConfigError("parameters: exactly one of theta | prior | samples is required");

  if (doc.contains("algorithm")) runner_detail::apply_algorithm(doc["algorithm"], cfg.algorithm);
  if (doc.contains("seed")) cfg.algorithm.seed = doc["seed"].get<unsigned long long>();
  cfg.glm_adapted = cfg.model.family == Family::glm;
  if (doc.contains("algorithm") && doc["algorithm"].contains("glm_adapted"))
    cfg.glm_adapted = doc["algorithm"]["glm_adapted"].get<bool>();

  if (doc.contains("rounding")) {
    const Json& rj = doc["rounding"];
    RoundingConfig rc;
    if (rj.contains("delta2")) rc.delta2 = rj["delta2"].get<double>();
    rc.N = static_cast<long>(runner_detail::number_at(rj, "N", "rounding"));
    const Json& grid = runner_detail::require(rj, "grid", "rounding");
    const std::size_t k = cfg.space.continuous_count();
    rc.grid.assign(k, 0.0);
    for (const auto& [key, value] : grid.items()) {
      const std::size_t idx = cfg.space.factor_index(key);
      if (idx >= k) throw ConfigError("rounding.grid." + key + ": not a continuous factor");
      rc.grid[idx] = value.get<double>();
    }
    rc.validate(k);
    cfg.rounding = rc;
  } else if (cfg.task == Task::round) {
    throw ConfigError("rounding: block required for task 'round'");
  }

  if (doc.contains("design"))
    cfg.input_design = runner_detail::parse_design(doc["design"], cfg.space, "design");
  if (doc.contains("design2"))
    cfg.input_design2 = runner_detail::parse_design(doc["design2"], cfg.space, "design2");
  if (cfg.task == Task::efficiency) {
    if (!cfg.input_design || !cfg.input_design2)
      throw ConfigError("design/design2: both required for task 'efficiency'");
  }
  if (doc.contains("point")) {
    Point x = doc["point"].get<std::vector<double>>();
    if (!cfg.space.contains(x)) throw ConfigError("point: outside the design space");
    cfg.point = std::move(x);
  } else if (cfg.task == Task::info) {
    throw ConfigError("point: required for task 'info'");
  }

  if (cfg.task == Task::ew_design && cfg.theta)
    throw ConfigError("parameters: task 'ew-design' needs prior or samples, not theta");
  if (cfg.task == Task::design && !cfg.theta)
    throw ConfigError("parameters.theta: required for task 'design'");
  if (cfg.prior && cfg.model.family == Family::mlm && cfg.model.mlm_link == MlmLink::cumulative)
    throw ConfigError(
        "parameters.prior: integral-based EW is unsupported for cumulative-link models; "
        "use parameters.samples");
  return cfg;
}

/// Static validation only: returns diagnostics, empty iff runnable.
inline std::vector<std::string> validate_config(const Json& doc,
                                                const std::filesystem::path& base_dir = {}) {
  try {
    parse_run_config(doc, base_dir);
  } catch (const ConfigError& e) {
    return {e.what()};
  }
  return {};
}

inline std::unique_ptr<InfoProvider> make_provider(const RunConfig& cfg) {
  if (cfg.theta) return std::make_unique<LocalProvider>(cfg.model, *cfg.theta);
  if (cfg.prior) return std::make_unique<IntegralEwProvider>(cfg.model, *cfg.prior);
  return std::make_unique<SampleEwProvider>(cfg.model, *cfg.samples);
}

namespace runner_detail {

inline Json design_to_json(const ApproximateDesign& xi) {
  Json j;
  j["points"] = xi.points;
  j["weights"] = xi.weights;
  return j;
}

} // namespace runner_detail

struct RunOutput {
  Json report;
  std::string table; // human-readable design table
  bool budget_warning = false;
};

/// Execute a parsed run and assemble the report. Deterministic given the
/// config: the report is byte-identical across runs except for the wall
/// time, which the caller appends.
inline RunOutput execute_run(const RunConfig& cfg) {
  using runner_detail::design_to_json;
  RunOutput out;
  Json& rep = out.report;
  rep["schema_version"] = 1;
  rep["task"] = cfg.raw.at("task");
  rep["config_hash"] = runner_detail::config_hash(cfg.raw);
  rep["seed"] = cfg.algorithm.seed;
  rep["version"] = "0.1.0";

  auto provider = make_provider(cfg);
  const std::size_t p = provider->p();

  auto format_table = [&](const std::vector<Point>& pts, const std::vector<double>& alloc) {
    std::ostringstream os;
    os << "Design Output\n";
    std::ostringstream header;
    header << "Count  ";
    for (const auto& f : cfg.space.factors()) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%-9s", f.name.substr(0, 8).c_str());
      header << buf;
    }
    header << "Allocation";
    const std::string h = header.str();
    os << std::string(h.size(), '=') << '\n' << h << '\n' << std::string(h.size(), '-') << '\n';
    for (std::size_t i = 0; i < pts.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%-7zu", i + 1);
      os << buf;
      for (double c : pts[i]) {
        std::snprintf(buf, sizeof(buf), "%-9.4f", c);
        os << buf;
      }
      std::snprintf(buf, sizeof(buf), "%.4f", alloc[i]);
      os << buf << '\n';
    }
    os << std::string(h.size(), '=') << '\n';
    return os.str();
  };

  auto fill_design_result = [&](const ForLionResult& res) {
    rep["design"] = design_to_json(res.design);
    rep["m"] = res.m;
    rep["det"] = res.det;
    rep["logdet"] = res.logdet;
    rep["convergence"] = res.convergence;
    rep["min_diff"] = std::isfinite(res.min_diff) ? Json(res.min_diff) : Json(nullptr);
    rep["x_close"] = res.x_close;
    rep["itmax"] = res.itmax;
    out.table = format_table(res.design.points, res.design.weights);
  };

  switch (cfg.task) {
    case Task::design:
    case Task::ew_design: {
      const ForLionResult res =
          forlion_optimize(cfg.space, *provider, cfg.algorithm, cfg.glm_adapted);
      fill_design_result(res);
      break;
    }
    case Task::round: {
      ApproximateDesign xi;
      if (cfg.input_design) {
        xi = *cfg.input_design;
      } else {
        const ForLionResult res =
            forlion_optimize(cfg.space, *provider, cfg.algorithm, cfg.glm_adapted);
        xi = res.design;
        rep["design"] = design_to_json(res.design);
        rep["det"] = res.det;
        rep["convergence"] = res.convergence;
      }
      const RoundingReport rr = round_design(*provider, cfg.space, xi, *cfg.rounding);
      rep["exact"]["points"] = rr.exact.points;
      rep["exact"]["ni"] = rr.exact.counts;
      rep["exact"]["N"] = rr.exact.total;
      rep["rel_efficiency"] = rr.rel_efficiency;
      const ApproximateDesign ex = rr.exact.as_approximate();
      rep["exact"]["det"] = std::exp(log_det(design_info(*provider, ex)));
      out.table = format_table(rr.exact.points, ex.weights);
      {
        std::ostringstream os;
        os << "\nni.design:\n";
        for (long n : rr.exact.counts) os << ' ' << n;
        char buf[40];
        std::snprintf(buf, sizeof(buf), "\n\nrel.efficiency: %.7g\n", rr.rel_efficiency);
        os << buf;
        out.table += os.str();
      }
      break;
    }
    case Task::efficiency: {
      rep["rel_efficiency"] =
          relative_efficiency(*provider, *cfg.input_design, *cfg.input_design2, p);
      char buf[48];
      std::snprintf(buf, sizeof(buf), "rel.efficiency: %.7g\n",
                    rep["rel_efficiency"].get<double>());
      out.table = buf;
      break;
    }
    case Task::info: {
      const Matrix F = provider->info(*cfg.point);
      std::vector<std::vector<double>> rows;
      for (Eigen::Index i = 0; i < F.rows(); ++i)
        rows.emplace_back(F.row(i).begin(), F.row(i).end());
      rep["info_matrix"] = rows;
      rep["logdet"] = log_det(F);
      std::ostringstream os;
      os << "F(x) =\n";
      for (const auto& r : rows) {
        for (double v : r) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), " %12.6g", v);
          os << buf;
        }
        os << '\n';
      }
      out.table = os.str();
      break;
    }
  }

  if (const auto* ew = dynamic_cast<const IntegralEwProvider*>(provider.get())) {
    out.budget_warning = ew->budget_exceeded();
    rep["cubature_budget_exceeded"] = out.budget_warning;
  }
  return out;
}

/// Dotted-path override, e.g. "algorithm.reltol=1e-6". Values parse as
/// JSON when possible and fall back to strings.
inline void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "': expected key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  Json parsed = Json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;
  Json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "': empty path segment");
    if (dot == std::string::npos) {
      (*node)[key] = parsed;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

inline Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  return doc;
}

} // namespace forlion

#endif
