// forlion: config-driven optimal design runs.
//
//   forlion design     -c config.json -o report.json [--seed N] [--key=value ...]
//   forlion ew-design  -c config.json -o report.json ...
//   forlion round      -c config.json --rounding.N=3500 -o report.json
//   forlion efficiency -c config.json ...
//   forlion info       -c config.json ...
//   forlion validate   -c config.json
//
// Dotted-path flags override config keys; the subcommand overrides the
// config's task field. The JSON report is deterministic for a fixed
// (config, seed) apart from the wall_time_seconds field.

#include <forlion/runner.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

int run_task(const std::string& task_name, const std::string& config_path,
             const std::string& output_path, const std::vector<std::string>& overrides,
             bool validate_only) {
  using namespace forlion;
  Json doc;
  RunConfig cfg;
  try {
    doc = load_config_file(config_path);
    if (!task_name.empty()) doc["task"] = task_name;
    for (const auto& ov : overrides) apply_override(doc, ov);
    if (validate_only) {
      const auto diags =
          validate_config(doc, std::filesystem::path(config_path).parent_path());
      for (const auto& d : diags) std::cout << d << '\n';
      if (diags.empty()) std::cout << "ok\n";
      return diags.empty() ? 0 : 2;
    }
    cfg = parse_run_config(doc, std::filesystem::path(config_path).parent_path());
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();
    RunOutput out = execute_run(cfg);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
    out.report["wall_time_seconds"] = elapsed.count();
    if (!output_path.empty()) {
      std::ofstream os(output_path);
      if (!os) {
        std::cerr << "error: cannot write report to '" << output_path << "'\n";
        return 2;
      }
      os << out.report.dump(2) << '\n';
    }
    std::cout << out.table;
    if (out.budget_warning)
      std::cerr << "warning: cubature evaluation budget exhausted; expected-information "
                   "values may be less accurate than parameters.prior.cubature_reltol\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal approximate and exact design computation"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* cmd;
    std::string task; // empty: keep the config's task
    bool validate_only = false;
  };
  std::vector<Sub> subs;
  std::string config_path, output_path;
  std::optional<unsigned long long> seed;

  auto add = [&](const std::string& name, const std::string& desc, const std::string& task,
                 bool validate_only) {
    CLI::App* c = app.add_subcommand(name, desc);
    c->add_option("-c,--config", config_path, "JSON config file")->required();
    if (!validate_only) c->add_option("-o,--output", output_path, "machine-readable report path");
    c->add_option("--seed", seed, "override the run seed");
    c->allow_extras(); // remaining --key=value flags become config overrides
    subs.push_back(Sub{c, task, validate_only});
  };
  add("design", "locally D-optimal approximate design", "design", false);
  add("ew-design", "EW D-optimal approximate design", "ew-design", false);
  add("round", "approximate-to-exact design rounding", "round", false);
  add("efficiency", "relative efficiency of two designs", "efficiency", false);
  add("info", "information matrix at one design point", "info", false);
  add("validate", "static config validation", "", true);

  CLI11_PARSE(app, argc, argv);

  for (const Sub& s : subs) {
    if (!s.cmd->parsed()) continue;
    std::vector<std::string> overrides;
    for (std::string extra : s.cmd->remaining()) {
      if (extra.rfind("--", 0) != 0 || extra.find('=') == std::string::npos) {
        std::cerr << "error: unrecognized argument '" << extra
                  << "' (overrides look like --key=value)\n";
        return 2;
      }
      overrides.push_back(extra.substr(2));
    }
    if (seed) overrides.push_back("seed=" + std::to_string(*seed));
    return run_task(s.task, config_path, output_path, overrides, s.validate_only);
  }
  return 2;
}
