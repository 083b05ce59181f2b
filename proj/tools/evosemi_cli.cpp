#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evosemi/cli/pipelines.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPipeline = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evosemi scenario runner"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "run the pipelines of a scenario file");
  std::string scenario_file;
  std::string out_dir = ".";
  std::vector<std::string> tols;
  std::uint64_t seed = 0;
  run->add_option("scenario-file", scenario_file, "scenario (JSON)")->required();
  run->add_option("--out", out_dir, "directory for reports and tables");
  run->add_option("--tol", tols, "tolerance override NAME=VALUE")->take_all();
  auto* seed_opt = run->add_option("--seed", seed, "random seed for sampled grids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  using namespace evosemi;
  try {
    auto sc = cli::load_scenario_file(scenario_file);
    for (const auto& kv : tols) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::ConfigError, "--tol " + kv + ": expected NAME=VALUE");
      const std::string key = kv.substr(0, eq);
      if (!sc.tolerances.count(key)) throw Error(ErrorKind::ConfigError, "--tol " + key + ": unknown tolerance");
      double v = 0.0;
      try {
        v = std::stod(kv.substr(eq + 1));
      } catch (const std::exception&) {
        throw Error(ErrorKind::ConfigError, "--tol " + kv + ": not a number");
      }
      if (!(v > 0.0)) throw Error(ErrorKind::ConfigError, "--tol " + key + ": must be positive");
      sc.tolerances[key] = v;
    }
    if (*seed_opt) sc.seed = seed;

    const auto outcome = cli::run_scenario(sc, {out_dir, true});
    for (const auto& r : outcome.results) {
      std::printf("%-26s %s  %s\n", r.name.c_str(), r.passed ? "pass" : "FAIL", r.summary.c_str());
    }
    if (!outcome.all_passed()) {
      for (const auto& r : outcome.results) {
        if (!r.passed) std::fprintf(stderr, "PipelineFailure: %s: %s\n", r.name.c_str(), r.summary.c_str());
      }
      return kExitPipeline;
    }
    return kExitOk;
  } catch (const Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return e.kind() == ErrorKind::ConfigError ? kExitConfig : kExitOther;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  }
}
