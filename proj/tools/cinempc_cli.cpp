// cinempc: run, validate and inspect declarative filming scenarios.
//
//   cinempc run <scenario.json> --out <dir> [--seed S] [--dt D] [--horizon N] [--plots] [--quiet]
//   cinempc validate <scenario.json>
//   cinempc dump-defaults
//
// Exit status: 0 success, 1 usage or schema error, 2 numeric failure.

#include "cinempc/scenario.hpp"
#include "cinempc/trace.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

struct RunArgs {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<int> horizon;
  bool plots = false;
  bool quiet = false;
};

int run_command(const RunArgs& args) {
  cinempc::Scenario sc = cinempc::load_scenario(args.scenario);
  if (args.seed) sc.seed = *args.seed;
  if (args.dt) {
    if (!(*args.dt > 0)) throw CLI::ValidationError("--dt", "must be positive");
    sc.dt = *args.dt;
  }
  if (args.horizon) {
    if (*args.horizon < 1) throw CLI::ValidationError("--horizon", "must be at least 1");
    sc.solver.horizon = *args.horizon;
  }

  const std::filesystem::path out = args.out;
  std::filesystem::create_directories(out);
  {
    std::ofstream f(out / "scenario.json", std::ios::binary);
    f << cinempc::dump_scenario(sc);
  }

  std::size_t ticks = 0;
  const auto total = static_cast<std::size_t>(sc.duration / sc.dt) + 1;
  cinempc::RunObserver progress;
  if (!args.quiet) {
    progress = [&](const cinempc::TraceRecord& r) {
      if (++ticks % 50 == 0 || ticks == total) {
        std::fprintf(stderr, "t=%7.2f s  seq %d  cost %.4g  iters %d\n", r.time, r.sequence + 1, r.cost.total,
                     r.iterations);
      }
    };
  }
  const cinempc::RunResult res = cinempc::run(sc, progress);
  cinempc::write_trace(res.trace, out / "trace.csv");

  if (args.plots && !res.trace.records.empty()) {
    std::vector<double> starts;
    for (const auto& s : sc.sequences) starts.push_back(s.start);
    cinempc::render_plots(res.trace, starts, out);
  }

  if (res.status == cinempc::RunStatus::kNumericFailure) {
    std::cerr << "numeric failure: " << res.message << " (partial trace of " << res.trace.records.size()
              << " records written)\n";
    return kExitNumeric;
  }
  if (!args.quiet) {
    std::cerr << "wrote " << res.trace.records.size() << " records to " << (out / "trace.csv").string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cinematographic MPC for a filming drone"};
  app.require_subcommand(1);

  RunArgs args;
  auto* run = app.add_subcommand("run", "Run a scenario in closed loop and write trace.csv");
  run->add_option("scenario", args.scenario, "Scenario JSON file")->required();
  run->add_option("--out", args.out, "Output directory")->required();
  run->add_option("--seed", args.seed, "Override the measurement noise seed");
  run->add_option("--dt", args.dt, "Override the control period [s]");
  run->add_option("--horizon", args.horizon, "Override the prediction horizon N");
  run->add_flag("--plots", args.plots, "Also write cost.svg, dof.svg and intrinsics.svg");
  run->add_flag("--quiet", args.quiet, "Suppress progress output");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a scenario and print its normalized form");
  validate->add_option("scenario", validate_path, "Scenario JSON file")->required();

  auto* defaults = app.add_subcommand("dump-defaults", "Print every default value as a scenario document");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return run_command(args);
    if (*validate) {
      std::cout << cinempc::dump_scenario(cinempc::load_scenario(validate_path));
      return 0;
    }
    if (*defaults) {
      std::cout << cinempc::dump_defaults();
      return 0;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.get_name() << " " << e.what() << "\n";
    return kExitUsage;
  } catch (const cinempc::ScenarioError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
