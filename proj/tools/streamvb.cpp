// streamvb command-line front end: simulate, fit, diagnose, summarize.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <streamvb/io/run.hpp>

namespace io = streamvb::io;
namespace sim = streamvb::sim;

namespace {

struct RunFlags {
  std::string config;
  std::string scenario;
  std::string input = "-";
  std::string out;
  std::optional<std::int64_t> warmup, validate, cadence;
  std::optional<double> threshold;
  bool force = false;
  bool densities = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "Run configuration file");
  cmd->add_option("--scenario", f.scenario, "Use the built-in configuration for a simulation scenario");
  cmd->add_option("--input", f.input, "Input CSV path, or - for standard input");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--warmup", f.warmup, "Warm-up size n_warm");
  cmd->add_option("--validate", f.validate, "Validation size n_valid");
  cmd->add_option("--threshold", f.threshold, "Divergence-score acceptance threshold");
}

sim::Scenario scenario_or_throw(const std::string& name) {
  auto s = sim::parse_scenario(name);
  if (!s) throw io::ConfigError("unknown scenario '" + name + "'");
  return *s;
}

io::RunConfig resolve_config(const RunFlags& f) {
  io::RunConfig cfg;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw io::ConfigError("cannot open config " + f.config);
    std::stringstream text;
    text << in.rdbuf();
    cfg = io::parse_config(text.str());
  } else if (!f.scenario.empty()) {
    cfg = io::default_config(scenario_or_throw(f.scenario));
  } else {
    throw io::ConfigError("either --config or --scenario is required");
  }
  if (f.warmup) cfg.n_warm = *f.warmup;
  if (f.validate) cfg.n_valid = *f.validate;
  if (f.threshold) cfg.threshold = *f.threshold;
  if (f.cadence) cfg.cadence = *f.cadence;
  if (f.densities) cfg.densities = true;
  if (!f.out.empty()) cfg.output_dir = f.out;
  cfg.validate();
  return cfg;
}

int run_command(const RunFlags& f, io::RunMode mode) {
  const auto cfg = resolve_config(f);
  io::RunOptions opts;
  opts.mode = mode;
  opts.force = f.force;
  io::RunOutcome outcome;
  if (f.input == "-") {
    outcome = io::run(cfg, std::cin, opts, std::cout, std::cerr);
  } else {
    std::ifstream in(f.input);
    if (!in) throw io::DataError("cannot open input " + f.input);
    outcome = io::run(cfg, in, opts, std::cout, std::cerr);
  }
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming variational Bayes for semiparametric regression"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "Write a simulated scenario as CSV");
  std::string sim_scenario, sim_out;
  std::uint64_t sim_seed = 1;
  std::int64_t sim_n = 3000;
  simulate->add_option("--scenario", sim_scenario, "Scenario name")
      ->required()
      ->check(CLI::IsMember({"gaussian_additive", "logistic_additive", "binary_1d", "random_intercept", "sparse_signal"}));
  simulate->add_option("--n", sim_n, "Number of records")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_seed, "Random seed");
  simulate->add_option("--out", sim_out, "Output file (default: standard output)");

  RunFlags fit_flags, diag_flags;
  auto* fit = app.add_subcommand("fit", "Warm up, validate and stream a model fit");
  add_run_flags(fit, fit_flags);
  fit->add_option("--cadence", fit_flags.cadence, "Records between summary refreshes");
  fit->add_flag("--densities", fit_flags.densities, "Also write density_<param>.csv grids");
  fit->add_flag("--force", fit_flags.force, "Keep streaming when the warm-up is not validated");

  auto* diagnose = app.add_subcommand("diagnose", "Run the warm-up protocol and print the recommendation");
  add_run_flags(diagnose, diag_flags);

  auto* summarize = app.add_subcommand("summarize", "Re-render summaries from a state snapshot");
  std::string snap_in, snap_out = ".";
  summarize->add_option("--input", snap_in, "State snapshot (state.bin)")->required();
  summarize->add_option("--out", snap_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return io::kExitFatal;
  }

  try {
    if (*simulate) {
      sim::SimConfig sc;
      sc.scenario = scenario_or_throw(sim_scenario);
      sc.seed = sim_seed;
      sc.n = sim_n;
      const sim::Generator gen(sc);
      if (sim_out.empty()) {
        io::write_simulation_csv(std::cout, gen);
      } else {
        std::ofstream os(sim_out);
        if (!os) throw io::DataError("cannot open " + sim_out);
        io::write_simulation_csv(os, gen);
      }
      return io::kExitOk;
    }
    if (*fit) return run_command(fit_flags, io::RunMode::fit);
    if (*diagnose) return run_command(diag_flags, io::RunMode::diagnose);
    if (*summarize) {
      io::summarize_snapshot(snap_in, snap_out);
      return io::kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return io::kExitFatal;
  }
  return io::kExitFatal;
}
