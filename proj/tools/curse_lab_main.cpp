#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "curselab/common.hpp"
#include "curselab/envgen.hpp"
#include "curselab/expt.hpp"
#include "curselab/rng.hpp"
#include "curselab/tabular.hpp"
#include "curselab/theory.hpp"

namespace {

using namespace curselab;

expt::RunConfig preset_config(const std::string& preset) {
  if (preset == "desk") return expt::desk_preset();
  if (preset == "full") return expt::full_preset();
  fail("unknown preset '" + preset + "' (expected desk or full)");
}

int cmd_envgen(const std::string& config_path, const std::string& preset,
               std::uint64_t seed, int n, bool free_only,
               const std::string& out_path) {
  expt::RunConfig config = preset_config(preset);
  if (!config_path.empty())
    config = expt::load_run_config(config_path, config);
  config.master_seed = seed;

  envgen::EnvironmentConfig env = config.env.resolved();
  env.validate();
  std::uint64_t env_seed = rng::derive_seed(seed, "env", 0);
  envgen::CausalModel world = envgen::build_causal_model(env, env_seed);

  // The sample seed matches the run protocol: an unrestricted draw is the
  // run's training stream, a free-only draw is its replication-0 test
  // stream. A run and an envgen call with the same master seed therefore
  // see identical data.
  envgen::Restriction restriction =
      free_only ? envgen::Restriction::free_only : envgen::Restriction::any;
  std::uint64_t sample_seed = free_only ? rng::derive_seed(seed, "test", 0)
                                        : rng::derive_seed(seed, "train", 0);
  envgen::HistoricalSample sample =
      envgen::sample_history(world, env, n, sample_seed, restriction);
  tabular::write_csv(sample.dataset, out_path);

  std::ofstream sidecar(out_path + ".env.txt");
  if (!sidecar) fail("cannot open " + out_path + ".env.txt");
  sidecar << "environment digest: "
          << envgen::environment_digest(env, env_seed) << "\n";
  sidecar << "master seed: " << seed << "\n";
  sidecar << "sample seed: " << sample_seed << "\n";
  sidecar << "records: " << n
          << (free_only ? " (case restriction forced to free)" : "") << "\n";
  for (int t = 0; t < world.num_locations(); ++t)
    sidecar << "location " << t << " effect "
            << format_double(world.f_location(t)) << "\n";
  sidecar << env.describe();
  if (!sidecar) fail("write failed for " + out_path + ".env.txt");

  std::cout << "wrote " << n << " records to " << out_path << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& preset,
            bool seed_set, std::uint64_t seed, const std::string& out_dir,
            int threads, bool refit_per_rep) {
  expt::RunConfig config = preset_config(preset);
  if (!config_path.empty())
    config = expt::load_run_config(config_path, config);
  if (seed_set) config.master_seed = seed;
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (threads > 0) config.threads = threads;
  if (refit_per_rep) config.refit_per_rep = true;

  expt::RunResult result = expt::run_protocol(config);
  expt::write_outputs(result, config);

  for (const auto& err : result.errors) std::cerr << "error: " << err << "\n";
  std::cout << "run complete: " << result.rows.size() << " estimate rows, "
            << result.errors.size() << " replication errors, "
            << format_double(result.wall_seconds) << " s\n";
  std::cout << "outputs in " << config.out_dir << "\n";
  return 0;
}

int cmd_theory(std::uint64_t seed, int threads, const std::string& out_dir) {
  theory::TheoryReport report = theory::run_all(seed, threads);
  std::filesystem::create_directories(out_dir);
  theory::write_report_csv(report, out_dir + "/theory_report.csv");
  for (const auto& check : report.checks)
    std::cout << (check.pass ? "PASS " : "FAIL ") << check.name
              << " (computed " << format_double(check.computed) << ", target "
              << format_double(check.target) << ", tolerance "
              << format_double(check.tolerance) << ")\n";
  if (!report.all_pass()) {
    std::cerr << "theory verification failed\n";
    return 1;
  }
  std::cout << "all " << report.checks.size() << " checks passed\n";
  return 0;
}

int cmd_report(const std::string& estimates, const std::string& out_dir,
               int bins) {
  expt::rebuild_reports(estimates, out_dir, bins);
  std::cout << "rebuilt histograms.csv and summary.csv in " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seeded simulation laboratory for policy-evaluation bias"};
  app.require_subcommand(1);

  std::string config_path, preset = "desk", out_dir, out_path, estimates;
  std::uint64_t seed = 1;
  int n = 1000, threads = 0, bins = 20;
  bool free_only = false, refit_per_rep = false;

  CLI::App* sc_envgen =
      app.add_subcommand("envgen", "Sample a historical dataset to CSV");
  sc_envgen->add_option("--config", config_path, "Run config file");
  sc_envgen->add_option("--preset", preset, "Base preset: desk or full");
  sc_envgen->add_option("--seed", seed, "Master seed");
  sc_envgen->add_option("--n", n, "Number of records");
  sc_envgen->add_flag("--free-only", free_only,
                      "Force case restriction to free (test-set sampling)");
  sc_envgen->add_option("--out", out_path, "Output CSV path")->required();

  CLI::App* sc_run =
      app.add_subcommand("run", "Execute the full estimate-then-optimize run");
  sc_run->add_option("--config", config_path, "Run config file");
  sc_run->add_option("--preset", preset, "Base preset: desk or full");
  bool seed_set = false;
  sc_run->add_option("--seed", seed, "Master seed")
      ->each([&seed_set](const std::string&) { seed_set = true; });
  sc_run->add_option("--out-dir", out_dir, "Output directory");
  sc_run->add_option("--threads", threads, "Worker threads");
  sc_run->add_flag("--refit-per-rep", refit_per_rep,
                   "Redraw training data and refit for every replication");

  CLI::App* sc_theory =
      app.add_subcommand("theory", "Run the closed-form verification suite");
  sc_theory->add_option("--seed", seed, "Master seed");
  sc_theory->add_option("--threads", threads, "Worker threads");
  sc_theory->add_option("--out-dir", out_dir, "Report directory");

  CLI::App* sc_report = app.add_subcommand(
      "report", "Rebuild histograms and summaries from estimates.csv");
  sc_report->add_option("--estimates", estimates, "estimates.csv path")
      ->required();
  sc_report->add_option("--out-dir", out_dir, "Output directory");
  sc_report->add_option("--bins", bins, "Histogram bins");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sc_envgen)
      return cmd_envgen(config_path, preset, seed, n, free_only, out_path);
    if (*sc_run)
      return cmd_run(config_path, preset, seed_set, seed, out_dir,
                     threads > 0 ? threads : 0, refit_per_rep);
    if (*sc_theory)
      return cmd_theory(seed, threads > 0 ? threads : 1,
                        out_dir.empty() ? "." : out_dir);
    if (*sc_report)
      return cmd_report(estimates, out_dir.empty() ? "." : out_dir, bins);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
