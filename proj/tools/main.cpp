// SPDX-License-Identifier: Apache-2.0
//
// dualrot CLI: seeded Monte Carlo experiments for the IRS-assisted uplink
// with steerable boresights and panel orientation.
//
//   dualrot converge  --trials 50 --out converge.csv
//   dualrot sweep     --axis power --trials 20 --out power.csv
//   dualrot decompose --out decompose.csv
//   dualrot props     --samples 200
//
// Results go to the CSV named by --out (plus a sibling *_trace.csv); per-cell
// summaries print to stdout. Exit code 0 on success, 2 on configuration
// errors, 3 on I/O errors.

#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dualrot/csv.hpp"
#include "dualrot/experiment.hpp"

namespace {

using namespace dualrot;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_path;
  std::string scheme = "all";
  std::uint64_t seed = 0;
  int trials = 0;
  int threads = 0;
  bool seed_set = false;
  bool trials_set = false;
};

void add_common(CLI::App* cmd, CommonOptions& options) {
  cmd->add_option("--config", options.config_path, "Config file (key = value lines)");
  cmd->add_option("--set", options.overrides, "Config override key=value (repeatable)");
  cmd->add_option("--out", options.out_path, "Results CSV path");
  cmd->add_option("--scheme", options.scheme, "Scheme: dual|bs|irs|fixed|all");
  cmd->add_option("--seed", options.seed, "Base seed")->each([&](const std::string&) {
    options.seed_set = true;
  });
  cmd->add_option("--trials", options.trials, "Monte Carlo trials per cell")
      ->each([&](const std::string&) { options.trials_set = true; });
  cmd->add_option("--threads", options.threads, "Worker threads (default: hardware)");
}

ScenarioConfig resolve_config(const CommonOptions& options) {
  ScenarioConfig config = load_config(options.config_path);
  for (const std::string& entry : options.overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw ConfigError("set", "override '" + entry + "' is not key=value");
    apply_config_override(config, entry.substr(0, eq), entry.substr(eq + 1));
  }
  if (options.seed_set) config.seed = options.seed;
  if (options.trials_set) config.trials = options.trials;
  config.validate();
  return config;
}

std::vector<Scheme> resolve_schemes(const std::string& name) {
  if (name == "all")
    return {Scheme::Dual, Scheme::BsOnly, Scheme::IrsOnly, Scheme::Fixed};
  return {scheme_from_string(name)};
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hardware = std::thread::hardware_concurrency();
  return hardware > 0 ? static_cast<int>(hardware) : 1;
}

void print_summaries(const std::vector<ExperimentResult>& rows) {
  double total_time = 0.0;
  for (const ExperimentResult& row : rows) total_time += row.wall_time_s;
  std::printf("%zu runs, %.1f s solver time\n", rows.size(), total_time);
  std::printf("%-8s %-10s %12s %6s %12s %12s\n", "scheme", "axis", "value", "n", "mean",
              "stderr");
  for (const CellSummary& cell : summarize(rows))
    std::printf("%-8s %-10s %12.5g %6d %12.6f %12.6f\n", cell.scheme.c_str(),
                cell.axis.empty() ? "-" : cell.axis.c_str(), cell.value, cell.count, cell.mean,
                cell.std_error);
}

void maybe_emit(const std::vector<ExperimentResult>& rows, const std::string& path) {
  if (path.empty()) return;
  emit_csv(rows, path);
  std::printf("wrote %s and %s\n", path.c_str(), trace_path(path).c_str());
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRS-assisted uplink simulator with steerable boresights and panel orientation"};
  app.require_subcommand(1);

  CommonOptions converge_opts, sweep_opts, decompose_opts, props_opts;

  CLI::App* converge = app.add_subcommand("converge", "AO convergence runs at the default point");
  add_common(converge, converge_opts);

  CLI::App* sweep = app.add_subcommand("sweep", "Sum-rate sweep along one axis");
  add_common(sweep, sweep_opts);
  std::string axis_name = "power";
  std::vector<double> sweep_values;
  sweep->add_option("--axis", axis_name, "power|antennas|users|xi")->required();
  sweep->add_option("--values", sweep_values, "Swept values (default: built-in grid)");

  CLI::App* decompose =
      app.add_subcommand("decompose", "Reflected-power decomposition versus aperture ratio");
  add_common(decompose, decompose_opts);
  DecomposeOptions decompose_options;
  decompose->add_option("--ratios", decompose_options.ratios,
                        "Aperture ratios (default: 0.0707 .. 0.707)");
  decompose->add_option("--user-azimuth", decompose_options.user_azimuth_deg,
                        "Decompose user azimuth in degrees");
  decompose->add_option("--user-distance", decompose_options.user_distance,
                        "Decompose user distance in meters");

  CLI::App* props = app.add_subcommand("props", "Proposition checks (separability, bounds)");
  add_common(props, props_opts);
  int prop1_pairs = 100, prop2_geometries = 20, prop2_phases = 200, prop3_samples = 200;
  props->add_option("--pairs", prop1_pairs, "Rotation pairs for the separability check");
  props->add_option("--geometries", prop2_geometries, "Random geometries for the power bounds");
  props->add_option("--phases", prop2_phases, "Random phase vectors per geometry");
  props->add_option("--samples", prop3_samples, "Orientation samples for the alignment bounds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (converge->parsed()) {
      const ScenarioConfig config = resolve_config(converge_opts);
      const auto rows = run_convergence(config, resolve_schemes(converge_opts.scheme),
                                        resolve_threads(converge_opts.threads));
      print_summaries(rows);
      maybe_emit(rows, converge_opts.out_path);
    } else if (sweep->parsed()) {
      const ScenarioConfig config = resolve_config(sweep_opts);
      const SweepAxis axis = axis_from_string(axis_name);
      const auto values = sweep_values.empty() ? default_axis_values(axis) : sweep_values;
      const auto rows = run_sweep(config, axis, values, resolve_schemes(sweep_opts.scheme),
                                  resolve_threads(sweep_opts.threads));
      print_summaries(rows);
      maybe_emit(rows, sweep_opts.out_path);
    } else if (decompose->parsed()) {
      const ScenarioConfig config = resolve_config(decompose_opts);
      const auto rows = run_decompose(config, decompose_options);
      std::printf("%10s %12s %12s %12s %12s %12s\n", "xi", "G_p", "G_beta", "eta_dual",
                  "beta_fix", "beta_dual");
      for (const ExperimentResult& row : rows)
        std::printf("%10.4f %12.4f %12.4f %12.4f %12.4f %12.4f%s\n", row.value, row.power_gain,
                    row.efficiency_gain, row.dual_gain, row.beta_fixed, row.beta_dual,
                    row.decompose_valid ? "" : "  (baseline power zero)");
      maybe_emit(rows, decompose_opts.out_path);
    } else if (props->parsed()) {
      const ScenarioConfig config = resolve_config(props_opts);
      const PropsReport report = run_props(config, prop1_pairs, prop2_geometries, prop2_phases,
                                           prop3_samples, config.seed);
      std::printf("[%s] separability: max residual %.3e over %d pairs, |beta_FF - 1| <= %.3e\n",
                  report.prop1_pass ? "PASS" : "FAIL", report.max_ff_residual,
                  report.prop1_pairs, report.max_ff_efficiency_error);
      std::printf("[%s] power bounds: %d geometries, %d upper / %d lower violations\n",
                  report.prop2_pass ? "PASS" : "FAIL", report.prop2_geometries,
                  report.prop2_upper_violations, report.prop2_lower_violations);
      std::printf(
          "[%s] alignment: %d samples, worst margins %.3e / %.3e, delta/xi in [%.4f, %.4f]\n",
          report.prop3_pass ? "PASS" : "FAIL", report.prop3.samples,
          report.prop3.worst_mean_margin, report.prop3.worst_variation_margin,
          report.prop3.min_delta_over_xi, report.prop3.max_delta_over_xi);
      if (!report.prop1_pass || !report.prop2_pass || !report.prop3_pass) return 1;
    }
  } catch (const ConfigError& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return 2;
  } catch (const std::exception& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return 3;
  }
  return 0;
}
