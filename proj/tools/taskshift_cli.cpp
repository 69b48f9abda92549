// Command-line front end: spectrum reports, sweeps, the identity suite and
// design dumps.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "taskshift/check.hpp"
#include "taskshift/config.hpp"
#include "taskshift/covariance.hpp"
#include "taskshift/error.hpp"
#include "taskshift/gnuplot.hpp"
#include "taskshift/harness.hpp"
#include "taskshift/presets.hpp"
#include "taskshift/synth.hpp"

using namespace taskshift;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
  }
}

bool is_preset(const std::string& name) {
  for (const auto& p : preset_names()) {
    if (p == name) return true;
  }
  return false;
}

Provenance ensemble_from(const std::string& spec) {
  if (is_preset(spec)) return preset(spec).ensemble;
  const json j = read_json_file(spec);
  return j.contains("ensemble") ? provenance_from_json(j.at("ensemble")) : provenance_from_json(j);
}

json optional_json(std::optional<std::size_t> v) { return v ? json(*v) : json(nullptr); }

int cmd_ensemble(const std::string& spec_arg, std::size_t n, double b, std::size_t cap) {
  const auto spec = build_ensemble(ensemble_from(spec_arg), n, EnsembleOptions{cap});
  const auto ranks = effective_ranks(spec, 0, n, b);
  const auto lam = spec.lambdas();
  json out = {
      {"ensemble", provenance_to_json(spec.provenance())},
      {"n", n},
      {"d", spec.dim()},
      {"lambda_max", lam.front()},
      {"lambda_min", lam.back()},
      {"trace", spec.trace()},
      {"r0", ranks.r_k},
      {"R0", ranks.R_k},
      {"b", b},
      {"k_star", optional_json(ranks.k_star)},
      {"k_star_construction", optional_json(construction_k_star(spec))},
      {"spike_length", optional_json(spec.spike_length())},
      {"warnings", spec.warnings()},
  };
  std::cout << out.dump(2) << '\n';
  return 0;
}

struct RunArgs {
  std::string config;
  std::string preset_name;
  std::size_t max_n = 1600;
  std::optional<std::size_t> draws;
  std::optional<std::uint64_t> base_seed;
  std::size_t jobs = 0;
  std::string out_root = "out";
  std::string out_dir;
  bool gnuplot = false;
  bool no_timing = false;
  bool quiet = false;
};

ExperimentConfig load_config(const RunArgs& a) {
  ExperimentConfig cfg = a.preset_name.empty() ? config_from_json(read_json_file(a.config))
                                               : preset(a.preset_name, a.max_n);
  if (a.draws) cfg.draws = *a.draws;
  if (a.base_seed) cfg.base_seed = *a.base_seed;
  validate(cfg);
  return cfg;
}

int cmd_run(const RunArgs& a) {
  const ExperimentConfig cfg = load_config(a);
  RunOptions opts;
  opts.jobs = a.jobs;
  opts.record_wall_time = !a.no_timing;
  opts.log = a.quiet ? nullptr : &std::cerr;

  const auto result = run_sweep(cfg, opts);
  const std::filesystem::path dir =
      a.out_dir.empty() ? default_output_dir(a.out_root, cfg.name) : std::filesystem::path(a.out_dir);
  write_outputs(dir, cfg, result);
  if (a.gnuplot) write_gnuplot_scripts(dir, cfg, result.schema);

  std::cout << dir.string() << '\n';
  for (const auto& w : result.meta["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
  if (result.failed_cells > 0) {
    std::cerr << result.failed_cells << " of " << result.meta["cells"].get<std::size_t>()
              << " cells failed; see the error column of rows.csv\n";
    return 1;
  }
  return 0;
}

int cmd_check(std::uint64_t seed) {
  CheckOptions opts;
  opts.base_seed = seed;
  const auto results = run_checks(opts);
  print_checks(std::cout, results);
  for (const auto& r : results) {
    if (!r.passed) return 1;
  }
  return 0;
}

int cmd_dump(const RunArgs& a, std::size_t n, std::size_t draw, const std::string& path) {
  const ExperimentConfig cfg = load_config(a);
  const auto spec = build_ensemble(cfg.ensemble, n, EnsembleOptions{cfg.dimension_cap});
  const SeedRecord seed = cell_seed(cfg, n, draw);
  Rng signal_rng(substream(seed, StreamPurpose::Signal));
  const auto sig = build_signal(cfg.signal, spec, signal_rng);
  const auto ds = sample_dataset(spec, sig, n, seed, cfg.label_noise);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path);
  write_design(out, ds.X);
  return 0;
}

void add_config_source(CLI::App* sub, RunArgs& a) {
  auto* cfg = sub->add_option("--config", a.config, "experiment config JSON");
  auto* pre = sub->add_option("--preset", a.preset_name, "named preset")
                  ->check(CLI::IsMember(preset_names()));
  cfg->excludes(pre);
  sub->add_option("--max-n", a.max_n, "largest n of a preset grid")->check(CLI::PositiveNumber);
  sub->add_option("--draws", a.draws, "override the number of draws");
  sub->add_option("--base-seed", a.base_seed, "override the base seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-shift simulations for minimum-norm interpolators"};
  app.require_subcommand(1);

  std::string spec_arg;
  std::size_t ens_n = 0;
  double ens_b = 2.0;
  std::size_t ens_cap = 200000;
  auto* ens = app.add_subcommand("ensemble", "print the spectrum report for one n");
  ens->add_option("--spec", spec_arg, "preset name, config JSON or ensemble JSON")->required();
  ens->add_option("--n", ens_n, "sample size")->required()->check(CLI::PositiveNumber);
  ens->add_option("--b", ens_b, "k* constant");
  ens->add_option("--dimension-cap", ens_cap, "largest allowed d");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "run a sweep and write rows.csv, agg.csv, config.json, meta.json");
  add_config_source(run, run_args);
  run->add_option("--jobs", run_args.jobs, "worker threads (default: logical cores)");
  run->add_option("--out", run_args.out_root, "output root; results go to <out>/<name>/<timestamp>");
  run->add_option("--out-dir", run_args.out_dir, "exact output directory");
  run->add_flag("--emit-gnuplot", run_args.gnuplot, "write gnuplot scripts next to agg.csv");
  run->add_flag("--no-timing", run_args.no_timing, "write zero wall_seconds for reproducible files");
  run->add_flag("--quiet", run_args.quiet, "no per-cell log lines");

  std::uint64_t check_seed = 7;
  auto* check = app.add_subcommand("check", "run the identity and oracle suite");
  check->add_option("--seed", check_seed, "base seed");

  RunArgs dump_args;
  std::size_t dump_n = 0;
  std::size_t dump_draw = 0;
  std::string dump_path;
  auto* dump = app.add_subcommand("dump-design", "write one training design as MNIX0001 binary");
  add_config_source(dump, dump_args);
  dump->add_option("--n", dump_n, "sample size")->required()->check(CLI::PositiveNumber);
  dump->add_option("--draw", dump_draw, "draw index");
  dump->add_option("--output", dump_path, "output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ens) return cmd_ensemble(spec_arg, ens_n, ens_b, ens_cap);
    if (*run) {
      if (run_args.config.empty() && run_args.preset_name.empty()) {
        throw Error(ErrorCode::InvalidConfig, "run needs --config or --preset");
      }
      return cmd_run(run_args);
    }
    if (*check) return cmd_check(check_seed);
    if (*dump) {
      if (dump_args.config.empty() && dump_args.preset_name.empty()) {
        throw Error(ErrorCode::InvalidConfig, "dump-design needs --config or --preset");
      }
      return cmd_dump(dump_args, dump_n, dump_draw, dump_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
