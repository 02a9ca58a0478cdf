// blink: sizes sample runs, fits size/memory models from their logs, and
// recommends the smallest cluster that runs the workload without cache
// eviction. A built-in cluster simulator provides ground truth and cost
// curves. Machine-readable output goes to stdout, diagnostics to stderr.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "blink/errors.hpp"
#include "blink/fit.hpp"
#include "blink/log_model.hpp"
#include "blink/predictor.hpp"
#include "blink/sampler.hpp"
#include "blink/selector.hpp"
#include "blink/simulator.hpp"
#include "blink/units.hpp"
#include "blink/workload.hpp"
#include "blink/workloadgen.hpp"

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("BLINK_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) values.push_back(std::stod(item));
  }
  return values;
}

blink::simulator::Placement parse_placement(const std::string& name) {
  if (name == "balanced") return blink::simulator::Placement::balanced;
  if (name == "skewed") return blink::simulator::Placement::skewed;
  throw blink::Error(blink::Errc::invalid_config,
                     "placement must be 'balanced' or 'skewed', got '" + name + "'");
}

void write_or_print(const std::optional<std::string>& path, const std::string& content) {
  if (path) {
    std::ofstream out(*path);
    if (!out) {
      throw blink::Error(blink::Errc::invalid_config, "cannot write to " + *path);
    }
    out << content;
  } else {
    std::cout << content;
  }
}

struct FitOptions {
  std::vector<std::string> log_paths;
  std::string log_dir;
  std::optional<std::string> out;
  double threshold = blink::sampler::kAdaptiveErrorThreshold;
};

int run_fit(const FitOptions& opt) {
  std::vector<std::string> paths = opt.log_paths;
  if (!opt.log_dir.empty()) {
    for (const auto& entry : std::filesystem::directory_iterator(opt.log_dir)) {
      if (entry.is_regular_file()) paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
  }
  if (paths.empty()) {
    throw blink::Error(blink::Errc::degenerate_input, "no log files given");
  }

  std::vector<blink::logmodel::SampleRunLog> logs;
  std::uint64_t unknown_events = 0;
  for (const std::string& path : paths) {
    blink::logmodel::ParseStats stats;
    logs.push_back(blink::logmodel::parse_log_file(path, &stats));
    unknown_events += stats.unknown_events;
  }
  if (unknown_events > 0) {
    std::cerr << "warning: skipped " << unknown_events << " unknown log events\n";
  }

  const auto file = blink::fit::fit_models_from_logs(logs);
  for (const auto& [id, model] : file.dataset_models) {
    std::cerr << "dataset " << id << ": intercept=" << model.intercept
              << " slope=" << model.slope << " loo_rmse=" << model.loo_rmse
              << " loo_relative_error=" << model.loo_relative_error << "\n";
  }
  if (file.execution_memory) {
    std::cerr << "execution_memory: intercept=" << file.execution_memory->intercept
              << " slope=" << file.execution_memory->slope
              << " loo_rmse=" << file.execution_memory->loo_rmse << "\n";
  }
  if (file.single_machine_shortcut) {
    std::cerr << "no cached datasets in the sample runs; a single machine is the "
                 "recommended cluster\n";
  }

  const double worst = blink::fit::worst_relative_error(file);
  if (worst > opt.threshold) {
    std::vector<double> scales(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) scales[i] = logs[i].data_scale;
    std::sort(scales.begin(), scales.end());
    const double step = scales.size() >= 2 ? scales[1] - scales[0] : 1.0;
    std::cerr << "hint: cross-validated relative error " << worst << " exceeds "
              << opt.threshold << "; consider an additional sample run at scale "
              << scales.back() + step << "\n";
  }

  write_or_print(opt.out, blink::predictor::model_file_to_json(file).dump(2) + "\n");
  return 0;
}

struct RecommendOptions {
  std::string model_path;
  std::string profile_path;
  double scale = blink::kFullScale;
  std::uint32_t max_machines = 0;
  std::string simulate_spec;
  std::string placement = "balanced";
  std::uint64_t seed = 0;
  std::optional<std::string> out;
};

int run_recommend(const RecommendOptions& opt) {
  const auto file = blink::predictor::load_model_file(opt.model_path);
  const auto profile = blink::selector::load_profile(opt.profile_path);
  if (!file.execution_memory) {
    throw blink::Error(blink::Errc::model_missing, "model file has no execution-memory model");
  }
  const auto rec = blink::selector::select_cluster_size(
      file.dataset_models, &*file.execution_memory, opt.scale, profile, opt.max_machines);

  nlohmann::json j = blink::selector::recommendation_to_json(rec);
  nlohmann::json accounting = {
      {"sample_runs_machine_seconds", file.sample_cost_machine_seconds},
      {"actual_run_machine_seconds", nullptr},
      {"blink_total_machine_seconds", file.sample_cost_machine_seconds}};
  if (!opt.simulate_spec.empty()) {
    auto spec = blink::workload::load_workload(opt.simulate_spec);
    spec.scale = opt.scale;
    const auto report = blink::simulator::run(spec, rec.machines, profile,
                                              parse_placement(opt.placement), opt.seed);
    accounting["actual_run_machine_seconds"] = report.total_cost;
    accounting["blink_total_machine_seconds"] =
        file.sample_cost_machine_seconds + report.total_cost;
    j["actual_run"] = blink::simulator::report_to_json(report);
  }
  j["cost_accounting"] = accounting;
  write_or_print(opt.out, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cluster-size recommendation from lightweight sample runs"};
  app.require_subcommand(1);

  // --- plan ---------------------------------------------------------------
  std::string plan_bytes, plan_block;
  std::string plan_scales = "0.001,0.002,0.003";
  auto* plan_cmd = app.add_subcommand("plan", "plan the sample runs for an input");
  plan_cmd->add_option("--bytes", plan_bytes, "total input size (accepts K/M/G/T)")->required();
  plan_cmd->add_option("--block", plan_block, "block size of the input")->required();
  plan_cmd->add_option("--scales", plan_scales, "sampling scales as fractions of the input");

  // --- fit ----------------------------------------------------------------
  FitOptions fit_opt;
  std::string fit_out;
  auto* fit_cmd = app.add_subcommand("fit", "fit size and memory models from sample-run logs");
  fit_cmd->add_option("--log", fit_opt.log_paths, "sample-run log file (repeatable)");
  fit_cmd->add_option("--log-dir", fit_opt.log_dir, "directory of sample-run logs");
  fit_cmd->add_option("--out", fit_out, "model file to write (default: stdout)");
  fit_cmd->add_option("--threshold", fit_opt.threshold,
                      "relative CV error above which more sample runs are suggested");

  // --- recommend ----------------------------------------------------------
  RecommendOptions rec_opt;
  rec_opt.seed = default_seed();
  std::string rec_out;
  auto* rec_cmd = app.add_subcommand("recommend", "select the minimal eviction-free cluster size");
  rec_cmd->add_option("--model", rec_opt.model_path, "fitted model file")->required();
  rec_cmd->add_option("--profile", rec_opt.profile_path, "machine profile file")->required();
  rec_cmd->add_option("--scale", rec_opt.scale, "target data scale (full input = 1000)");
  rec_cmd->add_option("--max-machines", rec_opt.max_machines, "cap on the recommendation");
  rec_cmd->add_option("--simulate-spec", rec_opt.simulate_spec,
                      "workload file; simulate the actual run for cost accounting");
  rec_cmd->add_option("--placement", rec_opt.placement, "balanced or skewed");
  rec_cmd->add_option("--seed", rec_opt.seed, "seed for skewed placement");
  rec_cmd->add_option("--out", rec_out, "output file (default: stdout)");

  // --- bounds -------------------------------------------------------------
  std::string bounds_model, bounds_profile;
  std::uint32_t bounds_machines = 1;
  double bounds_granularity = 10.0;  // 1% of the full scale
  auto* bounds_cmd =
      app.add_subcommand("bounds", "maximum eviction-free data scale of a fixed cluster");
  bounds_cmd->add_option("--model", bounds_model, "fitted model file")->required();
  bounds_cmd->add_option("--profile", bounds_profile, "machine profile file")->required();
  bounds_cmd->add_option("--machines", bounds_machines, "cluster size")->required();
  bounds_cmd->add_option("--granularity", bounds_granularity, "scale step (default 1% of full)");

  // --- simulate -----------------------------------------------------------
  std::string sim_spec, sim_profile, sim_placement = "balanced";
  std::uint32_t sim_machines = 1;
  std::uint64_t sim_seed = default_seed();
  auto* sim_cmd = app.add_subcommand("simulate", "run the cluster simulator once");
  sim_cmd->add_option("--spec", sim_spec, "workload file")->required();
  sim_cmd->add_option("--profile", sim_profile, "machine profile file")->required();
  sim_cmd->add_option("--machines", sim_machines, "cluster size")->required();
  sim_cmd->add_option("--placement", sim_placement, "balanced or skewed");
  sim_cmd->add_option("--seed", sim_seed, "seed for skewed placement");

  // --- sweep --------------------------------------------------------------
  std::string sweep_spec, sweep_profile, sweep_placement = "balanced";
  std::uint32_t sweep_from = 1, sweep_to = 12;
  std::uint64_t sweep_seed = default_seed();
  unsigned sweep_jobs = 1;
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "simulate a range of cluster sizes (CSV)");
  sweep_cmd->add_option("--spec", sweep_spec, "workload file")->required();
  sweep_cmd->add_option("--profile", sweep_profile, "machine profile file")->required();
  sweep_cmd->add_option("--from", sweep_from, "smallest cluster size");
  sweep_cmd->add_option("--to", sweep_to, "largest cluster size");
  sweep_cmd->add_option("--placement", sweep_placement, "balanced or skewed");
  sweep_cmd->add_option("--seed", sweep_seed, "seed for skewed placement");
  sweep_cmd->add_option("--jobs", sweep_jobs, "parallel simulations");
  sweep_cmd->add_option("--out", sweep_out, "output file (default: stdout)");

  // --- gen ----------------------------------------------------------------
  blink::workloadgen::GenConfig gen_config;
  gen_config.seed = default_seed();
  std::string gen_out, gen_logs_dir;
  std::string gen_scales = "1,2,3";
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic workload (and sample logs)");
  gen_cmd->add_option("--seed", gen_config.seed, "generator seed");
  gen_cmd->add_option("--datasets", gen_config.n_datasets, "number of datasets");
  gen_cmd->add_option("--cached", gen_config.cached_count, "number of cached datasets");
  gen_cmd->add_option("--partitions-min", gen_config.partitions_min, "partition range low");
  gen_cmd->add_option("--partitions-max", gen_config.partitions_max, "partition range high");
  gen_cmd->add_option("--iterations", gen_config.iterations, "replay actions");
  gen_cmd->add_option("--noise", gen_config.noise_relative, "relative log noise in [0, 0.5]");
  gen_cmd->add_option("--out", gen_out, "workload file to write (default: stdout)");
  gen_cmd->add_option("--emit-logs", gen_logs_dir, "also write sample-run logs here");
  gen_cmd->add_option("--scales", gen_scales, "sample scales for emitted logs (full = 1000)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 2;
  }

  try {
    if (plan_cmd->parsed()) {
      const auto plan = blink::sampler::plan_samples(blink::parse_bytes(plan_bytes),
                                                     blink::parse_bytes(plan_block),
                                                     parse_double_list(plan_scales));
      std::cout << blink::sampler::plan_to_json(plan).dump(2) << "\n";
      return 0;
    }
    if (fit_cmd->parsed()) {
      if (!fit_out.empty()) fit_opt.out = fit_out;
      return run_fit(fit_opt);
    }
    if (rec_cmd->parsed()) {
      if (!rec_out.empty()) rec_opt.out = rec_out;
      return run_recommend(rec_opt);
    }
    if (bounds_cmd->parsed()) {
      const auto file = blink::predictor::load_model_file(bounds_model);
      const auto profile = blink::selector::load_profile(bounds_profile);
      if (!file.execution_memory) {
        throw blink::Error(blink::Errc::model_missing, "model file has no execution-memory model");
      }
      const double max_scale = blink::selector::cluster_bounds(
          file.dataset_models, *file.execution_memory, bounds_machines, profile,
          bounds_granularity);
      nlohmann::json j = {{"machines", bounds_machines},
                          {"granularity", bounds_granularity},
                          {"max_scale", max_scale}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (sim_cmd->parsed()) {
      const auto spec = blink::workload::load_workload(sim_spec);
      const auto profile = blink::selector::load_profile(sim_profile);
      const auto report = blink::simulator::run(spec, sim_machines, profile,
                                                parse_placement(sim_placement), sim_seed);
      std::cout << blink::simulator::report_to_json(report).dump(2) << "\n";
      return 0;
    }
    if (sweep_cmd->parsed()) {
      const auto spec = blink::workload::load_workload(sweep_spec);
      const auto profile = blink::selector::load_profile(sweep_profile);
      const auto reports =
          blink::simulator::sweep(spec, sweep_from, sweep_to, profile,
                                  parse_placement(sweep_placement), sweep_seed, sweep_jobs);
      const std::string csv = blink::simulator::sweep_to_csv(reports);
      write_or_print(sweep_out.empty() ? std::nullopt : std::optional<std::string>(sweep_out),
                     csv);
      return 0;
    }
    if (gen_cmd->parsed()) {
      gen_config.scales = parse_double_list(gen_scales);
      const auto spec = blink::workloadgen::generate_spec(gen_config);
      write_or_print(gen_out.empty() ? std::nullopt : std::optional<std::string>(gen_out),
                     blink::workload::workload_to_json(spec).dump(2) + "\n");
      if (!gen_logs_dir.empty()) {
        std::filesystem::create_directories(gen_logs_dir);
        for (std::size_t i = 0; i < gen_config.scales.size(); ++i) {
          const double scale = gen_config.scales[i];
          const auto log = blink::workloadgen::emit_sample_log(
              spec, scale, gen_config.seed * 1000 + i, gen_config.noise_relative);
          std::ofstream out(std::filesystem::path(gen_logs_dir) /
                            ("sample_" + std::to_string(i) + ".log"));
          out << blink::logmodel::serialize_log(log);
        }
      }
      return 0;
    }
  } catch (const blink::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return blink::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
