#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "blink/errors.hpp"
#include "blink/log_model.hpp"
#include "blink/rng.hpp"
#include "blink/units.hpp"
#include "blink/workload.hpp"

// Synthetic workload generator. Generated specs carry exact linear size
// functions, so they double as ground truth for the prediction pipeline: a
// noise-free sample log contains precisely the sizes the spec dictates at
// that scale.
//
// Generated coefficients are integers per partition and the dataset-level
// coefficients are partition multiples, so dataset totals and partition sizes
// stay whole bytes at whole-number scales.

namespace blink::workloadgen {

struct GenConfig {
  std::uint64_t seed = 0;
  std::uint32_t n_datasets = 6;   // transformation datasets, including the root
  std::uint32_t cached_count = 1;

  // Per-partition coefficient ranges, drawn uniformly as integers.
  Bytes intercept_pp_min = 0;
  Bytes intercept_pp_max = 64;
  Bytes slope_pp_min = 1024;
  Bytes slope_pp_max = 65536;

  std::uint32_t partitions_min = 64;
  std::uint32_t partitions_max = 256;

  // Execution-memory model ranges (absolute, not per partition).
  Bytes exec_intercept_min = 0;
  Bytes exec_intercept_max = 1u << 26;
  Bytes exec_slope_min = 0;
  Bytes exec_slope_max = 1u << 22;

  double noise_relative = 0.0;        // multiplicative, uniform in +-noise
  std::vector<double> scales = {1.0, 2.0, 3.0};  // sample scales (full = 1000)
  std::uint32_t iterations = 4;       // replay actions over the cached lineage
  workload::CostParams cost{10.0, 20.0, 0.1, 1.0, 97.0};
  std::uint64_t input_block_count = 16384;
};

inline void validate_config(const GenConfig& config) {
  if (config.n_datasets < 2) {
    throw Error(Errc::invalid_config, "need at least two datasets (root plus one)");
  }
  if (config.cached_count > config.n_datasets) {
    throw Error(Errc::invalid_config, "cached_count exceeds n_datasets");
  }
  if (config.noise_relative < 0.0 || config.noise_relative > 0.5) {
    throw Error(Errc::invalid_config, "noise_relative must lie in [0, 0.5]");
  }
  if (config.partitions_min < 1 || config.partitions_max < config.partitions_min) {
    throw Error(Errc::invalid_config, "bad partitions range");
  }
  if (config.intercept_pp_max < config.intercept_pp_min ||
      config.slope_pp_max < config.slope_pp_min ||
      config.exec_intercept_max < config.exec_intercept_min ||
      config.exec_slope_max < config.exec_slope_min) {
    throw Error(Errc::invalid_config, "bad coefficient range");
  }
  if (config.iterations < 1) throw Error(Errc::invalid_config, "iterations must be >= 1");
  if (config.scales.empty()) throw Error(Errc::invalid_config, "no sample scales");
}

// Random acyclic workload: a root input dataset, a chain-with-shortcuts body,
// the configured number of cached datasets, and an iteration tail whose
// lineage covers every cached dataset (each replay action touches them all,
// the shape an iterative job with a materialized working set has).
inline workload::WorkloadSpec generate_spec(const GenConfig& config) {
  validate_config(config);
  SplitMix64 rng(config.seed);

  workload::WorkloadSpec spec;
  spec.name = "gen-" + std::to_string(config.seed);
  spec.scale = kFullScale;
  spec.iterations = config.iterations;
  spec.cost = config.cost;
  spec.input_block_count = config.input_block_count;

  const std::uint32_t n = config.n_datasets;
  for (std::uint32_t i = 0; i < n; ++i) {
    workload::DatasetNode node;
    node.id = "d" + std::to_string(i);
    if (i > 0) {
      const std::uint32_t lo = i > 3 ? i - 3 : 0;
      node.parents.push_back("d" + std::to_string(rng.range(lo, i - 1)));
      if (i >= 2 && rng.below(4) == 0) {
        const auto second = static_cast<std::uint32_t>(rng.range(0, i - 1));
        const std::string id = "d" + std::to_string(second);
        if (id != node.parents.front()) node.parents.push_back(id);
      }
    }
    node.partitions = static_cast<std::uint32_t>(
        rng.range(config.partitions_min, config.partitions_max));
    const Bytes intercept_pp = rng.range(config.intercept_pp_min, config.intercept_pp_max);
    const Bytes slope_pp = rng.range(config.slope_pp_min, config.slope_pp_max);
    node.size.intercept = static_cast<double>(intercept_pp * node.partitions);
    node.size.slope = static_cast<double>(slope_pp * node.partitions);
    spec.datasets.push_back(std::move(node));
  }

  // Cached datasets: distinct indices, the root only when everything caches.
  std::vector<std::uint32_t> candidates;
  for (std::uint32_t i = (config.cached_count == n ? 0 : 1); i < n; ++i) candidates.push_back(i);
  for (std::uint32_t c = 0; c < config.cached_count; ++c) {
    const std::size_t pick = rng.below(candidates.size());
    spec.datasets[candidates[pick]].cached = true;
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
  }

  std::vector<std::string> cached_ids;
  for (const workload::DatasetNode& node : spec.datasets) {
    if (node.cached) cached_ids.push_back(node.id);
  }

  // The iteration body joins every cached dataset, so each replay action
  // revisits the whole working set.
  workload::DatasetNode body;
  body.id = "body";
  body.parents = cached_ids.empty() ? std::vector<std::string>{spec.datasets.back().id}
                                    : cached_ids;
  body.partitions = static_cast<std::uint32_t>(
      rng.range(config.partitions_min, config.partitions_max));
  const Bytes body_slope_pp = rng.range(config.slope_pp_min, config.slope_pp_max);
  body.size.slope = static_cast<double>(body_slope_pp * body.partitions);
  spec.datasets.push_back(std::move(body));

  spec.actions.push_back(cached_ids.empty() ? spec.datasets[n - 1].id : cached_ids.back());
  for (std::uint32_t i = 0; i < config.iterations; ++i) spec.actions.push_back("body");

  const Bytes exec_intercept = rng.range(config.exec_intercept_min, config.exec_intercept_max);
  const Bytes exec_slope = rng.range(config.exec_slope_min, config.exec_slope_max);
  spec.execution_memory.intercept = static_cast<double>(exec_intercept);
  spec.execution_memory.slope = static_cast<double>(exec_slope);

  workload::validate_workload(spec);
  return spec;
}

// The sample-run log the workload would produce at the given scale on a
// single machine. Noise is multiplicative and uniform in +-noise_relative,
// drawn per cached dataset (spec order) and then for the execution memory;
// noise_relative = 0 reproduces the spec's size functions to the byte.
inline logmodel::SampleRunLog emit_sample_log(const workload::WorkloadSpec& spec, double scale,
                                              std::uint64_t noise_seed,
                                              double noise_relative = 0.0) {
  if (scale <= 0.0) throw Error(Errc::invalid_scale, "sample scale must be > 0");
  if (noise_relative < 0.0 || noise_relative > 0.5) {
    throw Error(Errc::invalid_config, "noise_relative must lie in [0, 0.5]");
  }
  workload::validate_workload(spec);

  SplitMix64 rng(noise_seed);
  auto wobble = [&]() {
    return noise_relative > 0.0 ? rng.uniform(-noise_relative, noise_relative) : 0.0;
  };

  logmodel::SampleRunLog log;
  log.app_id = spec.name;
  log.data_scale = scale;
  log.machines = 1;
  log.block_count = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(
             round_half_up(static_cast<double>(spec.input_block_count) * scale / kFullScale)));

  for (const workload::DatasetNode& node : spec.datasets) {
    if (node.parents.empty()) log.input_bytes += round_bytes(node.size.at(scale));
    if (!node.cached) continue;
    logmodel::CachedDatasetRecord rec;
    rec.dataset_id = node.id;
    rec.partition_count = node.partitions;
    rec.total_size = round_bytes(node.size.at(scale) * (1.0 + wobble()));
    rec.evicted_partitions = 0;
    log.cached_datasets.push_back(std::move(rec));
  }
  std::sort(log.cached_datasets.begin(), log.cached_datasets.end(),
            [](const auto& a, const auto& b) { return a.dataset_id < b.dataset_id; });

  log.peak_execution_memory = round_bytes(spec.execution_memory.at(scale) * (1.0 + wobble()));
  log.eviction_occurred = false;
  log.task_placements["m0"] = log.block_count;
  log.wall_time = spec.cost.serial_time + static_cast<double>(spec.actions.size()) *
                                              static_cast<double>(log.block_count) *
                                              spec.cost.task_time_cached;
  return log;
}

}  // namespace blink::workloadgen
