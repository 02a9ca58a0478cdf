#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "blink/errors.hpp"
#include "blink/units.hpp"

// Workload description: the merged DAG of an iterative data-flow application.
// Every job's transformation DAG is folded into one graph; each action
// references the sink dataset of one job and jobs run in list order. A
// dataset's computation count is the number of actions whose lineage
// (transitive ancestors of the sink, sink included) contains it.

namespace blink::workload {

struct LinearFn {
  double intercept = 0.0;  // bytes at scale 0
  double slope = 0.0;      // bytes per scale unit

  double at(double scale) const { return intercept + slope * scale; }
};

struct DatasetNode {
  std::string id;
  std::vector<std::string> parents;
  bool cached = false;
  LinearFn size;            // total dataset size versus data scale
  std::uint32_t partitions = 1;
};

struct CostParams {
  double serial_time = 0.0;        // seconds per run
  double parallel_work = 0.0;      // machine-seconds per action
  double overhead_coeff = 0.0;     // seconds per machine per action
  double task_time_cached = 1.0;   // seconds per cached-partition task
  double recompute_factor = 97.0;  // recomputing costs this many cached tasks
};

struct WorkloadSpec {
  std::string name;
  std::vector<DatasetNode> datasets;  // parents precede children
  std::vector<std::string> actions;   // sink dataset ids, executed in order
  std::uint32_t iterations = 0;       // actions that replay the cached lineage
  CostParams cost;
  double scale = kFullScale;          // data scale of this run (full input = 1000)
  LinearFn execution_memory;          // total execution memory versus scale
  std::uint64_t input_block_count = 16384;  // blocks of the full-scale input
};

namespace detail {

inline std::unordered_map<std::string, std::size_t> index_datasets(const WorkloadSpec& spec) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < spec.datasets.size(); ++i) {
    if (!index.emplace(spec.datasets[i].id, i).second) {
      throw Error(Errc::invalid_config, "duplicate dataset id: " + spec.datasets[i].id);
    }
  }
  return index;
}

}  // namespace detail

inline void validate_workload(const WorkloadSpec& spec) {
  if (spec.datasets.empty()) throw Error(Errc::empty_workload, "workload has no datasets");
  if (spec.actions.empty()) throw Error(Errc::empty_workload, "workload has no actions");

  const auto index = detail::index_datasets(spec);
  for (const DatasetNode& node : spec.datasets) {
    if (node.partitions < 1) {
      throw Error(Errc::invalid_config, "dataset " + node.id + ": partitions must be >= 1");
    }
    if (node.size.intercept < 0.0 || node.size.slope < 0.0) {
      throw Error(Errc::invalid_config, "dataset " + node.id + ": size must be >= 0 at any scale");
    }
    for (const std::string& parent : node.parents) {
      if (!index.count(parent)) {
        throw Error(Errc::invalid_config,
                    "dataset " + node.id + ": unknown parent '" + parent + "'");
      }
    }
  }
  for (const std::string& sink : spec.actions) {
    if (!index.count(sink)) {
      throw Error(Errc::invalid_config, "action references unknown dataset '" + sink + "'");
    }
  }
  if (spec.iterations > spec.actions.size()) {
    throw Error(Errc::invalid_config, "iterations exceeds the number of actions");
  }
  if (spec.cost.serial_time < 0.0 || spec.cost.parallel_work < 0.0 ||
      spec.cost.overhead_coeff < 0.0 || spec.cost.task_time_cached < 0.0) {
    throw Error(Errc::invalid_config, "cost parameters must be >= 0");
  }
  if (spec.cost.recompute_factor < 1.0) {
    throw Error(Errc::invalid_config, "recompute factor must be >= 1");
  }
  if (spec.execution_memory.intercept < 0.0 || spec.execution_memory.slope < 0.0) {
    throw Error(Errc::invalid_config, "execution memory must be >= 0 at any scale");
  }

  // Cycle check: every dataset must be reachable in an order where parents
  // come first (Kahn's algorithm).
  std::vector<std::size_t> remaining_parents(spec.datasets.size(), 0);
  std::vector<std::vector<std::size_t>> children(spec.datasets.size());
  for (std::size_t i = 0; i < spec.datasets.size(); ++i) {
    remaining_parents[i] = spec.datasets[i].parents.size();
    for (const std::string& parent : spec.datasets[i].parents) {
      children[index.at(parent)].push_back(i);
    }
  }
  std::vector<std::size_t> frontier;
  for (std::size_t i = 0; i < spec.datasets.size(); ++i) {
    if (remaining_parents[i] == 0) frontier.push_back(i);
  }
  std::size_t visited = 0;
  while (!frontier.empty()) {
    const std::size_t current = frontier.back();
    frontier.pop_back();
    ++visited;
    for (std::size_t child : children[current]) {
      if (--remaining_parents[child] == 0) frontier.push_back(child);
    }
  }
  if (visited != spec.datasets.size()) {
    throw Error(Errc::cyclic_dag, "workload DAG contains a cycle");
  }
}

// Ancestors of a dataset, the dataset itself included.
inline std::set<std::string> lineage_of(const WorkloadSpec& spec, const std::string& sink) {
  const auto index = detail::index_datasets(spec);
  std::set<std::string> seen;
  std::vector<std::string> stack{sink};
  while (!stack.empty()) {
    const std::string current = stack.back();
    stack.pop_back();
    if (!seen.insert(current).second) continue;
    auto it = index.find(current);
    if (it == index.end()) {
      throw Error(Errc::invalid_config, "unknown dataset '" + current + "'");
    }
    for (const std::string& parent : spec.datasets[it->second].parents) {
      stack.push_back(parent);
    }
  }
  return seen;
}

// How many times each dataset is computed when nothing is cached: once per
// action whose lineage contains it.
inline std::map<std::string, std::uint32_t> computation_counts(const WorkloadSpec& spec) {
  validate_workload(spec);
  std::map<std::string, std::uint32_t> counts;
  for (const DatasetNode& node : spec.datasets) counts[node.id] = 0;
  for (const std::string& sink : spec.actions) {
    for (const std::string& id : lineage_of(spec, sink)) ++counts[id];
  }
  return counts;
}

// Recomputations beyond the first computation. Datasets in cached_set are
// computed once and then served from cache when assume_fit holds; without
// assume_fit they are treated like uncached ones (the worst case — actual
// eviction behaviour is the simulator's job).
inline std::map<std::string, std::uint32_t> recompute_counts(const WorkloadSpec& spec,
                                                             const std::set<std::string>& cached_set,
                                                             bool assume_fit) {
  auto counts = computation_counts(spec);
  for (auto& [id, count] : counts) {
    if (assume_fit && cached_set.count(id)) {
      count = 0;
    } else {
      count = count > 0 ? count - 1 : 0;
    }
  }
  return counts;
}

inline std::set<std::string> cached_dataset_ids(const WorkloadSpec& spec) {
  std::set<std::string> ids;
  for (const DatasetNode& node : spec.datasets) {
    if (node.cached) ids.insert(node.id);
  }
  return ids;
}

// Total cached bytes at a scale, byte-quantized per dataset exactly like the
// log emitter and the size predictor see them.
inline Bytes total_cached_bytes(const WorkloadSpec& spec, double scale) {
  Bytes total = 0;
  for (const DatasetNode& node : spec.datasets) {
    if (node.cached) total += round_bytes(node.size.at(scale));
  }
  return total;
}

// ---------------------------------------------------------------------------
// JSON schema.

inline nlohmann::json workload_to_json(const WorkloadSpec& spec) {
  nlohmann::json datasets = nlohmann::json::array();
  for (const DatasetNode& node : spec.datasets) {
    datasets.push_back({{"id", node.id},
                        {"parents", node.parents},
                        {"cached", node.cached},
                        {"size", {{"intercept", node.size.intercept}, {"slope", node.size.slope}}},
                        {"partitions", node.partitions}});
  }
  return {{"name", spec.name},
          {"scale", spec.scale},
          {"datasets", datasets},
          {"actions", spec.actions},
          {"iterations", spec.iterations},
          {"execution_memory",
           {{"intercept", spec.execution_memory.intercept},
            {"slope", spec.execution_memory.slope}}},
          {"cost_params",
           {{"serial_time_s", spec.cost.serial_time},
            {"parallel_work_machine_s", spec.cost.parallel_work},
            {"overhead_s_per_machine", spec.cost.overhead_coeff},
            {"task_time_cached_s", spec.cost.task_time_cached},
            {"recompute_factor", spec.cost.recompute_factor}}},
          {"input_block_count", spec.input_block_count}};
}

inline WorkloadSpec workload_from_json(const nlohmann::json& j) {
  WorkloadSpec spec;
  spec.name = j.value("name", "workload");
  spec.scale = j.value("scale", kFullScale);
  for (const auto& d : j.at("datasets")) {
    DatasetNode node;
    node.id = d.at("id").get<std::string>();
    node.parents = d.value("parents", std::vector<std::string>{});
    node.cached = d.value("cached", false);
    node.size.intercept = d.at("size").value("intercept", 0.0);
    node.size.slope = d.at("size").value("slope", 0.0);
    node.partitions = d.value("partitions", 1u);
    spec.datasets.push_back(std::move(node));
  }
  spec.actions = j.at("actions").get<std::vector<std::string>>();
  spec.iterations = j.value("iterations", 0u);
  if (j.contains("execution_memory")) {
    spec.execution_memory.intercept = j.at("execution_memory").value("intercept", 0.0);
    spec.execution_memory.slope = j.at("execution_memory").value("slope", 0.0);
  }
  if (j.contains("cost_params")) {
    const auto& c = j.at("cost_params");
    spec.cost.serial_time = c.value("serial_time_s", 0.0);
    spec.cost.parallel_work = c.value("parallel_work_machine_s", 0.0);
    spec.cost.overhead_coeff = c.value("overhead_s_per_machine", 0.0);
    spec.cost.task_time_cached = c.value("task_time_cached_s", 1.0);
    spec.cost.recompute_factor = c.value("recompute_factor", 97.0);
  }
  spec.input_block_count = j.value("input_block_count", std::uint64_t{16384});
  validate_workload(spec);
  return spec;
}

inline WorkloadSpec load_workload(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::invalid_config, "cannot open workload file: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw Error(Errc::invalid_config, "workload file is not valid JSON: " + path);
  }
  return workload_from_json(j);
}

}  // namespace blink::workload
