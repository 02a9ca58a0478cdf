#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <list>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "blink/errors.hpp"
#include "blink/rng.hpp"
#include "blink/selector.hpp"
#include "blink/units.hpp"
#include "blink/workload.hpp"

// Deterministic cluster simulator used as the ground-truth oracle. Partitions
// of cached datasets are placed on machines, each machine runs a byte-budget
// LRU cache, and every action walks the cached partitions of its lineage in
// partition-index order. A task that finds its partition resident costs
// task_time_cached; a task whose partition was evicted recomputes it at
// recompute_factor times that. The first materialization of a partition is
// ordinary computation, not a recomputation, and costs one task time.
//
// Time model per run:
//   iteration_time(action) = max over machines of (sum of task times)
//                            + overhead_coeff * machines
//   total_time = serial_time + sum over actions of
//                (iteration_time + parallel_work / machines)
//   total_cost = machines * total_time
//
// The per-machine cache budget shares the selector's memory semantics:
//   capacity = M - min(M - R, exec_total / machines).

namespace blink::simulator {

enum class Placement { balanced, skewed };

struct SimulationReport {
  std::uint32_t machines = 0;
  std::uint64_t evicted_partitions = 0;  // materialized but not resident at the end
  std::uint64_t eviction_events = 0;     // individual LRU evictions over the run
  double cached_fraction = 1.0;  // hit share of post-materialization accesses
  double total_time = 0.0;       // seconds
  double total_cost = 0.0;       // machine-seconds, machines * total_time exactly
  std::map<std::uint32_t, std::uint64_t> per_machine_tasks;  // assigned partitions
  char area = '-';  // filled by sweep(): A, B or C
};

namespace detail {

struct PartitionRef {
  std::uint32_t dataset = 0;    // index into the cached-dataset list
  std::uint32_t partition = 0;
  Bytes size = 0;
  std::uint32_t machine = 0;
};

inline std::uint64_t key_of(std::uint32_t dataset, std::uint32_t partition) {
  return (static_cast<std::uint64_t>(dataset) << 32) | partition;
}

struct MachineCache {
  // front = most recently used
  std::list<std::pair<std::uint64_t, Bytes>> lru;
  std::unordered_map<std::uint64_t, std::list<std::pair<std::uint64_t, Bytes>>::iterator> index;
  std::uint64_t used = 0;

  bool resident(std::uint64_t key) const { return index.count(key) != 0; }

  void touch(std::uint64_t key) {
    auto it = index.at(key);
    lru.splice(lru.begin(), lru, it);
  }

  // Returns the number of evictions performed. The partition stays
  // non-resident when it cannot fit even into an empty cache.
  std::uint64_t insert(std::uint64_t key, Bytes size, double capacity) {
    std::uint64_t evictions = 0;
    while (static_cast<double>(used + size) > capacity && !lru.empty()) {
      const auto& [victim, victim_size] = lru.back();
      index.erase(victim);
      used -= victim_size;
      lru.pop_back();
      ++evictions;
    }
    if (static_cast<double>(used + size) <= capacity) {
      lru.emplace_front(key, size);
      index[lru.begin()->first] = lru.begin();
      used += size;
    }
    return evictions;
  }
};

}  // namespace detail

// One deterministic run of the workload on `machines` machines. SKEWED
// placement draws each partition's machine uniformly from the seeded
// generator; BALANCED round-robins partitions across machines, continuing the
// cursor across datasets so loads differ by at most one partition.
inline SimulationReport run(const workload::WorkloadSpec& spec, std::uint32_t machines,
                            const selector::MachineProfile& profile, Placement placement,
                            std::uint64_t seed = 0) {
  workload::validate_workload(spec);
  selector::validate_profile(profile);
  if (machines < 1) throw Error(Errc::invalid_config, "machines must be >= 1");

  const Bytes exec_total = round_bytes(spec.execution_memory.at(spec.scale));
  const double capacity =
      selector::per_machine_cache_capacity(static_cast<double>(exec_total), machines, profile);

  // Gather cached datasets in spec order and place their partitions.
  struct CachedDataset {
    std::size_t node_index;
    std::vector<detail::PartitionRef> partitions;
  };
  std::vector<CachedDataset> cached;
  std::unordered_map<std::string, std::uint32_t> cached_index;

  SplitMix64 rng(seed);
  std::uint32_t rr_cursor = 0;
  for (std::size_t i = 0; i < spec.datasets.size(); ++i) {
    const workload::DatasetNode& node = spec.datasets[i];
    if (!node.cached) continue;
    CachedDataset entry;
    entry.node_index = i;
    const Bytes total = round_bytes(node.size.at(spec.scale));
    const Bytes base = total / node.partitions;
    const Bytes remainder = total % node.partitions;
    for (std::uint32_t p = 0; p < node.partitions; ++p) {
      detail::PartitionRef ref;
      ref.dataset = static_cast<std::uint32_t>(cached.size());
      ref.partition = p;
      ref.size = base + (p < remainder ? 1 : 0);
      if (placement == Placement::balanced) {
        ref.machine = rr_cursor;
        rr_cursor = (rr_cursor + 1) % machines;
      } else {
        ref.machine = static_cast<std::uint32_t>(rng.below(machines));
      }
      entry.partitions.push_back(ref);
    }
    cached_index.emplace(node.id, static_cast<std::uint32_t>(cached.size()));
    cached.push_back(std::move(entry));
  }

  SimulationReport report;
  report.machines = machines;
  for (std::uint32_t m = 0; m < machines; ++m) report.per_machine_tasks[m] = 0;
  for (const CachedDataset& ds : cached) {
    for (const detail::PartitionRef& ref : ds.partitions) {
      ++report.per_machine_tasks[ref.machine];
    }
  }

  // Which cached datasets each action touches.
  std::vector<std::vector<std::uint32_t>> action_datasets;
  action_datasets.reserve(spec.actions.size());
  for (const std::string& sink : spec.actions) {
    std::vector<std::uint32_t> touched;
    for (const std::string& id : workload::lineage_of(spec, sink)) {
      auto it = cached_index.find(id);
      if (it != cached_index.end()) touched.push_back(it->second);
    }
    std::sort(touched.begin(), touched.end());  // spec order, deterministic
    action_datasets.push_back(std::move(touched));
  }

  std::vector<detail::MachineCache> caches(machines);
  std::vector<std::set<std::uint64_t>> materialized(machines);
  std::vector<double> machine_time(machines, 0.0);

  const double task_time = spec.cost.task_time_cached;
  const double recompute_time = spec.cost.recompute_factor * task_time;
  std::uint64_t post_accesses = 0;
  std::uint64_t post_hits = 0;

  double total_time = spec.cost.serial_time;
  for (std::size_t a = 0; a < spec.actions.size(); ++a) {
    std::fill(machine_time.begin(), machine_time.end(), 0.0);
    for (std::uint32_t ds : action_datasets[a]) {
      for (const detail::PartitionRef& ref : cached[ds].partitions) {
        const std::uint64_t key = detail::key_of(ref.dataset, ref.partition);
        detail::MachineCache& cache = caches[ref.machine];
        if (cache.resident(key)) {
          machine_time[ref.machine] += task_time;
          cache.touch(key);
          ++post_accesses;
          ++post_hits;
        } else if (materialized[ref.machine].insert(key).second) {
          // first materialization
          machine_time[ref.machine] += task_time;
          report.eviction_events += cache.insert(key, ref.size, capacity);
        } else {
          machine_time[ref.machine] += recompute_time;
          report.eviction_events += cache.insert(key, ref.size, capacity);
          ++post_accesses;
        }
      }
    }
    const double busiest = *std::max_element(machine_time.begin(), machine_time.end());
    const double iteration_time =
        busiest + spec.cost.overhead_coeff * static_cast<double>(machines);
    total_time += iteration_time + spec.cost.parallel_work / static_cast<double>(machines);
  }

  report.total_time = total_time;
  report.total_cost = static_cast<double>(machines) * total_time;

  for (std::uint32_t m = 0; m < machines; ++m) {
    report.evicted_partitions += materialized[m].size() - caches[m].index.size();
  }
  report.cached_fraction =
      post_accesses > 0
          ? static_cast<double>(post_hits) / static_cast<double>(post_accesses)
          : (report.evicted_partitions == 0 ? 1.0 : 0.0);
  return report;
}

// Runs every cluster size in [n_lo, n_hi] and labels the cost curve: the
// cost-minimal size is area C (ties go to the smaller size), everything below
// is area A, everything above is area B. jobs > 1 runs the simulations
// concurrently; the output order is by machine count either way.
inline std::vector<SimulationReport> sweep(const workload::WorkloadSpec& spec, std::uint32_t n_lo,
                                           std::uint32_t n_hi,
                                           const selector::MachineProfile& profile,
                                           Placement placement, std::uint64_t seed = 0,
                                           unsigned jobs = 1) {
  if (n_lo < 1 || n_hi < n_lo) {
    throw Error(Errc::invalid_config, "sweep range must be ascending and start at >= 1");
  }

  std::vector<SimulationReport> reports(n_hi - n_lo + 1);
  if (jobs <= 1) {
    for (std::uint32_t n = n_lo; n <= n_hi; ++n) {
      reports[n - n_lo] = run(spec, n, profile, placement, seed);
    }
  } else {
    std::vector<std::future<SimulationReport>> futures;
    futures.reserve(reports.size());
    for (std::uint32_t n = n_lo; n <= n_hi; ++n) {
      futures.push_back(std::async(std::launch::async, [&, n] {
        return run(spec, n, profile, placement, seed);
      }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) reports[i] = futures[i].get();
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].total_cost < reports[best].total_cost) best = i;
  }
  for (std::size_t i = 0; i < reports.size(); ++i) {
    reports[i].area = i < best ? 'A' : (i == best ? 'C' : 'B');
  }
  return reports;
}

inline nlohmann::json report_to_json(const SimulationReport& report) {
  nlohmann::json tasks;
  for (const auto& [machine, count] : report.per_machine_tasks) {
    tasks[std::to_string(machine)] = count;
  }
  return {{"machines", report.machines},
          {"evicted_partitions", report.evicted_partitions},
          {"eviction_events", report.eviction_events},
          {"cached_fraction", report.cached_fraction},
          {"total_time_s", report.total_time},
          {"total_cost_machine_s", report.total_cost},
          {"per_machine_tasks", tasks},
          {"area", std::string(1, report.area)}};
}

// Figure-style CSV: one row per simulated cluster size.
inline std::string sweep_to_csv(const std::vector<SimulationReport>& reports) {
  std::string csv = "machines,time_s,cost_machine_s,evicted,cached_fraction,area\n";
  char row[160];
  for (const SimulationReport& r : reports) {
    std::snprintf(row, sizeof(row), "%u,%.6f,%.6f,%llu,%.6f,%c\n", r.machines, r.total_time,
                  r.total_cost, static_cast<unsigned long long>(r.evicted_partitions),
                  r.cached_fraction, r.area);
    csv += row;
  }
  return csv;
}

}  // namespace blink::simulator
