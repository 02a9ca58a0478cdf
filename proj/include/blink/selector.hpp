#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "blink/errors.hpp"
#include "blink/predictor.hpp"
#include "blink/units.hpp"

// Cluster-size selection. Each machine has a unified memory region M shared
// by caching and execution, and a storage floor R below which cached data is
// never evicted. Given predicted totals for cached data and execution memory
// at the target scale, the selector picks the minimal machine count whose
// aggregate caching capacity holds everything, where the per-machine capacity
// is M minus the execution memory actually claimed on that machine:
//
//   machine_execution_memory(n) = min(M - R, exec_total / n)
//   capacity(n)                 = M - machine_execution_memory(n)
//   fits(n)                     = total_cached <= capacity(n) * n
//
// capacity(n) >= R always, so fits(machines_max) holds and the scan
// terminates. An exact fit counts as eviction-free.

namespace blink::selector {

struct MachineProfile {
  Bytes unified_memory = 0;  // M
  Bytes storage_floor = 0;   // R
  std::optional<std::uint32_t> task_capacity;  // used only by the skew check
};

inline void validate_profile(const MachineProfile& profile) {
  if (profile.storage_floor == 0 || profile.storage_floor > profile.unified_memory) {
    throw Error(Errc::invalid_profile, "machine profile requires 0 < R <= M");
  }
}

enum class Rationale { no_cached_data, fits, capped_at_max };

inline const char* to_string(Rationale r) {
  switch (r) {
    case Rationale::no_cached_data: return "NO_CACHED_DATA";
    case Rationale::fits: return "FITS";
    default: return "CAPPED_AT_MAX";
  }
}

struct Recommendation {
  std::uint32_t machines = 1;
  Bytes predicted_total_cached = 0;
  Bytes predicted_execution_memory = 0;
  std::uint32_t machines_min = 1;
  std::uint32_t machines_max = 1;
  Rationale rationale = Rationale::fits;
};

// Fewer than machines_min machines cannot hold the cached data even with the
// whole unified region; more than machines_max gives no caching benefit since
// the storage floors alone suffice. Both are floored at one machine.
inline std::pair<std::uint32_t, std::uint32_t> machines_bounds(Bytes total_cached,
                                                               const MachineProfile& profile) {
  validate_profile(profile);
  if (total_cached == 0) return {1, 1};
  const auto lo = static_cast<std::uint32_t>(ceil_div(total_cached, profile.unified_memory));
  const auto hi = static_cast<std::uint32_t>(ceil_div(total_cached, profile.storage_floor));
  return {std::max(1u, lo), std::max(1u, hi)};
}

// Execution memory claimed per machine when exec_total is spread over the
// cluster, clamped to the shrinkable part of the unified region.
inline double machine_execution_memory(double exec_total, std::uint32_t machines,
                                       const MachineProfile& profile) {
  validate_profile(profile);
  const double shrinkable =
      static_cast<double>(profile.unified_memory) - static_cast<double>(profile.storage_floor);
  return std::min(shrinkable, exec_total / static_cast<double>(machines));
}

// Cache capacity left on one machine. The simulator uses the same expression,
// so selector and oracle share one memory semantics.
inline double per_machine_cache_capacity(double exec_total, std::uint32_t machines,
                                         const MachineProfile& profile) {
  return static_cast<double>(profile.unified_memory) -
         machine_execution_memory(exec_total, machines, profile);
}

namespace detail {

inline bool fits(Bytes total_cached, Bytes exec_total, std::uint32_t machines,
                 const MachineProfile& profile) {
  const double capacity =
      per_machine_cache_capacity(static_cast<double>(exec_total), machines, profile);
  return static_cast<double>(total_cached) <= capacity * static_cast<double>(machines);
}

}  // namespace detail

using SizeModels = std::map<std::string, predictor::LinearModel>;

// Minimal machine count for an eviction-free run at the given scale. With no
// cached data a single machine is the cheapest choice. max_machines, when
// non-zero, caps the answer (rationale CAPPED_AT_MAX).
inline Recommendation select_cluster_size(const SizeModels& size_models,
                                          const predictor::LinearModel* exec_model, double scale,
                                          const MachineProfile& profile,
                                          std::uint32_t max_machines = 0) {
  validate_profile(profile);
  if (scale <= 0.0) throw Error(Errc::invalid_scale, "target scale must be > 0");
  if (!exec_model) throw Error(Errc::model_missing, "no execution-memory model");

  Recommendation rec;
  for (const auto& [id, model] : size_models) {
    rec.predicted_total_cached += predictor::predict(model, scale);
  }
  rec.predicted_execution_memory = predictor::predict(*exec_model, scale);

  if (rec.predicted_total_cached == 0) {
    rec.machines = 1;
    rec.machines_min = 1;
    rec.machines_max = 1;
    rec.rationale = Rationale::no_cached_data;
    return rec;
  }

  const auto [lo, hi] = machines_bounds(rec.predicted_total_cached, profile);
  rec.machines_min = lo;
  rec.machines_max = hi;

  for (std::uint32_t n = lo;; ++n) {
    if (max_machines != 0 && n > max_machines) {
      rec.machines = max_machines;
      rec.rationale = Rationale::capped_at_max;
      return rec;
    }
    if (detail::fits(rec.predicted_total_cached, rec.predicted_execution_memory, n, profile)) {
      rec.machines = n;
      rec.rationale = Rationale::fits;
      return rec;
    }
  }
}

namespace detail {

inline bool fits_at_scale(const SizeModels& size_models, const predictor::LinearModel& exec_model,
                          double scale, std::uint32_t machines, const MachineProfile& profile) {
  Bytes total = 0;
  for (const auto& [id, model] : size_models) total += predictor::predict(model, scale);
  const Bytes exec = predictor::predict(exec_model, scale);
  return fits(total, exec, machines, profile);
}

}  // namespace detail

// Inverts the selection condition: the largest data scale (multiple of
// granularity) a fixed cluster can run eviction-free. The condition is
// monotone in the scale (sizes grow, capacity shrinks), so bisection applies.
inline double cluster_bounds(const SizeModels& size_models,
                             const predictor::LinearModel& exec_model, std::uint32_t machines,
                             const MachineProfile& profile, double granularity = 10.0) {
  validate_profile(profile);
  if (machines < 1) throw Error(Errc::invalid_config, "machines must be >= 1");
  if (granularity <= 0.0) throw Error(Errc::invalid_config, "granularity must be > 0");

  auto fits_at = [&](std::uint64_t steps) {
    return detail::fits_at_scale(size_models, exec_model,
                                 static_cast<double>(steps) * granularity, machines, profile);
  };

  if (!fits_at(1)) {
    throw Error(Errc::infeasible_at_any_scale,
                "cached-data intercepts exceed cluster capacity at any scale");
  }

  // Beyond this the instance is unbounded for practical purposes; with all
  // slopes zero the condition never starts failing at all.
  const double kScaleLimit = 1.0e12;
  std::uint64_t lo = 1;  // fits
  std::uint64_t hi = 2;
  while (fits_at(hi)) {
    lo = hi;
    if (static_cast<double>(hi) * granularity > kScaleLimit) {
      throw Error(Errc::unbounded, "every data scale fits this cluster");
    }
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (fits_at(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return static_cast<double>(lo) * granularity;
}

struct SkewCheck {
  bool ok = false;
  std::uint64_t predicted_evictions = 0;
  std::vector<std::uint64_t> assignment;  // tasks per machine actually checked
};

inline std::vector<std::uint64_t> balanced_assignment(std::uint64_t partitions,
                                                      std::uint32_t machines) {
  std::vector<std::uint64_t> loads(machines, partitions / machines);
  const std::uint64_t extra = partitions % machines;
  for (std::uint64_t m = 0; m < extra; ++m) ++loads[m];
  return loads;
}

// Advisory skew check: tasks above a machine's capacity evict one cached
// partition each. The selector itself does not account for skew; this check
// exposes the risk after the fact. A caller-provided assignment overrides the
// balanced ceil/floor split.
inline SkewCheck skew_adjusted_check(const Recommendation& rec, std::uint64_t partitions,
                                     const MachineProfile& profile,
                                     const std::vector<std::uint64_t>* assignment = nullptr) {
  validate_profile(profile);
  if (!profile.task_capacity) {
    throw Error(Errc::invalid_profile, "skew check requires a task_capacity");
  }
  if (partitions < 1) throw Error(Errc::invalid_config, "partitions must be >= 1");

  SkewCheck check;
  check.assignment =
      assignment ? *assignment : balanced_assignment(partitions, rec.machines);
  const std::uint64_t capacity = *profile.task_capacity;
  for (std::uint64_t load : check.assignment) {
    if (load > capacity) check.predicted_evictions += load - capacity;
  }
  check.ok = check.predicted_evictions == 0;
  return check;
}

// ---------------------------------------------------------------------------
// Profile file: {"unified_memory_bytes": M, "storage_floor_bytes": R,
// "task_capacity": optional}.

inline MachineProfile profile_from_json(const nlohmann::json& j) {
  MachineProfile profile;
  profile.unified_memory = j.at("unified_memory_bytes").get<Bytes>();
  profile.storage_floor = j.at("storage_floor_bytes").get<Bytes>();
  if (j.contains("task_capacity")) {
    profile.task_capacity = j.at("task_capacity").get<std::uint32_t>();
  }
  validate_profile(profile);
  return profile;
}

inline nlohmann::json profile_to_json(const MachineProfile& profile) {
  nlohmann::json j = {{"unified_memory_bytes", profile.unified_memory},
                      {"storage_floor_bytes", profile.storage_floor}};
  if (profile.task_capacity) j["task_capacity"] = *profile.task_capacity;
  return j;
}

inline MachineProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::invalid_profile, "cannot open profile file: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::invalid_profile, "profile file is not valid JSON: " + path);
  return profile_from_json(j);
}

inline nlohmann::json recommendation_to_json(const Recommendation& rec) {
  return {{"machines", rec.machines},
          {"predicted_total_cached_bytes", rec.predicted_total_cached},
          {"predicted_execution_memory_bytes", rec.predicted_execution_memory},
          {"machines_min", rec.machines_min},
          {"machines_max", rec.machines_max},
          {"rationale", to_string(rec.rationale)}};
}

}  // namespace blink::selector
