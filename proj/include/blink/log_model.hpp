#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "blink/errors.hpp"
#include "blink/units.hpp"

// Sample-run log schema. A log is UTF-8 text with one JSON object per line,
// each carrying an "event" discriminator:
//
//   run_start         {app_id, data_scale, input_bytes, block_count, machines}
//   dataset_cached    {dataset_id, partition_id, size_bytes}
//   partition_evicted {dataset_id, partition_id}
//   stage_completed   {stage_id, peak_execution_memory_bytes}
//   task_end          {machine_id}
//   run_end           {wall_time_seconds}
//
// The peak execution memory of the run is the maximum over stage_completed
// events. Unknown event kinds are skipped and counted, not rejected, so logs
// from newer emitters stay readable.

namespace blink::logmodel {

struct CachedDatasetRecord {
  std::string dataset_id;
  Bytes total_size = 0;
  std::uint32_t partition_count = 0;
  std::uint32_t evicted_partitions = 0;

  bool operator==(const CachedDatasetRecord&) const = default;
};

struct SampleRunLog {
  std::string app_id;
  double data_scale = 0.0;  // fraction-of-full units; the actual run is 1000
  Bytes input_bytes = 0;
  std::uint64_t block_count = 0;
  std::uint32_t machines = 0;
  std::vector<CachedDatasetRecord> cached_datasets;  // sorted by dataset_id
  Bytes peak_execution_memory = 0;
  bool eviction_occurred = false;
  std::map<std::string, std::uint64_t> task_placements;
  double wall_time = 0.0;

  bool operator==(const SampleRunLog&) const = default;
};

struct RunFeatures {
  double data_scale = 0.0;
  std::map<std::string, Bytes> per_dataset_size;
  Bytes execution_memory = 0;
  bool eviction_occurred = false;

  bool operator==(const RunFeatures&) const = default;
};

struct ParseStats {
  std::uint64_t unknown_events = 0;
};

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(Errc::malformed_log,
                "line " + std::to_string(line) + ": missing field '" + key + "'");
  }
  return *it;
}

template <typename T>
T number_field(const nlohmann::json& obj, const char* key, std::size_t line) {
  const nlohmann::json& v = field(obj, key, line);
  if (!v.is_number()) {
    throw Error(Errc::malformed_log,
                "line " + std::to_string(line) + ": field '" + key + "' is not a number");
  }
  return v.get<T>();
}

inline std::string string_field(const nlohmann::json& obj, const char* key, std::size_t line) {
  const nlohmann::json& v = field(obj, key, line);
  if (!v.is_string()) {
    throw Error(Errc::malformed_log,
                "line " + std::to_string(line) + ": field '" + key + "' is not a string");
  }
  return v.get<std::string>();
}

struct DatasetAccumulator {
  std::map<std::uint64_t, Bytes> partition_sizes;   // latest size per partition
  std::map<std::uint64_t, bool> evicted_partitions;  // distinct evicted ids
};

}  // namespace detail

// Parses one sample-run log. Throws MalformedLog (bad JSON, missing field,
// missing run_start/run_end) with the offending line number, and
// InconsistentLog when the content violates schema invariants.
inline SampleRunLog parse_log(std::istream& in, ParseStats* stats = nullptr) {
  SampleRunLog log;
  bool saw_run_start = false;
  bool saw_run_end = false;
  std::map<std::string, detail::DatasetAccumulator> datasets;
  ParseStats local_stats;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;

    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw Error(Errc::malformed_log, "line " + std::to_string(line_no) + ": invalid JSON object");
    }
    const std::string event = detail::string_field(obj, "event", line_no);

    if (event == "run_start") {
      if (saw_run_start) {
        throw Error(Errc::inconsistent_log,
                    "line " + std::to_string(line_no) + ": duplicate run_start");
      }
      saw_run_start = true;
      log.app_id = detail::string_field(obj, "app_id", line_no);
      log.data_scale = detail::number_field<double>(obj, "data_scale", line_no);
      log.input_bytes = detail::number_field<Bytes>(obj, "input_bytes", line_no);
      log.block_count = detail::number_field<std::uint64_t>(obj, "block_count", line_no);
      log.machines = detail::number_field<std::uint32_t>(obj, "machines", line_no);
      if (log.data_scale <= 0.0) {
        throw Error(Errc::inconsistent_log,
                    "line " + std::to_string(line_no) + ": data_scale must be > 0");
      }
      if (log.block_count < 1 || log.machines < 1) {
        throw Error(Errc::inconsistent_log,
                    "line " + std::to_string(line_no) + ": block_count and machines must be >= 1");
      }
    } else if (event == "dataset_cached") {
      if (!saw_run_start) {
        throw Error(Errc::malformed_log,
                    "line " + std::to_string(line_no) + ": event before run_start");
      }
      const std::string id = detail::string_field(obj, "dataset_id", line_no);
      const auto partition = detail::number_field<std::uint64_t>(obj, "partition_id", line_no);
      const auto size = detail::number_field<Bytes>(obj, "size_bytes", line_no);
      datasets[id].partition_sizes[partition] = size;
    } else if (event == "partition_evicted") {
      if (!saw_run_start) {
        throw Error(Errc::malformed_log,
                    "line " + std::to_string(line_no) + ": event before run_start");
      }
      const std::string id = detail::string_field(obj, "dataset_id", line_no);
      const auto partition = detail::number_field<std::uint64_t>(obj, "partition_id", line_no);
      auto it = datasets.find(id);
      if (it == datasets.end()) {
        throw Error(Errc::inconsistent_log, "line " + std::to_string(line_no) +
                                                ": eviction for unknown dataset '" + id + "'");
      }
      it->second.evicted_partitions[partition] = true;
    } else if (event == "stage_completed") {
      if (!saw_run_start) {
        throw Error(Errc::malformed_log,
                    "line " + std::to_string(line_no) + ": event before run_start");
      }
      const auto peak = detail::number_field<Bytes>(obj, "peak_execution_memory_bytes", line_no);
      log.peak_execution_memory = std::max(log.peak_execution_memory, peak);
    } else if (event == "task_end") {
      if (!saw_run_start) {
        throw Error(Errc::malformed_log,
                    "line " + std::to_string(line_no) + ": event before run_start");
      }
      ++log.task_placements[detail::string_field(obj, "machine_id", line_no)];
    } else if (event == "run_end") {
      saw_run_end = true;
      log.wall_time = detail::number_field<double>(obj, "wall_time_seconds", line_no);
    } else {
      ++local_stats.unknown_events;
    }
  }

  if (!saw_run_start) throw Error(Errc::malformed_log, "log has no run_start event");
  if (!saw_run_end) throw Error(Errc::malformed_log, "log has no run_end event");

  for (const auto& [id, acc] : datasets) {
    CachedDatasetRecord rec;
    rec.dataset_id = id;
    rec.partition_count = static_cast<std::uint32_t>(acc.partition_sizes.size());
    for (const auto& [partition, size] : acc.partition_sizes) rec.total_size += size;
    rec.evicted_partitions = static_cast<std::uint32_t>(acc.evicted_partitions.size());
    if (rec.evicted_partitions > rec.partition_count) {
      throw Error(Errc::inconsistent_log, "dataset '" + id + "': evicted_partitions (" +
                                              std::to_string(rec.evicted_partitions) +
                                              ") exceeds partition_count (" +
                                              std::to_string(rec.partition_count) + ")");
    }
    log.eviction_occurred = log.eviction_occurred || rec.evicted_partitions > 0;
    log.cached_datasets.push_back(std::move(rec));
  }
  if (stats) *stats = local_stats;
  return log;
}

inline SampleRunLog parse_log_string(const std::string& text, ParseStats* stats = nullptr) {
  std::istringstream in(text);
  return parse_log(in, stats);
}

inline SampleRunLog parse_log_file(const std::string& path, ParseStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::malformed_log, "cannot open log file: " + path);
  return parse_log(in, stats);
}

// Canonical serialization: events in a fixed order, datasets and machines
// sorted, partition sizes split evenly (remainder spread over the first
// partitions). Parsing the result reproduces an equal SampleRunLog.
inline std::string serialize_log(const SampleRunLog& log) {
  std::ostringstream out;
  nlohmann::json start = {{"event", "run_start"},     {"app_id", log.app_id},
                          {"data_scale", log.data_scale}, {"input_bytes", log.input_bytes},
                          {"block_count", log.block_count}, {"machines", log.machines}};
  out << start.dump() << '\n';

  for (const auto& rec : log.cached_datasets) {
    const Bytes base = rec.partition_count ? rec.total_size / rec.partition_count : 0;
    const Bytes remainder = rec.partition_count ? rec.total_size % rec.partition_count : 0;
    for (std::uint32_t p = 0; p < rec.partition_count; ++p) {
      nlohmann::json ev = {{"event", "dataset_cached"},
                           {"dataset_id", rec.dataset_id},
                           {"partition_id", p},
                           {"size_bytes", base + (p < remainder ? 1 : 0)}};
      out << ev.dump() << '\n';
    }
    for (std::uint32_t p = 0; p < rec.evicted_partitions; ++p) {
      nlohmann::json ev = {{"event", "partition_evicted"},
                           {"dataset_id", rec.dataset_id},
                           {"partition_id", p}};
      out << ev.dump() << '\n';
    }
  }

  nlohmann::json stage = {{"event", "stage_completed"},
                          {"stage_id", 0},
                          {"peak_execution_memory_bytes", log.peak_execution_memory}};
  out << stage.dump() << '\n';

  for (const auto& [machine, count] : log.task_placements) {
    nlohmann::json ev = {{"event", "task_end"}, {"machine_id", machine}};
    for (std::uint64_t i = 0; i < count; ++i) out << ev.dump() << '\n';
  }

  nlohmann::json end = {{"event", "run_end"}, {"wall_time_seconds", log.wall_time}};
  out << end.dump() << '\n';
  return out.str();
}

// Pure projection of the fields the predictors consume.
inline RunFeatures extract_features(const SampleRunLog& log) {
  RunFeatures features;
  features.data_scale = log.data_scale;
  for (const auto& rec : log.cached_datasets) {
    features.per_dataset_size[rec.dataset_id] = rec.total_size;
  }
  features.execution_memory = log.peak_execution_memory;
  features.eviction_occurred = log.eviction_occurred;
  return features;
}

}  // namespace blink::logmodel
