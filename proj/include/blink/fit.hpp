#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "blink/errors.hpp"
#include "blink/log_model.hpp"
#include "blink/predictor.hpp"

// Turns a set of sample-run logs into fitted models: one size model per
// cached dataset and one execution-memory model, all with LOO-CV errors.

namespace blink::fit {

// Requires at least three logs with pairwise distinct scales so that cross
// validation is defined. Every log must report the same set of cached
// datasets; a dataset that appears in some runs but not others points at
// corrupted logs rather than a fittable signal.
inline predictor::ModelFile fit_models_from_logs(const std::vector<logmodel::SampleRunLog>& logs) {
  if (logs.size() < 3) {
    throw Error(Errc::degenerate_input, "need at least 3 sample-run logs with distinct scales");
  }
  std::set<double> scales;
  for (const auto& log : logs) scales.insert(log.data_scale);
  if (scales.size() != logs.size()) {
    throw Error(Errc::degenerate_input, "sample-run logs must have pairwise distinct scales");
  }

  std::set<std::string> dataset_ids;
  for (const auto& rec : logs.front().cached_datasets) dataset_ids.insert(rec.dataset_id);
  for (const auto& log : logs) {
    std::set<std::string> ids;
    for (const auto& rec : log.cached_datasets) ids.insert(rec.dataset_id);
    if (ids != dataset_ids) {
      throw Error(Errc::inconsistent_log,
                  "sample-run logs disagree on the set of cached datasets");
    }
  }

  predictor::ModelFile file;
  file.sample_run_count = static_cast<std::uint32_t>(logs.size());
  file.sample_machines = 1;
  for (const auto& log : logs) {
    file.sample_cost_machine_seconds += log.wall_time * static_cast<double>(log.machines);
  }

  std::map<std::string, predictor::FitInput> size_points;
  predictor::FitInput exec_points;
  for (const auto& log : logs) {
    const auto features = logmodel::extract_features(log);
    for (const auto& [id, size] : features.per_dataset_size) {
      size_points[id].push_back({features.data_scale, static_cast<double>(size)});
    }
    exec_points.push_back({features.data_scale, static_cast<double>(features.execution_memory)});
  }

  for (const auto& [id, points] : size_points) {
    file.dataset_models[id] = predictor::fit_nnls(points);
  }
  file.execution_memory = predictor::fit_nnls(exec_points);
  file.single_machine_shortcut = file.dataset_models.empty();
  return file;
}

// Largest cross-validated relative error across all fitted models; the
// adaptive-sampling hint triggers on this.
inline double worst_relative_error(const predictor::ModelFile& file) {
  double worst = 0.0;
  for (const auto& [id, model] : file.dataset_models) {
    worst = std::max(worst, model.loo_relative_error);
  }
  if (file.execution_memory) {
    worst = std::max(worst, file.execution_memory->loo_relative_error);
  }
  return worst;
}

}  // namespace blink::fit
