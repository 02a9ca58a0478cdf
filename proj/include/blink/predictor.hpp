#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "blink/errors.hpp"
#include "blink/units.hpp"

// Linear models of byte quantities versus data scale, with non-negative
// coefficients. The same shape serves both the cached-dataset size model and
// the execution-memory model. Fits are evaluated with leave-one-out cross
// validation and predictions extrapolate to the actual-run scale (1000).

namespace blink::predictor {

struct LinearModel {
  double intercept = 0.0;  // bytes, >= 0
  double slope = 0.0;      // bytes per scale unit, >= 0
  double loo_rmse = 0.0;   // bytes
  double loo_relative_error = 0.0;  // loo_rmse / mean observed label

  bool operator==(const LinearModel&) const = default;
};

struct FitPoint {
  double scale = 0.0;
  double label = 0.0;  // bytes
};

using FitInput = std::vector<FitPoint>;

namespace detail {

inline void validate_points(const FitInput& points, std::size_t min_points) {
  std::set<double> scales;
  for (const FitPoint& p : points) {
    if (p.label < 0.0) throw Error(Errc::degenerate_input, "negative label in fit input");
    scales.insert(p.scale);
  }
  if (scales.size() < min_points) {
    throw Error(Errc::degenerate_input,
                "need at least " + std::to_string(min_points) + " points with distinct scales");
  }
}

inline double sse_for(const FitInput& points, double intercept, double slope) {
  double sse = 0.0;
  for (const FitPoint& p : points) {
    const double r = p.label - (intercept + slope * p.scale);
    sse += r * r;
  }
  return sse;
}

// Exact two-parameter NNLS: solve the unconstrained problem restricted to
// each of the four active sets {none, intercept=0, slope=0, both=0} and keep
// the feasible candidate with the smallest residual. The optimum's active
// set always appears in this list, so no iterative solver is needed.
inline std::pair<double, double> nnls_solve(const FitInput& points) {
  const double n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const FitPoint& p : points) {
    sx += p.scale;
    sy += p.label;
    sxx += p.scale * p.scale;
    sxy += p.scale * p.label;
  }

  double best_a = 0.0, best_b = 0.0;
  double best_sse = sse_for(points, 0.0, 0.0);  // both clamped

  auto consider = [&](double a, double b) {
    if (a < 0.0 || b < 0.0) return;
    const double sse = sse_for(points, a, b);
    if (sse < best_sse) {
      best_sse = sse;
      best_a = a;
      best_b = b;
    }
  };

  const double denom = n * sxx - sx * sx;
  if (denom > 0.0) {
    const double b = (n * sxy - sx * sy) / denom;
    consider((sy - b * sx) / n, b);  // free fit
  }
  if (sxx > 0.0) consider(0.0, sxy / sxx);  // intercept clamped
  consider(sy / n, 0.0);                    // slope clamped

  return {best_a, best_b};
}

}  // namespace detail

// Held-out absolute errors: each point is predicted by a model fitted on the
// remaining ones. Requires >= 3 distinct scales so every reduced fit is still
// determined.
inline std::pair<double, double> loo_cv(const FitInput& points) {
  detail::validate_points(points, 3);
  double sum_sq = 0.0;
  double label_sum = 0.0;
  FitInput reduced(points.size() - 1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    reduced.clear();
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j != i) reduced.push_back(points[j]);
    }
    const auto [a, b] = detail::nnls_solve(reduced);
    const double err = std::abs(a + b * points[i].scale - points[i].label);
    sum_sq += err * err;
    label_sum += points[i].label;
  }
  const double rmse = std::sqrt(sum_sq / static_cast<double>(points.size()));
  const double mean = label_sum / static_cast<double>(points.size());
  // All-zero labels make the relative error 0 by convention.
  const double relative = mean > 0.0 ? rmse / mean : 0.0;
  return {rmse, relative};
}

// Least squares under intercept >= 0, slope >= 0. Cross-validation errors are
// filled when enough points exist; with exactly two points they stay 0.
inline LinearModel fit_nnls(const FitInput& points) {
  detail::validate_points(points, 2);
  LinearModel model;
  const auto [a, b] = detail::nnls_solve(points);
  model.intercept = a;
  model.slope = b;
  if (points.size() >= 3) {
    const auto [rmse, relative] = loo_cv(points);
    model.loo_rmse = rmse;
    model.loo_relative_error = relative;
  }
  return model;
}

// intercept + slope * scale, rounded half-up to whole bytes.
inline Bytes predict(const LinearModel& model, double scale) {
  if (scale <= 0.0) throw Error(Errc::invalid_scale, "prediction scale must be > 0");
  return round_bytes(model.intercept + model.slope * scale);
}

// |predicted - actual| / actual, the relative metric used to score size
// predictions against observed runs.
inline double prediction_error(Bytes predicted, Bytes actual) {
  if (actual == 0) throw Error(Errc::zero_actual, "prediction error undefined for actual = 0");
  const double p = static_cast<double>(predicted);
  const double a = static_cast<double>(actual);
  return std::abs(p - a) / a;
}

// ---------------------------------------------------------------------------
// Model file: a flat JSON object mapping each dataset id to its fitted model,
// plus reserved keys. Reserved: "execution_memory" (the execution-memory
// model), "scale_convention" (always "full=1000"), "single_machine_shortcut"
// (true when the sample runs cached nothing), "sample_runs" (cost metadata
// used for cost accounting). Dataset ids may not collide with reserved keys.

struct ModelFile {
  std::map<std::string, LinearModel> dataset_models;
  std::optional<LinearModel> execution_memory;
  bool single_machine_shortcut = false;
  double sample_cost_machine_seconds = 0.0;
  std::uint32_t sample_run_count = 0;
  std::uint32_t sample_machines = 1;
};

namespace detail {

inline const std::set<std::string>& reserved_model_keys() {
  static const std::set<std::string> keys = {"execution_memory", "scale_convention",
                                             "single_machine_shortcut", "sample_runs"};
  return keys;
}

inline nlohmann::json model_to_json(const LinearModel& m) {
  return {{"intercept", m.intercept},
          {"slope", m.slope},
          {"loo_rmse", m.loo_rmse},
          {"loo_relative_error", m.loo_relative_error}};
}

inline LinearModel model_from_json(const nlohmann::json& j) {
  LinearModel m;
  m.intercept = j.at("intercept").get<double>();
  m.slope = j.at("slope").get<double>();
  m.loo_rmse = j.value("loo_rmse", 0.0);
  m.loo_relative_error = j.value("loo_relative_error", 0.0);
  if (m.intercept < 0.0 || m.slope < 0.0) {
    throw Error(Errc::inconsistent_log, "model coefficients must be non-negative");
  }
  return m;
}

}  // namespace detail

inline nlohmann::json model_file_to_json(const ModelFile& file) {
  nlohmann::json j;
  j["scale_convention"] = "full=1000";
  for (const auto& [id, model] : file.dataset_models) {
    if (detail::reserved_model_keys().count(id)) {
      throw Error(Errc::invalid_config, "dataset id collides with reserved model key: " + id);
    }
    j[id] = detail::model_to_json(model);
  }
  if (file.execution_memory) j["execution_memory"] = detail::model_to_json(*file.execution_memory);
  j["single_machine_shortcut"] = file.single_machine_shortcut;
  j["sample_runs"] = {{"count", file.sample_run_count},
                      {"machines", file.sample_machines},
                      {"cost_machine_seconds", file.sample_cost_machine_seconds}};
  return j;
}

inline ModelFile model_file_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::malformed_log, "model file is not a JSON object");
  ModelFile file;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "scale_convention") continue;
    if (key == "execution_memory") {
      file.execution_memory = detail::model_from_json(*it);
    } else if (key == "single_machine_shortcut") {
      file.single_machine_shortcut = it->get<bool>();
    } else if (key == "sample_runs") {
      file.sample_run_count = it->value("count", 0u);
      file.sample_machines = it->value("machines", 1u);
      file.sample_cost_machine_seconds = it->value("cost_machine_seconds", 0.0);
    } else {
      file.dataset_models[key] = detail::model_from_json(*it);
    }
  }
  return file;
}

inline ModelFile load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::malformed_log, "cannot open model file: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::malformed_log, "model file is not valid JSON: " + path);
  return model_file_from_json(j);
}

}  // namespace blink::predictor
