#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "blink/errors.hpp"
#include "blink/log_model.hpp"
#include "blink/units.hpp"

// Planning of the lightweight sample runs. Three tiny scales (defaults 0.1%,
// 0.2%, 0.3% of the full input) are executed on a single machine. Two
// sampling methods exist:
//
//   BLOCK_N  keep the configured block size and select a proportional number
//            of whole blocks, so the task count tracks the data scale;
//   BLOCK_S  keep the original block count and shrink the per-block size,
//            for inputs with too few blocks to select whole ones.

namespace blink::sampler {

enum class SampleMethod { block_n, block_s };

inline const char* to_string(SampleMethod m) {
  return m == SampleMethod::block_n ? "block_n" : "block_s";
}

struct SamplePlan {
  SampleMethod method = SampleMethod::block_n;
  std::vector<double> scales;                 // strictly increasing, all in (0, 1)
  std::vector<std::uint64_t> per_scale_blocks;  // BLOCK_N only
  std::vector<Bytes> per_scale_block_size;      // BLOCK_S only
  std::uint64_t total_blocks = 0;               // block count of the full input
  std::uint32_t machines = 1;                   // sample runs always use one machine
};

enum class MonitorAction { continue_run, recommend_single_machine, rerun_lower_scale };

struct MonitorDecision {
  MonitorAction kind = MonitorAction::continue_run;
  std::vector<double> replacement_scales;  // filled for rerun_lower_scale
};

// How often a plan may be contracted before giving up; the monitor halves the
// scales on each rerun.
inline constexpr int kMaxRerunAttempts = 3;
inline constexpr double kRerunScaleFactor = 0.5;

// Default relative LOO-CV error above which additional sample runs are
// suggested.
inline constexpr double kAdaptiveErrorThreshold = 0.30;

inline std::vector<double> default_scales() { return {0.001, 0.002, 0.003}; }

namespace detail {

inline void validate_scales(const std::vector<double>& scales) {
  if (scales.empty()) throw Error(Errc::invalid_scale, "no sampling scales given");
  double prev = 0.0;
  for (double s : scales) {
    if (s <= 0.0 || s >= 1.0) {
      throw Error(Errc::invalid_scale, "sampling scales must lie strictly in (0, 1)");
    }
    if (s <= prev) throw Error(Errc::invalid_scale, "sampling scales must be strictly increasing");
    prev = s;
  }
}

// Block counts are anchored on the smallest scale and extended by the scale
// ratios, which keeps them exactly proportional up to rounding (0.1% of a
// 16K-block input gives 16 blocks, then 32 and 48 for 0.2% and 0.3%).
inline std::vector<std::uint64_t> proportional_blocks(const std::vector<double>& scales,
                                                      std::uint64_t anchor_blocks) {
  std::vector<std::uint64_t> blocks;
  blocks.reserve(scales.size());
  for (double s : scales) {
    const double exact = static_cast<double>(anchor_blocks) * s / scales.front();
    blocks.push_back(static_cast<std::uint64_t>(std::max<std::int64_t>(1, round_half_up(exact))));
  }
  return blocks;
}

inline bool strictly_increasing(const std::vector<std::uint64_t>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] <= v[i - 1]) return false;
  }
  return true;
}

}  // namespace detail

// Decides the sampling method and per-scale block geometry for an input of
// total_bytes split into blocks of block_size.
inline SamplePlan plan_samples(Bytes total_bytes, Bytes block_size,
                               std::vector<double> scales = default_scales()) {
  if (total_bytes == 0) throw Error(Errc::empty_input, "input is empty");
  if (block_size == 0) throw Error(Errc::empty_input, "block size must be > 0");
  detail::validate_scales(scales);

  SamplePlan plan;
  plan.scales = std::move(scales);
  plan.total_blocks = ceil_div(total_bytes, block_size);
  plan.machines = 1;

  const std::int64_t anchor =
      round_half_up(plan.scales.front() * static_cast<double>(plan.total_blocks));
  if (anchor >= 1) {
    auto blocks = detail::proportional_blocks(plan.scales, static_cast<std::uint64_t>(anchor));
    if (detail::strictly_increasing(blocks)) {
      plan.method = SampleMethod::block_n;
      plan.per_scale_blocks = std::move(blocks);
      return plan;
    }
  }

  // Too few blocks to pick whole ones proportionally: keep the block count
  // and shrink the block size instead.
  plan.method = SampleMethod::block_s;
  plan.per_scale_block_size.reserve(plan.scales.size());
  for (double s : plan.scales) {
    const double shrunk =
        s * static_cast<double>(total_bytes) / static_cast<double>(plan.total_blocks);
    plan.per_scale_block_size.push_back(std::max<Bytes>(1, round_bytes(shrunk)));
  }
  return plan;
}

// Watches a finished (or aborted) sample run for the atypical cases: an
// application that caches nothing is sent straight to a single machine, and a
// run that evicted is redone at half the scales. current_scales is the
// monitored plan's scale list.
inline MonitorDecision monitor_sample_run(const logmodel::SampleRunLog& log,
                                          const std::vector<double>& current_scales) {
  MonitorDecision decision;
  if (log.cached_datasets.empty()) {
    decision.kind = MonitorAction::recommend_single_machine;
    return decision;
  }
  if (log.eviction_occurred) {
    decision.kind = MonitorAction::rerun_lower_scale;
    decision.replacement_scales.reserve(current_scales.size());
    for (double s : current_scales) decision.replacement_scales.push_back(s * kRerunScaleFactor);
    return decision;
  }
  decision.kind = MonitorAction::continue_run;
  return decision;
}

struct ExtendResult {
  SamplePlan plan;
  bool extended = false;   // a scale was appended
  bool saturated = false;  // wanted to extend but the plan is at its limit
};

// Adaptive sampling: when the cross-validated relative error of the fitted
// models exceeds the threshold, append the next scale of the plan's
// arithmetic progression (one run per call), up to max_runs scales.
inline ExtendResult adaptive_extend(const SamplePlan& plan, double cv_relative_error,
                                    double threshold, std::uint32_t max_runs) {
  if (threshold <= 0.0) throw Error(Errc::threshold_invalid, "threshold must be > 0");
  if (cv_relative_error < 0.0) {
    throw Error(Errc::invalid_config, "relative error must be >= 0");
  }
  if (plan.scales.size() < 2) {
    throw Error(Errc::invalid_config, "adaptive extension needs a plan with >= 2 scales");
  }

  ExtendResult result{plan, false, false};
  if (cv_relative_error <= threshold) return result;
  if (plan.scales.size() >= max_runs) {
    result.saturated = true;
    return result;
  }

  const double step = plan.scales[1] - plan.scales[0];
  const double next = plan.scales.back() + step;
  if (next >= 1.0) {  // scales must stay below the full input
    result.saturated = true;
    return result;
  }

  result.plan.scales.push_back(next);
  if (plan.method == SampleMethod::block_n) {
    const double anchor = static_cast<double>(plan.per_scale_blocks.front());
    const double exact = anchor * next / plan.scales.front();
    result.plan.per_scale_blocks.push_back(
        static_cast<std::uint64_t>(std::max<std::int64_t>(1, round_half_up(exact))));
  } else {
    const double anchor = static_cast<double>(plan.per_scale_block_size.front());
    const double exact = anchor * next / plan.scales.front();
    result.plan.per_scale_block_size.push_back(std::max<Bytes>(1, round_bytes(exact)));
  }
  result.extended = true;
  return result;
}

inline nlohmann::json plan_to_json(const SamplePlan& plan) {
  nlohmann::json j;
  j["method"] = to_string(plan.method);
  j["scales"] = plan.scales;
  j["machines"] = plan.machines;
  j["total_blocks"] = plan.total_blocks;
  if (plan.method == SampleMethod::block_n) {
    j["per_scale_blocks"] = plan.per_scale_blocks;
  } else {
    j["per_scale_block_size_bytes"] = plan.per_scale_block_size;
  }
  return j;
}

}  // namespace blink::sampler
