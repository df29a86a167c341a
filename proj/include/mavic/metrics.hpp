#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace mavic::metrics {

// min_k acc_k / max_k acc_k. Throws AllZeroAccuracies, InvalidInput.
double fairness_ratio(std::span<const double> group_accuracies);

struct JudgeCounts {
  double supported = 0;
  double partial = 0;
  double contradicted = 0;
  double missing = 0;
  double vague = 0;
  double extra_incorrect = 0;
  double total_ref_claims = 0;

  // Labeled claims exceed the stated total: the judge output is malformed.
  bool inconsistent() const noexcept;
  static JudgeCounts from_json(const nlohmann::json& doc);  // InvalidInput
};

// Half-away-from-zero rounding to one decimal.
double round1(double x);

// round(100 * max(0, recall - 0.5 * penalty), 1) with
// recall = (supported + 0.5 partial) / max(1, total) and
// penalty = min(1, (contradicted + extra_incorrect) / max(1, total)).
double judge_overall(const JudgeCounts& counts);

// round(0.5 * reasoning + 0.5 * diagnosis, 1).
double combined_overall(double reasoning_score, double diagnosis_score);

// Ranks starting at 1; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

struct Agreement {
  std::optional<double> pearson_r;     // empty when either series is constant
  std::optional<double> spearman_rho;
  double mean_diff = 0.0;  // mean of (b - a)
  double mae = 0.0;

  nlohmann::json to_json() const;
};

// Requires at least two pairs (InvalidInput).
Agreement agreement(std::span<const std::pair<double, double>> pairs);

// Pearson correlation; throws ConstantSeries on zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace mavic::metrics
