#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace mavic::cct {

inline constexpr double kSimplexTolerance = 1e-9;

// A probability vector: non-negative entries summing to 1 within 1e-9.
class ProbDist {
 public:
  ProbDist() = default;
  // Validates; throws InvalidDistribution.
  explicit ProbDist(std::vector<double> probs);
  // Scales a non-negative mass vector to sum 1; throws InvalidDistribution
  // when the mass is zero or an entry is negative.
  static ProbDist normalized(std::vector<double> mass);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& values() const noexcept { return probs_; }
  std::span<const double> span() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

// Full vocabulary, or a subset of indices (answer-option tokens) on which the
// mass is renormalized before aggregation.
struct Restriction {
  std::optional<std::vector<std::size_t>> option_indices;

  static Restriction full() { return {}; }
  static Restriction options(std::vector<std::size_t> idx) { return {std::move(idx)}; }
};

struct CctConfig {
  std::size_t k_rollouts = 8;
  double lambda_conf = 1.0;
  double beta_cons = 1.0;
  Restriction restriction;

  void validate() const;  // InvalidConfig
};

struct AggregationResult {
  std::vector<double> confidences;
  std::vector<double> deviations;
  std::vector<double> weights;
  ProbDist aggregate;
};

// Top-1 minus top-2 probability. Throws TooFewOutcomes.
double margin_confidence(const ProbDist& p);
// Margin on the renormalized sub-distribution over `options`.
double margin_confidence(const ProbDist& p, std::span<const std::size_t> options);

// Componentwise mean. Throws EmptyGroup, DimensionMismatch.
ProbDist barycenter(std::span<const ProbDist> dists);

// Half squared Euclidean distance. Throws DimensionMismatch.
double deviation(const ProbDist& p, const ProbDist& pbar);

// D_r for every rollout, with p_r - pbar formed as the mean of the pairwise
// differences p_r - p_s. For K = 2 the two deviations are then bitwise equal.
// Throws EmptyGroup, DimensionMismatch.
std::vector<double> deviations(std::span<const ProbDist> dists);

// softmax_r(lambda C_r - beta D_r). Throws LengthMismatch, EmptyGroup.
std::vector<double> cct_weights(std::span<const double> confidences,
                                std::span<const double> deviations, double lambda, double beta);

// sum_r w_r p_r. Throws DimensionMismatch, LengthMismatch.
ProbDist aggregate(std::span<const ProbDist> dists, std::span<const double> weights);

// Renormalized projection onto the option indices. Throws DimensionMismatch,
// InvalidDistribution (no option mass).
ProbDist restrict_to_options(const ProbDist& p, std::span<const std::size_t> options);

// One aggregation step. With an option restriction, every rollout is first
// projected onto the options, so the result lives on the option simplex.
AggregationResult cct_step(std::span<const ProbDist> dists, const CctConfig& config = {});

enum class Baseline { Vote, MeanProb, ConfOnly, ConsOnly };
Baseline parse_baseline(const std::string& name);  // InvalidInput

// Vote yields the winning option index (ties to the lowest index); the other
// baselines yield a distribution.
using BaselineOutput = std::variant<std::size_t, ProbDist>;
BaselineOutput baseline_aggregate(std::span<const ProbDist> dists, Baseline method,
                                  const CctConfig& config = {});

// Argmax of the first maximal entry.
std::size_t argmax(const ProbDist& p);

// Option index chosen by CCT over option distributions.
std::size_t decide_mcqa(std::span<const ProbDist> dists, const CctConfig& config = {});

// CCT input file: {"options": [labels]|null, "option_indices": [..]?,
// "rollouts": [[probs]...], "lambda", "beta"}.
struct CctInput {
  std::optional<std::vector<std::string>> options;
  std::vector<ProbDist> rollouts;
  CctConfig config;
};
CctInput cct_input_from_json(const nlohmann::json& doc);  // InvalidInput
nlohmann::json to_json(const AggregationResult& result,
                       const std::optional<std::vector<std::string>>& options = std::nullopt);

}  // namespace mavic::cct
