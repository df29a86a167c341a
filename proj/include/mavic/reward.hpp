#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mavic/morphology.hpp"
#include "mavic/ontology.hpp"
#include "mavic/pmi.hpp"
#include "mavic/structured_output.hpp"

namespace mavic::reward {

// Population over which the gate threshold (median S_hier) is taken.
enum class MedianScope { Group, Batch };

struct MavicConfig {
  double lambda_hier = 1.0;
  double lambda_morph = 1.0;
  double gate_slope_k = 10.0;
  double tversky_alpha = 0.7;
  double tversky_beta = 0.3;
  double fuzzy_threshold = ontology::kDefaultFuzzyThreshold;
  MedianScope median_scope = MedianScope::Group;
  bool derm7pt_absent_as_feature = true;
  double advantage_epsilon = 1e-8;

  void validate() const;  // InvalidConfig
  nlohmann::json to_json() const;
  static MavicConfig from_json(const nlohmann::json& doc);  // InvalidConfig
};

struct GroundTruth {
  std::optional<std::string> diagnosis;      // node id, name or alias
  std::optional<nlohmann::json> morph;       // same shapes binarize() accepts
  std::optional<std::string> answer_letter;  // MCQA
  int n_options = 5;                         // MCQA letters A..
};

struct Rollout {
  std::string group_id;
  std::string rollout_id;
  structured_output::TaskKind task_kind = structured_output::TaskKind::Reasoning;
  morphology::Modality modality = morphology::Modality::Dermoscopic;
  std::string completion_text;
  GroundTruth gt;
};

struct RewardBreakdown {
  int r_acc = 0;
  double s_hier = 0.0;
  double s_morph = 0.0;
  double gate = 0.0;
  double mu = 0.0;
  int r_fmt = 0;
  double total = 0.0;
  std::optional<double> advantage;  // set by group scoring
  bool morph_term_applied = true;   // false when gt morph is absent
  structured_output::FormatReport format;
  std::vector<std::string> flags;
};

// Tables are keyed by schema; a missing table means uniform weights.
struct ScoringContext {
  const ontology::Taxonomy* taxonomy = nullptr;
  std::map<morphology::SchemaKind, const pmi::PmiTable*> pmi_tables;
};

// First standalone option letter in [A, A + n_options) found scanning from the
// end of the text, so "A lesion like this is B" gives B. Standalone means no
// ASCII letter or digit on either side.
std::optional<char> extract_option_letter(std::string_view text, int n_options = 5);

// The taxonomy node named by a ground-truth label: id first, then exact or
// alias match on the canonical label.
std::optional<std::string> resolve_ground_truth(std::string_view label,
                                                const ontology::Taxonomy& taxonomy);

int accuracy_reward(const structured_output::ParsedCompletion& parsed, const GroundTruth& gt,
                    structured_output::TaskKind task, const ontology::Taxonomy& taxonomy,
                    double fuzzy_threshold = ontology::kDefaultFuzzyThreshold);

// Wu-Palmer similarity of the resolved prediction to the ground-truth node;
// 0 when the prediction does not resolve. Throws UnknownNode for a bad gt.
double hier_similarity(std::string_view pred_text, std::string_view gt_node,
                       const ontology::Taxonomy& taxonomy,
                       double fuzzy_threshold = ontology::kDefaultFuzzyThreshold);

// PMI-weighted Tversky index TP / (TP + alpha FP + beta FN). Both active sets
// empty scores 1. Throws SchemaMismatch, LengthMismatch.
double morph_similarity(const morphology::MorphVector& pred, const morphology::MorphVector& gt,
                        std::span<const double> weights, double alpha = 0.7,
                        double beta = 0.3);

// Logistic gate 1 / (1 + exp(-k (s_hier - mu))).
double gate(double s_hier, double mu, double k = 10.0);

// Middle order statistic; mean of the two middle ones for even counts.
// Throws EmptyGroup.
double group_median(std::span<const double> values);

// r_acc + lambda_hier s_hier + lambda_morph g s_morph + r_fmt, summed left to right.
double mavic_reward(int r_acc, double s_hier, double s_morph, double g, int r_fmt,
                    const MavicConfig& config = {});

// (R_i - mean) / (std + eps) with the population std; all-equal rewards give
// all-zero advantages. Throws EmptyGroup.
std::vector<double> group_advantages(std::span<const double> totals, double epsilon = 1e-8);

// Components of one rollout before the group threshold is known; gate, mu,
// total and advantage are left unset.
RewardBreakdown score_components(const Rollout& rollout, const ScoringContext& context,
                                 const MavicConfig& config);

// Fills gate, mu and total given the threshold.
void apply_threshold(RewardBreakdown& breakdown, double mu, const MavicConfig& config);

// Scores K rollouts of one prompt: components, group-median gate, totals and
// advantages. Throws EmptyGroup.
std::vector<RewardBreakdown> score_group(std::span<const Rollout> rollouts,
                                         const ScoringContext& context,
                                         const MavicConfig& config = {});

// Scores several groups; with MedianScope::Batch the gate threshold is the
// median over every rollout in the batch. Advantages stay per group.
std::vector<std::vector<RewardBreakdown>> score_batch(
    const std::vector<std::vector<Rollout>>& groups, const ScoringContext& context,
    const MavicConfig& config = {});

// Rollout JSONL record <-> Rollout, and breakdown output records.
Rollout rollout_from_json(const nlohmann::json& record);  // InvalidInput
nlohmann::json to_json(const RewardBreakdown& breakdown, const Rollout& rollout);

}  // namespace mavic::reward
