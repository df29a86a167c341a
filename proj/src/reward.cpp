#include "mavic/reward.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "mavic/error.hpp"

namespace mavic::reward {

using json = nlohmann::json;
using morphology::MorphSchema;
using morphology::MorphVector;
using structured_output::TaskKind;

void MavicConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (!(lambda_hier >= 0.0) || !(lambda_morph >= 0.0)) bad("reward weights must be >= 0");
  if (!(tversky_alpha >= 0.0) || !(tversky_beta >= 0.0)) bad("Tversky alpha/beta must be >= 0");
  if (!(gate_slope_k > 0.0)) bad("gate slope k must be > 0");
  if (!(fuzzy_threshold >= 0.0 && fuzzy_threshold <= 1.0)) bad("fuzzy threshold must be in [0,1]");
  if (!(advantage_epsilon >= 0.0)) bad("advantage epsilon must be >= 0");
}

json MavicConfig::to_json() const {
  return {{"lambda_hier", lambda_hier},
          {"lambda_morph", lambda_morph},
          {"gate_slope_k", gate_slope_k},
          {"tversky_alpha", tversky_alpha},
          {"tversky_beta", tversky_beta},
          {"fuzzy_threshold", fuzzy_threshold},
          {"median_scope", median_scope == MedianScope::Group ? "group" : "batch"},
          {"derm7pt_absent_as_feature", derm7pt_absent_as_feature},
          {"advantage_epsilon", advantage_epsilon}};
}

MavicConfig MavicConfig::from_json(const json& doc) {
  MavicConfig c;
  if (doc.is_null()) return c;
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  try {
    c.lambda_hier = doc.value("lambda_hier", c.lambda_hier);
    c.lambda_morph = doc.value("lambda_morph", c.lambda_morph);
    c.gate_slope_k = doc.value("gate_slope_k", c.gate_slope_k);
    c.tversky_alpha = doc.value("tversky_alpha", c.tversky_alpha);
    c.tversky_beta = doc.value("tversky_beta", c.tversky_beta);
    c.fuzzy_threshold = doc.value("fuzzy_threshold", c.fuzzy_threshold);
    c.derm7pt_absent_as_feature = doc.value("derm7pt_absent_as_feature", c.derm7pt_absent_as_feature);
    c.advantage_epsilon = doc.value("advantage_epsilon", c.advantage_epsilon);
    const auto scope = doc.value("median_scope", std::string("group"));
    if (scope == "group") {
      c.median_scope = MedianScope::Group;
    } else if (scope == "batch") {
      c.median_scope = MedianScope::Batch;
    } else {
      throw Error(ErrorCode::InvalidConfig, "median_scope must be 'group' or 'batch'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

std::optional<char> extract_option_letter(std::string_view text, int n_options) {
  const int count = std::clamp(n_options, 1, 26);
  auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  for (std::size_t i = text.size(); i-- > 0;) {
    const char c = text[i];
    if (c < 'A' || c >= 'A' + count) continue;
    const bool left_ok = i == 0 || !is_word(text[i - 1]);
    const bool right_ok = i + 1 == text.size() || !is_word(text[i + 1]);
    if (left_ok && right_ok) return c;
  }
  return std::nullopt;
}

std::optional<std::string> resolve_ground_truth(std::string_view label,
                                                const ontology::Taxonomy& taxonomy) {
  if (const auto* node = taxonomy.find(label)) return node->id;
  auto outcome = taxonomy.resolve(label, 1.0);
  if (outcome.match_kind == ontology::MatchKind::Exact ||
      outcome.match_kind == ontology::MatchKind::Alias) {
    return outcome.node_id;
  }
  return std::nullopt;
}

int accuracy_reward(const structured_output::ParsedCompletion& parsed, const GroundTruth& gt,
                    TaskKind task, const ontology::Taxonomy& taxonomy, double fuzzy_threshold) {
  if (task == TaskKind::Mcqa) {
    if (!gt.answer_letter || gt.answer_letter->size() != 1) return 0;
    const std::string_view where =
        parsed.final_diagnosis_text ? std::string_view(*parsed.final_diagnosis_text)
                                    : std::string_view(parsed.text);
    const auto letter = extract_option_letter(where, gt.n_options);
    const char want = static_cast<char>(std::toupper(static_cast<unsigned char>((*gt.answer_letter)[0])));
    return letter && *letter == want ? 1 : 0;
  }
  if (!gt.diagnosis || !parsed.final_diagnosis_text) return 0;
  const auto gt_node = resolve_ground_truth(*gt.diagnosis, taxonomy);
  if (!gt_node) return 0;
  const auto pred = taxonomy.resolve(*parsed.final_diagnosis_text, fuzzy_threshold);
  return pred.node_id && *pred.node_id == *gt_node ? 1 : 0;
}

double hier_similarity(std::string_view pred_text, std::string_view gt_node,
                       const ontology::Taxonomy& taxonomy, double fuzzy_threshold) {
  const auto gt_path = taxonomy.path_of(gt_node);
  const auto pred = taxonomy.resolve(pred_text, fuzzy_threshold);
  if (!pred.node_id) return 0.0;
  return ontology::wu_palmer(taxonomy.path_of(*pred.node_id), gt_path);
}

double morph_similarity(const MorphVector& pred, const MorphVector& gt,
                        std::span<const double> weights, double alpha, double beta) {
  if (pred.schema_kind != gt.schema_kind || pred.bits.size() != gt.bits.size()) {
    throw Error(ErrorCode::SchemaMismatch, "predicted and reference morphology use different schemas");
  }
  if (weights.size() != gt.bits.size()) {
    throw Error(ErrorCode::LengthMismatch, "weight vector does not match the schema");
  }
  double tp = 0.0, fp = 0.0, fn = 0.0;
  bool any_active = false;
  for (std::size_t f = 0; f < gt.bits.size(); ++f) {
    const bool p = pred.bits[f];
    const bool g = gt.bits[f];
    any_active = any_active || p || g;
    if (p && g) {
      tp += weights[f];
    } else if (p) {
      fp += weights[f];
    } else if (g) {
      fn += weights[f];
    }
  }
  if (!any_active) return 1.0;
  const double denom = tp + alpha * fp + beta * fn;
  if (tp == 0.0 || denom <= 0.0) return 0.0;
  return tp / denom;
}

double gate(double s_hier, double mu, double k) {
  return 1.0 / (1.0 + std::exp(-k * (s_hier - mu)));
}

double group_median(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyGroup, "median of an empty group");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mavic_reward(int r_acc, double s_hier, double s_morph, double g, int r_fmt,
                    const MavicConfig& config) {
  double total = static_cast<double>(r_acc);
  total += config.lambda_hier * s_hier;
  total += config.lambda_morph * g * s_morph;
  total += static_cast<double>(r_fmt);
  return total;
}

std::vector<double> group_advantages(std::span<const double> totals, double epsilon) {
  if (totals.empty()) throw Error(ErrorCode::EmptyGroup, "advantages of an empty group");
  std::vector<double> adv(totals.size(), 0.0);
  const bool all_equal = std::all_of(totals.begin(), totals.end(),
                                     [&](double r) { return r == totals.front(); });
  if (all_equal) return adv;
  const double n = static_cast<double>(totals.size());
  double mean = 0.0;
  for (double r : totals) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : totals) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  for (std::size_t i = 0; i < totals.size(); ++i) adv[i] = (totals[i] - mean) / (sd + epsilon);
  return adv;
}

namespace {

std::vector<double> lookup_weights(const Rollout& rollout, const std::optional<std::string>& gt_node,
                                   const ScoringContext& context, morphology::SchemaKind kind,
                                   std::vector<std::string>& flags) {
  const auto& schema = MorphSchema::get(kind);
  auto it = context.pmi_tables.find(kind);
  if (it == context.pmi_tables.end() || it->second == nullptr) {
    flags.push_back("pmi_table_missing");
    return std::vector<double>(schema.size(), 1.0 / static_cast<double>(schema.size()));
  }
  const auto& table = *it->second;
  // Table keys may be node ids, canonical names or the raw ground-truth label.
  std::vector<std::string> keys;
  if (gt_node) {
    keys.push_back(*gt_node);
    if (context.taxonomy) keys.push_back(context.taxonomy->node(*gt_node).canonical_name);
  }
  if (rollout.gt.diagnosis) {
    keys.push_back(*rollout.gt.diagnosis);
    keys.push_back(ontology::canonicalize(*rollout.gt.diagnosis));
  }
  for (const auto& key : keys) {
    if (table.contains(key)) return table.weights_for(key).weights;
  }
  flags.push_back("pmi_fallback_uniform");
  return table.weights_for("").weights;
}

}  // namespace

RewardBreakdown score_components(const Rollout& rollout, const ScoringContext& context,
                                 const MavicConfig& config) {
  if (context.taxonomy == nullptr) {
    throw Error(ErrorCode::InvalidInput, "scoring context has no taxonomy");
  }
  const auto& taxonomy = *context.taxonomy;
  RewardBreakdown out;
  const auto parsed = structured_output::extract_tags(rollout.completion_text);
  out.format = structured_output::validate_format(parsed, rollout.modality, rollout.task_kind);
  out.r_fmt = out.format.r_fmt;

  std::optional<std::string> gt_node;
  if (rollout.gt.diagnosis) {
    gt_node = resolve_ground_truth(*rollout.gt.diagnosis, taxonomy);
    if (!gt_node) out.flags.push_back("gt_diagnosis_unresolved");
  }

  out.r_acc = accuracy_reward(parsed, rollout.gt, rollout.task_kind, taxonomy, config.fuzzy_threshold);

  if (gt_node) {
    if (parsed.final_diagnosis_text) {
      out.s_hier = hier_similarity(*parsed.final_diagnosis_text, *gt_node, taxonomy,
                                   config.fuzzy_threshold);
      if (!taxonomy.resolve(*parsed.final_diagnosis_text, config.fuzzy_threshold).resolved()) {
        out.flags.push_back("pred_diagnosis_unresolved");
      }
    } else {
      out.flags.push_back("pred_diagnosis_missing");
    }
  }

  const auto& schema = morphology::schema_for_modality(rollout.modality);
  const morphology::BinarizeOptions bin_opts{config.derm7pt_absent_as_feature};
  if (!rollout.gt.morph || rollout.gt.morph->is_null()) {
    out.morph_term_applied = false;
    out.flags.push_back("gt_morph_missing");
  } else {
    const auto gt_vec = morphology::binarize(*rollout.gt.morph, schema, bin_opts);
    if (!gt_vec.unknown_features.empty()) out.flags.push_back("gt_unknown_features");
    MorphVector pred_vec = morphology::zero_vector(schema);
    if (!parsed.morph_json) {
      out.flags.push_back("pred_morph_missing");
    } else {
      try {
        auto pred = morphology::binarize(*parsed.morph_json, schema, bin_opts);
        if (!pred.unknown_features.empty()) out.flags.push_back("pred_unknown_features");
        pred_vec = std::move(pred.vector);
      } catch (const Error&) {
        out.flags.push_back("pred_morph_unusable");
      }
    }
    const auto weights = lookup_weights(rollout, gt_node, context, schema.kind(), out.flags);
    out.s_morph = morph_similarity(pred_vec, gt_vec.vector, weights, config.tversky_alpha,
                                   config.tversky_beta);
  }
  return out;
}

void apply_threshold(RewardBreakdown& breakdown, double mu, const MavicConfig& config) {
  breakdown.mu = mu;
  breakdown.gate = gate(breakdown.s_hier, mu, config.gate_slope_k);
  const double s_morph = breakdown.morph_term_applied ? breakdown.s_morph : 0.0;
  breakdown.total = mavic_reward(breakdown.r_acc, breakdown.s_hier, s_morph, breakdown.gate,
                                 breakdown.r_fmt, config);
}

namespace {

void finalize_advantages(std::vector<RewardBreakdown>& group, const MavicConfig& config) {
  std::vector<double> totals;
  totals.reserve(group.size());
  for (const auto& b : group) totals.push_back(b.total);
  const auto adv = group_advantages(totals, config.advantage_epsilon);
  for (std::size_t i = 0; i < group.size(); ++i) group[i].advantage = adv[i];
}

double median_s_hier(const std::vector<RewardBreakdown>& rows) {
  std::vector<double> s;
  s.reserve(rows.size());
  for (const auto& b : rows) s.push_back(b.s_hier);
  return group_median(s);
}

}  // namespace

std::vector<RewardBreakdown> score_group(std::span<const Rollout> rollouts,
                                         const ScoringContext& context, const MavicConfig& config) {
  if (rollouts.empty()) throw Error(ErrorCode::EmptyGroup, "cannot score an empty group");
  config.validate();
  std::vector<RewardBreakdown> out;
  out.reserve(rollouts.size());
  for (const auto& r : rollouts) out.push_back(score_components(r, context, config));
  const double mu = median_s_hier(out);
  for (auto& b : out) apply_threshold(b, mu, config);
  finalize_advantages(out, config);
  return out;
}

std::vector<std::vector<RewardBreakdown>> score_batch(const std::vector<std::vector<Rollout>>& groups,
                                                      const ScoringContext& context,
                                                      const MavicConfig& config) {
  if (config.median_scope == MedianScope::Group) {
    std::vector<std::vector<RewardBreakdown>> out;
    out.reserve(groups.size());
    for (const auto& g : groups) out.push_back(score_group(g, context, config));
    return out;
  }
  config.validate();
  std::vector<std::vector<RewardBreakdown>> out;
  std::vector<double> all_s;
  for (const auto& g : groups) {
    if (g.empty()) throw Error(ErrorCode::EmptyGroup, "cannot score an empty group");
    auto& rows = out.emplace_back();
    for (const auto& r : g) {
      rows.push_back(score_components(r, context, config));
      all_s.push_back(rows.back().s_hier);
    }
  }
  if (all_s.empty()) return out;
  const double mu = group_median(all_s);
  for (auto& rows : out) {
    for (auto& b : rows) apply_threshold(b, mu, config);
    finalize_advantages(rows, config);
  }
  return out;
}

Rollout rollout_from_json(const json& record) {
  if (!record.is_object()) throw Error(ErrorCode::InvalidInput, "rollout record must be an object");
  auto str = [&](const char* key) -> std::string {
    auto it = record.find(key);
    if (it == record.end() || it->is_null()) return {};
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    throw Error(ErrorCode::InvalidInput, std::string("rollout field '") + key + "' must be a string");
  };
  auto opt_str = [&](const char* key) -> std::optional<std::string> {
    auto it = record.find(key);
    if (it == record.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
      throw Error(ErrorCode::InvalidInput, std::string("rollout field '") + key + "' must be a string");
    }
    return it->get<std::string>();
  };
  Rollout r;
  r.group_id = str("group_id");
  r.rollout_id = str("rollout_id");
  if (r.group_id.empty()) throw Error(ErrorCode::InvalidInput, "rollout without group_id");
  r.task_kind = structured_output::parse_task_kind(str("task_kind"));
  r.modality = morphology::parse_modality(str("modality"));
  r.completion_text = str("completion_text");
  r.gt.diagnosis = opt_str("gt_diagnosis");
  r.gt.answer_letter = opt_str("gt_answer_letter");
  if (auto it = record.find("gt_morph"); it != record.end() && !it->is_null()) r.gt.morph = *it;
  if (auto it = record.find("n_options"); it != record.end() && it->is_number_integer()) {
    r.gt.n_options = it->get<int>();
  }
  return r;
}

json to_json(const RewardBreakdown& b, const Rollout& rollout) {
  json out = {{"group_id", rollout.group_id},
              {"rollout_id", rollout.rollout_id},
              {"r_acc", b.r_acc},
              {"s_hier", b.s_hier},
              {"s_morph", b.s_morph},
              {"gate", b.gate},
              {"mu", b.mu},
              {"r_fmt", b.r_fmt},
              {"total", b.total},
              {"advantage", b.advantage ? json(*b.advantage) : json()},
              {"morph_term_applied", b.morph_term_applied},
              {"format", b.format.to_json()},
              {"flags", b.flags}};
  return out;
}

}  // namespace mavic::reward
