#include "mavic/cct.hpp"

#include <algorithm>
#include <cmath>

#include "mavic/error.hpp"

namespace mavic::cct {

using json = nlohmann::json;

ProbDist::ProbDist(std::vector<double> probs) : probs_(std::move(probs)) {
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::InvalidDistribution, "probabilities must be finite and non-negative");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw Error(ErrorCode::InvalidDistribution,
                "probabilities sum to " + std::to_string(sum) + ", expected 1");
  }
}

ProbDist ProbDist::normalized(std::vector<double> mass) {
  double sum = 0.0;
  for (double m : mass) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw Error(ErrorCode::InvalidDistribution, "mass must be finite and non-negative");
    }
    sum += m;
  }
  if (!(sum > 0.0)) throw Error(ErrorCode::InvalidDistribution, "zero total mass");
  for (auto& m : mass) m /= sum;
  return ProbDist(std::move(mass));
}

void CctConfig::validate() const {
  if (k_rollouts < 1) throw Error(ErrorCode::InvalidConfig, "K must be >= 1");
  if (!(lambda_conf >= 0.0) || !(beta_cons >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "lambda and beta must be >= 0");
  }
}

double margin_confidence(const ProbDist& p) {
  if (p.size() < 2) throw Error(ErrorCode::TooFewOutcomes, "margin needs at least two outcomes");
  double first = -1.0, second = -1.0;
  for (double v : p.values()) {
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  return first - second;
}

double margin_confidence(const ProbDist& p, std::span<const std::size_t> options) {
  return margin_confidence(restrict_to_options(p, options));
}

ProbDist barycenter(std::span<const ProbDist> dists) {
  if (dists.empty()) throw Error(ErrorCode::EmptyGroup, "barycenter of no distributions");
  const std::size_t v = dists.front().size();
  std::vector<double> mean(v, 0.0);
  for (const auto& d : dists) {
    if (d.size() != v) throw Error(ErrorCode::DimensionMismatch, "distributions differ in size");
    for (std::size_t i = 0; i < v; ++i) mean[i] += d[i];
  }
  const double k = static_cast<double>(dists.size());
  for (auto& m : mean) m /= k;
  return ProbDist(std::move(mean));
}

double deviation(const ProbDist& p, const ProbDist& pbar) {
  if (p.size() != pbar.size()) throw Error(ErrorCode::DimensionMismatch, "distributions differ in size");
  double sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - pbar[i];
    sq += d * d;
  }
  return 0.5 * sq;
}

std::vector<double> deviations(std::span<const ProbDist> dists) {
  if (dists.empty()) throw Error(ErrorCode::EmptyGroup, "deviations of no distributions");
  const std::size_t v = dists.front().size();
  for (const auto& d : dists) {
    if (d.size() != v) throw Error(ErrorCode::DimensionMismatch, "distributions differ in size");
  }
  const double k = static_cast<double>(dists.size());
  std::vector<double> out(dists.size(), 0.0);
  for (std::size_t r = 0; r < dists.size(); ++r) {
    double sq = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      double diff = 0.0;
      for (const auto& s : dists) diff += dists[r][i] - s[i];
      diff /= k;
      sq += diff * diff;
    }
    out[r] = 0.5 * sq;
  }
  return out;
}

std::vector<double> cct_weights(std::span<const double> confidences,
                                std::span<const double> deviations, double lambda, double beta) {
  if (confidences.size() != deviations.size()) {
    throw Error(ErrorCode::LengthMismatch, "confidence and deviation counts differ");
  }
  if (confidences.empty()) throw Error(ErrorCode::EmptyGroup, "no rollouts to weight");
  // Shifting D by its minimum leaves the softmax unchanged, and equal
  // deviations then contribute exactly zero.
  const double d_min = *std::min_element(deviations.begin(), deviations.end());
  std::vector<double> w(confidences.size());
  for (std::size_t r = 0; r < w.size(); ++r) {
    w[r] = lambda * confidences[r] - beta * (deviations[r] - d_min);
  }
  const double top = *std::max_element(w.begin(), w.end());
  double z = 0.0;
  for (auto& s : w) {
    s = std::exp(s - top);
    z += s;
  }
  for (auto& s : w) s /= z;
  return w;
}

ProbDist aggregate(std::span<const ProbDist> dists, std::span<const double> weights) {
  if (dists.size() != weights.size()) {
    throw Error(ErrorCode::LengthMismatch, "one weight per distribution required");
  }
  if (dists.empty()) throw Error(ErrorCode::EmptyGroup, "nothing to aggregate");
  const std::size_t v = dists.front().size();
  std::vector<double> q(v, 0.0);
  for (std::size_t r = 0; r < dists.size(); ++r) {
    if (dists[r].size() != v) throw Error(ErrorCode::DimensionMismatch, "distributions differ in size");
    for (std::size_t i = 0; i < v; ++i) q[i] += weights[r] * dists[r][i];
  }
  return ProbDist(std::move(q));
}

ProbDist restrict_to_options(const ProbDist& p, std::span<const std::size_t> options) {
  std::vector<double> mass;
  mass.reserve(options.size());
  for (std::size_t idx : options) {
    if (idx >= p.size()) throw Error(ErrorCode::DimensionMismatch, "option index outside the vocabulary");
    mass.push_back(p[idx]);
  }
  return ProbDist::normalized(std::move(mass));
}

AggregationResult cct_step(std::span<const ProbDist> dists, const CctConfig& config) {
  config.validate();
  if (dists.empty()) throw Error(ErrorCode::EmptyGroup, "cct_step needs at least one rollout");
  std::vector<ProbDist> projected;
  if (config.restriction.option_indices) {
    projected.reserve(dists.size());
    for (const auto& d : dists) projected.push_back(restrict_to_options(d, *config.restriction.option_indices));
    dists = projected;
  }
  AggregationResult out;
  out.confidences.reserve(dists.size());
  for (const auto& d : dists) out.confidences.push_back(margin_confidence(d));
  out.deviations = deviations(dists);
  out.weights = cct_weights(out.confidences, out.deviations, config.lambda_conf, config.beta_cons);
  out.aggregate = aggregate(dists, out.weights);
  return out;
}

Baseline parse_baseline(const std::string& name) {
  if (name == "vote") return Baseline::Vote;
  if (name == "meanprob") return Baseline::MeanProb;
  if (name == "confonly") return Baseline::ConfOnly;
  if (name == "consonly") return Baseline::ConsOnly;
  throw Error(ErrorCode::InvalidInput, "unknown baseline '" + name + "'");
}

std::size_t argmax(const ProbDist& p) {
  const auto& v = p.values();
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

BaselineOutput baseline_aggregate(std::span<const ProbDist> dists, Baseline method,
                                  const CctConfig& config) {
  switch (method) {
    case Baseline::Vote: {
      if (dists.empty()) throw Error(ErrorCode::EmptyGroup, "vote needs at least one rollout");
      std::vector<std::size_t> votes;
      for (const auto& d : dists) {
        const ProbDist p = config.restriction.option_indices
                               ? restrict_to_options(d, *config.restriction.option_indices)
                               : d;
        const std::size_t choice = argmax(p);
        if (votes.size() <= choice) votes.resize(choice + 1, 0);
        ++votes[choice];
      }
      return static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
    case Baseline::MeanProb: {
      if (!config.restriction.option_indices) return barycenter(dists);
      std::vector<ProbDist> projected;
      for (const auto& d : dists) projected.push_back(restrict_to_options(d, *config.restriction.option_indices));
      return barycenter(projected);
    }
    case Baseline::ConfOnly: {
      CctConfig c = config;
      c.beta_cons = 0.0;
      return cct_step(dists, c).aggregate;
    }
    case Baseline::ConsOnly: {
      CctConfig c = config;
      c.lambda_conf = 0.0;
      return cct_step(dists, c).aggregate;
    }
  }
  throw Error(ErrorCode::InvalidInput, "unknown baseline");
}

std::size_t decide_mcqa(std::span<const ProbDist> dists, const CctConfig& config) {
  return argmax(cct_step(dists, config).aggregate);
}

CctInput cct_input_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("rollouts") || !doc.at("rollouts").is_array()) {
    throw Error(ErrorCode::InvalidInput, "CCT input needs a 'rollouts' array");
  }
  CctInput in;
  try {
    in.config.lambda_conf = doc.value("lambda", 1.0);
    in.config.beta_cons = doc.value("beta", 1.0);
    if (auto it = doc.find("options"); it != doc.end() && !it->is_null()) {
      in.options = it->get<std::vector<std::string>>();
    }
    if (auto it = doc.find("option_indices"); it != doc.end() && !it->is_null()) {
      in.config.restriction = Restriction::options(it->get<std::vector<std::size_t>>());
    }
    const bool option_space = in.options && !in.config.restriction.option_indices;
    for (const auto& row : doc.at("rollouts")) {
      auto probs = row.get<std::vector<double>>();
      if (option_space && probs.size() != in.options->size()) {
        throw Error(ErrorCode::DimensionMismatch, "rollout length differs from the option count");
      }
      // Option-token probabilities come from a larger vocabulary and need
      // not sum to one.
      in.rollouts.push_back(option_space ? ProbDist::normalized(std::move(probs))
                                         : ProbDist(std::move(probs)));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("CCT input: ") + e.what());
  }
  if (in.options && in.config.restriction.option_indices &&
      in.options->size() != in.config.restriction.option_indices->size()) {
    throw Error(ErrorCode::LengthMismatch, "options and option_indices differ in length");
  }
  in.config.k_rollouts = std::max<std::size_t>(1, in.rollouts.size());
  in.config.validate();
  return in;
}

json to_json(const AggregationResult& result, const std::optional<std::vector<std::string>>& options) {
  json out = {{"k", result.weights.size()},
              {"confidences", result.confidences},
              {"deviations", result.deviations},
              {"weights", result.weights},
              {"aggregate", result.aggregate.values()}};
  const std::size_t choice = argmax(result.aggregate);
  out["argmax"] = choice;
  if (options && choice < options->size()) out["decision"] = (*options)[choice];
  return out;
}

}  // namespace mavic::cct
