#include "mavic/c_api.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "mavic/cct.hpp"
#include "mavic/error.hpp"
#include "mavic/ontology.hpp"
#include "mavic/pmi.hpp"
#include "mavic/reward.hpp"

struct mavic_context {
  mavic::ontology::Taxonomy taxonomy;
  std::vector<std::unique_ptr<mavic::pmi::PmiTable>> tables;
  mavic::reward::MavicConfig config;
  mavic::reward::ScoringContext scoring;
};

namespace {

using json = nlohmann::json;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

int fail(char** error_json, mavic::ErrorCode code, const std::string& message) {
  if (error_json) {
    *error_json = dup_string(json{{"error", mavic::to_string(code)}, {"message", message}}.dump());
  }
  return 1 + static_cast<int>(code);
}

template <typename Fn>
int guarded(char** error_json, Fn&& fn) {
  try {
    fn();
    return 0;
  } catch (const mavic::Error& e) {
    return fail(error_json, e.code(), e.what());
  } catch (const std::exception& e) {
    return fail(error_json, mavic::ErrorCode::InvalidInput, e.what());
  }
}

std::vector<mavic::cct::ProbDist> rows(const double* probs, size_t k, size_t v) {
  if (probs == nullptr && k > 0) {
    throw mavic::Error(mavic::ErrorCode::InvalidInput, "null probability array");
  }
  std::vector<mavic::cct::ProbDist> out;
  out.reserve(k);
  for (size_t r = 0; r < k; ++r) out.emplace_back(std::vector<double>(probs + r * v, probs + (r + 1) * v));
  return out;
}

mavic::cct::CctConfig make_config(size_t k, double lambda, double beta, const size_t* option_indices,
                                  size_t n_options) {
  mavic::cct::CctConfig config;
  config.k_rollouts = k == 0 ? 1 : k;
  config.lambda_conf = lambda;
  config.beta_cons = beta;
  if (n_options > 0) {
    if (option_indices == nullptr) {
      throw mavic::Error(mavic::ErrorCode::InvalidInput, "null option index array");
    }
    config.restriction = mavic::cct::Restriction::options({option_indices, option_indices + n_options});
  }
  return config;
}

}  // namespace

extern "C" {

const char* mavic_version(void) { return "0.1.0"; }

int mavic_context_load(const char* taxonomy_path, const char* const* pmi_paths, size_t n_pmi,
                       const char* config_json, mavic_context** out, char** error_json) {
  return guarded(error_json, [&] {
    if (out == nullptr || taxonomy_path == nullptr) {
      throw mavic::Error(mavic::ErrorCode::InvalidInput, "null argument");
    }
    auto config = config_json ? mavic::reward::MavicConfig::from_json(json::parse(config_json))
                              : mavic::reward::MavicConfig{};
    auto ctx = std::unique_ptr<mavic_context>(
        new mavic_context{mavic::ontology::load_taxonomy(taxonomy_path), {}, config, {}});
    for (size_t i = 0; i < n_pmi; ++i) {
      auto table = std::make_unique<mavic::pmi::PmiTable>(mavic::pmi::load_table(pmi_paths[i]));
      ctx->scoring.pmi_tables[table->schema_kind()] = table.get();
      ctx->tables.push_back(std::move(table));
    }
    ctx->scoring.taxonomy = &ctx->taxonomy;
    *out = ctx.release();
  });
}

void mavic_context_free(mavic_context* ctx) { delete ctx; }

int mavic_score_group(const mavic_context* ctx, const char* rollouts_json, char** out_json,
                      char** error_json) {
  return guarded(error_json, [&] {
    if (ctx == nullptr || rollouts_json == nullptr || out_json == nullptr) {
      throw mavic::Error(mavic::ErrorCode::InvalidInput, "null argument");
    }
    const auto doc = json::parse(rollouts_json);
    if (!doc.is_array()) throw mavic::Error(mavic::ErrorCode::InvalidInput, "expected a JSON array");
    std::vector<mavic::reward::Rollout> group;
    for (const auto& rec : doc) group.push_back(mavic::reward::rollout_from_json(rec));
    const auto scored = mavic::reward::score_group(group, ctx->scoring, ctx->config);
    json out = json::array();
    for (size_t i = 0; i < group.size(); ++i) out.push_back(mavic::reward::to_json(scored[i], group[i]));
    *out_json = dup_string(out.dump());
  });
}

int mavic_cct_step(const double* probs, size_t k, size_t v, double lambda, double beta,
                   const size_t* option_indices, size_t n_options, double* out_confidences,
                   double* out_deviations, double* out_weights, double* out_aggregate,
                   char** error_json) {
  return guarded(error_json, [&] {
    const auto dists = rows(probs, k, v);
    const auto res = mavic::cct::cct_step(dists, make_config(k, lambda, beta, option_indices, n_options));
    auto copy = [](const std::vector<double>& src, double* dst) {
      if (dst) std::memcpy(dst, src.data(), src.size() * sizeof(double));
    };
    copy(res.confidences, out_confidences);
    copy(res.deviations, out_deviations);
    copy(res.weights, out_weights);
    copy(res.aggregate.values(), out_aggregate);
  });
}

int mavic_decide_mcqa(const double* probs, size_t k, size_t v, double lambda, double beta,
                      const size_t* option_indices, size_t n_options, size_t* out_choice,
                      char** error_json) {
  return guarded(error_json, [&] {
    if (out_choice == nullptr) throw mavic::Error(mavic::ErrorCode::InvalidInput, "null argument");
    const auto dists = rows(probs, k, v);
    *out_choice = mavic::cct::decide_mcqa(dists, make_config(k, lambda, beta, option_indices, n_options));
  });
}

void mavic_string_free(char* s) { std::free(s); }

}  // extern "C"
