#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mavic/cct.hpp"

namespace mavic::robustness {

using cct::ProbDist;

// Euclidean projection of an arbitrary vector onto the probability simplex.
std::vector<double> project_to_simplex(std::span<const double> v);

double l2_distance(std::span<const double> a, std::span<const double> b);

// Per-trial generator seeded from (seed, stream, trial); streams keep
// independent uses of the same seed apart.
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial);

struct ContaminationConfig {
  std::size_t dim = 10;
  std::vector<double> p_star;  // empty: uniform 1/dim
  double epsilon = 0.1;        // contamination rate, < 1/2
  double sigma = 0.05;         // good-component spread, E||p - p*||^2 <= sigma^2
  double delta = 0.9;          // bad draws lie at distance >= delta from p*
  std::uint64_t seed = 0;
  std::size_t k = 8;
  std::size_t trials = 100;

  ProbDist target() const;
  void validate() const;  // InvalidConfig
};

struct MixtureSample {
  std::vector<ProbDist> dists;
  std::vector<bool> is_bad;  // latent labels, for verification only
};

// Draws K rollouts from (1-eps) D_G + eps D_B. Good draws are p* plus an
// isotropic tangent-space Gaussian of total variance sigma^2, projected onto
// the simplex; bad draws sit on the segment from p* to the vertex farthest
// from p*, near that vertex and at distance >= delta.
MixtureSample sample_mixture(const ContaminationConfig& config, std::uint64_t trial = 0);

struct SeparatedInstance {
  std::vector<ProbDist> dists;
  ProbDist p_star;
  std::vector<std::size_t> good;        // G_eff
  std::vector<std::size_t> bad;         // B_eff
  std::vector<std::size_t> unassigned;  // U_eff
  double eps_eff = 0.0;
  double delta_eff = 0.0;
  double rho_eff = 0.0;  // |G_eff| / K
  double eta = 0.0;      // ||pbar - p*|| / (delta_eff - eps_eff)
  // min_b D_b - max_g D_g; empty when either cluster is empty.
  std::optional<double> gamma_eff;
};

// Places ceil(rho K) points within eps_eff of p* and the rest at distance
// >= delta_eff, then checks the barycenter (eta < 1/2) and gap (gamma > 0)
// conditions. Throws InfeasibleGeometry naming the violated inequality.
SeparatedInstance construct_separated_instance(std::size_t dim, std::size_t k, double rho,
                                               double eps_eff, double delta_eff,
                                               const ProbDist& p_star, std::uint64_t seed);

// Labels a sample by radius: G = {||p - p*|| <= eps_eff},
// B = {||p - p*|| >= delta_eff}, U = the rest.
SeparatedInstance label_by_radius(std::vector<ProbDist> dists, const ProbDist& p_star,
                                  double eps_eff, double delta_eff);

// Whether the labeled instance meets the separation premises: rho > 1/2,
// eta < 1/2, delta_eff > eps_eff, and a positive D-gap when B is non-empty.
bool is_separated(const SeparatedInstance& instance);

enum class ConfidenceMode { Margin, None };

struct BoundReport {
  double lhs = 0.0;  // ||q - p*||
  double rhs = 0.0;
  double w_b = 0.0;
  double w_b_bound = 0.0;
  double w_u = 0.0;
  double c_u = 0.0;
  double delta_max = 0.0;
  bool wb_holds = false;
  bool bound_holds = false;
};

inline constexpr double kBoundSlack = 1e-12;

// Runs CCT on the instance and evaluates both suppression inequalities.
// ConfidenceMode::None drops the margin term (lambda = 0 in weights and bound).
BoundReport verify_bound(const SeparatedInstance& instance, double lambda, double beta,
                         ConfidenceMode mode = ConfidenceMode::Margin);

// Least-squares slope of log W_B against beta.
double suppression_slope(const SeparatedInstance& instance, double lambda,
                         std::span<const double> betas);

// Seeded draw of construction parameters (rho, eps_eff, delta_eff, p*) for
// the constructed-instance sweep; retries until feasible.
struct ConstructionDraw {
  SeparatedInstance instance;
  std::size_t infeasible_attempts = 0;
};
ConstructionDraw random_constructed_instance(std::size_t dim, std::size_t k, std::uint64_t seed,
                                             std::uint64_t trial);

enum class SweepMode { Sampled, Constructed };

struct SweepConfig {
  SweepMode mode = SweepMode::Sampled;
  std::size_t dim = 10;
  std::vector<std::size_t> ks = {8};
  double epsilon = 0.1;
  double sigma = 0.05;
  double delta = 0.9;
  double alpha = 0.1;  // Markov level: eps_eff = sigma / sqrt(alpha)
  std::vector<double> betas = {0.5, 1, 2, 4, 8};
  std::vector<double> lambdas = {0, 0.5, 1};
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  void validate() const;  // InvalidConfig
  nlohmann::json to_json() const;
};

struct SweepCell {
  std::size_t k = 0;
  double beta = 0.0;
  double lambda = 0.0;
  std::size_t trials = 0;
  std::size_t separated = 0;
  std::size_t wb_violations = 0;
  std::size_t bound_violations = 0;
  double mean_lhs = 0.0;
  double mean_rhs = 0.0;
  double mean_gap = 0.0;  // rhs - lhs
  double mean_wb = 0.0;
  double mean_wb_bound = 0.0;

  double separation_rate() const;
  double violation_rate() const;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::size_t infeasible_attempts = 0;

  std::size_t total_violations() const;
  void write_csv(std::ostream& out) const;
  nlohmann::json summary(const SweepConfig& config) const;
};

SweepResult sweep(const SweepConfig& config);

}  // namespace mavic::robustness
