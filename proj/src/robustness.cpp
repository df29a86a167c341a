#include "mavic/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <thread>

#include "mavic/error.hpp"

namespace mavic::robustness {

using json = nlohmann::json;

std::vector<double> project_to_simplex(std::span<const double> v) {
  // Sort-based projection: find the threshold theta with
  // sum max(v_i - theta, 0) = 1.
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - t > 0.0) theta = t;
  }
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::max(v[i] - theta, 0.0);
    sum += out[i];
  }
  for (auto& x : out) x /= sum;
  return out;
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(trial),
                    static_cast<std::uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

namespace {

// Random unit vector in the sum-zero subspace.
std::vector<double> tangent_direction(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    std::vector<double> z(dim);
    double mean = 0.0;
    for (auto& x : z) {
      x = normal(rng);
      mean += x;
    }
    mean /= static_cast<double>(dim);
    double norm = 0.0;
    for (auto& x : z) {
      x -= mean;
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm > 1e-12) {
      for (auto& x : z) x /= norm;
      return z;
    }
  }
}

std::size_t farthest_vertex(const ProbDist& p) {
  // ||e_j - p||^2 = ||p||^2 - 2 p_j + 1, largest at the smallest p_j.
  const auto& v = p.values();
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

double vertex_distance(const ProbDist& p, std::size_t j) {
  std::vector<double> e(p.size(), 0.0);
  e[j] = 1.0;
  return l2_distance(e, p.values());
}

ProbDist along_segment(const ProbDist& from, std::size_t vertex, double s) {
  std::vector<double> out(from.values());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double target = i == vertex ? 1.0 : 0.0;
    out[i] = from[i] + s * (target - from[i]);
  }
  return ProbDist::normalized(std::move(out));
}

[[noreturn]] void infeasible(const std::string& what) {
  throw Error(ErrorCode::InfeasibleGeometry, what);
}

void finish_instance(SeparatedInstance& inst) {
  const std::size_t k = inst.dists.size();
  inst.rho_eff = k == 0 ? 0.0 : static_cast<double>(inst.good.size()) / static_cast<double>(k);
  const ProbDist pbar = cct::barycenter(inst.dists);
  const double gap = inst.delta_eff - inst.eps_eff;
  inst.eta = gap > 0.0 ? l2_distance(pbar.values(), inst.p_star.values()) / gap
                       : std::numeric_limits<double>::infinity();
  inst.gamma_eff.reset();
  if (!inst.good.empty() && !inst.bad.empty()) {
    double max_g = -std::numeric_limits<double>::infinity();
    double min_b = std::numeric_limits<double>::infinity();
    for (auto g : inst.good) max_g = std::max(max_g, cct::deviation(inst.dists[g], pbar));
    for (auto b : inst.bad) min_b = std::min(min_b, cct::deviation(inst.dists[b], pbar));
    inst.gamma_eff = min_b - max_g;
  }
}

}  // namespace

ProbDist ContaminationConfig::target() const {
  if (p_star.empty()) return ProbDist(std::vector<double>(dim, 1.0 / static_cast<double>(dim)));
  return ProbDist(p_star);
}

void ContaminationConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (dim < 2) bad("dimension must be >= 2");
  if (!p_star.empty() && p_star.size() != dim) bad("p_star length differs from dimension");
  if (!(epsilon >= 0.0 && epsilon < 0.5)) bad("contamination rate must be in [0, 0.5)");
  if (!(sigma >= 0.0)) bad("sigma must be >= 0");
  if (!(delta > 0.0)) bad("delta must be > 0");
  if (k < 1) bad("K must be >= 1");
  const ProbDist p = target();
  if (epsilon > 0.0 && vertex_distance(p, farthest_vertex(p)) < delta) {
    throw Error(ErrorCode::InfeasibleGeometry, "no simplex vertex lies at distance >= delta from p_star");
  }
}

MixtureSample sample_mixture(const ContaminationConfig& config, std::uint64_t trial) {
  config.validate();
  auto rng = trial_rng(config.seed, 0, trial);
  std::bernoulli_distribution is_bad(config.epsilon);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ProbDist p_star = config.target();
  const std::size_t vertex = farthest_vertex(p_star);
  const double s_min = config.delta / vertex_distance(p_star, vertex);
  // Tangent-space Gaussian with E||z||^2 = sigma^2.
  const double scale = config.sigma / std::sqrt(static_cast<double>(config.dim - 1));

  MixtureSample out;
  out.dists.reserve(config.k);
  for (std::size_t r = 0; r < config.k; ++r) {
    const bool bad = is_bad(rng);
    out.is_bad.push_back(bad);
    if (bad) {
      const double s = s_min + (1.0 - s_min) * (0.9 + 0.1 * unit(rng));
      out.dists.push_back(along_segment(p_star, vertex, std::min(s, 1.0)));
      continue;
    }
    std::vector<double> z(config.dim);
    double mean = 0.0;
    for (auto& x : z) {
      x = normal(rng);
      mean += x;
    }
    mean /= static_cast<double>(config.dim);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = p_star[i] + scale * (z[i] - mean);
    out.dists.push_back(ProbDist::normalized(project_to_simplex(z)));
  }
  return out;
}

SeparatedInstance construct_separated_instance(std::size_t dim, std::size_t k, double rho,
                                               double eps_eff, double delta_eff,
                                               const ProbDist& p_star, std::uint64_t seed) {
  if (dim < 2 || p_star.size() != dim) infeasible("dimension must be >= 2 and match p_star");
  if (k < 1) infeasible("K must be >= 1");
  if (!(eps_eff > 0.0)) infeasible("eps_eff must be > 0");
  if (!(delta_eff > eps_eff)) infeasible("requires delta_eff > eps_eff");
  if (!(rho > 0.5 && rho <= 1.0)) infeasible("requires 1/2 < rho <= 1");

  const auto n_good = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(k) - 1e-12));
  const std::size_t n_bad = k - n_good;

  std::vector<std::size_t> far;
  for (std::size_t j = 0; j < dim; ++j) {
    if (vertex_distance(p_star, j) >= delta_eff) far.push_back(j);
  }
  if (n_bad > 0 && far.empty()) {
    infeasible("no simplex vertex lies at distance >= delta_eff from p_star");
  }

  auto rng = trial_rng(seed, 1, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ProbDist> points;
  points.reserve(k);
  for (std::size_t i = 0; i < n_good; ++i) {
    const auto u = tangent_direction(dim, rng);
    const double radius = eps_eff * unit(rng);
    std::vector<double> x(dim);
    for (std::size_t d = 0; d < dim; ++d) x[d] = p_star[d] + radius * u[d];
    // Projection onto a convex set containing p* does not move away from p*.
    ProbDist p = ProbDist::normalized(project_to_simplex(x));
    if (l2_distance(p.values(), p_star.values()) > eps_eff) p = p_star;
    points.push_back(std::move(p));
  }
  std::uniform_int_distribution<std::size_t> pick(0, far.empty() ? 0 : far.size() - 1);
  for (std::size_t i = 0; i < n_bad; ++i) {
    const std::size_t vertex = far[pick(rng)];
    const double s_min = delta_eff / vertex_distance(p_star, vertex);
    double s = s_min + (1.0 - s_min) * unit(rng);
    ProbDist p = along_segment(p_star, vertex, std::min(s, 1.0));
    if (l2_distance(p.values(), p_star.values()) < delta_eff) {
      p = along_segment(p_star, vertex, 1.0);
    }
    points.push_back(std::move(p));
  }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  SeparatedInstance inst;
  inst.p_star = p_star;
  inst.eps_eff = eps_eff;
  inst.delta_eff = delta_eff;
  inst.dists.resize(k);
  for (std::size_t slot = 0; slot < k; ++slot) {
    const std::size_t src = order[slot];
    inst.dists[slot] = points[src];
    (src < n_good ? inst.good : inst.bad).push_back(slot);
  }
  finish_instance(inst);
  if (!(inst.eta < 0.5)) {
    infeasible("barycenter condition ||pbar - p*|| <= eta (delta_eff - eps_eff) needs eta < 1/2, got " +
               std::to_string(inst.eta));
  }
  if (inst.gamma_eff && !(*inst.gamma_eff > 0.0)) {
    infeasible("deviation gap min_b D_b - max_g D_g = " + std::to_string(*inst.gamma_eff) +
               " is not positive");
  }
  return inst;
}

SeparatedInstance label_by_radius(std::vector<ProbDist> dists, const ProbDist& p_star,
                                  double eps_eff, double delta_eff) {
  SeparatedInstance inst;
  inst.p_star = p_star;
  inst.eps_eff = eps_eff;
  inst.delta_eff = delta_eff;
  for (std::size_t r = 0; r < dists.size(); ++r) {
    const double d = l2_distance(dists[r].values(), p_star.values());
    if (d <= eps_eff) {
      inst.good.push_back(r);
    } else if (d >= delta_eff) {
      inst.bad.push_back(r);
    } else {
      inst.unassigned.push_back(r);
    }
  }
  inst.dists = std::move(dists);
  finish_instance(inst);
  return inst;
}

bool is_separated(const SeparatedInstance& inst) {
  if (inst.good.empty() && inst.bad.empty()) return false;
  if (!(inst.delta_eff > inst.eps_eff)) return false;
  if (!(inst.rho_eff > 0.5)) return false;
  if (!(inst.eta < 0.5)) return false;
  if (!inst.bad.empty() && !(inst.gamma_eff && *inst.gamma_eff > 0.0)) return false;
  return true;
}

BoundReport verify_bound(const SeparatedInstance& inst, double lambda, double beta,
                         ConfidenceMode mode) {
  const double lam = mode == ConfidenceMode::Margin ? lambda : 0.0;
  cct::CctConfig config;
  config.k_rollouts = inst.dists.size();
  config.lambda_conf = lam;
  config.beta_cons = beta;
  const auto result = cct::cct_step(inst.dists, config);

  BoundReport rep;
  rep.lhs = l2_distance(result.aggregate.values(), inst.p_star.values());
  for (auto b : inst.bad) rep.w_b += result.weights[b];
  for (auto u : inst.unassigned) rep.w_u += result.weights[u];
  for (const auto& p : inst.dists) {
    rep.delta_max = std::max(rep.delta_max, l2_distance(p.values(), inst.p_star.values()));
  }
  rep.c_u = (rep.delta_max - inst.eps_eff) * rep.w_u;
  // With no bad rollouts W_B = 0 and the suppression term vanishes.
  if (!inst.bad.empty() && inst.gamma_eff && inst.rho_eff > 0.0) {
    rep.w_b_bound = (1.0 - inst.rho_eff) / inst.rho_eff * std::exp(-beta * *inst.gamma_eff + lam);
  }
  rep.rhs = inst.eps_eff + rep.c_u + (rep.delta_max - inst.eps_eff) * rep.w_b_bound;
  rep.wb_holds = rep.w_b <= rep.w_b_bound + kBoundSlack;
  rep.bound_holds = rep.lhs <= rep.rhs + kBoundSlack;
  return rep;
}

double suppression_slope(const SeparatedInstance& inst, double lambda,
                         std::span<const double> betas) {
  if (betas.size() < 2) throw Error(ErrorCode::InvalidInput, "slope fit needs at least two betas");
  if (inst.bad.empty()) throw Error(ErrorCode::InvalidInput, "slope fit needs a non-empty bad cluster");
  std::vector<double> ys;
  ys.reserve(betas.size());
  for (double beta : betas) ys.push_back(std::log(verify_bound(inst, lambda, beta).w_b));
  const double n = static_cast<double>(betas.size());
  const double mx = std::accumulate(betas.begin(), betas.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    sxy += (betas[i] - mx) * (ys[i] - my);
    sxx += (betas[i] - mx) * (betas[i] - mx);
  }
  return sxy / sxx;
}

ConstructionDraw random_constructed_instance(std::size_t dim, std::size_t k, std::uint64_t seed,
                                             std::uint64_t trial) {
  auto rng = trial_rng(seed, 2, trial);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::gamma_distribution<double> shape(5.0, 1.0);
  ConstructionDraw out;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<double> mass(dim);
    for (auto& m : mass) m = shape(rng);
    const ProbDist p_star = ProbDist::normalized(std::move(mass));
    const double far = vertex_distance(p_star, farthest_vertex(p_star));
    const double rho = 0.55 + 0.45 * unit(rng);
    const double eps_eff = 0.01 + 0.09 * unit(rng);
    const double delta_eff = eps_eff + (far - eps_eff) * (0.3 + 0.7 * unit(rng));
    const std::uint64_t sub_seed = rng();
    try {
      out.instance = construct_separated_instance(dim, k, rho, eps_eff, delta_eff, p_star, sub_seed);
      return out;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InfeasibleGeometry) throw;
      ++out.infeasible_attempts;
    }
  }
  throw Error(ErrorCode::InfeasibleGeometry, "no feasible construction after 10000 attempts");
}

void SweepConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (ks.empty() || betas.empty() || lambdas.empty()) bad("sweep grids must be non-empty");
  if (trials < 1) bad("trials must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) bad("alpha must be in (0,1)");
  for (double b : betas) {
    if (!(b >= 0.0)) bad("beta values must be >= 0");
  }
  for (double l : lambdas) {
    if (!(l >= 0.0)) bad("lambda values must be >= 0");
  }
  if (mode == SweepMode::Sampled) {
    for (auto k : ks) {
      ContaminationConfig c{dim, {}, epsilon, sigma, delta, seed, k, trials};
      c.validate();
    }
    if (sigma / std::sqrt(alpha) >= std::sqrt(sigma * sigma + delta * delta / 2.0)) {
      throw Error(ErrorCode::InfeasibleGeometry, "good radius sigma/sqrt(alpha) reaches the bad radius");
    }
  } else {
    if (dim < 2) bad("dimension must be >= 2");
    for (auto k : ks) {
      if (k < 1) bad("K must be >= 1");
    }
  }
}

json SweepConfig::to_json() const {
  return {{"mode", mode == SweepMode::Sampled ? "sampled" : "constructed"},
          {"dim", dim},
          {"ks", ks},
          {"epsilon", epsilon},
          {"sigma", sigma},
          {"delta", delta},
          {"alpha", alpha},
          {"betas", betas},
          {"lambdas", lambdas},
          {"trials", trials},
          {"seed", seed}};
}

double SweepCell::separation_rate() const {
  return trials == 0 ? 0.0 : static_cast<double>(separated) / static_cast<double>(trials);
}

double SweepCell::violation_rate() const {
  return separated == 0 ? 0.0
                        : static_cast<double>(wb_violations + bound_violations) /
                              static_cast<double>(2 * separated);
}

std::size_t SweepResult::total_violations() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.wb_violations + c.bound_violations;
  return n;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void SweepResult::write_csv(std::ostream& out) const {
  out << "k,beta,lambda,trials,separated,separation_rate,wb_violations,bound_violations,"
         "violation_rate,mean_lhs,mean_rhs,mean_gap,mean_wb,mean_wb_bound\n";
  for (const auto& c : cells) {
    out << c.k << ',' << fmt17(c.beta) << ',' << fmt17(c.lambda) << ',' << c.trials << ','
        << c.separated << ',' << fmt17(c.separation_rate()) << ',' << c.wb_violations << ','
        << c.bound_violations << ',' << fmt17(c.violation_rate()) << ',' << fmt17(c.mean_lhs)
        << ',' << fmt17(c.mean_rhs) << ',' << fmt17(c.mean_gap) << ',' << fmt17(c.mean_wb) << ','
        << fmt17(c.mean_wb_bound) << '\n';
  }
}

json SweepResult::summary(const SweepConfig& config) const {
  json per_k = json::object();
  for (const auto& c : cells) per_k[std::to_string(c.k)] = c.separation_rate();
  return {{"config", config.to_json()},
          {"cells", cells.size()},
          {"total_violations", total_violations()},
          {"infeasible_attempts", infeasible_attempts},
          {"separation_rate_by_k", per_k}};
}

SweepResult sweep(const SweepConfig& config) {
  config.validate();
  SweepResult result;
  const std::size_t n_cells = config.betas.size() * config.lambdas.size();

  for (std::size_t k : config.ks) {
    struct TrialOutcome {
      bool separated = false;
      std::size_t infeasible = 0;
      std::vector<BoundReport> reports;  // one per (beta, lambda) cell
    };
    std::vector<TrialOutcome> outcomes(config.trials);

    auto run_trial = [&](std::size_t t) {
      TrialOutcome& o = outcomes[t];
      SeparatedInstance inst;
      if (config.mode == SweepMode::Constructed) {
        auto draw = random_constructed_instance(config.dim, k, config.seed, t);
        o.infeasible = draw.infeasible_attempts;
        inst = std::move(draw.instance);
      } else {
        ContaminationConfig c{config.dim, {}, config.epsilon, config.sigma, config.delta,
                              config.seed ^ (0x9E3779B97F4A7C15ULL * k), k, config.trials};
        auto sample = sample_mixture(c, t);
        const double eps_eff = config.sigma / std::sqrt(config.alpha);
        const double delta_eff =
            std::sqrt(config.sigma * config.sigma + config.delta * config.delta / 2.0);
        inst = label_by_radius(std::move(sample.dists), c.target(), eps_eff, delta_eff);
      }
      o.separated = is_separated(inst);
      if (!o.separated) return;
      o.reports.reserve(n_cells);
      for (double beta : config.betas) {
        for (double lambda : config.lambdas) o.reports.push_back(verify_bound(inst, lambda, beta));
      }
    };

    const std::size_t jobs = std::max<std::size_t>(1, std::min(config.jobs, config.trials));
    if (jobs == 1) {
      for (std::size_t t = 0; t < config.trials; ++t) run_trial(t);
    } else {
      std::vector<std::thread> workers;
      std::vector<std::exception_ptr> errors(jobs);
      for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
          try {
            for (std::size_t t = w; t < config.trials; t += jobs) run_trial(t);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& th : workers) th.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }

    // Serial reduction in trial order keeps the output independent of jobs.
    std::size_t cell_index = 0;
    for (double beta : config.betas) {
      for (double lambda : config.lambdas) {
        SweepCell cell;
        cell.k = k;
        cell.beta = beta;
        cell.lambda = lambda;
        cell.trials = config.trials;
        for (const auto& o : outcomes) {
          if (!o.separated) continue;
          const auto& r = o.reports[cell_index];
          ++cell.separated;
          cell.wb_violations += r.wb_holds ? 0 : 1;
          cell.bound_violations += r.bound_holds ? 0 : 1;
          cell.mean_lhs += r.lhs;
          cell.mean_rhs += r.rhs;
          cell.mean_gap += r.rhs - r.lhs;
          cell.mean_wb += r.w_b;
          cell.mean_wb_bound += r.w_b_bound;
        }
        if (cell.separated > 0) {
          const double n = static_cast<double>(cell.separated);
          cell.mean_lhs /= n;
          cell.mean_rhs /= n;
          cell.mean_gap /= n;
          cell.mean_wb /= n;
          cell.mean_wb_bound /= n;
        }
        result.cells.push_back(cell);
        ++cell_index;
      }
    }
    for (const auto& o : outcomes) result.infeasible_attempts += o.infeasible;
  }
  return result;
}

}  // namespace mavic::robustness
