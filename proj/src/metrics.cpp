#include "mavic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mavic/error.hpp"

namespace mavic::metrics {

double fairness_ratio(std::span<const double> acc) {
  if (acc.empty()) throw Error(ErrorCode::InvalidInput, "fairness ratio needs at least one group");
  for (double a : acc) {
    if (!std::isfinite(a) || a < 0.0) {
      throw Error(ErrorCode::InvalidInput, "group accuracies must be finite and non-negative");
    }
  }
  const auto [lo, hi] = std::minmax_element(acc.begin(), acc.end());
  if (!(*hi > 0.0)) throw Error(ErrorCode::AllZeroAccuracies, "every group accuracy is zero");
  return *lo / *hi;
}

bool JudgeCounts::inconsistent() const noexcept {
  return supported + partial + contradicted + missing + vague > total_ref_claims;
}

JudgeCounts JudgeCounts::from_json(const nlohmann::json& doc) {
  const nlohmann::json& c = doc.contains("counts") ? doc.at("counts") : doc;
  if (!c.is_object()) throw Error(ErrorCode::InvalidInput, "judge counts must be an object");
  JudgeCounts out;
  auto read = [&](const char* key, double& field) {
    if (auto it = c.find(key); it != c.end()) {
      if (!it->is_number() || it->get<double>() < 0.0) {
        throw Error(ErrorCode::InvalidInput, std::string("count '") + key + "' must be a non-negative number");
      }
      field = it->get<double>();
    }
  };
  read("supported", out.supported);
  read("partial", out.partial);
  read("contradicted", out.contradicted);
  read("missing", out.missing);
  read("vague", out.vague);
  read("extra_incorrect", out.extra_incorrect);
  read("total_ref_claims", out.total_ref_claims);
  return out;
}

double round1(double x) {
  // Scale in long double so values like 51.25 land exactly on the half.
  const long double scaled = static_cast<long double>(x) * 10.0L;
  return static_cast<double>(std::round(scaled) / 10.0L);
}

double judge_overall(const JudgeCounts& c) {
  const double denom = std::max(1.0, c.total_ref_claims);
  const double recall = (c.supported + 0.5 * c.partial) / denom;
  const double penalty = std::min(1.0, (c.contradicted + c.extra_incorrect) / denom);
  return round1(100.0 * std::max(0.0, recall - 0.5 * penalty));
}

double combined_overall(double reasoning_score, double diagnosis_score) {
  return round1(0.5 * reasoning_score + 0.5 * diagnosis_score);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::InvalidInput, "correlation needs two equal-length series of size >= 2");
  }
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw Error(ErrorCode::ConstantSeries, "constant series");
  return sab / std::sqrt(saa * sbb);
}

nlohmann::json Agreement::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  return {{"pearson_r", opt(pearson_r)},
          {"spearman_rho", opt(spearman_rho)},
          {"mean_diff", mean_diff},
          {"mae", mae}};
}

Agreement agreement(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 2) throw Error(ErrorCode::InvalidInput, "agreement needs at least two pairs");
  std::vector<double> a, b;
  a.reserve(pairs.size());
  b.reserve(pairs.size());
  Agreement out;
  for (const auto& [x, y] : pairs) {
    a.push_back(x);
    b.push_back(y);
    out.mean_diff += y - x;
    out.mae += std::abs(y - x);
  }
  const double n = static_cast<double>(pairs.size());
  out.mean_diff /= n;
  out.mae /= n;
  try {
    out.pearson_r = pearson(a, b);
    out.spearman_rho = pearson(average_ranks(a), average_ranks(b));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConstantSeries) throw;
  }
  return out;
}

}  // namespace mavic::metrics
