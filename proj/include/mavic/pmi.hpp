#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mavic/morphology.hpp"

namespace mavic::pmi {

inline constexpr double kDefaultEpsilon = 1e-5;

struct CorpusRecord {
  std::string diagnosis;
  morphology::MorphVector morph;
};

// Exact co-occurrence counts over one schema. Partial counts from disjoint
// shards combine with merge().
class CooccurrenceCounts {
 public:
  explicit CooccurrenceCounts(morphology::SchemaKind kind);

  void add(const CorpusRecord& record);  // SchemaMismatch
  void merge(const CooccurrenceCounts& other);  // SchemaMismatch

  morphology::SchemaKind schema_kind() const noexcept { return kind_; }
  std::size_t feature_count() const noexcept { return count_feature_.size(); }
  std::uint64_t n_records() const noexcept { return n_records_; }
  std::uint64_t count_feature(std::size_t f) const { return count_feature_.at(f); }
  std::uint64_t count_dx(const std::string& y) const;
  std::uint64_t count_joint(std::size_t f, const std::string& y) const;
  std::vector<std::string> diagnoses() const;  // sorted

 private:
  morphology::SchemaKind kind_;
  std::uint64_t n_records_ = 0;
  std::vector<std::uint64_t> count_feature_;
  std::map<std::string, std::uint64_t> count_dx_;
  std::map<std::string, std::vector<std::uint64_t>> count_joint_;
};

template <typename Range>
CooccurrenceCounts accumulate_counts(const Range& corpus, morphology::SchemaKind kind) {
  CooccurrenceCounts counts(kind);
  for (const auto& record : corpus) counts.add(record);
  return counts;
}

// ln((p(f,y) + eps) / (p(f) p(y) + eps)). Throws EmptyCorpus.
double estimate_pmi(const CooccurrenceCounts& counts, std::size_t feature,
                    const std::string& diagnosis, double epsilon = kDefaultEpsilon);

struct WeightLookup {
  std::vector<double> weights;
  bool fallback = false;  // diagnosis not in the table; weights are uniform
};

class PmiTable {
 public:
  PmiTable(morphology::SchemaKind kind, double epsilon,
           std::map<std::string, std::vector<double>> weights);

  morphology::SchemaKind schema_kind() const noexcept { return kind_; }
  double epsilon() const noexcept { return epsilon_; }
  const std::map<std::string, std::vector<double>>& weights() const noexcept { return weights_; }
  std::size_t feature_count() const noexcept;

  bool contains(const std::string& diagnosis) const { return weights_.count(diagnosis) > 0; }
  WeightLookup weights_for(const std::string& diagnosis) const;

 private:
  morphology::SchemaKind kind_;
  double epsilon_;
  std::map<std::string, std::vector<double>> weights_;
};

// Softmax over features of the per-diagnosis PMI values, for every diagnosis
// seen in the counts (or only those listed, when `diagnoses` is non-empty).
PmiTable normalize_weights(const CooccurrenceCounts& counts,
                           const std::vector<std::string>& diagnoses = {},
                           double epsilon = kDefaultEpsilon);

inline WeightLookup weights_for(const PmiTable& table, const std::string& diagnosis) {
  return table.weights_for(diagnosis);
}

// Corpus JSONL line: {"diagnosis": string, "features": [names]}.
struct CorpusReadReport {
  std::uint64_t lines = 0;
  std::vector<std::string> unknown_features;
};
// Maps a corpus diagnosis label to the table key (for example a taxonomy
// node id); identity when empty.
using DiagnosisKey = std::function<std::string(const std::string&)>;
CooccurrenceCounts read_corpus(std::istream& in, morphology::SchemaKind kind,
                               CorpusReadReport* report = nullptr, const DiagnosisKey& key = {});

nlohmann::json to_json(const PmiTable& table);
PmiTable table_from_json(const nlohmann::json& doc);  // SchemaMismatch, InvalidInput
PmiTable load_table(const std::string& path);

}  // namespace mavic::pmi
