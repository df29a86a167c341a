#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace mavic::ontology {

// Lowercase, replace punctuation with spaces, collapse runs of whitespace and
// trim. Idempotent.
std::string canonicalize(std::string_view label);

// Levenshtein distance over bytes.
std::size_t edit_distance(std::string_view a, std::string_view b);

// 1 - edit_distance / max(len). Two empty strings have ratio 1.
double fuzzy_ratio(std::string_view a, std::string_view b);

struct NodeRecord {
  std::string id;
  std::string name;
  std::vector<std::string> aliases;
  std::optional<std::string> parent;
};

struct TaxonomyNode {
  std::string id;
  std::string canonical_name;
  std::vector<std::string> aliases;  // canonicalized
  std::optional<std::string> parent_id;
  int depth = 0;  // root = 1
};

// Root-to-node sequence of ids; the node itself is last.
struct DiagnosisPath {
  std::vector<std::string> node_ids;

  std::size_t size() const noexcept { return node_ids.size(); }
  bool empty() const noexcept { return node_ids.empty(); }
  friend bool operator==(const DiagnosisPath&, const DiagnosisPath&) = default;
};

enum class MatchKind { Exact, Alias, Fuzzy, None };

std::string_view to_string(MatchKind kind) noexcept;

struct ResolutionOutcome {
  std::optional<std::string> node_id;
  MatchKind match_kind = MatchKind::None;
  // For a rejected resolution: the best candidate ratio that fell short.
  double similarity = 0.0;

  bool resolved() const noexcept { return node_id.has_value(); }
};

inline constexpr double kDefaultFuzzyThreshold = 0.8;

class Taxonomy {
 public:
  // Validates that the records form a single rooted tree.
  // Throws Error with CycleDetected, MultipleRoots, DuplicateName,
  // DanglingParent or InvalidInput.
  static Taxonomy build(std::vector<NodeRecord> records);

  const TaxonomyNode& node(std::string_view id) const;  // UnknownNode
  const TaxonomyNode* find(std::string_view id) const noexcept;
  const TaxonomyNode& root() const { return nodes_[root_index_]; }
  const std::vector<TaxonomyNode>& nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  int max_depth() const noexcept;

  DiagnosisPath path_of(std::string_view id) const;

  ResolutionOutcome resolve(std::string_view text,
                            double threshold = kDefaultFuzzyThreshold) const;

 private:
  Taxonomy() = default;

  std::vector<TaxonomyNode> nodes_;  // sorted by id
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::size_t> by_name_;
  // canonical alias -> smallest node index carrying it
  std::unordered_map<std::string, std::size_t> by_alias_;
  std::size_t root_index_ = 0;
};

// Free-function spelling of the taxonomy queries.
inline DiagnosisPath path_of(std::string_view id, const Taxonomy& taxonomy) {
  return taxonomy.path_of(id);
}

inline ResolutionOutcome resolve_diagnosis(
    std::string_view text, const Taxonomy& taxonomy,
    double threshold = kDefaultFuzzyThreshold) {
  return taxonomy.resolve(text, threshold);
}

// 2 * depth(LCA) / (|a| + |b|), with the LCA taken as the deepest shared
// prefix. Paths without a shared root score 0. Throws EmptyPath.
double wu_palmer(const DiagnosisPath& pred, const DiagnosisPath& gt);

// Ontology file: JSON array of {"id","name","aliases","parent"}. The compiled
// form written by to_json() is accepted as well.
std::vector<NodeRecord> records_from_json(const nlohmann::json& doc);
Taxonomy taxonomy_from_json(const nlohmann::json& doc);
Taxonomy load_taxonomy(const std::string& path);
nlohmann::json to_json(const Taxonomy& taxonomy);

}  // namespace mavic::ontology
