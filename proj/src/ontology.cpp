#include "mavic/ontology.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "mavic/error.hpp"

namespace mavic::ontology {

std::string canonicalize(std::string_view label) {
  std::string out;
  out.reserve(label.size());
  bool pending_space = false;
  for (char raw : label) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c) || std::ispunct(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[b.size()];
}

double fuzzy_ratio(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(edit_distance(a, b)) /
                   static_cast<double>(longest);
}

std::string_view to_string(MatchKind kind) noexcept {
  switch (kind) {
    case MatchKind::Exact: return "exact";
    case MatchKind::Alias: return "alias";
    case MatchKind::Fuzzy: return "fuzzy";
    case MatchKind::None: return "none";
  }
  return "none";
}

Taxonomy Taxonomy::build(std::vector<NodeRecord> records) {
  if (records.empty()) {
    throw Error(ErrorCode::InvalidInput, "taxonomy has no nodes");
  }
  std::sort(records.begin(), records.end(),
            [](const NodeRecord& a, const NodeRecord& b) { return a.id < b.id; });

  Taxonomy tax;
  tax.nodes_.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& rec = records[i];
    if (rec.id.empty()) throw Error(ErrorCode::InvalidInput, "node with empty id");
    if (!tax.by_id_.emplace(rec.id, i).second) {
      throw Error(ErrorCode::DuplicateName, "duplicate node id '" + rec.id + "'");
    }
    TaxonomyNode node;
    node.id = rec.id;
    node.canonical_name = canonicalize(rec.name.empty() ? rec.id : rec.name);
    for (const auto& alias : rec.aliases) {
      auto canon = canonicalize(alias);
      if (!canon.empty() &&
          std::find(node.aliases.begin(), node.aliases.end(), canon) == node.aliases.end()) {
        node.aliases.push_back(std::move(canon));
      }
    }
    node.parent_id = rec.parent;
    if (!tax.by_name_.emplace(node.canonical_name, i).second) {
      throw Error(ErrorCode::DuplicateName,
                  "duplicate canonical name '" + node.canonical_name + "'");
    }
    tax.nodes_.push_back(std::move(node));
  }

  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < tax.nodes_.size(); ++i) {
    const auto& parent = tax.nodes_[i].parent_id;
    if (!parent) {
      roots.push_back(i);
    } else if (!tax.by_id_.count(*parent)) {
      throw Error(ErrorCode::DanglingParent, "node '" + tax.nodes_[i].id +
                                                 "' refers to missing parent '" +
                                                 *parent + "'");
    }
  }
  if (roots.size() > 1) {
    throw Error(ErrorCode::MultipleRoots,
                std::to_string(roots.size()) + " nodes have no parent");
  }
  if (roots.empty()) {
    throw Error(ErrorCode::CycleDetected, "no root: every node has a parent");
  }
  tax.root_index_ = roots.front();

  // Depths by walking each node to the root; a walk longer than the node
  // count means the parent chain loops.
  const std::size_t n = tax.nodes_.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> chain;
    std::size_t cur = i;
    while (tax.nodes_[cur].depth == 0) {
      chain.push_back(cur);
      if (chain.size() > n) {
        throw Error(ErrorCode::CycleDetected,
                    "parent chain of '" + tax.nodes_[i].id + "' contains a cycle");
      }
      const auto& parent = tax.nodes_[cur].parent_id;
      if (!parent) break;
      cur = tax.by_id_.at(*parent);
    }
    int depth = tax.nodes_[cur].depth;
    if (depth == 0) {
      // chain ended at the root
      depth = 1;
      tax.nodes_[cur].depth = 1;
      chain.pop_back();
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      tax.nodes_[*it].depth = ++depth;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& alias : tax.nodes_[i].aliases) {
      tax.by_alias_.emplace(alias, i);  // ids sorted, so first wins
    }
  }
  return tax;
}

const TaxonomyNode* Taxonomy::find(std::string_view id) const noexcept {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &nodes_[it->second];
}

const TaxonomyNode& Taxonomy::node(std::string_view id) const {
  if (const auto* n = find(id)) return *n;
  throw Error(ErrorCode::UnknownNode, "unknown node '" + std::string(id) + "'");
}

int Taxonomy::max_depth() const noexcept {
  int best = 0;
  for (const auto& n : nodes_) best = std::max(best, n.depth);
  return best;
}

DiagnosisPath Taxonomy::path_of(std::string_view id) const {
  const TaxonomyNode* cur = &node(id);
  DiagnosisPath path;
  path.node_ids.resize(static_cast<std::size_t>(cur->depth));
  for (auto slot = path.node_ids.rbegin(); slot != path.node_ids.rend(); ++slot) {
    *slot = cur->id;
    if (cur->parent_id) cur = &nodes_[by_id_.at(*cur->parent_id)];
  }
  return path;
}

ResolutionOutcome Taxonomy::resolve(std::string_view text, double threshold) const {
  const std::string query = canonicalize(text);
  if (auto it = by_name_.find(query); it != by_name_.end()) {
    return {nodes_[it->second].id, MatchKind::Exact, 1.0};
  }
  if (auto it = by_alias_.find(query); it != by_alias_.end()) {
    return {nodes_[it->second].id, MatchKind::Alias, 1.0};
  }

  // nodes_ is sorted by id, so a strict '>' keeps the smallest id on ties.
  double best = -1.0;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    double ratio = fuzzy_ratio(query, nodes_[i].canonical_name);
    for (const auto& alias : nodes_[i].aliases) {
      ratio = std::max(ratio, fuzzy_ratio(query, alias));
    }
    if (ratio > best) {
      best = ratio;
      best_index = i;
    }
  }
  if (best >= threshold) {
    return {nodes_[best_index].id, MatchKind::Fuzzy, best};
  }
  return {std::nullopt, MatchKind::None, std::max(best, 0.0)};
}

double wu_palmer(const DiagnosisPath& pred, const DiagnosisPath& gt) {
  if (pred.empty() || gt.empty()) {
    throw Error(ErrorCode::EmptyPath, "wu_palmer requires non-empty paths");
  }
  const std::size_t limit = std::min(pred.size(), gt.size());
  std::size_t shared = 0;
  while (shared < limit && pred.node_ids[shared] == gt.node_ids[shared]) ++shared;
  return 2.0 * static_cast<double>(shared) /
         static_cast<double>(pred.size() + gt.size());
}

std::vector<NodeRecord> records_from_json(const nlohmann::json& doc) {
  const nlohmann::json* array = &doc;
  if (doc.is_object() && doc.contains("nodes")) array = &doc.at("nodes");
  if (!array->is_array()) {
    throw Error(ErrorCode::InvalidInput, "ontology must be a JSON array of nodes");
  }
  std::vector<NodeRecord> records;
  records.reserve(array->size());
  for (const auto& item : *array) {
    if (!item.is_object() || !item.contains("id") || !item.at("id").is_string()) {
      throw Error(ErrorCode::InvalidInput, "ontology node without string 'id'");
    }
    NodeRecord rec;
    rec.id = item.at("id").get<std::string>();
    rec.name = item.value("name", rec.id);
    if (auto it = item.find("aliases"); it != item.end() && it->is_array()) {
      for (const auto& a : *it) {
        if (a.is_string()) rec.aliases.push_back(a.get<std::string>());
      }
    }
    if (auto it = item.find("parent"); it != item.end() && !it->is_null()) {
      if (!it->is_string()) {
        throw Error(ErrorCode::InvalidInput, "parent of '" + rec.id + "' is not a string");
      }
      rec.parent = it->get<std::string>();
    }
    records.push_back(std::move(rec));
  }
  return records;
}

Taxonomy taxonomy_from_json(const nlohmann::json& doc) {
  return Taxonomy::build(records_from_json(doc));
}

Taxonomy load_taxonomy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open taxonomy file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, "taxonomy JSON: " + std::string(e.what()));
  }
  return taxonomy_from_json(doc);
}

nlohmann::json to_json(const Taxonomy& taxonomy) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : taxonomy.nodes()) {
    nodes.push_back({{"id", n.id},
                     {"name", n.canonical_name},
                     {"aliases", n.aliases},
                     {"parent", n.parent_id ? nlohmann::json(*n.parent_id) : nlohmann::json()},
                     {"depth", n.depth}});
  }
  return {{"format", "mavic-taxonomy"},
          {"version", 1},
          {"root", taxonomy.root().id},
          {"max_depth", taxonomy.max_depth()},
          {"nodes", std::move(nodes)}};
}

}  // namespace mavic::ontology
