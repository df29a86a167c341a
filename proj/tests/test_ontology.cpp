#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "mavic/error.hpp"
#include "mavic/ontology.hpp"
#include "test_support.hpp"

using namespace mavic;
using namespace mavic::ontology;

namespace {

Taxonomy fixture_taxonomy() { return load_taxonomy(testing::fixture("taxonomy.json")); }

ErrorCode build_error(std::vector<NodeRecord> records) {
  try {
    Taxonomy::build(std::move(records));
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("build accepted an invalid tree");
  return ErrorCode::InvalidInput;
}

// Brute-force Wu-Palmer: walk parent pointers, intersect ancestor sets and
// take the deepest common ancestor.
double brute_force_wup(const std::map<std::string, std::string>& parent, const std::string& a,
                       const std::string& b) {
  auto chain = [&](std::string id) {
    std::vector<std::string> up{id};
    while (parent.count(id)) {
      id = parent.at(id);
      up.push_back(id);
    }
    return up;
  };
  const auto ca = chain(a), cb = chain(b);
  const std::set<std::string> sb(cb.begin(), cb.end());
  int lca_depth = 0;
  for (const auto& anc : ca) {
    if (sb.count(anc)) {
      lca_depth = static_cast<int>(chain(anc).size());
      break;
    }
  }
  return 2.0 * lca_depth / static_cast<double>(ca.size() + cb.size());
}

}  // namespace

TEST_CASE("canonicalize lowercases and collapses punctuation") {
  CHECK(canonicalize("  Malignant-Melanoma, (in situ) ") == "malignant melanoma in situ");
  CHECK(canonicalize("BCC") == "bcc");
  CHECK(canonicalize("") == "");
  CHECK(canonicalize("a\t\tb") == "a b");
}

TEST_CASE("edit distance and fuzzy ratio") {
  CHECK(edit_distance("kitten", "sitting") == 3);
  CHECK(edit_distance("", "abc") == 3);
  CHECK(fuzzy_ratio("melanoma", "melanoma") == 1.0);
  CHECK(fuzzy_ratio("melanoma", "melanomma") == doctest::Approx(1.0 - 1.0 / 9.0));
  CHECK(fuzzy_ratio("", "") == 1.0);
}

TEST_CASE("build rejects malformed trees") {
  CHECK(build_error({{"r", "root", {}, {}}, {"a", "a", {}, "b"}, {"b", "b", {}, "a"}}) ==
        ErrorCode::CycleDetected);
  CHECK(build_error({{"a", "a", {}, "b"}, {"b", "b", {}, "a"}}) == ErrorCode::CycleDetected);
  CHECK(build_error({{"r", "root", {}, {}}, {"s", "other root", {}, {}}}) == ErrorCode::MultipleRoots);
  CHECK(build_error({{"r", "root", {}, {}}, {"r", "again", {}, "r"}}) == ErrorCode::DuplicateName);
  CHECK(build_error({{"r", "root", {}, {}}, {"a", "Root", {}, "r"}}) == ErrorCode::DuplicateName);
  CHECK(build_error({{"r", "root", {}, {}}, {"a", "a", {}, "ghost"}}) == ErrorCode::DanglingParent);
}

TEST_CASE("paths and depths on the fixture tree") {
  const auto tax = fixture_taxonomy();
  CHECK(tax.root().id == "skin_disease");
  CHECK(tax.max_depth() == 4);
  CHECK(tax.node("melanoma").depth == 4);
  CHECK(path_of("melanoma", tax).node_ids ==
        std::vector<std::string>{"skin_disease", "neoplasm", "melanocytic", "melanoma"});
  CHECK_THROWS_AS(tax.node("nope"), Error);
}

TEST_CASE("wu_palmer examples") {
  const auto tax = fixture_taxonomy();
  auto wup = [&](const char* a, const char* b) { return wu_palmer(tax.path_of(a), tax.path_of(b)); };
  CHECK(wup("melanoma", "melanoma") == 1.0);
  CHECK(wup("melanoma", "nevus") == 0.75);
  CHECK(wup("bcc", "scc") == 0.75);
  CHECK(wup("melanoma", "bcc") == 0.5);
  CHECK(wup("melanoma", "atopic_dermatitis") == 0.25);
  CHECK(wup("melanoma", "neoplasm") == doctest::Approx(4.0 / 6.0));
  // siblings under a depth-2 parent, leaves at depth 3
  CHECK(wup("psoriasis", "eczematous") == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(wu_palmer(DiagnosisPath{}, tax.path_of("nevus")), Error);
  CHECK(wu_palmer(DiagnosisPath{{"x"}}, DiagnosisPath{{"y"}}) == 0.0);
}

TEST_CASE("wu_palmer matches brute-force LCA on random trees") {
  std::mt19937_64 rng(20240611);
  for (int tree = 0; tree < 200; ++tree) {
    const int n = std::uniform_int_distribution<int>(1, 50)(rng);
    std::vector<int> label(n);
    for (int i = 0; i < n; ++i) label[i] = i;
    std::shuffle(label.begin(), label.end(), rng);
    std::vector<NodeRecord> records;
    std::map<std::string, std::string> parent;
    for (int i = 0; i < n; ++i) {
      const std::string id = "n" + std::to_string(label[i]);
      NodeRecord rec{id, "node " + std::to_string(label[i]), {}, {}};
      if (i > 0) {
        const int p = std::uniform_int_distribution<int>(0, i - 1)(rng);
        rec.parent = "n" + std::to_string(label[p]);
        parent[id] = *rec.parent;
      }
      records.push_back(rec);
    }
    std::shuffle(records.begin(), records.end(), rng);
    const auto tax = Taxonomy::build(records);
    for (const auto& a : tax.nodes()) {
      for (const auto& b : tax.nodes()) {
        const double got = wu_palmer(tax.path_of(a.id), tax.path_of(b.id));
        REQUIRE(got == brute_force_wup(parent, a.id, b.id));
      }
    }
  }
}

TEST_CASE("resolution order: exact, alias, fuzzy") {
  const auto tax = fixture_taxonomy();
  auto exact = tax.resolve("  MELANOMA ");
  CHECK(exact.node_id == "melanoma");
  CHECK(exact.match_kind == MatchKind::Exact);

  auto alias = tax.resolve("Malignant Melanoma");
  CHECK(alias.node_id == "melanoma");
  CHECK(alias.match_kind == MatchKind::Alias);

  auto fuzzy = tax.resolve("melanomma");
  CHECK(fuzzy.node_id == "melanoma");
  CHECK(fuzzy.match_kind == MatchKind::Fuzzy);
  CHECK(fuzzy.similarity == doctest::Approx(1.0 - 1.0 / 9.0));

  auto none = tax.resolve("xqzzv");
  CHECK_FALSE(none.resolved());
  CHECK(none.match_kind == MatchKind::None);
  CHECK(none.similarity < 0.8);

  // Internal nodes are valid targets.
  CHECK(tax.resolve("tumour").node_id == "neoplasm");
}

TEST_CASE("fuzzy ties go to the smallest node id") {
  const auto tax = Taxonomy::build({{"root", "root", {}, {}},
                                    {"zeta", "abcdefgx", {}, "root"},
                                    {"alpha", "abcdefgy", {}, "root"}});
  auto r = tax.resolve("abcdefgz", 0.8);
  CHECK(r.node_id == "alpha");
  CHECK(r.similarity == doctest::Approx(0.875));
  CHECK_FALSE(tax.resolve("abcdefgz", 0.9).resolved());
}

TEST_CASE("compiled form reloads to the same tree") {
  const auto tax = fixture_taxonomy();
  const auto compiled = to_json(tax);
  CHECK(compiled.at("format") == "mavic-taxonomy");
  const auto again = taxonomy_from_json(compiled);
  CHECK(to_json(again) == compiled);
  for (const auto& n : tax.nodes()) CHECK(again.path_of(n.id) == tax.path_of(n.id));
}
