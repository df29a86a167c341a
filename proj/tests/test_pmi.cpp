#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "mavic/error.hpp"
#include "mavic/pmi.hpp"
#include "test_support.hpp"

using namespace mavic;
using namespace mavic::pmi;
using morphology::MorphSchema;
using morphology::SchemaKind;

namespace {

struct ToyRecord {
  std::string dx;
  std::set<std::size_t> features;
};

std::vector<ToyRecord> random_corpus(std::mt19937_64& rng, std::size_t n_features) {
  const std::vector<std::string> dx = {"melanoma", "nevus", "bcc", "scc"};
  std::vector<ToyRecord> out(std::uniform_int_distribution<int>(1, 40)(rng));
  for (auto& r : out) {
    r.dx = dx[std::uniform_int_distribution<std::size_t>(0, dx.size() - 1)(rng)];
    const int k = std::uniform_int_distribution<int>(0, 6)(rng);
    for (int i = 0; i < k; ++i) {
      r.features.insert(std::uniform_int_distribution<std::size_t>(0, n_features - 1)(rng));
    }
  }
  return out;
}

CorpusRecord to_record(const ToyRecord& t, SchemaKind kind) {
  CorpusRecord rec{t.dx, morphology::zero_vector(MorphSchema::get(kind))};
  for (auto f : t.features) rec.morph.bits[f] = true;
  return rec;
}

// Direct counting over the raw records, no shared code with the library.
std::map<std::string, std::vector<double>> oracle_weights(const std::vector<ToyRecord>& corpus,
                                                          std::size_t n_features, double eps) {
  const double n = static_cast<double>(corpus.size());
  std::map<std::string, double> n_dx;
  std::vector<double> n_f(n_features, 0.0);
  std::map<std::string, std::vector<double>> n_joint;
  for (const auto& r : corpus) {
    n_dx[r.dx] += 1.0;
    auto& joint = n_joint.try_emplace(r.dx, n_features, 0.0).first->second;
    for (auto f : r.features) {
      n_f[f] += 1.0;
      joint[f] += 1.0;
    }
  }
  std::map<std::string, std::vector<double>> out;
  for (const auto& [dx, count] : n_dx) {
    std::vector<double> w(n_features);
    double z = 0.0;
    for (std::size_t f = 0; f < n_features; ++f) {
      const double pmi = std::log((n_joint[dx][f] / n + eps) / ((n_f[f] / n) * (count / n) + eps));
      w[f] = std::exp(pmi);
      z += w[f];
    }
    for (auto& x : w) x /= z;
    out[dx] = w;
  }
  return out;
}

}  // namespace

TEST_CASE("PMI table matches independent counting on toy corpora") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto kind = trial % 2 == 0 ? SchemaKind::Derm7pt : SchemaKind::SkinCon;
    const std::size_t nf = MorphSchema::get(kind).size();
    const auto corpus = random_corpus(rng, nf);
    CooccurrenceCounts counts(kind);
    for (const auto& r : corpus) counts.add(to_record(r, kind));
    const auto table = normalize_weights(counts);
    const auto expected = oracle_weights(corpus, nf, kDefaultEpsilon);
    REQUIRE(table.weights().size() == expected.size());
    for (const auto& [dx, w] : expected) {
      const auto got = table.weights_for(dx);
      CHECK_FALSE(got.fallback);
      for (std::size_t f = 0; f < nf; ++f) REQUIRE(std::abs(got.weights[f] - w[f]) <= 1e-12);
    }
  }
}

TEST_CASE("estimate_pmi hand values") {
  CooccurrenceCounts counts(SchemaKind::SkinCon);
  auto rec = [](const std::string& dx, std::initializer_list<std::size_t> on) {
    CorpusRecord r{dx, morphology::zero_vector(MorphSchema::skincon())};
    for (auto f : on) r.morph.bits[f] = true;
    return r;
  };
  counts.add(rec("a", {0}));
  counts.add(rec("a", {0, 1}));
  counts.add(rec("b", {1}));
  counts.add(rec("b", {}));
  // p(f0, a) = 1/2, p(f0) = 1/2, p(a) = 1/2
  CHECK(estimate_pmi(counts, 0, "a", 0.0) == doctest::Approx(std::log(2.0)));
  CHECK(estimate_pmi(counts, 0, "b", 1e-5) == doctest::Approx(std::log(1e-5 / 0.25001)));
  CHECK(counts.count_joint(1, "b") == 1);
  CHECK(counts.count_dx("zzz") == 0);
  CHECK_THROWS_AS(estimate_pmi(CooccurrenceCounts(SchemaKind::SkinCon), 0, "a"), Error);
}

TEST_CASE("merged shards equal a single pass") {
  std::mt19937_64 rng(5);
  const auto corpus = random_corpus(rng, 28);
  CooccurrenceCounts whole(SchemaKind::Derm7pt), left(SchemaKind::Derm7pt), right(SchemaKind::Derm7pt);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto r = to_record(corpus[i], SchemaKind::Derm7pt);
    whole.add(r);
    (i % 2 ? left : right).add(r);
  }
  left.merge(right);
  CHECK(to_json(normalize_weights(left)) == to_json(normalize_weights(whole)));
  CHECK_THROWS_AS(left.merge(CooccurrenceCounts(SchemaKind::SkinCon)), Error);
}

TEST_CASE("weights form a distribution; unseen diagnosis falls back to uniform") {
  std::istringstream corpus(
      "{\"diagnosis\": \"melanoma\", \"features\": [\"streaks_irregular\", \"bogus\"]}\n"
      "\n"
      "{\"diagnosis\": \"nevus\", \"features\": [\"pigment network typical\"]}\n");
  CorpusReadReport report;
  const auto counts = read_corpus(corpus, SchemaKind::Derm7pt, &report);
  CHECK(report.lines == 2);
  CHECK(report.unknown_features == std::vector<std::string>{"bogus"});
  const auto table = normalize_weights(counts);
  double sum = 0.0;
  for (double w : table.weights_for("melanoma").weights) sum += w;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  const auto miss = table.weights_for("lichen planus");
  CHECK(miss.fallback);
  CHECK(miss.weights == std::vector<double>(28, 1.0 / 28.0));
}

TEST_CASE("corpus reader maps diagnosis keys") {
  std::istringstream corpus("{\"diagnosis\": \"Malignant Melanoma\", \"features\": []}\n");
  const auto counts = read_corpus(corpus, SchemaKind::SkinCon, nullptr,
                                  [](const std::string&) { return std::string("melanoma"); });
  CHECK(counts.diagnoses() == std::vector<std::string>{"melanoma"});
  std::istringstream bad("{\"features\": []}\n");
  CHECK_THROWS_AS(read_corpus(bad, SchemaKind::SkinCon), Error);
}

TEST_CASE("table JSON reloads bit-exactly and checks the schema hash") {
  std::mt19937_64 rng(11);
  const auto corpus = random_corpus(rng, 48);
  CooccurrenceCounts counts(SchemaKind::SkinCon);
  for (const auto& r : corpus) counts.add(to_record(r, SchemaKind::SkinCon));
  const auto table = normalize_weights(counts);
  const auto doc = to_json(table);
  const auto again = table_from_json(nlohmann::json::parse(doc.dump()));
  CHECK(again.weights() == table.weights());
  CHECK(again.epsilon() == table.epsilon());

  auto tampered = doc;
  tampered["schema_hash"] = std::string(64, '0');
  try {
    table_from_json(tampered);
    FAIL("tampered hash accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaMismatch);
  }
}
