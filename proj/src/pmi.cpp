#include "mavic/pmi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mavic/error.hpp"

namespace mavic::pmi {

using json = nlohmann::json;
using morphology::MorphSchema;
using morphology::SchemaKind;

CooccurrenceCounts::CooccurrenceCounts(SchemaKind kind)
    : kind_(kind), count_feature_(MorphSchema::get(kind).size(), 0) {}

void CooccurrenceCounts::add(const CorpusRecord& record) {
  if (record.morph.schema_kind != kind_ || record.morph.bits.size() != count_feature_.size()) {
    throw Error(ErrorCode::SchemaMismatch, "corpus record does not match the counts schema");
  }
  ++n_records_;
  ++count_dx_[record.diagnosis];
  auto& joint = count_joint_[record.diagnosis];
  joint.resize(count_feature_.size(), 0);
  for (std::size_t f = 0; f < count_feature_.size(); ++f) {
    if (record.morph.bits[f]) {
      ++count_feature_[f];
      ++joint[f];
    }
  }
}

void CooccurrenceCounts::merge(const CooccurrenceCounts& other) {
  if (other.kind_ != kind_) {
    throw Error(ErrorCode::SchemaMismatch, "cannot merge counts of different schemas");
  }
  n_records_ += other.n_records_;
  for (std::size_t f = 0; f < count_feature_.size(); ++f) {
    count_feature_[f] += other.count_feature_[f];
  }
  for (const auto& [y, n] : other.count_dx_) count_dx_[y] += n;
  for (const auto& [y, row] : other.count_joint_) {
    auto& mine = count_joint_[y];
    mine.resize(count_feature_.size(), 0);
    for (std::size_t f = 0; f < row.size(); ++f) mine[f] += row[f];
  }
}

std::uint64_t CooccurrenceCounts::count_dx(const std::string& y) const {
  auto it = count_dx_.find(y);
  return it == count_dx_.end() ? 0 : it->second;
}

std::uint64_t CooccurrenceCounts::count_joint(std::size_t f, const std::string& y) const {
  auto it = count_joint_.find(y);
  return it == count_joint_.end() ? 0 : it->second.at(f);
}

std::vector<std::string> CooccurrenceCounts::diagnoses() const {
  std::vector<std::string> out;
  out.reserve(count_dx_.size());
  for (const auto& [y, n] : count_dx_) out.push_back(y);
  return out;
}

double estimate_pmi(const CooccurrenceCounts& counts, std::size_t feature,
                    const std::string& diagnosis, double epsilon) {
  if (counts.n_records() == 0) throw Error(ErrorCode::EmptyCorpus, "PMI of an empty corpus");
  const double n = static_cast<double>(counts.n_records());
  const double p_joint = static_cast<double>(counts.count_joint(feature, diagnosis)) / n;
  const double p_f = static_cast<double>(counts.count_feature(feature)) / n;
  const double p_y = static_cast<double>(counts.count_dx(diagnosis)) / n;
  return std::log((p_joint + epsilon) / (p_f * p_y + epsilon));
}

PmiTable::PmiTable(SchemaKind kind, double epsilon,
                   std::map<std::string, std::vector<double>> weights)
    : kind_(kind), epsilon_(epsilon), weights_(std::move(weights)) {
  const std::size_t f = MorphSchema::get(kind).size();
  for (const auto& [y, w] : weights_) {
    if (w.size() != f) {
      throw Error(ErrorCode::SchemaMismatch, "weights for '" + y + "' have " +
                                                 std::to_string(w.size()) + " entries, schema has " +
                                                 std::to_string(f));
    }
  }
}

std::size_t PmiTable::feature_count() const noexcept {
  return MorphSchema::get(kind_).size();
}

WeightLookup PmiTable::weights_for(const std::string& diagnosis) const {
  if (auto it = weights_.find(diagnosis); it != weights_.end()) return {it->second, false};
  const std::size_t f = feature_count();
  return {std::vector<double>(f, 1.0 / static_cast<double>(f)), true};
}

PmiTable normalize_weights(const CooccurrenceCounts& counts,
                           const std::vector<std::string>& diagnoses, double epsilon) {
  if (counts.n_records() == 0) throw Error(ErrorCode::EmptyCorpus, "PMI of an empty corpus");
  const auto ys = diagnoses.empty() ? counts.diagnoses() : diagnoses;
  const std::size_t nf = counts.feature_count();
  std::map<std::string, std::vector<double>> table;
  for (const auto& y : ys) {
    std::vector<double> w(nf);
    for (std::size_t f = 0; f < nf; ++f) w[f] = estimate_pmi(counts, f, y, epsilon);
    const double top = *std::max_element(w.begin(), w.end());
    double z = 0.0;
    for (auto& v : w) {
      v = std::exp(v - top);
      z += v;
    }
    for (auto& v : w) v /= z;
    table.emplace(y, std::move(w));
  }
  return PmiTable(counts.schema_kind(), epsilon, std::move(table));
}

CooccurrenceCounts read_corpus(std::istream& in, SchemaKind kind, CorpusReadReport* report,
                               const DiagnosisKey& key) {
  const auto& schema = MorphSchema::get(kind);
  CooccurrenceCounts counts(kind);
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("diagnosis") ||
        !doc.at("diagnosis").is_string()) {
      throw Error(ErrorCode::InvalidInput,
                  "corpus line " + std::to_string(lineno) + ": expected {\"diagnosis\", \"features\"}");
    }
    auto label = doc.at("diagnosis").get<std::string>();
    if (key) label = key(label);
    CorpusRecord rec{std::move(label), morphology::zero_vector(schema)};
    const auto features = doc.value("features", json::array());
    if (!features.is_array()) {
      throw Error(ErrorCode::InvalidInput,
                  "corpus line " + std::to_string(lineno) + ": 'features' must be an array");
    }
    for (const auto& name : features) {
      std::optional<std::size_t> idx;
      if (name.is_string()) idx = schema.index_of(name.get<std::string>());
      if (idx) {
        rec.morph.bits[*idx] = true;
      } else if (report) {
        report->unknown_features.push_back(name.is_string() ? name.get<std::string>() : name.dump());
      }
    }
    counts.add(rec);
    if (report) ++report->lines;
  }
  return counts;
}

json to_json(const PmiTable& table) {
  const auto& schema = MorphSchema::get(table.schema_kind());
  json weights = json::object();
  for (const auto& [y, w] : table.weights()) weights[y] = w;
  return {{"format", "mavic-pmi-table"},
          {"version", 1},
          {"schema", morphology::to_string(table.schema_kind())},
          {"schema_hash", morphology::schema_hash(table.schema_kind())},
          {"epsilon", table.epsilon()},
          {"log_base", "e"},
          {"features", schema.features()},
          {"weights", std::move(weights)}};
}

PmiTable table_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "mavic-pmi-table") {
    throw Error(ErrorCode::InvalidInput, "not a mavic PMI table");
  }
  if (doc.value("version", 0) != 1) {
    throw Error(ErrorCode::InvalidInput, "unsupported PMI table version");
  }
  const auto kind = morphology::parse_schema_kind(doc.at("schema").get<std::string>());
  if (doc.value("schema_hash", "") != morphology::schema_hash(kind)) {
    throw Error(ErrorCode::SchemaMismatch, "PMI table schema hash does not match this build");
  }
  std::map<std::string, std::vector<double>> weights;
  for (const auto& [y, w] : doc.at("weights").items()) {
    weights.emplace(y, w.get<std::vector<double>>());
  }
  return PmiTable(kind, doc.value("epsilon", kDefaultEpsilon), std::move(weights));
}

PmiTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open PMI table " + path);
  auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::InvalidInput, "PMI table is not valid JSON");
  return table_from_json(doc);
}

}  // namespace mavic::pmi
