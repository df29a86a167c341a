#include "mavic/morphology.hpp"

#include <algorithm>
#include <cctype>

#include "mavic/error.hpp"
#include "mavic/hash.hpp"
#include "mavic/ontology.hpp"

namespace mavic::morphology {

using ontology::canonicalize;
using json = nlohmann::json;

std::string_view to_string(SchemaKind kind) noexcept {
  return kind == SchemaKind::Derm7pt ? "Derm7pt" : "SkinCon";
}

std::string_view to_string(Modality modality) noexcept {
  return modality == Modality::Dermoscopic ? "dermoscopic" : "clinical";
}

SchemaKind parse_schema_kind(std::string_view text) {
  const auto c = canonicalize(text);
  if (c == "derm7pt") return SchemaKind::Derm7pt;
  if (c == "skincon") return SchemaKind::SkinCon;
  throw Error(ErrorCode::InvalidInput, "unknown schema '" + std::string(text) + "'");
}

Modality parse_modality(std::string_view text) {
  const auto c = canonicalize(text);
  if (c == "dermoscopic" || c == "dermoscopy") return Modality::Dermoscopic;
  if (c == "clinical") return Modality::Clinical;
  throw Error(ErrorCode::InvalidInput, "unknown modality '" + std::string(text) + "'");
}

const std::vector<Criterion>& derm7pt_criteria() {
  static const std::vector<Criterion> kCriteria = {
      {"pigment_network", {"absent", "typical", "atypical"}},
      {"blue_whitish_veil", {"absent", "present"}},
      {"vascular_structures",
       {"absent", "arborizing", "comma", "hairpin", "within regression", "wreath",
        "dotted", "linear irregular"}},
      {"pigmentation",
       {"absent", "diffuse regular", "localized regular", "diffuse irregular",
        "localized irregular"}},
      {"streaks", {"absent", "regular", "irregular"}},
      {"dots_and_globules", {"absent", "regular", "irregular"}},
      {"regression_structures", {"absent", "blue areas", "white areas", "combinations"}},
  };
  return kCriteria;
}

const std::vector<std::string>& skincon_concepts() {
  static const std::vector<std::string> kConcepts = {
      "Abscess",        "Acuminate",         "Atrophy",
      "Black",          "Blue",              "Brown(Hyperpigmentation)",
      "Bulla",          "Burrow",            "Comedo",
      "Crust",          "Cyst",              "Dome-shaped",
      "Erosion",        "Erythema",          "Excoriation",
      "Exophytic/Fungating", "Exudate",      "Fissure",
      "Flat topped",    "Friable",           "Gray",
      "Induration",     "Lichenification",   "Macule",
      "Nodule",         "Papule",            "Patch",
      "Pedunculated",   "Pigmented",         "Plaque",
      "Poikiloderma",   "Purple",            "Purpura/Petechiae",
      "Pustule",        "Salmon",            "Scale",
      "Scar",           "Sclerosis",         "Telangiectasia",
      "Translucent",    "Ulcer",             "Umbilicated",
      "Vesicle",        "Warty/Papillomatous", "Wheal",
      "White(Hypopigmentation)", "Xerosis",  "Yellow",
  };
  return kConcepts;
}

MorphSchema::MorphSchema(SchemaKind kind) : kind_(kind) {
  if (kind == SchemaKind::Derm7pt) {
    for (const auto& crit : derm7pt_criteria()) {
      criterion_offsets_.push_back(features_.size());
      for (const auto& state : crit.states) {
        std::string name = crit.name + "_" + state;
        std::replace(name.begin(), name.end(), ' ', '_');
        features_.push_back(std::move(name));
      }
    }
    criterion_offsets_.push_back(features_.size());
  } else {
    for (const auto& concept_name : skincon_concepts()) {
      features_.push_back(canonicalize(concept_name));
    }
  }
  canonical_.reserve(features_.size());
  for (const auto& f : features_) canonical_.push_back(canonicalize(f));
}

const MorphSchema& MorphSchema::derm7pt() {
  static const MorphSchema kSchema(SchemaKind::Derm7pt);
  return kSchema;
}

const MorphSchema& MorphSchema::skincon() {
  static const MorphSchema kSchema(SchemaKind::SkinCon);
  return kSchema;
}

const MorphSchema& MorphSchema::get(SchemaKind kind) {
  return kind == SchemaKind::Derm7pt ? derm7pt() : skincon();
}

std::optional<std::size_t> MorphSchema::index_of(std::string_view feature) const {
  const auto c = canonicalize(feature);
  auto it = std::find(canonical_.begin(), canonical_.end(), c);
  if (it == canonical_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - canonical_.begin());
}

std::optional<std::size_t> MorphSchema::derm7pt_index(std::string_view criterion,
                                                      std::string_view state) const {
  if (kind_ != SchemaKind::Derm7pt) return std::nullopt;
  const auto& criteria = derm7pt_criteria();
  const auto crit = canonicalize(criterion);
  const auto st = canonicalize(state);
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    if (canonicalize(criteria[c].name) != crit) continue;
    for (std::size_t s = 0; s < criteria[c].states.size(); ++s) {
      if (canonicalize(criteria[c].states[s]) == st) return criterion_offsets_[c] + s;
    }
    return std::nullopt;
  }
  return std::nullopt;
}

std::pair<std::size_t, std::size_t> MorphSchema::criterion_range(std::size_t criterion) const {
  return {criterion_offsets_.at(criterion), criterion_offsets_.at(criterion + 1)};
}

bool MorphSchema::is_absent_state(std::size_t feature) const {
  if (kind_ != SchemaKind::Derm7pt) return false;
  return std::find(criterion_offsets_.begin(), criterion_offsets_.end() - 1, feature) !=
         criterion_offsets_.end() - 1;
}

const MorphSchema& schema_for_modality(Modality modality) {
  return modality == Modality::Dermoscopic ? MorphSchema::derm7pt() : MorphSchema::skincon();
}

std::size_t MorphVector::popcount() const noexcept {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true));
}

MorphVector zero_vector(const MorphSchema& schema) {
  return {schema.kind(), std::vector<bool>(schema.size(), false)};
}

namespace {

const json* find_key_ci(const json& object, std::string_view key) {
  if (!object.is_object()) return nullptr;
  const auto want = canonicalize(key);
  for (auto it = object.begin(); it != object.end(); ++it) {
    if (canonicalize(it.key()) == want) return &it.value();
  }
  return nullptr;
}

std::string describe(const json& value) {
  return value.is_string() ? value.get<std::string>() : value.dump();
}

void binarize_derm7pt(const json& criteria_obj, const MorphSchema& schema,
                      const BinarizeOptions& options, BinarizeResult& out) {
  const auto& criteria = derm7pt_criteria();
  std::vector<bool> seen(criteria.size(), false);
  for (auto it = criteria_obj.begin(); it != criteria_obj.end(); ++it) {
    const auto key = canonicalize(it.key());
    std::optional<std::size_t> crit;
    for (std::size_t c = 0; c < criteria.size(); ++c) {
      if (canonicalize(criteria[c].name) == key) crit = c;
    }
    if (!crit) {
      out.unknown_features.push_back(it.key());
      continue;
    }
    seen[*crit] = true;
    std::vector<const json*> values;
    if (it.value().is_array()) {
      for (const auto& v : it.value()) values.push_back(&v);
      if (values.size() != 1) {
        out.notes.push_back(criteria[*crit].name + ": " + std::to_string(values.size()) +
                            " states given, expected exactly one");
      }
    } else {
      values.push_back(&it.value());
    }
    for (const json* v : values) {
      std::optional<std::size_t> idx;
      if (v->is_string()) idx = schema.derm7pt_index(criteria[*crit].name, v->get<std::string>());
      if (!idx) {
        out.unknown_features.push_back(criteria[*crit].name + "=" + describe(*v));
        continue;
      }
      if (!options.derm7pt_absent_as_feature && schema.is_absent_state(*idx)) continue;
      out.vector.bits[*idx] = true;
    }
  }
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    if (!seen[c]) out.notes.push_back("missing criterion " + criteria[c].name);
  }
}

void binarize_skincon(const json& concepts, const MorphSchema& schema, BinarizeResult& out) {
  for (const auto& v : concepts) {
    std::optional<std::size_t> idx;
    if (v.is_string()) idx = schema.index_of(v.get<std::string>());
    if (!idx) {
      out.unknown_features.push_back(describe(v));
      continue;
    }
    out.vector.bits[*idx] = true;
  }
}

[[noreturn]] void mismatch(SchemaKind expected, SchemaKind found) {
  throw Error(ErrorCode::SchemaMismatch, "record has " + std::string(to_string(found)) +
                                             " shape, schema is " +
                                             std::string(to_string(expected)));
}

}  // namespace

BinarizeResult binarize(const json& record, const MorphSchema& schema,
                        const BinarizeOptions& options) {
  BinarizeResult out{zero_vector(schema), {}, {}};
  if (record.is_null()) return out;

  const json* body = &record;
  SchemaKind shape{};
  if (const json* d = find_key_ci(record, kDerm7ptKey)) {
    body = d;
    shape = SchemaKind::Derm7pt;
  } else if (const json* s = find_key_ci(record, kSkinConKey)) {
    body = s;
    shape = SchemaKind::SkinCon;
  } else if (record.is_array()) {
    shape = SchemaKind::SkinCon;
  } else if (record.is_object()) {
    shape = SchemaKind::Derm7pt;
  } else {
    throw Error(ErrorCode::InvalidInput, "morph record must be an object or array");
  }
  if (shape != schema.kind()) mismatch(schema.kind(), shape);

  if (shape == SchemaKind::Derm7pt) {
    if (!body->is_object()) {
      throw Error(ErrorCode::InvalidInput, "Derm7pt morph content must be an object");
    }
    binarize_derm7pt(*body, schema, options, out);
  } else {
    if (!body->is_array()) {
      throw Error(ErrorCode::InvalidInput, "SkinCon morph content must be an array");
    }
    binarize_skincon(*body, schema, out);
  }
  return out;
}

std::set<std::string> active_set(const MorphVector& v) {
  const auto& schema = MorphSchema::get(v.schema_kind);
  std::set<std::string> out;
  for (std::size_t i = 0; i < v.bits.size() && i < schema.size(); ++i) {
    if (v.bits[i]) out.insert(schema.features()[i]);
  }
  return out;
}

SchemaSignature detect_signature(const json& morph) {
  SchemaSignature sig;
  if (!morph.is_object()) return sig;
  auto has_all_criteria = [](const json& obj) {
    if (!obj.is_object()) return false;
    for (const auto& crit : derm7pt_criteria()) {
      if (!find_key_ci(obj, crit.name)) return false;
    }
    return true;
  };
  if (const json* d = find_key_ci(morph, kDerm7ptKey)) {
    sig.derm7pt = has_all_criteria(*d);
  }
  sig.derm7pt = sig.derm7pt || has_all_criteria(morph);
  if (const json* s = find_key_ci(morph, kSkinConKey)) sig.skincon = s->is_array();
  return sig;
}

json schema_manifest() {
  json schemas = json::object();
  for (auto kind : {SchemaKind::Derm7pt, SchemaKind::SkinCon}) {
    const auto& schema = MorphSchema::get(kind);
    schemas[std::string(to_string(kind))] = {{"features", schema.features()},
                                             {"hash", schema_hash(kind)}};
  }
  return {{"format", "mavic-schema-manifest"}, {"version", 1}, {"schemas", schemas}};
}

std::string schema_hash(SchemaKind kind) {
  const auto& schema = MorphSchema::get(kind);
  json body = {{"kind", to_string(kind)}, {"features", schema.features()}};
  return sha256_hex(body.dump());
}

}  // namespace mavic::morphology
