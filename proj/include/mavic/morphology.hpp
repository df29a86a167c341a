#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mavic::morphology {

enum class SchemaKind { Derm7pt, SkinCon };
enum class Modality { Clinical, Dermoscopic };

std::string_view to_string(SchemaKind kind) noexcept;
std::string_view to_string(Modality modality) noexcept;
SchemaKind parse_schema_kind(std::string_view text);  // InvalidInput
Modality parse_modality(std::string_view text);       // InvalidInput

struct Criterion {
  std::string name;                 // e.g. "pigment_network"
  std::vector<std::string> states;  // e.g. {"absent", "typical", "atypical"}
};

// The seven dermoscopic criteria and their states, in manifest order.
const std::vector<Criterion>& derm7pt_criteria();
// The 48 clinical concepts as they are spelled in the source vocabulary.
const std::vector<std::string>& skincon_concepts();

// JSON keys that identify each schema inside a morph object.
inline constexpr std::string_view kDerm7ptKey = "morphological_features_Derm7pt";
inline constexpr std::string_view kSkinConKey = "morphological_features_skincon";

class MorphSchema {
 public:
  static const MorphSchema& derm7pt();
  static const MorphSchema& skincon();
  static const MorphSchema& get(SchemaKind kind);

  SchemaKind kind() const noexcept { return kind_; }
  // Feature names: "<criterion>_<state>" for Derm7pt (spaces become
  // underscores), canonicalized concept names for SkinCon.
  const std::vector<std::string>& features() const noexcept { return features_; }
  std::size_t size() const noexcept { return features_.size(); }

  // Lookup by canonicalized feature name.
  std::optional<std::size_t> index_of(std::string_view feature) const;

  // For Derm7pt: the feature index of (criterion, state), both matched after
  // canonicalization.
  std::optional<std::size_t> derm7pt_index(std::string_view criterion,
                                           std::string_view state) const;
  // For Derm7pt: index range [first, last) of a criterion's states.
  std::pair<std::size_t, std::size_t> criterion_range(std::size_t criterion) const;
  bool is_absent_state(std::size_t feature) const;

 private:
  explicit MorphSchema(SchemaKind kind);

  SchemaKind kind_;
  std::vector<std::string> features_;
  std::vector<std::string> canonical_;
  std::vector<std::size_t> criterion_offsets_;  // Derm7pt only, size 8
};

const MorphSchema& schema_for_modality(Modality modality);

struct MorphVector {
  SchemaKind schema_kind = SchemaKind::SkinCon;
  std::vector<bool> bits;

  std::size_t popcount() const noexcept;
  friend bool operator==(const MorphVector&, const MorphVector&) = default;
};

MorphVector zero_vector(const MorphSchema& schema);

struct BinarizeOptions {
  // Whether Derm7pt "absent" states become active indicators.
  bool derm7pt_absent_as_feature = true;
};

struct BinarizeResult {
  MorphVector vector;
  std::vector<std::string> unknown_features;
  std::vector<std::string> notes;  // missing criteria, multi-valued states
};

// A parsed morph record: either a Derm7pt criterion->state object, a SkinCon
// concept list, or an object wrapping one of them under the schema key.
// Throws SchemaMismatch when the record's shape belongs to the other schema.
BinarizeResult binarize(const nlohmann::json& record, const MorphSchema& schema,
                        const BinarizeOptions& options = {});

// Feature names with bit = 1, in schema order.
std::set<std::string> active_set(const MorphVector& v);

// Which schema signatures the morph object carries. Derm7pt: all seven
// criterion keys, either at top level or under kDerm7ptKey. SkinCon: an array
// under kSkinConKey.
struct SchemaSignature {
  bool derm7pt = false;
  bool skincon = false;
};
SchemaSignature detect_signature(const nlohmann::json& morph);

// Versioned manifest with both feature orderings and a content hash.
nlohmann::json schema_manifest();
std::string schema_hash(SchemaKind kind);

}  // namespace mavic::morphology
