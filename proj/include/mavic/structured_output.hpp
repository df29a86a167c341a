#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mavic/morphology.hpp"

namespace mavic::structured_output {

enum class TagKind { Reasoning, Morph, FinalDiagnosis };
inline constexpr std::array<TagKind, 3> kAllTags = {TagKind::Reasoning, TagKind::Morph,
                                                    TagKind::FinalDiagnosis};
std::string_view tag_name(TagKind kind) noexcept;

enum class TaskKind { Description, Reasoning, Mcqa };
std::string_view to_string(TaskKind kind) noexcept;
TaskKind parse_task_kind(std::string_view text);  // InvalidInput

enum class DetectedSchema { Derm7pt, SkinCon, Unknown };
std::string_view to_string(DetectedSchema schema) noexcept;

// Byte offsets into the completion: [open_begin, close_end) covers both tags,
// [content_begin, content_end) the enclosed text.
struct TagSpan {
  TagKind kind;
  std::size_t open_begin;
  std::size_t content_begin;
  std::size_t content_end;
  std::size_t close_end;
};

struct ParsedCompletion {
  std::optional<std::string> reasoning_text;
  std::optional<std::string> final_diagnosis_text;
  std::optional<std::string> morph_text;  // raw content of <morph>
  std::optional<nlohmann::json> morph_json;
  bool morph_from_tag = false;  // false: first JSON object in the text
  std::optional<std::string> morph_parse_error;
  morphology::SchemaSignature signature;
  DetectedSchema morph_schema_detected = DetectedSchema::Unknown;
  std::vector<TagSpan> tag_spans;  // well-formed, non-overlapping, by position
  // Tags that occur but are duplicated, nested, unbalanced or overlapping.
  std::vector<TagKind> malformed_tags;
  std::vector<std::string> issues;
  std::string text;

  const TagSpan* span(TagKind kind) const noexcept;
  bool is_malformed(TagKind kind) const noexcept;
};

// Total over arbitrary input; never throws on content.
ParsedCompletion extract_tags(std::string_view text);

// The first balanced {...} in the text that parses as a JSON object.
std::optional<nlohmann::json> first_json_object(std::string_view text);

enum class CheckResult { Pass, Fail, NotApplicable };
std::string_view to_string(CheckResult result) noexcept;

// Condition ids: (i) required tags, (ii) morph JSON parses, (iii) exactly one
// schema signature, (iv) schema matches modality, (v) tag ordering.
inline constexpr std::array<std::string_view, 5> kCheckIds = {"i", "ii", "iii", "iv", "v"};

struct FormatReport {
  std::array<CheckResult, 5> checks{};
  int r_fmt = 0;
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
};

std::vector<TagKind> required_tags(TaskKind task) noexcept;

FormatReport validate_format(const ParsedCompletion& parsed, morphology::Modality modality,
                             TaskKind task);

}  // namespace mavic::structured_output
