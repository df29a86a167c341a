#include "mavic/structured_output.hpp"

#include <algorithm>
#include <cctype>

#include "mavic/error.hpp"
#include "mavic/ontology.hpp"

namespace mavic::structured_output {

using json = nlohmann::json;
using morphology::Modality;

std::string_view tag_name(TagKind kind) noexcept {
  switch (kind) {
    case TagKind::Reasoning: return "reasoning";
    case TagKind::Morph: return "morph";
    case TagKind::FinalDiagnosis: return "final_diagnosis";
  }
  return "";
}

std::string_view to_string(TaskKind kind) noexcept {
  switch (kind) {
    case TaskKind::Description: return "description";
    case TaskKind::Reasoning: return "reasoning";
    case TaskKind::Mcqa: return "mcqa";
  }
  return "";
}

TaskKind parse_task_kind(std::string_view text) {
  const auto c = ontology::canonicalize(text);
  if (c == "description") return TaskKind::Description;
  if (c == "reasoning") return TaskKind::Reasoning;
  if (c == "mcqa") return TaskKind::Mcqa;
  throw Error(ErrorCode::InvalidInput, "unknown task kind '" + std::string(text) + "'");
}

std::string_view to_string(DetectedSchema schema) noexcept {
  switch (schema) {
    case DetectedSchema::Derm7pt: return "Derm7pt";
    case DetectedSchema::SkinCon: return "SkinCon";
    case DetectedSchema::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::string_view to_string(CheckResult result) noexcept {
  switch (result) {
    case CheckResult::Pass: return "pass";
    case CheckResult::Fail: return "fail";
    case CheckResult::NotApplicable: return "n/a";
  }
  return "n/a";
}

const TagSpan* ParsedCompletion::span(TagKind kind) const noexcept {
  for (const auto& s : tag_spans) {
    if (s.kind == kind) return &s;
  }
  return nullptr;
}

bool ParsedCompletion::is_malformed(TagKind kind) const noexcept {
  return std::find(malformed_tags.begin(), malformed_tags.end(), kind) != malformed_tags.end();
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::size_t> find_all(const std::string& haystack, const std::string& needle) {
  std::vector<std::size_t> hits;
  for (auto pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + 1)) {
    hits.push_back(pos);
  }
  return hits;
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Strips a surrounding ```json ... ``` fence if present.
std::string_view strip_fence(std::string_view s) {
  s = trim(s);
  if (s.size() >= 6 && s.substr(0, 3) == "```" && s.substr(s.size() - 3) == "```") {
    s.remove_suffix(3);
    s.remove_prefix(3);
    const auto nl = s.find('\n');
    if (nl != std::string_view::npos && trim(s.substr(0, nl)).find('{') == std::string_view::npos) {
      s.remove_prefix(nl + 1);
    }
  }
  return trim(s);
}

// End (one past) of the balanced object starting at `begin`, honoring strings.
std::optional<std::size_t> balanced_end(std::string_view text, std::size_t begin) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = begin; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<json> first_json_object(std::string_view text) {
  for (auto pos = text.find('{'); pos != std::string_view::npos; pos = text.find('{', pos + 1)) {
    const auto end = balanced_end(text, pos);
    if (!end) continue;
    auto parsed = json::parse(text.substr(pos, *end - pos), nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
  }
  return std::nullopt;
}

ParsedCompletion extract_tags(std::string_view text) {
  ParsedCompletion out;
  out.text = std::string(text);
  const std::string folded = lower(text);

  std::vector<TagSpan> spans;
  for (TagKind kind : kAllTags) {
    const std::string open = "<" + std::string(tag_name(kind)) + ">";
    const std::string close = "</" + std::string(tag_name(kind)) + ">";
    const auto opens = find_all(folded, open);
    const auto closes = find_all(folded, close);
    if (opens.empty() && closes.empty()) continue;
    if (opens.size() == 1 && closes.size() == 1 && opens[0] < closes[0]) {
      spans.push_back({kind, opens[0], opens[0] + open.size(), closes[0],
                       closes[0] + close.size()});
      continue;
    }
    out.malformed_tags.push_back(kind);
    out.issues.push_back("<" + std::string(tag_name(kind)) + ">: " +
                         std::to_string(opens.size()) + " open / " +
                         std::to_string(closes.size()) + " close tags");
  }

  std::sort(spans.begin(), spans.end(),
            [](const TagSpan& a, const TagSpan& b) { return a.open_begin < b.open_begin; });
  std::vector<bool> overlapping(spans.size(), false);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    for (std::size_t j = i + 1; j < spans.size(); ++j) {
      if (spans[j].open_begin < spans[i].close_end) overlapping[i] = overlapping[j] = true;
    }
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (overlapping[i]) {
      out.malformed_tags.push_back(spans[i].kind);
      out.issues.push_back("<" + std::string(tag_name(spans[i].kind)) +
                           "> overlaps another tag");
    } else {
      out.tag_spans.push_back(spans[i]);
    }
  }

  auto content = [&](const TagSpan& s) {
    return std::string(text.substr(s.content_begin, s.content_end - s.content_begin));
  };
  if (const auto* s = out.span(TagKind::Reasoning)) out.reasoning_text = content(*s);
  if (const auto* s = out.span(TagKind::FinalDiagnosis)) {
    out.final_diagnosis_text = std::string(trim(content(*s)));
  }
  if (const auto* s = out.span(TagKind::Morph)) {
    out.morph_text = content(*s);
    out.morph_from_tag = true;
    const auto body = strip_fence(*out.morph_text);
    auto parsed = json::parse(body, nullptr, false);
    if (parsed.is_discarded()) {
      out.morph_parse_error = "content under <morph> is not valid JSON";
    } else if (!parsed.is_object()) {
      out.morph_parse_error = "content under <morph> is not a JSON object";
    } else {
      out.morph_json = std::move(parsed);
    }
  } else {
    out.morph_json = first_json_object(text);
  }

  if (out.morph_json) {
    out.signature = morphology::detect_signature(*out.morph_json);
    if (out.signature.derm7pt && !out.signature.skincon) {
      out.morph_schema_detected = DetectedSchema::Derm7pt;
    } else if (out.signature.skincon && !out.signature.derm7pt) {
      out.morph_schema_detected = DetectedSchema::SkinCon;
    }
  }
  return out;
}

std::vector<TagKind> required_tags(TaskKind task) noexcept {
  switch (task) {
    case TaskKind::Description: return {TagKind::Morph};
    case TaskKind::Reasoning:
      return {TagKind::Reasoning, TagKind::Morph, TagKind::FinalDiagnosis};
    case TaskKind::Mcqa: return {};
  }
  return {};
}

json FormatReport::to_json() const {
  json checks_json = json::object();
  for (std::size_t i = 0; i < checks.size(); ++i) {
    checks_json[std::string(kCheckIds[i])] = to_string(checks[i]);
  }
  return {{"checks", checks_json}, {"r_fmt", r_fmt}, {"notes", notes}};
}

FormatReport validate_format(const ParsedCompletion& parsed, Modality modality, TaskKind task) {
  FormatReport report;
  auto& [tags, parses, one_schema, modality_ok, ordering] = report.checks;
  const auto required = required_tags(task);

  // (i)
  tags = CheckResult::Pass;
  for (TagKind kind : kAllTags) {
    if (parsed.is_malformed(kind)) {
      tags = CheckResult::Fail;
      report.notes.push_back("(i) <" + std::string(tag_name(kind)) +
                             "> is duplicated, nested or unbalanced");
    }
  }
  for (TagKind kind : required) {
    if (!parsed.span(kind) && !parsed.is_malformed(kind)) {
      tags = CheckResult::Fail;
      report.notes.push_back("(i) missing <" + std::string(tag_name(kind)) + ">");
    }
  }

  // (ii)-(iv) apply whenever morph is required or a <morph> tag was written.
  const bool morph_required =
      std::find(required.begin(), required.end(), TagKind::Morph) != required.end();
  const bool morph_applicable = morph_required || parsed.span(TagKind::Morph) ||
                                parsed.is_malformed(TagKind::Morph);
  if (!morph_applicable) {
    parses = one_schema = modality_ok = CheckResult::NotApplicable;
  } else {
    const bool have = parsed.morph_from_tag && parsed.morph_json.has_value();
    parses = have ? CheckResult::Pass : CheckResult::Fail;
    if (!have) {
      report.notes.push_back("(ii) " + parsed.morph_parse_error.value_or(
                                           "no JSON content under a <morph> tag"));
    }
    const bool exactly_one = have && (parsed.signature.derm7pt != parsed.signature.skincon);
    one_schema = exactly_one ? CheckResult::Pass : CheckResult::Fail;
    if (have && !exactly_one) {
      report.notes.push_back(parsed.signature.derm7pt
                                 ? "(iii) both Derm7pt and SkinCon signatures present"
                                 : "(iii) no valid Derm7pt or SkinCon signature");
    }
    const auto expected = modality == Modality::Dermoscopic ? DetectedSchema::Derm7pt
                                                            : DetectedSchema::SkinCon;
    modality_ok = (exactly_one && parsed.morph_schema_detected == expected) ? CheckResult::Pass
                                                                            : CheckResult::Fail;
    if (exactly_one && modality_ok == CheckResult::Fail) {
      report.notes.push_back("(iv) " + std::string(to_string(parsed.morph_schema_detected)) +
                             " schema used for a " + std::string(to_string(modality)) + " image");
    }
  }

  // (v)
  ordering = CheckResult::NotApplicable;
  if (task == TaskKind::Description) {
    if (const auto* m = parsed.span(TagKind::Morph)) {
      // Text outside any tag before <morph> would be narrative preceding it.
      bool narrative_first = false;
      std::size_t cursor = 0;
      for (const auto& s : parsed.tag_spans) {
        if (s.open_begin >= m->open_begin) break;
        if (!trim(std::string_view(parsed.text).substr(cursor, s.open_begin - cursor)).empty()) {
          narrative_first = true;
        }
        cursor = s.close_end;
      }
      if (!trim(std::string_view(parsed.text).substr(cursor, m->open_begin - cursor)).empty()) {
        narrative_first = true;
      }
      ordering = narrative_first ? CheckResult::Fail : CheckResult::Pass;
      if (narrative_first) report.notes.push_back("(v) narrative precedes <morph>");
    }
  } else if (task == TaskKind::Reasoning) {
    const auto* r = parsed.span(TagKind::Reasoning);
    const auto* m = parsed.span(TagKind::Morph);
    const auto* f = parsed.span(TagKind::FinalDiagnosis);
    if (r && m && f) {
      const bool ok = r->close_end <= m->open_begin && m->close_end <= f->open_begin;
      ordering = ok ? CheckResult::Pass : CheckResult::Fail;
      if (!ok) {
        report.notes.push_back("(v) expected <reasoning>, <morph>, <final_diagnosis> in order");
      }
    }
  }

  const bool all_pass = std::none_of(report.checks.begin(), report.checks.end(),
                                     [](CheckResult c) { return c == CheckResult::Fail; });
  report.r_fmt = all_pass ? 1 : 0;
  return report;
}

}  // namespace mavic::structured_output
