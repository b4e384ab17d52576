#include "daud/schema.hpp"

#include "daud/errors.hpp"

#include <array>
#include <sstream>

namespace daud {

std::string prompt_kind_to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::Nfe: return "NFE";
    case PromptKind::EngagePredict: return "EngagePredict";
    case PromptKind::ProfileUpdate: return "ProfileUpdate";
    case PromptKind::CommentStyle: return "CommentStyle";
    case PromptKind::CommentGen: return "CommentGen";
    case PromptKind::ProfileInit: return "ProfileInit";
  }
  throw_config("UnknownPromptKind", "enum value out of range");
}

PromptKind prompt_kind_from_string(const std::string& s) {
  if (s == "NFE") return PromptKind::Nfe;
  if (s == "EngagePredict") return PromptKind::EngagePredict;
  if (s == "ProfileUpdate") return PromptKind::ProfileUpdate;
  if (s == "CommentStyle") return PromptKind::CommentStyle;
  if (s == "CommentGen") return PromptKind::CommentGen;
  if (s == "ProfileInit") return PromptKind::ProfileInit;
  throw_config("UnknownPromptKind", "'" + s + "'");
}

namespace {

const std::array<SchemaDef, 5> kSchemas = {{
    {"nfe", {"summary", "news_domain", "sentiment", "structural", "logical_consistency", "source_credibility"}},
    {"style", {"style_text", "tone", "intent", "linguistic_style", "stance_consistency", "targeting_pattern"}},
    {"engage", {"decision", "explanation"}},
    {"profile", {"profile"}},
    {"comment", {"comment"}},
}};

}  // namespace

const SchemaDef& schema_by_id(const std::string& id) {
  for (const auto& s : kSchemas) {
    if (s.id == id) return s;
  }
  throw_config("UnknownSchema", "'" + id + "'");
}

const SchemaDef& schema_for(PromptKind kind) {
  switch (kind) {
    case PromptKind::Nfe: return schema_by_id("nfe");
    case PromptKind::CommentStyle: return schema_by_id("style");
    case PromptKind::EngagePredict: return schema_by_id("engage");
    case PromptKind::ProfileUpdate:
    case PromptKind::ProfileInit: return schema_by_id("profile");
    case PromptKind::CommentGen: return schema_by_id("comment");
  }
  throw_config("UnknownPromptKind", "enum value out of range");
}

std::string output_suffix(const SchemaDef& schema) {
  std::ostringstream out;
  out << "\n\nRespond with exactly one fenced block tagged daud:" << schema.id
      << " holding one \"field: value\" line per field, in this order: ";
  for (size_t i = 0; i < schema.fields.size(); ++i) {
    if (i) out << ", ";
    out << schema.fields[i];
  }
  out << ". Keep each value on a single line. Text outside the block is ignored.\n"
      << "```daud:" << schema.id << "\n";
  for (const auto& f : schema.fields) out << f << ": ...\n";
  out << "```";
  return out.str();
}

std::string render_block(const SchemaDef& schema, const std::map<std::string, std::string>& values) {
  std::ostringstream out;
  out << "```daud:" << schema.id << "\n";
  for (const auto& f : schema.fields) {
    auto it = values.find(f);
    out << f << ": " << (it == values.end() ? "" : it->second) << "\n";
  }
  out << "```";
  return out.str();
}

std::map<std::string, std::string> parse_block(const std::string& text, const SchemaDef& schema) {
  const std::string open = "```daud:" + schema.id;
  size_t start = text.find(open);
  if (start == std::string::npos) {
    throw_backend("MissingBlock", "no daud:" + schema.id + " block in output");
  }
  size_t body_start = text.find('\n', start);
  if (body_start == std::string::npos) throw_backend("MissingBlock", "unterminated block");
  ++body_start;
  size_t end = text.find("```", body_start);
  std::string body = text.substr(body_start, end == std::string::npos ? std::string::npos : end - body_start);

  std::map<std::string, std::string> out;
  std::istringstream lines(body);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    size_t vstart = value.find_first_not_of(' ');
    value = vstart == std::string::npos ? "" : value.substr(vstart);
    out[key] = value;
  }
  for (const auto& f : schema.fields) {
    auto it = out.find(f);
    if (it == out.end() || it->second.empty()) {
      throw_backend("MissingField", "block lacks field '" + f + "'");
    }
  }
  return out;
}

}  // namespace daud
