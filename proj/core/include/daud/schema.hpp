#pragma once

#include <map>
#include <string>
#include <vector>

namespace daud {

enum class PromptKind { Nfe, EngagePredict, ProfileUpdate, CommentStyle, CommentGen, ProfileInit };

std::string prompt_kind_to_string(PromptKind kind);
PromptKind prompt_kind_from_string(const std::string& s);

struct SchemaDef {
  std::string id;
  std::vector<std::string> fields;
};

const SchemaDef& schema_for(PromptKind kind);
const SchemaDef& schema_by_id(const std::string& id);

// Fixed structured-output instruction appended to every prompt: asks for one
// fenced block tagged daud:<schema> with one "field: value" line per field.
std::string output_suffix(const SchemaDef& schema);

// Renders a well-formed fenced block (mock outputs, fixtures).
std::string render_block(const SchemaDef& schema, const std::map<std::string, std::string>& values);

// Extracts the first fenced block tagged with the schema and parses its
// "field: value" lines. Prose outside the block is ignored. Throws
// MissingBlock / MissingField.
std::map<std::string, std::string> parse_block(const std::string& text, const SchemaDef& schema);

}  // namespace daud
