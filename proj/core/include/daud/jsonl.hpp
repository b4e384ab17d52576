#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace daud {

using json = nlohmann::json;

// Reads one JSON object per non-empty line. Parse failures report the 1-based line.
std::vector<json> read_jsonl(const std::filesystem::path& path);

// Writes one compact JSON object per line. Goes through a temp file + rename.
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

// "%Y-%m-%dT%H:%M:%SZ" in UTC.
std::string utc_timestamp();

}  // namespace daud
