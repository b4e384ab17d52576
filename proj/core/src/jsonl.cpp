#include "daud/jsonl.hpp"

#include "daud/errors.hpp"

#include <ctime>
#include <fstream>
#include <sstream>

namespace daud {

namespace fs = std::filesystem;

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_data("FileNotFound", "cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw_data("MalformedRecord", path.filename().string() + " line " + std::to_string(lineno));
    }
    out.push_back(std::move(j));
  }
  return out;
}

void write_jsonl(const fs::path& path, const std::vector<json>& records) {
  std::ostringstream body;
  for (const auto& r : records) body << r.dump() << '\n';
  write_file(path, body.str());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("FileNotFound", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw_data("WriteFailed", "cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string utc_timestamp() {
  char stamp[32];
  std::time_t now = std::time(nullptr);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return stamp;
}

}  // namespace daud
