#pragma once

#include "daud/jsonl.hpp"
#include "daud/schema.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace daud {

struct ChatRequest {
  PromptKind prompt_kind = PromptKind::Nfe;
  std::string system_text;
  std::string user_text;
  double temperature = 0.0;
  int max_tokens = 512;
  std::string schema_id;
};

enum class BackendKind { Mock, Http };

std::string backend_to_string(BackendKind kind);
BackendKind backend_from_string(const std::string& s);

struct ChatResponse {
  std::string text;
  BackendKind backend = BackendKind::Mock;
  bool cached = false;
  std::string request_digest;
};

// SHA-256 of the canonical fixed-field-order serialization of the request.
std::string request_digest(const ChatRequest& req);
json request_to_json(const ChatRequest& req);

// A deterministic rule table standing in for an LLM. Markers are named regexes
// capturing values from user_text; rule kinds:
//   template      one output template instantiated with marker captures
//   match         two marker sets; intersection picks match/nomatch output
//   profile_edit  adds or removes an item tag from a tag set, direction chosen
//                 by which phrase ("actually reposted"/"actually ignored") appears
//   table         two captured keys select an output from a map ("k1|k2")
// Placeholders: {name} joins captures with ", "; {name|PREFIX} renders each
// capture as PREFIXcapture joined by spaces.
class MockRuleTable {
 public:
  static MockRuleTable from_json(const json& j);
  static MockRuleTable load(const std::filesystem::path& path);
  json to_json() const;

  bool has_rule(PromptKind kind) const;
  // Pure: same request, same output. Throws NoRuleForKind.
  std::string respond(const ChatRequest& req) const;

  struct Marker {
    std::string name;
    std::string pattern;
  };
  struct Rule {
    std::string kind;
    std::vector<Marker> markers;
    std::string template_text;
    std::string default_output;
    // match
    Marker left, right;
    std::string match_output, nomatch_output;
    // profile_edit
    Marker tag_marker, item_marker;
    std::string add_phrase, remove_phrase;
    // table
    Marker key1, key2;
    std::map<std::string, std::string> outputs;
  };

  std::map<std::string, Rule> rules;  // keyed by prompt kind name
};

struct HttpBackendConfig {
  std::string endpoint;  // scheme://host:port
  std::string path = "/v1/chat/completions";
  std::string model = "daud-remote";
  int max_attempts = 3;
  int backoff_base_ms = 1000;  // 1s, 2s, 4s between attempts
  std::string token_env = "DAUD_LLM_TOKEN";
  int max_in_flight = 4;
};

// Front door for all LLM traffic. Mock is a pure function of the request and
// rule table; Http speaks the chat-completions wire protocol with retries.
// cached_complete is write-once content-addressed on the request digest.
class LlmGateway {
 public:
  LlmGateway(BackendKind kind, MockRuleTable rules, HttpBackendConfig http,
             std::filesystem::path cache_dir);

  ChatResponse complete(const ChatRequest& req);
  ChatResponse cached_complete(const ChatRequest& req);

  BackendKind backend_kind() const { return kind_; }
  uint64_t backend_calls() const { return backend_calls_.load(); }
  const std::filesystem::path& cache_dir() const { return cache_dir_; }

 private:
  ChatResponse http_complete(const ChatRequest& req);
  std::filesystem::path cache_path(const std::string& digest) const;

  BackendKind kind_;
  MockRuleTable rules_;
  HttpBackendConfig http_;
  std::filesystem::path cache_dir_;
  std::atomic<uint64_t> backend_calls_{0};
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
};

}  // namespace daud
