#include "daud/digest.hpp"
#include "daud/errors.hpp"
#include "daud/gateway.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

using namespace daud;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("daud_gateway_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

MockRuleTable demo_rules() {
  json j = {
      {"rules",
       {{"NFE",
         {{"kind", "template"},
          {"markers", {{{"name", "dom"}, {"pattern", "dom_(\\w+)"}}}},
          {"template", "domain is {dom}"},
          {"default", "no domain found"}}},
        {"EngagePredict",
         {{"kind", "match"},
          {"left", {{"name", "pref"}, {"pattern", "PREF:(\\w+)"}}},
          {"right", {{"name", "dom"}, {"pattern", "NEWS-DOMAIN:(\\w+)"}}},
          {"match", "decision Repost for {dom}"},
          {"nomatch", "decision Ignore for {dom}"},
          {"default", "no markers"}}},
        {"ProfileUpdate",
         {{"kind", "profile_edit"},
          {"tag_marker", {{"name", "pref"}, {"pattern", "PREF:(\\w+)"}}},
          {"item_marker", {{"name", "dom"}, {"pattern", "NEWS-DOMAIN:(\\w+)"}}},
          {"add_phrase", "actually reposted"},
          {"remove_phrase", "actually ignored"},
          {"template", "tags: {pref|PREF:}"},
          {"default", "unchanged"}}},
        {"CommentGen",
         {{"kind", "table"},
          {"key1", {{"name", "voice"}, {"pattern", "voice_(\\w+)"}}},
          {"key2", {{"name", "cue"}, {"pattern", "(veracue)"}}},
          {"outputs", {{"hype|veracue", "hype comment"}, {"hype|", "calm hype"}, {"|veracue", "anon cue"}}},
          {"default", "plain comment"}}}}}};
  return MockRuleTable::from_json(j);
}

ChatRequest nfe_request(const std::string& user_text) {
  ChatRequest req;
  req.prompt_kind = PromptKind::Nfe;
  req.system_text = "sys";
  req.user_text = user_text;
  req.schema_id = "nfe";
  return req;
}

}  // namespace

TEST_CASE("request digests are stable and cover every field") {
  ChatRequest a = nfe_request("hello dom_politics");
  ChatRequest b = nfe_request("hello dom_politics");
  CHECK(request_digest(a) == request_digest(b));
  CHECK(request_digest(a).size() == 64);

  // Pinned value guards the canonical serialization against accidental change.
  CHECK(request_digest(a) == sha256_hex(request_to_json(a).dump()));

  b.temperature = 0.7;
  CHECK(request_digest(a) != request_digest(b));
  b = a;
  b.max_tokens = 128;
  CHECK(request_digest(a) != request_digest(b));
  b = a;
  b.system_text = "other";
  CHECK(request_digest(a) != request_digest(b));
  b = a;
  b.prompt_kind = PromptKind::CommentGen;
  b.schema_id = "comment";
  CHECK(request_digest(a) != request_digest(b));
}

TEST_CASE("template rule instantiates captures and falls back to default") {
  MockRuleTable rules = demo_rules();
  CHECK(rules.respond(nfe_request("dom_politics text")) == "domain is politics");
  CHECK(rules.respond(nfe_request("dom_a then dom_b then dom_a")) == "domain is a, b");
  CHECK(rules.respond(nfe_request("nothing to capture")) == "no domain found");
}

TEST_CASE("match rule compares capture sets") {
  MockRuleTable rules = demo_rules();
  ChatRequest req;
  req.prompt_kind = PromptKind::EngagePredict;
  req.schema_id = "engage";

  req.user_text = "PREF:politics ... NEWS-DOMAIN:politics";
  CHECK(rules.respond(req) == "decision Repost for politics");

  req.user_text = "PREF:health ... NEWS-DOMAIN:politics";
  CHECK(rules.respond(req) == "decision Ignore for politics");

  req.user_text = "PREF:health PREF:politics ... NEWS-DOMAIN:politics";
  CHECK(rules.respond(req) == "decision Repost for politics");

  req.user_text = "no markers here";
  CHECK(rules.respond(req) == "no markers");
}

TEST_CASE("profile_edit rule adds and removes tags") {
  MockRuleTable rules = demo_rules();
  ChatRequest req;
  req.prompt_kind = PromptKind::ProfileUpdate;
  req.schema_id = "profile";

  req.user_text = "PREF:health ... NEWS-DOMAIN:politics ... actually reposted";
  CHECK(rules.respond(req) == "tags: PREF:health PREF:politics");

  req.user_text = "PREF:health PREF:politics ... NEWS-DOMAIN:politics ... actually ignored";
  CHECK(rules.respond(req) == "tags: PREF:health");

  // Adding an already-present tag keeps the set.
  req.user_text = "PREF:politics ... NEWS-DOMAIN:politics ... actually reposted";
  CHECK(rules.respond(req) == "tags: PREF:politics");

  // Both phrases or no item capture fall back to the default.
  req.user_text = "PREF:health ... NEWS-DOMAIN:politics ... actually reposted actually ignored";
  CHECK(rules.respond(req) == "unchanged");
  req.user_text = "PREF:health ... actually reposted";
  CHECK(rules.respond(req) == "unchanged");
}

TEST_CASE("table rule selects by joined keys") {
  MockRuleTable rules = demo_rules();
  ChatRequest req;
  req.prompt_kind = PromptKind::CommentGen;
  req.schema_id = "comment";

  req.user_text = "voice_hype story with veracue inside";
  CHECK(rules.respond(req) == "hype comment");
  req.user_text = "voice_hype plain story";
  CHECK(rules.respond(req) == "calm hype");
  req.user_text = "story with veracue only";
  CHECK(rules.respond(req) == "anon cue");
  req.user_text = "voice_cite story";
  CHECK(rules.respond(req) == "plain comment");
}

TEST_CASE("mock responses are pure functions of the request") {
  MockRuleTable rules = demo_rules();
  ChatRequest req = nfe_request("dom_politics text");
  std::string first = rules.respond(req);
  for (int i = 0; i < 10; ++i) CHECK(rules.respond(req) == first);
}

TEST_CASE("rule table round-trips through json") {
  MockRuleTable rules = demo_rules();
  MockRuleTable reparsed = MockRuleTable::from_json(rules.to_json());
  CHECK(reparsed.to_json() == rules.to_json());
  CHECK(reparsed.respond(nfe_request("dom_politics")) == "domain is politics");
}

TEST_CASE("missing and malformed rules raise typed errors") {
  MockRuleTable rules = demo_rules();
  ChatRequest req;
  req.prompt_kind = PromptKind::CommentStyle;
  req.schema_id = "style";
  try {
    rules.respond(req);
    FAIL("expected NoRuleForKind");
  } catch (const Error& e) {
    CHECK(e.code() == "NoRuleForKind");
    CHECK(e.kind() == ErrorKind::Backend);
    CHECK(exit_code_for(e.kind()) == 4);
  }

  json bad = {{"rules", {{"NFE", {{"kind", "mystery"}}}}}};
  CHECK_THROWS_WITH_AS(MockRuleTable::from_json(bad), doctest::Contains("mystery"), Error);

  json bad_key = {{"rules", {{"NotAKind", {{"kind", "template"}}}}}};
  CHECK_THROWS_WITH_AS(MockRuleTable::from_json(bad_key), doctest::Contains("NotAKind"), Error);
}

TEST_CASE("complete rejects a schema id that does not match the prompt kind") {
  LlmGateway gw(BackendKind::Mock, demo_rules(), HttpBackendConfig{}, temp_dir("schema"));
  ChatRequest req = nfe_request("dom_politics");
  req.schema_id = "comment";
  try {
    gw.complete(req);
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == "SchemaMismatch");
    CHECK(e.kind() == ErrorKind::Config);
  }
  CHECK(gw.backend_calls() == 0);
}

TEST_CASE("cached_complete memoizes by request digest") {
  fs::path dir = temp_dir("cache");
  LlmGateway gw(BackendKind::Mock, demo_rules(), HttpBackendConfig{}, dir);
  ChatRequest req = nfe_request("dom_politics");

  ChatResponse first = gw.cached_complete(req);
  CHECK(first.text == "domain is politics");
  CHECK_FALSE(first.cached);
  CHECK(gw.backend_calls() == 1);

  ChatResponse second = gw.cached_complete(req);
  CHECK(second.text == first.text);
  CHECK(second.cached);
  CHECK(second.request_digest == first.request_digest);
  CHECK(gw.backend_calls() == 1);

  // The cache file lives under the first two hex digits of the digest.
  fs::path entry = dir / first.request_digest.substr(0, 2) / (first.request_digest + ".json");
  CHECK(fs::exists(entry));
  json stored = json::parse(std::ifstream(entry));
  CHECK(stored["response"]["text"] == "domain is politics");
  CHECK(stored["checksum"] == sha256_hex("domain is politics"));

  // A different request misses the cache.
  gw.cached_complete(nfe_request("dom_health"));
  CHECK(gw.backend_calls() == 2);
}

TEST_CASE("a pre-seeded cache entry satisfies the request without backend calls") {
  fs::path dir = temp_dir("seeded");
  ChatRequest req = nfe_request("dom_politics");
  std::string digest = request_digest(req);

  json entry{{"request", request_to_json(req)},
             {"response", {{"text", "seeded answer"}, {"backend", "http"}}},
             {"created_at", "2026-01-01T00:00:00Z"},
             {"checksum", sha256_hex("seeded answer")}};
  fs::create_directories(dir / digest.substr(0, 2));
  std::ofstream(dir / digest.substr(0, 2) / (digest + ".json")) << entry.dump();

  LlmGateway gw(BackendKind::Mock, demo_rules(), HttpBackendConfig{}, dir);
  ChatResponse res = gw.cached_complete(req);
  CHECK(res.cached);
  CHECK(res.text == "seeded answer");
  CHECK(res.backend == BackendKind::Http);
  CHECK(gw.backend_calls() == 0);
}

TEST_CASE("corrupted cache entries are rejected") {
  fs::path dir = temp_dir("corrupt");
  ChatRequest req = nfe_request("dom_politics");
  std::string digest = request_digest(req);
  fs::path entry = dir / digest.substr(0, 2) / (digest + ".json");
  fs::create_directories(entry.parent_path());

  LlmGateway gw(BackendKind::Mock, demo_rules(), HttpBackendConfig{}, dir);

  std::ofstream(entry) << "{not json";
  CHECK_THROWS_WITH_AS(gw.cached_complete(req), doctest::Contains("CacheCorrupt"), Error);

  json tampered{{"request", request_to_json(req)},
                {"response", {{"text", "tampered"}, {"backend", "mock"}}},
                {"checksum", sha256_hex("original")}};
  std::ofstream(entry, std::ios::trunc) << tampered.dump();
  try {
    gw.cached_complete(req);
    FAIL("expected CacheCorrupt");
  } catch (const Error& e) {
    CHECK(e.code() == "CacheCorrupt");
    CHECK(e.kind() == ErrorKind::Backend);
  }
}

namespace {

struct LocalServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit LocalServer(const std::function<void(const httplib::Request&, httplib::Response&)>& handler) {
    server.Post("/v1/chat/completions", handler);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~LocalServer() {
    server.stop();
    thread.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port); }
};

HttpBackendConfig fast_http(const std::string& endpoint) {
  HttpBackendConfig http;
  http.endpoint = endpoint;
  http.max_attempts = 3;
  http.backoff_base_ms = 1;
  return http;
}

json chat_reply(const std::string& text) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}};
}

}  // namespace

TEST_CASE("http backend posts the chat-completions body and bearer token") {
  json seen_body;
  std::string seen_auth;
  LocalServer srv([&](const httplib::Request& req, httplib::Response& res) {
    seen_body = json::parse(req.body);
    seen_auth = req.get_header_value("Authorization");
    res.set_content(chat_reply("remote says hi").dump(), "application/json");
  });

  setenv("DAUD_LLM_TOKEN", "sekrit", 1);
  LlmGateway gw(BackendKind::Http, MockRuleTable{}, fast_http(srv.endpoint()), temp_dir("http"));
  ChatRequest req = nfe_request("dom_politics");
  req.temperature = 0.25;
  req.max_tokens = 99;
  ChatResponse res = gw.complete(req);
  unsetenv("DAUD_LLM_TOKEN");

  CHECK(res.text == "remote says hi");
  CHECK(res.backend == BackendKind::Http);
  CHECK(gw.backend_calls() == 1);

  CHECK(seen_auth == "Bearer sekrit");
  CHECK(seen_body["model"] == "daud-remote");
  CHECK(seen_body["temperature"] == 0.25);
  CHECK(seen_body["max_tokens"] == 99);
  REQUIRE(seen_body["messages"].size() == 2);
  CHECK(seen_body["messages"][0]["role"] == "system");
  CHECK(seen_body["messages"][0]["content"] == "sys");
  CHECK(seen_body["messages"][1]["role"] == "user");
  CHECK(seen_body["messages"][1]["content"] == "dom_politics");
}

TEST_CASE("http backend retries transient failures") {
  std::atomic<int> hits{0};
  LocalServer srv([&](const httplib::Request&, httplib::Response& res) {
    if (hits.fetch_add(1) == 0) {
      res.status = 500;
      res.set_content("overloaded", "text/plain");
    } else {
      res.set_content(chat_reply("second try").dump(), "application/json");
    }
  });

  LlmGateway gw(BackendKind::Http, MockRuleTable{}, fast_http(srv.endpoint()), temp_dir("retry"));
  ChatResponse res = gw.complete(nfe_request("dom_politics"));
  CHECK(res.text == "second try");
  CHECK(hits.load() == 2);
}

TEST_CASE("http backend surfaces exhaustion and malformed replies") {
  std::atomic<int> hits{0};
  LocalServer srv([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 503;
  });

  LlmGateway gw(BackendKind::Http, MockRuleTable{}, fast_http(srv.endpoint()), temp_dir("down"));
  try {
    gw.complete(nfe_request("dom_politics"));
    FAIL("expected BackendUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == "BackendUnavailable");
    CHECK(e.kind() == ErrorKind::Backend);
  }
  CHECK(hits.load() == 3);

  LocalServer bad([&](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"choices\": []}", "application/json");
  });
  LlmGateway gw2(BackendKind::Http, MockRuleTable{}, fast_http(bad.endpoint()), temp_dir("bad"));
  CHECK_THROWS_WITH_AS(gw2.complete(nfe_request("x")), doctest::Contains("MalformedResponse"), Error);
}

TEST_CASE("concurrent cached_complete calls stay consistent") {
  fs::path dir = temp_dir("parallel");
  LlmGateway gw(BackendKind::Mock, demo_rules(), HttpBackendConfig{}, dir);
  ChatRequest req = nfe_request("dom_politics");

  std::vector<std::thread> workers;
  std::atomic<int> mismatches{0};
  for (int i = 0; i < 8; ++i) {
    workers.emplace_back([&] {
      for (int k = 0; k < 25; ++k) {
        if (gw.cached_complete(req).text != "domain is politics") ++mismatches;
      }
    });
  }
  for (auto& w : workers) w.join();
  CHECK(mismatches.load() == 0);
  // Every call after the first file write is a cache hit.
  CHECK(gw.backend_calls() >= 1);
}
