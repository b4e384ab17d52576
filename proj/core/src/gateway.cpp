#include "daud/gateway.hpp"

#include "daud/digest.hpp"
#include "daud/errors.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <mutex>
#include <regex>
#include <thread>

namespace daud {

namespace fs = std::filesystem;

std::string backend_to_string(BackendKind kind) {
  return kind == BackendKind::Mock ? "mock" : "http";
}

BackendKind backend_from_string(const std::string& s) {
  if (s == "mock") return BackendKind::Mock;
  if (s == "http") return BackendKind::Http;
  throw_config("UnknownBackend", "'" + s + "'");
}

json request_to_json(const ChatRequest& req) {
  return json{{"prompt_kind", prompt_kind_to_string(req.prompt_kind)},
              {"system_text", req.system_text},
              {"user_text", req.user_text},
              {"temperature", req.temperature},
              {"max_tokens", req.max_tokens},
              {"schema_id", req.schema_id}};
}

std::string request_digest(const ChatRequest& req) {
  // json::dump() emits keys alphabetically, which fixes the field order.
  return sha256_hex(request_to_json(req).dump());
}

namespace {

MockRuleTable::Marker marker_from_json(const json& j) {
  MockRuleTable::Marker m;
  m.name = j.value("name", "");
  m.pattern = j.at("pattern").get<std::string>();
  return m;
}

json marker_to_json(const MockRuleTable::Marker& m) {
  return json{{"name", m.name}, {"pattern", m.pattern}};
}

// All ordered capture-group matches, deduplicated, in order of appearance.
std::vector<std::string> captures(const std::string& text, const std::string& pattern) {
  std::vector<std::string> out;
  std::regex re(pattern);
  auto begin = std::sregex_iterator(text.begin(), text.end(), re);
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    std::string v = it->size() > 1 ? (*it)[1].str() : (*it)[0].str();
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

std::string instantiate(const std::string& tpl,
                        const std::map<std::string, std::vector<std::string>>& values) {
  std::string out;
  size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] != '{') {
      out.push_back(tpl[i++]);
      continue;
    }
    size_t close = tpl.find('}', i);
    if (close == std::string::npos) {
      out.append(tpl.substr(i));
      break;
    }
    std::string spec = tpl.substr(i + 1, close - i - 1);
    std::string name = spec, prefix;
    size_t bar = spec.find('|');
    bool tagged = bar != std::string::npos;
    if (tagged) {
      name = spec.substr(0, bar);
      prefix = spec.substr(bar + 1);
    }
    auto it = values.find(name);
    if (it == values.end()) {
      out.append(tpl.substr(i, close - i + 1));  // unknown placeholder stays verbatim
    } else {
      for (size_t k = 0; k < it->second.size(); ++k) {
        if (k) out.append(tagged ? " " : ", ");
        out.append(prefix).append(it->second[k]);
      }
    }
    i = close + 1;
  }
  return out;
}

}  // namespace

MockRuleTable MockRuleTable::from_json(const json& j) {
  MockRuleTable table;
  for (const auto& [kind_name, rj] : j.at("rules").items()) {
    prompt_kind_from_string(kind_name);  // validates the key
    Rule rule;
    rule.kind = rj.at("kind").get<std::string>();
    rule.default_output = rj.value("default", "");
    if (rj.contains("markers")) {
      for (const auto& mj : rj["markers"]) rule.markers.push_back(marker_from_json(mj));
    }
    rule.template_text = rj.value("template", "");
    if (rule.kind == "match") {
      rule.left = marker_from_json(rj.at("left"));
      rule.right = marker_from_json(rj.at("right"));
      rule.match_output = rj.at("match").get<std::string>();
      rule.nomatch_output = rj.at("nomatch").get<std::string>();
    } else if (rule.kind == "profile_edit") {
      rule.tag_marker = marker_from_json(rj.at("tag_marker"));
      rule.item_marker = marker_from_json(rj.at("item_marker"));
      rule.add_phrase = rj.at("add_phrase").get<std::string>();
      rule.remove_phrase = rj.at("remove_phrase").get<std::string>();
    } else if (rule.kind == "table") {
      rule.key1 = marker_from_json(rj.at("key1"));
      rule.key2 = marker_from_json(rj.at("key2"));
      rule.outputs = rj.at("outputs").get<std::map<std::string, std::string>>();
    } else if (rule.kind != "template") {
      throw_config("UnknownRuleKind", "mock rule kind '" + rule.kind + "'");
    }
    table.rules[kind_name] = std::move(rule);
  }
  return table;
}

MockRuleTable MockRuleTable::load(const fs::path& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw_config("MalformedRules", path.string());
  return from_json(j);
}

json MockRuleTable::to_json() const {
  json rules_json = json::object();
  for (const auto& [kind_name, rule] : rules) {
    json rj{{"kind", rule.kind}, {"default", rule.default_output}};
    if (!rule.markers.empty()) {
      rj["markers"] = json::array();
      for (const auto& m : rule.markers) rj["markers"].push_back(marker_to_json(m));
    }
    if (!rule.template_text.empty()) rj["template"] = rule.template_text;
    if (rule.kind == "match") {
      rj["left"] = marker_to_json(rule.left);
      rj["right"] = marker_to_json(rule.right);
      rj["match"] = rule.match_output;
      rj["nomatch"] = rule.nomatch_output;
    } else if (rule.kind == "profile_edit") {
      rj["tag_marker"] = marker_to_json(rule.tag_marker);
      rj["item_marker"] = marker_to_json(rule.item_marker);
      rj["add_phrase"] = rule.add_phrase;
      rj["remove_phrase"] = rule.remove_phrase;
    } else if (rule.kind == "table") {
      rj["key1"] = marker_to_json(rule.key1);
      rj["key2"] = marker_to_json(rule.key2);
      rj["outputs"] = rule.outputs;
    }
    rules_json[kind_name] = std::move(rj);
  }
  return json{{"rules", rules_json}};
}

bool MockRuleTable::has_rule(PromptKind kind) const {
  return rules.count(prompt_kind_to_string(kind)) > 0;
}

std::string MockRuleTable::respond(const ChatRequest& req) const {
  auto it = rules.find(prompt_kind_to_string(req.prompt_kind));
  if (it == rules.end()) {
    throw_backend("NoRuleForKind", "mock table lacks " + prompt_kind_to_string(req.prompt_kind));
  }
  const Rule& rule = it->second;
  const std::string& text = req.user_text;

  if (rule.kind == "template") {
    std::map<std::string, std::vector<std::string>> values;
    for (const auto& m : rule.markers) {
      auto caps = captures(text, m.pattern);
      if (caps.empty()) return rule.default_output;
      values[m.name] = std::move(caps);
    }
    return instantiate(rule.template_text, values);
  }

  if (rule.kind == "match") {
    auto lhs = captures(text, rule.left.pattern);
    auto rhs = captures(text, rule.right.pattern);
    if (lhs.empty() || rhs.empty()) return rule.default_output;
    bool hit = false;
    for (const auto& l : lhs) {
      if (std::find(rhs.begin(), rhs.end(), l) != rhs.end()) hit = true;
    }
    std::map<std::string, std::vector<std::string>> values{{rule.left.name, lhs}, {rule.right.name, rhs}};
    return instantiate(hit ? rule.match_output : rule.nomatch_output, values);
  }

  if (rule.kind == "profile_edit") {
    auto items = captures(text, rule.item_marker.pattern);
    bool add = text.find(rule.add_phrase) != std::string::npos;
    bool remove = text.find(rule.remove_phrase) != std::string::npos;
    if (items.empty() || add == remove) return rule.default_output;
    std::vector<std::string> tags = captures(text, rule.tag_marker.pattern);
    const std::string& item = items.front();
    if (add) {
      if (std::find(tags.begin(), tags.end(), item) == tags.end()) tags.push_back(item);
    } else {
      tags.erase(std::remove(tags.begin(), tags.end(), item), tags.end());
    }
    std::sort(tags.begin(), tags.end());
    std::map<std::string, std::vector<std::string>> values{{rule.tag_marker.name, tags}};
    return instantiate(rule.template_text, values);
  }

  if (rule.kind == "table") {
    auto k1 = captures(text, rule.key1.pattern);
    auto k2 = captures(text, rule.key2.pattern);
    std::string key = (k1.empty() ? "" : k1.front()) + "|" + (k2.empty() ? "" : k2.front());
    auto out = rule.outputs.find(key);
    return out == rule.outputs.end() ? rule.default_output : out->second;
  }

  throw_config("UnknownRuleKind", rule.kind);
}

LlmGateway::LlmGateway(BackendKind kind, MockRuleTable rules, HttpBackendConfig http,
                       fs::path cache_dir)
    : kind_(kind), rules_(std::move(rules)), http_(std::move(http)), cache_dir_(std::move(cache_dir)) {}

ChatResponse LlmGateway::complete(const ChatRequest& req) {
  if (req.schema_id != schema_for(req.prompt_kind).id) {
    throw_config("SchemaMismatch", "schema '" + req.schema_id + "' does not match prompt kind " +
                                       prompt_kind_to_string(req.prompt_kind));
  }
  backend_calls_.fetch_add(1);
  if (kind_ == BackendKind::Mock) {
    return ChatResponse{rules_.respond(req), BackendKind::Mock, false, request_digest(req)};
  }
  return http_complete(req);
}

ChatResponse LlmGateway::http_complete(const ChatRequest& req) {
  // Bounded parallelism across threads sharing this gateway.
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < std::max(1, http_.max_in_flight); });
  ++in_flight_;
  lock.unlock();
  struct Slot {
    LlmGateway* g;
    ~Slot() {
      std::lock_guard guard(g->mu_);
      --g->in_flight_;
      g->cv_.notify_one();
    }
  } slot{this};

  json body{{"model", http_.model},
            {"messages", json::array()},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens}};
  if (!req.system_text.empty()) {
    body["messages"].push_back({{"role", "system"}, {"content", req.system_text}});
  }
  body["messages"].push_back({{"role", "user"}, {"content", req.user_text}});

  httplib::Headers headers;
  if (const char* token = std::getenv(http_.token_env.c_str())) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  std::string last_error;
  for (int attempt = 0; attempt < http_.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(http_.backoff_base_ms << (attempt - 1)));
    }
    httplib::Client client(http_.endpoint);
    client.set_read_timeout(60, 0);
    auto res = client.Post(http_.path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "connection failed";
      continue;
    }
    if (res->status != 200) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty() ||
        !parsed["choices"][0].contains("message") ||
        !parsed["choices"][0]["message"].contains("content")) {
      throw_backend("MalformedResponse", "chat response lacks choices[0].message.content");
    }
    return ChatResponse{parsed["choices"][0]["message"]["content"].get<std::string>(),
                        BackendKind::Http, false, request_digest(req)};
  }
  throw_backend("BackendUnavailable", http_.endpoint + " after " + std::to_string(http_.max_attempts) +
                                          " attempts (" + last_error + ")");
}

fs::path LlmGateway::cache_path(const std::string& digest) const {
  return cache_dir_ / digest.substr(0, 2) / (digest + ".json");
}

ChatResponse LlmGateway::cached_complete(const ChatRequest& req) {
  std::string digest = request_digest(req);
  fs::path path = cache_path(digest);
  if (fs::exists(path)) {
    json entry = json::parse(read_file(path), nullptr, false);
    if (entry.is_discarded()) throw_backend("CacheCorrupt", path.string());
    std::string text = entry.value("response", json::object()).value("text", "");
    std::string checksum = entry.value("checksum", "");
    if (checksum != sha256_hex(text)) throw_backend("CacheCorrupt", path.string());
    ChatResponse res;
    res.text = text;
    res.backend = backend_from_string(entry["response"].value("backend", "mock"));
    res.cached = true;
    res.request_digest = digest;
    return res;
  }

  ChatResponse fresh = complete(req);
  json entry{{"request", request_to_json(req)},
             {"response", {{"text", fresh.text}, {"backend", backend_to_string(fresh.backend)}}},
             {"created_at", utc_timestamp()},
             {"checksum", sha256_hex(fresh.text)}};
  if (!fs::exists(path)) write_file(path, entry.dump(2) + "\n");
  return fresh;
}

}  // namespace daud
