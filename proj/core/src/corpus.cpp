#include "daud/corpus.hpp"

#include "daud/errors.hpp"

#include <algorithm>
#include <limits>

namespace daud {

namespace fs = std::filesystem;

std::string label_to_string(VeracityLabel label) {
  return label == VeracityLabel::Fake ? "fake" : "true";
}

VeracityLabel label_from_string(const std::string& s) {
  if (s == "fake") return VeracityLabel::Fake;
  if (s == "true") return VeracityLabel::True;
  throw_data("UnknownLabel", "label value '" + s + "'");
}

const NewsItem* Corpus::find_news(const std::string& id) const {
  auto it = news_index.find(id);
  return it == news_index.end() ? nullptr : &news[it->second];
}

const NewsItem& Corpus::news_at(const std::string& id) const {
  const NewsItem* item = find_news(id);
  if (!item) throw_data("DanglingReference", "news id '" + id + "'");
  return *item;
}

std::set<std::string> Corpus::domains() const {
  std::set<std::string> out;
  for (const auto& n : news) out.insert(n.domain);
  return out;
}

std::set<std::string> Corpus::user_ids() const {
  std::set<std::string> out;
  for (const auto& e : engagements) out.insert(e.user_id);
  return out;
}

std::vector<const EngagementRecord*> Corpus::real_engagements_of(const std::string& user_id) const {
  std::vector<const EngagementRecord*> out;
  for (const auto& e : engagements) {
    if (!e.synthetic && e.user_id == user_id) out.push_back(&e);
  }
  return out;
}

void Corpus::rebuild_index() {
  news_index.clear();
  for (size_t i = 0; i < news.size(); ++i) news_index[news[i].id] = i;
}

namespace {

std::string require_string(const json& j, const char* field, size_t lineno) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_string()) {
    throw_data("MissingField", std::string("record ") + std::to_string(lineno) +
                                   " lacks string field '" + field + "'");
  }
  return it->get<std::string>();
}

std::optional<int64_t> optional_timestamp(const json& j) {
  auto it = j.find("timestamp");
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw_data("MissingField", "timestamp must be a number");
  return it->get<int64_t>();
}

}  // namespace

json news_to_json(const NewsItem& item) {
  json j{{"kind", "news"},
         {"id", item.id},
         {"domain", item.domain},
         {"text", item.text},
         {"label", label_to_string(item.label)}};
  if (item.timestamp) j["timestamp"] = *item.timestamp;
  return j;
}

json engagement_to_json(const EngagementRecord& rec) {
  json j{{"kind", "engagement"},
         {"user_id", rec.user_id},
         {"news_id", rec.news_id},
         {"comment", rec.comment}};
  if (rec.timestamp) j["timestamp"] = *rec.timestamp;
  if (rec.synthetic) j["synthetic"] = true;
  return j;
}

Corpus load_corpus(const fs::path& path, LoadStats* stats) {
  Corpus corpus;
  std::vector<json> records = read_jsonl(path);

  struct PendingEngagement {
    EngagementRecord rec;
    size_t file_order;
  };
  std::vector<PendingEngagement> pending;

  size_t lineno = 0;
  for (const auto& j : records) {
    ++lineno;
    std::string kind = require_string(j, "kind", lineno);
    if (kind == "news") {
      NewsItem item;
      item.id = require_string(j, "id", lineno);
      item.domain = require_string(j, "domain", lineno);
      item.text = require_string(j, "text", lineno);
      item.label = label_from_string(require_string(j, "label", lineno));
      item.timestamp = optional_timestamp(j);
      if (corpus.news_index.count(item.id)) {
        throw_data("DuplicateNewsId", "news id '" + item.id + "'");
      }
      corpus.news_index[item.id] = corpus.news.size();
      corpus.news.push_back(std::move(item));
    } else if (kind == "engagement") {
      EngagementRecord rec;
      rec.user_id = require_string(j, "user_id", lineno);
      rec.news_id = require_string(j, "news_id", lineno);
      rec.comment = require_string(j, "comment", lineno);
      rec.timestamp = optional_timestamp(j);
      rec.synthetic = j.value("synthetic", false);
      pending.push_back({std::move(rec), lineno});
    } else {
      throw_data("MissingField", "record " + std::to_string(lineno) + " has unknown kind '" + kind + "'");
    }
  }

  // Engagements may precede their news item in the file; resolve after the full read.
  size_t duplicates = 0;
  std::unordered_map<std::string, size_t> slot_of_pair;  // "user\x1fnews" -> index in corpus.engagements
  auto sort_key = [](const PendingEngagement& p) {
    int64_t ts = p.rec.timestamp.value_or(std::numeric_limits<int64_t>::max());
    return std::pair<int64_t, size_t>(ts, p.file_order);
  };
  for (auto& p : pending) {
    if (!corpus.news_index.count(p.rec.news_id)) {
      throw_data("DanglingReference", "engagement references missing news id '" + p.rec.news_id + "'");
    }
    std::string key = p.rec.user_id + '\x1f' + p.rec.news_id;
    auto it = slot_of_pair.find(key);
    if (it == slot_of_pair.end()) {
      slot_of_pair[key] = corpus.engagements.size();
      corpus.engagements.push_back(std::move(p.rec));
    } else {
      ++duplicates;
      // Keep the earliest-timestamped record for the pair.
      EngagementRecord& kept = corpus.engagements[it->second];
      PendingEngagement kept_wrap{kept, 0};  // file order of kept record is earlier by construction
      if (sort_key(p) < sort_key(kept_wrap)) kept = std::move(p.rec);
    }
  }
  if (stats) stats->duplicate_engagements_dropped = duplicates;
  return corpus;
}

void save_corpus(const Corpus& corpus, const fs::path& path) {
  std::vector<json> records;
  records.reserve(corpus.news.size() + corpus.engagements.size());
  for (const auto& n : corpus.news) records.push_back(news_to_json(n));
  for (const auto& e : corpus.engagements) records.push_back(engagement_to_json(e));
  write_jsonl(path, records);
}

}  // namespace daud
