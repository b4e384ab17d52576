#include "daud/enrichment.hpp"

#include "daud/errors.hpp"

#include <algorithm>
#include <limits>

namespace daud {

namespace fs = std::filesystem;

EnrichedNews parse_nfe_output(const std::string& news_id, const std::string& output) {
  auto fields = parse_block(output, schema_by_id("nfe"));
  EnrichedNews out;
  out.news_id = news_id;
  out.summary = fields["summary"];
  out.features.news_domain = fields["news_domain"];
  out.features.sentiment = fields["sentiment"];
  out.features.structural = fields["structural"];
  out.features.logical_consistency = fields["logical_consistency"];
  out.features.source_credibility = fields["source_credibility"];
  return out;
}

EnrichedNews enrich_news(const NewsItem& item, LlmGateway& gateway) {
  ChatRequest req = build_nfe_prompt(item.text);
  ChatResponse res = gateway.cached_complete(req);
  return parse_nfe_output(item.id, res.text);
}

CommentingFeature extract_commenting_style(const std::string& user_id,
                                           const std::vector<EngagementRecord>& comments,
                                           LlmGateway& gateway) {
  if (comments.empty()) throw_data("NoComments", "user '" + user_id + "' has no comments");

  // Most recent 20 by (timestamp, file order), displayed oldest-first.
  std::vector<size_t> order(comments.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    int64_t ta = comments[a].timestamp.value_or(std::numeric_limits<int64_t>::min());
    int64_t tb = comments[b].timestamp.value_or(std::numeric_limits<int64_t>::min());
    return ta < tb;
  });
  size_t keep = std::min<size_t>(order.size(), 20);
  std::vector<std::string> texts;
  texts.reserve(keep);
  for (size_t i = order.size() - keep; i < order.size(); ++i) {
    texts.push_back(comments[order[i]].comment);
  }

  ChatRequest req = build_style_prompt(texts);
  ChatResponse res = gateway.cached_complete(req);
  auto fields = parse_block(res.text, schema_by_id("style"));
  CommentingFeature out;
  out.user_id = user_id;
  out.style_text = fields["style_text"];
  out.facets.tone = fields["tone"];
  out.facets.intent = fields["intent"];
  out.facets.linguistic_style = fields["linguistic_style"];
  out.facets.stance_consistency = fields["stance_consistency"];
  out.facets.targeting_pattern = fields["targeting_pattern"];
  return out;
}

void save_enriched(const EnrichedIndex& index, const fs::path& path) {
  std::vector<json> records;
  records.reserve(index.size());
  for (const auto& [id, e] : index) {
    records.push_back(json{{"news_id", e.news_id},
                           {"summary", e.summary},
                           {"features",
                            {{"news_domain", e.features.news_domain},
                             {"sentiment", e.features.sentiment},
                             {"structural", e.features.structural},
                             {"logical_consistency", e.features.logical_consistency},
                             {"source_credibility", e.features.source_credibility}}}});
  }
  write_jsonl(path, records);
}

EnrichedIndex load_enriched(const fs::path& path) {
  EnrichedIndex index;
  for (const auto& j : read_jsonl(path)) {
    EnrichedNews e;
    e.news_id = j.at("news_id").get<std::string>();
    e.summary = j.at("summary").get<std::string>();
    const auto& f = j.at("features");
    e.features.news_domain = f.at("news_domain").get<std::string>();
    e.features.sentiment = f.at("sentiment").get<std::string>();
    e.features.structural = f.at("structural").get<std::string>();
    e.features.logical_consistency = f.at("logical_consistency").get<std::string>();
    e.features.source_credibility = f.at("source_credibility").get<std::string>();
    index[e.news_id] = std::move(e);
  }
  return index;
}

void save_styles(const StyleIndex& index, const fs::path& path) {
  std::vector<json> records;
  records.reserve(index.size());
  for (const auto& [id, s] : index) {
    records.push_back(json{{"user_id", s.user_id},
                           {"style_text", s.style_text},
                           {"facets",
                            {{"tone", s.facets.tone},
                             {"intent", s.facets.intent},
                             {"linguistic_style", s.facets.linguistic_style},
                             {"stance_consistency", s.facets.stance_consistency},
                             {"targeting_pattern", s.facets.targeting_pattern}}}});
  }
  write_jsonl(path, records);
}

StyleIndex load_styles(const fs::path& path) {
  StyleIndex index;
  for (const auto& j : read_jsonl(path)) {
    CommentingFeature s;
    s.user_id = j.at("user_id").get<std::string>();
    s.style_text = j.at("style_text").get<std::string>();
    const auto& f = j.at("facets");
    s.facets.tone = f.at("tone").get<std::string>();
    s.facets.intent = f.at("intent").get<std::string>();
    s.facets.linguistic_style = f.at("linguistic_style").get<std::string>();
    s.facets.stance_consistency = f.at("stance_consistency").get<std::string>();
    s.facets.targeting_pattern = f.at("targeting_pattern").get<std::string>();
    index[s.user_id] = std::move(s);
  }
  return index;
}

}  // namespace daud
