#pragma once

#include "daud/corpus.hpp"
#include "daud/gateway.hpp"
#include "daud/prompts.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace daud {

struct EnrichedNews {
  std::string news_id;
  std::string summary;
  NewsFeatures features;
};

struct CommentingFeature {
  std::string user_id;
  std::string style_text;
  StyleFacets facets;
};

EnrichedNews parse_nfe_output(const std::string& news_id, const std::string& output);

EnrichedNews enrich_news(const NewsItem& item, LlmGateway& gateway);

// Distills a commenting style from the user's most recent comments (at most 20,
// shown oldest-first). Throws NoComments when the user never commented.
CommentingFeature extract_commenting_style(const std::string& user_id,
                                           const std::vector<EngagementRecord>& comments,
                                           LlmGateway& gateway);

using EnrichedIndex = std::map<std::string, EnrichedNews>;   // by news id
using StyleIndex = std::map<std::string, CommentingFeature>; // by user id

void save_enriched(const EnrichedIndex& index, const std::filesystem::path& path);
EnrichedIndex load_enriched(const std::filesystem::path& path);
void save_styles(const StyleIndex& index, const std::filesystem::path& path);
StyleIndex load_styles(const std::filesystem::path& path);

}  // namespace daud
