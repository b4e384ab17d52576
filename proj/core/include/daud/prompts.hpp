#pragma once

#include "daud/gateway.hpp"

#include <string>
#include <vector>

namespace daud {

struct NewsFeatures {
  std::string news_domain;
  std::string sentiment;
  std::string structural;
  std::string logical_consistency;
  std::string source_credibility;
};

struct StyleFacets {
  std::string tone;
  std::string intent;
  std::string linguistic_style;
  std::string stance_consistency;
  std::string targeting_pattern;
};

// "News Domain: ...; Sentiment: ...; ..." as referenced by the engagement prompts.
std::string render_news_features(const NewsFeatures& f);
std::string render_style_facets(const StyleFacets& f);

// News analysis prompt. Throws EmptyArticle on blank text.
ChatRequest build_nfe_prompt(const std::string& article_text);

// Commenting-style prompt over a numbered comment list (caller pre-truncates).
ChatRequest build_style_prompt(const std::vector<std::string>& comments);

// Engagement prediction (simulated user decides Repost/Ignore).
ChatRequest build_engage_prompt(const std::string& profile_text, const std::string& article_text,
                                const NewsFeatures& features);

// Self-introduction revision after a misprediction. predicted_repost=false is
// the "predicted ignore, actually reposted" direction; true is the mirrored one.
ChatRequest build_update_prompt(const std::string& profile_text, const std::string& article_text,
                                const NewsFeatures& features, const std::string& explanation,
                                bool predicted_repost);

struct DomainShare {
  std::string domain;
  size_t count = 0;
};

// First-cut self-introduction from the engagement-history domain histogram.
ChatRequest build_profile_init_prompt(const std::vector<DomainShare>& history,
                                      const std::string& style_text);

// Comment generation in the user's voice for a predicted-engaging item.
ChatRequest build_comment_prompt(const std::string& profile_text, const StyleFacets& style,
                                 const std::string& article_text, const std::string& summary);

// Fixed profile used when a user has no engagement history at all.
extern const char* const kGenericProfileText;

}  // namespace daud
