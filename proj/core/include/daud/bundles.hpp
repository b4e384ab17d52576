#pragma once

#include "daud/corpus.hpp"
#include "daud/dsra.hpp"
#include "daud/embedder.hpp"
#include "daud/enrichment.hpp"
#include "daud/user_agent.hpp"

#include <map>
#include <string>
#include <vector>

namespace daud {

// Sorted domain name -> adversary class index.
std::map<std::string, int> domain_indices(const Corpus& corpus);

// Assembles model inputs per news item. The full and no_dsra variants embed
// the enriched description, refined profiles, and summary-based engagement
// texts, and include synthetic engagements; no_ldae falls back to raw article
// text stand-ins and real engagements only. Identical texts embed once.
class BundleFactory {
 public:
  BundleFactory(const Corpus& corpus, const EnrichedIndex& enriched,
                const std::vector<UserProfile>& profiles, ModelVariant variant,
                TextEmbedder& embedder);

  NewsBundle build(const std::string& news_id);
  std::vector<NewsBundle> build_many(const std::vector<std::string>& news_ids);

 private:
  Tensor embed_cached(const std::string& text);
  const EnrichedNews& enriched_at(const std::string& news_id) const;
  std::string engagement_text(const std::string& news_id) const;
  std::string profile_text(const std::string& user_id) const;

  const Corpus& corpus_;
  const EnrichedIndex& enriched_;
  ModelVariant variant_;
  TextEmbedder& embedder_;
  std::map<std::string, int> domains_;
  std::map<std::string, std::string> profile_texts_;
  std::map<std::string, std::vector<const EngagementRecord*>> by_user_;
  std::map<std::string, std::vector<const EngagementRecord*>> by_news_;
  std::map<std::string, Tensor> embedding_cache_;
};

}  // namespace daud
