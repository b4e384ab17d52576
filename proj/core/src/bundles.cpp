#include "daud/bundles.hpp"

#include "daud/prompts.hpp"

#include <algorithm>
#include <limits>

namespace daud {
namespace {

int64_t ts_or_min(const std::optional<int64_t>& ts) {
  return ts.value_or(std::numeric_limits<int64_t>::min());
}

bool earlier(const EngagementRecord* a, const EngagementRecord* b) {
  auto ka = std::make_tuple(ts_or_min(a->timestamp), a->news_id, a->user_id);
  auto kb = std::make_tuple(ts_or_min(b->timestamp), b->news_id, b->user_id);
  return ka < kb;
}

}  // namespace

std::map<std::string, int> domain_indices(const Corpus& corpus) {
  std::map<std::string, int> indices;
  int next = 0;
  for (const auto& domain : corpus.domains()) indices[domain] = next++;
  return indices;
}

BundleFactory::BundleFactory(const Corpus& corpus, const EnrichedIndex& enriched,
                             const std::vector<UserProfile>& profiles, ModelVariant variant,
                             TextEmbedder& embedder)
    : corpus_(corpus),
      enriched_(enriched),
      variant_(variant),
      embedder_(embedder),
      domains_(domain_indices(corpus)) {
  for (const auto& profile : profiles) profile_texts_[profile.user_id] = profile.profile_text;

  bool include_synthetic = variant_ != ModelVariant::NoLdae;
  for (const auto& rec : corpus_.engagements) {
    if (rec.synthetic && !include_synthetic) continue;
    by_user_[rec.user_id].push_back(&rec);
    by_news_[rec.news_id].push_back(&rec);
  }
  for (auto& [user_id, records] : by_user_) std::stable_sort(records.begin(), records.end(), earlier);
  for (auto& [news_id, records] : by_news_) std::stable_sort(records.begin(), records.end(), earlier);
}

Tensor BundleFactory::embed_cached(const std::string& text) {
  auto it = embedding_cache_.find(text);
  if (it != embedding_cache_.end()) return it->second;
  EmbeddingVector vec = embedder_.embed(text);
  Tensor row(1, vec.values.size());
  for (size_t j = 0; j < vec.values.size(); ++j) row.at(0, j) = vec.values[j];
  embedding_cache_[text] = row;
  return row;
}

const EnrichedNews& BundleFactory::enriched_at(const std::string& news_id) const {
  auto it = enriched_.find(news_id);
  if (it == enriched_.end())
    throw_data("MissingEnrichment", "no enriched features for news " + news_id);
  return it->second;
}

std::string BundleFactory::engagement_text(const std::string& news_id) const {
  if (variant_ == ModelVariant::NoLdae) return corpus_.news_at(news_id).text + " REPOST";
  return enriched_at(news_id).summary + " REPOST";
}

std::string BundleFactory::profile_text(const std::string& user_id) const {
  if (variant_ == ModelVariant::NoLdae) {
    // Raw stand-in: the user's most recent comments, oldest first.
    auto it = by_user_.find(user_id);
    if (it == by_user_.end() || it->second.empty()) return "";
    const auto& records = it->second;
    size_t first = records.size() > 20 ? records.size() - 20 : 0;
    std::string joined;
    for (size_t i = first; i < records.size(); ++i) {
      if (!joined.empty()) joined += "\n";
      joined += records[i]->comment;
    }
    return joined;
  }
  auto it = profile_texts_.find(user_id);
  if (it == profile_texts_.end())
    throw_data("MissingProfile", "no profile for user " + user_id);
  return it->second;
}

NewsBundle BundleFactory::build(const std::string& news_id) {
  const NewsItem& item = corpus_.news_at(news_id);
  NewsBundle bundle;
  bundle.news_id = news_id;
  bundle.label = item.label == VeracityLabel::Fake ? 1.0 : 0.0;
  bundle.domain_index = domains_.at(item.domain);
  bundle.h_x = embed_cached(item.text);
  if (variant_ == ModelVariant::NoLdae) {
    bundle.h_d = bundle.h_x;
  } else {
    const EnrichedNews& extra = enriched_at(news_id);
    bundle.h_d = embed_cached(extra.summary + "\n" + render_news_features(extra.features));
  }

  auto it = by_news_.find(news_id);
  if (it == by_news_.end()) return bundle;  // zero engaging users

  // by_news_ order gives users sorted by their engagement on this item.
  for (const EngagementRecord* on_target : it->second) {
    UserInputs user;
    user.user_id = on_target->user_id;
    user.h_p = embed_cached(profile_text(on_target->user_id));

    // History up to and including the reaction to this news, which therefore
    // sits at the most recent position.
    const auto& history = by_user_.at(on_target->user_id);
    for (const EngagementRecord* rec : history) {
      user.h_e.push_back(embed_cached(engagement_text(rec->news_id)));
      user.h_c.push_back(embed_cached(rec->comment));
      if (rec == on_target) break;
    }
    bundle.users.push_back(std::move(user));
  }
  return bundle;
}

std::vector<NewsBundle> BundleFactory::build_many(const std::vector<std::string>& news_ids) {
  std::vector<NewsBundle> bundles;
  bundles.reserve(news_ids.size());
  for (const auto& id : news_ids) bundles.push_back(build(id));
  return bundles;
}

}  // namespace daud
