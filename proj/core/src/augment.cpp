#include "daud/augment.hpp"

#include "daud/prompts.hpp"

#include <algorithm>
#include <set>

namespace daud {
namespace {

const EnrichedNews& enriched_at(const EnrichedIndex& enriched, const std::string& id) {
  auto it = enriched.find(id);
  if (it == enriched.end()) throw_data("MissingEnrichment", "no enriched features for news " + id);
  return it->second;
}

}  // namespace

std::vector<std::string> select_candidates(const std::string& user_id, const Corpus& corpus,
                                           const EnrichedIndex& enriched, TextEmbedder& embedder,
                                           const AugmentConfig& config) {
  auto records = corpus.real_engagements_of(user_id);
  if (records.empty()) throw_data("NoHistory", "user " + user_id + " has no engagement history");

  std::set<std::string> engaged;
  for (const auto* rec : records) engaged.insert(rec->news_id);

  std::vector<EmbeddingVector> history;
  for (const auto& id : engaged)
    history.push_back(embedder.embed(enriched_at(enriched, id).summary));

  struct Scored {
    std::string id;
    double score;
  };
  std::vector<Scored> scored;
  for (const auto& item : corpus.news) {
    if (engaged.count(item.id)) continue;
    EmbeddingVector candidate = embedder.embed(enriched_at(enriched, item.id).summary);
    double best = -2.0;
    for (const auto& h : history) best = std::max(best, cosine(candidate, h));
    scored.push_back({item.id, best});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (scored.size() > static_cast<size_t>(config.top_candidates))
    scored.resize(static_cast<size_t>(config.top_candidates));

  std::vector<std::string> ids;
  for (const auto& s : scored) ids.push_back(s.id);
  return ids;
}

AugmentResult augment_engagements(const Corpus& corpus, const EnrichedIndex& enriched,
                                  const StyleIndex& styles,
                                  const std::vector<UserProfile>& profiles,
                                  TextEmbedder& embedder, LlmGateway& gateway,
                                  const AugmentConfig& config) {
  AugmentResult result;
  for (const auto& profile : profiles) {
    AugmentOutcome outcome;
    outcome.user_id = profile.user_id;
    if (corpus.real_engagements_of(profile.user_id).empty()) {
      outcome.skipped_reason = "NoHistory";
      result.outcomes.push_back(std::move(outcome));
      continue;
    }
    auto style_it = styles.find(profile.user_id);
    if (style_it == styles.end()) {
      outcome.skipped_reason = "NoStyle";
      result.outcomes.push_back(std::move(outcome));
      continue;
    }

    outcome.candidates = select_candidates(profile.user_id, corpus, enriched, embedder, config);
    for (const auto& id : outcome.candidates) {
      const NewsItem& item = corpus.news_at(id);
      const EnrichedNews& extra = enriched_at(enriched, id);
      try {
        EngagementDecision decision = predict_engagement(profile, item, extra, gateway);
        if (!decision.repost) continue;
        ChatRequest req = build_comment_prompt(profile.profile_text, style_it->second.facets,
                                               item.text, extra.summary);
        ChatResponse resp = gateway.cached_complete(req);
        auto fields = parse_block(resp.text, schema_for(PromptKind::CommentGen));
        outcome.engaging.push_back(id);
        outcome.comments[id] = fields.at("comment");

        EngagementRecord rec;
        rec.user_id = profile.user_id;
        rec.news_id = id;
        rec.comment = fields.at("comment");
        rec.timestamp = item.timestamp;
        rec.synthetic = true;
        result.added.push_back(std::move(rec));
      } catch (const Error& e) {
        outcome.failures[id] = e.code();
      }
    }
    result.outcomes.push_back(std::move(outcome));
  }
  return result;
}

json augment_outcome_to_json(const AugmentOutcome& outcome) {
  return json{{"user_id", outcome.user_id},
              {"candidates", outcome.candidates},
              {"engaging", outcome.engaging},
              {"comments", outcome.comments},
              {"failures", outcome.failures},
              {"skipped_reason", outcome.skipped_reason}};
}

}  // namespace daud
