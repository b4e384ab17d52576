#pragma once

#include "daud/corpus.hpp"
#include "daud/embedder.hpp"
#include "daud/enrichment.hpp"
#include "daud/user_agent.hpp"

#include <map>
#include <string>
#include <vector>

namespace daud {

struct AugmentConfig {
  int top_candidates = 10;  // T most similar unengaged items per user
};

// Unengaged items ranked by max cosine between their summary embedding and
// any engaged-history summary embedding; ties break on ascending id. Throws
// NoHistory when the user has no real engagements.
std::vector<std::string> select_candidates(const std::string& user_id, const Corpus& corpus,
                                           const EnrichedIndex& enriched, TextEmbedder& embedder,
                                           const AugmentConfig& config);

struct AugmentOutcome {
  std::string user_id;
  std::vector<std::string> candidates;           // ranked, size <= T
  std::vector<std::string> engaging;             // subset of candidates
  std::map<std::string, std::string> comments;   // keys == engaging
  std::map<std::string, std::string> failures;   // candidate id -> error code
  std::string skipped_reason;                    // non-empty when user skipped
};

struct AugmentResult {
  std::vector<EngagementRecord> added;  // synthetic=true, ready to append
  std::vector<AugmentOutcome> outcomes;
};

// Personalized augmentation: each profiled user decides Repost/Ignore on its
// candidates and writes an in-voice comment for every Repost. A failing
// candidate is recorded and skipped; the rest of the user's batch proceeds.
AugmentResult augment_engagements(const Corpus& corpus, const EnrichedIndex& enriched,
                                  const StyleIndex& styles,
                                  const std::vector<UserProfile>& profiles,
                                  TextEmbedder& embedder, LlmGateway& gateway,
                                  const AugmentConfig& config);

json augment_outcome_to_json(const AugmentOutcome& outcome);

}  // namespace daud
