#pragma once

#include "daud/corpus.hpp"
#include "daud/enrichment.hpp"
#include "daud/errors.hpp"
#include "daud/gateway.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace daud {

struct AgentConfig {
  int max_iterations = 3;        // hard cap on refinement rounds
  int batch_positives = 5;       // engaged items evaluated per round
  int negatives_per_positive = 1;
  uint64_t negative_seed = 17;
};

struct EvaluatedItem {
  std::string news_id;
  bool predicted_repost = false;
  bool actual_repost = false;
  std::string explanation;
};

struct RefinementStep {
  int iteration = 0;  // 1-based, strictly increasing
  std::vector<EvaluatedItem> evaluated;
  int mispredictions = 0;
  std::string updated_profile_text;  // profile after this round's updates
};

struct UserProfile {
  std::string user_id;
  std::string profile_text;
  int version = 0;  // equals trace.size()
  std::vector<RefinementStep> trace;
};

struct EngagementDecision {
  bool repost = false;
  std::string explanation;
};

// Version-0 profile: the fixed generic template for empty histories, otherwise
// one ProfileInit completion over the domain histogram and commenting style.
UserProfile initial_profile(const std::string& user_id, const Corpus& corpus,
                            const std::optional<CommentingFeature>& style, LlmGateway& gateway);

// One Repost/Ignore decision for (profile, item). Throws UnparseableDecision.
EngagementDecision predict_engagement(const UserProfile& profile, const NewsItem& item,
                                      const EnrichedNews& enriched, LlmGateway& gateway);

// Carries the partial profile (trace so far) when a refinement round fails.
class RefineAborted : public Error {
 public:
  RefineAborted(UserProfile partial, const Error& cause)
      : Error(cause.kind(), cause.code(), cause.what()), partial_(std::move(partial)) {}
  const UserProfile& partial() const { return partial_; }

 private:
  UserProfile partial_;
};

// Iterative self-introduction refinement against the user's real engagements
// plus seeded same-period pseudo-negatives. Stops on a clean round or after
// max_iterations rounds; never exceeds the cap.
UserProfile refine_profile(UserProfile profile, const Corpus& corpus, const EnrichedIndex& enriched,
                           LlmGateway& gateway, const AgentConfig& config);

// Engagement-prediction report for the auxiliary evaluation: exactly these
// five fields. Micro-averaged F1 over both classes equals accuracy for a
// binary task; macro is the unweighted mean of per-class F1.
struct AuxReport {
  double precision = 0;
  double recall = 0;
  double accuracy = 0;
  double micro_f1 = 0;
  double macro_f1 = 0;
};

json aux_report_to_json(const AuxReport& report);

AuxReport evaluate_agent(const std::vector<UserProfile>& profiles, const Corpus& corpus,
                         const EnrichedIndex& enriched, LlmGateway& gateway,
                         const AgentConfig& config);

// The positives/pseudo-negatives a refinement or evaluation round looks at.
struct AgentSample {
  std::vector<std::string> positives;  // engaged news ids, timestamp order
  std::vector<std::string> negatives;  // seeded same-period unengaged ids
};
AgentSample sample_agent_items(const std::string& user_id, const Corpus& corpus,
                               const AgentConfig& config);

void save_profiles(const std::vector<UserProfile>& profiles, const std::filesystem::path& path);
std::vector<UserProfile> load_profiles(const std::filesystem::path& path);

}  // namespace daud
