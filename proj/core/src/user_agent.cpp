#include "daud/user_agent.hpp"

#include "daud/digest.hpp"
#include "daud/prompts.hpp"
#include "daud/split.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <set>

namespace daud {
namespace {

int64_t ts_or_min(const std::optional<int64_t>& ts) {
  return ts.value_or(std::numeric_limits<int64_t>::min());
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<DomainShare> domain_histogram(const std::vector<const EngagementRecord*>& records,
                                          const Corpus& corpus) {
  std::map<std::string, size_t> counts;
  for (const auto* rec : records) counts[corpus.news_at(rec->news_id).domain] += 1;
  std::vector<DomainShare> shares;
  for (const auto& [domain, count] : counts) shares.push_back({domain, count});
  std::sort(shares.begin(), shares.end(), [](const DomainShare& a, const DomainShare& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.domain < b.domain;
  });
  return shares;
}

double safe_div(double num, double den) { return den > 0 ? num / den : 0.0; }

double f1_from(double tp, double fp, double fn) {
  double p = safe_div(tp, tp + fp);
  double r = safe_div(tp, tp + fn);
  return (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
}

}  // namespace

UserProfile initial_profile(const std::string& user_id, const Corpus& corpus,
                            const std::optional<CommentingFeature>& style, LlmGateway& gateway) {
  UserProfile profile;
  profile.user_id = user_id;
  auto records = corpus.real_engagements_of(user_id);
  if (records.empty()) {
    profile.profile_text = kGenericProfileText;
    return profile;
  }
  auto history = domain_histogram(records, corpus);
  std::string style_text = style ? style->style_text : std::string();
  ChatRequest req = build_profile_init_prompt(history, style_text);
  ChatResponse resp = gateway.cached_complete(req);
  auto fields = parse_block(resp.text, schema_for(PromptKind::ProfileInit));
  profile.profile_text = fields.at("profile");
  return profile;
}

EngagementDecision predict_engagement(const UserProfile& profile, const NewsItem& item,
                                      const EnrichedNews& enriched, LlmGateway& gateway) {
  ChatRequest req = build_engage_prompt(profile.profile_text, item.text, enriched.features);
  ChatResponse resp = gateway.cached_complete(req);
  auto fields = parse_block(resp.text, schema_for(PromptKind::EngagePredict));
  EngagementDecision decision;
  decision.explanation = fields.at("explanation");
  std::string verdict = lower(fields.at("decision"));
  if (verdict == "repost") {
    decision.repost = true;
  } else if (verdict == "ignore") {
    decision.repost = false;
  } else {
    throw_backend("UnparseableDecision",
                  "engagement decision must be Repost or Ignore, got '" + fields.at("decision") +
                      "' for news " + item.id);
  }
  return decision;
}

AgentSample sample_agent_items(const std::string& user_id, const Corpus& corpus,
                               const AgentConfig& config) {
  AgentSample sample;
  auto records = corpus.real_engagements_of(user_id);
  std::stable_sort(records.begin(), records.end(),
                   [](const EngagementRecord* a, const EngagementRecord* b) {
                     auto ka = std::make_pair(ts_or_min(a->timestamp), a->news_id);
                     auto kb = std::make_pair(ts_or_min(b->timestamp), b->news_id);
                     return ka < kb;
                   });
  size_t take = std::min(records.size(), static_cast<size_t>(config.batch_positives));
  std::set<std::string> engaged;
  for (const auto* rec : records) engaged.insert(rec->news_id);

  int64_t lo = std::numeric_limits<int64_t>::max();
  int64_t hi = std::numeric_limits<int64_t>::min();
  bool any_ts = false;
  for (size_t i = 0; i < take; ++i) {
    sample.positives.push_back(records[i]->news_id);
    const auto& ts = corpus.news_at(records[i]->news_id).timestamp;
    if (ts) {
      any_ts = true;
      lo = std::min(lo, *ts);
      hi = std::max(hi, *ts);
    }
  }

  // Pseudo-negative pool: unengaged items published inside the positives'
  // window (everything when no positive carries a timestamp).
  std::vector<std::string> pool;
  for (const auto& item : corpus.news) {
    if (engaged.count(item.id)) continue;
    if (any_ts) {
      if (!item.timestamp) continue;
      if (*item.timestamp < lo || *item.timestamp > hi) continue;
    }
    pool.push_back(item.id);
  }
  std::sort(pool.begin(), pool.end());
  deterministic_shuffle(pool, config.negative_seed ^ fnv1a64(user_id));
  size_t want = sample.positives.size() * static_cast<size_t>(config.negatives_per_positive);
  if (pool.size() > want) pool.resize(want);
  sample.negatives = pool;
  return sample;
}

UserProfile refine_profile(UserProfile profile, const Corpus& corpus, const EnrichedIndex& enriched,
                           LlmGateway& gateway, const AgentConfig& config) {
  auto enriched_at = [&](const std::string& id) -> const EnrichedNews& {
    auto it = enriched.find(id);
    if (it == enriched.end())
      throw_data("MissingEnrichment", "no enriched features for news " + id);
    return it->second;
  };

  AgentSample sample = sample_agent_items(profile.user_id, corpus, config);
  while (profile.version < config.max_iterations) {
    RefinementStep step;
    step.iteration = profile.version + 1;
    try {
      for (const auto& id : sample.positives) {
        const NewsItem& item = corpus.news_at(id);
        EngagementDecision d = predict_engagement(profile, item, enriched_at(id), gateway);
        step.evaluated.push_back({id, d.repost, true, d.explanation});
      }
      for (const auto& id : sample.negatives) {
        const NewsItem& item = corpus.news_at(id);
        EngagementDecision d = predict_engagement(profile, item, enriched_at(id), gateway);
        step.evaluated.push_back({id, d.repost, false, d.explanation});
      }
    } catch (const Error& e) {
      throw RefineAborted(profile, e);
    }
    for (const auto& item : step.evaluated)
      if (item.predicted_repost != item.actual_repost) step.mispredictions += 1;
    if (step.mispredictions == 0) break;

    // Apply one profile revision per miss, in news-timestamp order; commit the
    // round atomically so a failed call cannot leave a half-updated profile.
    std::vector<const EvaluatedItem*> misses;
    for (const auto& item : step.evaluated)
      if (item.predicted_repost != item.actual_repost) misses.push_back(&item);
    std::stable_sort(misses.begin(), misses.end(),
                     [&](const EvaluatedItem* a, const EvaluatedItem* b) {
                       auto ka = std::make_pair(ts_or_min(corpus.news_at(a->news_id).timestamp),
                                                a->news_id);
                       auto kb = std::make_pair(ts_or_min(corpus.news_at(b->news_id).timestamp),
                                                b->news_id);
                       return ka < kb;
                     });
    std::string round_text = profile.profile_text;
    try {
      for (const auto* miss : misses) {
        const NewsItem& item = corpus.news_at(miss->news_id);
        ChatRequest req = build_update_prompt(round_text, item.text,
                                              enriched_at(miss->news_id).features,
                                              miss->explanation, miss->predicted_repost);
        ChatResponse resp = gateway.cached_complete(req);
        auto fields = parse_block(resp.text, schema_for(PromptKind::ProfileUpdate));
        round_text = fields.at("profile");
      }
    } catch (const Error& e) {
      throw RefineAborted(profile, e);
    }
    profile.profile_text = round_text;
    step.updated_profile_text = round_text;
    profile.trace.push_back(std::move(step));
    profile.version = static_cast<int>(profile.trace.size());
  }
  return profile;
}

AuxReport evaluate_agent(const std::vector<UserProfile>& profiles, const Corpus& corpus,
                         const EnrichedIndex& enriched, LlmGateway& gateway,
                         const AgentConfig& config) {
  double tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& profile : profiles) {
    AgentSample sample = sample_agent_items(profile.user_id, corpus, config);
    auto judge = [&](const std::string& id, bool actual) {
      auto it = enriched.find(id);
      if (it == enriched.end())
        throw_data("MissingEnrichment", "no enriched features for news " + id);
      EngagementDecision d = predict_engagement(profile, corpus.news_at(id), it->second, gateway);
      if (d.repost && actual) tp += 1;
      else if (d.repost && !actual) fp += 1;
      else if (!d.repost && actual) fn += 1;
      else tn += 1;
    };
    for (const auto& id : sample.positives) judge(id, true);
    for (const auto& id : sample.negatives) judge(id, false);
  }
  double total = tp + fp + tn + fn;
  if (total == 0) throw_data("EmptyInput", "no items evaluated across all profiles");
  AuxReport report;
  report.precision = safe_div(tp, tp + fp);
  report.recall = safe_div(tp, tp + fn);
  report.accuracy = (tp + tn) / total;
  report.micro_f1 = report.accuracy;
  report.macro_f1 = 0.5 * (f1_from(tp, fp, fn) + f1_from(tn, fn, fp));
  return report;
}

json aux_report_to_json(const AuxReport& report) {
  return json{{"precision", report.precision},
              {"recall", report.recall},
              {"accuracy", report.accuracy},
              {"micro_f1", report.micro_f1},
              {"macro_f1", report.macro_f1}};
}

void save_profiles(const std::vector<UserProfile>& profiles, const std::filesystem::path& path) {
  std::vector<json> lines;
  for (const auto& p : profiles) {
    json trace = json::array();
    for (const auto& step : p.trace) {
      json evaluated = json::array();
      for (const auto& item : step.evaluated)
        evaluated.push_back({{"news_id", item.news_id},
                             {"predicted_repost", item.predicted_repost},
                             {"actual_repost", item.actual_repost},
                             {"explanation", item.explanation}});
      trace.push_back({{"iteration", step.iteration},
                       {"mispredictions", step.mispredictions},
                       {"updated_profile_text", step.updated_profile_text},
                       {"evaluated", evaluated}});
    }
    lines.push_back({{"user_id", p.user_id},
                     {"profile_text", p.profile_text},
                     {"version", p.version},
                     {"trace", trace}});
  }
  write_jsonl(path, lines);
}

std::vector<UserProfile> load_profiles(const std::filesystem::path& path) {
  std::vector<UserProfile> profiles;
  for (const auto& line : read_jsonl(path)) {
    UserProfile p;
    p.user_id = line.at("user_id").get<std::string>();
    p.profile_text = line.at("profile_text").get<std::string>();
    p.version = line.at("version").get<int>();
    for (const auto& s : line.at("trace")) {
      RefinementStep step;
      step.iteration = s.at("iteration").get<int>();
      step.mispredictions = s.at("mispredictions").get<int>();
      step.updated_profile_text = s.at("updated_profile_text").get<std::string>();
      for (const auto& e : s.at("evaluated"))
        step.evaluated.push_back({e.at("news_id").get<std::string>(),
                                  e.at("predicted_repost").get<bool>(),
                                  e.at("actual_repost").get<bool>(),
                                  e.at("explanation").get<std::string>()});
      p.trace.push_back(std::move(step));
    }
    profiles.push_back(std::move(p));
  }
  return profiles;
}

}  // namespace daud
