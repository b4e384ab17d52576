#pragma once

#include "daud/bundles.hpp"
#include "daud/detector.hpp"
#include "daud/metrics.hpp"
#include "daud/split.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace daud {

struct RunReport {
  std::string setting;
  std::string target_domain;
  std::string variant;
  std::vector<uint64_t> seeds;
  std::vector<Metrics> per_seed;
  MetricsSummary summary;
  std::string config_digest;
  std::string created_at;
};

json run_report_to_json(const RunReport& report);
RunReport run_report_from_json(const json& j);

// format is "json" or "markdown" ("md" accepted). The markdown table uses the
// column set Prec. / Rec. / F1 / AUC and renders an undefined AUC as an em
// dash cell.
std::string render_report(const RunReport& report, const std::string& format);

struct EvalSpec {
  EvalSetting setting = EvalSetting::Unseen;
  std::string target_domain;
  std::vector<uint64_t> seeds;
  ModelConfig model;
  TrainConfig train;
  ModelVariant variant = ModelVariant::Full;
  SplitRatios ratios;
  std::string config_digest;
};

// For each seed: build_split, leakage assertion, train, test metrics. A
// failing seed aborts the whole report. Bundles are assembled once and reused
// across seeds (they do not depend on the seed).
RunReport evaluate_setting(const Corpus& corpus, const EnrichedIndex& enriched,
                           const std::vector<UserProfile>& profiles, TextEmbedder& embedder,
                           const EvalSpec& spec);

}  // namespace daud
