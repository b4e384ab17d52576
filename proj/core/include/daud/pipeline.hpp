#pragma once

#include "daud/augment.hpp"
#include "daud/detector.hpp"
#include "daud/dsra.hpp"
#include "daud/embedder.hpp"
#include "daud/gateway.hpp"
#include "daud/report.hpp"
#include "daud/split.hpp"
#include "daud/synthetic.hpp"
#include "daud/user_agent.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace daud {

struct PipelinePaths {
  std::string corpus;
  std::string rules;  // mock rule table, required for the mock backend
  std::string cache_dir = "cache";
  std::string out_dir = "out";
};

// One canonical config document; its digest keys every stage artifact, so any
// config change invalidates downstream stages wholesale.
struct PipelineConfig {
  PipelinePaths paths;
  std::string backend = "mock";       // "mock" | "http"
  HttpBackendConfig http;
  EmbedderConfig embedder;
  ModelConfig model;
  TrainConfig train;
  AgentConfig agent;
  AugmentConfig augment;
  std::string setting = "unseen";     // "general" | "unseen"
  std::string target_domain;
  std::string variant = "full";       // "full" | "no_ldae" | "no_dsra"
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  SplitRatios ratios;

  void validate() const;
  json to_json() const;
  static PipelineConfig from_json(const json& j);
  static PipelineConfig load(const std::filesystem::path& path);
  std::string digest() const;  // sha256 of the canonical serialization
};

enum class Stage { Ingest, Enrich, Styles, Profiles, Augment, Embed, Train, Evaluate };

std::string stage_to_string(Stage s);
Stage stage_from_string(const std::string& s);

struct StageRecord {
  std::string stage;
  std::string key;                    // sha256(stage, input digests, config digest)
  std::vector<std::string> outputs;   // paths relative to out_dir
  bool skipped = false;
  uint64_t backend_calls = 0;
};

struct PipelineOutcome {
  std::vector<StageRecord> stages;
  uint64_t backend_calls = 0;         // total across executed stages
  std::optional<RunReport> report;    // present when the evaluate stage ran or was reused
};

// Runs ingest → enrich → styles → profiles → augment → embed → train →
// evaluate up to and including `upto`, persisting artifacts under out_dir and
// skipping any stage whose key matches the manifest and whose outputs exist.
// Also rewrites run_stats.json on every invocation.
PipelineOutcome run_pipeline(const PipelineConfig& config, Stage upto = Stage::Evaluate);

// Artifact names under out_dir.
std::filesystem::path artifact_path(const PipelineConfig& config, const std::string& name);

}  // namespace daud
