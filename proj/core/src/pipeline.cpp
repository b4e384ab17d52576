#include "daud/pipeline.hpp"

#include "daud/bundles.hpp"
#include "daud/digest.hpp"
#include "daud/enrichment.hpp"
#include "daud/errors.hpp"
#include "daud/jsonl.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <utility>

namespace daud {

namespace fs = std::filesystem;

namespace {

json http_to_json(const HttpBackendConfig& h) {
  return json{{"endpoint", h.endpoint},       {"path", h.path},
              {"model", h.model},             {"max_attempts", h.max_attempts},
              {"backoff_base_ms", h.backoff_base_ms}, {"token_env", h.token_env},
              {"max_in_flight", h.max_in_flight}};
}

HttpBackendConfig http_from_json(const json& j) {
  HttpBackendConfig h;
  h.endpoint = j.value("endpoint", h.endpoint);
  h.path = j.value("path", h.path);
  h.model = j.value("model", h.model);
  h.max_attempts = j.value("max_attempts", h.max_attempts);
  h.backoff_base_ms = j.value("backoff_base_ms", h.backoff_base_ms);
  h.token_env = j.value("token_env", h.token_env);
  h.max_in_flight = j.value("max_in_flight", h.max_in_flight);
  return h;
}

std::string file_digest(const fs::path& path) { return sha256_hex(read_file(path)); }

struct Manifest {
  fs::path path;
  json doc;

  static Manifest open(const fs::path& out_dir) {
    Manifest m;
    m.path = out_dir / "manifest.json";
    m.doc = json{{"stages", json::object()}};
    if (fs::exists(m.path)) m.doc = json::parse(read_file(m.path));
    if (!m.doc.contains("stages")) m.doc["stages"] = json::object();
    return m;
  }

  bool fresh(const std::string& stage, const std::string& key,
             const std::vector<std::string>& outputs, const fs::path& out_dir) const {
    const json& stages = doc.at("stages");
    if (!stages.contains(stage)) return false;
    if (stages.at(stage).value("key", "") != key) return false;
    for (const auto& o : outputs) {
      if (!fs::exists(out_dir / o)) return false;
    }
    return true;
  }

  void record(const std::string& stage, const std::string& key,
              const std::vector<std::string>& outputs) {
    doc["stages"][stage] = json{{"key", key}, {"outputs", outputs}};
    write_file(path, doc.dump(2) + "\n");
  }
};

struct PipelineCtx {
  const PipelineConfig& config;
  fs::path out;
  std::string config_digest;
  Manifest manifest;
  LlmGateway* gateway = nullptr;
  CachingEmbedder* embedder = nullptr;
  std::vector<StageRecord> records;
  uint64_t backend_calls = 0;

  fs::path at(const std::string& name) const { return out / name; }

  std::string stage_key(const std::string& stage, const std::vector<fs::path>& inputs) const {
    std::string blob = stage;
    for (const auto& in : inputs) {
      blob += '\0';
      blob += file_digest(in);
    }
    blob += '\0';
    blob += config_digest;
    return sha256_hex(blob);
  }

  // Runs `body` unless the manifest already covers this stage with identical
  // inputs and existing outputs. Failures abort the pipeline, naming the stage.
  void stage(const std::string& name, const std::vector<fs::path>& inputs,
             const std::vector<std::string>& outputs, const std::function<void()>& body) {
    std::string key = stage_key(name, inputs);
    StageRecord rec;
    rec.stage = name;
    rec.key = key;
    rec.outputs = outputs;
    if (manifest.fresh(name, key, outputs, out)) {
      rec.skipped = true;
      records.push_back(std::move(rec));
      return;
    }
    uint64_t before = gateway ? gateway->backend_calls() : 0;
    try {
      body();
    } catch (const Error& e) {
      throw Error(e.kind(), e.code(), "stage " + name + ": " + e.what());
    }
    rec.backend_calls = (gateway ? gateway->backend_calls() : 0) - before;
    backend_calls += rec.backend_calls;
    manifest.record(name, key, outputs);
    records.push_back(std::move(rec));
  }
};

Corpus load_artifact_corpus(const fs::path& path) { return load_corpus(path); }

}  // namespace

void PipelineConfig::validate() const {
  if (paths.corpus.empty()) throw_config("paths.corpus", "corpus path is required");
  if (paths.out_dir.empty()) throw_config("paths.out_dir", "output directory is required");
  if (paths.cache_dir.empty()) throw_config("paths.cache_dir", "cache directory is required");
  BackendKind kind = backend_from_string(backend);
  if (kind == BackendKind::Mock && paths.rules.empty()) {
    throw_config("paths.rules", "mock backend needs a rule table");
  }
  if (kind == BackendKind::Http && http.endpoint.empty()) {
    throw_config("http.endpoint", "http backend needs an endpoint");
  }
  if (embedder.kind != "hash" && embedder.kind != "http") {
    throw_config("embedder.kind", "'" + embedder.kind + "'");
  }
  if (embedder.kind == "http" && embedder.endpoint.empty()) {
    throw_config("embedder.endpoint", "http embedder needs an endpoint");
  }
  if (static_cast<size_t>(embedder.dim) != model.d_in) {
    throw_config("embedder.dim", "must equal model.d_in");
  }
  setting_from_string(setting);
  variant_from_string(variant);
  if (target_domain.empty()) throw_config("target_domain", "target domain is required");
  if (seeds.empty()) throw_config("seeds", "at least one seed is required");
  ModelConfig wired = model;  // n_domains comes from the corpus at train time
  if (wired.n_domains == 0) wired.n_domains = 1;
  wired.validate();
  train.validate();
  if (agent.max_iterations < 0) throw_config("agent.max_iterations", "must be >= 0");
  if (agent.batch_positives < 1) throw_config("agent.batch_positives", "must be >= 1");
  if (agent.negatives_per_positive < 0) {
    throw_config("agent.negatives_per_positive", "must be >= 0");
  }
  if (augment.top_candidates < 0) throw_config("augment.top_candidates", "must be >= 0");
  double total = ratios.train + ratios.val + ratios.test;
  if (ratios.train <= 0 || ratios.val < 0 || ratios.test <= 0 ||
      std::abs(total - 1.0) > 1e-9) {
    throw_config("ratios", "train/val/test must be positive shares summing to 1");
  }
}

json PipelineConfig::to_json() const {
  return json{
      {"paths", json{{"corpus", paths.corpus},
                     {"rules", paths.rules},
                     {"cache_dir", paths.cache_dir},
                     {"out_dir", paths.out_dir}}},
      {"backend", backend},
      {"http", http_to_json(http)},
      {"embedder",
       json{{"kind", embedder.kind}, {"dim", embedder.dim}, {"endpoint", embedder.endpoint}}},
      {"model", model.to_json()},
      {"train", train.to_json()},
      {"agent", json{{"max_iterations", agent.max_iterations},
                     {"batch_positives", agent.batch_positives},
                     {"negatives_per_positive", agent.negatives_per_positive},
                     {"negative_seed", agent.negative_seed}}},
      {"augment", json{{"top_candidates", augment.top_candidates}}},
      {"setting", setting},
      {"target_domain", target_domain},
      {"variant", variant},
      {"seeds", seeds},
      {"ratios",
       json{{"train", ratios.train}, {"val", ratios.val}, {"test", ratios.test}}}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  if (j.contains("paths")) {
    const json& p = j.at("paths");
    c.paths.corpus = p.value("corpus", c.paths.corpus);
    c.paths.rules = p.value("rules", c.paths.rules);
    c.paths.cache_dir = p.value("cache_dir", c.paths.cache_dir);
    c.paths.out_dir = p.value("out_dir", c.paths.out_dir);
  }
  c.backend = j.value("backend", c.backend);
  if (j.contains("http")) c.http = http_from_json(j.at("http"));
  if (j.contains("embedder")) {
    const json& e = j.at("embedder");
    c.embedder.kind = e.value("kind", c.embedder.kind);
    c.embedder.dim = e.value("dim", c.embedder.dim);
    c.embedder.endpoint = e.value("endpoint", c.embedder.endpoint);
  }
  if (j.contains("model")) c.model = ModelConfig::from_json(j.at("model"));
  if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
  if (j.contains("agent")) {
    const json& a = j.at("agent");
    c.agent.max_iterations = a.value("max_iterations", c.agent.max_iterations);
    c.agent.batch_positives = a.value("batch_positives", c.agent.batch_positives);
    c.agent.negatives_per_positive =
        a.value("negatives_per_positive", c.agent.negatives_per_positive);
    c.agent.negative_seed = a.value("negative_seed", c.agent.negative_seed);
  }
  if (j.contains("augment")) {
    c.augment.top_candidates = j.at("augment").value("top_candidates", c.augment.top_candidates);
  }
  c.setting = j.value("setting", c.setting);
  c.target_domain = j.value("target_domain", c.target_domain);
  c.variant = j.value("variant", c.variant);
  c.seeds = j.value("seeds", c.seeds);
  if (j.contains("ratios")) {
    const json& r = j.at("ratios");
    c.ratios.train = r.value("train", c.ratios.train);
    c.ratios.val = r.value("val", c.ratios.val);
    c.ratios.test = r.value("test", c.ratios.test);
  }
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw_config("UnparseableConfig", std::string(e.what()));
  }
  return from_json(j);
}

std::string PipelineConfig::digest() const { return sha256_hex(to_json().dump()); }

std::string stage_to_string(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Enrich: return "enrich";
    case Stage::Styles: return "styles";
    case Stage::Profiles: return "profiles";
    case Stage::Augment: return "augment";
    case Stage::Embed: return "embed";
    case Stage::Train: return "train";
    case Stage::Evaluate: return "evaluate";
  }
  throw_config("UnknownStage", "unhandled stage enum");
}

Stage stage_from_string(const std::string& s) {
  for (Stage st : {Stage::Ingest, Stage::Enrich, Stage::Styles, Stage::Profiles, Stage::Augment,
                   Stage::Embed, Stage::Train, Stage::Evaluate}) {
    if (stage_to_string(st) == s) return st;
  }
  throw_config("UnknownStage", "'" + s + "'");
}

std::filesystem::path artifact_path(const PipelineConfig& config, const std::string& name) {
  return fs::path(config.paths.out_dir) / name;
}

PipelineOutcome run_pipeline(const PipelineConfig& config, Stage upto) {
  config.validate();
  fs::create_directories(config.paths.out_dir);
  fs::create_directories(config.paths.cache_dir);

  MockRuleTable rules;
  BackendKind kind = backend_from_string(config.backend);
  if (kind == BackendKind::Mock) rules = MockRuleTable::load(config.paths.rules);
  LlmGateway gateway(kind, std::move(rules), config.http, config.paths.cache_dir);
  auto base_embedder = make_embedder(config.embedder);
  CachingEmbedder embedder(*base_embedder);

  PipelineCtx ctx{config, fs::path(config.paths.out_dir), config.digest(),
                  Manifest::open(config.paths.out_dir)};
  ctx.gateway = &gateway;
  ctx.embedder = &embedder;

  const ModelVariant variant = variant_from_string(config.variant);
  const EvalSetting setting = setting_from_string(config.setting);
  const int last = static_cast<int>(upto);

  ctx.stage("ingest", {fs::path(config.paths.corpus)}, {"corpus.jsonl"}, [&] {
    Corpus corpus = load_corpus(config.paths.corpus);
    save_corpus(corpus, ctx.at("corpus.jsonl"));
  });

  if (last >= static_cast<int>(Stage::Enrich)) {
    ctx.stage("enrich", {ctx.at("corpus.jsonl")}, {"enriched.jsonl"}, [&] {
      Corpus corpus = load_artifact_corpus(ctx.at("corpus.jsonl"));
      EnrichedIndex enriched;
      for (const auto& item : corpus.news) {
        enriched[item.id] = enrich_news(item, gateway);
      }
      save_enriched(enriched, ctx.at("enriched.jsonl"));
    });
  }

  if (last >= static_cast<int>(Stage::Styles)) {
    ctx.stage("styles", {ctx.at("corpus.jsonl")}, {"styles.jsonl"}, [&] {
      Corpus corpus = load_artifact_corpus(ctx.at("corpus.jsonl"));
      StyleIndex styles;
      for (const auto& user : corpus.user_ids()) {
        std::vector<EngagementRecord> comments;
        for (const EngagementRecord* rec : corpus.real_engagements_of(user)) {
          if (!rec->comment.empty()) comments.push_back(*rec);
        }
        if (comments.empty()) continue;
        styles[user] = extract_commenting_style(user, comments, gateway);
      }
      save_styles(styles, ctx.at("styles.jsonl"));
    });
  }

  if (last >= static_cast<int>(Stage::Profiles)) {
    ctx.stage("profiles",
              {ctx.at("corpus.jsonl"), ctx.at("enriched.jsonl"), ctx.at("styles.jsonl")},
              {"profiles.jsonl"}, [&] {
                Corpus corpus = load_artifact_corpus(ctx.at("corpus.jsonl"));
                EnrichedIndex enriched = load_enriched(ctx.at("enriched.jsonl"));
                StyleIndex styles = load_styles(ctx.at("styles.jsonl"));
                std::vector<UserProfile> profiles;
                for (const auto& user : corpus.user_ids()) {
                  std::optional<CommentingFeature> style;
                  auto it = styles.find(user);
                  if (it != styles.end()) style = it->second;
                  UserProfile profile = initial_profile(user, corpus, style, gateway);
                  if (!corpus.real_engagements_of(user).empty()) {
                    profile = refine_profile(profile, corpus, enriched, gateway, config.agent);
                  }
                  profiles.push_back(std::move(profile));
                }
                save_profiles(profiles, ctx.at("profiles.jsonl"));
              });
  }

  if (last >= static_cast<int>(Stage::Augment)) {
    ctx.stage("augment",
              {ctx.at("corpus.jsonl"), ctx.at("enriched.jsonl"), ctx.at("styles.jsonl"),
               ctx.at("profiles.jsonl")},
              {"augmented.jsonl", "augment_outcomes.jsonl", "corpus_augmented.jsonl"}, [&] {
                Corpus corpus = load_artifact_corpus(ctx.at("corpus.jsonl"));
                EnrichedIndex enriched = load_enriched(ctx.at("enriched.jsonl"));
                StyleIndex styles = load_styles(ctx.at("styles.jsonl"));
                std::vector<UserProfile> profiles = load_profiles(ctx.at("profiles.jsonl"));
                AugmentResult result = augment_engagements(corpus, enriched, styles, profiles,
                                                           embedder, gateway, config.augment);

                // Synthetic engagements may add texture, never ground truth:
                // they cannot collide with a real (user, news) pair, reference
                // unknown items, or alter any news record.
                std::set<std::pair<std::string, std::string>> real_pairs;
                for (const auto& rec : corpus.engagements) {
                  real_pairs.insert({rec.user_id, rec.news_id});
                }
                for (const auto& rec : result.added) {
                  if (!rec.synthetic) {
                    throw_invariant("UnmarkedSynthetic",
                                    rec.user_id + " -> " + rec.news_id +
                                        " lacks the synthetic flag");
                  }
                  if (real_pairs.count({rec.user_id, rec.news_id})) {
                    throw_invariant("SyntheticCollision",
                                    rec.user_id + " already engaged " + rec.news_id);
                  }
                  corpus.news_at(rec.news_id);
                }

                std::vector<json> added_lines;
                for (const auto& rec : result.added) added_lines.push_back(engagement_to_json(rec));
                write_jsonl(ctx.at("augmented.jsonl"), added_lines);

                std::vector<json> outcome_lines;
                for (const auto& o : result.outcomes) {
                  outcome_lines.push_back(augment_outcome_to_json(o));
                }
                write_jsonl(ctx.at("augment_outcomes.jsonl"), outcome_lines);

                Corpus augmented = corpus;
                for (const auto& rec : result.added) augmented.engagements.push_back(rec);
                augmented.rebuild_index();
                save_corpus(augmented, ctx.at("corpus_augmented.jsonl"));
              });
  }

  if (last >= static_cast<int>(Stage::Embed)) {
    ctx.stage("embed",
              {ctx.at("corpus_augmented.jsonl"), ctx.at("enriched.jsonl"), ctx.at("profiles.jsonl")},
              {"embeddings.jsonl"}, [&] {
                Corpus corpus = load_artifact_corpus(ctx.at("corpus_augmented.jsonl"));
                EnrichedIndex enriched = load_enriched(ctx.at("enriched.jsonl"));
                std::vector<UserProfile> profiles = load_profiles(ctx.at("profiles.jsonl"));
                BundleFactory factory(corpus, enriched, profiles, variant, embedder);
                for (const auto& item : corpus.news) factory.build(item.id);
                embedder.save(ctx.at("embeddings.jsonl"));
              });
  }

  if (last >= static_cast<int>(Stage::Train)) {
    ctx.stage("train",
              {ctx.at("corpus_augmented.jsonl"), ctx.at("enriched.jsonl"),
               ctx.at("profiles.jsonl"), ctx.at("embeddings.jsonl")},
              {"checkpoint.json", "train_history.jsonl"}, [&] {
                Corpus corpus = load_artifact_corpus(ctx.at("corpus_augmented.jsonl"));
                EnrichedIndex enriched = load_enriched(ctx.at("enriched.jsonl"));
                std::vector<UserProfile> profiles = load_profiles(ctx.at("profiles.jsonl"));
                embedder.load(ctx.at("embeddings.jsonl"));

                uint64_t seed = config.seeds.front();
                SplitPlan plan =
                    build_split(corpus, setting, config.target_domain, config.ratios, seed);
                check_split_leakage(plan, corpus);

                BundleFactory factory(corpus, enriched, profiles, variant, embedder);
                std::vector<NewsBundle> train_b = factory.build_many(plan.train);
                std::vector<NewsBundle> val_b = factory.build_many(plan.val);

                ModelConfig mc = config.model;
                mc.n_domains = domain_indices(corpus).size();
                mc.dropout = config.train.dropout;
                DsraModel model(mc, variant, seed);
                TrainResult result =
                    train_model(model, train_b, val_b, config.train, seed, ctx.out);

                write_file(ctx.at("checkpoint.json"), model.checkpoint_json().dump(2) + "\n");
                std::vector<json> history;
                for (const auto& r : result.history) history.push_back(epoch_record_to_json(r));
                write_jsonl(ctx.at("train_history.jsonl"), history);
              });
  }

  PipelineOutcome outcome;
  if (last >= static_cast<int>(Stage::Evaluate)) {
    ctx.stage("evaluate",
              {ctx.at("corpus_augmented.jsonl"), ctx.at("enriched.jsonl"),
               ctx.at("profiles.jsonl"), ctx.at("embeddings.jsonl")},
              {"report.json", "report.md"}, [&] {
                Corpus corpus = load_artifact_corpus(ctx.at("corpus_augmented.jsonl"));
                EnrichedIndex enriched = load_enriched(ctx.at("enriched.jsonl"));
                std::vector<UserProfile> profiles = load_profiles(ctx.at("profiles.jsonl"));
                embedder.load(ctx.at("embeddings.jsonl"));

                EvalSpec spec;
                spec.setting = setting;
                spec.target_domain = config.target_domain;
                spec.seeds = config.seeds;
                spec.model = config.model;
                spec.train = config.train;
                spec.variant = variant;
                spec.ratios = config.ratios;
                spec.config_digest = ctx.config_digest;
                RunReport report = evaluate_setting(corpus, enriched, profiles, embedder, spec);

                write_file(ctx.at("report.json"), render_report(report, "json"));
                write_file(ctx.at("report.md"), render_report(report, "markdown"));
              });
    outcome.report = run_report_from_json(json::parse(read_file(ctx.at("report.json"))));
  }

  outcome.stages = std::move(ctx.records);
  outcome.backend_calls = ctx.backend_calls;

  json stats{{"config_digest", ctx.config_digest},
             {"backend_calls", outcome.backend_calls},
             {"created_at", utc_timestamp()},
             {"stages", json::array()}};
  for (const auto& rec : outcome.stages) {
    stats["stages"].push_back(json{{"stage", rec.stage},
                                   {"key", rec.key},
                                   {"outputs", rec.outputs},
                                   {"skipped", rec.skipped},
                                   {"backend_calls", rec.backend_calls}});
  }
  write_file(ctx.at("run_stats.json"), stats.dump(2) + "\n");
  return outcome;
}

}  // namespace daud
