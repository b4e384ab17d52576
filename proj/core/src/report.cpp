#include "daud/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace daud {
namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string auc_cell(const std::optional<double>& auc) {
  return auc ? fixed4(*auc) : std::string("—");
}

std::string metrics_row(const std::string& label, const Metrics& m) {
  return "| " + label + " | " + fixed4(m.precision) + " | " + fixed4(m.recall) + " | " +
         fixed4(m.f1) + " | " + auc_cell(m.auc) + " |\n";
}

}  // namespace

json run_report_to_json(const RunReport& report) {
  json per_seed = json::array();
  for (const auto& m : report.per_seed) per_seed.push_back(metrics_to_json(m));
  return json{{"setting", report.setting},
              {"target_domain", report.target_domain},
              {"variant", report.variant},
              {"seeds", report.seeds},
              {"per_seed", per_seed},
              {"mean", metrics_to_json(report.summary.mean)},
              {"std", metrics_to_json(report.summary.std)},
              {"config_digest", report.config_digest},
              {"created_at", report.created_at}};
}

RunReport run_report_from_json(const json& j) {
  RunReport report;
  report.setting = j.at("setting").get<std::string>();
  report.target_domain = j.at("target_domain").get<std::string>();
  report.variant = j.at("variant").get<std::string>();
  report.seeds = j.at("seeds").get<std::vector<uint64_t>>();
  for (const auto& m : j.at("per_seed")) report.per_seed.push_back(metrics_from_json(m));
  report.summary.mean = metrics_from_json(j.at("mean"));
  report.summary.std = metrics_from_json(j.at("std"));
  report.summary.runs = report.per_seed.size();
  report.config_digest = j.at("config_digest").get<std::string>();
  report.created_at = j.at("created_at").get<std::string>();
  return report;
}

std::string render_report(const RunReport& report, const std::string& format) {
  if (format == "json") return run_report_to_json(report).dump(2) + "\n";
  if (format != "markdown" && format != "md")
    throw_config("UnknownFormat", "report format '" + format + "'");

  std::string out;
  out += "# Detection report\n\n";
  out += "- setting: " + report.setting + "\n";
  out += "- target domain: " + report.target_domain + "\n";
  out += "- variant: " + report.variant + "\n";
  out += "- config digest: " + report.config_digest + "\n";
  out += "- created: " + report.created_at + "\n\n";
  out += "| Run | Prec. | Rec. | F1 | AUC |\n";
  out += "| --- | --- | --- | --- | --- |\n";
  for (size_t i = 0; i < report.per_seed.size(); ++i) {
    std::string label = i < report.seeds.size()
                            ? "seed " + std::to_string(report.seeds[i])
                            : "run " + std::to_string(i + 1);
    out += metrics_row(label, report.per_seed[i]);
  }
  out += metrics_row("mean", report.summary.mean);
  out += metrics_row("std", report.summary.std);
  return out;
}

RunReport evaluate_setting(const Corpus& corpus, const EnrichedIndex& enriched,
                           const std::vector<UserProfile>& profiles, TextEmbedder& embedder,
                           const EvalSpec& spec) {
  std::set<std::string> domains = corpus.domains();
  if (!domains.count(spec.target_domain))
    throw_data("UnknownDomain", "target domain '" + spec.target_domain + "'");
  size_t non_target = domains.size() - 1;
  if (spec.setting == EvalSetting::Unseen && non_target < 2)
    throw_data("InsufficientDomains", "unseen setting needs at least 2 source domains, corpus has " +
                                          std::to_string(non_target));
  if (spec.setting == EvalSetting::General && domains.size() < 2)
    throw_data("InsufficientDomains", "general setting needs at least 2 domains");
  if (spec.seeds.empty()) throw_config("InvalidSeeds", "no seeds to evaluate");

  ModelConfig model_config = spec.model;
  model_config.n_domains = domains.size();
  model_config.dropout = spec.train.dropout;
  model_config.validate();
  spec.train.validate();

  BundleFactory factory(corpus, enriched, profiles, spec.variant, embedder);
  std::map<std::string, NewsBundle> cache;
  auto bundles_for = [&](const std::vector<std::string>& ids) {
    std::vector<NewsBundle> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
      auto it = cache.find(id);
      if (it == cache.end()) it = cache.emplace(id, factory.build(id)).first;
      out.push_back(it->second);
    }
    return out;
  };

  RunReport report;
  report.setting = setting_to_string(spec.setting);
  report.target_domain = spec.target_domain;
  report.variant = variant_to_string(spec.variant);
  report.seeds = spec.seeds;
  report.config_digest = spec.config_digest;

  for (uint64_t seed : spec.seeds) {
    SplitPlan plan = build_split(corpus, spec.setting, spec.target_domain, spec.ratios, seed);
    check_split_leakage(plan, corpus);

    std::vector<NewsBundle> train = bundles_for(plan.train);
    std::vector<NewsBundle> val = bundles_for(plan.val);
    std::vector<NewsBundle> test = bundles_for(plan.test);

    DsraModel model(model_config, spec.variant, seed);
    train_model(model, train, val, spec.train, seed);

    std::vector<int> labels;
    labels.reserve(test.size());
    for (const auto& b : test) labels.push_back(b.label > 0.5 ? 1 : 0);
    report.per_seed.push_back(compute_metrics(labels, predict_batch(model, test)));
  }

  report.summary = aggregate_runs(report.per_seed);
  report.created_at = utc_timestamp();
  return report;
}

}  // namespace daud
