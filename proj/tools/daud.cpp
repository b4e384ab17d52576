#include "daud/errors.hpp"
#include "daud/jsonl.hpp"
#include "daud/pipeline.hpp"
#include "daud/report.hpp"
#include "daud/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace {

struct CommonFlags {
  std::string config_path;
  std::string corpus;
  std::string backend;
  std::string setting;
  std::string target;
  std::optional<uint64_t> seed;
  std::string cache_dir;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "pipeline config file (JSON)");
  cmd->add_option("--corpus", flags.corpus, "corpus JSONL path (overrides config)");
  cmd->add_option("--backend", flags.backend, "mock|http")
      ->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--setting", flags.setting, "general|unseen")
      ->check(CLI::IsMember({"general", "unseen"}));
  cmd->add_option("--target", flags.target, "target domain");
  cmd->add_option("--seed", flags.seed, "single training seed (overrides the seed list)");
  cmd->add_option("--cache-dir", flags.cache_dir, "LLM response cache directory");
  cmd->add_option("--out-dir", flags.out_dir, "artifact output directory");
}

// Flags win over file values.
daud::PipelineConfig resolve_config(const CommonFlags& flags) {
  daud::PipelineConfig config;
  if (!flags.config_path.empty()) config = daud::PipelineConfig::load(flags.config_path);
  if (!flags.corpus.empty()) config.paths.corpus = flags.corpus;
  if (!flags.backend.empty()) config.backend = flags.backend;
  if (!flags.setting.empty()) config.setting = flags.setting;
  if (!flags.target.empty()) config.target_domain = flags.target;
  if (flags.seed) config.seeds = {*flags.seed};
  if (!flags.cache_dir.empty()) config.paths.cache_dir = flags.cache_dir;
  if (!flags.out_dir.empty()) config.paths.out_dir = flags.out_dir;
  return config;
}

int run_stage_command(const CommonFlags& flags, daud::Stage upto) {
  daud::PipelineConfig config = resolve_config(flags);
  daud::PipelineOutcome outcome = daud::run_pipeline(config, upto);
  for (const auto& rec : outcome.stages) {
    std::cout << rec.stage << ": " << (rec.skipped ? "skipped" : "ran");
    if (!rec.skipped && rec.backend_calls > 0) {
      std::cout << " (" << rec.backend_calls << " backend calls)";
    }
    std::cout << "\n";
  }
  if (outcome.report) {
    std::cout << "report: " << daud::artifact_path(config, "report.json").string() << "\n";
  }
  return 0;
}

int run_report_command(const CommonFlags& flags, const std::string& format) {
  daud::PipelineConfig config = resolve_config(flags);
  auto path = daud::artifact_path(config, "report.json");
  if (!std::filesystem::exists(path)) {
    daud::throw_data("MissingReport", path.string() + " not found; run `daud eval` first");
  }
  daud::RunReport report =
      daud::run_report_from_json(daud::json::parse(daud::read_file(path)));
  std::cout << daud::render_report(report, format);
  return 0;
}

int run_synth_command(const std::string& spec_path, const std::string& out_dir) {
  daud::SyntheticSpec spec;
  if (!spec_path.empty()) {
    spec = daud::SyntheticSpec::from_json(daud::json::parse(daud::read_file(spec_path)));
  }
  spec.validate();
  daud::SyntheticOutput output = daud::generate_synthetic(spec);
  std::filesystem::create_directories(out_dir);
  std::filesystem::path dir(out_dir);
  daud::save_corpus(output.corpus, dir / "corpus.jsonl");
  daud::write_file(dir / "rules.json", output.rules.to_json().dump(2) + "\n");
  daud::write_file(dir / "truth.json",
                   daud::synthetic_truth_to_json(output.truth).dump(2) + "\n");
  std::cout << "news: " << output.corpus.news.size()
            << "\nengagements: " << output.corpus.engagements.size()
            << "\nusers: " << output.corpus.user_ids().size() << "\nwrote " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-domain fake news detection with LLM-driven user modeling"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string report_format = "md";
  std::string synth_spec;

  struct SubSpec {
    const char* name;
    const char* help;
    daud::Stage upto;
  };
  const SubSpec stage_subs[] = {
      {"ingest", "Load, validate, and normalize the corpus", daud::Stage::Ingest},
      {"enrich", "Derive news summaries and feature descriptions", daud::Stage::Enrich},
      {"profiles", "Extract commenting styles and refine user profiles", daud::Stage::Profiles},
      {"augment", "Add personalized synthetic engagements", daud::Stage::Augment},
      {"train", "Train the detector on the configured split", daud::Stage::Train},
      {"eval", "Train and evaluate across all seeds", daud::Stage::Evaluate},
      {"run", "Execute the full pipeline end to end", daud::Stage::Evaluate},
  };
  std::map<std::string, daud::Stage> upto_by_name;
  for (const auto& sub : stage_subs) {
    CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
    add_common(cmd, flags);
    upto_by_name[sub.name] = sub.upto;
  }

  CLI::App* report_cmd = app.add_subcommand("report", "Render the evaluation report");
  add_common(report_cmd, flags);
  report_cmd->add_option("--format", report_format, "md|json")
      ->check(CLI::IsMember({"md", "json", "markdown"}));

  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus + mock rules");
  synth_cmd->add_option("--spec", synth_spec, "synthetic spec file (JSON)");
  synth_cmd->add_option("--out-dir", flags.out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "report") return run_report_command(flags, report_format);
    if (name == "synth") return run_synth_command(synth_spec, flags.out_dir);
    return run_stage_command(flags, upto_by_name.at(name));
  } catch (const daud::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return daud::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
