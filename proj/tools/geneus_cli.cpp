#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "geneus/config.hpp"
#include "geneus/consistency.hpp"
#include "geneus/ingest.hpp"
#include "geneus/provider.hpp"
#include "geneus/quality.hpp"
#include "geneus/run_store.hpp"
#include "geneus/schema.hpp"
#include "geneus/service.hpp"
#include "geneus/storygen.hpp"
#include "geneus/util.hpp"

namespace {

using namespace geneus;

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kProviderError = 2;
constexpr int kUsageError = 64;

// Flags shared by the subcommands that talk to a provider.
struct CommonFlags {
  std::string config_path;
  std::string provider_kind;
  std::string fixture;
  std::string model;
  std::optional<double> temperature;
  std::optional<std::int64_t> seed;
  std::string output_dir;
};

void add_common_flags(CLI::App& cmd, CommonFlags& flags) {
  cmd.add_option("--config", flags.config_path, "TOML config file");
  cmd.add_option("--provider", flags.provider_kind,
                 "Provider kind: http, replay, record, mock")
      ->check(CLI::IsMember({"http", "replay", "record", "mock"}));
  cmd.add_option("--fixture", flags.fixture,
                 "Fixture file for the replay/record provider");
  cmd.add_option("--model", flags.model, "Model id for provider requests");
  cmd.add_option("--temperature", flags.temperature, "Sampling temperature");
  cmd.add_option("--seed", flags.seed, "Request seed");
  cmd.add_option("--output-dir", flags.output_dir,
                 "Directory for persisted runs");
}

api::AppConfig resolve_config(const CommonFlags& flags) {
  api::AppConfig config;
  if (!flags.config_path.empty()) {
    config = api::parse_config(util::read_file(flags.config_path));
  }
  api::apply_env_overrides(config);
  if (!flags.provider_kind.empty()) {
    config.provider.kind = provider::kind_from_name(flags.provider_kind);
  }
  if (!flags.fixture.empty()) config.provider.fixture_path = flags.fixture;
  if (!flags.model.empty()) config.provider.model_id = flags.model;
  if (!flags.output_dir.empty()) config.output_dir = flags.output_dir;
  api::validate(config);
  return config;
}

storygen::PipelineOptions pipeline_options(const api::AppConfig& config,
                                           const CommonFlags& flags,
                                           promptkit::TemplateStore& templates) {
  templates = promptkit::TemplateStore::builtin();
  if (!config.templates_dir.empty()) {
    templates.load_directory(config.templates_dir);
  }
  storygen::PipelineOptions opts;
  opts.params.model_id = config.provider.model_id;
  if (flags.temperature) opts.params.temperature = *flags.temperature;
  if (flags.seed) opts.params.seed = *flags.seed;
  opts.templates = &templates;
  return opts;
}

/// Exit code for a failure: provider trouble gets its own code so callers
/// can retry, everything else is a user/validation problem.
int classify_failure(const std::exception& e) {
  if (auto* pipeline = dynamic_cast<const storygen::PipelineError*>(&e)) {
    return model::is_provider_error(pipeline->cause) ? kProviderError
                                                     : kUserError;
  }
  if (dynamic_cast<const model::ProviderError*>(&e)) return kProviderError;
  if (auto* all = dynamic_cast<const consistency::AllRunsFailed*>(&e)) {
    for (const auto& f : all->failures) {
      if (f.provider_error) return kProviderError;
    }
    return kUserError;
  }
  if (auto* arm = dynamic_cast<const consistency::ArmError*>(&e)) {
    return model::is_provider_error(arm->cause) ? kProviderError : kUserError;
  }
  return kUserError;
}

int cmd_generate(const CommonFlags& flags, const std::string& input,
                 const std::string& output) {
  if (!std::filesystem::exists(input)) {
    std::fprintf(stderr, "error: input file not found: %s\n", input.c_str());
    return kUserError;
  }
  api::AppConfig config = resolve_config(flags);
  promptkit::TemplateStore templates;
  storygen::PipelineOptions opts = pipeline_options(config, flags, templates);

  ingest::SourceDocument doc = ingest::load_document(input);
  model::ProviderPtr provider = provider::make_provider(config.provider);

  schema::GenerationResult result = storygen::run_pipeline(doc, *provider, opts);

  runstore::RunStore store(config.output_dir);
  runstore::RunRecord record = store.save(result);
  if (!output.empty()) {
    util::write_file_atomic(output, schema::serialize(result));
  }

  std::printf("run %s: %zu requirements, %zu stories, %zu test cases\n",
              record.run_id.c_str(), result.requirements.requirements.size(),
              result.stories.size(), result.test_cases.size());
  std::printf("result: %s\n",
              output.empty() ? record.result_path.string().c_str()
                             : output.c_str());
  return kOk;
}

int cmd_lint(const std::string& input, std::optional<double> min_score,
             bool as_json, const std::string& config_path) {
  api::AppConfig config;
  if (!config_path.empty()) {
    config = api::parse_config(util::read_file(config_path));
    api::validate(config);
  }
  if (!std::filesystem::exists(input)) {
    std::fprintf(stderr, "error: input file not found: %s\n", input.c_str());
    return kUserError;
  }

  schema::GenerationResult result;
  try {
    Json doc = Json::parse(util::read_file(input));
    result = schema::result_from_json(doc);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: cannot read result JSON: %s\n", e.what());
    return kUserError;
  }

  quality::QualityReport report = quality::rust_report(
      result, config.duplicate_threshold, config.actor_lexicon);

  if (as_json) {
    std::printf("%s\n", quality::report_to_json(report).dump(2).c_str());
  } else {
    for (const auto& [category, score] : report.category_scores) {
      std::printf("%s: %.2f\n", quality::category_name(category), score);
    }
    for (const auto& dup : report.duplicates) {
      std::printf("duplicate pair: story %zu and story %zu (similarity %.4f)\n",
                  dup.first, dup.second, dup.similarity);
    }
  }

  if (min_score) {
    for (const auto& [category, score] : report.category_scores) {
      if (score < *min_score) {
        std::fprintf(stderr, "category %s scored %.2f, below --min-score %.2f\n",
                     quality::category_name(category), score, *min_score);
        return kUserError;
      }
    }
  }
  return kOk;
}

int cmd_consistency(const CommonFlags& flags, const std::string& input,
                    int runs, bool compare_io) {
  if (!std::filesystem::exists(input)) {
    std::fprintf(stderr, "error: input file not found: %s\n", input.c_str());
    return kUserError;
  }
  api::AppConfig config = resolve_config(flags);
  promptkit::TemplateStore templates;
  storygen::PipelineOptions opts = pipeline_options(config, flags, templates);

  ingest::SourceDocument doc = ingest::load_document(input);
  model::ProviderPtr provider = provider::make_provider(config.provider);

  runstore::RunStore store(config.output_dir);
  consistency::RepeatOptions repeat;
  repeat.pipeline = opts;
  repeat.store = &store;

  consistency::RepeatedRuns runs_out =
      consistency::run_repeated(doc, *provider, runs, repeat);
  for (const auto& failure : runs_out.failures) {
    std::fprintf(stderr, "run %d failed at %s: %s\n", failure.run_index + 1,
                 failure.stage.c_str(), failure.message.c_str());
  }

  std::vector<schema::RequirementSet> sets;
  sets.reserve(runs_out.results.size());
  for (const auto& r : runs_out.results) sets.push_back(r.requirements);
  if (sets.size() < 2) {
    std::fprintf(stderr,
                 "error: only %zu run(s) succeeded; need at least 2 to score\n",
                 sets.size());
    return kUserError;
  }

  consistency::StabilityScore score = consistency::requirement_stability(sets);
  std::printf("requirement stability over %d runs: exact=%.6f relaxed=%.6f\n",
              score.n_runs, score.mean_pairwise_similarity,
              score.relaxed_mean_pairwise_similarity);

  const auto report_dir = std::filesystem::path(config.output_dir);
  util::write_file_atomic((report_dir / "stability.json").string(),
                          consistency::stability_to_json(score).dump(2) + "\n");
  util::write_file_atomic((report_dir / "stability_matrix.csv").string(),
                          consistency::matrix_to_csv(score.per_pair));
  std::printf("reports: %s, %s\n",
              (report_dir / "stability.json").string().c_str(),
              (report_dir / "stability_matrix.csv").string().c_str());

  if (compare_io) {
    consistency::ComparisonReport cmp =
        consistency::compare_rat_vs_io(doc, *provider, opts);
    std::printf("refined-vs-direct: %zu matched, %zu only-refined, %zu only-direct\n",
                cmp.matched.size(), cmp.rat_only.size(), cmp.io_only.size());
    for (const auto& r : cmp.rat_only) {
      std::printf("only refined arm: [%s] %s\n", r.id.c_str(), r.text.c_str());
    }
    for (const auto& r : cmp.io_only) {
      std::printf("only direct arm: [%s] %s\n", r.id.c_str(), r.text.c_str());
    }
    util::write_file_atomic(
        (report_dir / "comparison.json").string(),
        consistency::comparison_to_json(cmp).dump(2) + "\n");
  }
  return kOk;
}

int cmd_serve(const CommonFlags& flags, const std::string& host, int port) {
  api::AppConfig config = resolve_config(flags);
  model::ProviderPtr provider = provider::make_provider(config.provider);
  api::Service service(config, provider);
  std::printf("listening on http://%s:%d\n", host.c_str(), port);
  if (!service.listen(host, port)) {
    std::fprintf(stderr, "error: cannot bind %s:%d\n", host.c_str(), port);
    return kUserError;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Turns a requirements document into user stories, deliverables, "
               "and test cases via an LLM pipeline"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  std::string gen_input, gen_output;
  CLI::App* generate =
      app.add_subcommand("generate", "Run the pipeline over a document");
  generate->add_option("--input", gen_input, "Requirements document")->required();
  generate->add_option("--output", gen_output,
                       "Also write the result JSON to this path");
  add_common_flags(*generate, gen_flags);

  std::string lint_input, lint_config;
  std::optional<double> lint_min_score;
  bool lint_json = false;
  CLI::App* lint = app.add_subcommand("lint", "Score a result JSON");
  lint->add_option("--input", lint_input, "Result JSON file")->required();
  lint->add_option("--min-score", lint_min_score,
                   "Exit 1 when any category scores below this");
  lint->add_flag("--json", lint_json, "Emit the full report as JSON");
  lint->add_option("--config", lint_config, "TOML config file");

  CommonFlags cons_flags;
  std::string cons_input;
  int cons_runs = 10;
  bool cons_compare = false;
  CLI::App* cons = app.add_subcommand(
      "consistency", "Repeat the pipeline and measure requirement stability");
  cons->add_option("--input", cons_input, "Requirements document")->required();
  cons->add_option("--runs", cons_runs, "Number of repeated runs (>= 2)");
  cons->add_flag("--compare-io", cons_compare,
                 "Also diff refined extraction against a single direct ask");
  add_common_flags(*cons, cons_flags);

  CommonFlags serve_flags;
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  CLI::App* serve = app.add_subcommand("serve", "Start the REST service");
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--port", serve_port, "Port");
  add_common_flags(*serve, serve_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen_flags, gen_input, gen_output);
    if (lint->parsed()) {
      return cmd_lint(lint_input, lint_min_score, lint_json, lint_config);
    }
    if (cons->parsed()) {
      if (cons_runs < 2) {
        std::fprintf(stderr, "usage error: --runs must be at least 2\n");
        return kUsageError;
      }
      return cmd_consistency(cons_flags, cons_input, cons_runs, cons_compare);
    }
    if (serve->parsed()) return cmd_serve(serve_flags, serve_host, serve_port);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return classify_failure(e);
  }
  return kUsageError;
}
