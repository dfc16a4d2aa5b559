// psim command-line front end over the C API.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "psim/psim.h"

namespace {

using Json = nlohmann::json;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAbortThreshold = 3;

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallel;
  std::string endpoint;
  bool strict_replay = false;
  int verbose = 0;
};

struct SimulateOptions {
  std::string strategy;
  std::string pipeline;
  std::string personas;
};

struct AnalyzeOptions {
  std::vector<std::string> runs;
  std::string out;
  std::string group_by;
  std::string normalize = "count";
  std::string t_test = "welch";
  bool chitchat_breaks_runs = false;
  bool per_transcript_ratio = false;
  int verbose = 0;
};

struct StringDeleter {
  void operator()(char* s) const { psim_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct ContextDeleter {
  void operator()(psim_context* c) const { psim_context_destroy(c); }
};
using Context = std::unique_ptr<psim_context, ContextDeleter>;

int report_failure(psim_status status) {
  std::cerr << "psim: " << psim_status_name(status) << ": " << psim_last_error() << "\n";
  return status == PSIM_ERR_ABORT_THRESHOLD ? kExitAbortThreshold : kExitFailure;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("--parallel", o.parallel, "Concurrent backend requests")->check(CLI::PositiveNumber);
  cmd->add_option("--endpoint", o.endpoint, "Base URL for every HTTP backend");
  cmd->add_flag("--strict-replay", o.strict_replay, "Fail on replay cache misses");
  cmd->add_flag("-v,--verbose", o.verbose, "More logging (repeatable)");
}

Json common_overrides(const CommonOptions& o) {
  Json j = Json::object();
  if (o.seed) j["seed"] = *o.seed;
  if (o.parallel) j["parallel"] = *o.parallel;
  if (!o.out.empty()) j["output_dir"] = o.out;
  if (!o.endpoint.empty()) j["endpoint"] = o.endpoint;
  if (o.strict_replay) j["strict_replay"] = true;
  return j;
}

psim_status open_context(const CommonOptions& o, const Json& overrides, Context& ctx) {
  psim_context* raw = nullptr;
  psim_status st = psim_context_create_from_file(o.config.c_str(), &raw);
  if (st != PSIM_OK) return st;
  ctx.reset(raw);
  return psim_context_apply_overrides(ctx.get(), overrides.dump().c_str());
}

int cmd_personas(const CommonOptions& o) {
  psim_set_verbosity(o.verbose);
  Json overrides = common_overrides(o);
  if (!o.out.empty()) overrides["personas_path"] = o.out + "/personas.jsonl";
  Context ctx;
  if (auto st = open_context(o, overrides, ctx); st != PSIM_OK) return report_failure(st);
  char* summary = nullptr;
  auto st = psim_generate_personas(ctx.get(), &summary);
  OwnedString owned(summary);
  if (st != PSIM_OK) return report_failure(st);
  auto s = Json::parse(summary);
  for (const auto& [condition, n] : s.at("per_condition").items()) {
    std::cout << condition << ": " << n.get<std::size_t>() << "\n";
  }
  std::cout << s.at("count").get<std::size_t>() << " personas written to " << s.at("path").get<std::string>()
            << "\n";
  return 0;
}

int cmd_simulate(const CommonOptions& o, const SimulateOptions& so) {
  psim_set_verbosity(o.verbose);
  Json overrides = common_overrides(o);
  if (!so.strategy.empty()) overrides["strategy"] = so.strategy == "on";
  if (!so.pipeline.empty()) overrides["pipeline"] = so.pipeline;
  if (!so.personas.empty()) overrides["personas_path"] = so.personas;
  Context ctx;
  if (auto st = open_context(o, overrides, ctx); st != PSIM_OK) return report_failure(st);
  char* summary = nullptr;
  auto st = psim_simulate(ctx.get(), &summary);
  OwnedString owned(summary);
  if (summary) {
    auto s = Json::parse(summary);
    std::cout << s.at("transcripts").get<std::size_t>() << " transcripts, " << s.at("aborted").get<std::size_t>()
              << " aborted, in " << s.at("dir").get<std::string>() << "\n";
  }
  return st == PSIM_OK ? 0 : report_failure(st);
}

int cmd_analyze(const AnalyzeOptions& o) {
  psim_set_verbosity(o.verbose);
  Json opts{{"chart_scale", o.normalize},
            {"t_variant", o.t_test},
            {"chitchat_breaks_runs", o.chitchat_breaks_runs},
            {"guided_averaging", o.per_transcript_ratio ? "per_transcript" : "pooled"}};
  if (!o.group_by.empty()) opts["group_by"] = o.group_by;
  std::vector<const char*> dirs;
  for (const auto& r : o.runs) dirs.push_back(r.c_str());
  char* summary = nullptr;
  auto st = psim_analyze(dirs.data(), dirs.size(), opts.dump().c_str(), o.out.empty() ? nullptr : o.out.c_str(),
                         &summary);
  OwnedString owned(summary);
  if (st != PSIM_OK) return report_failure(st);
  auto s = Json::parse(summary);
  for (const auto& p : s.at("written")) std::cout << "wrote " << p.get<std::string>() << "\n";
  if (s.contains("comparison")) std::cout << "\n" << s.at("comparison").get<std::string>();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persona-conditioned sales dialogue simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", psim_version());

  CommonOptions personas_opts;
  auto* personas = app.add_subcommand("personas", "Generate personas from the sampling plan");
  add_common(personas, personas_opts);

  CommonOptions sim_opts;
  SimulateOptions sim_extra;
  auto* simulate = app.add_subcommand("simulate", "Run conversations for every persona");
  add_common(simulate, sim_opts);
  simulate->add_option("--strategy", sim_extra.strategy, "Occupation strategy in the responder prompt")
      ->check(CLI::IsMember({"on", "off"}));
  simulate->add_option("--pipeline", sim_extra.pipeline, "Agent pipeline")
      ->check(CLI::IsMember({"monolithic", "planner-responder"}));
  simulate->add_option("--personas", sim_extra.personas, "Personas file (default: <out>/personas.jsonl)");

  AnalyzeOptions an_opts;
  auto* analyze = app.add_subcommand("analyze", "Metrics, tests and charts for one or two runs");
  analyze->add_option("runs", an_opts.runs, "Run directory, or baseline and strategy run directories")
      ->required()
      ->expected(1, 2)
      ->check(CLI::ExistingDirectory);
  analyze->add_option("--out", an_opts.out, "Output directory");
  analyze->add_option("--group-by", an_opts.group_by, "Attribute to group by")
      ->check(CLI::IsMember({"gender", "age", "occupation"}));
  analyze->add_option("--normalize", an_opts.normalize, "Chart axis")->check(CLI::IsMember({"count", "share"}));
  analyze->add_option("--t-test", an_opts.t_test, "Two-group test")->check(CLI::IsMember({"welch", "pooled"}));
  analyze->add_flag("--chitchat-breaks-runs", an_opts.chitchat_breaks_runs,
                    "Chit-chat ends an intent run when counting intents");
  analyze->add_flag("--per-transcript-ratio", an_opts.per_transcript_ratio,
                    "Average the guided continuation ratio per transcript");
  analyze->add_flag("-v,--verbose", an_opts.verbose, "More logging (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*personas) return cmd_personas(personas_opts);
    if (*simulate) return cmd_simulate(sim_opts, sim_extra);
    if (*analyze) return cmd_analyze(an_opts);
  } catch (const std::exception& e) {
    std::cerr << "psim: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
