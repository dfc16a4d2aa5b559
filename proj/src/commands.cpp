#include "psim/commands.hpp"

#include <fmt/format.h>

#include <fstream>

#include "psim/logging.hpp"
#include "psim/rng.hpp"

namespace psim {

namespace fs = std::filesystem;

namespace {

void patch_backend(Json& backend, const ConfigOverrides& o) {
  if (!backend.is_object()) return;
  const auto kind = backend.value("kind", std::string{});
  if (kind == "http" && o.endpoint) backend["endpoint"] = *o.endpoint;
  if (kind == "replay") {
    if (o.strict_replay) backend["strict"] = true;
    if (auto it = backend.find("inner"); it != backend.end()) patch_backend(*it, o);
  }
}

std::shared_ptr<ChatBackend> make_role(BackendFactory& factory, const RoleConfig& role, const char* name) {
  if (!role.backend) throw Error(ErrorCode::kConfig, fmt::format("role '{}' has no backend", name));
  return factory.make(*role.backend);
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + p.string());
  f << text;
  if (!f) throw Error(ErrorCode::kIo, "write failed for " + p.string());
}

}  // namespace

Json apply_overrides(Json config, const ConfigOverrides& o) {
  if (!config.is_object()) throw Error(ErrorCode::kConfig, "run config must be a JSON object");
  if (o.seed) config["seed"] = *o.seed;
  if (o.strategy) config["strategy"] = *o.strategy;
  if (o.pipeline) config["pipeline"] = *o.pipeline;
  if (o.parallel) config["parallel"] = *o.parallel;
  if (o.output_dir) config["output_dir"] = *o.output_dir;
  if (o.personas_path) config["personas_path"] = *o.personas_path;
  if (auto roles = config.find("roles"); roles != config.end() && roles->is_object()) {
    for (auto& [_, role] : roles->items()) {
      if (role.is_object()) {
        if (auto b = role.find("backend"); b != role.end()) patch_backend(*b, o);
      }
    }
  }
  return config;
}

RunConfig load_run_config(const fs::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  return apply_overrides(std::move(j), overrides).get<RunConfig>();
}

PersonasOutcome run_personas(const RunConfig& config) {
  config.validate();
  BackendFactory factory;
  auto backend = make_role(factory, config.persona, "persona");
  PersonaGenOptions opts;
  opts.params = config.persona.params;
  opts.retries = config.persona_retries;
  opts.parallel = config.parallel;

  PersonasOutcome out;
  out.path = config.resolved_personas_path();
  JsonlWriter writer(out.path);
  const auto& plan = config.sampling;
  for (std::size_t vi = 0; vi < plan.values.size(); ++vi) {
    SamplingPlan one = plan;
    one.values = {plan.values[vi]};
    one.seed = derive_seed(plan.seed, {0x706cu, vi});
    auto personas = generate_personas(one, *backend, opts);
    for (const auto& p : personas) writer.write(p);
    const std::string key = Condition{plan.fixed_attribute, plan.values[vi]}.key();
    out.per_condition[key] = personas.size();
    logger()->info("{}: {} personas", key, personas.size());
    out.personas.insert(out.personas.end(), personas.begin(), personas.end());
  }
  return out;
}

SimulateOutcome run_simulate(const RunConfig& config) {
  config.validate();
  const fs::path personas_path = config.resolved_personas_path();
  if (!fs::exists(personas_path)) throw Error(ErrorCode::kIo, "missing personas file " + personas_path.string());
  auto read = read_jsonl<Persona>(personas_path);
  if (!read.errors.empty()) {
    const auto& e = read.errors.front();
    throw Error(ErrorCode::kParse, fmt::format("{}:{}: {}", personas_path.string(), e.line, e.message));
  }
  if (read.records.empty()) throw Error(ErrorCode::kInvalidArgument, "no personas in " + personas_path.string());

  BackendFactory factory;
  auto user = make_role(factory, config.user, "user");
  auto planner = make_role(factory, config.planner, "planner");
  std::shared_ptr<ChatBackend> responder;
  if (config.pipeline == PipelineMode::PlannerResponder) responder = make_role(factory, config.responder, "responder");

  Orchestrator orchestrator(config, user, planner, responder);
  SimulateOutcome out;
  out.dir = config.output_dir.empty() ? fs::path(".") : config.output_dir;
  fs::create_directories(out.dir);
  out.requested = read.records.size() * static_cast<std::size_t>(config.conversations_per_persona);

  JsonlWriter writer(out.dir / "transcripts.jsonl");
  auto batch = orchestrator.run_batch(read.records, [&](const Transcript& t) { writer.write(t); });
  out.transcripts = batch.transcripts.size();
  out.aborted = batch.aborted.size();

  std::vector<Json> aborted;
  for (const auto& a : batch.aborted) {
    aborted.push_back(Json{{"id", a.id}, {"persona_id", a.persona_id}, {"error", a.error}});
  }
  write_jsonl(out.dir / "aborted.jsonl", std::span<const Json>(aborted));

  Json manifest{{"command", "simulate"},
                {"config", config},
                {"personas_file", personas_path.string()},
                {"counts",
                 {{"personas", read.records.size()},
                  {"requested", out.requested},
                  {"transcripts", out.transcripts},
                  {"aborted", out.aborted}}}};
  write_text(out.dir / "run.json", manifest.dump(2) + "\n");
  return out;
}

AnalyzeOutcome run_analyze(const std::vector<fs::path>& run_dirs, const AnalysisOptions& options,
                           const fs::path& out) {
  if (run_dirs.empty() || run_dirs.size() > 2) {
    throw Error(ErrorCode::kInvalidArgument, "analyze takes one or two run directories");
  }
  AnalyzeOutcome result;
  std::vector<RunData> runs;
  for (const auto& dir : run_dirs) {
    auto run = load_run(dir);
    auto analysis = analyze_run(run, options);
    const fs::path target = run_dirs.size() == 1 && !out.empty() ? out : dir;
    write_analysis(target, run, analysis);
    result.written.push_back(target);
    result.results.push_back(std::move(analysis));
    runs.push_back(std::move(run));
  }
  if (run_dirs.size() == 2) {
    auto strategy_of = [](const RunData& r) {
      const auto cfg = r.manifest.find("config");
      return cfg != r.manifest.end() && cfg->value("strategy", false);
    };
    if (strategy_of(runs[0]) || !strategy_of(runs[1])) {
      logger()->warn("comparison expects the run without strategy first and the run with strategy second");
    }
    const auto& a = result.results[0];
    const auto& b = result.results[1];
    if (a.attribute != b.attribute) {
      throw Error(ErrorCode::kInvalidArgument, "compared runs are grouped by different attributes");
    }
    const fs::path target = out.empty() ? run_dirs[1] : out;
    std::string md = "# Strategy comparison (without / with)\n\n";
    md += fmt::format("Without: `{}`\n\nWith: `{}`\n\n", run_dirs[0].string(), run_dirs[1].string());
    md += comparison_markdown(a.reports, b.reports, attribute_column(a.attribute));
    write_text(target / "comparison.md", md);
    write_text(target / "comparison.csv", comparison_csv(a.reports, b.reports));
    result.comparison_markdown = std::move(md);
    result.written.push_back(target);
  }
  return result;
}

}  // namespace psim
