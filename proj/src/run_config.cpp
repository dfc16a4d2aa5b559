#include "psim/error.hpp"
#include "psim/orchestrator.hpp"

namespace psim {

namespace {

ChatParams role_defaults(std::string_view role) {
  ChatParams p;
  if (role == "persona") {
    p.temperature = 1.0;
    p.max_tokens = 512;
  }
  return p;
}

Json role_to_json(const RoleConfig& r) {
  Json j{{"model", r.params.model},
         {"temperature", r.params.temperature},
         {"max_tokens", r.params.max_tokens},
         {"stop", r.params.stop}};
  j["backend"] = r.backend ? Json(*r.backend) : Json(nullptr);
  return j;
}

RoleConfig role_from_json(const Json& j, std::string_view role) {
  RoleConfig r;
  r.params = role_defaults(role);
  if (j.is_null()) return r;
  r.params.model = j.value("model", r.params.model);
  r.params.temperature = j.value("temperature", r.params.temperature);
  r.params.max_tokens = j.value("max_tokens", r.params.max_tokens);
  r.params.stop = j.value("stop", r.params.stop);
  if (auto it = j.find("backend"); it != j.end() && !it->is_null()) {
    r.backend = it->get<BackendSpec>();
  }
  r.params.validate();
  return r;
}

}  // namespace

void RunConfig::validate() const {
  sampling.validate();
  if (conversations_per_persona < 1) {
    throw Error(ErrorCode::kConfig, "conversations_per_persona must be >= 1");
  }
  if (max_turns < 1) throw Error(ErrorCode::kConfig, "max_turns must be >= 1");
  if (parallel < 1) throw Error(ErrorCode::kConfig, "parallel must be >= 1");
  if (persona_retries < 0) throw Error(ErrorCode::kConfig, "persona_retries must be >= 0");
  if (abort_threshold < 0.0 || abort_threshold > 1.0) {
    throw Error(ErrorCode::kConfig, "abort_threshold must lie in [0, 1]");
  }
  if (pipeline == PipelineMode::Monolithic && strategy_enabled) {
    throw Error(ErrorCode::kConfig, "the monolithic pipeline has no strategy option");
  }
  for (const auto& card : strategy_cards) card.validate();
  for (const auto* role : {&persona, &user, &planner, &responder}) role->params.validate();
}

std::filesystem::path RunConfig::resolved_personas_path() const {
  return personas_path.empty() ? output_dir / "personas.jsonl" : personas_path;
}

void to_json(Json& j, const RunConfig& v) {
  j = Json{{"seed", v.seed},
           {"sampling", v.sampling},
           {"conversations_per_persona", v.conversations_per_persona},
           {"max_turns", v.max_turns},
           {"pipeline", to_token(v.pipeline)},
           {"strategy", v.strategy_enabled},
           {"roles",
            {{"persona", role_to_json(v.persona)},
             {"user", role_to_json(v.user)},
             {"planner", role_to_json(v.planner)},
             {"responder", role_to_json(v.responder)}}},
           {"intents", v.intents},
           {"strategy_cards", v.strategy_cards},
           {"output_dir", v.output_dir.string()},
           {"personas_path", v.personas_path.string()},
           {"parallel", v.parallel},
           {"abort_threshold", v.abort_threshold},
           {"persona_retries", v.persona_retries},
           {"record_timestamps", v.record_timestamps}};
}

void from_json(const Json& j, RunConfig& v) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "run config must be a JSON object");
  try {
    RunConfig c;
    c.seed = j.value("seed", c.seed);
    if (auto it = j.find("sampling"); it != j.end()) {
      c.sampling = it->get<SamplingPlan>();
    } else {
      c.sampling.values = attribute_domain(c.sampling.fixed_attribute);
    }
    c.sampling.seed = c.seed;
    c.conversations_per_persona = j.value("conversations_per_persona", c.conversations_per_persona);
    c.max_turns = j.value("max_turns", c.max_turns);
    if (auto it = j.find("pipeline"); it != j.end()) {
      auto token = it->get<std::string>();
      auto mode = pipeline_from_token(token);
      if (!mode) throw Error(ErrorCode::kConfig, "unknown pipeline '" + token + "'");
      c.pipeline = *mode;
    }
    c.strategy_enabled = j.value("strategy", c.strategy_enabled);
    const Json roles = j.value("roles", Json::object());
    c.persona = role_from_json(roles.value("persona", Json()), "persona");
    c.user = role_from_json(roles.value("user", Json()), "user");
    c.planner = role_from_json(roles.value("planner", Json()), "planner");
    c.responder = role_from_json(roles.value("responder", Json()), "responder");
    if (auto it = j.find("intents"); it != j.end() && !it->is_null()) c.intents = it->get<IntentCatalog>();
    if (auto it = j.find("strategy_cards"); it != j.end() && !it->is_null()) {
      c.strategy_cards = it->get<std::vector<StrategyCard>>();
    }
    c.output_dir = j.value("output_dir", std::string{});
    c.personas_path = j.value("personas_path", std::string{});
    c.parallel = j.value("parallel", c.parallel);
    c.abort_threshold = j.value("abort_threshold", c.abort_threshold);
    c.persona_retries = j.value("persona_retries", c.persona_retries);
    c.record_timestamps = j.value("record_timestamps", c.record_timestamps);
    c.validate();
    v = std::move(c);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("run config: ") + e.what());
  }
}

RunConfig merge_config(const RunConfig& base, const Json& patch) {
  Json j = base;
  j.merge_patch(patch);
  return j.get<RunConfig>();
}

}  // namespace psim
