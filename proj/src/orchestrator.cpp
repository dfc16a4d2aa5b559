#include "psim/orchestrator.hpp"

#include <chrono>
#include <map>
#include <mutex>

#include "parallel.hpp"
#include "prompts.hpp"
#include "psim/error.hpp"
#include "psim/logging.hpp"
#include "psim/thought_parser.hpp"
#include "text_util.hpp"

namespace psim {

namespace {

enum class CallRole : std::uint64_t { User = 1, Planner = 2, Responder = 3 };

ChatParams seeded(const ChatParams& base, std::uint64_t conversation_seed, CallRole role, int turn) {
  ChatParams p = base;
  p.seed = derive_seed(conversation_seed, {static_cast<std::uint64_t>(role),
                                           static_cast<std::uint64_t>(turn)});
  return p;
}

std::string utc_now_iso() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string zero_pad(std::size_t n, std::size_t width) {
  auto s = std::to_string(n);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

// Case-insensitive search for a "label:" at the start of a line.
std::size_t find_label(std::string_view text, std::string_view label, std::size_t from = 0) {
  const std::string lower = detail::to_lower(text);
  const std::string needle = detail::to_lower(label) + ":";
  for (std::size_t pos = lower.find(needle, from); pos != std::string::npos;
       pos = lower.find(needle, pos + 1)) {
    std::size_t line_start = pos;
    while (line_start > 0 && lower[line_start - 1] != '\n') --line_start;
    bool only_markup = true;
    for (std::size_t i = line_start; i < pos; ++i) {
      char c = lower[i];
      if (!(detail::is_space(c) || c == '*' || c == '#' || c == '-')) only_markup = false;
    }
    if (only_markup) return pos;
  }
  return std::string::npos;
}

std::string strip_markup(std::string_view s) {
  s = detail::trim(s);
  while (!s.empty() && (s.front() == '*' || detail::is_space(s.front()))) s.remove_prefix(1);
  while (!s.empty() && (s.back() == '*' || detail::is_space(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

std::string_view to_token(PipelineMode m) {
  return m == PipelineMode::Monolithic ? "monolithic" : "planner-responder";
}

std::optional<PipelineMode> pipeline_from_token(std::string_view token) {
  if (detail::iequals(token, "monolithic")) return PipelineMode::Monolithic;
  if (detail::iequals(token, "planner-responder") || detail::iequals(token, "planner_responder")) {
    return PipelineMode::PlannerResponder;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

void ConversationState::push(Turn turn) {
  last_thought = turn.agent_thought;
  pivot_pending = std::holds_alternative<Pivot>(last_thought);
  history.push_back(std::move(turn));
}

std::vector<ChatMessage> build_user_messages(const Persona& persona, std::span<const Turn> history) {
  std::vector<ChatMessage> out;
  out.reserve(2 + history.size() * 2);
  out.push_back({Role::System, persona.text + "\n\n" + std::string(prompts::kUserSimulator)});
  out.push_back({Role::User, std::string(kConversationStart)});
  for (const auto& turn : history) {
    out.push_back({Role::Assistant, turn.user_utterance});
    out.push_back({Role::User, turn.agent_response});
  }
  return out;
}

std::vector<ChatMessage> build_planner_messages(std::span<const Turn> history,
                                                std::string_view user_utterance,
                                                PipelineMode mode, const IntentCatalog& catalog) {
  auto tmpl = mode == PipelineMode::Monolithic ? prompts::kPlannerMonolithic
                                               : prompts::kPlannerThought;
  std::map<std::string, std::string> values{{"intents", detail::join(catalog.names(), ", ")}};
  std::vector<ChatMessage> out;
  out.reserve(2 + history.size() * 2);
  out.push_back({Role::System, detail::substitute(tmpl, values)});
  for (const auto& turn : history) {
    out.push_back({Role::User, turn.user_utterance});
    out.push_back({Role::Assistant, turn.agent_response});
  }
  out.push_back({Role::User, std::string(user_utterance)});
  return out;
}

std::pair<std::string, std::string> split_monolithic_output(std::string_view output) {
  auto thought_pos = find_label(output, "thought");
  auto response_pos = find_label(output, "response",
                                 thought_pos == std::string::npos ? 0 : thought_pos);
  if (thought_pos == std::string::npos || response_pos == std::string::npos) {
    return {std::string{}, std::string(detail::trim(output))};
  }
  auto thought_start = thought_pos + std::string_view("thought:").size();
  auto thought = output.substr(thought_start, response_pos - thought_start);
  auto response = output.substr(response_pos + std::string_view("response:").size());
  return {strip_markup(thought), strip_markup(response)};
}

PlannedThought plan_thought(std::span<const Turn> history, std::string_view user_utterance,
                            ChatBackend& planner, const ChatParams& params, PipelineMode mode,
                            const IntentCatalog& catalog) {
  if (detail::trim(user_utterance).empty() && history.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "planner needs at least one user utterance");
  }
  auto messages = build_planner_messages(history, user_utterance, mode, catalog);
  std::string output = planner.chat(messages, params);
  PlannedThought planned;
  if (mode == PipelineMode::Monolithic) {
    auto [thought, response] = split_monolithic_output(output);
    planned.raw = std::move(thought);
    planned.response = std::move(response);
  } else {
    planned.raw = std::string(detail::trim(output));
  }
  planned.thought = parse_thought(planned.raw, catalog);
  return planned;
}

std::string render_history(std::span<const Turn> history, std::optional<std::string_view> pending_user) {
  std::string out;
  for (const auto& turn : history) {
    out += "User: " + turn.user_utterance + "\n";
    out += "Agent: " + turn.agent_response + "\n";
  }
  if (pending_user) out += "User: " + std::string(*pending_user) + "\n";
  if (!out.empty()) out.pop_back();
  return out;
}

std::string build_responder_prompt(std::string_view history, std::string_view thought_raw,
                                   const StrategyCard* strategy) {
  if (detail::trim(thought_raw).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "responder prompt needs a thought");
  }
  std::map<std::string, std::string> values{{"history", std::string(history)},
                                            {"thought", std::string(thought_raw)}};
  if (strategy) {
    values["intents"] = strategy->joined_intents();
    values["rationale"] = strategy->rationale;
    return detail::substitute(prompts::kResponderStrategy, values);
  }
  return detail::substitute(prompts::kResponderPlain, values);
}

std::string extract_response(std::string_view responder_output) {
  try {
    Json obj = extract_json_object(responder_output);
    if (auto it = obj.find("response"); it != obj.end() && it->is_string()) {
      return std::string(detail::trim(it->get<std::string>()));
    }
  } catch (const Error&) {
  }
  return std::string(detail::trim(responder_output));
}

bool detect_bye(std::string_view response) {
  std::string cleaned;
  cleaned.reserve(response.size());
  for (unsigned char c : response) {
    cleaned.push_back(std::isalnum(c) || std::isspace(c) || c >= 0x80 ? static_cast<char>(std::tolower(c)) : ' ');
  }
  auto trimmed = detail::trim(cleaned);
  if (trimmed.size() < 3 || trimmed.substr(trimmed.size() - 3) != "bye") return false;
  return trimmed.size() == 3 || detail::is_space(trimmed[trimmed.size() - 4]);
}

std::optional<Outcome> check_termination(const ConversationState& state, int max_turns) {
  if (state.history.empty()) return std::nullopt;
  if (auto* e = std::get_if<ExplicitIntent>(&state.last_thought)) {
    return Outcome::explicit_intent(e->intent);
  }
  if (detect_bye(state.history.back().agent_response)) return Outcome::agent_bye();
  if (static_cast<int>(state.history.size()) >= max_turns) return Outcome::max_turns();
  return std::nullopt;
}

bool audit_transcript(const Transcript& t, int max_turns) {
  ConversationState state;
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    state.push(t.turns[i]);
    auto outcome = check_termination(state, max_turns);
    bool last = i + 1 == t.turns.size();
    if (outcome.has_value() != last) return false;
    if (last) return *outcome == t.outcome && t.success == (outcome->kind == OutcomeKind::ExplicitIntent);
  }
  return false;
}

// ---------------------------------------------------------------------------

Orchestrator::Orchestrator(RunConfig config, std::shared_ptr<ChatBackend> user,
                           std::shared_ptr<ChatBackend> planner,
                           std::shared_ptr<ChatBackend> responder)
    : config_(std::move(config)),
      user_(std::move(user)),
      planner_(std::move(planner)),
      responder_(std::move(responder)) {
  config_.validate();
  if (!user_ || !planner_) throw Error(ErrorCode::kConfig, "user and planner backends are required");
  if (config_.pipeline == PipelineMode::PlannerResponder && !responder_) {
    throw Error(ErrorCode::kConfig, "planner-responder pipeline requires a responder backend");
  }
}

const StrategyCard& Orchestrator::strategy_for(Sector sector) const {
  for (const auto& card : config_.strategy_cards) {
    if (card.sector == sector) return card;
  }
  throw Error(ErrorCode::kConfig,
              "no strategy card configured for sector " + std::string(to_token(sector)));
}

Transcript Orchestrator::run_conversation(const Persona& persona, std::string id,
                                          std::uint64_t seed) const {
  const auto& cfg = config_;
  const bool split = cfg.pipeline == PipelineMode::PlannerResponder;
  const StrategyCard* card = split && cfg.strategy_enabled ? &strategy_for(persona.spec.sector) : nullptr;

  Transcript t;
  t.id = std::move(id);
  t.persona_id = persona.id;
  t.condition = {persona.spec.fixed_attribute, persona.spec.condition_value()};
  if (card) t.strategy = *card;
  t.pipeline = std::string(to_token(cfg.pipeline));
  t.seed = seed;
  t.models = {cfg.user.params.model, cfg.planner.params.model,
              split ? cfg.responder.params.model : std::string{}};
  if (cfg.record_timestamps) t.started_at = utc_now_iso();

  ConversationState state;
  for (int turn_no = 1; turn_no <= cfg.max_turns; ++turn_no) {
    auto user_messages = build_user_messages(persona, state.history);
    std::string utterance = std::string(detail::trim(
        user_->chat(user_messages, seeded(cfg.user.params, seed, CallRole::User, turn_no))));

    auto planned = plan_thought(state.history, utterance, *planner_,
                                seeded(cfg.planner.params, seed, CallRole::Planner, turn_no),
                                cfg.pipeline, cfg.intents);

    std::string response;
    if (split) {
      auto prompt = build_responder_prompt(render_history(state.history, utterance),
                                           planned.raw.empty() ? format_thought(ChitChat{}) : planned.raw,
                                           card);
      std::vector<ChatMessage> messages{{Role::User, std::move(prompt)}};
      response = extract_response(responder_->chat(
          messages, seeded(cfg.responder.params, seed, CallRole::Responder, turn_no)));
    } else {
      response = std::move(*planned.response);
    }

    state.push(Turn{turn_no, std::move(utterance), std::move(planned.raw),
                    std::move(planned.thought), std::move(response)});
    if (auto outcome = check_termination(state, cfg.max_turns)) {
      t.outcome = *outcome;
      break;
    }
  }
  t.turns = std::move(state.history);
  t.success = t.outcome.kind == OutcomeKind::ExplicitIntent;
  if (cfg.record_timestamps) t.finished_at = utc_now_iso();
  return t;
}

BatchResult Orchestrator::run_batch(const std::vector<Persona>& personas,
                                    const std::function<void(const Transcript&)>& on_transcript) const {
  const auto& cfg = config_;
  if (cfg.pipeline == PipelineMode::PlannerResponder && cfg.strategy_enabled) {
    for (const auto& p : personas) strategy_for(p.spec.sector);
  }

  const auto per = static_cast<std::size_t>(cfg.conversations_per_persona);
  const std::size_t total = personas.size() * per;
  const std::size_t width = std::max<std::size_t>(2, std::to_string(per).size());

  struct Slot {
    std::optional<Transcript> transcript;
    std::optional<AbortedConversation> aborted;
    bool done = false;
  };
  std::vector<Slot> slots(total);
  std::mutex mu;
  std::size_t next_emit = 0;
  std::size_t finished = 0;
  std::optional<Error> fatal;
  std::atomic<bool> stop{false};

  auto emit_ready = [&] {
    while (next_emit < total && slots[next_emit].done) {
      if (slots[next_emit].transcript && on_transcript) on_transcript(*slots[next_emit].transcript);
      ++next_emit;
    }
  };

  detail::parallel_for(
      total, cfg.parallel,
      [&](std::size_t i) {
        const std::size_t pi = i / per;
        const std::size_t ci = i % per;
        const Persona& persona = personas[pi];
        std::string id = persona.id + "-c" + zero_pad(ci + 1, width);
        std::uint64_t seed = derive_seed(cfg.seed, {pi, ci});
        Slot slot;
        try {
          slot.transcript = run_conversation(persona, id, seed);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::kReplayMiss || e.code() == ErrorCode::kConfig) {
            std::lock_guard lock(mu);
            if (!fatal) fatal = e;
            stop = true;
            return;
          }
          logger()->warn("conversation {} aborted: {}", id, e.what());
          slot.aborted = AbortedConversation{id, persona.id, e.what()};
        } catch (const std::exception& e) {
          logger()->warn("conversation {} aborted: {}", id, e.what());
          slot.aborted = AbortedConversation{id, persona.id, e.what()};
        }
        slot.done = true;
        std::lock_guard lock(mu);
        slots[i] = std::move(slot);
        ++finished;
        if (total >= 10 && finished % (total / 10) == 0) {
          logger()->info("progress: {}/{} conversations", finished, total);
        }
        try {
          emit_ready();
        } catch (const Error& e) {
          if (!fatal) fatal = e;
          stop = true;
        }
      },
      &stop);

  if (fatal) throw *fatal;

  BatchResult result;
  result.transcripts.reserve(total);
  for (auto& slot : slots) {
    if (slot.transcript) result.transcripts.push_back(std::move(*slot.transcript));
    if (slot.aborted) result.aborted.push_back(std::move(*slot.aborted));
  }
  return result;
}

}  // namespace psim
