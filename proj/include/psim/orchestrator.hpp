#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "psim/backends.hpp"
#include "psim/domain.hpp"
#include "psim/persona_gen.hpp"

namespace psim {

enum class PipelineMode { Monolithic, PlannerResponder };

std::string_view to_token(PipelineMode m);
std::optional<PipelineMode> pipeline_from_token(std::string_view token);

// Stimulus sent to the user model before anyone has spoken.
inline constexpr std::string_view kConversationStart = "<conversation start>";

struct RoleConfig {
  std::optional<BackendSpec> backend;
  ChatParams params;
};

struct RunConfig {
  SamplingPlan sampling;
  int conversations_per_persona = 15;
  int max_turns = 20;
  PipelineMode pipeline = PipelineMode::PlannerResponder;
  bool strategy_enabled = false;
  RoleConfig persona;
  RoleConfig user;
  RoleConfig planner;
  RoleConfig responder;
  IntentCatalog intents = IntentCatalog::defaults();
  std::vector<StrategyCard> strategy_cards = default_strategy_cards();
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  std::filesystem::path personas_path;  // empty: <output_dir>/personas.jsonl
  int parallel = 4;
  double abort_threshold = 0.10;
  int persona_retries = 3;
  bool record_timestamps = true;

  void validate() const;
  std::filesystem::path resolved_personas_path() const;
};

void to_json(Json& j, const RunConfig& v);
// Missing keys keep their defaults.
void from_json(const Json& j, RunConfig& v);

// Applies `patch` (RFC 7386 merge patch) on top of `base` and re-parses.
RunConfig merge_config(const RunConfig& base, const Json& patch);

// ---------------------------------------------------------------------------
// Conversation pieces
// ---------------------------------------------------------------------------

struct ConversationState {
  std::vector<Turn> history;
  Thought last_thought = Unrecognized{};
  bool pivot_pending = false;

  void push(Turn turn);
};

/// User-model request: the persona text followed by the role-play
/// instruction as the system message, then the dialogue seen from the user's
/// side (agent replies as "user", the user's own lines as "assistant").
std::vector<ChatMessage> build_user_messages(const Persona& persona, std::span<const Turn> history);

/// Planner request for the current turn. Agent replies appear as
/// "assistant", user utterances as "user", the newest utterance last.
std::vector<ChatMessage> build_planner_messages(std::span<const Turn> history,
                                                std::string_view user_utterance,
                                                PipelineMode mode, const IntentCatalog& catalog);

struct PlannedThought {
  std::string raw;
  Thought thought;
  // Filled in monolithic mode, where the planner also writes the reply.
  std::optional<std::string> response;
};

/// Splits "Thought: ...\nResponse: ..." output. Without the labels the whole
/// text is the response and the thought is empty.
std::pair<std::string, std::string> split_monolithic_output(std::string_view output);

PlannedThought plan_thought(std::span<const Turn> history, std::string_view user_utterance,
                            ChatBackend& planner, const ChatParams& params, PipelineMode mode,
                            const IntentCatalog& catalog);

/// "User: ..." / "Agent: ..." lines in chronological order; `pending_user`
/// is the utterance of the turn in progress.
std::string render_history(std::span<const Turn> history,
                           std::optional<std::string_view> pending_user = std::nullopt);

/// Responder prompt; the strategy variant adds the "# Strategy" section.
std::string build_responder_prompt(std::string_view history, std::string_view thought_raw,
                                   const StrategyCard* strategy);

/// Reply text from responder output: the "response" field of the first JSON
/// object, or the trimmed text itself when there is none.
std::string extract_response(std::string_view responder_output);

/// True iff the lowercased reply, with punctuation replaced by spaces, ends
/// with the standalone token "bye".
bool detect_bye(std::string_view response);

/// Precedence: explicit-intent thought, then "bye", then the turn cap.
std::optional<Outcome> check_termination(const ConversationState& state, int max_turns);

/// Re-runs check_termination over every prefix of a transcript. True iff
/// the first terminating prefix is the full transcript and its outcome equals
/// the recorded one.
bool audit_transcript(const Transcript& t, int max_turns);

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

struct AbortedConversation {
  std::string id;
  std::string persona_id;
  std::string error;
};

struct BatchResult {
  std::vector<Transcript> transcripts;  // ordered by (persona, conversation)
  std::vector<AbortedConversation> aborted;
};

class Orchestrator {
 public:
  Orchestrator(RunConfig config, std::shared_ptr<ChatBackend> user,
               std::shared_ptr<ChatBackend> planner, std::shared_ptr<ChatBackend> responder);

  const RunConfig& config() const { return config_; }

  /// Throws Error(kConfig) when no card covers the sector.
  const StrategyCard& strategy_for(Sector sector) const;

  /// One conversation. Backend errors propagate to the caller.
  Transcript run_conversation(const Persona& persona, std::string id, std::uint64_t seed) const;

  /// conversations_per_persona conversations for every persona with bounded
  /// parallelism. Failed conversations land in `aborted`; a replay miss or a
  /// configuration problem aborts the whole batch. `on_transcript` sees
  /// finished transcripts in final order as soon as their predecessors are
  /// done.
  BatchResult run_batch(const std::vector<Persona>& personas,
                        const std::function<void(const Transcript&)>& on_transcript = {}) const;

 private:
  RunConfig config_;
  std::shared_ptr<ChatBackend> user_;
  std::shared_ptr<ChatBackend> planner_;
  std::shared_ptr<ChatBackend> responder_;
};

}  // namespace psim
