#include "psim/metrics.hpp"

#include "psim/error.hpp"

namespace psim {

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> read_optional_number(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

MetricsAccumulator accumulate(std::span<const Transcript> transcripts, const MetricsOptions& options) {
  MetricsAccumulator acc(options);
  for (const auto& t : transcripts) acc.add(t);
  return acc;
}

}  // namespace

void to_json(Json& j, const MetricsOptions& v) {
  j = Json{{"chitchat_breaks_runs", v.chitchat_breaks_runs},
           {"guided_averaging",
            v.guided_averaging == GuidedAveraging::Pooled ? "pooled" : "per_transcript"}};
}

void from_json(const Json& j, MetricsOptions& v) {
  v.chitchat_breaks_runs = j.value("chitchat_breaks_runs", false);
  auto avg = j.value("guided_averaging", std::string("pooled"));
  if (avg == "pooled") v.guided_averaging = GuidedAveraging::Pooled;
  else if (avg == "per_transcript") v.guided_averaging = GuidedAveraging::PerTranscript;
  else throw Error(ErrorCode::kConfig, "unknown guided_averaging '" + avg + "'");
}

void to_json(Json& j, const MetricsReport& v) {
  j = Json{{"condition", v.condition},
           {"label", v.label},
           {"n_conversations", v.n_conversations},
           {"n_successes", v.n_successes},
           {"success_rate", v.success_rate},
           {"avg_turns_successful", optional_number(v.avg_turns_successful)},
           {"intent_distribution", v.intent_distribution},
           {"success_intent_distribution", v.success_intent_distribution},
           {"guided_continuation_ratio", optional_number(v.guided_continuation_ratio)},
           {"guided_same_intent_ratio", optional_number(v.guided_same_intent_ratio)}};
}

void from_json(const Json& j, MetricsReport& v) {
  v.condition = j.at("condition").get<std::string>();
  v.label = j.value("label", v.condition);
  v.n_conversations = j.at("n_conversations").get<std::size_t>();
  v.n_successes = j.value("n_successes", std::size_t{0});
  v.success_rate = j.at("success_rate").get<double>();
  v.avg_turns_successful = read_optional_number(j, "avg_turns_successful");
  v.intent_distribution = j.value("intent_distribution", IntentCounts{});
  v.success_intent_distribution = j.value("success_intent_distribution", IntentCounts{});
  v.guided_continuation_ratio = read_optional_number(j, "guided_continuation_ratio");
  v.guided_same_intent_ratio = read_optional_number(j, "guided_same_intent_ratio");
}

bool is_aborted(const Transcript& t) {
  auto it = t.extra.find("aborted");
  return it != t.extra.end() && it->is_boolean() && it->get<bool>();
}

std::vector<std::string> intent_runs(const Transcript& t, const MetricsOptions& options) {
  std::vector<std::string> runs;
  bool broken = false;
  for (const auto& turn : t.turns) {
    const Intent* intent = intent_of(turn.agent_thought);
    if (!intent) {
      if (options.chitchat_breaks_runs) broken = true;
      continue;
    }
    if (runs.empty() || broken || runs.back() != intent->name) runs.push_back(intent->name);
    broken = false;
  }
  return runs;
}

void MetricsAccumulator::add(const Transcript& t) {
  if (is_aborted(t)) return;
  ++conversations_;
  if (t.success) {
    ++successes_;
    success_turns_ += t.turns.size();
    if (!t.turns.empty()) {
      if (const Intent* i = intent_of(t.turns.back().agent_thought)) ++success_intents_[i->name];
    }
  }
  for (const auto& name : intent_runs(t, options_)) ++intents_[name];

  std::size_t pivots = 0;
  std::size_t continued = 0;
  for (std::size_t i = 0; i + 1 < t.turns.size(); ++i) {
    const auto* pivot = std::get_if<Pivot>(&t.turns[i].agent_thought);
    if (!pivot) continue;
    ++pivots;
    if (const auto* next = std::get_if<ContinueTopic>(&t.turns[i + 1].agent_thought)) {
      ++continued;
      if (next->intent == pivot->intent) ++continued_same_;
    }
  }
  pivot_events_ += pivots;
  continued_ += continued;
  if (pivots > 0) {
    per_transcript_ratio_sum_ += static_cast<double>(continued) / static_cast<double>(pivots);
    ++per_transcript_ratio_n_;
  }
}

void MetricsAccumulator::merge(const MetricsAccumulator& other) {
  conversations_ += other.conversations_;
  successes_ += other.successes_;
  success_turns_ += other.success_turns_;
  for (const auto& [k, n] : other.intents_) intents_[k] += n;
  for (const auto& [k, n] : other.success_intents_) success_intents_[k] += n;
  pivot_events_ += other.pivot_events_;
  continued_ += other.continued_;
  continued_same_ += other.continued_same_;
  per_transcript_ratio_sum_ += other.per_transcript_ratio_sum_;
  per_transcript_ratio_n_ += other.per_transcript_ratio_n_;
}

std::optional<double> MetricsAccumulator::success_rate() const {
  if (conversations_ == 0) return std::nullopt;
  return static_cast<double>(successes_) / static_cast<double>(conversations_);
}

std::optional<double> MetricsAccumulator::avg_turns_successful() const {
  if (successes_ == 0) return std::nullopt;
  return static_cast<double>(success_turns_) / static_cast<double>(successes_);
}

std::optional<double> MetricsAccumulator::guided_continuation_ratio() const {
  if (options_.guided_averaging == GuidedAveraging::PerTranscript) {
    if (per_transcript_ratio_n_ == 0) return std::nullopt;
    return per_transcript_ratio_sum_ / static_cast<double>(per_transcript_ratio_n_);
  }
  if (pivot_events_ == 0) return std::nullopt;
  return static_cast<double>(continued_) / static_cast<double>(pivot_events_);
}

std::optional<double> MetricsAccumulator::guided_same_intent_ratio() const {
  if (pivot_events_ == 0) return std::nullopt;
  return static_cast<double>(continued_same_) / static_cast<double>(pivot_events_);
}

MetricsReport MetricsAccumulator::report(std::string condition, std::string label) const {
  MetricsReport r;
  r.condition = std::move(condition);
  r.label = std::move(label);
  r.n_conversations = conversations_;
  r.n_successes = successes_;
  r.success_rate = success_rate().value_or(0.0);
  r.avg_turns_successful = avg_turns_successful();
  r.intent_distribution = intents_;
  r.success_intent_distribution = success_intents_;
  r.guided_continuation_ratio = guided_continuation_ratio();
  r.guided_same_intent_ratio = guided_same_intent_ratio();
  return r;
}

double success_rate(std::span<const Transcript> transcripts) {
  auto rate = accumulate(transcripts, {}).success_rate();
  if (!rate) throw Error(ErrorCode::kInvalidArgument, "success rate of an empty transcript set");
  return *rate;
}

std::optional<double> avg_turns_successful(std::span<const Transcript> transcripts) {
  return accumulate(transcripts, {}).avg_turns_successful();
}

IntentCounts intent_distribution(std::span<const Transcript> transcripts, const MetricsOptions& options) {
  return accumulate(transcripts, options).intent_distribution();
}

IntentCounts success_intent_distribution(std::span<const Transcript> transcripts) {
  return accumulate(transcripts, {}).success_intent_distribution();
}

std::optional<double> guided_continuation_ratio(std::span<const Transcript> transcripts,
                                                const MetricsOptions& options) {
  return accumulate(transcripts, options).guided_continuation_ratio();
}

}  // namespace psim
