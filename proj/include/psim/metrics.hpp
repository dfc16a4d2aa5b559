#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psim/domain.hpp"

namespace psim {

using IntentCounts = std::map<std::string, std::size_t>;

enum class GuidedAveraging { Pooled, PerTranscript };

struct MetricsOptions {
  // When true, chit-chat and unrecognized thoughts end an intent run.
  bool chitchat_breaks_runs = false;
  GuidedAveraging guided_averaging = GuidedAveraging::Pooled;
};

void to_json(Json& j, const MetricsOptions& v);
void from_json(const Json& j, MetricsOptions& v);

struct MetricsReport {
  std::string condition;  // "occupation=edu"
  std::string label;      // "Edu"
  std::size_t n_conversations = 0;
  std::size_t n_successes = 0;
  double success_rate = 0.0;
  std::optional<double> avg_turns_successful;
  IntentCounts intent_distribution;
  IntentCounts success_intent_distribution;
  std::optional<double> guided_continuation_ratio;
  // Diagnostic: the following ContinueTopic also names the pivot's intent.
  std::optional<double> guided_same_intent_ratio;
};

void to_json(Json& j, const MetricsReport& v);
void from_json(const Json& j, MetricsReport& v);

/// Streaming accumulator behind every metric. Accumulators over disjoint
/// partitions merge into the accumulator of their union.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(MetricsOptions options = {}) : options_(options) {}

  // Transcripts flagged "aborted" in their extra fields are skipped.
  void add(const Transcript& t);
  void merge(const MetricsAccumulator& other);

  std::size_t conversations() const { return conversations_; }
  std::size_t successes() const { return successes_; }
  std::optional<double> success_rate() const;
  std::optional<double> avg_turns_successful() const;
  const IntentCounts& intent_distribution() const { return intents_; }
  const IntentCounts& success_intent_distribution() const { return success_intents_; }
  std::optional<double> guided_continuation_ratio() const;
  std::optional<double> guided_same_intent_ratio() const;

  MetricsReport report(std::string condition, std::string label) const;

 private:
  MetricsOptions options_;
  std::size_t conversations_ = 0;
  std::size_t successes_ = 0;
  std::size_t success_turns_ = 0;
  IntentCounts intents_;
  IntentCounts success_intents_;
  std::size_t pivot_events_ = 0;
  std::size_t continued_ = 0;
  std::size_t continued_same_ = 0;
  double per_transcript_ratio_sum_ = 0.0;
  std::size_t per_transcript_ratio_n_ = 0;
};

bool is_aborted(const Transcript& t);

/// Intents of one transcript in order, consecutive repeats folded into one.
std::vector<std::string> intent_runs(const Transcript& t, const MetricsOptions& options = {});

/// Throws Error(kInvalidArgument) when no usable transcripts are given.
double success_rate(std::span<const Transcript> transcripts);
std::optional<double> avg_turns_successful(std::span<const Transcript> transcripts);
IntentCounts intent_distribution(std::span<const Transcript> transcripts,
                                 const MetricsOptions& options = {});
IntentCounts success_intent_distribution(std::span<const Transcript> transcripts);
std::optional<double> guided_continuation_ratio(std::span<const Transcript> transcripts,
                                                const MetricsOptions& options = {});

}  // namespace psim
