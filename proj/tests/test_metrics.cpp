#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "psim/error.hpp"
#include "psim/metrics.hpp"

using namespace psim;

namespace {

// Compact thought notation: C chit-chat, U unrecognized, P:x pivot,
// T:x continue, E:x explicit intent; x is an intent name.
Thought thought_from(const std::string& tok) {
  if (tok == "C") return ChitChat{};
  if (tok == "U") return Unrecognized{"hmm"};
  Intent i{tok.substr(2)};
  switch (tok[0]) {
    case 'P': return Pivot{i};
    case 'T': return ContinueTopic{i};
    default: return ExplicitIntent{i};
  }
}

Transcript make(const std::string& seq, std::string id = "t") {
  Transcript t;
  t.id = std::move(id);
  t.persona_id = "p";
  t.condition = {FixedAttribute::Occupation, "edu"};
  std::istringstream in(seq);
  std::string tok;
  int n = 0;
  while (in >> tok) {
    ++n;
    t.turns.push_back(Turn{n, "u", "", thought_from(tok), "a"});
  }
  if (auto* e = std::get_if<ExplicitIntent>(&t.turns.back().agent_thought)) {
    t.outcome = Outcome::explicit_intent(e->intent);
    t.success = true;
  } else {
    t.outcome = Outcome::agent_bye();
  }
  return t;
}

std::vector<Transcript> fixture() {
  std::ifstream f(std::string(PSIM_TEST_DATA) + "/metrics_fixture.jsonl");
  std::vector<Transcript> out;
  std::string line;
  while (std::getline(f, line)) out.push_back(Json::parse(line).get<Transcript>());
  return out;
}

Json expected() {
  std::ifstream f(std::string(PSIM_TEST_DATA) + "/metrics_expected.json");
  return Json::parse(f);
}

IntentCounts counts(const Json& j) { return j.get<IntentCounts>(); }

}  // namespace

TEST_CASE("fixture metrics match the reference values") {
  // tests/oracles/metrics_oracle.py
  const auto ts = fixture();
  const auto ex = expected();
  REQUIRE(ts.size() == 12);
  CHECK(success_rate(ts) == doctest::Approx(ex["success_rate"].get<double>()).epsilon(1e-12));
  REQUIRE(avg_turns_successful(ts).has_value());
  CHECK(*avg_turns_successful(ts) == doctest::Approx(6.8).epsilon(1e-12));
  CHECK(intent_distribution(ts) == counts(ex["intent_distribution"]));
  CHECK(intent_distribution(ts, {.chitchat_breaks_runs = true}) ==
        counts(ex["intent_distribution_chitchat_breaks"]));
  CHECK(success_intent_distribution(ts) == counts(ex["success_intent_distribution"]));
  CHECK(*guided_continuation_ratio(ts) == doctest::Approx(10.0 / 17.0).epsilon(1e-12));
  CHECK(*guided_continuation_ratio(ts, {.guided_averaging = GuidedAveraging::PerTranscript}) ==
        doctest::Approx(ex["guided_per_transcript"].get<double>()).epsilon(1e-12));

  MetricsAccumulator acc;
  for (const auto& t : ts) acc.add(t);
  auto r = acc.report("occupation=edu", "Edu");
  CHECK(r.n_conversations == 12);
  CHECK(r.n_successes == 5);
  CHECK(*r.guided_same_intent_ratio == doctest::Approx(ex["guided_same_intent_ratio"].get<double>()).epsilon(1e-12));
  CHECK(r.label == "Edu");
}

TEST_CASE("success rate") {
  std::vector<Transcript> ts{make("E:A"), make("E:A"), make("E:B"), make("C")};
  CHECK(success_rate(ts) == 0.75);
  std::vector<Transcript> all{make("E:A"), make("P:A E:A")};
  CHECK(success_rate(all) == 1.0);
  try {
    success_rate(std::span<const Transcript>{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("average turns over successes") {
  std::vector<Transcript> ts{make("C C C C C C C C C E:A"), make("C C C C C C C C C C C C C E:A"),
                             make("C C C C C C C C C C C C C C C C C C C C")};
  CHECK(*avg_turns_successful(ts) == 12.0);
  std::vector<Transcript> none{make("C")};
  CHECK_FALSE(avg_turns_successful(none).has_value());
  std::vector<Transcript> one{make("E:A")};
  CHECK(*avg_turns_successful(one) == 1.0);
}

TEST_CASE("intent run compression") {
  std::vector<Transcript> a{make("P:A T:A P:B P:A")};
  CHECK(intent_distribution(a) == IntentCounts{{"A", 2}, {"B", 1}});
  std::vector<Transcript> chit{make("C C C C C")};
  CHECK(intent_distribution(chit).empty());
  std::vector<Transcript> gap{make("P:A C T:A")};
  CHECK(intent_distribution(gap) == IntentCounts{{"A", 1}});
  CHECK(intent_distribution(gap, {.chitchat_breaks_runs = true}) == IntentCounts{{"A", 2}});
  CHECK(intent_runs(make("P:A U T:A P:B")) == std::vector<std::string>{"A", "B"});
}

TEST_CASE("success intents") {
  std::vector<Transcript> ts{make("P:V E:V"), make("E:V"), make("E:H"), make("P:H")};
  CHECK(success_intent_distribution(ts) == IntentCounts{{"H", 1}, {"V", 2}});
  std::vector<Transcript> none{make("C")};
  CHECK(success_intent_distribution(none).empty());
}

TEST_CASE("guided continuation ratio") {
  std::vector<Transcript> one{make("P:A T:A E:A")};
  CHECK(*guided_continuation_ratio(one) == 1.0);
  std::vector<Transcript> half{make("P:A C P:B T:B")};
  CHECK(*guided_continuation_ratio(half) == 0.5);
  std::vector<Transcript> tail{make("C P:A")};
  CHECK_FALSE(guided_continuation_ratio(tail).has_value());
  std::vector<Transcript> ex{make("P:A T:A P:B P:A")};
  CHECK(*guided_continuation_ratio(ex) == 0.5);
  // Any intent counts for the main ratio; the diagnostic wants a match.
  MetricsAccumulator acc;
  acc.add(make("P:A T:B"));
  CHECK(*acc.guided_continuation_ratio() == 1.0);
  CHECK(*acc.guided_same_intent_ratio() == 0.0);
}

TEST_CASE("properties hold on the fixture") {
  auto ts = fixture();
  const auto base = intent_distribution(ts);
  const auto base_ratio = *guided_continuation_ratio(ts);
  const auto base_success = success_intent_distribution(ts);

  // Permutation invariance.
  std::mt19937 gen(5);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(ts.begin(), ts.end(), gen);
    CHECK(intent_distribution(ts) == base);
    CHECK(*guided_continuation_ratio(ts) == doctest::Approx(base_ratio).epsilon(1e-15));
    CHECK(success_rate(ts) == doctest::Approx(5.0 / 12.0).epsilon(1e-15));
  }

  // Conservation and domination.
  std::size_t total = 0;
  for (const auto& [intent, n] : base_success) {
    total += n;
    CHECK(n <= base.at(intent));
  }
  CHECK(total == 5);

  // Duplicating intent-bearing thoughts in place leaves the distribution alone.
  auto dup = ts;
  for (auto& t : dup) {
    std::vector<Turn> turns;
    for (const auto& turn : t.turns) {
      turns.push_back(turn);
      if (intent_of(turn.agent_thought) && kind_of(turn.agent_thought) != ThoughtKind::ExplicitIntent) {
        turns.push_back(turn);
      }
    }
    t.turns = turns;
  }
  CHECK(intent_distribution(dup) == base);
}

TEST_CASE("accumulators merge over partitions") {
  const auto ts = fixture();
  for (std::size_t cut = 0; cut <= ts.size(); ++cut) {
    MetricsAccumulator left, right, whole;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      (i < cut ? left : right).add(ts[i]);
      whole.add(ts[i]);
    }
    left.merge(right);
    CHECK(Json(left.report("c", "l")) == Json(whole.report("c", "l")));
  }
}

TEST_CASE("aborted transcripts are ignored") {
  auto ts = fixture();
  auto aborted = make("P:A T:A E:A", "bad");
  aborted.extra["aborted"] = true;
  ts.push_back(aborted);
  CHECK(success_rate(ts) == doctest::Approx(5.0 / 12.0).epsilon(1e-15));
  CHECK(intent_distribution(ts) == counts(expected()["intent_distribution"]));
  std::vector<Transcript> only{aborted};
  CHECK_THROWS_AS(success_rate(only), Error);
}

TEST_CASE("report JSON round-trip keeps undefined values") {
  MetricsAccumulator acc;
  acc.add(make("C C"));
  auto r = acc.report("age=teen", "Teen");
  CHECK_FALSE(r.avg_turns_successful.has_value());
  CHECK_FALSE(r.guided_continuation_ratio.has_value());
  Json j = r;
  CHECK(j.at("avg_turns_successful").is_null());
  CHECK(Json(j.get<MetricsReport>()) == j);
  CHECK(Json(MetricsOptions{.chitchat_breaks_runs = true, .guided_averaging = GuidedAveraging::PerTranscript})
            .get<MetricsOptions>()
            .guided_averaging == GuidedAveraging::PerTranscript);
}
