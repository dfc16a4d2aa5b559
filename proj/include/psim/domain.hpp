#pragma once

// Vocabulary types shared by every module: persona attributes, intents,
// agent thoughts, turns and transcripts. All are plain values.

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace psim {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Persona attributes
// ---------------------------------------------------------------------------

enum class Gender { Male, Female };

enum class AgeGroup { Teen, Adult, MiddleAged, Elderly };

enum class Sector { Agr, Info, Fin, Edu, Heal, Arts };

// Single MBTI poles, not the 16 composite types.
enum class Trait { E, I, S, N, T, F, J, P };

enum class FixedAttribute { Gender, Age, Occupation };

inline constexpr std::array kGenders{Gender::Male, Gender::Female};
inline constexpr std::array kAgeGroups{AgeGroup::Teen, AgeGroup::Adult,
                                       AgeGroup::MiddleAged, AgeGroup::Elderly};
inline constexpr std::array kSectors{Sector::Agr, Sector::Info, Sector::Fin,
                                     Sector::Edu, Sector::Heal, Sector::Arts};
inline constexpr std::array kTraits{Trait::E, Trait::I, Trait::S, Trait::N,
                                    Trait::T, Trait::F, Trait::J, Trait::P};
inline constexpr std::array kFixedAttributes{
    FixedAttribute::Gender, FixedAttribute::Age, FixedAttribute::Occupation};

// Inclusive year range. Boundary years 45 and 65 belong to the younger group
// and Elderly is capped at 90.
struct YearRange {
  int lo;
  int hi;
  constexpr bool contains(int y) const { return y >= lo && y <= hi; }
};

YearRange age_range(AgeGroup g);
AgeGroup age_group_for_years(int years);

struct SectorInfo {
  std::string_view token;        // "agr"
  std::string_view label;        // "Agr"
  std::string_view description;  // "Agriculture, Forestry, and Fishing"
  std::array<std::string_view, 4> titles;
};

const SectorInfo& sector_info(Sector s);
bool sector_has_title(Sector s, std::string_view title);

std::string_view trait_full_name(Trait t);

// Stable lowercase tokens used in every serialized form.
std::string_view to_token(Gender v);
std::string_view to_token(AgeGroup v);
std::string_view to_token(Sector v);
std::string_view to_token(Trait v);
std::string_view to_token(FixedAttribute v);

// Human-facing labels as they appear in tables ("Female", "Middle-aged", "Edu").
std::string_view display_label(Gender v);
std::string_view display_label(AgeGroup v);
std::string_view display_label(Sector v);

template <class E>
std::optional<E> from_token(std::string_view token);

template <>
std::optional<Gender> from_token<Gender>(std::string_view token);
template <>
std::optional<AgeGroup> from_token<AgeGroup>(std::string_view token);
template <>
std::optional<Sector> from_token<Sector>(std::string_view token);
template <>
std::optional<Trait> from_token<Trait>(std::string_view token);
template <>
std::optional<FixedAttribute> from_token<FixedAttribute>(std::string_view token);

// Same as from_token but throws Error(kInvalidArgument) naming the field.
template <class E>
E parse_token(std::string_view token, std::string_view what);

// Tokens accepted as values of a fixed attribute, in enumeration order.
std::vector<std::string> attribute_domain(FixedAttribute attr);

// Table label for a condition value, e.g. (Occupation, "edu") -> "Edu".
// Unknown values are returned unchanged.
std::string condition_display_label(FixedAttribute attr, std::string_view value);

// Position of a value inside its attribute domain, for stable ordering.
std::optional<std::size_t> condition_rank(FixedAttribute attr, std::string_view value);

// ---------------------------------------------------------------------------
// Personas
// ---------------------------------------------------------------------------

struct PersonaSpec {
  Gender gender = Gender::Male;
  AgeGroup age_group = AgeGroup::Adult;
  int age_years = 30;
  Sector sector = Sector::Agr;
  std::string occupation_title;
  Trait trait = Trait::E;
  FixedAttribute fixed_attribute = FixedAttribute::Gender;

  // Throws Error(kInvalidArgument) when an invariant is broken.
  void validate() const;

  // Token of the held-fixed attribute's value ("female", "teen", "edu").
  std::string condition_value() const;

  bool operator==(const PersonaSpec&) const = default;
};

struct Persona {
  std::string id;
  PersonaSpec spec;
  std::string text;
  std::optional<std::string> name;
  Json extra = Json::object();  // unknown fields kept for round-trips

  bool operator==(const Persona&) const = default;
};

// ---------------------------------------------------------------------------
// Intents
// ---------------------------------------------------------------------------

struct Intent {
  std::string name;

  auto operator<=>(const Intent&) const = default;
};

struct IntentMatch {
  Intent intent;
  bool in_catalog = false;
};

// Open catalog of canonical intent names plus spelling aliases. Lookups are
// case-insensitive; names outside the catalog pass through verbatim.
class IntentCatalog {
 public:
  IntentCatalog() = default;
  IntentCatalog(std::vector<std::string> canonical,
                std::map<std::string, std::string> aliases);

  static IntentCatalog defaults();

  // Throws Error(kInvalidArgument) on blank input.
  IntentMatch canonicalize(std::string_view raw) const;

  bool contains(std::string_view name) const;
  const std::vector<std::string>& names() const { return canonical_; }
  const std::map<std::string, std::string>& aliases() const { return aliases_; }

 private:
  std::vector<std::string> canonical_;
  std::map<std::string, std::string> aliases_;      // as configured
  std::map<std::string, std::string> lookup_;       // lowercase -> canonical
};

// ---------------------------------------------------------------------------
// Thoughts
// ---------------------------------------------------------------------------

struct ChitChat {
  bool operator==(const ChitChat&) const = default;
};
struct Pivot {
  Intent intent;
  bool operator==(const Pivot&) const = default;
};
struct ContinueTopic {
  Intent intent;
  bool operator==(const ContinueTopic&) const = default;
};
struct ExplicitIntent {
  Intent intent;
  bool operator==(const ExplicitIntent&) const = default;
};
struct Unrecognized {
  std::string raw;
  bool operator==(const Unrecognized&) const = default;
};

using Thought = std::variant<ChitChat, Pivot, ContinueTopic, ExplicitIntent, Unrecognized>;

enum class ThoughtKind { ChitChat, Pivot, ContinueTopic, ExplicitIntent, Unrecognized };

ThoughtKind kind_of(const Thought& t);
std::string_view to_token(ThoughtKind k);
// Null for ChitChat and Unrecognized.
const Intent* intent_of(const Thought& t);

// ---------------------------------------------------------------------------
// Conversations
// ---------------------------------------------------------------------------

struct Turn {
  int index = 1;
  std::string user_utterance;
  std::string agent_thought_raw;
  Thought agent_thought = Unrecognized{};
  std::string agent_response;

  bool operator==(const Turn&) const = default;
};

enum class OutcomeKind { ExplicitIntent, AgentBye, MaxTurns };

std::string_view to_token(OutcomeKind k);

struct Outcome {
  OutcomeKind kind = OutcomeKind::MaxTurns;
  std::optional<Intent> intent;  // set iff kind == ExplicitIntent

  static Outcome explicit_intent(Intent i) { return {OutcomeKind::ExplicitIntent, std::move(i)}; }
  static Outcome agent_bye() { return {OutcomeKind::AgentBye, std::nullopt}; }
  static Outcome max_turns() { return {OutcomeKind::MaxTurns, std::nullopt}; }

  bool operator==(const Outcome&) const = default;
};

struct StrategyCard {
  Sector sector = Sector::Agr;
  std::array<Intent, 2> intents;
  std::string rationale;

  void validate() const;
  // "FindRestaurants, FindEvents"
  std::string joined_intents() const;

  bool operator==(const StrategyCard&) const = default;
};

// The six occupation cards, intents in priority order.
std::vector<StrategyCard> default_strategy_cards();

struct Condition {
  FixedAttribute attribute = FixedAttribute::Gender;
  std::string value;

  // "occupation=edu"
  std::string key() const;
  auto operator<=>(const Condition&) const = default;
};

struct RoleModels {
  std::string user;
  std::string planner;
  std::string responder;

  bool operator==(const RoleModels&) const = default;
};

struct Transcript {
  std::string id;
  std::string persona_id;
  Condition condition;
  std::optional<StrategyCard> strategy;
  std::string pipeline;
  std::vector<Turn> turns;
  Outcome outcome;
  bool success = false;
  std::uint64_t seed = 0;
  RoleModels models;
  std::optional<std::string> started_at;
  std::optional<std::string> finished_at;
  Json extra = Json::object();

  // Checks success <=> explicit outcome, contiguous turn indices and the
  // turn bounds. Throws Error(kInvalidArgument).
  void validate(int max_turns) const;

  bool operator==(const Transcript&) const = default;
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

void to_json(Json& j, const PersonaSpec& v);
void from_json(const Json& j, PersonaSpec& v);
void to_json(Json& j, const Persona& v);
void from_json(const Json& j, Persona& v);
void to_json(Json& j, const Thought& v);
void from_json(const Json& j, Thought& v);
void to_json(Json& j, const Turn& v);
void from_json(const Json& j, Turn& v);
void to_json(Json& j, const Outcome& v);
void from_json(const Json& j, Outcome& v);
void to_json(Json& j, const StrategyCard& v);
void from_json(const Json& j, StrategyCard& v);
void to_json(Json& j, const Condition& v);
void from_json(const Json& j, Condition& v);
void to_json(Json& j, const Transcript& v);
void from_json(const Json& j, Transcript& v);
void to_json(Json& j, const IntentCatalog& v);
void from_json(const Json& j, IntentCatalog& v);

}  // namespace psim
