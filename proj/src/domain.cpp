#include "psim/domain.hpp"

#include <algorithm>
#include <set>

#include "psim/error.hpp"
#include "text_util.hpp"

namespace psim {

namespace {

template <class E, std::size_t N>
std::optional<E> lookup_token(std::string_view token, const std::array<E, N>& values) {
  for (E v : values) {
    if (detail::iequals(to_token(v), token)) return v;
  }
  return std::nullopt;
}

const std::array<SectorInfo, 6> kSectorTable{{
    {"agr", "Agr", "Agriculture, Forestry, and Fishing",
     {"Farmer", "Woodcutter", "Fisherman", "Horticulturist"}},
    {"info", "Info", "Information and Communication",
     {"Software Engineer", "Cybersecurity Specialist", "Data Scientist",
      "Telecommunications Technician"}},
    {"fin", "Fin", "Financial and Insurance Activities",
     {"Investment Analyst", "Actuary", "Insurance Claims Adjuster", "Financial Advisor"}},
    {"edu", "Edu", "Education",
     {"Primary School Teacher", "University Professor", "Vocational Trainer",
      "Special Education Teacher"}},
    {"heal", "Heal", "Human Health and Social Work Activities",
     {"Doctor", "Nurse", "Physical Therapist", "Psychologist"}},
    {"arts", "Arts", "Arts, Entertainment, and Recreation",
     {"Actor", "Musician", "Artist", "Writer"}},
}};

Json optional_string(const std::optional<std::string>& s) {
  return s ? Json(*s) : Json(nullptr);
}

std::optional<std::string> read_optional_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

Json collect_extra(const Json& j, std::initializer_list<std::string_view> known) {
  Json extra = Json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      extra[it.key()] = it.value();
    }
  }
  return extra;
}

}  // namespace

YearRange age_range(AgeGroup g) {
  switch (g) {
    case AgeGroup::Teen: return {15, 19};
    case AgeGroup::Adult: return {20, 45};
    case AgeGroup::MiddleAged: return {46, 65};
    case AgeGroup::Elderly: return {66, 90};
  }
  return {0, 0};
}

AgeGroup age_group_for_years(int years) {
  for (AgeGroup g : kAgeGroups) {
    if (age_range(g).contains(years)) return g;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "age " + std::to_string(years) + " is outside every age group (15-90)");
}

const SectorInfo& sector_info(Sector s) { return kSectorTable.at(static_cast<std::size_t>(s)); }

bool sector_has_title(Sector s, std::string_view title) {
  const auto& titles = sector_info(s).titles;
  return std::find(titles.begin(), titles.end(), title) != titles.end();
}

std::string_view trait_full_name(Trait t) {
  switch (t) {
    case Trait::E: return "Extraversion";
    case Trait::I: return "Introversion";
    case Trait::S: return "Sensing";
    case Trait::N: return "Intuition";
    case Trait::T: return "Thinking";
    case Trait::F: return "Feeling";
    case Trait::J: return "Judging";
    case Trait::P: return "Perceiving";
  }
  return "";
}

std::string_view to_token(Gender v) { return v == Gender::Male ? "male" : "female"; }

std::string_view to_token(AgeGroup v) {
  switch (v) {
    case AgeGroup::Teen: return "teen";
    case AgeGroup::Adult: return "adult";
    case AgeGroup::MiddleAged: return "middle-aged";
    case AgeGroup::Elderly: return "elderly";
  }
  return "";
}

std::string_view to_token(Sector v) { return sector_info(v).token; }

std::string_view to_token(Trait v) {
  static constexpr std::array<std::string_view, 8> kTokens{"e", "i", "s", "n", "t", "f", "j", "p"};
  return kTokens.at(static_cast<std::size_t>(v));
}

std::string_view to_token(FixedAttribute v) {
  switch (v) {
    case FixedAttribute::Gender: return "gender";
    case FixedAttribute::Age: return "age";
    case FixedAttribute::Occupation: return "occupation";
  }
  return "";
}

std::string_view display_label(Gender v) { return v == Gender::Male ? "Male" : "Female"; }

std::string_view display_label(AgeGroup v) {
  switch (v) {
    case AgeGroup::Teen: return "Teen";
    case AgeGroup::Adult: return "Adult";
    case AgeGroup::MiddleAged: return "Middle-aged";
    case AgeGroup::Elderly: return "Elderly";
  }
  return "";
}

std::string_view display_label(Sector v) { return sector_info(v).label; }

template <>
std::optional<Gender> from_token<Gender>(std::string_view token) {
  return lookup_token(token, kGenders);
}
template <>
std::optional<AgeGroup> from_token<AgeGroup>(std::string_view token) {
  if (detail::iequals(token, "middle_aged") || detail::iequals(token, "middleaged")) {
    return AgeGroup::MiddleAged;
  }
  return lookup_token(token, kAgeGroups);
}
template <>
std::optional<Sector> from_token<Sector>(std::string_view token) {
  return lookup_token(token, kSectors);
}
template <>
std::optional<Trait> from_token<Trait>(std::string_view token) {
  if (auto t = lookup_token(token, kTraits)) return t;
  for (Trait t : kTraits) {
    if (detail::iequals(trait_full_name(t), token)) return t;
  }
  return std::nullopt;
}
template <>
std::optional<FixedAttribute> from_token<FixedAttribute>(std::string_view token) {
  return lookup_token(token, kFixedAttributes);
}

template <class E>
E parse_token(std::string_view token, std::string_view what) {
  if (auto v = from_token<E>(token)) return *v;
  throw Error(ErrorCode::kInvalidArgument,
              "invalid " + std::string(what) + " '" + std::string(token) + "'");
}

template Gender parse_token<Gender>(std::string_view, std::string_view);
template AgeGroup parse_token<AgeGroup>(std::string_view, std::string_view);
template Sector parse_token<Sector>(std::string_view, std::string_view);
template Trait parse_token<Trait>(std::string_view, std::string_view);
template FixedAttribute parse_token<FixedAttribute>(std::string_view, std::string_view);

std::vector<std::string> attribute_domain(FixedAttribute attr) {
  std::vector<std::string> out;
  switch (attr) {
    case FixedAttribute::Gender:
      for (auto v : kGenders) out.emplace_back(to_token(v));
      break;
    case FixedAttribute::Age:
      for (auto v : kAgeGroups) out.emplace_back(to_token(v));
      break;
    case FixedAttribute::Occupation:
      for (auto v : kSectors) out.emplace_back(to_token(v));
      break;
  }
  return out;
}

std::string condition_display_label(FixedAttribute attr, std::string_view value) {
  switch (attr) {
    case FixedAttribute::Gender:
      if (auto g = from_token<Gender>(value)) return std::string(display_label(*g));
      break;
    case FixedAttribute::Age:
      if (auto a = from_token<AgeGroup>(value)) return std::string(display_label(*a));
      break;
    case FixedAttribute::Occupation:
      if (auto s = from_token<Sector>(value)) return std::string(display_label(*s));
      break;
  }
  return std::string(value);
}

std::optional<std::size_t> condition_rank(FixedAttribute attr, std::string_view value) {
  auto domain = attribute_domain(attr);
  for (std::size_t i = 0; i < domain.size(); ++i) {
    if (detail::iequals(domain[i], value)) return i;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

void PersonaSpec::validate() const {
  if (!age_range(age_group).contains(age_years)) {
    throw Error(ErrorCode::kInvalidArgument,
                "age " + std::to_string(age_years) + " outside group " +
                    std::string(to_token(age_group)));
  }
  if (!sector_has_title(sector, occupation_title)) {
    throw Error(ErrorCode::kInvalidArgument, "occupation '" + occupation_title +
                                                 "' is not listed for sector " +
                                                 std::string(to_token(sector)));
  }
}

std::string PersonaSpec::condition_value() const {
  switch (fixed_attribute) {
    case FixedAttribute::Gender: return std::string(to_token(gender));
    case FixedAttribute::Age: return std::string(to_token(age_group));
    case FixedAttribute::Occupation: return std::string(to_token(sector));
  }
  return {};
}

// ---------------------------------------------------------------------------

IntentCatalog::IntentCatalog(std::vector<std::string> canonical,
                             std::map<std::string, std::string> aliases)
    : canonical_(std::move(canonical)), aliases_(std::move(aliases)) {
  std::set<std::string> seen;
  for (auto& name : canonical_) {
    name = std::string(detail::trim(name));
    if (name.empty()) throw Error(ErrorCode::kConfig, "intent catalog contains a blank name");
    auto key = detail::to_lower(name);
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::kConfig, "duplicate intent in catalog: " + name);
    }
    lookup_[key] = name;
  }
  for (const auto& [alias, target] : aliases_) {
    auto it = lookup_.find(detail::to_lower(target));
    if (it == lookup_.end()) {
      throw Error(ErrorCode::kConfig,
                  "alias '" + alias + "' points at unknown intent '" + target + "'");
    }
    auto key = detail::to_lower(detail::trim(alias));
    if (seen.count(key)) {
      throw Error(ErrorCode::kConfig, "alias '" + alias + "' shadows a canonical intent");
    }
    lookup_[key] = it->second;
  }
}

IntentCatalog IntentCatalog::defaults() {
  return IntentCatalog({"FindRestaurants", "FindAttraction", "SearchHotel", "FindEvents"},
                       {{"FindRestaurant", "FindRestaurants"},
                        {"FindEvent", "FindEvents"}});
}

IntentMatch IntentCatalog::canonicalize(std::string_view raw) const {
  auto name = detail::trim(raw);
  if (name.empty()) throw Error(ErrorCode::kInvalidArgument, "empty intent name");
  auto it = lookup_.find(detail::to_lower(name));
  if (it != lookup_.end()) return {Intent{it->second}, true};
  return {Intent{std::string(name)}, false};
}

bool IntentCatalog::contains(std::string_view name) const {
  return std::find(canonical_.begin(), canonical_.end(), name) != canonical_.end();
}

// ---------------------------------------------------------------------------

ThoughtKind kind_of(const Thought& t) { return static_cast<ThoughtKind>(t.index()); }

std::string_view to_token(ThoughtKind k) {
  switch (k) {
    case ThoughtKind::ChitChat: return "chitchat";
    case ThoughtKind::Pivot: return "pivot";
    case ThoughtKind::ContinueTopic: return "continue";
    case ThoughtKind::ExplicitIntent: return "explicit_intent";
    case ThoughtKind::Unrecognized: return "unrecognized";
  }
  return "";
}

const Intent* intent_of(const Thought& t) {
  if (auto* p = std::get_if<Pivot>(&t)) return &p->intent;
  if (auto* c = std::get_if<ContinueTopic>(&t)) return &c->intent;
  if (auto* e = std::get_if<ExplicitIntent>(&t)) return &e->intent;
  return nullptr;
}

std::string_view to_token(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::ExplicitIntent: return "explicit_intent";
    case OutcomeKind::AgentBye: return "agent_bye";
    case OutcomeKind::MaxTurns: return "max_turns";
  }
  return "";
}

void StrategyCard::validate() const {
  if (intents[0].name.empty() || intents[1].name.empty()) {
    throw Error(ErrorCode::kConfig, "strategy card for " + std::string(to_token(sector)) +
                                        " needs two intents");
  }
  if (intents[0] == intents[1]) {
    throw Error(ErrorCode::kConfig, "strategy card for " + std::string(to_token(sector)) +
                                        " repeats intent " + intents[0].name);
  }
}

std::string StrategyCard::joined_intents() const {
  return intents[0].name + ", " + intents[1].name;
}

std::vector<StrategyCard> default_strategy_cards() {
  return {
      {Sector::Agr,
       {Intent{"FindRestaurants"}, Intent{"FindAttraction"}},
       "These users often value relaxation and leisure experiences when off work."},
      {Sector::Info,
       {Intent{"SearchHotel"}, Intent{"FindRestaurants"}},
       "Tech workers frequently travel for work and value reliable accommodations and good "
       "dining options."},
      {Sector::Fin,
       {Intent{"SearchHotel"}, Intent{"FindRestaurants"}},
       "These users may have business travel needs and typically prefer higher-end services."},
      {Sector::Edu,
       {Intent{"FindRestaurants"}, Intent{"FindEvents"}},
       "Educators often enjoy social or cultural activities and group-friendly dining."},
      {Sector::Heal,
       {Intent{"FindRestaurants"}, Intent{"FindEvents"}},
       "These users often seek stress relief through leisure activities and social events."},
      {Sector::Arts,
       {Intent{"FindEvents"}, Intent{"FindRestaurants"}},
       "Creatives are usually interested in events and venues that provide inspiration or "
       "entertainment, along with unique dining experiences."},
  };
}

std::string Condition::key() const { return std::string(to_token(attribute)) + "=" + value; }

void Transcript::validate(int max_turns) const {
  auto fail = [this](const std::string& why) {
    throw Error(ErrorCode::kInvalidArgument, "transcript " + id + ": " + why);
  };
  if (turns.empty()) fail("has no turns");
  if (static_cast<int>(turns.size()) > max_turns) fail("exceeds the turn limit");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (turns[i].index != static_cast<int>(i) + 1) fail("turn indices are not contiguous");
  }
  bool explicit_outcome = outcome.kind == OutcomeKind::ExplicitIntent;
  if (success != explicit_outcome) fail("success flag disagrees with the outcome");
  if (explicit_outcome != outcome.intent.has_value()) fail("outcome intent mismatch");
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

void to_json(Json& j, const PersonaSpec& v) {
  j = Json{{"gender", to_token(v.gender)},
           {"age_group", to_token(v.age_group)},
           {"age_years", v.age_years},
           {"sector", to_token(v.sector)},
           {"occupation", v.occupation_title},
           {"trait", to_token(v.trait)},
           {"fixed_attribute", to_token(v.fixed_attribute)}};
}

void from_json(const Json& j, PersonaSpec& v) {
  v.gender = parse_token<Gender>(j.at("gender").get<std::string>(), "gender");
  v.age_group = parse_token<AgeGroup>(j.at("age_group").get<std::string>(), "age group");
  v.age_years = j.at("age_years").get<int>();
  v.sector = parse_token<Sector>(j.at("sector").get<std::string>(), "sector");
  v.occupation_title = j.at("occupation").get<std::string>();
  v.trait = parse_token<Trait>(j.at("trait").get<std::string>(), "trait");
  v.fixed_attribute =
      parse_token<FixedAttribute>(j.at("fixed_attribute").get<std::string>(), "fixed attribute");
}

void to_json(Json& j, const Persona& v) {
  j = v.extra.is_object() ? v.extra : Json::object();
  j["id"] = v.id;
  j["spec"] = v.spec;
  j["text"] = v.text;
  j["name"] = optional_string(v.name);
}

void from_json(const Json& j, Persona& v) {
  v.id = j.at("id").get<std::string>();
  v.spec = j.at("spec").get<PersonaSpec>();
  v.text = j.at("text").get<std::string>();
  v.name = read_optional_string(j, "name");
  v.extra = collect_extra(j, {"id", "spec", "text", "name"});
}

void to_json(Json& j, const Thought& v) {
  j = Json{{"kind", to_token(kind_of(v))}};
  if (const Intent* i = intent_of(v)) j["intent"] = i->name;
  if (auto* u = std::get_if<Unrecognized>(&v)) j["raw"] = u->raw;
}

void from_json(const Json& j, Thought& v) {
  auto kind = j.at("kind").get<std::string>();
  auto intent = [&] { return Intent{j.at("intent").get<std::string>()}; };
  if (kind == "chitchat") v = ChitChat{};
  else if (kind == "pivot") v = Pivot{intent()};
  else if (kind == "continue") v = ContinueTopic{intent()};
  else if (kind == "explicit_intent") v = ExplicitIntent{intent()};
  else if (kind == "unrecognized") v = Unrecognized{j.value("raw", std::string{})};
  else throw Error(ErrorCode::kParse, "unknown thought kind '" + kind + "'");
}

void to_json(Json& j, const Turn& v) {
  j = Json{{"index", v.index},
           {"user", v.user_utterance},
           {"thought_raw", v.agent_thought_raw},
           {"thought", v.agent_thought},
           {"response", v.agent_response}};
}

void from_json(const Json& j, Turn& v) {
  v.index = j.at("index").get<int>();
  v.user_utterance = j.at("user").get<std::string>();
  v.agent_thought_raw = j.at("thought_raw").get<std::string>();
  v.agent_thought = j.at("thought").get<Thought>();
  v.agent_response = j.at("response").get<std::string>();
}

void to_json(Json& j, const Outcome& v) {
  j = Json{{"kind", to_token(v.kind)}};
  if (v.intent) j["intent"] = v.intent->name;
}

void from_json(const Json& j, Outcome& v) {
  auto kind = j.at("kind").get<std::string>();
  if (kind == "explicit_intent") v = Outcome::explicit_intent(Intent{j.at("intent").get<std::string>()});
  else if (kind == "agent_bye") v = Outcome::agent_bye();
  else if (kind == "max_turns") v = Outcome::max_turns();
  else throw Error(ErrorCode::kParse, "unknown outcome kind '" + kind + "'");
}

void to_json(Json& j, const StrategyCard& v) {
  j = Json{{"sector", to_token(v.sector)},
           {"intents", {v.intents[0].name, v.intents[1].name}},
           {"rationale", v.rationale}};
}

void from_json(const Json& j, StrategyCard& v) {
  v.sector = parse_token<Sector>(j.at("sector").get<std::string>(), "sector");
  const auto& intents = j.at("intents");
  if (!intents.is_array() || intents.size() != 2) {
    throw Error(ErrorCode::kConfig, "strategy card intents must be a list of exactly two names");
  }
  v.intents = {Intent{intents[0].get<std::string>()}, Intent{intents[1].get<std::string>()}};
  v.rationale = j.at("rationale").get<std::string>();
  v.validate();
}

void to_json(Json& j, const Condition& v) {
  j = Json{{"attribute", to_token(v.attribute)}, {"value", v.value}};
}

void from_json(const Json& j, Condition& v) {
  v.attribute = parse_token<FixedAttribute>(j.at("attribute").get<std::string>(), "attribute");
  v.value = j.at("value").get<std::string>();
}

void to_json(Json& j, const Transcript& v) {
  j = v.extra.is_object() ? v.extra : Json::object();
  j["id"] = v.id;
  j["persona_id"] = v.persona_id;
  j["condition"] = v.condition;
  j["strategy"] = v.strategy ? Json(*v.strategy) : Json(nullptr);
  j["pipeline"] = v.pipeline;
  j["turns"] = v.turns;
  j["outcome"] = v.outcome;
  j["success"] = v.success;
  j["seed"] = v.seed;
  j["models"] = Json{{"user", v.models.user},
                     {"planner", v.models.planner},
                     {"responder", v.models.responder}};
  j["started_at"] = optional_string(v.started_at);
  j["finished_at"] = optional_string(v.finished_at);
}

void from_json(const Json& j, Transcript& v) {
  v.id = j.at("id").get<std::string>();
  v.persona_id = j.at("persona_id").get<std::string>();
  v.condition = j.at("condition").get<Condition>();
  auto strategy = j.find("strategy");
  if (strategy != j.end() && !strategy->is_null()) {
    v.strategy = strategy->get<StrategyCard>();
  } else {
    v.strategy.reset();
  }
  v.pipeline = j.value("pipeline", std::string{});
  v.turns = j.at("turns").get<std::vector<Turn>>();
  v.outcome = j.at("outcome").get<Outcome>();
  v.success = j.at("success").get<bool>();
  v.seed = j.value("seed", std::uint64_t{0});
  if (auto m = j.find("models"); m != j.end()) {
    v.models = {m->value("user", ""), m->value("planner", ""), m->value("responder", "")};
  }
  v.started_at = read_optional_string(j, "started_at");
  v.finished_at = read_optional_string(j, "finished_at");
  v.extra = collect_extra(j, {"id", "persona_id", "condition", "strategy", "pipeline", "turns",
                              "outcome", "success", "seed", "models", "started_at",
                              "finished_at"});
}

void to_json(Json& j, const IntentCatalog& v) {
  j = Json{{"catalog", v.names()}, {"aliases", v.aliases()}};
}

void from_json(const Json& j, IntentCatalog& v) {
  v = IntentCatalog(j.at("catalog").get<std::vector<std::string>>(),
                    j.value("aliases", std::map<std::string, std::string>{}));
}

}  // namespace psim
