#include "doctest.h"
#include "psim/domain.hpp"
#include "psim/error.hpp"

using namespace psim;

TEST_CASE("age groups partition 15..90") {
  for (int y = 15; y <= 90; ++y) {
    auto g = age_group_for_years(y);
    CHECK(age_range(g).contains(y));
  }
  CHECK(age_group_for_years(19) == AgeGroup::Teen);
  CHECK(age_group_for_years(20) == AgeGroup::Adult);
  CHECK(age_group_for_years(45) == AgeGroup::Adult);
  CHECK(age_group_for_years(46) == AgeGroup::MiddleAged);
  CHECK(age_group_for_years(65) == AgeGroup::MiddleAged);
  CHECK(age_group_for_years(66) == AgeGroup::Elderly);
  CHECK_THROWS_AS(age_group_for_years(14), Error);
  CHECK_THROWS_AS(age_group_for_years(91), Error);
}

TEST_CASE("every sector lists four occupations") {
  for (auto s : kSectors) {
    CHECK(sector_info(s).titles.size() == 4);
  }
  CHECK(sector_has_title(Sector::Agr, "Farmer"));
  CHECK_FALSE(sector_has_title(Sector::Agr, "Teacher"));
}

TEST_CASE("tokens round-trip") {
  for (auto s : kSectors) CHECK(from_token<Sector>(to_token(s)) == s);
  for (auto g : kGenders) CHECK(from_token<Gender>(to_token(g)) == g);
  for (auto a : kAgeGroups) CHECK(from_token<AgeGroup>(to_token(a)) == a);
  CHECK_FALSE(from_token<Sector>("mining").has_value());
  CHECK(condition_display_label(FixedAttribute::Occupation, "edu") == "Edu");
  CHECK(condition_rank(FixedAttribute::Age, "elderly") == 3u);
}

TEST_CASE("persona spec invariants") {
  PersonaSpec spec;
  spec.sector = Sector::Edu;
  spec.occupation_title = sector_info(Sector::Edu).titles[0];
  spec.age_group = AgeGroup::Teen;
  spec.age_years = 17;
  CHECK_NOTHROW(spec.validate());
  spec.age_years = 30;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.age_years = 17;
  spec.occupation_title = "Farmer";
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("intent catalog resolves aliases case-insensitively") {
  auto c = IntentCatalog::defaults();
  CHECK(c.names().size() == 4);
  CHECK(c.canonicalize("findrestaurant").intent.name == "FindRestaurants");
  CHECK(c.canonicalize("FINDEVENT").intent.name == "FindEvents");
  auto other = c.canonicalize("BookFlight");
  CHECK_FALSE(other.in_catalog);
  CHECK(other.intent.name == "BookFlight");
  CHECK_THROWS_AS(c.canonicalize("  "), Error);
}

TEST_CASE("strategy cards cover six sectors with two intents each") {
  auto cards = default_strategy_cards();
  REQUIRE(cards.size() == 6);
  CHECK(cards[3].sector == Sector::Edu);
  CHECK(cards[3].joined_intents() == "FindRestaurants, FindEvents");
  CHECK(cards[3].rationale == "Educators often enjoy social or cultural activities and group-friendly dining.");
  for (const auto& c : cards) CHECK_NOTHROW(c.validate());
}

TEST_CASE("transcript JSON round-trip keeps unknown fields") {
  Transcript t;
  t.id = "t1";
  t.persona_id = "p1";
  t.condition = {FixedAttribute::Occupation, "edu"};
  t.strategy = default_strategy_cards()[3];
  t.pipeline = "planner-responder";
  t.turns = {Turn{1, "hi", "raw", Pivot{Intent{"FindEvents"}}, "hello"},
             Turn{2, "ok", "raw2", ExplicitIntent{Intent{"FindEvents"}}, "great"}};
  t.outcome = Outcome::explicit_intent(Intent{"FindEvents"});
  t.success = true;
  t.seed = 42;
  t.extra = Json{{"annotator", "x"}};
  Json j = t;
  CHECK(j.at("annotator") == "x");
  auto back = j.get<Transcript>();
  CHECK(back == t);
  CHECK_NOTHROW(back.validate(20));
  back.success = false;
  CHECK_THROWS_AS(back.validate(20), Error);
}

TEST_CASE("persona JSON round-trip") {
  Persona p;
  p.id = "gender-female-01";
  p.spec.gender = Gender::Female;
  p.spec.sector = Sector::Heal;
  p.spec.occupation_title = sector_info(Sector::Heal).titles[1];
  p.text = "You're Ann Lee.";
  p.name = "Ann Lee";
  p.extra = Json{{"note", 1}};
  auto back = Json(p).get<Persona>();
  CHECK(back == p);
}
