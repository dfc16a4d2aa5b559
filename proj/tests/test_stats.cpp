#include <cmath>
#include <limits>

#include "doctest.h"
#include "psim/error.hpp"
#include "psim/stats.hpp"

using namespace psim;

namespace {

// Reference values from tests/oracles/stats_oracle.py (SciPy).
const std::vector<std::vector<double>> kAnovaGroups = {
    {6, 8, 4, 5, 3, 4}, {8, 12, 9, 11, 6, 8}, {13, 9, 11, 8, 7, 12}};
const std::vector<double> kA = {19.7, 21.4, 20.9, 22.1, 18.8, 20.3, 21.0};
const std::vector<double> kB = {22.5, 23.1, 21.8, 24.0, 22.9, 23.4};
const std::vector<std::vector<double>> kMixed = {
    {0.50, 0.40, 0.60, 0.55}, {0.20, 0.25, 0.10, 0.30}, {0.45, 0.35, 0.50, 0.40}};

// Composite Simpson rule on the beta density; a, b >= 2 keeps it smooth.
double simpson_beta(double a, double b, double x) {
  const int n = 4000;
  auto f = [&](double t) { return std::pow(t, a - 1) * std::pow(1 - t, b - 1); };
  auto integrate = [&](double hi) {
    double h = hi / n, s = f(0) + f(hi);
    for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4 : 2);
    return s * h / 3;
  };
  return integrate(x) / integrate(1.0);
}

Transcript talk(const std::string& persona, const std::vector<std::string>& intents) {
  Transcript t;
  t.id = persona + "-c";
  t.persona_id = persona;
  t.condition = {FixedAttribute::Occupation, "x"};
  int n = 0;
  for (const auto& i : intents) t.turns.push_back(Turn{++n, "u", "", Pivot{Intent{i}}, "a"});
  t.turns.push_back(Turn{++n, "u", "", ChitChat{}, "bye"});
  t.outcome = Outcome::agent_bye();
  return t;
}

}  // namespace

TEST_CASE("incomplete beta reference points") {
  CHECK(reg_incomplete_beta(2.5, 3.5, 0.3) == doctest::Approx(0.29675298929566646).epsilon(1e-12));
  CHECK(reg_incomplete_beta(0.5, 0.5, 0.2) == doctest::Approx(0.29516723530086653).epsilon(1e-12));
  CHECK(reg_incomplete_beta(10, 3, 0.85) == doctest::Approx(0.73581808622345091).epsilon(1e-12));
  CHECK(reg_incomplete_beta(1.5, 40, 0.02) == doctest::Approx(0.34654713215022043).epsilon(1e-12));
  CHECK(reg_incomplete_beta(30, 30, 0.55) == doctest::Approx(0.78033281554737455).epsilon(1e-12));
  CHECK(reg_incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(reg_incomplete_beta(2, 3, 1.0) == 1.0);
  CHECK_THROWS_AS(reg_incomplete_beta(0, 1, 0.5), Error);
  CHECK_THROWS_AS(reg_incomplete_beta(1, 1, 1.5), Error);
}

TEST_CASE("incomplete beta closed form for a = 1") {
  for (double b : {0.5, 1.0, 2.0, 7.5}) {
    for (int i = 0; i <= 20; ++i) {
      double x = i / 20.0;
      CHECK(reg_incomplete_beta(1, b, x) == doctest::Approx(1 - std::pow(1 - x, b)).epsilon(1e-12));
    }
  }
}

TEST_CASE("incomplete beta reflection identity") {
  for (double a : {0.5, 1.5, 3.0, 8.0, 25.0}) {
    for (double b : {0.5, 1.5, 3.0, 8.0, 25.0}) {
      for (double x : {0.05, 0.3, 0.5, 0.7, 0.95}) {
        CAPTURE(a);
        CAPTURE(b);
        CAPTURE(x);
        CHECK(reg_incomplete_beta(a, b, x) + reg_incomplete_beta(b, a, 1 - x) == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("incomplete beta agrees with quadrature") {
  for (double a : {2.0, 3.5, 5.0}) {
    for (double b : {2.0, 4.0, 6.5}) {
      for (double x : {0.1, 0.4, 0.8}) {
        CHECK(reg_incomplete_beta(a, b, x) == doctest::Approx(simpson_beta(a, b, x)).epsilon(1e-7));
      }
    }
  }
}

TEST_CASE("one-way ANOVA matches SciPy") {
  auto r = one_way_anova(kAnovaGroups);
  CHECK(r.test == "anova");
  CHECK(r.statistic == doctest::Approx(9.264705882352942).epsilon(1e-9));
  REQUIRE(r.p_value.has_value());
  CHECK(*r.p_value == doctest::Approx(0.0023987773293929083).epsilon(1e-6));
  CHECK(r.df == std::vector<double>{2, 15});

  auto m = one_way_anova(kMixed);
  CHECK(m.statistic == doctest::Approx(15.233333333333352).epsilon(1e-9));
  CHECK(*m.p_value == doctest::Approx(0.0012913806598372803).epsilon(1e-6));
}

TEST_CASE("ANOVA hand example and boundaries") {
  auto r = one_way_anova({{1, 2, 3}, {2, 3, 4}, {3, 4, 5}});
  CHECK(r.statistic == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.df == std::vector<double>{2, 6});

  auto same = one_way_anova({{1, 2, 3}, {1, 2, 3}, {3, 2, 1}});
  CHECK(same.statistic == doctest::Approx(0.0));
  CHECK(*same.p_value == doctest::Approx(1.0));

  auto flat = one_way_anova({{2, 2}, {2, 2}});
  CHECK(std::isnan(flat.statistic));
  CHECK_FALSE(flat.p_value.has_value());
  CHECK_FALSE(flat.note.empty());

  auto split = one_way_anova({{1, 1}, {2, 2}});
  CHECK(std::isinf(split.statistic));
  CHECK(*split.p_value == 0.0);

  CHECK_THROWS_AS(one_way_anova({{1, 2, 3}}), Error);
  CHECK_THROWS_AS(one_way_anova({{1, 2}, {3}}), Error);
}

TEST_CASE("two-sample t tests match SciPy") {
  auto pooled = two_sample_t(kA, kB, TVariant::Pooled);
  CHECK(pooled.test == "t_pooled");
  CHECK(pooled.statistic == doctest::Approx(-4.4005331542948092).epsilon(1e-9));
  CHECK(*pooled.p_value == doctest::Approx(0.0010622583745250919).epsilon(1e-6));
  CHECK(pooled.df == std::vector<double>{11});

  auto welch = two_sample_t(kA, kB);
  CHECK(welch.test == "t_welch");
  CHECK(welch.statistic == doctest::Approx(-4.5351924110054913).epsilon(1e-9));
  CHECK(*welch.p_value == doctest::Approx(0.00094012956356913922).epsilon(1e-6));
  CHECK(welch.df[0] == doctest::Approx(10.572654688613063).epsilon(1e-9));
}

TEST_CASE("t test symmetry and invariance") {
  auto ab = two_sample_t(kA, kB);
  auto ba = two_sample_t(kB, kA);
  CHECK(ab.statistic == doctest::Approx(-ba.statistic));
  CHECK(*ab.p_value == doctest::Approx(*ba.p_value));

  std::vector<double> a2, b2;
  for (double x : kA) a2.push_back(3 * x + 100);
  for (double x : kB) b2.push_back(3 * x + 100);
  auto scaled = two_sample_t(a2, b2);
  CHECK(scaled.statistic == doctest::Approx(ab.statistic).epsilon(1e-9));
  CHECK(*scaled.p_value == doctest::Approx(*ab.p_value).epsilon(1e-9));

  auto same = two_sample_t(kA, kA);
  CHECK(same.statistic == doctest::Approx(0.0));
  CHECK(*same.p_value == doctest::Approx(1.0));

  std::vector<double> c{1, 1, 1}, d{1, 1, 1};
  CHECK_FALSE(two_sample_t(c, d).p_value.has_value());
  std::vector<double> one{1};
  CHECK_THROWS_AS(two_sample_t(one, kA), Error);
}

TEST_CASE("tail probabilities fall as the statistic grows") {
  double prev = 1.0;
  for (double f = 0.0; f < 20; f += 0.5) {
    double p = f_upper_tail(f, 3, 40);
    CHECK(p <= prev);
    prev = p;
  }
  prev = 1.0;
  for (double t = 0.0; t < 10; t += 0.25) {
    double p = t_two_sided(t, 12);
    CHECK(p <= prev);
    CHECK(t_two_sided(-t, 12) == doctest::Approx(p));
    prev = p;
  }
  CHECK(f_upper_tail(0, 2, 5) == 1.0);
  CHECK(t_two_sided(0, 5) == 1.0);
}

TEST_CASE("stat result JSON keeps undefined values") {
  auto flat = one_way_anova({{2, 2}, {2, 2}});
  Json j = flat;
  CHECK(j.at("statistic").is_null());
  CHECK(j.at("p_value").is_null());
  auto r = one_way_anova(kAnovaGroups);
  auto back = Json(r).get<StatResult>();
  CHECK(back.statistic == r.statistic);
  CHECK(back.p_value == r.p_value);
}

TEST_CASE("occupation intent ANOVA separates sectors") {
  std::vector<Transcript> ts;
  std::map<std::string, Sector> sectors;
  for (int i = 0; i < 4; ++i) {
    std::string e = "edu-" + std::to_string(i), a = "arts-" + std::to_string(i);
    sectors[e] = Sector::Edu;
    sectors[a] = Sector::Arts;
    ts.push_back(talk(e, {"FindRestaurants"}));
    ts.push_back(talk(a, {"FindEvents"}));
  }
  auto results = occupation_intent_anova(ts, sectors, IntentCatalog::defaults());
  REQUIRE(results.size() == 4);
  std::map<std::string, StatResult> by;
  for (const auto& r : results) by[r.intent] = r.result;
  REQUIRE(by["FindRestaurants"].p_value.has_value());
  CHECK(*by["FindRestaurants"].p_value < 1e-6);
  CHECK(*by["FindEvents"].p_value < 1e-6);
  // Nobody mentions hotels: no variance anywhere.
  CHECK_FALSE(by["SearchHotel"].p_value.has_value());

  // Noisy version: still significant, with a finite statistic.
  ts.push_back(talk("edu-0", {"FindEvents"}));
  ts.push_back(talk("arts-1", {"FindRestaurants", "FindEvents"}));
  auto noisy = occupation_intent_anova(ts, sectors, IntentCatalog::defaults());
  for (const auto& r : noisy) {
    if (r.intent == "FindRestaurants") {
      CHECK(std::isfinite(r.result.statistic));
      CHECK(*r.result.p_value < 0.01);
    }
  }
}

TEST_CASE("intent frequencies are normalized per persona") {
  std::map<std::string, std::vector<IntentCounts>> groups{
      {"edu", {{{"FindEvents", 2}, {"FindRestaurants", 2}}, {{"FindEvents", 1}, {"FindRestaurants", 3}}}},
      {"arts", {{{"FindEvents", 4}}, {{"FindEvents", 3}, {"FindRestaurants", 1}}}},
      {"heal", {{}, {{"FindEvents", 1}, {"FindRestaurants", 1}}}}};
  auto rs = intent_frequency_anova(groups, IntentCatalog::defaults());
  for (const auto& r : rs) {
    if (r.intent != "FindEvents") continue;
    // edu {0.5, 0.25}, arts {1.0, 0.75}, heal {0, 0.5}
    auto direct = one_way_anova({{0.5, 0.25}, {1.0, 0.75}, {0.0, 0.5}});
    CHECK(r.result.statistic == doctest::Approx(direct.statistic).epsilon(1e-12));
  }
}

TEST_CASE("small closed-form cases") {
  CHECK(reg_incomplete_beta(1, 1, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(reg_incomplete_beta(1, 3, 0.2) == doctest::Approx(0.488).epsilon(1e-14));
  CHECK(reg_incomplete_beta(2, 2, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
  auto same = one_way_anova({{1, 2}, {1, 2}});
  CHECK(same.statistic == 0.0);
  CHECK(*same.p_value == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("ANOVA is invariant under shift and scale") {
  auto base = one_way_anova(kAnovaGroups);
  for (double c : {-2.0, 0.5, 10.0}) {
    auto g = kAnovaGroups;
    for (auto& grp : g)
      for (auto& x : grp) x = c * x + 7.0;
    auto r = one_way_anova(g);
    CHECK(r.statistic == doctest::Approx(base.statistic).epsilon(1e-9));
    CHECK(*r.p_value == doctest::Approx(*base.p_value).epsilon(1e-9));
  }
}

TEST_CASE("identical per-persona frequencies across sectors give p = 1") {
  // Every sector holds one persona at 50% FindEvents and one at 100%.
  std::vector<Transcript> ts;
  std::map<std::string, Sector> sectors;
  for (auto s : {Sector::Edu, Sector::Arts, Sector::Heal}) {
    std::string half = std::string(to_token(s)) + "-1", full = std::string(to_token(s)) + "-2";
    sectors[half] = s;
    sectors[full] = s;
    ts.push_back(talk(half, {"FindEvents", "FindRestaurants"}));
    ts.push_back(talk(full, {"FindEvents"}));
  }
  for (const auto& r : occupation_intent_anova(ts, sectors, IntentCatalog::defaults())) {
    CAPTURE(r.intent);
    if (r.intent == "FindEvents" || r.intent == "FindRestaurants") {
      CHECK(r.result.statistic == doctest::Approx(0.0));
      CHECK(*r.result.p_value == doctest::Approx(1.0));
    } else {
      CHECK_FALSE(r.result.p_value.has_value());
    }
  }
}
