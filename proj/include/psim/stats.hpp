#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psim/domain.hpp"
#include "psim/metrics.hpp"

namespace psim {

struct StatResult {
  std::string test;  // "anova", "t_pooled", "t_welch"
  double statistic = 0.0;
  std::vector<double> df;
  // Empty when the input is degenerate (no variance anywhere).
  std::optional<double> p_value;
  std::string note;
};

void to_json(Json& j, const StatResult& v);
void from_json(const Json& j, StatResult& v);

/// I_x(a, b). Throws Error(kStatsDomain) unless a, b > 0 and 0 <= x <= 1.
double reg_incomplete_beta(double a, double b, double x);

/// P(F > f) for F(d1, d2).
double f_upper_tail(double f, double d1, double d2);
/// P(|T| > |t|) for Student t with `df` degrees of freedom.
double t_two_sided(double t, double df);

/// Requires >= 2 groups of >= 2 observations each.
StatResult one_way_anova(const std::vector<std::vector<double>>& groups);

enum class TVariant { Pooled, Welch };

StatResult two_sample_t(std::span<const double> a, std::span<const double> b,
                        TVariant variant = TVariant::Welch);

struct IntentAnova {
  std::string intent;
  StatResult result;
};

/// One ANOVA per catalog intent. `groups` maps a group label (a sector) to
/// one intent-count table per persona; each observation is the persona's
/// count for the intent divided by its total, 0 for personas with none.
std::vector<IntentAnova> intent_frequency_anova(
    const std::map<std::string, std::vector<IntentCounts>>& groups, const IntentCatalog& catalog);

/// Groups transcripts by persona sector and runs intent_frequency_anova.
std::vector<IntentAnova> occupation_intent_anova(
    std::span<const Transcript> transcripts, const std::map<std::string, Sector>& persona_sector,
    const IntentCatalog& catalog, const MetricsOptions& options = {});

}  // namespace psim
