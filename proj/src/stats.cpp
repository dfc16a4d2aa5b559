#include "psim/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "psim/error.hpp"

namespace psim {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIterations = 10000;

// Continued fraction for I_x(a,b), modified Lentz.
double beta_cf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw Error(ErrorCode::kInternal, "incomplete beta continued fraction did not converge");
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double m) {
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

}  // namespace

void to_json(Json& j, const StatResult& v) {
  j = Json{{"test", v.test},
           {"statistic", std::isfinite(v.statistic) ? Json(v.statistic) : Json(nullptr)},
           {"df", v.df},
           {"p_value", v.p_value ? Json(*v.p_value) : Json(nullptr)}};
  if (!v.note.empty()) j["note"] = v.note;
}

void from_json(const Json& j, StatResult& v) {
  v.test = j.at("test").get<std::string>();
  const auto& s = j.at("statistic");
  v.statistic = s.is_null() ? std::numeric_limits<double>::quiet_NaN() : s.get<double>();
  v.df = j.at("df").get<std::vector<double>>();
  const auto& p = j.at("p_value");
  v.p_value = p.is_null() ? std::nullopt : std::optional<double>(p.get<double>());
  v.note = j.value("note", std::string{});
}

double reg_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::kStatsDomain, "reg_incomplete_beta needs a, b > 0 and x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return clamp01(front * beta_cf(a, b, x) / a);
  return clamp01(1.0 - front * beta_cf(b, a, 1.0 - x) / b);
}

double f_upper_tail(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw Error(ErrorCode::kStatsDomain, "F degrees of freedom must be positive");
  if (std::isnan(f)) throw Error(ErrorCode::kStatsDomain, "F statistic is NaN");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return reg_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

double t_two_sided(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorCode::kStatsDomain, "t degrees of freedom must be positive");
  if (std::isnan(t)) throw Error(ErrorCode::kStatsDomain, "t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  return reg_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

StatResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw Error(ErrorCode::kStatsDomain, "ANOVA needs at least two groups");
  std::size_t n = 0;
  double total = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw Error(ErrorCode::kStatsDomain, "every ANOVA group needs two observations");
    n += g.size();
    total += std::accumulate(g.begin(), g.end(), 0.0);
  }
  const double grand = total / static_cast<double>(n);
  double ssb = 0.0;
  double ssw = 0.0;
  for (const auto& g : groups) {
    const double m = mean(g);
    ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double x : g) ssw += (x - m) * (x - m);
  }
  const double df1 = static_cast<double>(groups.size() - 1);
  const double df2 = static_cast<double>(n - groups.size());

  StatResult r{.test = "anova", .statistic = 0.0, .df = {df1, df2}, .p_value = std::nullopt, .note = {}};
  if (ssw == 0.0) {
    if (ssb == 0.0) {
      r.statistic = std::numeric_limits<double>::quiet_NaN();
      r.note = "degenerate: no variance within or between groups";
      return r;
    }
    r.statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    r.note = "no within-group variance";
    return r;
  }
  r.statistic = (ssb / df1) / (ssw / df2);
  r.p_value = f_upper_tail(r.statistic, df1, df2);
  return r;
}

StatResult two_sample_t(std::span<const double> a, std::span<const double> b, TVariant variant) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorCode::kStatsDomain, "t-test samples need two observations each");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a);
  const double mb = mean(b);
  const double va = sample_variance(a, ma);
  const double vb = sample_variance(b, mb);

  StatResult r;
  double se2 = 0.0;
  double df = 0.0;
  if (variant == TVariant::Pooled) {
    r.test = "t_pooled";
    df = na + nb - 2.0;
    const double sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
    se2 = sp2 * (1.0 / na + 1.0 / nb);
  } else {
    r.test = "t_welch";
    const double qa = va / na;
    const double qb = vb / nb;
    se2 = qa + qb;
    df = se2 > 0.0 ? se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0)) : na + nb - 2.0;
  }
  r.df = {df};
  if (se2 == 0.0) {
    r.statistic = ma == mb ? std::numeric_limits<double>::quiet_NaN()
                           : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
    r.note = "degenerate: zero combined variance";
    return r;
  }
  r.statistic = (ma - mb) / std::sqrt(se2);
  r.p_value = t_two_sided(r.statistic, df);
  return r;
}

std::vector<IntentAnova> intent_frequency_anova(
    const std::map<std::string, std::vector<IntentCounts>>& groups, const IntentCatalog& catalog) {
  if (groups.size() < 2) throw Error(ErrorCode::kStatsDomain, "intent ANOVA needs at least two groups");
  for (const auto& [label, personas] : groups) {
    if (personas.size() < 2) {
      throw Error(ErrorCode::kStatsDomain, "group '" + label + "' needs at least two personas");
    }
  }
  std::vector<IntentAnova> out;
  for (const auto& intent : catalog.names()) {
    std::vector<std::vector<double>> samples;
    for (const auto& [label, personas] : groups) {
      auto& sample = samples.emplace_back();
      for (const auto& counts : personas) {
        std::size_t total = 0;
        for (const auto& [_, c] : counts) total += c;
        auto it = counts.find(intent);
        const double hits = it == counts.end() ? 0.0 : static_cast<double>(it->second);
        sample.push_back(total == 0 ? 0.0 : hits / static_cast<double>(total));
      }
    }
    out.push_back({intent, one_way_anova(samples)});
  }
  return out;
}

std::vector<IntentAnova> occupation_intent_anova(std::span<const Transcript> transcripts,
                                                 const std::map<std::string, Sector>& persona_sector,
                                                 const IntentCatalog& catalog,
                                                 const MetricsOptions& options) {
  std::map<std::string, IntentCounts> per_persona;
  for (const auto& [id, _] : persona_sector) per_persona[id];
  for (const auto& t : transcripts) {
    if (is_aborted(t)) continue;
    auto it = per_persona.find(t.persona_id);
    if (it == per_persona.end()) {
      throw Error(ErrorCode::kInvalidArgument, "transcript persona '" + t.persona_id + "' has no sector");
    }
    for (const auto& name : intent_runs(t, options)) ++it->second[name];
  }
  std::map<std::string, std::vector<IntentCounts>> groups;
  for (const auto& [id, counts] : per_persona) {
    groups[std::string(to_token(persona_sector.at(id)))].push_back(counts);
  }
  return intent_frequency_anova(groups, catalog);
}

}  // namespace psim
