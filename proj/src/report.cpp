#include "psim/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "psim/logging.hpp"
#include "text_util.hpp"

namespace psim {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kPalette = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                                           "#8172b3", "#937860", "#da8bc3", "#8c8c8c"};

std::string csv_cell(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) { return fmt::format("{:.2f}", v); }

std::size_t count_of(const IntentCounts& c, const std::string& k) {
  auto it = c.find(k);
  return it == c.end() ? 0 : it->second;
}

std::size_t total_of(const IntentCounts& c) {
  std::size_t n = 0;
  for (const auto& [_, v] : c) n += v;
  return n;
}

double nice_step(double max, bool integral) {
  const double raw = max / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step = (norm <= 1.0 ? 1.0 : norm <= 2.0 ? 2.0 : norm <= 5.0 ? 5.0 : 10.0) * mag;
  if (integral) step = std::max(1.0, std::round(step));
  return step;
}

std::string attribute_value(const PersonaSpec& spec, FixedAttribute attr) {
  switch (attr) {
    case FixedAttribute::Gender: return std::string(to_token(spec.gender));
    case FixedAttribute::Age: return std::string(to_token(spec.age_group));
    case FixedAttribute::Occupation: return std::string(to_token(spec.sector));
  }
  return {};
}

IntentCatalog manifest_catalog(const RunData& run) {
  if (auto cfg = run.manifest.find("config"); cfg != run.manifest.end() && cfg->contains("intents")) {
    try {
      return cfg->at("intents").get<IntentCatalog>();
    } catch (const std::exception&) {
      // Fall back to the default catalog.
    }
  }
  return IntentCatalog::defaults();
}

std::vector<std::string> chart_intents(const RunData& run, const std::vector<MetricsReport>& reports) {
  std::vector<std::string> order = manifest_catalog(run).names();
  std::set<std::string> extra;
  for (const auto& r : reports) {
    for (const auto& [k, _] : r.intent_distribution) {
      if (std::find(order.begin(), order.end(), k) == order.end()) extra.insert(k);
    }
  }
  order.insert(order.end(), extra.begin(), extra.end());
  return order;
}

Json test_json(const std::string& metric, const StatResult& r, const std::vector<std::string>& groups,
               const std::vector<std::size_t>& sizes) {
  Json j = r;
  j["metric"] = metric;
  j["unit"] = "persona";
  j["groups"] = groups;
  j["n"] = sizes;
  return j;
}

Json run_attribute_test(const std::string& metric, const std::vector<std::string>& labels,
                        const std::vector<std::vector<double>>& samples, TVariant variant) {
  std::vector<std::size_t> sizes;
  for (const auto& s : samples) sizes.push_back(s.size());
  const bool anova = samples.size() >= 3;
  const std::string name = anova ? "anova" : variant == TVariant::Welch ? "t_welch" : "t_pooled";
  try {
    StatResult r = anova ? one_way_anova(samples) : two_sample_t(samples[0], samples[1], variant);
    return test_json(metric, r, labels, sizes);
  } catch (const Error& e) {
    return Json{{"metric", metric}, {"test", name}, {"groups", labels}, {"n", sizes}, {"error", e.what()}};
  }
}

std::string format_p(const Json& p) {
  if (p.is_null()) return std::string(kUndefinedCell);
  const double v = p.get<double>();
  return v < 0.0001 ? std::string("< 0.0001") : fmt::format("{:.4f}", v);
}

std::string format_df(const Json& df) {
  std::vector<std::string> parts;
  for (const auto& d : df) {
    const double v = d.get<double>();
    parts.push_back(v == std::floor(v) ? fmt::format("{:.0f}", v) : fmt::format("{:.2f}", v));
  }
  return detail::join(parts, ", ");
}

std::string format_statistic(const Json& s) {
  return s.is_null() ? std::string(kUndefinedCell) : fmt::format("{:.3f}", s.get<double>());
}

const MetricsReport* find_report(std::span<const MetricsReport> reports, const std::string& condition) {
  for (const auto& r : reports) {
    if (r.condition == condition) return &r;
  }
  return nullptr;
}

std::string paired(std::optional<double> a, std::optional<double> b) {
  return format_metric(a) + " / " + format_metric(b);
}

}  // namespace

// ---------------------------------------------------------------------------
// JSONL
// ---------------------------------------------------------------------------

JsonlRead<Json> read_jsonl_values(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  JsonlRead<Json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    try {
      out.records.push_back(Json::parse(line));
      out.lines.push_back(n);
    } catch (const Json::parse_error& e) {
      out.errors.push_back({n, e.what()});
    }
  }
  return out;
}

void write_jsonl(const fs::path& path, std::span<const Json> records) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

JsonlWriter::JsonlWriter(const fs::path& path) : path_(path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

void JsonlWriter::write(const Json& record) {
  std::lock_guard lock(mu_);
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorCode::kIo, "write failed for " + path_.string());
  ++written_;
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

std::string format_metric(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return std::string(kUndefinedCell);
  return num(*v);
}

std::string metrics_table(std::span<const MetricsReport> reports) {
  std::string out(kMetricsCsvHeader);
  out += '\n';
  for (const auto& r : reports) {
    std::optional<double> rate;
    if (r.n_conversations > 0) rate = r.success_rate;
    out += fmt::format("{},{},{},{},{}\n", csv_cell(r.label), r.n_conversations, format_metric(rate),
                       format_metric(r.avg_turns_successful), format_metric(r.guided_continuation_ratio));
  }
  return out;
}

std::string metrics_markdown(std::span<const MetricsReport> reports, std::string_view first_column) {
  std::string out = fmt::format("| {} | N | Success Rate | Avg. # Turns | Guided Conti. Ratio |\n", first_column);
  out += "|---|---:|---:|---:|---:|\n";
  for (const auto& r : reports) {
    std::optional<double> rate;
    if (r.n_conversations > 0) rate = r.success_rate;
    out += fmt::format("| {} | {} | {} | {} | {} |\n", r.label, r.n_conversations, format_metric(rate),
                       format_metric(r.avg_turns_successful), format_metric(r.guided_continuation_ratio));
  }
  return out;
}

std::string comparison_markdown(std::span<const MetricsReport> without, std::span<const MetricsReport> with,
                                std::string_view first_column) {
  std::string out = fmt::format("| {} | Success Rate | Avg. # Turns | Guided Conti. Ratio |\n", first_column);
  out += "|---|:---:|:---:|:---:|\n";
  for (const auto& a : without) {
    const MetricsReport* b = find_report(with, a.condition);
    std::optional<double> rate_b, turns_b, ratio_b;
    if (b) {
      if (b->n_conversations > 0) rate_b = b->success_rate;
      turns_b = b->avg_turns_successful;
      ratio_b = b->guided_continuation_ratio;
    }
    std::optional<double> rate_a;
    if (a.n_conversations > 0) rate_a = a.success_rate;
    out += fmt::format("| {} | {} | {} | {} |\n", a.label, paired(rate_a, rate_b),
                       paired(a.avg_turns_successful, turns_b),
                       paired(a.guided_continuation_ratio, ratio_b));
  }
  return out;
}

std::string comparison_csv(std::span<const MetricsReport> without, std::span<const MetricsReport> with) {
  std::string out =
      "condition,success_rate_without,success_rate_with,avg_turns_without,avg_turns_with,"
      "guided_continuation_ratio_without,guided_continuation_ratio_with\n";
  for (const auto& a : without) {
    const MetricsReport* b = find_report(with, a.condition);
    auto rate = [](const MetricsReport* r) -> std::optional<double> {
      if (!r || r->n_conversations == 0) return std::nullopt;
      return r->success_rate;
    };
    out += fmt::format("{},{},{},{},{},{},{}\n", csv_cell(a.label), format_metric(rate(&a)),
                       format_metric(rate(b)), format_metric(a.avg_turns_successful),
                       format_metric(b ? b->avg_turns_successful : std::nullopt),
                       format_metric(a.guided_continuation_ratio),
                       format_metric(b ? b->guided_continuation_ratio : std::nullopt));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Charts
// ---------------------------------------------------------------------------

std::string_view to_token(ChartScale s) { return s == ChartScale::Count ? "count" : "share"; }

std::optional<ChartScale> chart_scale_from_token(std::string_view token) {
  if (detail::iequals(token, "count")) return ChartScale::Count;
  if (detail::iequals(token, "share")) return ChartScale::Share;
  return std::nullopt;
}

void ChartSpec::validate() const {
  if (width < 160 || height < 120) throw Error(ErrorCode::kInvalidArgument, "chart is too small");
  for (const auto& g : groups) {
    for (const auto& [intent, n] : g.success) {
      if (n > count_of(g.overall, intent)) {
        throw Error(ErrorCode::kInvalidArgument, "group '" + g.label + "': success count for " + intent +
                                                     " exceeds its overall count");
      }
    }
  }
}

std::string render_distribution_chart(const ChartSpec& spec) {
  spec.validate();
  const auto& colors = spec.colors.empty() ? kPalette : spec.colors;
  const double w = spec.width;
  const double h = spec.height;
  const double x0 = 56.0;
  const double x1 = w - 16.0;
  const double y0 = 36.0;  // top of the plot area
  const double y1 = h - 64.0;  // baseline
  const bool share = spec.scale == ChartScale::Share;

  auto value = [&](const ChartGroup& g, const IntentCounts& c, const std::string& intent) {
    const double v = static_cast<double>(count_of(c, intent));
    if (!share) return v;
    const double total = static_cast<double>(total_of(g.overall));
    return total == 0.0 ? 0.0 : v / total;
  };

  double max = 0.0;
  for (const auto& g : spec.groups) {
    for (const auto& intent : spec.intent_order) max = std::max(max, value(g, g.overall, intent));
  }
  if (max <= 0.0) max = share ? 1.0 : 1.0;
  const double step = nice_step(max, !share);
  const double axis_max = std::ceil(max / step - 1e-9) * step;
  const double scale = (y1 - y0) / axis_max;

  std::string out;
  out += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      spec.width, spec.height, spec.width, spec.height);
  out += fmt::format("<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                     num(w / 2.0), xml_escape(spec.title));

  // Axes and ticks.
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#333\"/>\n", num(x0),
                     num(y0), num(y1));
  out += fmt::format("<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"#333\"/>\n", num(x0),
                     num(x1), num(y1));
  const int ticks = static_cast<int>(std::lround(axis_max / step));
  for (int i = 0; i <= ticks; ++i) {
    const double v = step * i;
    const double y = y1 - v * scale;
    out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>\n", num(x0 - 4.0),
                       num(y), num(x0), num(y));
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", num(x0 - 6.0),
                       num(y + 4.0), share ? fmt::format("{:.2f}", v) : fmt::format("{:.0f}", v));
  }
  out += fmt::format(
      "<text x=\"14\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {0})\">{1}</text>\n",
      num((y0 + y1) / 2.0), share ? "share" : "count");

  // Bars.
  const std::size_t ng = std::max<std::size_t>(spec.groups.size(), 1);
  const std::size_t ni = std::max<std::size_t>(spec.intent_order.size(), 1);
  const double slot = (x1 - x0) / static_cast<double>(ng);
  const double bar_w = slot * 0.8 / static_cast<double>(ni);
  for (std::size_t gi = 0; gi < spec.groups.size(); ++gi) {
    const auto& g = spec.groups[gi];
    const double gx = x0 + slot * static_cast<double>(gi) + slot * 0.1;
    for (std::size_t ii = 0; ii < spec.intent_order.size(); ++ii) {
      const auto& intent = spec.intent_order[ii];
      const auto& color = colors[ii % colors.size()];
      const double x = gx + bar_w * static_cast<double>(ii);
      for (bool solid : {false, true}) {
        const auto& counts = solid ? g.success : g.overall;
        const double bh = value(g, counts, intent) * scale;
        out += fmt::format(
            "<rect class=\"{}\" data-intent=\"{}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" "
            "fill=\"{}\" fill-opacity=\"{}\"/>\n",
            solid ? "success" : "overall", xml_escape(intent), num(x), num(y1 - bh), num(bar_w), num(bh),
            color, solid ? "1" : "0.35");
      }
    }
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                       num(x0 + slot * (static_cast<double>(gi) + 0.5)), num(y1 + 16.0), xml_escape(g.label));
  }

  // Legend.
  const double lx = (w - 32.0 - x0) / static_cast<double>(ni);
  for (std::size_t ii = 0; ii < spec.intent_order.size(); ++ii) {
    const double x = x0 + lx * static_cast<double>(ii);
    const double y = h - 26.0;
    out += fmt::format("<path d=\"M{} {}h10v10h-10z\" fill=\"{}\"/>\n", num(x), num(y),
                       colors[ii % colors.size()]);
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", num(x + 14.0), num(y + 9.0),
                       xml_escape(spec.intent_order[ii]));
  }
  out += "</svg>\n";
  return out;
}

// ---------------------------------------------------------------------------
// Analysis
// ---------------------------------------------------------------------------

std::string_view attribute_column(FixedAttribute attr) {
  switch (attr) {
    case FixedAttribute::Gender: return "Gender";
    case FixedAttribute::Age: return "Age";
    case FixedAttribute::Occupation: return "Sec.";
  }
  return "Condition";
}

RunData load_run(const fs::path& dir) {
  RunData run;
  run.dir = dir;
  const fs::path manifest = dir / "run.json";
  {
    std::ifstream in(manifest, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "missing run manifest " + manifest.string());
    try {
      run.manifest = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::kParse, manifest.string() + ": " + e.what());
    }
  }
  const fs::path transcripts = dir / "transcripts.jsonl";
  if (!fs::exists(transcripts)) throw Error(ErrorCode::kIo, "missing transcripts file " + transcripts.string());
  auto tr = read_jsonl<Transcript>(transcripts);
  if (!tr.errors.empty()) {
    const auto& e = tr.errors.front();
    throw Error(ErrorCode::kParse, fmt::format("{}:{}: {}", transcripts.string(), e.line, e.message));
  }
  run.transcripts = std::move(tr.records);

  fs::path personas = dir / "personas.jsonl";
  if (auto cfg = run.manifest.find("config"); cfg != run.manifest.end()) {
    if (auto p = cfg->find("personas_path"); p != cfg->end() && p->is_string() && !p->get<std::string>().empty()) {
      fs::path configured = p->get<std::string>();
      if (fs::exists(configured)) personas = configured;
    }
  }
  if (fs::exists(personas)) {
    auto pr = read_jsonl<Persona>(personas);
    for (const auto& e : pr.errors) {
      run.warnings.push_back(fmt::format("{}:{}: {}", personas.string(), e.line, e.message));
    }
    run.personas = std::move(pr.records);
  }
  const fs::path aborted = dir / "aborted.jsonl";
  if (fs::exists(aborted)) run.aborted = read_jsonl_values(aborted).records.size();
  for (const auto& w : run.warnings) logger()->warn("{}", w);
  return run;
}

std::vector<ConditionGroup> group_transcripts(const RunData& run, std::optional<FixedAttribute> group_by) {
  std::map<std::string, const PersonaSpec*> specs;
  for (const auto& p : run.personas) specs[p.id] = &p.spec;

  std::map<Condition, std::vector<Transcript>> buckets;
  for (const auto& t : run.transcripts) {
    if (is_aborted(t)) continue;
    Condition c = t.condition;
    if (group_by && *group_by != t.condition.attribute) {
      auto it = specs.find(t.persona_id);
      if (it == specs.end()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "cannot regroup: persona '" + t.persona_id + "' is not in personas.jsonl");
      }
      c = Condition{*group_by, attribute_value(*it->second, *group_by)};
    }
    buckets[c].push_back(t);
  }

  std::vector<ConditionGroup> out;
  for (auto& [c, ts] : buckets) {
    out.push_back({c, condition_display_label(c.attribute, c.value), std::move(ts)});
  }
  std::stable_sort(out.begin(), out.end(), [](const ConditionGroup& a, const ConditionGroup& b) {
    if (a.condition.attribute != b.condition.attribute) return a.condition.attribute < b.condition.attribute;
    auto ra = condition_rank(a.condition.attribute, a.condition.value).value_or(SIZE_MAX);
    auto rb = condition_rank(b.condition.attribute, b.condition.value).value_or(SIZE_MAX);
    if (ra != rb) return ra < rb;
    return a.condition.value < b.condition.value;
  });
  return out;
}

AnalysisResult analyze_run(const RunData& run, const AnalysisOptions& options) {
  auto groups = group_transcripts(run, options.group_by);
  if (groups.empty()) throw Error(ErrorCode::kInvalidArgument, "no transcripts to analyze in " + run.dir.string());

  AnalysisResult result;
  result.attribute = options.group_by.value_or(groups.front().condition.attribute);

  std::vector<std::string> labels;
  std::vector<std::vector<double>> rate_samples;
  std::vector<std::vector<double>> turn_samples;
  std::map<std::string, std::vector<IntentCounts>> intent_groups;
  for (const auto& g : groups) {
    MetricsAccumulator acc(options.metrics);
    std::map<std::string, MetricsAccumulator> per_persona;
    std::map<std::string, IntentCounts> persona_intents;
    for (const auto& t : g.transcripts) {
      acc.add(t);
      per_persona.try_emplace(t.persona_id, options.metrics).first->second.add(t);
      auto& counts = persona_intents[t.persona_id];
      for (const auto& name : intent_runs(t, options.metrics)) ++counts[name];
    }
    result.reports.push_back(acc.report(g.condition.key(), g.label));
    labels.push_back(g.label);
    auto& rates = rate_samples.emplace_back();
    auto& turns = turn_samples.emplace_back();
    for (const auto& [_, a] : per_persona) {
      if (auto r = a.success_rate()) rates.push_back(*r);
      if (auto t = a.avg_turns_successful()) turns.push_back(*t);
    }
    auto& ig = intent_groups[g.label];
    for (auto& [_, c] : persona_intents) ig.push_back(std::move(c));
  }

  Json tests = Json::array();
  if (groups.size() >= 2) {
    tests.push_back(run_attribute_test("success_rate", labels, rate_samples, options.t_variant));
    tests.push_back(run_attribute_test("avg_turns_successful", labels, turn_samples, options.t_variant));
  }
  Json intent_anova = nullptr;
  const IntentCatalog catalog = manifest_catalog(run);
  if (result.attribute == FixedAttribute::Occupation && groups.size() >= 2) {
    try {
      Json rows = Json::array();
      for (const auto& ia : intent_frequency_anova(intent_groups, catalog)) {
        Json row = ia.result;
        row["intent"] = ia.intent;
        rows.push_back(std::move(row));
      }
      intent_anova = Json{{"observation", "per-persona normalized intent frequency"},
                          {"bonferroni_factor", catalog.names().size()},
                          {"results", std::move(rows)}};
    } catch (const Error& e) {
      intent_anova = Json{{"error", e.what()}};
    }
  }
  result.stats = Json{{"attribute", to_token(result.attribute)},
                      {"unit", "persona"},
                      {"tests", std::move(tests)},
                      {"intent_anova", std::move(intent_anova)}};
  result.metrics_csv = metrics_table(result.reports);

  const auto order = chart_intents(run, result.reports);
  ChartSpec all;
  all.title = fmt::format("Intent distribution by {}", to_token(result.attribute));
  all.intent_order = order;
  all.scale = options.chart_scale;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& r = result.reports[i];
    ChartGroup cg{r.label, r.intent_distribution, r.success_intent_distribution};
    ChartSpec one;
    one.title = fmt::format("Intent distribution: {}", r.label);
    one.intent_order = order;
    one.scale = options.chart_scale;
    one.groups = {cg};
    result.charts[groups[i].condition.value + ".svg"] = render_distribution_chart(one);
    all.groups.push_back(std::move(cg));
  }
  all.width = std::max(720, 120 * static_cast<int>(groups.size()));
  result.charts["all.svg"] = render_distribution_chart(all);
  return result;
}

std::string analysis_report(const RunData& run, const AnalysisResult& result) {
  std::ostringstream md;
  md << "# Simulation analysis\n\n";
  md << "Run directory: `" << run.dir.string() << "`\n\n";
  md << "- transcripts analyzed: " << run.transcripts.size() << "\n";
  md << "- aborted conversations: " << run.aborted << "\n";
  md << "- personas: " << run.personas.size() << "\n";
  md << "- grouped by: " << to_token(result.attribute) << "\n\n";

  md << "## Metrics\n\n" << metrics_markdown(result.reports, attribute_column(result.attribute)) << "\n";

  md << "## Significance tests\n\n";
  md << "One observation per persona. Three or more groups use one-way ANOVA, two groups a t-test.\n\n";
  const auto& tests = result.stats.at("tests");
  if (tests.empty()) {
    md << "No test: fewer than two groups.\n\n";
  } else {
    md << "| Metric | Test | Statistic | df | p |\n|---|---|---:|---:|---:|\n";
    for (const auto& t : tests) {
      if (t.contains("error")) {
        md << "| " << t.at("metric").get<std::string>() << " | " << t.at("test").get<std::string>() << " | "
           << kUndefinedCell << " | " << kUndefinedCell << " | " << t.at("error").get<std::string>() << " |\n";
        continue;
      }
      md << "| " << t.at("metric").get<std::string>() << " | " << t.at("test").get<std::string>() << " | "
         << format_statistic(t.at("statistic")) << " | " << format_df(t.at("df")) << " | "
         << format_p(t.at("p_value")) << " |\n";
    }
    md << "\n";
  }

  const auto& ia = result.stats.at("intent_anova");
  if (!ia.is_null()) {
    md << "## Intent frequency by sector\n\n";
    if (ia.contains("error")) {
      md << "Not computed: " << ia.at("error").get<std::string>() << "\n\n";
    } else {
      md << "One ANOVA per intent over per-persona normalized frequencies. Bonferroni factor: "
         << ia.at("bonferroni_factor").get<std::size_t>() << ".\n\n";
      md << "| Intent | F | df | p |\n|---|---:|---:|---:|\n";
      for (const auto& row : ia.at("results")) {
        md << "| " << row.at("intent").get<std::string>() << " | " << format_statistic(row.at("statistic"))
           << " | " << format_df(row.at("df")) << " | " << format_p(row.at("p_value")) << " |\n";
      }
      md << "\n";
    }
  }

  md << "## Charts\n\n";
  for (const auto& [name, _] : result.charts) md << "- [" << name << "](charts/" << name << ")\n";
  md << "\n## Run manifest\n\n```json\n" << run.manifest.dump(2) << "\n```\n";
  return md.str();
}

std::string analysis_report(const fs::path& dir, const AnalysisOptions& options) {
  auto run = load_run(dir);
  return analysis_report(run, analyze_run(run, options));
}

void write_analysis(const fs::path& out, const RunData& run, const AnalysisResult& result) {
  fs::create_directories(out / "charts");
  auto write = [](const fs::path& p, std::string_view text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + p.string());
    f << text;
    if (!f) throw Error(ErrorCode::kIo, "write failed for " + p.string());
  };
  write(out / "metrics.csv", result.metrics_csv);
  Json stats = result.stats;
  Json reports = Json::array();
  for (const auto& r : result.reports) reports.push_back(r);
  stats["metrics"] = std::move(reports);
  write(out / "stats.json", stats.dump(2) + "\n");
  for (const auto& [name, svg] : result.charts) write(out / "charts" / name, svg);
  write(out / "report.md", analysis_report(run, result));
}

}  // namespace psim
