#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "psim/domain.hpp"
#include "psim/error.hpp"
#include "psim/metrics.hpp"
#include "psim/orchestrator.hpp"
#include "psim/stats.hpp"

namespace psim {

// Rendering of an undefined metric in tables.
inline constexpr std::string_view kUndefinedCell = "—";

// ---------------------------------------------------------------------------
// JSONL
// ---------------------------------------------------------------------------

struct JsonlError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

template <class T>
struct JsonlRead {
  std::vector<T> records;
  std::vector<std::size_t> lines;  // source line of each record
  std::vector<JsonlError> errors;
};

/// Parses one JSON value per non-blank line. Throws Error(kIo) naming the
/// path when the file cannot be opened.
JsonlRead<Json> read_jsonl_values(const std::filesystem::path& path);

template <class T>
JsonlRead<T> read_jsonl(const std::filesystem::path& path) {
  auto raw = read_jsonl_values(path);
  JsonlRead<T> out;
  out.errors = std::move(raw.errors);
  for (std::size_t i = 0; i < raw.records.size(); ++i) {
    try {
      out.records.push_back(raw.records[i].template get<T>());
      out.lines.push_back(raw.lines[i]);
    } catch (const std::exception& e) {
      out.errors.push_back({raw.lines[i], e.what()});
    }
  }
  std::sort(out.errors.begin(), out.errors.end(),
            [](const JsonlError& a, const JsonlError& b) { return a.line < b.line; });
  return out;
}

/// Writes every record on its own line, then a trailing newline.
void write_jsonl(const std::filesystem::path& path, std::span<const Json> records);

template <class T>
void write_jsonl(const std::filesystem::path& path, std::span<const T> records) {
  std::vector<Json> js;
  js.reserve(records.size());
  for (const auto& r : records) js.emplace_back(r);
  write_jsonl(path, std::span<const Json>(js));
}

/// Appends lines to a file as records arrive. Thread-safe.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path);
  void write(const Json& record);
  std::size_t written() const { return written_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mu_;
  std::size_t written_ = 0;
};

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

inline constexpr std::string_view kMetricsCsvHeader =
    "condition,n,success_rate,avg_turns,guided_continuation_ratio";

/// Two decimals, or the undefined cell.
std::string format_metric(std::optional<double> v);

/// Header line plus one row per report, all lines newline-terminated.
std::string metrics_table(std::span<const MetricsReport> reports);

/// Markdown table in the style of the per-condition results table.
std::string metrics_markdown(std::span<const MetricsReport> reports, std::string_view first_column);

/// Side-by-side "without / with" strategy table. Rows follow `without`;
/// conditions missing from `with` print the undefined cell.
std::string comparison_markdown(std::span<const MetricsReport> without,
                                std::span<const MetricsReport> with, std::string_view first_column);
std::string comparison_csv(std::span<const MetricsReport> without, std::span<const MetricsReport> with);

// ---------------------------------------------------------------------------
// Charts
// ---------------------------------------------------------------------------

enum class ChartScale { Count, Share };

std::string_view to_token(ChartScale s);
std::optional<ChartScale> chart_scale_from_token(std::string_view token);

struct ChartGroup {
  std::string label;
  IntentCounts overall;
  IntentCounts success;
};

struct ChartSpec {
  std::string title;
  std::vector<std::string> intent_order;
  std::vector<ChartGroup> groups;
  std::vector<std::string> colors;  // one per intent, cycled; empty: built-in palette
  int width = 720;
  int height = 360;
  ChartScale scale = ChartScale::Count;

  /// Success count must not exceed the overall count anywhere.
  void validate() const;
};

/// Grouped bar chart. Bars are the only <rect> elements: a translucent bar
/// for the overall count with a solid bar for the success count drawn over
/// it. Axes and legend use <line>, <path> and <text>.
std::string render_distribution_chart(const ChartSpec& spec);

// ---------------------------------------------------------------------------
// Analysis
// ---------------------------------------------------------------------------

struct AnalysisOptions {
  // Defaults to the attribute recorded in the transcripts.
  std::optional<FixedAttribute> group_by;
  MetricsOptions metrics;
  ChartScale chart_scale = ChartScale::Count;
  TVariant t_variant = TVariant::Welch;
};

struct RunData {
  std::filesystem::path dir;
  Json manifest;
  std::vector<Persona> personas;
  std::vector<Transcript> transcripts;
  std::size_t aborted = 0;
  std::vector<std::string> warnings;
};

/// Reads run.json, transcripts.jsonl, personas.jsonl and aborted.jsonl.
/// Missing transcripts or manifest throw Error(kIo) naming the path; corrupt
/// transcript lines throw Error(kParse) with their line number.
RunData load_run(const std::filesystem::path& dir);

struct ConditionGroup {
  Condition condition;
  std::string label;
  std::vector<Transcript> transcripts;
};

/// Transcripts bucketed by condition in canonical order.
std::vector<ConditionGroup> group_transcripts(const RunData& run, std::optional<FixedAttribute> group_by);

struct AnalysisResult {
  FixedAttribute attribute = FixedAttribute::Gender;
  std::vector<MetricsReport> reports;
  Json stats;
  std::string metrics_csv;
  // File name under charts/ to SVG text.
  std::map<std::string, std::string> charts;
};

AnalysisResult analyze_run(const RunData& run, const AnalysisOptions& options = {});

/// Markdown summary: manifest echo, metrics table, tests, chart links.
std::string analysis_report(const RunData& run, const AnalysisResult& result);

/// Loads `dir`, analyzes it and returns the markdown summary.
std::string analysis_report(const std::filesystem::path& dir, const AnalysisOptions& options = {});

/// Writes metrics.csv, stats.json, charts/ and report.md into `out`.
void write_analysis(const std::filesystem::path& out, const RunData& run, const AnalysisResult& result);

/// Column label for an attribute in result tables ("Sec." for occupation).
std::string_view attribute_column(FixedAttribute attr);

}  // namespace psim
