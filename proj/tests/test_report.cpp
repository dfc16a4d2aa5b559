#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "psim/error.hpp"
#include "psim/report.hpp"

using namespace psim;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "psim_test_report" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<Transcript> fixture() {
  return read_jsonl<Transcript>(fs::path(PSIM_TEST_DATA) / "metrics_fixture.jsonl").records;
}

struct Bar {
  std::string cls;
  std::string intent;
  double y;
  double height;
};

std::vector<Bar> bars(const std::string& svg) {
  static const std::regex rect(R"re(<rect class="(\w+)" data-intent="([^"]*)" x="[^"]*" y="([^"]*)" width="[^"]*" height="([^"]*)")re");
  std::vector<Bar> out;
  for (std::sregex_iterator it(svg.begin(), svg.end(), rect), end; it != end; ++it) {
    out.push_back({(*it)[1], (*it)[2], std::stod((*it)[3]), std::stod((*it)[4])});
  }
  return out;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

MetricsReport report(std::string label, std::size_t n, double rate, std::optional<double> turns,
                     std::optional<double> ratio) {
  MetricsReport r;
  r.condition = "age=" + label;
  r.label = std::move(label);
  r.n_conversations = n;
  r.success_rate = rate;
  r.avg_turns_successful = turns;
  r.guided_continuation_ratio = ratio;
  return r;
}

}  // namespace

TEST_CASE("JSONL round-trip keeps unknown fields") {
  auto dir = fresh_dir("roundtrip");
  auto ts = fixture();
  ts.resize(3);
  ts[1].extra["reviewer"] = "kim";
  write_jsonl(dir / "t.jsonl", std::span<const Transcript>(ts));
  auto back = read_jsonl<Transcript>(dir / "t.jsonl");
  CHECK(back.errors.empty());
  CHECK(back.records == ts);
  CHECK(back.lines == std::vector<std::size_t>{1, 2, 3});
  std::ifstream f(dir / "t.jsonl");
  std::string text((std::istreambuf_iterator<char>(f)), {});
  CHECK(text.back() == '\n');
}

TEST_CASE("one corrupt line of ten") {
  auto dir = fresh_dir("corrupt");
  auto ts = fixture();
  {
    std::ofstream f(dir / "t.jsonl");
    for (int i = 0; i < 10; ++i) f << (i == 6 ? std::string("{\"id\": \"oops\"") : Json(ts[i]).dump()) << "\n";
  }
  auto r = read_jsonl<Transcript>(dir / "t.jsonl");
  CHECK(r.records.size() == 9);
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].line == 7);

  // Well-formed JSON that is not a transcript is also located.
  {
    std::ofstream f(dir / "t2.jsonl");
    f << Json(ts[0]).dump() << "\n" << R"({"id": 5})" << "\n";
  }
  auto r2 = read_jsonl<Transcript>(dir / "t2.jsonl");
  CHECK(r2.records.size() == 1);
  REQUIRE(r2.errors.size() == 1);
  CHECK(r2.errors[0].line == 2);
}

TEST_CASE("empty and missing files") {
  auto dir = fresh_dir("empty");
  { std::ofstream f(dir / "e.jsonl"); }
  auto r = read_jsonl<Transcript>(dir / "e.jsonl");
  CHECK(r.records.empty());
  CHECK(r.errors.empty());
  try {
    read_jsonl_values(dir / "nope.jsonl");
    FAIL("expected an I/O error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
    CHECK(std::string(e.what()).find("nope.jsonl") != std::string::npos);
  }
}

TEST_CASE("metrics table formatting") {
  std::vector<MetricsReport> rs{report("Adult", 300, 0.6125, 11.614, std::nullopt)};
  auto csv = metrics_table(rs);
  CHECK(csv == "condition,n,success_rate,avg_turns,guided_continuation_ratio\nAdult,300,0.61,11.61,—\n");
  CHECK(metrics_table({}) == "condition,n,success_rate,avg_turns,guided_continuation_ratio\n");
  CHECK(format_metric(0.005) == "0.01");
  CHECK(format_metric(0.126) == "0.13");
  CHECK(format_metric(std::nullopt) == "—");
  CHECK(metrics_table(rs) == csv);
}

TEST_CASE("comparison table in without / with style") {
  std::vector<MetricsReport> without{report("Edu", 300, 0.21, 9.5, 0.4), report("Arts", 300, 0.3, std::nullopt, 0.5)};
  std::vector<MetricsReport> with{report("Edu", 300, 0.74, 7.25, 0.6)};
  auto md = comparison_markdown(without, with, "Sec.");
  CHECK(md.find("| Sec. | Success Rate | Avg. # Turns | Guided Conti. Ratio |") == 0);
  CHECK(md.find("| Edu | 0.21 / 0.74 | 9.50 / 7.25 | 0.40 / 0.60 |") != std::string::npos);
  CHECK(md.find("| Arts | 0.30 / — | — / — | 0.50 / — |") != std::string::npos);
  auto csv = comparison_csv(without, with);
  CHECK(csv.find("Edu,0.21,0.74,9.50,7.25,0.40,0.60") != std::string::npos);
}

TEST_CASE("single-bar chart geometry") {
  ChartSpec spec;
  spec.title = "Intents";
  spec.intent_order = {"A"};
  spec.groups = {ChartGroup{"G", {{"A", 4}}, {{"A", 2}}}};
  auto svg = render_distribution_chart(spec);
  auto bs = bars(svg);
  REQUIRE(bs.size() == 2);
  CHECK(count(svg, "<rect") == 2);
  CHECK(bs[0].cls == "overall");
  CHECK(bs[1].cls == "success");
  CHECK(bs[1].height == doctest::Approx(bs[0].height / 2).epsilon(0.01));
  // Both bars stand on the same baseline.
  CHECK(bs[0].y + bs[0].height == doctest::Approx(bs[1].y + bs[1].height));
  CHECK(svg.find("fill-opacity=\"0.35\"") != std::string::npos);
  CHECK(render_distribution_chart(spec) == svg);
}

TEST_CASE("bar heights are proportional to counts") {
  ChartSpec spec;
  spec.intent_order = {"FindRestaurants", "FindEvents", "SearchHotel"};
  spec.groups = {ChartGroup{"Edu", {{"FindRestaurants", 9}, {"FindEvents", 3}}, {{"FindRestaurants", 6}}},
                 ChartGroup{"Arts", {{"FindEvents", 12}, {"SearchHotel", 1}}, {{"FindEvents", 4}, {"SearchHotel", 1}}}};
  auto bs = bars(render_distribution_chart(spec));
  REQUIRE(bs.size() == 12);
  double unit = 0;
  for (const auto& b : bs) {
    if (b.cls == "overall" && b.intent == "FindEvents" && b.height > 100) unit = b.height / 12;
  }
  REQUIRE(unit > 0);
  auto expect = [&](const Bar& b, double n) { CHECK(b.height == doctest::Approx(n * unit).epsilon(0.02)); };
  expect(bs[0], 9);
  expect(bs[1], 6);
  expect(bs[2], 3);
  expect(bs[3], 0);
  expect(bs[4], 0);
  expect(bs[5], 0);
}

TEST_CASE("zero counts still draw axes") {
  ChartSpec spec;
  spec.intent_order = {"A", "B"};
  spec.groups = {ChartGroup{"G", {}, {}}};
  auto svg = render_distribution_chart(spec);
  for (const auto& b : bars(svg)) CHECK(b.height == 0.0);
  CHECK(count(svg, "<line") >= 2);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("chart invariant and share scale") {
  ChartSpec bad;
  bad.intent_order = {"A"};
  bad.groups = {ChartGroup{"G", {{"A", 1}}, {{"A", 2}}}};
  try {
    render_distribution_chart(bad);
    FAIL("expected invariant violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }

  ChartSpec share;
  share.scale = ChartScale::Share;
  share.intent_order = {"A", "B"};
  share.groups = {ChartGroup{"small", {{"A", 1}, {"B", 1}}, {}}, ChartGroup{"big", {{"A", 10}, {"B", 10}}, {}}};
  auto bs = bars(render_distribution_chart(share));
  REQUIRE(bs.size() == 8);
  CHECK(bs[0].height == doctest::Approx(bs[4].height));
}

namespace {

fs::path write_run(const std::string& name, const std::vector<Transcript>& ts) {
  auto dir = fresh_dir(name);
  Json manifest{{"command", "simulate"}, {"config", Json::object()}, {"counts", Json::object()}};
  std::ofstream(dir / "run.json") << manifest.dump(2);
  write_jsonl(dir / "transcripts.jsonl", std::span<const Transcript>(ts));
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("run loading errors name the path") {
  auto dir = fresh_dir("noscripts");
  std::ofstream(dir / "run.json") << "{}";
  try {
    load_run(dir);
    FAIL("expected an I/O error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
    CHECK(std::string(e.what()).find((dir / "transcripts.jsonl").string()) != std::string::npos);
  }
  auto bare = fresh_dir("nomanifest");
  CHECK_THROWS_AS(load_run(bare), Error);

  auto corrupt = write_run("corruptrun", fixture());
  std::ofstream(corrupt / "transcripts.jsonl", std::ios::app) << "{nope\n";
  try {
    load_run(corrupt);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("transcripts.jsonl:13") != std::string::npos);
  }
}

TEST_CASE("analysis of a run directory") {
  auto ts = fixture();
  // Split the fixture over two occupation conditions.
  for (std::size_t i = 6; i < ts.size(); ++i) {
    ts[i].condition.value = "arts";
    ts[i].persona_id = "occupation-arts-0" + std::to_string(i % 4 + 1);
  }
  auto dir = write_run("analysis", ts);
  auto run = load_run(dir);
  auto result = analyze_run(run);
  REQUIRE(result.reports.size() == 2);
  CHECK(result.attribute == FixedAttribute::Occupation);
  CHECK(result.reports[0].label == "Edu");
  CHECK(result.reports[1].label == "Arts");
  CHECK(result.stats.at("unit") == "persona");
  CHECK(result.charts.count("all.svg") == 1);
  CHECK(result.charts.count("edu.svg") == 1);

  auto md = analysis_report(run, result);
  CHECK(md.find("| Edu |") != std::string::npos);
  CHECK(md.find("| Arts |") != std::string::npos);
  CHECK(md.find("charts/all.svg") != std::string::npos);
  CHECK(md.find("\"command\": \"simulate\"") != std::string::npos);

  write_analysis(dir, run, result);
  const auto first = slurp(dir / "metrics.csv") + slurp(dir / "stats.json") + slurp(dir / "report.md") +
                     slurp(dir / "charts" / "all.svg");
  write_analysis(dir, run, analyze_run(load_run(dir)));
  const auto second = slurp(dir / "metrics.csv") + slurp(dir / "stats.json") + slurp(dir / "report.md") +
                      slurp(dir / "charts" / "all.svg");
  CHECK(first == second);
  CHECK(slurp(dir / "metrics.csv").rfind("condition,n,success_rate", 0) == 0);
}

TEST_CASE("writer appends records and counts them") {
  auto dir = fresh_dir("writer");
  {
    JsonlWriter w(dir / "w.jsonl");
    w.write(Json{{"a", 1}});
    w.write(Json{{"a", 2}});
    CHECK(w.written() == 2);
  }
  auto r = read_jsonl_values(dir / "w.jsonl");
  CHECK(r.records.size() == 2);
  CHECK(r.records[1].at("a") == 2);
}
