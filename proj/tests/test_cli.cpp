#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

// Runs the CLI with stderr folded into stdout.
Result run(const std::string& args) {
  std::string cmd = std::string(PSIM_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), n);
  int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "psim_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kConfig = (fs::path(PSIM_TEST_DATA) / "scripted_occupation.json").string();

}  // namespace

TEST_CASE("usage errors exit nonzero") {
  CHECK(run("").code != 0);
  CHECK(run("simulate --config /nonexistent/config.json").code != 0);
  CHECK(run("simulate --config " + kConfig + " --pipeline trio").code != 0);
  CHECK(run("analyze").code == 2);
  auto v = run("--version");
  CHECK(v.code == 0);
  CHECK(v.output.find("0.1.0") != std::string::npos);
}

TEST_CASE("library errors are printed with their status") {
  auto dir = fresh_dir("nopersonas");
  auto r = run("simulate --config " + kConfig + " --out " + dir.string());
  CHECK(r.code == 1);
  CHECK(r.output.find("psim: io:") != std::string::npos);
  CHECK(r.output.find("personas.jsonl") != std::string::npos);
}

TEST_CASE("personas, simulate, analyze from the command line") {
  auto off = fresh_dir("off");
  auto on = fresh_dir("on");
  auto p = run("personas --config " + kConfig + " --out " + off.string() + " --seed 11");
  REQUIRE(p.code == 0);
  CHECK(p.output.find("occupation=edu: 3") != std::string::npos);
  CHECK(p.output.find("18 personas written") != std::string::npos);

  auto s = run("simulate --config " + kConfig + " --out " + off.string() + " --seed 11 --strategy off");
  REQUIRE(s.code == 0);
  CHECK(s.output.find("72 transcripts, 0 aborted") != std::string::npos);

  auto s2 = run("simulate --config " + kConfig + " --out " + on.string() + " --seed 11 --strategy on --personas " +
                (off / "personas.jsonl").string());
  REQUIRE(s2.code == 0);

  auto a = run("analyze " + off.string() + " " + on.string() + " --normalize share");
  REQUIRE(a.code == 0);
  CHECK(a.output.find("| Sec. | Success Rate |") != std::string::npos);
  CHECK(fs::exists(on / "comparison.md"));
  CHECK(fs::exists(off / "charts" / "all.svg"));

  auto g = run("analyze " + off.string() + " --group-by gender --out " + (off / "by_gender").string());
  REQUIRE(g.code == 0);
  std::ifstream csv(off / "by_gender" / "metrics.csv");
  std::string header, first;
  std::getline(csv, header);
  std::getline(csv, first);
  CHECK(header == "condition,n,success_rate,avg_turns,guided_continuation_ratio");
  CHECK(first.rfind("Male,", 0) == 0);
}
