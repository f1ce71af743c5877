#include <doctest.h>

#include <cstdio>
#include <unistd.h>

#include <json.hpp>

#include "stubshrink/cli.hpp"
#include "stubshrink/report.hpp"
#include "test_support.hpp"

using namespace stubshrink;
using testsupport::TempDir;
using testsupport::writePackage;

namespace {

// Captures stdout around a CLI invocation.
struct Captured {
  int exitCode;
  std::string out;
};

Captured runCli(const std::vector<std::string>& args) {
  testsupport::TempDir cap("cli-capture");
  auto file = cap.path / "out.txt";
  fflush(stdout);
  int saved = dup(fileno(stdout));
  FILE* f = freopen(file.c_str(), "w", stdout);
  REQUIRE(f != nullptr);
  int code = cli::run(args);
  fflush(stdout);
  dup2(saved, fileno(stdout));
  close(saved);
  return {code, testsupport::readFile(file)};
}

}  // namespace

TEST_CASE("cg prints the reachability summary and writes the set") {
  auto fixture = testsupport::fixtures() / "fivefns";
  TempDir dir("cg");
  std::filesystem::copy(fixture, dir.path,
                        std::filesystem::copy_options::recursive);
  for (std::string mode : {"static", "dynamic"}) {
    Captured got = runCli({"cg", dir.path.string(), "--mode", mode});
    CAPTURE(got.out);
    CHECK(got.exitCode == 0);
    CHECK(got.out.find("3/5 functions reachable") != std::string::npos);
    CHECK(std::filesystem::exists(dir.path / ("cg." + mode + ".json")));
  }
}

TEST_CASE("cg on a missing directory exits 3") {
  Captured got = runCli({"cg", "/nonexistent/nowhere"});
  CHECK(got.exitCode == 3);
}

TEST_CASE("cg with a failing test still produces a set") {
  TempDir dir("cgfail");
  writePackage(
      dir.path,
      {{"minipkg.json",
        R"({"name":"t","version":"0.0.1","main":"src/index.mm",
            "tests":["tests/t1.mm"],"dependencies":{},"devDependencies":{}})"},
       {"src/index.mm", "export function f() { return 1; }\n"},
       {"tests/t1.mm", "import { f } from \"../src/index\";\n"
                       "assert(f() == 2, \"wrong on purpose\");\n"}});
  Captured got = runCli({"cg", dir.path.string(), "--mode", "dynamic"});
  CHECK(got.exitCode == 0);
  CHECK(std::filesystem::exists(dir.path / "cg.dynamic.json"));
}

TEST_CASE("stubbify reports sizes and reduction") {
  report::SizeReport s;
  s.originalBytes = 1000;
  s.stubbedBytes = 400;
  CHECK(s.reductionPct() == doctest::Approx(60.0));
  // negative reduction after expansion is representable
  CHECK(s.reductionAfterExpansion(1200) == doctest::Approx(-20.0));

  TempDir dir("stubcli");
  writePackage(
      dir.path,
      {{"minipkg.json",
        R"({"name":"t","version":"0.0.1","main":"src/index.mm",
            "tests":["tests/t1.mm"],"dependencies":{},"devDependencies":{}})"},
       {"src/index.mm",
        "export function used() { return 1; }\n"
        "export function dormant(n) {\n"
        "  let filler = \"sixty bytes of padding text to outweigh the stub "
        "body easily\";\n"
        "  return filler + str(n);\n"
        "}\n"},
       {"tests/t1.mm", "import { used } from \"../src/index\";\n"
                       "assert(used() == 1, \"u\");\n"}});
  auto out = dir.path / "out";
  Captured got = runCli({"stubbify", dir.path.string(), "--cg", "static",
                         "--out", out.string()});
  CAPTURE(got.out);
  CHECK(got.exitCode == 0);
  CHECK(got.out.find("reductionPct=") != std::string::npos);
  CHECK(std::filesystem::exists(out / "size.report.json"));
  CHECK(std::filesystem::exists(out / "stubs.store.json"));

  // report arithmetic recomputes from the per-file breakdown
  auto j = nlohmann::json::parse(
      testsupport::readFile(out / "size.report.json"));
  std::size_t original = 0, stubbed = 0;
  for (const auto& [path, sizes] : j.at("perFile").items()) {
    original += sizes.at("originalBytes").get<std::size_t>();
    stubbed += sizes.at("stubbedBytes").get<std::size_t>();
  }
  CHECK(original == j.at("originalBytes").get<std::size_t>());
  CHECK(stubbed == j.at("stubbedBytes").get<std::size_t>());

  // a second run without --force refuses to clobber
  Captured again = runCli({"stubbify", dir.path.string(), "--cg", "static",
                           "--out", out.string()});
  CHECK(again.exitCode == 3);
}

TEST_CASE("run exit codes: pass, fail") {
  TempDir dir("runpass");
  writePackage(
      dir.path,
      {{"minipkg.json",
        R"({"name":"t","version":"0.0.1","main":"src/index.mm",
            "tests":["tests/t1.mm"],"dependencies":{},"devDependencies":{}})"},
       {"src/index.mm", "let a = 0;\n"},
       {"tests/t1.mm", "assert(true, \"fine\");\n"}});
  auto report = dir.path / "report.json";
  Captured got =
      runCli({"run", dir.path.string(), "--report", report.string()});
  CHECK(got.exitCode == 0);
  CHECK(std::filesystem::exists(report));
  CHECK(std::filesystem::exists(dir.path / "expansions.jsonl"));

  testsupport::writeFile(dir.path / "tests/t1.mm",
                         "assert(false, \"broken\");\n");
  Captured fail = runCli({"run", dir.path.string()});
  CHECK(fail.exitCode == 1);
}

TEST_CASE("bundle command writes artifacts and rejects cycles") {
  TempDir dir("bundlecli");
  std::filesystem::copy(testsupport::fixtures() / "bundlecycle", dir.path,
                        std::filesystem::copy_options::recursive);
  Captured cyc = runCli({"bundle", dir.path.string(), "--out",
                         (dir.path / "out").string()});
  CHECK(cyc.exitCode == 3);

  TempDir okDir("bundleok");
  writePackage(
      okDir.path,
      {{"minipkg.json",
        R"({"name":"t","version":"0.0.1","main":"src/index.mm",
            "tests":["tests/t1.mm"],"dependencies":{},"devDependencies":{}})"},
       {"src/index.mm", "export function go() { return 9; }\n"},
       {"src/bundle_tests/t1.mm", "import { go } from \"../bundle\";\n"
                                  "assert(go() == 9, \"go\");\n"},
       {"tests/t1.mm", "import { go } from \"../src/index\";\n"
                       "assert(go() == 9, \"go\");\n"}});
  auto out = okDir.path / "out";
  Captured got = runCli({"bundle", okDir.path.string(), "--out", out.string(),
                         "--tests-entry", "src/bundle_tests", "--stubbify"});
  CAPTURE(got.out);
  CHECK(got.exitCode == 0);
  CHECK(std::filesystem::exists(out / "bundle.mm"));
  CHECK(std::filesystem::exists(out / "bundle.map.json"));
  CHECK(std::filesystem::exists(out / "shake.report.json"));
  CHECK(std::filesystem::exists(out / "stubbed" / "bundle.mm"));
  Captured rerun = runCli({"run", out.string()});
  CHECK(rerun.exitCode == 0);
}

TEST_CASE("bench defaults follow the measurement protocol") {
  // N=10 timed runs after W=2 warmups; validated here by running a tiny
  // corpus with explicit small values and checking the report shape.
  TempDir corpus("benchcorpus");
  writePackage(
      corpus.path / "mini",
      {{"minipkg.json",
        R"({"name":"mini","version":"0.0.1","main":"src/index.mm",
            "tests":["tests/t1.mm"],"dependencies":{},"devDependencies":{}})"},
       {"src/index.mm",
        "export function hot(n) { return n + 1; }\n"
        "export function cold(n) {\n"
        "  let acc = \"\";\n"
        "  let i = 0;\n"
        "  while (i < n) { acc = acc + str(i * 17) + \"-\"; i = i + 1; }\n"
        "  return acc;\n"
        "}\n"},
       {"tests/t1.mm", "import { hot } from \"../src/index\";\n"
                       "assert(hot(1) == 2, \"hot\");\n"}});
  writePackage(
      corpus.path / "mini.clients" / "c1",
      {{"minipkg.json",
        R"({"name":"c1","version":"0.0.1","main":"tests/t1.mm",
            "tests":["tests/t1.mm"],"dependencies":{"mini":"../../mini"},
            "devDependencies":{}})"},
       {"tests/t1.mm", "import { hot, cold } from \"mini\";\n"
                       "assert(hot(2) == 3, \"hot\");\n"
                       "assert(cold(3) == \"0-17-34-\", \"cold\");\n"}});
  auto report = corpus.path / "bench.json";
  Captured got = runCli({"bench", corpus.path.string(), "--runs", "3",
                         "--warmup", "1", "--report", report.string()});
  CAPTURE(got.out);
  CHECK(got.exitCode == 0);
  CHECK(got.out.find("slowdown%") != std::string::npos);
  auto j = nlohmann::json::parse(testsupport::readFile(report));
  CHECK(j.at("runs") == 3);
  CHECK(j.at("warmup") == 1);
  REQUIRE(j.at("cells").size() == 2);  // static and dynamic
  for (const auto& cell : j.at("cells")) {
    CHECK(cell.at("vectorsMatch") == true);
    CHECK(cell.at("expansionsStable") == true);
    // slowdown is an integer percentage
    CHECK(cell.at("slowdownPct").is_number_integer());
  }

  // Without flags the protocol defaults apply: 10 timed runs, 2 warmups.
  Captured defaults =
      runCli({"bench", corpus.path.string(), "--report", report.string()});
  CHECK(defaults.exitCode == 0);
  auto dj = nlohmann::json::parse(testsupport::readFile(report));
  CHECK(dj.at("runs") == 10);
  CHECK(dj.at("warmup") == 2);
}
