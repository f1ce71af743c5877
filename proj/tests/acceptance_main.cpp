// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Everything runs against the shipped corpus.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "stubshrink/bundler.hpp"
#include "stubshrink/callgraph.hpp"
#include "stubshrink/cli.hpp"
#include "stubshrink/interp.hpp"
#include "stubshrink/module_info.hpp"
#include "stubshrink/parser.hpp"
#include "stubshrink/printer.hpp"
#include "stubshrink/stubbify.hpp"

namespace fs = std::filesystem;
using namespace stubshrink;
using interp::PackageHandle;
using interp::RuntimeConfig;
using interp::TestReport;
using nlohmann::json;

namespace {

struct Harness {
  fs::path corpus{STUBSHRINK_CORPUS};
  fs::path work;
  int failures = 0;

  Harness() {
    work = fs::temp_directory_path() /
           ("stubshrink-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(work);
    fs::create_directories(work);
  }
  ~Harness() {
    std::error_code ec;
    fs::remove_all(work, ec);
  }

  void report(int number, const std::string& title, bool ok,
              const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << number << ": "
              << title;
    if (!detail.empty()) std::cout << "  [" << detail << "]";
    std::cout << "\n";
    if (!ok) ++failures;
  }

  std::vector<fs::path> subjects() const {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(corpus)) {
      if (!e.is_directory()) continue;
      std::string name = e.path().filename().string();
      if (name.ends_with(".clients")) continue;
      if (fs::exists(e.path() / "minipkg.json")) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<fs::path> clientsOf(const fs::path& subject) const {
    std::vector<fs::path> out;
    fs::path dir = corpus / (subject.filename().string() + ".clients");
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
      if (fs::exists(e.path() / "minipkg.json")) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
  }

  fs::path stubbify(const fs::path& subject, const std::string& mode,
                    interp::GuardPolicy::Mode guard,
                    stubbify::StubbedPackage* resultOut = nullptr) {
    PackageHandle pkg = PackageHandle::load(subject);
    auto rs = mode == "static" ? callgraph::staticReachability(pkg)
                               : callgraph::dynamicReachability(pkg);
    stubbify::StubbifyOptions opts;
    opts.outDir = work / (subject.filename().string() + "-" + mode + "-" +
                          interp::guardModeName(guard));
    opts.force = true;
    opts.guard = guard;
    auto result = stubbify::stubbifyPackage(pkg, rs, opts);
    if (resultOut) *resultOut = std::move(result);
    return opts.outDir;
  }

  TestReport runRepointed(const fs::path& client, const fs::path& subject,
                          const fs::path& stubbed) {
    static int counter = 0;
    fs::path dir = work / ("client-" + std::to_string(counter++));
    cli::repointClient(client, subject, stubbed, dir);
    return interp::runTests(PackageHandle::load(dir), RuntimeConfig{});
  }
};

std::string joinLog(const std::vector<std::string>& log) {
  std::string out;
  for (const auto& s : log) out += s + "\n";
  return out;
}

std::size_t firstFetchBytes(const TestReport& rep) {
  std::size_t total = 0;
  for (const auto& e : rep.expansionEvents)
    if (!e.cacheHit) total += e.bytesLoaded;
  return total;
}

// --- criterion 1 ---

void criterion1(Harness& h) {
  std::string detail;
  bool ok = true;
  auto subjects = h.subjects();
  if (subjects.size() < 6) {
    ok = false;
    detail = "corpus has fewer than 6 packages";
  }
  std::size_t pairs = 0;
  for (const auto& subject : subjects) pairs += h.clientsOf(subject).size();
  if (pairs < 12) {
    ok = false;
    detail = "fewer than 12 clients";
  }
  for (const auto& subject : subjects) {
    PackageHandle pkg = PackageHandle::load(subject);
    TestReport subjOrig = interp::runTests(pkg, RuntimeConfig{});
    for (const std::string mode : {"static", "dynamic"}) {
      fs::path stubbed =
          h.stubbify(subject, mode, interp::GuardPolicy::Mode::Off);
      TestReport subjStub =
          interp::runTests(PackageHandle::load(stubbed), RuntimeConfig{});
      if (subjStub.passFailVector() != subjOrig.passFailVector() ||
          joinLog(subjStub.sideEffectLog) != joinLog(subjOrig.sideEffectLog)) {
        ok = false;
        detail = subject.filename().string() + " own tests diverge (" + mode +
                 ")";
      }
      for (const auto& client : h.clientsOf(subject)) {
        TestReport orig =
            interp::runTests(PackageHandle::load(client), RuntimeConfig{});
        TestReport stub = h.runRepointed(client, subject, stubbed);
        if (stub.passFailVector() != orig.passFailVector() ||
            joinLog(stub.sideEffectLog) != joinLog(orig.sideEffectLog)) {
          ok = false;
          detail = client.filename().string() + " diverges against " +
                   subject.filename().string() + " (" + mode + ")";
        }
        if (!orig.allPassed()) {
          ok = false;
          detail = client.filename().string() + " fails on the original";
        }
      }
    }
  }
  h.report(1, "behavior preservation across the corpus", ok,
           detail.empty() ? std::to_string(subjects.size()) + " packages, " +
                                std::to_string(pairs) + " clients, 2 modes"
                          : detail);
}

// --- criterion 2 ---

bool deepEq(const interp::Value& a, const interp::Value& b) {
  if (a.v.index() != b.v.index()) return false;
  if (a.isNum()) return a.num() == b.num();
  if (a.isBool()) return a.boolean() == b.boolean();
  if (a.isStr()) return a.text() == b.text();
  if (a.isNull()) return true;
  if (a.isArray()) {
    const auto& x = a.array()->items;
    const auto& y = b.array()->items;
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!deepEq(x[i], y[i])) return false;
    return true;
  }
  return false;
}

// Generates a program built around the closure hazard: nested functions
// (named and anonymous) capture enclosing parameters and locals, and every
// closure is re-invoked under different arguments.
std::string generateProgram(std::mt19937& rng) {
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  const char* ops[] = {"+", "-", "*"};
  std::ostringstream src;
  int makers = pick(1, 3);
  for (int m = 0; m < makers; ++m) {
    std::string mn = std::to_string(m);
    src << "function maker" << mn << "(a" << mn << ", b" << mn << ") {\n";
    src << "  let seed" << mn << " = a" << mn << " " << ops[pick(0, 2)]
        << " " << pick(1, 9) << ";\n";
    bool named = pick(0, 1) == 1;
    if (named) {
      src << "  function helper" << mn << "(c" << mn << ") {\n"
          << "    return c" << mn << " " << ops[pick(0, 2)] << " seed" << mn
          << " " << ops[pick(0, 1)] << " b" << mn << ";\n"
          << "  }\n";
      src << "  return function(x" << mn << ") {\n"
          << "    return helper" << mn << "(x" << mn << ") "
          << ops[pick(0, 2)] << " a" << mn << ";\n"
          << "  };\n";
    } else {
      src << "  return function(x" << mn << ") {\n"
          << "    let inner" << mn << " = function(y" << mn << ") {\n"
          << "      return y" << mn << " " << ops[pick(0, 2)] << " seed"
          << mn << " " << ops[pick(0, 1)] << " a" << mn << ";\n"
          << "    };\n"
          << "    return inner" << mn << "(x" << mn << ") "
          << ops[pick(0, 1)] << " b" << mn << ";\n"
          << "  };\n";
    }
    src << "}\n";
  }
  src << "let out = [];\n";
  for (int m = 0; m < makers; ++m) {
    std::string mn = std::to_string(m);
    int instances = pick(2, 3);
    for (int i = 0; i < instances; ++i) {
      std::string fn = "f" + mn + "_" + std::to_string(i);
      src << "let " << fn << " = maker" << mn << "(" << pick(1, 20) << ", "
          << pick(1, 20) << ");\n";
      int calls = pick(1, 3);
      for (int c = 0; c < calls; ++c)
        src << "push(out, " << fn << "(" << pick(1, 30) << "));\n";
    }
    // call the first instance again after the others ran
    src << "push(out, f" << mn << "_0(" << pick(1, 30) << "));\n";
  }
  src << "module.exports = out;\n";
  return src.str();
}

void criterion2(Harness& h) {
  std::mt19937 rng(20260809u);
  const int kPrograms = 200;
  bool ok = true;
  std::string detail;
  for (int i = 0; i < kPrograms && ok; ++i) {
    std::string program = generateProgram(rng);
    fs::path dir = h.work / ("gen-" + std::to_string(i));
    fs::remove_all(dir);
    fs::create_directories(dir / "src");
    fs::create_directories(dir / "tests");
    std::ofstream(dir / "minipkg.json")
        << R"({"name":"gen","version":"0.0.1","main":"src/main.mm",)"
        << R"("tests":["tests/t.mm"],"dependencies":{},)"
        << R"("devDependencies":{}})";
    std::ofstream(dir / "src/main.mm") << program;
    std::ofstream(dir / "tests/t.mm") << "let nothing = 0;\n";

    PackageHandle pkg = PackageHandle::load(dir);
    interp::Interpreter original(pkg, RuntimeConfig{});
    interp::Value expected;
    try {
      expected = original.runModule(dir / "src/main.mm").cjsExports;
    } catch (const interp::MiniError& e) {
      ok = false;
      detail = "generated program failed: " + e.describe();
      break;
    }

    // Force-stub every stubbable function: nothing reachable, file kept.
    callgraph::ReachabilitySet rs;
    rs.mode = "static";
    rs.reachableFiles.insert("src/main.mm");
    stubbify::StubbifyOptions opts;
    opts.outDir = h.work / ("gen-stub-" + std::to_string(i));
    opts.force = true;
    opts.forceAll = true;
    auto stubbed = stubbify::stubbifyPackage(pkg, rs, opts);
    if (stubbed.plan.functionStubs.empty()) {
      ok = false;
      detail = "no stubs applied to generated program";
      break;
    }
    PackageHandle spkg = PackageHandle::load(opts.outDir);
    interp::Interpreter replay(spkg, RuntimeConfig{});
    interp::Value got;
    try {
      got = replay.runModule(opts.outDir / "src/main.mm").cjsExports;
    } catch (const interp::MiniError& e) {
      ok = false;
      detail = "stubbed program failed: " + e.describe();
      break;
    }
    if (!deepEq(expected, got)) {
      ok = false;
      detail = "output mismatch on program " + std::to_string(i);
    }
    fs::remove_all(dir);
    fs::remove_all(opts.outDir);
  }
  h.report(2, "randomized closure correctness (200 force-stubbed programs)",
           ok, detail);
}

// --- criterion 3 ---

void criterion3(Harness& h) {
  bool ok = true;
  std::string detail;
  fs::path subject = h.corpus / "webshapes";
  stubbify::StubbedPackage stubbed;
  fs::path out = h.stubbify(subject, "static", interp::GuardPolicy::Mode::Off,
                            &stubbed);
  TestReport rep = h.runRepointed(h.corpus / "webshapes.clients/stylepress",
                                  subject, out);
  if (!rep.allPassed()) {
    ok = false;
    detail = "stylepress failed against stubbed webshapes";
  }
  std::size_t expanded = stubbed.size.stubbedBytes + firstFetchBytes(rep);
  // Recompute from the serialized artifacts: per-file sizes plus the log.
  json sizeJson = json::parse([&] {
    std::ifstream in(out / "size.report.json");
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
  }());
  std::size_t stubbedBytes = 0;
  for (const auto& [path, sizes] : sizeJson.at("perFile").items())
    stubbedBytes += sizes.at("stubbedBytes").get<std::size_t>();
  std::size_t recomputed = stubbedBytes + firstFetchBytes(rep);
  if (recomputed != expanded) {
    ok = false;
    detail = "expanded bytes mismatch: " + std::to_string(expanded) + " vs " +
             std::to_string(recomputed);
  }

  // Named-stub single fetch: at most one getCode per named uid in the run.
  std::set<std::string> namedUids;
  PackageHandle pkg = PackageHandle::load(subject);
  for (const auto& af : pkg.analyzedFiles()) {
    std::ifstream in(af.absPath, std::ios::binary);
    std::string text{std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>()};
    for (const auto& fi : lang::functionsOf(*lang::parse(text, af.relPath)))
      if (fi.def->kind == lang::FnKind::Named) namedUids.insert(fi.def->uid);
  }
  std::map<std::string, int> fetches;
  for (const auto& e : rep.expansionEvents)
    if (e.kind == "function") ++fetches[e.id];
  bool sawNamed = false;
  for (const auto& [uid, count] : fetches) {
    if (!namedUids.count(uid)) continue;
    sawNamed = true;
    if (count > 1) {
      ok = false;
      detail = uid + " fetched " + std::to_string(count) + " times";
    }
  }
  if (!sawNamed) {
    ok = false;
    detail = "no named stub was exercised";
  }
  h.report(3, "expansion accounting and named single-fetch on webshapes", ok,
           ok ? "expandedBytes=" + std::to_string(expanded) : detail);
}

// --- criterion 4 ---

void criterion4(Harness& h) {
  bool ok = true;
  std::string detail;

  stubbify::StubbedPackage ws;
  h.stubbify(h.corpus / "webshapes", "static", interp::GuardPolicy::Mode::Off,
             &ws);
  double wsReduction = ws.size.reductionPct();
  if (wsReduction < 30.0) {
    ok = false;
    detail = "webshapes static reduction " + std::to_string(wsReduction);
  }

  stubbify::StubbedPackage tg;
  fs::path tgOut = h.stubbify(h.corpus / "tinyglob", "static",
                              interp::GuardPolicy::Mode::Off, &tg);
  TestReport stress = h.runRepointed(h.corpus / "tinyglob.clients/globstress",
                                     h.corpus / "tinyglob", tgOut);
  std::size_t expanded = tg.size.stubbedBytes + firstFetchBytes(stress);
  double afterExpansion = tg.size.reductionAfterExpansion(expanded);
  if (!(afterExpansion < 0.0)) {
    ok = false;
    detail = "tinyglob heavy-client reduction after expansion " +
             std::to_string(afterExpansion);
  }

  for (const std::string mode : {"static", "dynamic"}) {
    stubbify::StubbedPackage ap;
    h.stubbify(h.corpus / "argparsely", mode, interp::GuardPolicy::Mode::Off,
               &ap);
    if (ap.size.reductionPct() >= 10.0) {
      ok = false;
      detail =
          "argparsely reduction " + std::to_string(ap.size.reductionPct());
    }
  }
  std::ostringstream summary;
  summary << "webshapes=" << int(wsReduction)
          << "% tinyglobAfterExp=" << int(afterExpansion) << "%";
  h.report(4, "calibrated reductions (webshapes/tinyglob/argparsely)", ok,
           ok ? summary.str() : detail);
}

// --- criterion 5 ---

void criterion5(Harness& h) {
  bool ok = true;
  std::string detail;
  fs::path subject = h.corpus / "deprecator";
  fs::path client = h.corpus / "deprecator.clients/messyapp";

  TestReport baseline =
      interp::runTests(PackageHandle::load(client), RuntimeConfig{});

  fs::path warnOut =
      h.stubbify(subject, "static", interp::GuardPolicy::Mode::Warn);
  TestReport warn = h.runRepointed(client, subject, warnOut);
  auto countOf = [](const TestReport& r, const char* name) {
    return std::count(r.guardEvents.begin(), r.guardEvents.end(), name);
  };
  if (countOf(warn, "eval") < 1) {
    ok = false;
    detail = "warn mode recorded no eval guard event";
  }
  if (countOf(warn, "exec") < 1) {
    ok = false;
    detail = "aliased exec did not fire";
  }
  if (warn.passFailVector() != baseline.passFailVector()) {
    ok = false;
    detail = "warn mode changed behavior";
  }

  fs::path exitOut =
      h.stubbify(subject, "static", interp::GuardPolicy::Mode::Exit);
  static int counter = 0;
  fs::path exitClient = h.work / ("guard-exit-" + std::to_string(counter++));
  cli::repointClient(client, subject, exitOut, exitClient);
  TestReport exitRep =
      interp::runTests(PackageHandle::load(exitClient), RuntimeConfig{});
  if (!exitRep.guardExit) {
    ok = false;
    detail = "exit mode did not terminate";
  }
  int code = cli::run({"run", exitClient.string()});
  if (code != 2) {
    ok = false;
    detail = "guard exit code was " + std::to_string(code);
  }

  fs::path offOut =
      h.stubbify(subject, "static", interp::GuardPolicy::Mode::Off);
  TestReport off = h.runRepointed(client, subject, offOut);
  if (!off.guardEvents.empty() ||
      off.passFailVector() != baseline.passFailVector() ||
      joinLog(off.sideEffectLog) != joinLog(baseline.sideEffectLog)) {
    ok = false;
    detail = "guard off is not behavior-preserving";
  }
  h.report(5, "guard efficacy on deprecator (warn, exit 2, off, alias)", ok,
           detail);
}

// --- criterion 6 ---

void criterion6(Harness& h) {
  bool ok = true;
  std::string detail;
  for (const char* name : {"webshapes", "argparsely", "tinyglob", "shapekit"}) {
    PackageHandle pkg = PackageHandle::load(h.corpus / name);
    auto dyn = callgraph::dynamicReachability(pkg);
    auto st = callgraph::staticReachability(pkg);
    bool fnsOk = std::includes(
        st.reachableFunctions.begin(), st.reachableFunctions.end(),
        dyn.reachableFunctions.begin(), dyn.reachableFunctions.end());
    bool filesOk =
        std::includes(st.reachableFiles.begin(), st.reachableFiles.end(),
                      dyn.reachableFiles.begin(), dyn.reachableFiles.end());
    if (!fnsOk || !filesOk) {
      ok = false;
      detail = std::string(name) + ": dynamic set escapes the static one";
    }
  }

  // Computed dispatch: statically unreachable methods still run (and get
  // logged) through expansion.
  fs::path subject = h.corpus / "dispatchy";
  PackageHandle pkg = PackageHandle::load(subject);
  auto st = callgraph::staticReachability(pkg);
  bool methodsInvisible = true;
  {
    std::ifstream in(subject / "src/registry.mm", std::ios::binary);
    std::string text{std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>()};
    for (const auto& fi :
         lang::functionsOf(*lang::parse(text, "src/registry.mm")))
      if (fi.def->kind == lang::FnKind::Method &&
          st.reachableFunctions.count(fi.def->uid))
        methodsInvisible = false;
  }
  TestReport orig = interp::runTests(pkg, RuntimeConfig{});
  fs::path out = h.stubbify(subject, "static", interp::GuardPolicy::Mode::Off);
  TestReport stub =
      interp::runTests(PackageHandle::load(out), RuntimeConfig{});
  bool expandedFn = false;
  for (const auto& e : stub.expansionEvents)
    if (e.kind == "function") expandedFn = true;
  if (!methodsInvisible) {
    ok = false;
    detail = "registry methods are statically reachable";
  }
  if (stub.passFailVector() != orig.passFailVector() || !expandedFn) {
    ok = false;
    detail = "computed-dispatch expansion did not recover behavior";
  }
  h.report(6,
           "dynamic within static on the eval-free subset; unsoundness "
           "recovered by expansion",
           ok, detail);
}

// --- criterion 7 ---

// The tree-shake containment premise is a call graph whose tests import the
// entry: build one by copying the subject and generating a test that imports
// and references every entry export.
callgraph::ReachabilitySet entryOnlyRs(Harness& h, const fs::path& subject) {
  static int counter = 0;
  fs::path dir = h.work / ("entryonly-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::copy(subject, dir, fs::copy_options::recursive);

  PackageHandle pkg = PackageHandle::load(subject);
  std::string mainRel = pkg.root().manifest.main;
  fs::path mainAbs = subject / mainRel;
  std::ifstream in(mainAbs, std::ios::binary);
  std::string text{std::istreambuf_iterator<char>(in),
                   std::istreambuf_iterator<char>()};
  auto mainAst = lang::parse(text, mainRel);
  std::vector<std::string> names;
  bool hasDefault = false;
  for (const auto& item : mainAst->items) {
    if (const auto* ef = std::get_if<lang::ExportFunctionDecl>(&item.node)) {
      names.push_back(*ef->fn->name);
    } else if (const auto* en =
                   std::get_if<lang::ExportNamedDecl>(&item.node)) {
      for (const auto& e : en->entries) names.push_back(e.exported);
    } else if (std::holds_alternative<lang::ExportDefaultDecl>(item.node)) {
      hasDefault = true;
    }
  }
  std::string spec = "../" + mainRel.substr(0, mainRel.size() - 3);
  std::ostringstream test;
  if (!names.empty()) {
    test << "import { ";
    for (std::size_t i = 0; i < names.size(); ++i)
      test << (i ? ", " : "") << names[i];
    test << " } from \"" << spec << "\";\n";
  }
  if (hasDefault) test << "import entryDefault from \"" << spec << "\";\n";
  test << "let touched = [";
  for (std::size_t i = 0; i < names.size(); ++i)
    test << (i ? ", " : "") << names[i];
  if (hasDefault) test << (names.empty() ? "" : ", ") << "entryDefault";
  test << "];\n";
  std::ofstream(dir / "tests" / "entryonly.mm") << test.str();

  interp::PackageManifest m = pkg.root().manifest;
  m.tests = {"tests/entryonly.mm"};
  std::ofstream(dir / "minipkg.json") << interp::manifestToJson(m);
  return callgraph::staticReachability(PackageHandle::load(dir));
}

void criterion7(Harness& h) {
  bool ok = true;
  std::string detail;
  for (const char* name :
       {"webshapes", "dispatchy", "argparsely", "shapekit"}) {
    fs::path subject = h.corpus / name;
    PackageHandle pkg = PackageHandle::load(subject);
    TestReport orig = interp::runTests(pkg, RuntimeConfig{});

    fs::path out = h.work / (std::string(name) + "-bundle");
    int code = cli::run({"bundle", subject.string(), "--out", out.string(),
                         "--tests-entry", "tests/bundle", "--force"});
    if (code != 0) {
      ok = false;
      detail = std::string(name) + " failed to bundle";
      continue;
    }
    TestReport plain =
        interp::runTests(PackageHandle::load(out), RuntimeConfig{});
    if (plain.passFailVector() != orig.passFailVector()) {
      ok = false;
      detail = std::string(name) + " bundle tests diverge";
    }

    bundler::Bundle b = bundler::bundle(pkg);
    auto rs = callgraph::staticReachability(pkg);
    stubbify::StubbifyOptions opts;
    opts.outDir = out / "stubbed";
    opts.force = true;
    auto sp = bundler::stubbifyBundle(b, out, rs, opts);
    TestReport stubbed =
        interp::runTests(PackageHandle::load(opts.outDir), RuntimeConfig{});
    if (stubbed.passFailVector() != orig.passFailVector()) {
      ok = false;
      detail = std::string(name) + " stubbed bundle diverges";
    }
    if (!sp.plan.functionStubs.empty() &&
        !(sp.size.stubbedBytes < sp.size.originalBytes)) {
      ok = false;
      detail = std::string(name) + " stubbed bundle is not smaller";
    }
    auto entryRs = entryOnlyRs(h, subject);
    for (const auto& uid : b.removed) {
      if (entryRs.reachableFunctions.count(uid)) {
        ok = false;
        detail =
            std::string(name) + " shook a statically reachable uid: " + uid;
      }
    }
  }
  h.report(7, "bundler composition on every bundlable fixture", ok, detail);
}

// --- criterion 8 ---

void criterion8(Harness& h) {
  bool ok = true;
  std::string detail;
  fs::path reportPath = h.work / "bench.report.json";
  int code =
      cli::run({"bench", h.corpus.string(), "--report", reportPath.string()});
  if (code != 0) {
    ok = false;
    detail = "bench exited " + std::to_string(code);
  } else {
    std::ifstream in(reportPath);
    json j = json::parse(std::string(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>()));
    if (j.at("runs") != 10 || j.at("warmup") != 2) {
      ok = false;
      detail = "bench did not use the 10-run / 2-warmup protocol";
    }
    for (const auto& cell : j.at("cells")) {
      int slowdown = cell.at("slowdownPct").get<int>();
      if (slowdown >= 200) {
        ok = false;
        detail = cell.at("subject").get<std::string>() + "/" +
                 cell.at("client").get<std::string>() + " slowdown " +
                 std::to_string(slowdown) + "%";
      }
      if (!cell.at("vectorsMatch").get<bool>()) {
        ok = false;
        detail = "vector divergence in bench";
      }
    }
  }
  h.report(8, "slowdown under 200% for every corpus cell (N=10, W=2)", ok,
           detail);
}

}  // namespace

int main() {
  Harness h;
  if (!fs::is_directory(h.corpus)) {
    std::cerr << "corpus directory missing: " << h.corpus << "\n";
    return 1;
  }
  criterion1(h);
  criterion2(h);
  criterion3(h);
  criterion4(h);
  criterion5(h);
  criterion6(h);
  criterion7(h);
  criterion8(h);
  if (h.failures > 0) {
    std::cout << h.failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all acceptance criteria passed\n";
  return 0;
}
