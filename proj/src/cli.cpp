#include "stubshrink/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stubshrink/bundler.hpp"
#include "stubshrink/callgraph.hpp"
#include "stubshrink/errors.hpp"
#include "stubshrink/interp.hpp"
#include "stubshrink/module_info.hpp"
#include "stubshrink/parser.hpp"
#include "stubshrink/stubbify.hpp"

namespace stubshrink::cli {

namespace fs = std::filesystem;
using interp::GuardPolicy;
using interp::PackageHandle;
using interp::RuntimeConfig;
using interp::TestReport;
using nlohmann::json;

namespace {

std::string readFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ManifestError("cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

void writeFile(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ManifestError("cannot write " + p.string());
  out << content;
}

struct PackageStats {
  std::size_t files = 0;
  std::size_t functions = 0;
};

PackageStats statsOf(const PackageHandle& pkg) {
  PackageStats s;
  for (const auto& af : pkg.analyzedFiles()) {
    ++s.files;
    auto ast = lang::parse(readFile(af.absPath), af.relPath);
    s.functions += lang::functionsOf(*ast).size();
  }
  return s;
}

callgraph::ReachabilitySet computeCg(const PackageHandle& pkg,
                                     const std::string& spec) {
  if (spec == "static") return callgraph::staticReachability(pkg);
  if (spec == "dynamic") return callgraph::dynamicReachability(pkg);
  return callgraph::ReachabilitySet::fromJson(readFile(spec));
}

void writeExpansionLog(const fs::path& path, const TestReport& report) {
  std::ostringstream out;
  std::size_t seq = 0;
  for (const auto& e : report.expansionEvents) {
    json j;
    j["seq"] = seq++;
    j["kind"] = e.kind;
    j["id"] = e.id;
    j["bytesLoaded"] = e.bytesLoaded;
    j["cacheHit"] = e.cacheHit;
    out << j.dump() << "\n";
  }
  writeFile(path, out.str());
}

// --- cg ---

int cmdCg(const std::string& pkgdir, const std::string& mode) {
  PackageHandle pkg = PackageHandle::load(pkgdir);
  callgraph::ReachabilitySet rs = computeCg(pkg, mode);
  PackageStats stats = statsOf(pkg);
  writeFile(fs::path(pkgdir) / ("cg." + mode + ".json"), rs.toJson());
  std::cout << rs.reachableFunctions.size() << "/" << stats.functions
            << " functions reachable\n"
            << rs.reachableFiles.size() << "/" << stats.files
            << " files reachable\n";
  for (const auto& w : rs.warnings)
    std::cerr << "warning: " << w.kind << " at " << w.file << ":" << w.line
              << ":" << w.col << " (" << w.detail << ")\n";
  std::cout << "wrote cg." << mode << ".json\n";
  return 0;
}

// --- stubbify ---

int cmdStubbify(const std::string& pkgdir, const std::string& cgSpec,
                const std::string& guard, const std::string& outDir,
                bool force) {
  PackageHandle pkg = PackageHandle::load(pkgdir);
  callgraph::ReachabilitySet rs = computeCg(pkg, cgSpec);
  stubbify::StubbifyOptions opts;
  opts.outDir = outDir;
  opts.force = force;
  opts.guard = interp::parseGuardMode(guard);
  stubbify::StubbedPackage out = stubbify::stubbifyPackage(pkg, rs, opts);
  std::ostringstream line;
  line << std::fixed << std::setprecision(1) << out.size.reductionPct();
  std::cout << "originalBytes=" << out.size.originalBytes
            << " stubbedBytes=" << out.size.stubbedBytes
            << " reductionPct=" << line.str() << "\n"
            << out.plan.fileStubs.size() << " file stubs, "
            << out.plan.functionStubs.size() << " function stubs, "
            << out.plan.skippedTooSmall.size() << " kept (too small), "
            << out.plan.skippedAnnotated.size() << " kept (annotated), "
            << out.plan.skippedUnstubbable.size() << " kept (unstubbable)\n"
            << "wrote " << outDir << "\n";
  return 0;
}

// --- run ---

int cmdRun(const std::string& pkgdir, const std::string& reportPath) {
  PackageHandle pkg = PackageHandle::load(pkgdir);
  RuntimeConfig cfg;
  TestReport report = interp::runTests(pkg, cfg);
  if (!reportPath.empty()) writeFile(reportPath, report.toJson() + "\n");
  writeExpansionLog(fs::path(pkgdir) / "expansions.jsonl", report);
  std::size_t passed = 0;
  for (const auto& t : report.tests)
    if (t.passed) ++passed;
  std::cout << passed << "/" << report.tests.size() << " tests passed, "
            << report.expansionEvents.size() << " expansion events, "
            << report.guardEvents.size() << " guard events\n";
  if (report.guardExit) {
    std::cerr << "guard exit: a dangerous builtin was about to be called\n";
    return 2;
  }
  return report.allPassed() ? 0 : 1;
}

// --- bundle ---

int cmdBundle(const std::string& pkgdir, const std::string& outDir,
              bool stubbifyBundle, const std::string& cgSpec,
              const std::string& guard, const std::string& testsEntry,
              bool force) {
  PackageHandle pkg = PackageHandle::load(pkgdir);
  bundler::Bundle b = bundler::bundle(pkg);

  fs::path out(outDir);
  if (fs::exists(out)) {
    if (!force)
      throw OutputExists("output directory exists: " + out.string() +
                         " (use --force to replace)");
    fs::remove_all(out);
  }
  interp::PackageManifest manifest;
  manifest.name = pkg.root().manifest.name + "-bundle";
  manifest.version = pkg.root().manifest.version;
  manifest.main = "bundle.mm";
  if (!testsEntry.empty()) {
    fs::path src = fs::path(pkgdir) / testsEntry;
    std::vector<fs::path> testSrcs;
    if (fs::is_directory(src)) {
      for (const auto& e : fs::directory_iterator(src))
        if (e.path().extension() == ".mm") testSrcs.push_back(e.path());
      std::sort(testSrcs.begin(), testSrcs.end());
    } else if (fs::exists(src)) {
      testSrcs.push_back(src);
    } else {
      throw ManifestError("tests entry not found: " + src.string());
    }
    for (const auto& t : testSrcs) {
      std::string rel = "tests/" + t.filename().string();
      writeFile(out / rel, readFile(t));
      manifest.tests.push_back(rel);
    }
  }
  writeFile(out / "bundle.mm", b.text);
  writeFile(out / "bundle.map.json", b.mapToJson());
  writeFile(out / "shake.report.json", b.shakeReportToJson());
  writeFile(out / "minipkg.json", interp::manifestToJson(manifest));
  std::cout << "bundle: " << b.text.size() << " bytes, " << b.kept.size()
            << " functions kept, " << b.removed.size() << " removed\n";

  if (stubbifyBundle) {
    callgraph::ReachabilitySet rs = computeCg(pkg, cgSpec);
    stubbify::StubbifyOptions sOpts;
    sOpts.outDir = out / "stubbed";
    sOpts.force = true;
    sOpts.guard = interp::parseGuardMode(guard);
    stubbify::StubbedPackage sp = bundler::stubbifyBundle(b, out, rs, sOpts);
    writeFile(out / "stubbed" / "size.report.json", sp.size.toJson());
    std::cout << "stubbed bundle: " << sp.size.stubbedBytes << " bytes ("
              << sp.plan.functionStubs.size() << " function stubs)\n";
  }
  return 0;
}

}  // namespace

void repointClient(const fs::path& clientDir, const fs::path& subjectDir,
                   const fs::path& replacementDir, const fs::path& outDir) {
  fs::remove_all(outDir);
  fs::create_directories(outDir);
  fs::copy(clientDir, outDir, fs::copy_options::recursive);
  PackageHandle client = PackageHandle::load(clientDir);
  interp::PackageManifest m = client.root().manifest;
  fs::path subject = fs::weakly_canonical(subjectDir);
  for (auto& [name, rel] : m.dependencies) {
    fs::path resolved = fs::weakly_canonical(clientDir / rel);
    if (resolved == subject) {
      rel = fs::weakly_canonical(replacementDir).string();
    } else {
      fs::path relToSubject = resolved.lexically_relative(subject);
      if (!relToSubject.empty() && relToSubject.begin()->string() != "..") {
        rel = (fs::weakly_canonical(replacementDir) / relToSubject).string();
      }
    }
  }
  writeFile(outDir / "minipkg.json", interp::manifestToJson(m));
}

namespace {

// --- bench ---

struct BenchCell {
  std::string subject;
  std::string client;
  std::string mode;
  double origMean = 0;
  double stubMean = 0;
  int slowdownPct = 0;
  std::size_t fileExpansions = 0;
  std::size_t fnExpansions = 0;
  double expandedKb = 0;
  std::size_t expandedBytes = 0;
  bool vectorsMatch = true;
  bool expansionsStable = true;
};

double meanOf(const std::vector<double>& xs) {
  double t = 0;
  for (double x : xs) t += x;
  return xs.empty() ? 0 : t / double(xs.size());
}

int cmdBench(const std::string& corpusdir, int runs, int warmup,
             const std::string& reportPath) {
  fs::path corpus(corpusdir);
  if (!fs::is_directory(corpus))
    throw ManifestError("corpus directory not found: " + corpusdir);
  std::vector<fs::path> subjects;
  for (const auto& e : fs::directory_iterator(corpus)) {
    if (!e.is_directory()) continue;
    std::string name = e.path().filename().string();
    if (name.size() > 8 && name.ends_with(".clients")) continue;
    if (fs::exists(e.path() / "minipkg.json")) subjects.push_back(e.path());
  }
  std::sort(subjects.begin(), subjects.end());

  fs::path work =
      fs::temp_directory_path() /
      ("stubshrink-bench-" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);

  std::vector<BenchCell> cells;
  json subjectReports = json::object();
  bool diverged = false;

  for (const fs::path& subjectDir : subjects) {
    std::string subjectName = subjectDir.filename().string();
    fs::path clientsDir = corpus / (subjectName + ".clients");
    std::vector<fs::path> clients;
    if (fs::is_directory(clientsDir)) {
      for (const auto& e : fs::directory_iterator(clientsDir))
        if (fs::exists(e.path() / "minipkg.json")) clients.push_back(e.path());
    }
    std::sort(clients.begin(), clients.end());
    if (clients.empty()) continue;

    for (const std::string mode : {"static", "dynamic"}) {
      PackageHandle subject = PackageHandle::load(subjectDir);
      callgraph::ReachabilitySet rs = computeCg(subject, mode);
      stubbify::StubbifyOptions sOpts;
      sOpts.outDir = work / (subjectName + "-" + mode);
      sOpts.force = true;
      stubbify::StubbedPackage stubbed =
          stubbify::stubbifyPackage(subject, rs, sOpts);

      std::size_t minExpanded = SIZE_MAX, maxExpanded = 0;
      for (const fs::path& clientDir : clients) {
        BenchCell cell;
        cell.subject = subjectName;
        cell.client = clientDir.filename().string();
        cell.mode = mode;

        PackageHandle orig = PackageHandle::load(clientDir);
        RuntimeConfig cfg;
        std::string origVector;
        std::vector<double> origTimes;
        for (int i = 0; i < warmup + runs; ++i) {
          TestReport r = interp::runTests(orig, cfg);
          if (i == 0) origVector = r.passFailVector();
          if (i >= warmup) origTimes.push_back(r.wallTimeMs);
        }

        // Point the copied client at the stubbed subject by manifest-path
        // rewrite (the portable equivalent of the symlink protocol).
        fs::path stubClientDir =
            work / (subjectName + "-" + mode + "-" + cell.client);
        repointClient(clientDir, subjectDir, sOpts.outDir, stubClientDir);
        PackageHandle stubClient = PackageHandle::load(stubClientDir);
        std::string stubVector;
        std::vector<double> stubTimes;
        std::optional<std::pair<std::size_t, std::size_t>> expCounts;
        for (int i = 0; i < warmup + runs; ++i) {
          TestReport r = interp::runTests(stubClient, cfg);
          if (i == 0) stubVector = r.passFailVector();
          if (i >= warmup) stubTimes.push_back(r.wallTimeMs);
          std::size_t files = 0, fns = 0, bytes = 0;
          for (const auto& e : r.expansionEvents) {
            if (e.cacheHit) continue;
            bytes += e.bytesLoaded;
            if (e.kind == "file") ++files;
            else ++fns;
          }
          if (!expCounts) {
            expCounts = {files, fns};
            cell.fileExpansions = files;
            cell.fnExpansions = fns;
            cell.expandedBytes = stubbed.size.stubbedBytes + bytes;
            cell.expandedKb = double(bytes) / 1024.0;
          } else if (expCounts->first != files || expCounts->second != fns) {
            cell.expansionsStable = false;
          }
        }
        cell.origMean = meanOf(origTimes);
        cell.stubMean = meanOf(stubTimes);
        cell.slowdownPct = int(std::lround(
            (cell.stubMean / std::max(cell.origMean, 1e-9) - 1.0) * 100.0));
        cell.vectorsMatch = origVector == stubVector;
        if (!cell.vectorsMatch) diverged = true;
        minExpanded = std::min(minExpanded, cell.expandedBytes);
        maxExpanded = std::max(maxExpanded, cell.expandedBytes);
        cells.push_back(cell);
      }

      report::SizeReport sized = stubbed.size;
      if (minExpanded != SIZE_MAX)
        sized.expandedBytesRange = {minExpanded, maxExpanded};
      subjectReports[subjectName][mode] = json::parse(sized.toJson());
    }
  }

  // Aligned table.
  std::cout << std::left << std::setw(12) << "subject" << std::setw(16)
            << "client" << std::setw(9) << "mode" << std::right
            << std::setw(10) << "orig(s)" << std::setw(10) << "stub(s)"
            << std::setw(11) << "slowdown%" << std::setw(7) << "files"
            << std::setw(6) << "fcts" << std::setw(10) << "exp(KB)" << "\n";
  for (const auto& c : cells) {
    std::cout << std::left << std::setw(12) << c.subject << std::setw(16)
              << c.client << std::setw(9) << c.mode << std::right
              << std::setw(10) << std::fixed << std::setprecision(3)
              << c.origMean / 1000.0 << std::setw(10) << c.stubMean / 1000.0
              << std::setw(11) << c.slowdownPct << std::setw(7)
              << c.fileExpansions << std::setw(6) << c.fnExpansions
              << std::setw(10) << std::setprecision(2) << c.expandedKb;
    if (!c.vectorsMatch) std::cout << "  DIVERGED";
    if (!c.expansionsStable) std::cout << "  UNSTABLE";
    std::cout << "\n";
  }

  json report;
  report["runs"] = runs;
  report["warmup"] = warmup;
  json rows = json::array();
  for (const auto& c : cells) {
    rows.push_back({{"subject", c.subject},
                    {"client", c.client},
                    {"mode", c.mode},
                    {"origMeanMs", c.origMean},
                    {"stubMeanMs", c.stubMean},
                    {"slowdownPct", c.slowdownPct},
                    {"fileExpansions", c.fileExpansions},
                    {"fnExpansions", c.fnExpansions},
                    {"expandedKb", c.expandedKb},
                    {"expandedBytes", c.expandedBytes},
                    {"vectorsMatch", c.vectorsMatch},
                    {"expansionsStable", c.expansionsStable}});
  }
  report["cells"] = rows;
  report["subjects"] = subjectReports;
  writeFile(reportPath, report.dump(2) + "\n");
  fs::remove_all(work);
  if (diverged) {
    std::cerr << "behavior divergence between original and stubbified runs\n";
    return 1;
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"stubshrink: call-graph driven debloating for MiniMod packages"};
  app.require_subcommand(1);

  std::string pkgdir, mode = "static", cgSpec = "static", guard = "off";
  std::string outDir, reportPath, testsEntry;
  bool force = false, doStubbify = false;
  int runs = 10, warmup = 2;

  CLI::App* cg = app.add_subcommand("cg", "build a reachability set");
  cg->add_option("pkgdir", pkgdir)->required();
  cg->add_option("--mode", mode)->check(CLI::IsMember({"static", "dynamic"}));

  CLI::App* stub = app.add_subcommand("stubbify", "replace unreachable code");
  stub->add_option("pkgdir", pkgdir)->required();
  stub->add_option("--cg", cgSpec, "static, dynamic, or a cg json file");
  stub->add_option("--guard", guard)
      ->check(CLI::IsMember({"off", "warn", "exit"}));
  stub->add_option("--out", outDir)->required();
  stub->add_flag("--force", force);

  CLI::App* runCmd = app.add_subcommand("run", "run a package's tests");
  runCmd->add_option("pkgdir", pkgdir)->required();
  runCmd->add_option("--report", reportPath);

  CLI::App* bundleCmd = app.add_subcommand("bundle", "tree-shaken bundle");
  bundleCmd->add_option("pkgdir", pkgdir)->required();
  bundleCmd->add_option("--out", outDir)->required();
  bundleCmd->add_flag("--stubbify", doStubbify);
  bundleCmd->add_option("--cg", cgSpec);
  bundleCmd->add_option("--guard", guard)
      ->check(CLI::IsMember({"off", "warn", "exit"}));
  bundleCmd->add_option("--tests-entry", testsEntry,
                        "test file or directory re-pointed at the bundle");
  bundleCmd->add_flag("--force", force);

  CLI::App* bench = app.add_subcommand("bench", "corpus benchmark harness");
  bench->add_option("corpusdir", pkgdir)->required();
  bench->add_option("--runs", runs);
  bench->add_option("--warmup", warmup);
  bench->add_option("--report", reportPath);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    // CLI11 prints help itself for -h; everything else is a usage error.
    int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }

  try {
    if (cg->parsed()) return cmdCg(pkgdir, mode);
    if (stub->parsed()) return cmdStubbify(pkgdir, cgSpec, guard, outDir, force);
    if (runCmd->parsed()) return cmdRun(pkgdir, reportPath);
    if (bundleCmd->parsed())
      return cmdBundle(pkgdir, outDir, doStubbify, cgSpec, guard, testsEntry,
                       force);
    if (bench->parsed())
      return cmdBench(pkgdir, runs, warmup,
                      reportPath.empty() ? "bench.report.json" : reportPath);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const StyleMixError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const BundleError& e) {
    std::cerr << "bundle error: " << e.what() << "\n";
    return 3;
  } catch (const interp::MiniError& e) {
    std::cerr << e.describe() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 3;
}

}  // namespace stubshrink::cli
