#include <doctest.h>

#include <algorithm>

#include "stubshrink/bundler.hpp"
#include "stubshrink/errors.hpp"
#include "stubshrink/interp.hpp"
#include "stubshrink/module_info.hpp"
#include "stubshrink/parser.hpp"
#include "test_support.hpp"

using namespace stubshrink;
using namespace stubshrink::bundler;
using interp::PackageHandle;
using interp::RuntimeConfig;
using interp::TestReport;
using testsupport::TempDir;
using testsupport::writeFile;
using testsupport::writePackage;

namespace {

const char* kManifest =
    R"({"name":"t","version":"0.0.1","main":"src/index.mm",
        "tests":["tests/t1.mm"],"dependencies":{},"devDependencies":{}})";

// Writes the bundle as a runnable one-file package with the given test.
fs::path writeBundlePkg(const TempDir& dir, const Bundle& b,
                        const std::string& testSource) {
  writeFile(dir.path / "bundle.mm", b.text);
  writeFile(dir.path / "minipkg.json",
            R"({"name":"b","version":"0.0.1","main":"bundle.mm",
                "tests":["tests/t1.mm"],"dependencies":{},
                "devDependencies":{}})");
  writeFile(dir.path / "tests/t1.mm", testSource);
  return dir.path;
}

}  // namespace

TEST_CASE("tree-shaking removes unreferenced exports and renames bindings") {
  TempDir dir("shake");
  writePackage(
      dir.path,
      {{"minipkg.json", kManifest},
       {"src/index.mm", "import { f } from \"./a\";\n"
                        "export function entry() { return f() + util(); }\n"
                        "function util() { return 1; }\n"},
       {"src/a.mm", "export function f() { return util2(); }\n"
                    "function util2() { return 2; }\n"
                    "export function g() { return 999; }\n"},
       {"tests/t1.mm", "import { entry } from \"../src/index\";\n"
                       "assert(entry() == 3, \"entry\");\n"}});
  auto pkg = PackageHandle::load(dir.path);
  Bundle b = bundle(pkg);
  // g is exported by a but used nowhere: removed; f kept and renamed
  CHECK(b.text.find("function g$") == std::string::npos);
  CHECK(b.text.find("function f$0") != std::string::npos);
  bool gRemoved = false;
  for (const auto& uid : b.removed)
    if (uid == "src/a.mm:3:0") gRemoved = true;
  CHECK(gRemoved);

  TempDir bdir("shake-bundle");
  auto bp = writeBundlePkg(bdir, b,
                           "import { entry } from \"../bundle\";\n"
                           "assert(entry() == 3, \"entry\");\n");
  TestReport rep = interp::runTests(PackageHandle::load(bp), RuntimeConfig{});
  CAPTURE(b.text);
  CHECK(rep.passFailVector() == "P");
}

TEST_CASE("same top-level name in two modules does not collide") {
  TempDir dir("collide");
  writePackage(
      dir.path,
      {{"minipkg.json", kManifest},
       {"src/index.mm", "import { a } from \"./a\";\n"
                        "import { b } from \"./b\";\n"
                        "function util() { return 100; }\n"
                        "export function entry() { return a() + b() + util(); "
                        "}\n"},
       {"src/a.mm", "function util() { return 1; }\n"
                    "export function a() { return util(); }\n"},
       {"src/b.mm", "function util() { return 10; }\n"
                    "export function b() { return util(); }\n"},
       {"tests/t1.mm", "import { entry } from \"../src/index\";\n"
                       "assert(entry() == 111, \"entry\");\n"}});
  auto pkg = PackageHandle::load(dir.path);
  Bundle b = bundle(pkg);
  // one renamed util per module
  CHECK(b.text.find("function util$0") != std::string::npos);
  CHECK(b.text.find("function util$1") != std::string::npos);
  TempDir bdir("collide-bundle");
  auto bp = writeBundlePkg(bdir, b,
                           "import { entry } from \"../bundle\";\n"
                           "assert(entry() == 111, \"entry\");\n");
  TestReport rep = interp::runTests(PackageHandle::load(bp), RuntimeConfig{});
  CAPTURE(b.text);
  CHECK(rep.passFailVector() == "P");
}

TEST_CASE("cjs modules are wrapped whole") {
  TempDir dir("cjswrap");
  writePackage(
      dir.path,
      {{"minipkg.json", kManifest},
       {"src/index.mm",
        "import box from \"./store\";\n"
        "export function entry() { return box.get() + box.extra(); }\n"},
       {"src/store.mm", "let hidden = 5;\n"
                        "exports.get = function() { return hidden; };\n"
                        "exports.extra = function() { return 2; };\n"},
       {"tests/t1.mm", "import { entry } from \"../src/index\";\n"
                       "assert(entry() == 7, \"entry\");\n"}});
  auto pkg = PackageHandle::load(dir.path);
  Bundle b = bundle(pkg);
  CHECK(b.text.find("module$0") != std::string::npos);
  // nothing inside the cjs module is shaken
  CHECK(b.text.find("exports$0.extra") != std::string::npos);
  TempDir bdir("cjswrap-bundle");
  auto bp = writeBundlePkg(bdir, b,
                           "import { entry } from \"../bundle\";\n"
                           "assert(entry() == 7, \"entry\");\n");
  TestReport rep = interp::runTests(PackageHandle::load(bp), RuntimeConfig{});
  CAPTURE(b.text);
  CHECK(rep.passFailVector() == "P");
}

TEST_CASE("cycles and non-literal specifiers are bundle errors") {
  auto cyc = PackageHandle::load(testsupport::fixtures() / "bundlecycle");
  CHECK_THROWS_AS(bundle(cyc), BundleError);

  TempDir dir("nonlit");
  writePackage(
      dir.path,
      {{"minipkg.json", kManifest},
       {"src/index.mm", "exports.load = function(which) { return "
                        "require(which); };\n"},
       {"tests/t1.mm", "let a = 0;\n"}});
  // cjs entry is also rejected, but the specifier error comes first
  auto pkg = PackageHandle::load(dir.path);
  CHECK_THROWS_AS(bundle(pkg), BundleError);
}

TEST_CASE("position map pairs original uids with bundle spans") {
  TempDir dir("posmap");
  writePackage(
      dir.path,
      {{"minipkg.json", kManifest},
       {"src/index.mm",
        "export function keep(n) {\n"
        "  let inner = function(k) { return k + 1; };\n"
        "  return inner(n);\n"
        "}\n"},
       {"tests/t1.mm", "import { keep } from \"../src/index\";\n"
                       "assert(keep(1) == 2, \"keep\");\n"}});
  auto pkg = PackageHandle::load(dir.path);
  Bundle b = bundle(pkg);
  REQUIRE(b.kept.size() == 2);
  CHECK(b.positionMap.count("src/index.mm:1:0") == 1);
  CHECK(b.positionMap.count("src/index.mm:2:14") == 1);
  // the span in the bundle points at a real function
  auto reparsed = lang::parse(b.text, "bundle.mm");
  auto fns = lang::functionsOf(*reparsed);
  bool found = false;
  for (const auto& fi : fns) {
    if (fi.def->span.startLine == b.positionMap["src/index.mm:1:0"].startLine)
      found = true;
  }
  CHECK(found);
}

TEST_CASE("stubbify composes with bundling") {
  TempDir dir("compose");
  writePackage(
      dir.path,
      {{"minipkg.json", kManifest},
       {"src/index.mm",
        "import { fmt } from \"./fmt\";\n"
        "export function hot(n) { return fmt(n); }\n"
        "export function cold(n) {\n"
        "  let total = 0;\n"
        "  let i = 0;\n"
        "  while (i < n) { total = total + (i * 13 + 5); i = i + 1; }\n"
        "  return \"cold:\" + str(total) + \":\" + fmt(total);\n"
        "}\n"},
       {"src/fmt.mm", "export function fmt(v) { return \"<\" + str(v) + "
                      "\">\"; }\n"},
       {"tests/t1.mm", "import { hot } from \"../src/index\";\n"
                       "assert(hot(3) == \"<3>\", \"hot\");\n"}});
  auto pkg = PackageHandle::load(dir.path);
  Bundle b = bundle(pkg);

  TempDir bdir("compose-bundle");
  writeBundlePkg(bdir, b,
                 "import { hot, cold } from \"../bundle\";\n"
                 "assert(hot(3) == \"<3>\", \"hot\");\n"
                 "assert(cold(2) == \"cold:23:<23>\", \"cold\");\n");
  TestReport plain = interp::runTests(PackageHandle::load(bdir.path),
                                      RuntimeConfig{});
  CAPTURE(b.text);
  REQUIRE(plain.passFailVector() == "P");

  auto rs = callgraph::staticReachability(pkg);
  TempDir sdir("compose-stubbed");
  stubbify::StubbifyOptions opts;
  opts.outDir = sdir.path;
  opts.force = true;
  auto sp = stubbifyBundle(b, bdir.path, rs, opts);
  // cold survived shaking (entry export) but is untested: stubbed
  REQUIRE(sp.plan.functionStubs.size() >= 1);
  CHECK(sp.plan.fileStubs.empty());
  CHECK(sp.size.stubbedBytes < sp.size.originalBytes);

  TestReport stubbed = interp::runTests(PackageHandle::load(sdir.path),
                                        RuntimeConfig{});
  CAPTURE(stubbed.toJson());
  CHECK(stubbed.passFailVector() == plain.passFailVector());
  bool expanded = false;
  for (const auto& e : stubbed.expansionEvents)
    expanded = expanded || e.kind == "function";
  CHECK(expanded);
}

TEST_CASE("functions outside the position map are never stubbed") {
  TempDir dir("mapless");
  writePackage(
      dir.path,
      {{"minipkg.json", kManifest},
       {"src/index.mm", "export function visible(n) { return n; }\n"},
       {"tests/t1.mm", "import { visible } from \"../src/index\";\n"
                       "visible(1);\n"}});
  auto pkg = PackageHandle::load(dir.path);
  Bundle b = bundle(pkg);
  // Simulate a bundler-introduced wrapper: drop the map entry so the
  // function cannot be traced back to the original program.
  Bundle gapped = b;
  gapped.positionMap.clear();
  gapped.kept.clear();

  TempDir bdir("mapless-bundle");
  writeBundlePkg(bdir, gapped, "let nothing = 0;\n");
  callgraph::ReachabilitySet rs;  // nothing reachable at all
  rs.mode = "static";
  TempDir sdir("mapless-stubbed");
  stubbify::StubbifyOptions opts;
  opts.outDir = sdir.path;
  opts.force = true;
  auto sp = stubbifyBundle(gapped, bdir.path, rs, opts);
  CHECK(sp.plan.functionStubs.empty());
}

TEST_CASE("a kept uid missing from the map is a map gap") {
  TempDir dir("gap");
  writePackage(
      dir.path,
      {{"minipkg.json", kManifest},
       {"src/index.mm", "export function visible(n) { return n; }\n"},
       {"tests/t1.mm", "import { visible } from \"../src/index\";\n"
                       "visible(1);\n"}});
  auto pkg = PackageHandle::load(dir.path);
  Bundle b = bundle(pkg);
  b.positionMap.erase("src/index.mm:1:0");  // corrupt it
  TempDir bdir("gap-bundle");
  writeBundlePkg(bdir, b, "let nothing = 0;\n");
  auto rs = callgraph::staticReachability(pkg);
  stubbify::StubbifyOptions opts;
  opts.outDir = bdir.path / "stubbed";
  CHECK_THROWS_AS(stubbifyBundle(b, bdir.path, rs, opts), MapGap);
}
