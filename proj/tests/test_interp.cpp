#include <doctest.h>

#include <sstream>

#include "stubshrink/errors.hpp"
#include "stubshrink/interp.hpp"
#include "test_support.hpp"

using namespace stubshrink;
using namespace stubshrink::interp;
using testsupport::TempDir;
using testsupport::writePackage;

namespace {

const char* kManifest =
    R"({"name":"t","version":"0.0.1","main":"src/index.mm",
        "tests":["tests/t1.mm"],"dependencies":{},"devDependencies":{}})";

PackageHandle makePkg(
    const TempDir& dir,
    const std::vector<std::pair<std::string, std::string>>& files) {
  writePackage(dir.path, files);
  return PackageHandle::load(dir.path);
}

}  // namespace

TEST_CASE("module exports: esm named and default") {
  TempDir dir("esm");
  auto pkg = makePkg(
      dir, {{"minipkg.json", kManifest},
            {"src/index.mm", "export function foo() { return 1; }\n"
                             "export default 7;\n"},
            {"tests/t1.mm",
             "import { foo } from \"../src/index\";\n"
             "import d from \"../src/index\";\n"
             "assert(foo() == 1, \"foo\");\n"
             "assert(d == 7, \"default\");\n"}});
  TestReport r = runTests(pkg, RuntimeConfig{});
  CHECK(r.passFailVector() == "P");
}

TEST_CASE("module exports: cjs exports object") {
  TempDir dir("cjs");
  auto pkg = makePkg(
      dir, {{"minipkg.json", kManifest},
            {"src/index.mm", "exports.a = 1;\nexports.b = 2;\n"},
            {"tests/t1.mm", "let m = require(\"../src/index\");\n"
                            "assert(m.a == 1 && m.b == 2, \"exports\");\n"
                            "let again = require(\"../src/index\");\n"
                            "assert(again == m, \"single instance\");\n"}});
  TestReport r = runTests(pkg, RuntimeConfig{});
  CHECK(r.passFailVector() == "P");
}

TEST_CASE("import cycles are an error") {
  TempDir dir("cycle");
  auto pkg = makePkg(
      dir, {{"minipkg.json", kManifest},
            {"src/index.mm", "import { a } from \"./a\";\n"
                             "export function top() { return a; }\n"},
            {"src/a.mm", "import { b } from \"./b\";\nexport { b as a };\n"},
            {"src/b.mm", "import { a } from \"./a\";\nexport { a as b };\n"},
            {"tests/t1.mm", "import { top } from \"../src/index\";\n"
                            "top();\n"}});
  TestReport r = runTests(pkg, RuntimeConfig{});
  CHECK(r.passFailVector() == "F");
  REQUIRE(r.tests[0].error.has_value());
  CHECK(r.tests[0].error->find("CycleError") != std::string::npos);
}

TEST_CASE("eval semantics") {
  TempDir dir("eval");
  auto pkg = makePkg(dir, {{"minipkg.json", kManifest},
                           {"src/index.mm", "let unused = 0;\n"},
                           {"tests/t1.mm", "assert(true, \"stub\");\n"}});
  Interpreter in(pkg, RuntimeConfig{});

  CHECK(in.evalInScope("1 + 2;", nullptr).num() == 3);
  Value fn = in.evalInScope("function(a) { return a; };", nullptr);
  CHECK(fn.isFunction());
  CHECK_THROWS_AS(in.evalInScope("import { a } from \"./m\";", nullptr),
                  MiniError);
  try {
    in.evalInScope("export default 1;", nullptr);
    CHECK(false);
  } catch (const MiniError& e) {
    CHECK(e.kind == MiniError::Kind::EvalImport);
  }
  // eval sees the caller's lexical scope through the env chain
  EnvPtr env = EnvData::child(nullptr);
  env->declare("forty", Value::num(40));
  // parent-less env has no builtins; make one rooted in a real scope
  Value v = in.evalInScope("forty;", env);
  CHECK(v.num() == 40);
}

TEST_CASE("this binding: methods, detached calls, apply") {
  TempDir dir("this");
  auto pkg = makePkg(
      dir,
      {{"minipkg.json", kManifest},
       {"src/index.mm", "let unused = 0;\n"},
       {"tests/t1.mm",
        "let o = { v: 3, m: function() { return this.v; } };\n"
        "assert(o.m() == 3, \"method this\");\n"
        "function f() { return arguments[1]; }\n"
        "assert(f.apply(null, [10, 20]) == 20, \"apply\");\n"
        "function g2(a, b, c) { return [a, b, c]; }\n"
        "let got = g2(1);\n"
        "assert(got[1] == null && got[2] == null, \"missing params\");\n"}});
  TestReport r = runTests(pkg, RuntimeConfig{});
  CAPTURE(r.toJson());
  CHECK(r.passFailVector() == "P");
}

TEST_CASE("detached method loses its receiver") {
  // Documents detached-method semantics: this becomes null and member
  // access on null is a runtime error.
  TempDir dir("detached");
  auto pkg = makePkg(
      dir, {{"minipkg.json", kManifest},
            {"src/index.mm", "let unused = 0;\n"},
            {"tests/t1.mm",
             "let o = { v: 3, m: function() { return this.v; } };\n"
             "let g = o.m;\n"
             "g();\n"}});
  TestReport r = runTests(pkg, RuntimeConfig{});
  CHECK(r.passFailVector() == "F");
  REQUIRE(r.tests[0].error.has_value());
  CHECK(r.tests[0].error->find("RuntimeError") != std::string::npos);
}

TEST_CASE("getters, setters and accessor intrinsics") {
  TempDir dir("accessors");
  auto pkg = makePkg(
      dir,
      {{"minipkg.json", kManifest},
       {"src/index.mm", "let unused = 0;\n"},
       {"tests/t1.mm",
        "class A {\n"
        "  constructor(v) { this.v = v; }\n"
        "  get prop() { return this.v * 2; }\n"
        "  set prop(x) { this.v = x + 1; }\n"
        "}\n"
        "let a = new A(5);\n"
        "assert(a.prop == 10, \"getter\");\n"
        "a.prop = 9;\n"
        "assert(a.v == 10, \"setter\");\n"
        "assert(a.__lookupGetter__(\"prop\") != null, \"lookupGetter\");\n"
        "assert(a.__lookupGetter__(\"nope\") == null, \"lookupGetter miss\");\n"
        "let o = {};\n"
        "o.__defineGetter__(\"g\", function() { return 42; });\n"
        "assert(o.g == 42, \"defineGetter\");\n"
        "o.__defineSetter__(\"s\", function(v) { this.seen = v; });\n"
        "o.s = 7;\n"
        "assert(o.seen == 7, \"defineSetter\");\n"}});
  TestReport r = runTests(pkg, RuntimeConfig{});
  CAPTURE(r.toJson());
  CHECK(r.passFailVector() == "P");
}

TEST_CASE("dangerous builtins only log") {
  TempDir dir("dangerous");
  auto pkg = makePkg(
      dir, {{"minipkg.json", kManifest},
            {"src/index.mm", "let unused = 0;\n"},
            {"tests/t1.mm", "let r = exec(\"rm -rf /\");\n"
                            "assert(r == \"exec:rm -rf /\", \"marker\");\n"
                            "execSync(\"ls\");\n"
                            "spawn(\"cat\");\n"}});
  TestReport r = runTests(pkg, RuntimeConfig{});
  CHECK(r.passFailVector() == "P");
  REQUIRE(r.sideEffectLog.size() == 3);
  CHECK(r.sideEffectLog[0] == "exec:rm -rf /");
  CHECK(r.sideEffectLog[1] == "execSync:ls");
  CHECK(r.sideEffectLog[2] == "spawn:cat");
}

TEST_CASE("failing assert does not stop the suite") {
  TempDir dir("failing");
  writePackage(
      dir.path,
      {{"minipkg.json",
        R"({"name":"t","version":"0.0.1","main":"src/index.mm",
            "tests":["tests/t1.mm","tests/t2.mm"],"dependencies":{},
            "devDependencies":{}})"},
       {"src/index.mm", "let unused = 0;\n"},
       {"tests/t1.mm", "assert(false, \"boom\");\nassert(true, \"after\");\n"},
       {"tests/t2.mm", "nonexistent();\n"}});
  auto pkg = PackageHandle::load(dir.path);
  TestReport r = runTests(pkg, RuntimeConfig{});
  CHECK(r.passFailVector() == "FF");
  CHECK(r.tests[0].failures == std::vector<std::string>{"boom"});
  CHECK(r.tests[1].error.has_value());
}

TEST_CASE("determinism and hook transparency") {
  TempDir dir("determinism");
  auto pkg = makePkg(
      dir, {{"minipkg.json", kManifest},
            {"src/index.mm",
             "export function work(n) {\n"
             "  let acc = 0;\n"
             "  let i = 0;\n"
             "  while (i < n) { acc = acc + i * i; i = i + 1; }\n"
             "  exec(\"step \" + str(acc));\n"
             "  return acc;\n"
             "}\n"},
            {"tests/t1.mm", "import { work } from \"../src/index\";\n"
                            "assert(work(10) == 285, \"sum\");\n"}});
  TestReport a = runTests(pkg, RuntimeConfig{});
  TestReport b = runTests(pkg, RuntimeConfig{});
  CHECK(a.passFailVector() == b.passFailVector());
  CHECK(a.sideEffectLog == b.sideEffectLog);

  RuntimeConfig hooked;
  int enters = 0;
  hooked.hooks.onFunctionEnter = [&](const std::string&) { ++enters; };
  TestReport c = runTests(pkg, hooked);
  CHECK(c.passFailVector() == a.passFailVector());
  CHECK(c.sideEffectLog == a.sideEffectLog);
  CHECK(enters > 0);
}

TEST_CASE("manifest validation") {
  TempDir dir("badmanifest");
  writePackage(dir.path, {{"minipkg.json", "{\"name\":\"x\"}"}});
  CHECK_THROWS_AS(PackageHandle::load(dir.path), ManifestError);

  TempDir dir2("missingdep");
  writePackage(
      dir2.path,
      {{"minipkg.json",
        R"({"name":"t","version":"1","main":"src/index.mm","tests":[],
            "dependencies":{"nope":"deps/nope"},"devDependencies":{}})"},
       {"src/index.mm", "let a = 1;\n"}});
  CHECK_THROWS_AS(PackageHandle::load(dir2.path), MissingDependency);
}

TEST_CASE("unknown bare specifier is a missing dependency") {
  TempDir dir("badspec");
  auto pkg = makePkg(dir, {{"minipkg.json", kManifest},
                           {"src/index.mm", "let unused = 0;\n"},
                           {"tests/t1.mm", "let m = require(\"nope\");\n"}});
  TestReport r = runTests(pkg, RuntimeConfig{});
  CHECK(r.passFailVector() == "F");
  CHECK(r.tests[0].error->find("nope") != std::string::npos);
}

TEST_CASE("dependency resolution through the manifest map") {
  TempDir dir("deps");
  writePackage(
      dir.path,
      {{"minipkg.json",
        R"({"name":"t","version":"1","main":"src/index.mm",
            "tests":["tests/t1.mm"],
            "dependencies":{"semverish":"deps/semverish"},
            "devDependencies":{}})"},
       {"src/index.mm", "let unused = 0;\n"},
       {"deps/semverish/minipkg.json",
        R"({"name":"semverish","version":"1","main":"lib/main.mm",
            "tests":[],"dependencies":{},"devDependencies":{}})"},
       {"deps/semverish/lib/main.mm", "exports.ok = true;\n"},
       {"tests/t1.mm", "let s = require(\"semverish\");\n"
                       "assert(s.ok, \"dep main resolved\");\n"}});
  auto pkg = PackageHandle::load(dir.path);
  TestReport r = runTests(pkg, RuntimeConfig{});
  CHECK(r.passFailVector() == "P");
}

TEST_CASE("strict runtime type errors") {
  TempDir dir("strict");
  auto pkg = makePkg(
      dir, {{"minipkg.json", kManifest},
            {"src/index.mm", "let unused = 0;\n"},
            {"tests/t1.mm",
             "assert(1 / 0 > 1e+300, \"ieee division\");\n"
             "assert(\"a\" + \"b\" == \"ab\", \"concat\");\n"
             "assert(!(\"1\" == 1), \"no cross-type equality\");\n"
             "assert(str(12.5) == \"12.5\", \"str\");\n"
             "assert(len(\"abc\") == 3 && len([1, 2]) == 2, \"len\");\n"
             "let ks = keys({ a: 1, b: 2 });\n"
             "assert(ks[0] == \"a\" && ks[1] == \"b\", \"keys order\");\n"
             "assert([9, 8][5] == null, \"index out of range reads null\");\n"}});
  TestReport r = runTests(pkg, RuntimeConfig{});
  CAPTURE(r.toJson());
  CHECK(r.passFailVector() == "P");

  TempDir dir2("stricterr");
  auto pkg2 = makePkg(dir2, {{"minipkg.json", kManifest},
                             {"src/index.mm", "let unused = 0;\n"},
                             {"tests/t1.mm", "let x = \"s\" + 1;\n"}});
  TestReport r2 = runTests(pkg2, RuntimeConfig{});
  CHECK(r2.passFailVector() == "F");
}

TEST_CASE("test report serializes with stable keys") {
  TempDir dir("report");
  auto pkg = makePkg(dir, {{"minipkg.json", kManifest},
                           {"src/index.mm", "let unused = 0;\n"},
                           {"tests/t1.mm", "assert(true, \"ok\");\n"}});
  TestReport r = runTests(pkg, RuntimeConfig{});
  std::string j = r.toJson();
  CHECK(j.find("\"expansionEvents\"") < j.find("\"guardEvents\""));
  CHECK(j.find("\"guardEvents\"") < j.find("\"guardExit\""));
  CHECK(j.find("\"sideEffectLog\"") < j.find("\"tests\""));
}
