#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stubshrink/package.hpp"
#include "stubshrink/value.hpp"

namespace stubshrink::interp {

struct GuardPolicy {
  enum class Mode { Off, Warn, Exit };
  Mode mode = Mode::Off;
  std::vector<std::string> dangerousNames = {"eval", "exec", "execSync",
                                             "spawn"};
};

GuardPolicy::Mode parseGuardMode(const std::string& s);
std::string guardModeName(GuardPolicy::Mode m);

struct Hooks {
  std::function<void(const std::string& uid)> onFunctionEnter;
  std::function<void(const std::string& kind, const std::string& id,
                     std::size_t bytes)>
      onStubExpansion;
  std::function<void(const std::string& name)> onGuardEvent;
};

// Hooks are observation-only; attaching them never changes evaluation.
struct RuntimeConfig {
  GuardPolicy guardPolicy;
  // When false, the guard mode baked into a stubbed package's manifest wins;
  // guardPolicy.mode then only applies to packages without a marker.
  bool guardPolicyOverridesPackage = false;
  std::optional<fs::path> codeStorePath;  // overrides the root package store
  Hooks hooks;
};

struct TestCase {
  std::string path;  // relative to the package root
  bool passed = false;
  std::vector<std::string> failures;     // assert messages
  std::optional<std::string> error;      // top-level runtime error
};

struct ExpansionEvent {
  std::string kind;  // "file" | "function"
  std::string id;    // path or uid
  std::size_t bytesLoaded = 0;
  bool cacheHit = false;
};

struct TestReport {
  std::vector<TestCase> tests;
  double wallTimeMs = 0;
  std::vector<std::string> sideEffectLog;
  std::vector<ExpansionEvent> expansionEvents;
  std::vector<std::string> guardEvents;
  bool guardExit = false;

  bool allPassed() const {
    for (const auto& t : tests)
      if (!t.passed) return false;
    return !guardExit;
  }
  // "P" / "F" per test, in order; the differential oracle compares these.
  std::string passFailVector() const {
    std::string s;
    for (const auto& t : tests) s += t.passed ? 'P' : 'F';
    return s;
  }
  std::string toJson() const;  // stable key order
};

struct ModuleRecord {
  fs::path absPath;
  std::string relPath;
  const Package* owner = nullptr;
  lang::ModulePtr ast;
  EnvPtr env;
  std::vector<std::pair<std::string, CellPtr>> esmExports;  // document order
  Value cjsExports;
  Value requireView;  // memoized object handed to require()
  bool hasRequireView = false;
  bool evaluated = false;
  bool evaluating = false;
};

struct StubRuntime {
  const Package* pkg = nullptr;
  bool guarded = false;
  GuardPolicy::Mode mode = GuardPolicy::Mode::Off;
  std::map<std::string, std::string> entries;
  std::map<std::string, Value> stubCache;  // getStub/setStub strings
  Value stubsObject;
};

// One interpreter instance is strictly single-threaded and owns its module
// cache; separate instances share only read-only sources and code stores.
class Interpreter {
 public:
  Interpreter(const PackageHandle& packages, const RuntimeConfig& config);
  ~Interpreter();

  // Executes the module's top level once (memoized) and returns its record.
  ModuleRecord& runModule(const fs::path& absPath);

  // The builtin `eval`, callable from the host for tests: evaluates a
  // statement list in a child scope of `env` (the globals when null).
  Value evalInScope(const std::string& code, EnvPtr env);

  Value callValue(const Value& fn, Value thisVal, std::vector<Value> args);

  // Builds a plain snapshot Object of a module's exports (what require()
  // returns for esm modules).
  Value exportsView(ModuleRecord& rec);

  const std::vector<std::string>& sideEffectLog() const { return sideEffectLog_; }
  const std::vector<std::string>& guardEvents() const { return guardEvents_; }
  struct RawExpansion {
    std::string kind;
    std::string id;
    std::size_t bytes;
  };
  const std::vector<RawExpansion>& rawExpansions() const { return rawExpansions_; }

  std::vector<std::string>* assertSink = nullptr;  // installed by runTests
  std::ostream* printSink = nullptr;               // defaults to std::cout

  // Fires when a module's top level begins executing; used by the dynamic
  // call graph (kept out of RuntimeConfig, whose hook set is fixed).
  std::function<void(const std::string& relPath)> onModuleExecuted;

  struct Frame;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::vector<std::string> sideEffectLog_;
  std::vector<std::string> guardEvents_;
  std::vector<RawExpansion> rawExpansions_;
  friend struct Impl;
};

/// Runs every manifest test in its own interpreter with a fresh module cache.
/// Assertion failures and top-level errors mark the test failed without
/// stopping the suite; a guard exit stops everything. `onModuleExecuted`
/// observes top-level module execution (dynamic coverage feeds on it).
TestReport runTests(
    const PackageHandle& pkg, const RuntimeConfig& config,
    const std::function<void(const std::string&)>& onModuleExecuted = {});

}  // namespace stubshrink::interp
