#pragma once

#include <map>
#include <string>
#include <vector>

#include "stubshrink/ast.hpp"
#include "stubshrink/callgraph.hpp"
#include "stubshrink/interp.hpp"
#include "stubshrink/report.hpp"

namespace stubshrink::stubbify {

using callgraph::ReachabilitySet;
using interp::GuardPolicy;
using interp::PackageHandle;
namespace fs = std::filesystem;

struct StubPlanOptions {
  GuardPolicy::Mode guardMode = GuardPolicy::Mode::Off;
  bool forceAll = false;    // bypass the too-small filter
  bool noFileStubs = false; // single-file bundles take function stubs only
};

// Classification of every analyzed file and function. A file is stubbed
// whole exactly when none of its functions is reachable and its top level
// was never reached; otherwise its unreachable functions are stubbed
// individually.
struct StubPlan {
  std::vector<std::string> fileStubs;           // paths
  std::vector<std::string> functionStubs;       // uids
  std::vector<std::string> skippedTooSmall;     // uids or paths
  std::vector<std::string> skippedAnnotated;    // uids or paths
  std::vector<std::string> skippedUnstubbable;  // constructor uids
  GuardPolicy::Mode guardMode = GuardPolicy::Mode::Off;
};

StubPlan planStubs(const PackageHandle& pkg, const ReachabilitySet& rs,
                   const StubPlanOptions& opts);

/// Stub body text for one function, by kind. Named stubs reassign their own
/// binding; methods reassign through `this`; accessors go through
/// __lookupGetter__/__defineGetter__ (and the setter pair); anonymous stubs
/// cache the code string and re-evaluate it on every call. Throws
/// Unstubbable for constructors.
std::string emitFunctionStub(const lang::FunctionDef& def,
                             const std::string& uid);

struct FileStub {
  std::string stubText;    // replaces the file
  std::string storedText;  // CodeStore entry, evaluated on expansion
};

/// File-level stub. esm files keep their imports verbatim and re-export from
/// the eval result; cjs and plain files reduce to a single eval line whose
/// stored body is the unchanged original.
FileStub emitFileStub(const lang::Module& m);

/// Stored text for one function: the original definition as an anonymous
/// function expression statement (eval of it yields the function value).
std::string storedFunctionText(const lang::FunctionDef& def);

/// Wraps every call in the stored text with the guard intrinsics:
/// `E(args)` becomes `__guardCheck(E)(args)` and `E.k(args)` becomes
/// `__guardCall(E, "k", [args])` (computed keys keep their key expression).
std::string applyGuards(const std::string& storedText,
                        const GuardPolicy& policy);

struct StubbifyOptions {
  fs::path outDir;
  bool force = false;
  GuardPolicy::Mode guard = GuardPolicy::Mode::Off;
  bool forceAll = false;
  bool noFileStubs = false;
};

struct StubbedPackage {
  fs::path outDir;
  StubPlan plan;
  report::SizeReport size;
};

/// Writes the transformed package: stub-substituted canonical sources, the
/// CodeStore (stubs.store.json), verbatim tests and dev dependencies, and
/// manifests carrying the `stubbed` marker. Nothing is written if any step
/// fails.
StubbedPackage stubbifyPackage(const PackageHandle& pkg,
                               const ReachabilitySet& rs,
                               const StubbifyOptions& opts);

}  // namespace stubshrink::stubbify
