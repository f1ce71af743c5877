#pragma once

#include <set>
#include <string>
#include <vector>

#include "stubshrink/ast.hpp"
#include "stubshrink/package.hpp"

namespace stubshrink::callgraph {

struct Warning {
  std::string kind;  // "eval" | "computed-member" | "non-literal-specifier"
  std::string file;
  int line = 0;
  int col = 0;
  std::string detail;
};

struct ReachabilitySet {
  std::string mode;  // "static" | "dynamic"
  std::vector<std::string> entryPoints;
  std::set<std::string> reachableFiles;      // package-relative paths
  std::set<std::string> reachableFunctions;  // uids
  std::vector<Warning> warnings;             // static mode; not serialized

  std::string toJson() const;
  static ReachabilitySet fromJson(const std::string& text);
};

/// Function- and file-level coverage from an instrumented run of the test
/// suite. Execution ground truth: a uid is present iff its body was entered.
/// Warns (to stderr) when the suite does not pass; the set is produced anyway.
ReachabilitySet dynamicReachability(const interp::PackageHandle& pkg);

/// Worklist fixpoint over imports, lexical references, and name-keyed member
/// accesses, seeded from the test modules. eval, computed member access and
/// non-literal specifiers deliberately resolve to nothing and produce
/// warnings. `shuffleSeed` perturbs worklist order (the result is
/// order-independent; tests exercise that).
ReachabilitySet staticReachability(const interp::PackageHandle& pkg,
                                   unsigned shuffleSeed = 0);

}  // namespace stubshrink::callgraph
