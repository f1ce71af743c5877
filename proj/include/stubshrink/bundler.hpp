#pragma once

#include <map>
#include <string>
#include <vector>

#include "stubshrink/ast.hpp"
#include "stubshrink/callgraph.hpp"
#include "stubshrink/stubbify.hpp"

namespace stubshrink::bundler {

using callgraph::ReachabilitySet;
using interp::PackageHandle;
namespace fs = std::filesystem;

struct Bundle {
  std::string text;          // single-file MiniMod source ("bundle.mm")
  std::string entry;         // original entry path
  // Original uid -> its span in the bundle text; covers every function that
  // survived into the bundle.
  std::map<std::string, lang::Span> positionMap;
  std::vector<std::string> removed;  // uids dropped by tree-shaking (or by
                                     // falling outside the import closure)
  std::vector<std::string> kept;

  std::string mapToJson() const;
  std::string shakeReportToJson() const;
};

/// Concatenates the entry's import closure in reverse topological order,
/// renaming every top-level binding to `name$<moduleIndex>` and rewiring
/// imports/requires to the renamed bindings. cjs modules are wrapped with a
/// bundle-local module object and included whole; esm/plain modules are
/// tree-shaken: top-level function/class declarations kept only if
/// transitively referenced from the entry's exports or any retained
/// statement. Throws BundleError on cycles, non-literal specifiers, and cjs
/// entries.
Bundle bundle(const PackageHandle& pkg);

/// Translates a reachability set computed on the ORIGINAL package through
/// the position map and stubbifies the bundle as a one-file package
/// (function stubs only). Bundle functions without a map entry are never
/// stubbed. Throws MapGap when a kept uid lacks a map entry.
stubbify::StubbedPackage stubbifyBundle(const Bundle& b,
                                        const fs::path& bundlePkgDir,
                                        const ReachabilitySet& rs,
                                        const stubbify::StubbifyOptions& opts);

}  // namespace stubshrink::bundler
