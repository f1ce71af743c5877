#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace stubshrink::interp {

namespace fs = std::filesystem;

// Parsed minipkg.json. Dependency map values are directories relative to the
// package root. The `stubbed` marker block is written by the stub transform.
struct PackageManifest {
  std::string name;
  std::string version;
  std::string main;
  std::vector<std::string> tests;
  std::vector<std::pair<std::string, std::string>> dependencies;
  std::vector<std::pair<std::string, std::string>> devDependencies;

  bool stubbed = false;
  std::string guardMode = "off";         // off | warn | exit
  std::string codeStore;                 // relative path of the store file
};

PackageManifest parseManifest(const std::string& jsonText,
                              const std::string& context);
std::string manifestToJson(const PackageManifest& m);

struct Package {
  fs::path dir;  // absolute, normalized
  PackageManifest manifest;
  bool isDev = false;  // reached only through devDependencies
};

struct AnalyzedFile {
  fs::path absPath;
  std::string relPath;       // relative to the root package dir, '/' separators
  const Package* owner = nullptr;
};

// A loaded package tree: the root package plus every transitively reachable
// dependency (production and dev). Module resolution and file enumeration
// both live here; parsing, running, analysis and stubbification all consume
// this one view of the tree.
class PackageHandle {
 public:
  static PackageHandle load(const fs::path& dir);

  const Package& root() const { return *root_; }
  const std::vector<std::unique_ptr<Package>>& packages() const {
    return packages_;
  }

  // Resolves a module specifier. Relative specifiers resolve against the
  // importing file's directory with ".mm" appended; bare names resolve
  // through the owning package's dependencies, then devDependencies.
  fs::path resolve(const std::string& spec, const fs::path& fromFile,
                   const Package& owner) const;

  const Package* ownerOf(const fs::path& file) const;

  std::string relPath(const fs::path& file) const;
  fs::path absPath(const std::string& rel) const;

  // Source files subject to analysis and stubbification: the root package
  // and its transitive production dependencies, excluding test files and
  // anything under a package's tests/ directory. Sorted by relPath.
  std::vector<AnalyzedFile> analyzedFiles() const;

  std::vector<fs::path> testFiles() const;  // root manifest tests, absolute

  bool isTestFile(const fs::path& file) const;

 private:
  const Package* root_ = nullptr;
  std::vector<std::unique_ptr<Package>> packages_;
};

}  // namespace stubshrink::interp
