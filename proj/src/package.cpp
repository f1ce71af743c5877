#include "stubshrink/package.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "stubshrink/errors.hpp"

namespace stubshrink::interp {

using nlohmann::json;

namespace {

std::string readFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ManifestError("cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

std::vector<std::pair<std::string, std::string>> readDepMap(
    const json& j, const char* key) {
  std::vector<std::pair<std::string, std::string>> out;
  if (!j.contains(key)) return out;
  for (const auto& [name, dir] : j.at(key).items())
    out.emplace_back(name, dir.get<std::string>());
  return out;
}

}  // namespace

PackageManifest parseManifest(const std::string& jsonText,
                              const std::string& context) {
  json j;
  try {
    j = json::parse(jsonText);
  } catch (const json::exception& e) {
    throw ManifestError(context + ": invalid manifest JSON: " + e.what());
  }
  if (!j.is_object()) throw ManifestError(context + ": manifest is not an object");
  PackageManifest m;
  try {
    m.name = j.value("name", "");
    m.version = j.value("version", "");
    m.main = j.value("main", "");
    if (j.contains("tests"))
      m.tests = j.at("tests").get<std::vector<std::string>>();
    m.dependencies = readDepMap(j, "dependencies");
    m.devDependencies = readDepMap(j, "devDependencies");
    if (j.contains("stubbed")) {
      const json& s = j.at("stubbed");
      m.stubbed = true;
      m.guardMode = s.value("guardMode", "off");
      m.codeStore = s.value("codeStore", "stubs.store.json");
    }
  } catch (const json::exception& e) {
    throw ManifestError(context + ": bad manifest field: " + e.what());
  }
  if (m.name.empty()) throw ManifestError(context + ": manifest missing name");
  if (m.main.empty()) throw ManifestError(context + ": manifest missing main");
  return m;
}

std::string manifestToJson(const PackageManifest& m) {
  json j;
  j["name"] = m.name;
  j["version"] = m.version;
  j["main"] = m.main;
  j["tests"] = m.tests;
  j["dependencies"] = json::object();
  for (const auto& [k, v] : m.dependencies) j["dependencies"][k] = v;
  j["devDependencies"] = json::object();
  for (const auto& [k, v] : m.devDependencies) j["devDependencies"][k] = v;
  if (m.stubbed) {
    j["stubbed"] = {{"guardMode", m.guardMode}, {"codeStore", m.codeStore}};
  }
  return j.dump(2) + "\n";
}

PackageHandle PackageHandle::load(const fs::path& dir) {
  PackageHandle handle;
  std::map<fs::path, Package*> byDir;

  // Dependency edges may form diamonds; each directory loads once.
  auto loadDir = [&](const fs::path& d, bool dev, auto&& self) -> Package* {
    fs::path norm = fs::weakly_canonical(d);
    if (auto it = byDir.find(norm); it != byDir.end()) {
      if (!dev) it->second->isDev = false;
      return it->second;
    }
    fs::path mf = norm / "minipkg.json";
    if (!fs::exists(mf))
      throw ManifestError("no minipkg.json in " + norm.string());
    auto pkg = std::make_unique<Package>();
    pkg->dir = norm;
    pkg->manifest = parseManifest(readFile(mf), mf.string());
    pkg->isDev = dev;
    Package* raw = pkg.get();
    byDir[norm] = raw;
    handle.packages_.push_back(std::move(pkg));
    for (const auto& [name, rel] : raw->manifest.dependencies) {
      fs::path depDir = norm / rel;
      if (!fs::exists(depDir / "minipkg.json"))
        throw MissingDependency("dependency '" + name + "' of " +
                                raw->manifest.name + " not found at " +
                                depDir.string());
      self(depDir, dev, self);
    }
    for (const auto& [name, rel] : raw->manifest.devDependencies) {
      fs::path depDir = norm / rel;
      if (!fs::exists(depDir / "minipkg.json"))
        throw MissingDependency("devDependency '" + name + "' of " +
                                raw->manifest.name + " not found at " +
                                depDir.string());
      self(depDir, true, self);
    }
    return raw;
  };

  if (!fs::exists(dir))
    throw ManifestError("package directory does not exist: " + dir.string());
  handle.root_ = loadDir(dir, false, loadDir);

  for (const fs::path& t : handle.testFiles()) {
    if (!fs::exists(t))
      throw ManifestError("manifest test file does not exist: " + t.string());
  }
  return handle;
}

fs::path PackageHandle::resolve(const std::string& spec,
                                const fs::path& fromFile,
                                const Package& owner) const {
  if (spec.rfind("./", 0) == 0 || spec.rfind("../", 0) == 0) {
    fs::path p = fromFile.parent_path() / (spec + ".mm");
    return p.lexically_normal();
  }
  auto findDep = [&](const std::vector<std::pair<std::string, std::string>>&
                         deps) -> const std::string* {
    for (const auto& [name, rel] : deps)
      if (name == spec) return &rel;
    return nullptr;
  };
  const std::string* rel = findDep(owner.manifest.dependencies);
  if (!rel) rel = findDep(owner.manifest.devDependencies);
  if (!rel)
    throw MissingDependency("unknown specifier \"" + spec + "\" in package " +
                            owner.manifest.name);
  fs::path depDir = fs::weakly_canonical(owner.dir / *rel);
  const Package* dep = nullptr;
  for (const auto& p : packages_)
    if (p->dir == depDir) dep = p.get();
  if (!dep)
    throw MissingDependency("dependency \"" + spec + "\" not loaded");
  return (dep->dir / dep->manifest.main).lexically_normal();
}

const Package* PackageHandle::ownerOf(const fs::path& file) const {
  fs::path norm = file.lexically_normal();
  const Package* best = nullptr;
  std::size_t bestLen = 0;
  for (const auto& p : packages_) {
    std::string prefix = p->dir.generic_string() + "/";
    std::string f = norm.generic_string();
    if (f.rfind(prefix, 0) == 0 && prefix.size() > bestLen) {
      best = p.get();
      bestLen = prefix.size();
    }
  }
  return best;
}

std::string PackageHandle::relPath(const fs::path& file) const {
  return fs::path(file).lexically_normal()
      .lexically_relative(root_->dir)
      .generic_string();
}

fs::path PackageHandle::absPath(const std::string& rel) const {
  return (root_->dir / rel).lexically_normal();
}

bool PackageHandle::isTestFile(const fs::path& file) const {
  const Package* owner = ownerOf(file);
  if (!owner) return false;
  fs::path norm = file.lexically_normal();
  for (const auto& t : owner->manifest.tests)
    if ((owner->dir / t).lexically_normal() == norm) return true;
  // Convention: everything under a package's tests/ directory is test code.
  std::string rel = norm.lexically_relative(owner->dir).generic_string();
  return rel.rfind("tests/", 0) == 0;
}

std::vector<AnalyzedFile> PackageHandle::analyzedFiles() const {
  std::vector<AnalyzedFile> out;
  for (const auto& p : packages_) {
    if (p->isDev) continue;
    if (!fs::exists(p->dir)) continue;
    for (auto it = fs::recursive_directory_iterator(p->dir);
         it != fs::recursive_directory_iterator(); ++it) {
      if (!it->is_regular_file()) continue;
      const fs::path& f = it->path();
      if (f.extension() != ".mm") continue;
      fs::path norm = f.lexically_normal();
      if (ownerOf(norm) != p.get()) continue;  // belongs to a nested package
      if (isTestFile(norm)) continue;
      AnalyzedFile af;
      af.absPath = norm;
      af.relPath = relPath(norm);
      af.owner = p.get();
      out.push_back(std::move(af));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const AnalyzedFile& a, const AnalyzedFile& b) {
              return a.relPath < b.relPath;
            });
  return out;
}

std::vector<fs::path> PackageHandle::testFiles() const {
  std::vector<fs::path> out;
  for (const auto& t : root_->manifest.tests)
    out.push_back((root_->dir / t).lexically_normal());
  return out;
}

}  // namespace stubshrink::interp
