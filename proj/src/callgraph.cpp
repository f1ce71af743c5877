#include "stubshrink/callgraph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <random>

#include <json.hpp>

#include "stubshrink/errors.hpp"
#include "stubshrink/interp.hpp"
#include "stubshrink/module_info.hpp"
#include "stubshrink/parser.hpp"

namespace stubshrink::callgraph {

using interp::Package;
using interp::PackageHandle;
using lang::ClassDefPtr;
using lang::FnKind;
using lang::FunctionDefPtr;
using nlohmann::json;

std::string ReachabilitySet::toJson() const {
  json j;
  j["mode"] = mode;
  j["entryPoints"] = entryPoints;
  j["reachableFiles"] =
      std::vector<std::string>(reachableFiles.begin(), reachableFiles.end());
  j["reachableFunctions"] = std::vector<std::string>(
      reachableFunctions.begin(), reachableFunctions.end());
  return j.dump(2) + "\n";
}

ReachabilitySet ReachabilitySet::fromJson(const std::string& text) {
  ReachabilitySet rs;
  json j = json::parse(text);
  rs.mode = j.at("mode").get<std::string>();
  rs.entryPoints = j.at("entryPoints").get<std::vector<std::string>>();
  for (const auto& f : j.at("reachableFiles"))
    rs.reachableFiles.insert(f.get<std::string>());
  for (const auto& f : j.at("reachableFunctions"))
    rs.reachableFunctions.insert(f.get<std::string>());
  return rs;
}

namespace {

std::string uidFile(const std::string& uid) {
  auto second = uid.rfind(':');
  if (second == std::string::npos) return uid;
  auto first = uid.rfind(':', second - 1);
  if (first == std::string::npos) return uid;
  return uid.substr(0, first);
}

std::set<std::string> analyzedPathSet(const PackageHandle& pkg) {
  std::set<std::string> out;
  for (const auto& af : pkg.analyzedFiles()) out.insert(af.relPath);
  return out;
}

std::vector<std::string> entryPointsOf(const PackageHandle& pkg) {
  return pkg.root().manifest.tests;
}

}  // namespace

ReachabilitySet dynamicReachability(const PackageHandle& pkg) {
  ReachabilitySet rs;
  rs.mode = "dynamic";
  rs.entryPoints = entryPointsOf(pkg);

  std::set<std::string> enteredFns;
  std::set<std::string> executedFiles;
  interp::RuntimeConfig cfg;
  cfg.hooks.onFunctionEnter = [&](const std::string& uid) {
    enteredFns.insert(uid);
  };
  interp::TestReport report = interp::runTests(
      pkg, cfg, [&](const std::string& rel) { executedFiles.insert(rel); });
  if (!report.allPassed()) {
    std::cerr << "stubshrink: warning: tests do not pass on the original "
                 "package; dynamic reachability reflects the failing run\n";
  }

  std::set<std::string> analyzed = analyzedPathSet(pkg);
  for (const auto& uid : enteredFns)
    if (analyzed.count(uidFile(uid))) rs.reachableFunctions.insert(uid);
  for (const auto& f : executedFiles)
    if (analyzed.count(f)) rs.reachableFiles.insert(f);
  return rs;
}

// ---------------------------------------------------------------------------
// Static analysis: worklist fixpoint over reachable regions.
// ---------------------------------------------------------------------------

namespace {

namespace fs = std::filesystem;

// What a name (or export key) is statically known to denote.
struct Binding {
  enum class Kind { Opaque, Fn, Class, Import, RequireMod };
  Kind kind = Kind::Opaque;
  FunctionDefPtr fn;
  ClassDefPtr cls;
  std::string spec;          // Import / RequireMod
  std::string importedName;  // Import; "default" for default imports
};

struct ModuleInfo {
  std::string rel;
  fs::path abs;
  const Package* owner = nullptr;
  lang::ModulePtr ast;
  std::map<std::string, Binding> top;      // top-level scope
  std::map<std::string, Binding> exports;  // esm export names / cjs keys
  Binding exportsValue;                    // cjs `module.exports = <expr>`
  std::map<std::string, std::vector<FunctionDefPtr>> memberPool;
};

struct StaticAnalyzer {
  const PackageHandle& pkg;
  unsigned shuffleSeed;
  std::map<std::string, ModuleInfo> modules;
  std::set<std::string> reachableFiles;  // includes tests and dev files
  std::set<std::string> reachableFnUids;
  std::set<std::string> memberNames;
  std::vector<Warning> warnings;
  std::mt19937 rng;

  struct Job {
    bool isTop;
    std::string module;
    const lang::FunctionDef* fn = nullptr;
  };
  std::deque<Job> worklist;

  StaticAnalyzer(const PackageHandle& p, unsigned seed)
      : pkg(p), shuffleSeed(seed), rng(seed) {}

  static const lang::CallExpr* asLiteralRequire(const lang::Expr& e) {
    const auto* call = std::get_if<lang::CallExpr>(&e.node);
    if (!call) return nullptr;
    const auto* id = std::get_if<lang::Identifier>(&call->callee->node);
    if (!id || id->name != "require") return nullptr;
    if (call->args.size() != 1 ||
        !std::holds_alternative<lang::StringLit>(call->args[0]->node))
      return nullptr;
    return call;
  }

  static std::string requireSpec(const lang::CallExpr& call) {
    return std::get<lang::StringLit>(call.args[0]->node).value;
  }

  ModuleInfo* moduleInfo(const std::string& rel) {
    auto it = modules.find(rel);
    if (it != modules.end()) return &it->second;
    fs::path abs = pkg.absPath(rel);
    std::ifstream in(abs, std::ios::binary);
    if (!in) return nullptr;
    std::string text{std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>()};
    ModuleInfo info;
    info.rel = rel;
    info.abs = abs;
    info.owner = pkg.ownerOf(abs);
    info.ast = lang::parse(text, rel);  // ParseError aborts
    buildTopScope(info);
    buildExports(info);
    for (const auto& fi : lang::functionsOf(*info.ast)) {
      if (fi.def->kind == FnKind::Method || fi.def->kind == FnKind::Getter ||
          fi.def->kind == FnKind::Setter)
        info.memberPool[*fi.def->name].push_back(fi.def);
    }
    auto [pos, inserted] = modules.emplace(rel, std::move(info));
    (void)inserted;
    return &pos->second;
  }

  // Resolves an expression appearing in export position to a binding.
  Binding bindingOfExpr(const ModuleInfo& info, const lang::Expr& e) {
    if (const auto* id = std::get_if<lang::Identifier>(&e.node)) {
      auto it = info.top.find(id->name);
      if (it != info.top.end()) return it->second;
      return Binding{};
    }
    if (const auto* req = asLiteralRequire(e)) {
      Binding b;
      b.kind = Binding::Kind::RequireMod;
      b.spec = requireSpec(*req);
      return b;
    }
    return Binding{};
  }

  void buildTopScope(ModuleInfo& info) {
    for (const auto& item : info.ast->items) {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, lang::ImportDecl>) {
              if (n.isDefault) {
                Binding b;
                b.kind = Binding::Kind::Import;
                b.spec = n.spec;
                b.importedName = "default";
                info.top[n.defaultLocal] = b;
              } else {
                for (const auto& bind : n.bindings) {
                  Binding b;
                  b.kind = Binding::Kind::Import;
                  b.spec = n.spec;
                  b.importedName = bind.imported;
                  info.top[bind.local] = b;
                }
              }
            } else if constexpr (std::is_same_v<T, lang::ExportFunctionDecl>) {
              Binding b;
              b.kind = Binding::Kind::Fn;
              b.fn = n.fn;
              info.top[*n.fn->name] = b;
            } else if constexpr (std::is_same_v<T, lang::StmtPtr>) {
              const lang::Stmt& s = **(&n);
              if (const auto* let = std::get_if<lang::LetStmt>(&s.node)) {
                info.top[let->name] = bindingOfExpr(info, *let->value);
              } else if (const auto* fd =
                             std::get_if<lang::FunctionDeclStmt>(&s.node)) {
                Binding b;
                b.kind = Binding::Kind::Fn;
                b.fn = fd->fn;
                info.top[*fd->fn->name] = b;
              } else if (const auto* cd =
                             std::get_if<lang::ClassDeclStmt>(&s.node)) {
                Binding b;
                b.kind = Binding::Kind::Class;
                b.cls = cd->cls;
                info.top[cd->cls->name] = b;
              }
            }
          },
          item.node);
    }
  }

  void buildExports(ModuleInfo& info) {
    if (info.ast->style == lang::ModuleStyle::Esm) {
      for (const auto& item : info.ast->items) {
        std::visit(
            [&](const auto& n) {
              using T = std::decay_t<decltype(n)>;
              if constexpr (std::is_same_v<T, lang::ExportFunctionDecl>) {
                Binding b;
                b.kind = Binding::Kind::Fn;
                b.fn = n.fn;
                info.exports[*n.fn->name] = b;
              } else if constexpr (std::is_same_v<T, lang::ExportNamedDecl>) {
                for (const auto& e : n.entries) {
                  auto it = info.top.find(e.local);
                  info.exports[e.exported] =
                      it != info.top.end() ? it->second : Binding{};
                }
              } else if constexpr (std::is_same_v<T, lang::ExportDefaultDecl>) {
                info.exports["default"] = bindingOfExpr(info, *n.value);
              }
            },
            item.node);
      }
      return;
    }
    if (info.ast->style != lang::ModuleStyle::Cjs) return;
    for (const auto& item : info.ast->items) {
      const auto* sp = std::get_if<lang::StmtPtr>(&item.node);
      if (!sp) continue;
      const auto* as = std::get_if<lang::AssignStmt>(&(*sp)->node);
      if (!as) continue;
      const auto* mem = std::get_if<lang::MemberExpr>(&as->target->node);
      if (!mem) continue;
      const auto* obj = std::get_if<lang::Identifier>(&mem->object->node);
      if (!obj) continue;
      if (obj->name == "exports") {
        info.exports[mem->name] = bindingOfExpr(info, *as->value);
      } else if (obj->name == "module" && mem->name == "exports") {
        if (const auto* lit = std::get_if<lang::ObjectLit>(&as->value->node)) {
          for (const auto& en : lit->entries)
            if (en.kind == lang::ObjectEntry::Kind::Plain)
              info.exports[en.key] = bindingOfExpr(info, *en.value);
        } else {
          info.exportsValue = bindingOfExpr(info, *as->value);
        }
      }
    }
  }

  // --- marking (monotone) ---

  void warn(const std::string& kind, const lang::Span& span,
            const std::string& detail) {
    warnings.push_back(
        {kind, span.file, span.startLine, span.startCol, detail});
  }

  void markFile(const std::string& rel) {
    if (reachableFiles.count(rel)) return;
    ModuleInfo* info = moduleInfo(rel);
    if (!info) return;
    reachableFiles.insert(rel);
    worklist.push_back({true, rel, nullptr});
    for (const auto& [name, defs] : info->memberPool)
      if (memberNames.count(name))
        for (const auto& d : defs) markFn(d, rel);
  }

  void markFn(const FunctionDefPtr& def, const std::string& rel) {
    if (reachableFnUids.count(def->uid)) return;
    reachableFnUids.insert(def->uid);
    markFile(rel);
    worklist.push_back({false, rel, def.get()});
  }

  void addMemberName(const std::string& name) {
    if (!memberNames.insert(name).second) return;
    std::vector<std::pair<FunctionDefPtr, std::string>> hits;
    for (const auto& rel : reachableFiles) {
      auto it = modules.find(rel);
      if (it == modules.end()) continue;
      auto pool = it->second.memberPool.find(name);
      if (pool == it->second.memberPool.end()) continue;
      for (const auto& d : pool->second) hits.emplace_back(d, rel);
    }
    for (auto& [d, rel] : hits) markFn(d, rel);
  }

  std::string resolveSpec(const std::string& spec, const ModuleInfo& from) {
    if (!from.owner) return {};
    try {
      fs::path abs = pkg.resolve(spec, from.abs, *from.owner);
      if (!fs::exists(abs)) return {};
      return pkg.relPath(abs);
    } catch (const MissingDependency&) {
      return {};
    }
  }

  // Follows a binding to concrete declarations through literal import and
  // require chains; `fuel` bounds re-export cycles.
  void markBinding(const Binding& b, const std::string& moduleRel,
                   int fuel = 8) {
    if (fuel <= 0) return;
    switch (b.kind) {
      case Binding::Kind::Fn:
        markFn(b.fn, moduleRel);
        break;
      case Binding::Kind::Class:
        if (b.cls->ctor) markFn(b.cls->ctor, moduleRel);
        break;
      case Binding::Kind::Import: {
        ModuleInfo* from = moduleInfo(moduleRel);
        if (!from) break;
        std::string depRel = resolveSpec(b.spec, *from);
        if (depRel.empty()) break;
        markExport(depRel, b.importedName, fuel - 1);
        break;
      }
      case Binding::Kind::RequireMod: {
        ModuleInfo* from = moduleInfo(moduleRel);
        if (!from) break;
        std::string depRel = resolveSpec(b.spec, *from);
        if (depRel.empty()) break;
        if (ModuleInfo* dep = moduleInfo(depRel))
          markBinding(dep->exportsValue, depRel, fuel - 1);
        break;
      }
      case Binding::Kind::Opaque:
        break;
    }
  }

  void markExport(const std::string& moduleRel, const std::string& name,
                  int fuel) {
    ModuleInfo* dep = moduleInfo(moduleRel);
    if (!dep) return;
    auto it = dep->exports.find(name);
    if (it != dep->exports.end()) {
      markBinding(it->second, moduleRel, fuel);
    } else if (name == "default" &&
               dep->ast->style == lang::ModuleStyle::Cjs) {
      markBinding(dep->exportsValue, moduleRel, fuel);
    }
  }

  // --- region walking ---

  struct Scope {
    std::map<std::string, Binding> names;
  };

  struct RegionCtx {
    ModuleInfo* info;
    std::vector<Scope> scopes;

    const Binding* lookupLocal(const std::string& name) const {
      for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
        auto f = it->names.find(name);
        if (f != it->names.end()) return &f->second;
      }
      return nullptr;
    }
  };

  void declareLocal(RegionCtx& ctx, const std::string& name, Binding b) {
    ctx.scopes.back().names[name] = std::move(b);
  }

  void processTop(ModuleInfo& info) {
    RegionCtx ctx{&info, {}};
    ctx.scopes.emplace_back();
    for (const auto& item : info.ast->items) {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, lang::ImportDecl>) {
              std::string rel = resolveSpec(n.spec, info);
              if (rel.empty())
                warn("non-literal-specifier", item.span,
                     "unresolved specifier \"" + n.spec + "\"");
              else
                markFile(rel);  // R1
            } else if constexpr (std::is_same_v<T, lang::StmtPtr>) {
              regionStmt(*n, ctx);
            } else if constexpr (std::is_same_v<T, lang::ExportFunctionDecl>) {
              Binding b;
              b.kind = Binding::Kind::Fn;
              b.fn = n.fn;
              declareLocal(ctx, *n.fn->name, std::move(b));
            } else if constexpr (std::is_same_v<T, lang::ExportDefaultDecl>) {
              regionExpr(*n.value, ctx);
            }
          },
          item.node);
    }
  }

  void processFn(ModuleInfo& info, const lang::FunctionDef& def) {
    RegionCtx ctx{&info, {}};
    ctx.scopes.emplace_back();
    for (const auto& p : def.params) declareLocal(ctx, p, Binding{});
    declareLocal(ctx, "arguments", Binding{});
    for (const auto& s : def.body) regionStmt(*s, ctx);
  }

  void regionStmt(const lang::Stmt& s, RegionCtx& ctx) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, lang::LetStmt>) {
            regionExpr(*n.value, ctx);
            Binding b;
            if (const auto* req = asLiteralRequire(*n.value)) {
              b.kind = Binding::Kind::RequireMod;
              b.spec = requireSpec(*req);
            }
            declareLocal(ctx, n.name, std::move(b));
          } else if constexpr (std::is_same_v<T, lang::AssignStmt>) {
            if (const auto* mem =
                    std::get_if<lang::MemberExpr>(&n.target->node)) {
              addMemberName(mem->name);  // R3 applies to writes as well
              regionExpr(*mem->object, ctx);
            } else if (const auto* ix =
                           std::get_if<lang::IndexExpr>(&n.target->node)) {
              warn("computed-member", n.target->span,
                   "computed member write");  // R6
              regionExpr(*ix->object, ctx);
              regionExpr(*ix->index, ctx);
            }
            regionExpr(*n.value, ctx);
          } else if constexpr (std::is_same_v<T, lang::ExprStmt>) {
            regionExpr(*n.value, ctx);
          } else if constexpr (std::is_same_v<T, lang::ReturnStmt>) {
            if (n.value) regionExpr(*n.value, ctx);
          } else if constexpr (std::is_same_v<T, lang::IfStmt>) {
            regionExpr(*n.cond, ctx);
            ctx.scopes.emplace_back();
            for (const auto& c : n.thenBody) regionStmt(*c, ctx);
            ctx.scopes.pop_back();
            if (n.elseBody) {
              ctx.scopes.emplace_back();
              for (const auto& c : *n.elseBody) regionStmt(*c, ctx);
              ctx.scopes.pop_back();
            }
          } else if constexpr (std::is_same_v<T, lang::WhileStmt>) {
            regionExpr(*n.cond, ctx);
            ctx.scopes.emplace_back();
            for (const auto& c : n.body) regionStmt(*c, ctx);
            ctx.scopes.pop_back();
          } else if constexpr (std::is_same_v<T, lang::FunctionDeclStmt>) {
            Binding b;
            b.kind = Binding::Kind::Fn;
            b.fn = n.fn;
            declareLocal(ctx, *n.fn->name, std::move(b));
          } else if constexpr (std::is_same_v<T, lang::ClassDeclStmt>) {
            Binding b;
            b.kind = Binding::Kind::Class;
            b.cls = n.cls;
            declareLocal(ctx, n.cls->name, std::move(b));
          }
        },
        s.node);
  }

  void regionExpr(const lang::Expr& e, RegionCtx& ctx) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, lang::Identifier>) {
            reference(n.name, ctx);  // R2
          } else if constexpr (std::is_same_v<T, lang::ArrayLit>) {
            for (const auto& el : n.elements) regionExpr(*el, ctx);
          } else if constexpr (std::is_same_v<T, lang::ObjectLit>) {
            // Methods/getters/setters are reached through R3 only.
            for (const auto& en : n.entries)
              if (en.value) regionExpr(*en.value, ctx);
          } else if constexpr (std::is_same_v<T, lang::FunctionExpr>) {
            markFn(n.fn, ctx.info->rel);  // R4
          } else if constexpr (std::is_same_v<T, lang::CallExpr>) {
            regionCall(n, e, ctx);
          } else if constexpr (std::is_same_v<T, lang::MemberExpr>) {
            memberAccess(n, ctx);
          } else if constexpr (std::is_same_v<T, lang::IndexExpr>) {
            warn("computed-member", e.span, "computed member access");  // R6
            regionExpr(*n.object, ctx);
            regionExpr(*n.index, ctx);
          } else if constexpr (std::is_same_v<T, lang::NewExpr>) {
            regionExpr(*n.callee, ctx);  // R5 via the class reference
            for (const auto& a : n.args) regionExpr(*a, ctx);
          } else if constexpr (std::is_same_v<T, lang::BinaryExpr>) {
            regionExpr(*n.lhs, ctx);
            regionExpr(*n.rhs, ctx);
          } else if constexpr (std::is_same_v<T, lang::UnaryExpr>) {
            regionExpr(*n.operand, ctx);
          }
        },
        e.node);
  }

  void regionCall(const lang::CallExpr& call, const lang::Expr& whole,
                  RegionCtx& ctx) {
    if (const auto* id = std::get_if<lang::Identifier>(&call.callee->node)) {
      bool isBuiltin =
          !ctx.lookupLocal(id->name) && !ctx.info->top.count(id->name);
      if (isBuiltin && id->name == "eval") {
        warn("eval", whole.span, "eval target is invisible statically");  // R6
        for (const auto& a : call.args) regionExpr(*a, ctx);
        return;
      }
      if (isBuiltin && id->name == "require") {
        if (asLiteralRequire(whole)) {
          std::string rel = resolveSpec(requireSpec(call), *ctx.info);
          if (rel.empty())
            warn("non-literal-specifier", whole.span,
                 "unresolved specifier \"" + requireSpec(call) + "\"");
          else
            markFile(rel);  // R1
        } else {
          warn("non-literal-specifier", whole.span,
               "non-literal require specifier");  // R6
        }
        for (const auto& a : call.args) regionExpr(*a, ctx);
        return;
      }
    }
    regionExpr(*call.callee, ctx);
    for (const auto& a : call.args) regionExpr(*a, ctx);
  }

  void memberAccess(const lang::MemberExpr& mem, RegionCtx& ctx) {
    addMemberName(mem.name);  // R3
    if (const auto* id = std::get_if<lang::Identifier>(&mem.object->node)) {
      const Binding* b = ctx.lookupLocal(id->name);
      if (!b) {
        auto it = ctx.info->top.find(id->name);
        if (it != ctx.info->top.end()) b = &it->second;
      }
      if (b && b->kind == Binding::Kind::RequireMod) {
        // R2 through an exports key of the required module.
        std::string depRel = resolveSpec(b->spec, *ctx.info);
        if (!depRel.empty()) markExport(depRel, mem.name, 8);
        return;
      }
      if (b && b->kind == Binding::Kind::Import &&
          b->importedName == "default") {
        std::string depRel = resolveSpec(b->spec, *ctx.info);
        if (!depRel.empty()) {
          if (ModuleInfo* dep = moduleInfo(depRel);
              dep && dep->ast->style == lang::ModuleStyle::Cjs) {
            markExport(depRel, mem.name, 8);
            markBinding(*b, ctx.info->rel);
            return;
          }
        }
      }
    }
    regionExpr(*mem.object, ctx);
  }

  void reference(const std::string& name, RegionCtx& ctx) {
    if (const Binding* local = ctx.lookupLocal(name)) {
      markBinding(*local, ctx.info->rel);  // opaque params/lets are no-ops
      return;
    }
    auto it = ctx.info->top.find(name);
    if (it == ctx.info->top.end()) return;  // builtin or unbound
    markBinding(it->second, ctx.info->rel);
  }

  ReachabilitySet run() {
    ReachabilitySet rs;
    rs.mode = "static";
    rs.entryPoints = entryPointsOf(pkg);
    for (const fs::path& t : pkg.testFiles()) markFile(pkg.relPath(t));

    std::set<std::pair<std::string, const lang::FunctionDef*>> processed;
    while (!worklist.empty()) {
      std::size_t pick = 0;
      if (shuffleSeed != 0)
        pick = std::uniform_int_distribution<std::size_t>(
            0, worklist.size() - 1)(rng);
      Job job = worklist[pick];
      worklist.erase(worklist.begin() + static_cast<long>(pick));
      if (!processed.insert({job.module, job.fn}).second) continue;
      ModuleInfo* info = moduleInfo(job.module);
      if (!info) continue;
      if (job.isTop) {
        processTop(*info);
      } else {
        processFn(*info, *job.fn);
      }
    }

    std::set<std::string> analyzed = analyzedPathSet(pkg);
    for (const auto& f : reachableFiles)
      if (analyzed.count(f)) rs.reachableFiles.insert(f);
    for (const auto& uid : reachableFnUids)
      if (analyzed.count(uidFile(uid))) rs.reachableFunctions.insert(uid);
    rs.warnings = warnings;
    return rs;
  }
};

}  // namespace

ReachabilitySet staticReachability(const PackageHandle& pkg,
                                   unsigned shuffleSeed) {
  StaticAnalyzer a(pkg, shuffleSeed);
  return a.run();
}

}  // namespace stubshrink::callgraph
