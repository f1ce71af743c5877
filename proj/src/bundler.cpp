#include "stubshrink/bundler.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "stubshrink/errors.hpp"
#include "stubshrink/module_info.hpp"
#include "stubshrink/parser.hpp"
#include "stubshrink/printer.hpp"

namespace stubshrink::bundler {

using lang::ClassDefPtr;
using lang::FnKind;
using lang::FunctionDefPtr;
using nlohmann::json;

std::string Bundle::mapToJson() const {
  json j = json::object();
  for (const auto& [uid, span] : positionMap) {
    j[uid] = {{"startLine", span.startLine},
              {"startCol", span.startCol},
              {"endLine", span.endLine},
              {"endCol", span.endCol}};
  }
  return j.dump(2) + "\n";
}

std::string Bundle::shakeReportToJson() const {
  json j;
  j["kept"] = kept;
  j["removed"] = removed;
  return j.dump(2) + "\n";
}

namespace {

std::string readFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw BundleError("cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

lang::ExprPtr ident(const std::string& name) {
  auto e = std::make_unique<lang::Expr>();
  e->node = lang::Identifier{name};
  return e;
}

lang::ExprPtr member(lang::ExprPtr obj, const std::string& name) {
  auto e = std::make_unique<lang::Expr>();
  e->node = lang::MemberExpr{std::move(obj), name};
  return e;
}

struct BundleModule {
  std::string rel;
  fs::path abs;
  const interp::Package* owner = nullptr;
  lang::ModulePtr ast;
  lang::ModuleStyle style;
  int index = -1;
  std::vector<std::string> deps;  // rel paths
  bool needsExportsView = false;  // some cjs module requires this esm module
};

// A substitution target for a free top-level reference.
struct Subst {
  lang::ExprPtr proto;
  lang::ExprPtr clone() const { return lang::cloneExpr(*proto); }
};

struct Builder {
  const PackageHandle& pkg;
  std::map<std::string, BundleModule> modules;
  std::vector<std::string> order;  // reverse topological (deps first)
  std::string entryRel;

  // shake state
  using DeclKey = std::pair<std::string, std::string>;  // (module, name)
  std::map<DeclKey, const lang::Stmt*> shakeable;       // top-level decls
  std::map<DeclKey, lang::FunctionDefPtr> shakeableFns;
  std::map<DeclKey, lang::ClassDefPtr> shakeableClasses;
  std::set<DeclKey> keptDecls;
  std::set<std::string> memberNames;

  explicit Builder(const PackageHandle& p) : pkg(p) {}

  // --- module graph ---

  void collectEdges(BundleModule& m) {
    for (const auto& item : m.ast->items) {
      if (const auto* imp = std::get_if<lang::ImportDecl>(&item.node))
        m.deps.push_back(resolveOrThrow(imp->spec, m));
    }
    // require() calls can appear anywhere, including function bodies.
    walkRequires(m, [&](const lang::CallExpr& call, const lang::Expr& e) {
      if (call.args.size() != 1 ||
          !std::holds_alternative<lang::StringLit>(call.args[0]->node))
        throw BundleError("non-literal require specifier at " + m.rel + ":" +
                          std::to_string(e.span.startLine));
      m.deps.push_back(resolveOrThrow(
          std::get<lang::StringLit>(call.args[0]->node).value, m));
    });
  }

  template <typename F>
  void walkRequires(BundleModule& m, F&& onRequire) {
    auto exprWalk = [&](const lang::Expr& e, auto&& self) -> void {
      if (const auto* call = std::get_if<lang::CallExpr>(&e.node)) {
        if (const auto* id =
                std::get_if<lang::Identifier>(&call->callee->node)) {
          if (id->name == "require") onRequire(*call, e);
        }
      }
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, lang::ArrayLit>) {
              for (const auto& el : n.elements) self(*el, self);
            } else if constexpr (std::is_same_v<T, lang::ObjectLit>) {
              for (const auto& en : n.entries) {
                if (en.value) self(*en.value, self);
                if (en.fn) walkFn(*en.fn, self);
              }
            } else if constexpr (std::is_same_v<T, lang::FunctionExpr>) {
              walkFn(*n.fn, self);
            } else if constexpr (std::is_same_v<T, lang::CallExpr>) {
              self(*n.callee, self);
              for (const auto& a : n.args) self(*a, self);
            } else if constexpr (std::is_same_v<T, lang::MemberExpr>) {
              self(*n.object, self);
            } else if constexpr (std::is_same_v<T, lang::IndexExpr>) {
              self(*n.object, self);
              self(*n.index, self);
            } else if constexpr (std::is_same_v<T, lang::NewExpr>) {
              self(*n.callee, self);
              for (const auto& a : n.args) self(*a, self);
            } else if constexpr (std::is_same_v<T, lang::BinaryExpr>) {
              self(*n.lhs, self);
              self(*n.rhs, self);
            } else if constexpr (std::is_same_v<T, lang::UnaryExpr>) {
              self(*n.operand, self);
            }
          },
          e.node);
    };
    auto stmtWalk = [&](const lang::Stmt& s, auto&& self) -> void {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, lang::LetStmt>) {
              exprWalk(*n.value, exprWalk);
            } else if constexpr (std::is_same_v<T, lang::AssignStmt>) {
              exprWalk(*n.target, exprWalk);
              exprWalk(*n.value, exprWalk);
            } else if constexpr (std::is_same_v<T, lang::ExprStmt>) {
              exprWalk(*n.value, exprWalk);
            } else if constexpr (std::is_same_v<T, lang::ReturnStmt>) {
              if (n.value) exprWalk(*n.value, exprWalk);
            } else if constexpr (std::is_same_v<T, lang::IfStmt>) {
              exprWalk(*n.cond, exprWalk);
              for (const auto& c : n.thenBody) self(*c, self);
              if (n.elseBody)
                for (const auto& c : *n.elseBody) self(*c, self);
            } else if constexpr (std::is_same_v<T, lang::WhileStmt>) {
              exprWalk(*n.cond, exprWalk);
              for (const auto& c : n.body) self(*c, self);
            } else if constexpr (std::is_same_v<T, lang::FunctionDeclStmt>) {
              walkFn(*n.fn, exprWalk);
            } else if constexpr (std::is_same_v<T, lang::ClassDeclStmt>) {
              if (n.cls->ctor) walkFn(*n.cls->ctor, exprWalk);
              for (const auto& mem : n.cls->members) walkFn(*mem, exprWalk);
            }
          },
          s.node);
    };
    for (const auto& item : m.ast->items) {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, lang::StmtPtr>) {
              stmtWalk(*n, stmtWalk);
            } else if constexpr (std::is_same_v<T, lang::ExportFunctionDecl>) {
              walkFn(*n.fn, exprWalk);
            } else if constexpr (std::is_same_v<T, lang::ExportDefaultDecl>) {
              exprWalk(*n.value, exprWalk);
            }
          },
          item.node);
    }
  }

  template <typename ExprFn>
  static void walkFn(const lang::FunctionDef& fn, ExprFn&& exprWalk) {
    auto stmtWalk = [&](const lang::Stmt& s, auto&& self) -> void {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, lang::LetStmt>) {
              exprWalk(*n.value, exprWalk);
            } else if constexpr (std::is_same_v<T, lang::AssignStmt>) {
              exprWalk(*n.target, exprWalk);
              exprWalk(*n.value, exprWalk);
            } else if constexpr (std::is_same_v<T, lang::ExprStmt>) {
              exprWalk(*n.value, exprWalk);
            } else if constexpr (std::is_same_v<T, lang::ReturnStmt>) {
              if (n.value) exprWalk(*n.value, exprWalk);
            } else if constexpr (std::is_same_v<T, lang::IfStmt>) {
              exprWalk(*n.cond, exprWalk);
              for (const auto& c : n.thenBody) self(*c, self);
              if (n.elseBody)
                for (const auto& c : *n.elseBody) self(*c, self);
            } else if constexpr (std::is_same_v<T, lang::WhileStmt>) {
              exprWalk(*n.cond, exprWalk);
              for (const auto& c : n.body) self(*c, self);
            } else if constexpr (std::is_same_v<T, lang::FunctionDeclStmt>) {
              walkFn(*n.fn, exprWalk);
            } else if constexpr (std::is_same_v<T, lang::ClassDeclStmt>) {
              if (n.cls->ctor) walkFn(*n.cls->ctor, exprWalk);
              for (const auto& mem : n.cls->members) walkFn(*mem, exprWalk);
            }
          },
          s.node);
    };
    for (const auto& s : fn.body) stmtWalk(*s, stmtWalk);
  }

  std::string resolveOrThrow(const std::string& spec, const BundleModule& m) {
    try {
      fs::path abs = pkg.resolve(spec, m.abs, *m.owner);
      if (!fs::exists(abs))
        throw BundleError("unresolved specifier \"" + spec + "\" in " + m.rel);
      return pkg.relPath(abs);
    } catch (const MissingDependency& e) {
      throw BundleError(e.what());
    }
  }

  BundleModule& load(const std::string& rel) {
    auto it = modules.find(rel);
    if (it != modules.end()) return it->second;
    BundleModule m;
    m.rel = rel;
    m.abs = pkg.absPath(rel);
    m.owner = pkg.ownerOf(m.abs);
    m.ast = lang::parse(readFile(m.abs), rel);
    m.style = m.ast->style;
    auto [pos, _] = modules.emplace(rel, std::move(m));
    collectEdges(pos->second);
    return pos->second;
  }

  void topoVisit(const std::string& rel, std::set<std::string>& visiting,
                 std::set<std::string>& done) {
    if (done.count(rel)) return;
    if (!visiting.insert(rel).second)
      throw BundleError("module graph has a cycle through " + rel);
    BundleModule& m = load(rel);
    for (const auto& d : m.deps) topoVisit(d, visiting, done);
    visiting.erase(rel);
    done.insert(rel);
    m.index = static_cast<int>(order.size());
    order.push_back(rel);
  }

  // --- tree shaking ---

  void indexShakeables() {
    for (const auto& rel : order) {
      BundleModule& m = modules.at(rel);
      if (m.style == lang::ModuleStyle::Cjs) continue;
      for (const auto& item : m.ast->items) {
        if (const auto* ef = std::get_if<lang::ExportFunctionDecl>(&item.node)) {
          shakeableFns[{rel, *ef->fn->name}] = ef->fn;
        } else if (const auto* sp = std::get_if<lang::StmtPtr>(&item.node)) {
          if (const auto* fd = std::get_if<lang::FunctionDeclStmt>(&(*sp)->node))
            shakeableFns[{rel, *fd->fn->name}] = fd->fn;
          else if (const auto* cd =
                       std::get_if<lang::ClassDeclStmt>(&(*sp)->node))
            shakeableClasses[{rel, cd->cls->name}] = cd->cls;
        }
      }
    }
  }

  bool isShakeable(const DeclKey& k) const {
    return shakeableFns.count(k) || shakeableClasses.count(k);
  }

  // Resolves (module, exportName) to the declaring (module, localName),
  // following literal re-export chains.
  std::optional<DeclKey> resolveExportDecl(const std::string& rel,
                                           const std::string& name,
                                           int fuel = 8) {
    if (fuel <= 0) return std::nullopt;
    const BundleModule& m = modules.at(rel);
    if (m.style == lang::ModuleStyle::Cjs)
      return std::nullopt;  // whole-module inclusion, nothing to chase
    for (const auto& item : m.ast->items) {
      if (const auto* ef = std::get_if<lang::ExportFunctionDecl>(&item.node)) {
        if (*ef->fn->name == name) return DeclKey{rel, name};
      } else if (const auto* en =
                     std::get_if<lang::ExportNamedDecl>(&item.node)) {
        for (const auto& e : en->entries) {
          if (e.exported != name) continue;
          if (auto imp = importBindingOf(m, e.local))
            return resolveExportDecl(imp->first, imp->second, fuel - 1);
          return DeclKey{rel, e.local};
        }
      }
    }
    return std::nullopt;
  }

  // local import binding -> (module, exportedName)
  std::optional<std::pair<std::string, std::string>> importBindingOf(
      const BundleModule& m, const std::string& local) {
    for (const auto& item : m.ast->items) {
      const auto* imp = std::get_if<lang::ImportDecl>(&item.node);
      if (!imp) continue;
      std::string depRel = resolveOrThrowConst(imp->spec, m);
      if (imp->isDefault && imp->defaultLocal == local)
        return std::make_pair(depRel, std::string("default"));
      for (const auto& b : imp->bindings)
        if (b.local == local) return std::make_pair(depRel, b.imported);
    }
    return std::nullopt;
  }

  std::string resolveOrThrowConst(const std::string& spec,
                                  const BundleModule& m) {
    fs::path abs = pkg.resolve(spec, m.abs, *m.owner);
    return pkg.relPath(abs);
  }

  void keepDecl(const DeclKey& k) {
    if (!isShakeable(k)) return;
    if (!keptDecls.insert(k).second) return;
    const BundleModule& m = modules.at(k.first);
    if (auto it = shakeableFns.find(k); it != shakeableFns.end()) {
      shakeRegionFn(m, *it->second);
    } else if (auto ct = shakeableClasses.find(k); ct != shakeableClasses.end()) {
      if (ct->second->ctor) shakeRegionFn(m, *ct->second->ctor);
      for (const auto& mem : ct->second->members) shakeRegionFn(m, *mem);
    }
  }

  void noteMemberName(const std::string& name) {
    if (!memberNames.insert(name).second) return;
    // Field-based surrogate: keep any declaration whose name matches, and
    // any class with a member of that name.
    std::vector<DeclKey> hits;
    for (const auto& [k, fn] : shakeableFns)
      if (k.second == name) hits.push_back(k);
    for (const auto& [k, cls] : shakeableClasses) {
      if (k.second == name) hits.push_back(k);
      for (const auto& mem : cls->members)
        if (*mem->name == name) hits.push_back(k);
    }
    for (const auto& k : hits) keepDecl(k);
  }

  // Collect references from a region: free identifiers resolved through
  // import bindings to declarations, and member names.
  struct ShakeScope {
    std::set<std::string> names;
  };

  void shakeRegionFn(const BundleModule& m, const lang::FunctionDef& fn) {
    std::vector<ShakeScope> scopes(1);
    for (const auto& p : fn.params) scopes.back().names.insert(p);
    scopes.back().names.insert("arguments");
    for (const auto& s : fn.body) shakeStmt(m, *s, scopes);
  }

  void shakeStmts(const BundleModule& m,
                  const std::vector<lang::StmtPtr>& body,
                  std::vector<ShakeScope>& scopes) {
    scopes.emplace_back();
    for (const auto& s : body) shakeStmt(m, *s, scopes);
    scopes.pop_back();
  }

  void shakeStmt(const BundleModule& m, const lang::Stmt& s,
                 std::vector<ShakeScope>& scopes) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, lang::LetStmt>) {
            shakeExpr(m, *n.value, scopes);
            scopes.back().names.insert(n.name);
          } else if constexpr (std::is_same_v<T, lang::AssignStmt>) {
            if (const auto* mem =
                    std::get_if<lang::MemberExpr>(&n.target->node)) {
              noteMemberName(mem->name);
              shakeExpr(m, *mem->object, scopes);
            } else if (const auto* ix =
                           std::get_if<lang::IndexExpr>(&n.target->node)) {
              shakeExpr(m, *ix->object, scopes);
              shakeExpr(m, *ix->index, scopes);
            } else {
              shakeExpr(m, *n.target, scopes);
            }
            shakeExpr(m, *n.value, scopes);
          } else if constexpr (std::is_same_v<T, lang::ExprStmt>) {
            shakeExpr(m, *n.value, scopes);
          } else if constexpr (std::is_same_v<T, lang::ReturnStmt>) {
            if (n.value) shakeExpr(m, *n.value, scopes);
          } else if constexpr (std::is_same_v<T, lang::IfStmt>) {
            shakeExpr(m, *n.cond, scopes);
            shakeStmts(m, n.thenBody, scopes);
            if (n.elseBody) shakeStmts(m, *n.elseBody, scopes);
          } else if constexpr (std::is_same_v<T, lang::WhileStmt>) {
            shakeExpr(m, *n.cond, scopes);
            shakeStmts(m, n.body, scopes);
          } else if constexpr (std::is_same_v<T, lang::FunctionDeclStmt>) {
            scopes.back().names.insert(*n.fn->name);
            shakeRegionFn(m, *n.fn);
          } else if constexpr (std::is_same_v<T, lang::ClassDeclStmt>) {
            scopes.back().names.insert(n.cls->name);
            if (n.cls->ctor) shakeRegionFn(m, *n.cls->ctor);
            for (const auto& mem : n.cls->members) shakeRegionFn(m, *mem);
          }
        },
        s.node);
  }

  void shakeExpr(const BundleModule& m, const lang::Expr& e,
                 std::vector<ShakeScope>& scopes) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, lang::Identifier>) {
            for (auto it = scopes.rbegin(); it != scopes.rend(); ++it)
              if (it->names.count(n.name)) return;
            shakeReference(m, n.name);
          } else if constexpr (std::is_same_v<T, lang::ArrayLit>) {
            for (const auto& el : n.elements) shakeExpr(m, *el, scopes);
          } else if constexpr (std::is_same_v<T, lang::ObjectLit>) {
            for (const auto& en : n.entries) {
              if (en.value) shakeExpr(m, *en.value, scopes);
              if (en.fn) shakeRegionFn(m, *en.fn);
            }
          } else if constexpr (std::is_same_v<T, lang::FunctionExpr>) {
            shakeRegionFn(m, *n.fn);
          } else if constexpr (std::is_same_v<T, lang::CallExpr>) {
            shakeExpr(m, *n.callee, scopes);
            for (const auto& a : n.args) shakeExpr(m, *a, scopes);
          } else if constexpr (std::is_same_v<T, lang::MemberExpr>) {
            noteMemberName(n.name);
            shakeExpr(m, *n.object, scopes);
          } else if constexpr (std::is_same_v<T, lang::IndexExpr>) {
            shakeExpr(m, *n.object, scopes);
            shakeExpr(m, *n.index, scopes);
          } else if constexpr (std::is_same_v<T, lang::NewExpr>) {
            shakeExpr(m, *n.callee, scopes);
            for (const auto& a : n.args) shakeExpr(m, *a, scopes);
          } else if constexpr (std::is_same_v<T, lang::BinaryExpr>) {
            shakeExpr(m, *n.lhs, scopes);
            shakeExpr(m, *n.rhs, scopes);
          } else if constexpr (std::is_same_v<T, lang::UnaryExpr>) {
            shakeExpr(m, *n.operand, scopes);
          }
        },
        e.node);
  }

  void shakeReference(const BundleModule& m, const std::string& name) {
    if (auto imp = importBindingOf(m, name)) {
      if (auto decl = resolveExportDecl(imp->first, imp->second))
        keepDecl(*decl);
      return;
    }
    keepDecl({m.rel, name});
  }

  void shake() {
    indexShakeables();
    // Roots: every retained top-level statement of every included module,
    // plus the entry's exports.
    for (const auto& rel : order) {
      BundleModule& m = modules.at(rel);
      std::vector<ShakeScope> scopes(1);
      for (const auto& item : m.ast->items) {
        std::visit(
            [&](const auto& n) {
              using T = std::decay_t<decltype(n)>;
              if constexpr (std::is_same_v<T, lang::StmtPtr>) {
                bool shakeableDecl =
                    m.style != lang::ModuleStyle::Cjs &&
                    (std::holds_alternative<lang::FunctionDeclStmt>(
                         (*n).node) ||
                     std::holds_alternative<lang::ClassDeclStmt>((*n).node));
                if (!shakeableDecl) shakeStmt(m, *n, scopes);
              } else if constexpr (std::is_same_v<T, lang::ExportDefaultDecl>) {
                shakeExpr(m, *n.value, scopes);
              }
            },
            item.node);
      }
    }
    const BundleModule& entry = modules.at(entryRel);
    for (const auto& item : entry.ast->items) {
      if (const auto* ef = std::get_if<lang::ExportFunctionDecl>(&item.node)) {
        keepDecl({entryRel, *ef->fn->name});
      } else if (const auto* en =
                     std::get_if<lang::ExportNamedDecl>(&item.node)) {
        for (const auto& e : en->entries) shakeReference(entry, e.local);
      }
    }
  }

  bool keptTopDecl(const BundleModule& m, const std::string& name) const {
    return keptDecls.count({m.rel, name}) > 0;
  }
};

// ---------------------------------------------------------------------------
// Renaming and emission
// ---------------------------------------------------------------------------

struct Emitter {
  Builder& b;
  std::vector<lang::Item> items;
  std::map<std::string, std::map<std::string, Subst>> substs;  // per module
  std::set<std::string> viewsNeeded;  // esm/plain modules required by cjs code

  explicit Emitter(Builder& builder) : b(builder) {}

  static std::string suffixed(const std::string& name, int idx) {
    return name + "$" + std::to_string(idx);
  }

  void planSubsts() {
    // First pass: which esm/plain modules are require()d (they need a
    // materialized exports object).
    for (const auto& rel : b.order) {
      BundleModule& m = b.modules.at(rel);
      b.walkRequires(m, [&](const lang::CallExpr& call, const lang::Expr&) {
        std::string dep = b.resolveOrThrowConst(
            std::get<lang::StringLit>(call.args[0]->node).value, m);
        if (b.modules.at(dep).style != lang::ModuleStyle::Cjs)
          viewsNeeded.insert(dep);
      });
    }
    for (const auto& rel : b.order) {
      BundleModule& m = b.modules.at(rel);
      auto& sub = substs[rel];
      if (m.style == lang::ModuleStyle::Cjs) {
        sub["module"] = Subst{ident(suffixed("module", m.index))};
        sub["exports"] = Subst{ident(suffixed("exports", m.index))};
        for (const auto& item : m.ast->items) {
          const auto& sp = std::get<lang::StmtPtr>(item.node);
          if (const auto* let = std::get_if<lang::LetStmt>(&sp->node))
            sub[let->name] = Subst{ident(suffixed(let->name, m.index))};
          else if (const auto* fd =
                       std::get_if<lang::FunctionDeclStmt>(&sp->node))
            sub[*fd->fn->name] =
                Subst{ident(suffixed(*fd->fn->name, m.index))};
          else if (const auto* cd = std::get_if<lang::ClassDeclStmt>(&sp->node))
            sub[cd->cls->name] = Subst{ident(suffixed(cd->cls->name, m.index))};
        }
        continue;
      }
      for (const auto& item : m.ast->items) {
        std::visit(
            [&](const auto& n) {
              using T = std::decay_t<decltype(n)>;
              if constexpr (std::is_same_v<T, lang::ImportDecl>) {
                std::string dep = b.resolveOrThrowConst(n.spec, m);
                if (n.isDefault) {
                  sub[n.defaultLocal] = importSubst(dep, "default");
                } else {
                  for (const auto& bind : n.bindings)
                    sub[bind.local] = importSubst(dep, bind.imported);
                }
              } else if constexpr (std::is_same_v<T, lang::ExportFunctionDecl>) {
                sub[*n.fn->name] =
                    Subst{ident(suffixed(*n.fn->name, m.index))};
              } else if constexpr (std::is_same_v<T, lang::StmtPtr>) {
                const lang::Stmt& s = **(&n);
                if (const auto* let = std::get_if<lang::LetStmt>(&s.node))
                  sub[let->name] = Subst{ident(suffixed(let->name, m.index))};
                else if (const auto* fd =
                             std::get_if<lang::FunctionDeclStmt>(&s.node))
                  sub[*fd->fn->name] =
                      Subst{ident(suffixed(*fd->fn->name, m.index))};
                else if (const auto* cd =
                             std::get_if<lang::ClassDeclStmt>(&s.node))
                  sub[cd->cls->name] =
                      Subst{ident(suffixed(cd->cls->name, m.index))};
              }
            },
            item.node);
      }
    }
  }

  Subst importSubst(const std::string& depRel, const std::string& name) {
    const BundleModule& dep = b.modules.at(depRel);
    if (dep.style == lang::ModuleStyle::Cjs) {
      lang::ExprPtr exportsOf =
          member(ident(suffixed("module", dep.index)), "exports");
      if (name == "default") return Subst{std::move(exportsOf)};
      return Subst{member(std::move(exportsOf), name)};
    }
    if (name == "default")
      return Subst{ident(suffixed("default", dep.index))};
    if (auto decl = b.resolveExportDecl(depRel, name)) {
      const BundleModule& declMod = b.modules.at(decl->first);
      return Subst{ident(suffixed(decl->second, declMod.index))};
    }
    // Unresolvable exports surface at runtime as unbound identifiers, the
    // bundle-time equivalent of a missing export error.
    return Subst{ident(suffixed(name, dep.index))};
  }

  lang::ExprPtr requireReplacement(const std::string& depRel) {
    const BundleModule& dep = b.modules.at(depRel);
    if (dep.style == lang::ModuleStyle::Cjs)
      return member(ident(suffixed("module", dep.index)), "exports");
    return ident(suffixed("exports$view", dep.index));
  }

  // --- scope-aware rewriting ---

  struct RenScope {
    std::set<std::string> names;
  };

  void renameFn(const BundleModule& m, lang::FunctionDef& fn,
                std::vector<RenScope>& scopes) {
    scopes.emplace_back();
    for (const auto& p : fn.params) scopes.back().names.insert(p);
    scopes.back().names.insert("arguments");
    for (auto& s : fn.body) renameStmt(m, *s, scopes);
    scopes.pop_back();
  }

  void renameStmt(const BundleModule& m, lang::Stmt& s,
                  std::vector<RenScope>& scopes) {
    std::visit(
        [&](auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, lang::LetStmt>) {
            renameExpr(m, n.value, scopes);
            scopes.back().names.insert(n.name);
          } else if constexpr (std::is_same_v<T, lang::AssignStmt>) {
            renameExpr(m, n.target, scopes);
            renameExpr(m, n.value, scopes);
          } else if constexpr (std::is_same_v<T, lang::ExprStmt>) {
            renameExpr(m, n.value, scopes);
          } else if constexpr (std::is_same_v<T, lang::ReturnStmt>) {
            if (n.value) renameExpr(m, n.value, scopes);
          } else if constexpr (std::is_same_v<T, lang::IfStmt>) {
            renameExpr(m, n.cond, scopes);
            scopes.emplace_back();
            for (auto& c : n.thenBody) renameStmt(m, *c, scopes);
            scopes.pop_back();
            if (n.elseBody) {
              scopes.emplace_back();
              for (auto& c : *n.elseBody) renameStmt(m, *c, scopes);
              scopes.pop_back();
            }
          } else if constexpr (std::is_same_v<T, lang::WhileStmt>) {
            renameExpr(m, n.cond, scopes);
            scopes.emplace_back();
            for (auto& c : n.body) renameStmt(m, *c, scopes);
            scopes.pop_back();
          } else if constexpr (std::is_same_v<T, lang::FunctionDeclStmt>) {
            scopes.back().names.insert(*n.fn->name);
            renameFn(m, *n.fn, scopes);
          } else if constexpr (std::is_same_v<T, lang::ClassDeclStmt>) {
            scopes.back().names.insert(n.cls->name);
            if (n.cls->ctor) renameFn(m, *n.cls->ctor, scopes);
            for (auto& mem : n.cls->members) renameFn(m, *mem, scopes);
          }
        },
        s.node);
  }

  void renameExpr(const BundleModule& m, lang::ExprPtr& e,
                  std::vector<RenScope>& scopes) {
    // require("lit") becomes a reference to the target's exports object.
    if (const auto* call = std::get_if<lang::CallExpr>(&e->node)) {
      if (const auto* id = std::get_if<lang::Identifier>(&call->callee->node)) {
        bool shadowed = false;
        for (auto it = scopes.rbegin(); it != scopes.rend(); ++it)
          if (it->names.count(id->name)) shadowed = true;
        if (id->name == "require" && !shadowed) {
          std::string dep = b.resolveOrThrowConst(
              std::get<lang::StringLit>(call->args[0]->node).value, m);
          lang::Span span = e->span;
          e = requireReplacement(dep);
          e->span = span;
          return;
        }
      }
    }
    std::visit(
        [&](auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, lang::Identifier>) {
            for (auto it = scopes.rbegin(); it != scopes.rend(); ++it)
              if (it->names.count(n.name)) return;
            auto& sub = substs[m.rel];
            auto f = sub.find(n.name);
            if (f != sub.end()) {
              lang::Span span = e->span;
              e = f->second.clone();
              e->span = span;
            }
          } else if constexpr (std::is_same_v<T, lang::ArrayLit>) {
            for (auto& el : n.elements) renameExpr(m, el, scopes);
          } else if constexpr (std::is_same_v<T, lang::ObjectLit>) {
            for (auto& en : n.entries) {
              if (en.value) renameExpr(m, en.value, scopes);
              if (en.fn) renameFn(m, *en.fn, scopes);
            }
          } else if constexpr (std::is_same_v<T, lang::FunctionExpr>) {
            renameFn(m, *n.fn, scopes);
          } else if constexpr (std::is_same_v<T, lang::CallExpr>) {
            renameExpr(m, n.callee, scopes);
            for (auto& a : n.args) renameExpr(m, a, scopes);
          } else if constexpr (std::is_same_v<T, lang::MemberExpr>) {
            renameExpr(m, n.object, scopes);
          } else if constexpr (std::is_same_v<T, lang::IndexExpr>) {
            renameExpr(m, n.object, scopes);
            renameExpr(m, n.index, scopes);
          } else if constexpr (std::is_same_v<T, lang::NewExpr>) {
            renameExpr(m, n.callee, scopes);
            for (auto& a : n.args) renameExpr(m, a, scopes);
          } else if constexpr (std::is_same_v<T, lang::BinaryExpr>) {
            renameExpr(m, n.lhs, scopes);
            renameExpr(m, n.rhs, scopes);
          } else if constexpr (std::is_same_v<T, lang::UnaryExpr>) {
            renameExpr(m, n.operand, scopes);
          }
        },
        e->node);
  }

  void pushStmt(lang::StmtPtr s) {
    lang::Item item;
    item.span = s->span;
    item.node = std::move(s);
    items.push_back(std::move(item));
  }

  void pushParsed(const std::string& text) {
    lang::ModulePtr m = lang::parse(text, "bundle.mm");
    for (auto& item : m->items) items.push_back(std::move(item));
  }

  void emitModule(const std::string& rel) {
    BundleModule& m = b.modules.at(rel);
    std::vector<RenScope> scopes(1);
    if (m.style == lang::ModuleStyle::Cjs) {
      pushParsed("let " + suffixed("exports", m.index) + " = {};\n" +
                 "let " + suffixed("module", m.index) + " = { \"exports\": " +
                 suffixed("exports", m.index) + " };\n");
      for (const auto& item : m.ast->items) {
        const auto& sp = std::get<lang::StmtPtr>(item.node);
        lang::StmtPtr clone = lang::cloneStmt(*sp);
        // Top-level declaration names rename along with their references.
        if (auto* let = std::get_if<lang::LetStmt>(&clone->node))
          let->name = suffixed(let->name, m.index);
        else if (auto* fd = std::get_if<lang::FunctionDeclStmt>(&clone->node))
          fd->fn->name = suffixed(*fd->fn->name, m.index);
        else if (auto* cd = std::get_if<lang::ClassDeclStmt>(&clone->node))
          cd->cls->name = suffixed(cd->cls->name, m.index);
        renameStmt(m, *clone, scopes);
        pushStmt(std::move(clone));
      }
      return;
    }
    for (const auto& item : m.ast->items) {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, lang::ImportDecl>) {
              // bindings became substitutions
            } else if constexpr (std::is_same_v<T, lang::ExportFunctionDecl>) {
              if (!b.keptTopDecl(m, *n.fn->name)) return;
              FunctionDefPtr fn = lang::cloneFunctionDef(*n.fn);
              fn->name = suffixed(*fn->name, m.index);
              renameFn(m, *fn, scopes);
              auto s = std::make_unique<lang::Stmt>();
              s->span = fn->span;
              s->node = lang::FunctionDeclStmt{fn};
              pushStmt(std::move(s));
            } else if constexpr (std::is_same_v<T, lang::ExportNamedDecl>) {
              // re-exports carry no code
            } else if constexpr (std::is_same_v<T, lang::ExportDefaultDecl>) {
              lang::ExprPtr v = lang::cloneExpr(*n.value);
              renameExpr(m, v, scopes);
              auto s = std::make_unique<lang::Stmt>();
              s->span = n.value->span;
              s->node = lang::LetStmt{suffixed("default", m.index),
                                      std::move(v)};
              pushStmt(std::move(s));
            } else if constexpr (std::is_same_v<T, lang::StmtPtr>) {
              const lang::Stmt& st = **(&n);
              if (const auto* fd = std::get_if<lang::FunctionDeclStmt>(&st.node)) {
                if (!b.keptTopDecl(m, *fd->fn->name)) return;
                FunctionDefPtr fn = lang::cloneFunctionDef(*fd->fn);
                fn->name = suffixed(*fn->name, m.index);
                renameFn(m, *fn, scopes);
                auto s = std::make_unique<lang::Stmt>();
                s->span = fn->span;
                s->node = lang::FunctionDeclStmt{fn};
                pushStmt(std::move(s));
                return;
              }
              if (const auto* cd = std::get_if<lang::ClassDeclStmt>(&st.node)) {
                if (!b.keptTopDecl(m, cd->cls->name)) return;
                ClassDefPtr cls = lang::cloneClassDef(*cd->cls);
                cls->name = suffixed(cls->name, m.index);
                for (auto& mem : cls->members) renameFn(m, *mem, scopes);
                if (cls->ctor) renameFn(m, *cls->ctor, scopes);
                auto s = std::make_unique<lang::Stmt>();
                s->span = cls->span;
                s->node = lang::ClassDeclStmt{cls};
                pushStmt(std::move(s));
                return;
              }
              lang::StmtPtr clone = lang::cloneStmt(st);
              if (auto* let = std::get_if<lang::LetStmt>(&clone->node))
                let->name = suffixed(let->name, m.index);
              renameStmt(m, *clone, scopes);
              pushStmt(std::move(clone));
            }
          },
          item.node);
    }
    if (viewsNeeded.count(rel)) emitExportsView(m);
  }

  void emitExportsView(const BundleModule& m) {
    lang::ObjectLit obj;
    for (const auto& item : m.ast->items) {
      auto add = [&](const std::string& name) {
        lang::ObjectEntry en;
        en.kind = lang::ObjectEntry::Kind::Plain;
        en.key = name;
        en.stringKey = true;
        en.value = importSubst(m.rel, name).clone();
        obj.entries.push_back(std::move(en));
      };
      if (const auto* ef = std::get_if<lang::ExportFunctionDecl>(&item.node)) {
        add(*ef->fn->name);
      } else if (const auto* en = std::get_if<lang::ExportNamedDecl>(&item.node)) {
        for (const auto& e : en->entries) add(e.exported);
      } else if (std::holds_alternative<lang::ExportDefaultDecl>(item.node)) {
        add("default");
      }
    }
    auto objExpr = std::make_unique<lang::Expr>();
    objExpr->node = std::move(obj);
    auto s = std::make_unique<lang::Stmt>();
    s->node = lang::LetStmt{suffixed("exports$view", m.index),
                            std::move(objExpr)};
    pushStmt(std::move(s));
  }

  void emitEntryExports() {
    const BundleModule& entry = b.modules.at(b.entryRel);
    if (entry.style == lang::ModuleStyle::Cjs)
      throw BundleError("cjs entry modules cannot be bundled (the bundle "
                        "must be an esm or plain module)");
    int outIdx = 0;
    for (const auto& item : entry.ast->items) {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, lang::ExportFunctionDecl>) {
              pushParsed("export { " + suffixed(*n.fn->name, entry.index) +
                         " as " + *n.fn->name + " };\n");
            } else if constexpr (std::is_same_v<T, lang::ExportNamedDecl>) {
              for (const auto& e : n.entries) {
                lang::ExprPtr v;
                auto& sub = substs[entry.rel];
                auto f = sub.find(e.local);
                if (f != sub.end()) v = f->second.clone();
                else v = ident(e.local);
                if (std::holds_alternative<lang::Identifier>(v->node)) {
                  pushParsed("export { " +
                             std::get<lang::Identifier>(v->node).name +
                             " as " + e.exported + " };\n");
                } else {
                  std::string tmp = "reexport$" + std::to_string(outIdx++);
                  auto s = std::make_unique<lang::Stmt>();
                  s->node = lang::LetStmt{tmp, std::move(v)};
                  pushStmt(std::move(s));
                  pushParsed("export { " + tmp + " as " + e.exported +
                             " };\n");
                }
              }
            } else if constexpr (std::is_same_v<T, lang::ExportDefaultDecl>) {
              pushParsed("export default " +
                         suffixed("default", entry.index) + ";\n");
            }
          },
          item.node);
    }
  }
};

}  // namespace

Bundle bundle(const PackageHandle& pkg) {
  Builder b(pkg);
  b.entryRel = pkg.relPath(
      (pkg.root().dir / pkg.root().manifest.main).lexically_normal());
  {
    std::set<std::string> visiting, done;
    b.topoVisit(b.entryRel, visiting, done);
  }
  if (b.modules.at(b.entryRel).style == lang::ModuleStyle::Cjs)
    throw BundleError("cjs entry modules cannot be bundled (the bundle "
                      "must be an esm or plain module)");
  b.shake();

  Emitter em(b);
  em.planSubsts();
  for (const auto& rel : b.order) em.emitModule(rel);
  em.emitEntryExports();

  lang::Module bundleAst;
  bundleAst.path = "bundle.mm";
  bundleAst.items = std::move(em.items);

  Bundle out;
  out.entry = b.entryRel;
  out.text = lang::print(bundleAst);

  // Pair the carried uids with reparsed positions: print followed by parse
  // preserves structure, so the function lists line up one to one.
  lang::ModulePtr reparsed = lang::parse(out.text, "bundle.mm");
  auto before = lang::functionsOf(bundleAst);
  auto after = lang::functionsOf(*reparsed);
  if (before.size() != after.size())
    throw BundleError("bundle reparse mismatch");
  for (std::size_t i = 0; i < before.size(); ++i) {
    out.positionMap[before[i].def->uid] = after[i].def->span;
    out.kept.push_back(before[i].def->uid);
  }
  std::sort(out.kept.begin(), out.kept.end());

  std::set<std::string> keptSet(out.kept.begin(), out.kept.end());
  for (const auto& af : pkg.analyzedFiles()) {
    std::ifstream in(af.absPath, std::ios::binary);
    std::string text{std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>()};
    lang::ModulePtr m = lang::parse(text, af.relPath);
    for (const auto& fi : lang::functionsOf(*m))
      if (!keptSet.count(fi.def->uid)) out.removed.push_back(fi.def->uid);
  }
  std::sort(out.removed.begin(), out.removed.end());
  return out;
}

stubbify::StubbedPackage stubbifyBundle(const Bundle& b,
                                        const fs::path& bundlePkgDir,
                                        const ReachabilitySet& rs,
                                        const stubbify::StubbifyOptions& opts) {
  for (const auto& uid : b.kept) {
    if (!b.positionMap.count(uid))
      throw MapGap("kept uid has no position map entry: " + uid);
  }
  PackageHandle bundlePkg = PackageHandle::load(bundlePkgDir);

  // Bundle uid (by position) -> original uid.
  std::map<std::string, std::string> toOriginal;
  for (const auto& [orig, span] : b.positionMap) {
    std::string bundleUid = "bundle.mm:" + std::to_string(span.startLine) +
                            ":" + std::to_string(span.startCol);
    toOriginal[bundleUid] = orig;
  }

  ReachabilitySet bundleRs;
  bundleRs.mode = rs.mode;
  bundleRs.entryPoints = rs.entryPoints;
  bundleRs.reachableFiles.insert("bundle.mm");
  std::string text = readFile(bundlePkgDir / "bundle.mm");
  lang::ModulePtr ast = lang::parse(text, "bundle.mm");
  for (const auto& fi : lang::functionsOf(*ast)) {
    auto it = toOriginal.find(fi.def->uid);
    if (it == toOriginal.end()) {
      // Not traceable to the original program (bundler-introduced): never
      // stub it.
      bundleRs.reachableFunctions.insert(fi.def->uid);
    } else if (rs.reachableFunctions.count(it->second)) {
      bundleRs.reachableFunctions.insert(fi.def->uid);
    }
  }

  stubbify::StubbifyOptions bundleOpts = opts;
  bundleOpts.noFileStubs = true;
  return stubbify::stubbifyPackage(bundlePkg, bundleRs, bundleOpts);
}

}  // namespace stubshrink::bundler
