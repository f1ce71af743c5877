#include "stubshrink/stubbify.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "stubshrink/errors.hpp"
#include "stubshrink/module_info.hpp"
#include "stubshrink/parser.hpp"
#include "stubshrink/printer.hpp"

namespace stubshrink::stubbify {

using interp::AnalyzedFile;
using interp::Package;
using lang::FnKind;
using lang::FunctionDef;
using lang::FunctionDefPtr;
using nlohmann::json;

namespace {

std::string quote(const std::string& s) {
  std::string r = "\"";
  for (char c : s) {
    if (c == '"') r += "\\\"";
    else if (c == '\\') r += "\\\\";
    else if (c == '\n') r += "\\n";
    else r.push_back(c);
  }
  return r + "\"";
}

std::string readFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ManifestError("cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// The reassignment / property-copy target by function kind (Unstubbable for
// constructors).
struct StubShape {
  std::string copySource;  // expression yielding the pre-expansion function
  std::string reassign;    // statement rebinding the name to toExec
};

StubShape shapeFor(const FunctionDef& def) {
  StubShape s;
  switch (def.kind) {
    case FnKind::Named:
      s.copySource = *def.name;
      s.reassign = *def.name + " = toExec;";
      break;
    case FnKind::Method:
      if (def.stringKey) {
        s.copySource = "this[" + quote(*def.name) + "]";
        s.reassign = "this[" + quote(*def.name) + "] = toExec;";
      } else {
        s.copySource = "this." + *def.name;
        s.reassign = "this." + *def.name + " = toExec;";
      }
      break;
    case FnKind::Getter:
      s.copySource = "this.__lookupGetter__(" + quote(*def.name) + ")";
      s.reassign = "this.__defineGetter__(" + quote(*def.name) + ", toExec);";
      break;
    case FnKind::Setter:
      s.copySource = "this.__lookupSetter__(" + quote(*def.name) + ")";
      s.reassign = "this.__defineSetter__(" + quote(*def.name) + ", toExec);";
      break;
    case FnKind::Anonymous:
    case FnKind::Constructor:
      break;
  }
  return s;
}

std::vector<lang::StmtPtr> parseStmts(const std::string& text) {
  lang::ModulePtr m = lang::parse(text, "<stub>");
  std::vector<lang::StmtPtr> out;
  for (auto& item : m->items)
    out.push_back(std::move(std::get<lang::StmtPtr>(item.node)));
  return out;
}

}  // namespace

std::string emitFunctionStub(const FunctionDef& def, const std::string& uid) {
  if (def.kind == FnKind::Constructor)
    throw Unstubbable("constructors are never stubbed: " + uid);
  if (def.kind == FnKind::Anonymous) {
    // Cache-first: the code string (never the function value) is cached, and
    // every call re-evaluates it so the current enclosing scope is captured.
    return "let s = stubs.getStub(" + quote(uid) + ");\n"
           "if (s == null) {\n"
           "  s = stubs.getCode(" + quote(uid) + ");\n"
           "  stubs.setStub(" + quote(uid) + ", s);\n"
           "}\n"
           "let toExec = eval(s);\n"
           "stubs.cpFunProps(this, toExec);\n"
           "return toExec.apply(this, arguments);\n";
  }
  StubShape shape = shapeFor(def);
  return "let toExec = eval(stubs.getCode(" + quote(uid) + "));\n"
         "stubs.cpFunProps(" + shape.copySource + ", toExec);\n" +
         shape.reassign + "\n"
         "return toExec.apply(this, arguments);\n";
}

std::string storedFunctionText(const FunctionDef& def) {
  FunctionDefPtr clone = lang::cloneFunctionDef(def);
  clone->kind = FnKind::Anonymous;
  clone->name.reset();
  clone->stringKey = false;
  clone->stubIgnore = false;
  auto expr = std::make_unique<lang::Expr>();
  expr->node = lang::FunctionExpr{clone};
  auto stmt = std::make_unique<lang::Stmt>();
  stmt->node = lang::ExprStmt{std::move(expr)};
  std::vector<lang::StmtPtr> stmts;
  stmts.push_back(std::move(stmt));
  return lang::printStmts(stmts);
}

FileStub emitFileStub(const lang::Module& m) {
  FileStub out;
  if (m.style == lang::ModuleStyle::Esm) {
    std::string stub;
    {
      lang::Module importsOnly;
      importsOnly.path = m.path;
      for (const auto& item : m.items) {
        if (const auto* imp = std::get_if<lang::ImportDecl>(&item.node)) {
          lang::Item copy;
          copy.span = item.span;
          copy.node = *imp;
          importsOnly.items.push_back(std::move(copy));
        }
      }
      stub = lang::print(importsOnly);
    }
    stub += "let exportObj = eval(stubs.getCodeForFile(" + quote(m.path) +
            "));\n";

    // Named exports re-bind from the eval result; the stored body ends in an
    // object literal mapping every export name to its value.
    struct ExportInfo {
      std::string name;
      lang::ExprPtr value;
    };
    std::vector<ExportInfo> exports;
    std::vector<lang::StmtPtr> stored;
    for (const auto& item : m.items) {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, lang::StmtPtr>) {
              stored.push_back(lang::cloneStmt(*n));
            } else if constexpr (std::is_same_v<T, lang::ExportFunctionDecl>) {
              auto s = std::make_unique<lang::Stmt>();
              s->span = n.fn->span;
              s->node = lang::FunctionDeclStmt{lang::cloneFunctionDef(*n.fn)};
              stored.push_back(std::move(s));
              auto ref = std::make_unique<lang::Expr>();
              ref->node = lang::Identifier{*n.fn->name};
              exports.push_back({*n.fn->name, std::move(ref)});
            } else if constexpr (std::is_same_v<T, lang::ExportNamedDecl>) {
              for (const auto& e : n.entries) {
                auto ref = std::make_unique<lang::Expr>();
                ref->node = lang::Identifier{e.local};
                exports.push_back({e.exported, std::move(ref)});
              }
            } else if constexpr (std::is_same_v<T, lang::ExportDefaultDecl>) {
              exports.push_back({"default", lang::cloneExpr(*n.value)});
            }
          },
          item.node);
    }
    for (const auto& e : exports) {
      if (e.name == "default") {
        stub += "export default exportObj[\"default\"];\n";
      } else {
        std::string fresh = e.name + "$exp";
        stub += "let " + fresh + " = exportObj[" + quote(e.name) + "];\n";
        stub += "export { " + fresh + " as " + e.name + " };\n";
      }
    }
    out.stubText = lang::print(*lang::parse(stub, m.path));

    lang::ObjectLit obj;
    for (auto& e : exports) {
      lang::ObjectEntry entry;
      entry.kind = lang::ObjectEntry::Kind::Plain;
      entry.key = e.name;
      entry.stringKey = true;
      entry.value = std::move(e.value);
      obj.entries.push_back(std::move(entry));
    }
    auto objExpr = std::make_unique<lang::Expr>();
    objExpr->node = std::move(obj);
    auto objStmt = std::make_unique<lang::Stmt>();
    objStmt->node = lang::ExprStmt{std::move(objExpr)};
    stored.push_back(std::move(objStmt));
    out.storedText = lang::printStmts(stored);
    return out;
  }
  // cjs / plain: require and module.exports are legal inside an eval, so the
  // stored body is the original, unchanged.
  out.stubText = lang::print(
      *lang::parse("eval(stubs.getCodeForFile(" + quote(m.path) + "));",
                   m.path));
  out.storedText = lang::print(m);
  return out;
}

// ---------------------------------------------------------------------------
// Guard transform
// ---------------------------------------------------------------------------

namespace {

lang::ExprPtr ident(const std::string& name) {
  auto e = std::make_unique<lang::Expr>();
  e->node = lang::Identifier{name};
  return e;
}

lang::ExprPtr stringLit(const std::string& s) {
  auto e = std::make_unique<lang::Expr>();
  e->node = lang::StringLit{s};
  return e;
}

void guardStmt(lang::Stmt& s);

void guardFn(FunctionDef& fn) {
  for (auto& st : fn.body) guardStmt(*st);
}

void guardExpr(lang::Expr& e) {
  std::visit(
      [&](auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, lang::ArrayLit>) {
          for (auto& el : n.elements) guardExpr(*el);
        } else if constexpr (std::is_same_v<T, lang::ObjectLit>) {
          for (auto& en : n.entries) {
            if (en.value) guardExpr(*en.value);
            if (en.fn) guardFn(*en.fn);
          }
        } else if constexpr (std::is_same_v<T, lang::FunctionExpr>) {
          guardFn(*n.fn);
        } else if constexpr (std::is_same_v<T, lang::CallExpr>) {
          guardExpr(*n.callee);
          for (auto& a : n.args) guardExpr(*a);
        } else if constexpr (std::is_same_v<T, lang::MemberExpr>) {
          guardExpr(*n.object);
        } else if constexpr (std::is_same_v<T, lang::IndexExpr>) {
          guardExpr(*n.object);
          guardExpr(*n.index);
        } else if constexpr (std::is_same_v<T, lang::NewExpr>) {
          guardExpr(*n.callee);
          for (auto& a : n.args) guardExpr(*a);
        } else if constexpr (std::is_same_v<T, lang::BinaryExpr>) {
          guardExpr(*n.lhs);
          guardExpr(*n.rhs);
        } else if constexpr (std::is_same_v<T, lang::UnaryExpr>) {
          guardExpr(*n.operand);
        }
      },
      e.node);

  auto* call = std::get_if<lang::CallExpr>(&e.node);
  if (!call) return;
  // Leave generated wrappers alone when reapplied.
  if (const auto* id = std::get_if<lang::Identifier>(&call->callee->node)) {
    if (id->name == "__guardCheck" || id->name == "__guardCall") return;
  }
  lang::CallExpr taken = std::move(*call);
  auto argsArray = std::make_unique<lang::Expr>();
  {
    lang::ArrayLit arr;
    arr.elements = std::move(taken.args);
    argsArray->node = std::move(arr);
  }
  if (auto* mem = std::get_if<lang::MemberExpr>(&taken.callee->node)) {
    lang::CallExpr wrapped;
    wrapped.callee = ident("__guardCall");
    wrapped.args.push_back(std::move(mem->object));
    wrapped.args.push_back(stringLit(mem->name));
    wrapped.args.push_back(std::move(argsArray));
    e.node = std::move(wrapped);
  } else if (auto* ix = std::get_if<lang::IndexExpr>(&taken.callee->node)) {
    lang::CallExpr wrapped;
    wrapped.callee = ident("__guardCall");
    wrapped.args.push_back(std::move(ix->object));
    wrapped.args.push_back(std::move(ix->index));
    wrapped.args.push_back(std::move(argsArray));
    e.node = std::move(wrapped);
  } else {
    lang::CallExpr check;
    check.callee = ident("__guardCheck");
    check.args.push_back(std::move(taken.callee));
    auto checkExpr = std::make_unique<lang::Expr>();
    checkExpr->node = std::move(check);
    lang::CallExpr wrapped;
    wrapped.callee = std::move(checkExpr);
    auto& arr = std::get<lang::ArrayLit>(argsArray->node);
    wrapped.args = std::move(arr.elements);
    e.node = std::move(wrapped);
  }
}

void guardStmt(lang::Stmt& s) {
  std::visit(
      [&](auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, lang::LetStmt>) {
          guardExpr(*n.value);
        } else if constexpr (std::is_same_v<T, lang::AssignStmt>) {
          guardExpr(*n.target);
          guardExpr(*n.value);
        } else if constexpr (std::is_same_v<T, lang::ExprStmt>) {
          guardExpr(*n.value);
        } else if constexpr (std::is_same_v<T, lang::ReturnStmt>) {
          if (n.value) guardExpr(*n.value);
        } else if constexpr (std::is_same_v<T, lang::IfStmt>) {
          guardExpr(*n.cond);
          for (auto& c : n.thenBody) guardStmt(*c);
          if (n.elseBody)
            for (auto& c : *n.elseBody) guardStmt(*c);
        } else if constexpr (std::is_same_v<T, lang::WhileStmt>) {
          guardExpr(*n.cond);
          for (auto& c : n.body) guardStmt(*c);
        } else if constexpr (std::is_same_v<T, lang::FunctionDeclStmt>) {
          guardFn(*n.fn);
        } else if constexpr (std::is_same_v<T, lang::ClassDeclStmt>) {
          if (n.cls->ctor) guardFn(*n.cls->ctor);
          for (auto& m : n.cls->members) guardFn(*m);
        }
      },
      s.node);
}

}  // namespace

std::string applyGuards(const std::string& storedText,
                        const GuardPolicy& /*policy*/) {
  lang::ModulePtr m = lang::parse(storedText, "<stored>");
  for (auto& item : m->items) {
    if (auto* sp = std::get_if<lang::StmtPtr>(&item.node)) guardStmt(**sp);
  }
  return lang::print(*m);
}

// ---------------------------------------------------------------------------
// Planning and emission
// ---------------------------------------------------------------------------

namespace {

struct FileWork {
  AnalyzedFile file;
  lang::ModulePtr ast;
  std::string baseline;  // canonical print of the original
  bool isFileStub = false;
  FileStub fileStub;
  struct FnStub {
    FunctionDefPtr def;
    std::string uid;
    std::string storedText;
  };
  std::vector<FnStub> fnStubs;
};

struct PlannerResult {
  StubPlan plan;
  std::vector<FileWork> files;
};

PlannerResult runPlanner(const PackageHandle& pkg, const ReachabilitySet& rs,
                         const StubPlanOptions& opts) {
  PlannerResult result;
  result.plan.guardMode = opts.guardMode;

  std::set<std::string> allUids;
  std::vector<FileWork> works;
  for (const AnalyzedFile& af : pkg.analyzedFiles()) {
    FileWork w;
    w.file = af;
    w.ast = lang::parse(readFile(af.absPath), af.relPath);
    w.baseline = lang::print(*w.ast);
    for (const auto& fi : lang::functionsOf(*w.ast)) allUids.insert(fi.def->uid);
    works.push_back(std::move(w));
  }
  for (const auto& uid : rs.reachableFunctions) {
    if (!allUids.count(uid))
      throw RevisionMismatch("reachability set references unknown uid " + uid);
  }

  for (FileWork& w : works) {
    auto fns = lang::functionsOf(*w.ast);
    bool anyReachable = false;
    bool anyAnnotated = false;
    for (const auto& fi : fns) {
      if (rs.reachableFunctions.count(fi.def->uid)) anyReachable = true;
      if (fi.def->stubIgnore) anyAnnotated = true;
    }
    bool topReached = rs.reachableFiles.count(w.file.relPath) > 0;

    if (!opts.noFileStubs && !anyReachable && !topReached) {
      if (anyAnnotated) {
        result.plan.skippedAnnotated.push_back(w.file.relPath);
      } else {
        FileStub fstub = emitFileStub(*w.ast);
        if (!opts.forceAll && fstub.stubText.size() >= w.baseline.size()) {
          result.plan.skippedTooSmall.push_back(w.file.relPath);
        } else {
          w.isFileStub = true;
          w.fileStub = std::move(fstub);
          result.plan.fileStubs.push_back(w.file.relPath);
        }
      }
      result.files.push_back(std::move(w));
      continue;
    }

    // Function granularity: only the outermost unreachable function in any
    // nesting chain becomes a stub; the ones inside it ride along in the
    // stored text.
    std::set<const FunctionDef*> chosen;
    for (const auto& fi : fns) {
      if (rs.reachableFunctions.count(fi.def->uid)) continue;
      bool suppressed = false;
      for (lang::FunctionDefPtr p = fi.parent; p;) {
        if (chosen.count(p.get())) {
          suppressed = true;
          break;
        }
        // find p's parent
        lang::FunctionDefPtr next;
        for (const auto& fj : fns)
          if (fj.def == p) {
            next = fj.parent;
            break;
          }
        p = next;
      }
      if (suppressed) continue;
      if (fi.def->kind == FnKind::Constructor) {
        result.plan.skippedUnstubbable.push_back(fi.def->uid);
        continue;
      }
      if (fi.def->stubIgnore) {
        result.plan.skippedAnnotated.push_back(fi.def->uid);
        continue;
      }
      std::string stubText = emitFunctionStub(*fi.def, fi.def->uid);
      std::vector<lang::StmtPtr> stubBody = parseStmts(stubText);
      std::vector<lang::StmtPtr> original = std::move(fi.def->body);
      fi.def->body = std::move(stubBody);
      std::string withStub = lang::print(*w.ast);
      fi.def->body = std::move(original);
      if (!opts.forceAll && withStub.size() >= w.baseline.size()) {
        result.plan.skippedTooSmall.push_back(fi.def->uid);
        continue;
      }
      chosen.insert(fi.def.get());
      result.plan.functionStubs.push_back(fi.def->uid);
      FileWork::FnStub fnStub;
      fnStub.def = fi.def;
      fnStub.uid = fi.def->uid;
      fnStub.storedText = storedFunctionText(*fi.def);
      w.fnStubs.push_back(std::move(fnStub));
    }
    result.files.push_back(std::move(w));
  }
  return result;
}

}  // namespace

StubPlan planStubs(const PackageHandle& pkg, const ReachabilitySet& rs,
                   const StubPlanOptions& opts) {
  return runPlanner(pkg, rs, opts).plan;
}

StubbedPackage stubbifyPackage(const PackageHandle& pkg,
                               const ReachabilitySet& rs,
                               const StubbifyOptions& opts) {
  const fs::path rootDir = pkg.root().dir;
  for (const AnalyzedFile& af : pkg.analyzedFiles()) {
    if (af.relPath.rfind("../", 0) == 0)
      throw ManifestError(
          "stubbify requires all dependencies inside the package tree: " +
          af.relPath);
  }
  for (const auto& p : pkg.packages()) {
    std::string rel = p->dir.lexically_relative(rootDir).generic_string();
    if (rel.rfind("../", 0) == 0)
      throw ManifestError("package outside the tree: " + p->dir.string());
  }

  StubPlanOptions planOpts;
  planOpts.guardMode = opts.guard;
  planOpts.forceAll = opts.forceAll;
  planOpts.noFileStubs = opts.noFileStubs;
  PlannerResult planned = runPlanner(pkg, rs, planOpts);

  bool guarded = opts.guard != GuardPolicy::Mode::Off;
  interp::GuardPolicy policy;
  policy.mode = opts.guard;

  std::map<std::string, std::string> staging;  // rel path -> content
  std::map<std::string, std::string> entries;  // CodeStore
  report::SizeReport size;

  for (FileWork& w : planned.files) {
    std::string content;
    if (w.isFileStub) {
      content = w.fileStub.stubText;
      entries[w.file.relPath] = guarded
                                    ? applyGuards(w.fileStub.storedText, policy)
                                    : w.fileStub.storedText;
    } else if (!w.fnStubs.empty()) {
      for (FileWork::FnStub& fs : w.fnStubs) {
        entries[fs.uid] =
            guarded ? applyGuards(fs.storedText, policy) : fs.storedText;
        fs.def->body = parseStmts(emitFunctionStub(*fs.def, fs.uid));
      }
      content = lang::print(*w.ast);
    } else {
      content = w.baseline;
    }
    staging[w.file.relPath] = content;
    size.perFile.push_back(
        {w.file.relPath, w.baseline.size(), content.size()});
    size.originalBytes += w.baseline.size();
    size.stubbedBytes += content.size();
  }

  // Manifests: every package in the output tree carries the marker pointing
  // at the root store.
  for (const auto& p : pkg.packages()) {
    fs::path rel = p->dir.lexically_relative(rootDir);
    std::string prefix;
    for (const auto& part : rel) {
      if (part == ".") continue;
      prefix += "../";
      (void)part;
    }
    interp::PackageManifest m = p->manifest;
    m.stubbed = true;
    m.guardMode = interp::guardModeName(opts.guard);
    m.codeStore = prefix + "stubs.store.json";
    std::string relStr = rel.generic_string() == "."
                             ? "minipkg.json"
                             : rel.generic_string() + "/minipkg.json";
    staging[relStr] = interp::manifestToJson(m);
  }

  // Everything else (tests, dev dependencies, extras) copies verbatim.
  for (auto it = fs::recursive_directory_iterator(rootDir);
       it != fs::recursive_directory_iterator(); ++it) {
    if (!it->is_regular_file()) continue;
    std::string rel = it->path().lexically_relative(rootDir).generic_string();
    if (staging.count(rel)) continue;
    staging[rel] = readFile(it->path());
  }

  {
    json store;
    store["guarded"] = guarded;
    store["entries"] = entries;
    staging["stubs.store.json"] = store.dump(2) + "\n";
  }
  staging["size.report.json"] = size.toJson();

  if (fs::exists(opts.outDir)) {
    if (!opts.force)
      throw OutputExists("output directory exists: " + opts.outDir.string() +
                         " (use --force to replace)");
    fs::remove_all(opts.outDir);
  }
  for (const auto& [rel, content] : staging) {
    fs::path dest = opts.outDir / rel;
    fs::create_directories(dest.parent_path());
    std::ofstream out(dest, std::ios::binary);
    if (!out) throw ManifestError("cannot write " + dest.string());
    out << content;
  }

  StubbedPackage result;
  result.outDir = opts.outDir;
  result.plan = std::move(planned.plan);
  result.size = std::move(size);
  return result;
}

}  // namespace stubshrink::stubbify
