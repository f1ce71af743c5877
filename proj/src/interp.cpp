#include "stubshrink/interp.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "stubshrink/errors.hpp"
#include "stubshrink/parser.hpp"
#include "stubshrink/printer.hpp"

namespace stubshrink::interp {

using lang::BinaryOp;
using lang::FnKind;
using nlohmann::json;

GuardPolicy::Mode parseGuardMode(const std::string& s) {
  if (s == "off") return GuardPolicy::Mode::Off;
  if (s == "warn") return GuardPolicy::Mode::Warn;
  if (s == "exit") return GuardPolicy::Mode::Exit;
  throw std::runtime_error("unknown guard mode: " + s);
}

std::string guardModeName(GuardPolicy::Mode m) {
  switch (m) {
    case GuardPolicy::Mode::Off: return "off";
    case GuardPolicy::Mode::Warn: return "warn";
    case GuardPolicy::Mode::Exit: return "exit";
  }
  return "off";
}

namespace {

[[noreturn]] void rt(const std::string& msg,
                     MiniError::Kind kind = MiniError::Kind::Runtime) {
  throw MiniError{kind, msg, {}};
}

std::string readFileOrThrow(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) rt("cannot read module file " + p.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

const char* typeName(const Value& v) {
  if (v.isNull()) return "null";
  if (v.isNum()) return "number";
  if (v.isBool()) return "boolean";
  if (v.isStr()) return "string";
  if (v.isArray()) return "array";
  if (v.isObject()) return "object";
  if (v.isFunction()) return "function";
  if (v.isClass()) return "class";
  return "builtin";
}

}  // namespace

struct Interpreter::Frame {
  Value thisVal;
  ModuleRecord* module = nullptr;
};

struct Interpreter::Impl {
  Interpreter& self;
  const PackageHandle& packages;
  RuntimeConfig config;
  EnvPtr globals;
  std::map<std::string, std::unique_ptr<ModuleRecord>> modules;
  std::map<std::string, lang::ModulePtr> parseCache;
  std::map<const Package*, std::unique_ptr<StubRuntime>> stubRuntimes;
  std::vector<std::pair<std::string, Value>> dangerous;  // name -> builtin
  int depth = 0;
  std::vector<std::string> callStack;

  explicit Impl(Interpreter& s, const PackageHandle& pkgs,
                const RuntimeConfig& cfg)
      : self(s), packages(pkgs), config(cfg) {
    globals = std::make_shared<EnvData>();
    globals->sealed = true;
    auto native = [&](const char* name, NativeKind kind) {
      auto n = std::make_shared<NativeData>();
      n->kind = kind;
      n->name = name;
      globals->declare(name, Value::wrap(n));
    };
    native("print", NativeKind::Print);
    native("assert", NativeKind::Assert);
    native("len", NativeKind::Len);
    native("str", NativeKind::Str);
    native("push", NativeKind::Push);
    native("keys", NativeKind::Keys);
    native("eval", NativeKind::Eval);
    native("exec", NativeKind::Exec);
    native("execSync", NativeKind::ExecSync);
    native("spawn", NativeKind::Spawn);
    native("require", NativeKind::Require);
    for (const auto& name : config.guardPolicy.dangerousNames) {
      if (CellPtr c = globals->findLocal(name))
        dangerous.emplace_back(name, c->v);
    }
  }

  // --- module machinery ---

  ModuleRecord& record(const fs::path& absPath) {
    std::string key = absPath.lexically_normal().generic_string();
    auto it = modules.find(key);
    if (it != modules.end()) return *it->second;
    auto rec = std::make_unique<ModuleRecord>();
    rec->absPath = absPath.lexically_normal();
    rec->relPath = packages.relPath(rec->absPath);
    rec->owner = packages.ownerOf(rec->absPath);
    ModuleRecord& ref = *rec;
    modules.emplace(key, std::move(rec));
    return ref;
  }

  lang::ModulePtr parseFile(const fs::path& absPath,
                            const std::string& relPath) {
    auto it = parseCache.find(relPath);
    if (it != parseCache.end()) return it->second;
    std::string text = readFileOrThrow(absPath);
    lang::ModulePtr m;
    try {
      m = lang::parse(text, relPath);
    } catch (const ParseError& e) {
      rt(e.what(), MiniError::Kind::Parse);
    } catch (const StyleMixError& e) {
      rt(e.what(), MiniError::Kind::Parse);
    }
    parseCache[relPath] = m;
    return m;
  }

  StubRuntime* stubRuntimeFor(const Package* pkg) {
    if (!pkg || !pkg->manifest.stubbed) return nullptr;
    auto it = stubRuntimes.find(pkg);
    if (it != stubRuntimes.end()) return it->second.get();
    auto rtm = std::make_unique<StubRuntime>();
    rtm->pkg = pkg;
    fs::path storePath = pkg->dir / pkg->manifest.codeStore;
    if (config.codeStorePath && pkg == &packages.root())
      storePath = *config.codeStorePath;
    std::string text = readFileOrThrow(storePath);
    json j;
    try {
      j = json::parse(text);
      rtm->guarded = j.value("guarded", false);
      for (const auto& [k, v] : j.at("entries").items())
        rtm->entries[k] = v.get<std::string>();
    } catch (const json::exception& e) {
      rt("bad code store " + storePath.string() + ": " + e.what());
    }
    rtm->mode = config.guardPolicyOverridesPackage
                    ? config.guardPolicy.mode
                    : parseGuardMode(pkg->manifest.guardMode);
    auto obj = std::make_shared<ObjectData>();
    auto method = [&](const char* name, NativeKind kind) {
      auto n = std::make_shared<NativeData>();
      n->kind = kind;
      n->name = name;
      n->runtime = rtm.get();
      obj->props.set(name, Value::wrap(n));
    };
    method("getCode", NativeKind::StubGetCode);
    method("getCodeForFile", NativeKind::StubGetCodeForFile);
    method("getStub", NativeKind::StubGetStub);
    method("setStub", NativeKind::StubSetStub);
    method("cpFunProps", NativeKind::StubCpFunProps);
    rtm->stubsObject = Value::wrap(obj);
    StubRuntime* raw = rtm.get();
    stubRuntimes.emplace(pkg, std::move(rtm));
    return raw;
  }

  ModuleRecord& instantiate(const fs::path& absPath) {
    ModuleRecord& rec = record(absPath);
    if (rec.evaluated) return rec;
    if (rec.evaluating)
      rt("import cycle through " + rec.relPath, MiniError::Kind::Cycle);
    rec.evaluating = true;
    rec.ast = parseFile(rec.absPath, rec.relPath);
    rec.env = EnvData::child(globals);
    if (StubRuntime* srt = stubRuntimeFor(rec.owner))
      rec.env->declare("stubs", srt->stubsObject);
    if (self.onModuleExecuted) self.onModuleExecuted(rec.relPath);

    Frame frame;
    frame.thisVal = Value::null();
    frame.module = &rec;

    if (rec.ast->style == lang::ModuleStyle::Esm) {
      runEsm(rec, frame);
    } else {
      // cjs and plain share the runtime shape: `module`/`exports` are seeded
      // in every non-esm module, so a plain-looking file stub can still wire
      // exports from the eval of stored cjs code.
      runCjs(rec, frame);
    }
    rec.evaluating = false;
    rec.evaluated = true;
    return rec;
  }

  void runEsm(ModuleRecord& rec, Frame& frame) {
    // Import declarations are hoisted: all of them instantiate and bind, in
    // document order, before any other top-level statement runs.
    for (const auto& item : rec.ast->items) {
      if (const auto* imp = std::get_if<lang::ImportDecl>(&item.node))
        bindImport(rec, *imp);
    }
    std::vector<std::pair<std::string, CellPtr>> exports;
    auto addExport = [&](const std::string& name, CellPtr cell) {
      for (const auto& [n, c] : exports)
        if (n == name) rt("duplicate export '" + name + "' in " + rec.relPath);
      exports.emplace_back(name, cell);
    };
    struct Deferred { std::string local, exported; };
    std::vector<Deferred> deferred;
    std::optional<Value> defaultValue;
    for (const auto& item : rec.ast->items) {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, lang::StmtPtr>) {
              if (exec(*n, rec.env, frame).flow == Flow::Return)
                rt("return outside function in " + rec.relPath);
            } else if constexpr (std::is_same_v<T, lang::ExportFunctionDecl>) {
              declareFunction(n.fn, rec.env, &rec);
              deferred.push_back({*n.fn->name, *n.fn->name});
            } else if constexpr (std::is_same_v<T, lang::ExportNamedDecl>) {
              for (const auto& e : n.entries)
                deferred.push_back({e.local, e.exported});
            } else if constexpr (std::is_same_v<T, lang::ExportDefaultDecl>) {
              if (defaultValue) rt("duplicate default export in " + rec.relPath);
              defaultValue = eval(*n.value, rec.env, frame);
            }
          },
          item.node);
    }
    for (const auto& d : deferred) {
      CellPtr c = rec.env->findLocal(d.local);
      if (!c) rt("export of unbound name '" + d.local + "' in " + rec.relPath);
      addExport(d.exported, c);
    }
    if (defaultValue) {
      auto c = std::make_shared<Cell>(Cell{*defaultValue});
      addExport("default", c);
    }
    rec.esmExports = std::move(exports);
  }

  void bindImport(ModuleRecord& rec, const lang::ImportDecl& imp) {
    fs::path target;
    try {
      target = packages.resolve(imp.spec, rec.absPath, *rec.owner);
    } catch (const MissingDependency& e) {
      rt(e.what());
    }
    ModuleRecord& dep = instantiate(target);
    bool depEsm = dep.ast->style == lang::ModuleStyle::Esm;
    auto esmCell = [&](const std::string& name) -> CellPtr {
      for (const auto& [n, c] : dep.esmExports)
        if (n == name) return c;
      rt("module " + dep.relPath + " has no export named '" + name + "'");
    };
    auto cjsProp = [&](const std::string& name) -> Value {
      if (!dep.cjsExports.isObject())
        rt("module " + dep.relPath + " exports no named bindings");
      const Value* p = dep.cjsExports.object()->props.find(name);
      return p ? *p : Value::null();
    };
    if (imp.isDefault) {
      if (depEsm) {
        rec.env->bindings.emplace_back(imp.defaultLocal, esmCell("default"));
      } else {
        rec.env->declare(imp.defaultLocal, dep.cjsExports);
      }
      return;
    }
    for (const auto& b : imp.bindings) {
      if (depEsm) {
        // esm-to-esm imports share the exporter's binding cell (live).
        rec.env->bindings.emplace_back(b.local, esmCell(b.imported));
      } else {
        rec.env->declare(b.local, cjsProp(b.imported));
      }
    }
  }

  void runCjs(ModuleRecord& rec, Frame& frame) {
    auto exportsObj = std::make_shared<ObjectData>();
    auto moduleObj = std::make_shared<ObjectData>();
    moduleObj->props.set("exports", Value::wrap(exportsObj));
    rec.env->declare("exports", Value::wrap(exportsObj));
    rec.env->declare("module", Value::wrap(moduleObj));
    for (const auto& item : rec.ast->items) {
      const auto& sp = std::get<lang::StmtPtr>(item.node);
      if (exec(*sp, rec.env, frame).flow == Flow::Return)
        rt("return outside function in " + rec.relPath);
    }
    const Value* final = moduleObj->props.find("exports");
    rec.cjsExports = final ? *final : Value::null();
  }

  Value exportsView(ModuleRecord& rec) {
    if (rec.hasRequireView) return rec.requireView;
    if (rec.ast->style == lang::ModuleStyle::Esm) {
      auto obj = std::make_shared<ObjectData>();
      for (const auto& [name, cell] : rec.esmExports)
        obj->props.set(name, cell->v);
      rec.requireView = Value::wrap(obj);
    } else {
      rec.requireView = rec.cjsExports;
    }
    rec.hasRequireView = true;
    return rec.requireView;
  }

  // --- evaluation ---

  enum class Flow { Normal, Return };
  struct ExecResult {
    Flow flow = Flow::Normal;
    Value ret;
  };

  void declareFunction(const lang::FunctionDefPtr& def, EnvPtr env,
                       ModuleRecord* module) {
    if (env->findLocal(*def->name))
      rt("'" + *def->name + "' is already declared");
    env->declare(*def->name, makeFunction(def, env, module));
  }

  Value makeFunction(const lang::FunctionDefPtr& def, EnvPtr env,
                     ModuleRecord* module) {
    auto f = std::make_shared<FunctionData>();
    f->def = def;
    f->env = std::move(env);
    f->ownerModule = module;
    return Value::wrap(f);
  }

  ExecResult exec(const lang::Stmt& s, EnvPtr env, Frame& frame) {
    ExecResult result;
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, lang::LetStmt>) {
            if (env->findLocal(n.name))
              rt("'" + n.name + "' is already declared");
            Value v = eval(*n.value, env, frame);
            env->declare(n.name, std::move(v));
          } else if constexpr (std::is_same_v<T, lang::AssignStmt>) {
            assign(*n.target, eval(*n.value, env, frame), env, frame);
          } else if constexpr (std::is_same_v<T, lang::ExprStmt>) {
            result.ret = eval(*n.value, env, frame);
          } else if constexpr (std::is_same_v<T, lang::ReturnStmt>) {
            result.flow = Flow::Return;
            if (n.value) result.ret = eval(*n.value, env, frame);
          } else if constexpr (std::is_same_v<T, lang::IfStmt>) {
            Value c = eval(*n.cond, env, frame);
            if (!c.isBool()) rt("if condition must be a boolean");
            const std::vector<lang::StmtPtr>* body =
                c.boolean() ? &n.thenBody
                            : (n.elseBody ? &*n.elseBody : nullptr);
            if (body) {
              EnvPtr child = EnvData::child(env);
              for (const auto& st : *body) {
                ExecResult r = exec(*st, child, frame);
                if (r.flow == Flow::Return) {
                  result = std::move(r);
                  return;
                }
              }
            }
          } else if constexpr (std::is_same_v<T, lang::WhileStmt>) {
            for (;;) {
              Value c = eval(*n.cond, env, frame);
              if (!c.isBool()) rt("while condition must be a boolean");
              if (!c.boolean()) break;
              EnvPtr child = EnvData::child(env);
              bool returned = false;
              for (const auto& st : n.body) {
                ExecResult r = exec(*st, child, frame);
                if (r.flow == Flow::Return) {
                  result = std::move(r);
                  returned = true;
                  break;
                }
              }
              if (returned) return;
            }
          } else if constexpr (std::is_same_v<T, lang::FunctionDeclStmt>) {
            declareFunction(n.fn, env, frame.module);
          } else if constexpr (std::is_same_v<T, lang::ClassDeclStmt>) {
            execClassDecl(*n.cls, env, frame);
          }
        },
        s.node);
    return result;
  }

  void execClassDecl(const lang::ClassDef& cls, EnvPtr env, Frame& frame) {
    if (env->findLocal(cls.name)) rt("'" + cls.name + "' is already declared");
    auto data = std::make_shared<ClassData>();
    if (cls.ctor) data->ctor = makeFunction(cls.ctor, env, frame.module);
    for (const auto& m : cls.members) {
      Value fn = makeFunction(m, env, frame.module);
      if (m->kind == FnKind::Getter) data->getters.set(*m->name, fn);
      else if (m->kind == FnKind::Setter) data->setters.set(*m->name, fn);
      else data->methods.set(*m->name, fn);
    }
    env->declare(cls.name, Value::wrap(data));
  }

  void assign(const lang::Expr& target, Value v, EnvPtr env, Frame& frame) {
    if (const auto* id = std::get_if<lang::Identifier>(&target.node)) {
      for (EnvData* e = env.get(); e; e = e->parent.get()) {
        if (CellPtr c = e->findLocal(id->name)) {
          if (e->sealed) rt("cannot assign to builtin '" + id->name + "'");
          c->v = std::move(v);
          return;
        }
      }
      rt("assignment to unbound identifier '" + id->name + "'");
    } else if (const auto* mem = std::get_if<lang::MemberExpr>(&target.node)) {
      Value obj = eval(*mem->object, env, frame);
      memberSet(obj, mem->name, std::move(v));
    } else if (const auto* ix = std::get_if<lang::IndexExpr>(&target.node)) {
      Value obj = eval(*ix->object, env, frame);
      Value key = eval(*ix->index, env, frame);
      indexSet(obj, key, std::move(v));
    } else {
      rt("invalid assignment target");
    }
  }

  Value eval(const lang::Expr& e, EnvPtr env, Frame& frame) {
    return std::visit(
        [&](const auto& n) -> Value {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, lang::NumberLit>) {
            return Value::num(n.value);
          } else if constexpr (std::is_same_v<T, lang::StringLit>) {
            return Value::str(n.value);
          } else if constexpr (std::is_same_v<T, lang::BoolLit>) {
            return Value::boolean(n.value);
          } else if constexpr (std::is_same_v<T, lang::NullLit>) {
            return Value::null();
          } else if constexpr (std::is_same_v<T, lang::Identifier>) {
            CellPtr c = env->find(n.name);
            if (!c) rt("unbound identifier '" + n.name + "'");
            return c->v;
          } else if constexpr (std::is_same_v<T, lang::ThisExpr>) {
            return frame.thisVal;
          } else if constexpr (std::is_same_v<T, lang::ArrayLit>) {
            auto arr = std::make_shared<ArrayData>();
            for (const auto& el : n.elements)
              arr->items.push_back(eval(*el, env, frame));
            return Value::wrap(arr);
          } else if constexpr (std::is_same_v<T, lang::ObjectLit>) {
            auto obj = std::make_shared<ObjectData>();
            for (const auto& en : n.entries) {
              switch (en.kind) {
                case lang::ObjectEntry::Kind::Plain:
                  obj->props.set(en.key, eval(*en.value, env, frame));
                  break;
                case lang::ObjectEntry::Kind::Method:
                  obj->props.set(en.key, makeFunction(en.fn, env, frame.module));
                  break;
                case lang::ObjectEntry::Kind::Getter:
                  obj->getters.set(en.key, makeFunction(en.fn, env, frame.module));
                  break;
                case lang::ObjectEntry::Kind::Setter:
                  obj->setters.set(en.key, makeFunction(en.fn, env, frame.module));
                  break;
              }
            }
            return Value::wrap(obj);
          } else if constexpr (std::is_same_v<T, lang::FunctionExpr>) {
            return makeFunction(n.fn, env, frame.module);
          } else if constexpr (std::is_same_v<T, lang::CallExpr>) {
            return evalCall(n, env, frame);
          } else if constexpr (std::is_same_v<T, lang::MemberExpr>) {
            Value obj = eval(*n.object, env, frame);
            return memberGet(obj, n.name);
          } else if constexpr (std::is_same_v<T, lang::IndexExpr>) {
            Value obj = eval(*n.object, env, frame);
            Value key = eval(*n.index, env, frame);
            return indexGet(obj, key);
          } else if constexpr (std::is_same_v<T, lang::NewExpr>) {
            Value cls = eval(*n.callee, env, frame);
            if (!cls.isClass()) rt("new requires a class");
            std::vector<Value> args;
            for (const auto& a : n.args) args.push_back(eval(*a, env, frame));
            auto obj = std::make_shared<ObjectData>();
            obj->cls = cls.klass();
            Value instance = Value::wrap(obj);
            if (!cls.klass()->ctor.isNull())
              call(cls.klass()->ctor, instance, std::move(args), env, frame);
            return instance;
          } else if constexpr (std::is_same_v<T, lang::BinaryExpr>) {
            return evalBinary(n, env, frame);
          } else if constexpr (std::is_same_v<T, lang::UnaryExpr>) {
            Value v = eval(*n.operand, env, frame);
            if (!v.isBool()) rt("'!' expects a boolean");
            return Value::boolean(!v.boolean());
          }
        },
        e.node);
  }

  Value evalCall(const lang::CallExpr& n, EnvPtr env, Frame& frame) {
    Value thisVal;
    Value fn;
    if (const auto* mem = std::get_if<lang::MemberExpr>(&n.callee->node)) {
      thisVal = eval(*mem->object, env, frame);
      fn = memberGet(thisVal, mem->name);
    } else if (const auto* ix = std::get_if<lang::IndexExpr>(&n.callee->node)) {
      thisVal = eval(*ix->object, env, frame);
      Value key = eval(*ix->index, env, frame);
      fn = indexGet(thisVal, key);
    } else {
      fn = eval(*n.callee, env, frame);
    }
    std::vector<Value> args;
    args.reserve(n.args.size());
    for (const auto& a : n.args) args.push_back(eval(*a, env, frame));
    return call(fn, thisVal, std::move(args), env, frame);
  }

  Value evalBinary(const lang::BinaryExpr& n, EnvPtr env, Frame& frame) {
    if (n.op == BinaryOp::And || n.op == BinaryOp::Or) {
      Value l = eval(*n.lhs, env, frame);
      if (!l.isBool()) rt("logical operand must be a boolean");
      if (n.op == BinaryOp::And && !l.boolean()) return Value::boolean(false);
      if (n.op == BinaryOp::Or && l.boolean()) return Value::boolean(true);
      Value r = eval(*n.rhs, env, frame);
      if (!r.isBool()) rt("logical operand must be a boolean");
      return r;
    }
    Value l = eval(*n.lhs, env, frame);
    Value r = eval(*n.rhs, env, frame);
    switch (n.op) {
      case BinaryOp::Add:
        if (l.isNum() && r.isNum()) return Value::num(l.num() + r.num());
        if (l.isStr() && r.isStr()) return Value::str(l.text() + r.text());
        rt(std::string("'+' expects two numbers or two strings, got ") +
           typeName(l) + " and " + typeName(r));
      case BinaryOp::Sub:
      case BinaryOp::Mul:
      case BinaryOp::Div: {
        if (!l.isNum() || !r.isNum()) rt("arithmetic expects numbers");
        double a = l.num(), b = r.num();
        double out = n.op == BinaryOp::Sub ? a - b
                     : n.op == BinaryOp::Mul ? a * b
                                             : a / b;
        return Value::num(out);
      }
      case BinaryOp::Eq:
        return Value::boolean(valueEq(l, r));
      case BinaryOp::Ne:
        return Value::boolean(!valueEq(l, r));
      case BinaryOp::Lt:
      case BinaryOp::Le:
      case BinaryOp::Gt:
      case BinaryOp::Ge: {
        int c;
        if (l.isNum() && r.isNum()) {
          if (l.num() < r.num()) c = -1;
          else if (l.num() > r.num()) c = 1;
          else c = 0;
          if (std::isnan(l.num()) || std::isnan(r.num()))
            return Value::boolean(false);
        } else if (l.isStr() && r.isStr()) {
          int cc = l.text().compare(r.text());
          c = cc < 0 ? -1 : (cc > 0 ? 1 : 0);
        } else {
          rt("comparison expects two numbers or two strings");
        }
        switch (n.op) {
          case BinaryOp::Lt: return Value::boolean(c < 0);
          case BinaryOp::Le: return Value::boolean(c <= 0);
          case BinaryOp::Gt: return Value::boolean(c > 0);
          default: return Value::boolean(c >= 0);
        }
      }
      default:
        rt("unsupported operator");
    }
  }

  static bool valueEq(const Value& a, const Value& b) {
    if (a.v.index() != b.v.index()) return false;
    if (a.isNull()) return true;
    if (a.isNum()) return a.num() == b.num();
    if (a.isBool()) return a.boolean() == b.boolean();
    if (a.isStr()) return a.text() == b.text();
    if (a.isArray()) return a.array() == b.array();
    if (a.isObject()) return a.object() == b.object();
    if (a.isFunction()) return a.function() == b.function();
    if (a.isClass()) return a.klass() == b.klass();
    return a.native() == b.native();
  }

  // --- properties ---

  Value memberGet(const Value& obj, const std::string& name) {
    if (obj.isObject()) {
      ObjectData& o = *obj.object();
      if (Value* g = o.getters.find(name)) return callAccessor(*g, obj, {});
      if (Value* p = o.props.find(name)) return *p;
      if (o.cls) {
        if (Value* g = o.cls->getters.find(name))
          return callAccessor(*g, obj, {});
        if (Value* m = o.cls->methods.find(name)) return *m;
      }
      if (Value v = objectIntrinsic(obj, name); !v.isNull()) return v;
      return Value::null();
    }
    if (obj.isFunction()) {
      if (Value* p = obj.function()->props.find(name)) return *p;
      if (name == "apply") return boundNative(NativeKind::Apply, "apply", obj);
      return Value::null();
    }
    if (obj.isNative()) {
      if (name == "apply") return boundNative(NativeKind::Apply, "apply", obj);
      rt("builtin has no property '" + name + "'");
    }
    rt(std::string(typeName(obj)) + " has no property '" + name + "'");
  }

  Value objectIntrinsic(const Value& obj, const std::string& name) {
    if (name == "__lookupGetter__")
      return boundNative(NativeKind::LookupGetter, name, obj);
    if (name == "__defineGetter__")
      return boundNative(NativeKind::DefineGetter, name, obj);
    if (name == "__lookupSetter__")
      return boundNative(NativeKind::LookupSetter, name, obj);
    if (name == "__defineSetter__")
      return boundNative(NativeKind::DefineSetter, name, obj);
    return Value::null();
  }

  Value boundNative(NativeKind kind, const std::string& name,
                    const Value& bound) {
    auto n = std::make_shared<NativeData>();
    n->kind = kind;
    n->name = name;
    n->bound = bound;
    return Value::wrap(n);
  }

  void memberSet(const Value& obj, const std::string& name, Value v) {
    if (obj.isObject()) {
      ObjectData& o = *obj.object();
      if (Value* s = o.setters.find(name)) {
        callAccessor(*s, obj, {std::move(v)});
        return;
      }
      if (o.cls) {
        if (Value* s = o.cls->setters.find(name)) {
          callAccessor(*s, obj, {std::move(v)});
          return;
        }
      }
      o.props.set(name, std::move(v));
      return;
    }
    if (obj.isFunction()) {
      obj.function()->props.set(name, std::move(v));
      return;
    }
    rt(std::string("cannot set property '") + name + "' on " + typeName(obj));
  }

  Value callAccessor(const Value& fn, const Value& thisVal,
                     std::vector<Value> args) {
    Frame f;
    f.thisVal = thisVal;
    f.module = fn.isFunction() ? fn.function()->ownerModule : nullptr;
    return call(fn, thisVal, std::move(args), nullptr, f);
  }

  static std::optional<std::size_t> arrayIndex(const Value& key) {
    if (!key.isNum()) return std::nullopt;
    double d = key.num();
    if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d)))
      return std::nullopt;
    return static_cast<std::size_t>(d);
  }

  Value indexGet(const Value& obj, const Value& key) {
    if (obj.isArray()) {
      auto idx = arrayIndex(key);
      if (!idx) rt("array index must be a non-negative integer");
      const auto& items = obj.array()->items;
      if (*idx >= items.size()) return Value::null();
      return items[*idx];
    }
    if (obj.isStr()) {
      auto idx = arrayIndex(key);
      if (!idx) rt("string index must be a non-negative integer");
      const std::string& s = obj.text();
      if (*idx >= s.size()) return Value::null();
      return Value::str(std::string(1, s[*idx]));
    }
    if (obj.isObject() || obj.isFunction()) {
      if (!key.isStr()) rt("property key must be a string");
      return memberGet(obj, key.text());
    }
    rt(std::string(typeName(obj)) + " is not indexable");
  }

  void indexSet(const Value& obj, const Value& key, Value v) {
    if (obj.isArray()) {
      auto idx = arrayIndex(key);
      if (!idx) rt("array index must be a non-negative integer");
      auto& items = obj.array()->items;
      if (*idx >= items.size()) rt("array index out of range");
      items[*idx] = std::move(v);
      return;
    }
    if (obj.isObject() || obj.isFunction()) {
      if (!key.isStr()) rt("property key must be a string");
      memberSet(obj, key.text(), std::move(v));
      return;
    }
    rt(std::string(typeName(obj)) + " is not indexable");
  }

  // --- calls ---

  Value call(const Value& fn, Value thisVal, std::vector<Value> args,
             EnvPtr callerEnv, Frame& callerFrame) {
    if (fn.isFunction()) {
      return callUser(*fn.function(), std::move(thisVal), std::move(args));
    }
    if (fn.isNative()) {
      return callNative(*fn.native(), std::move(thisVal), std::move(args),
                        callerEnv, callerFrame);
    }
    if (fn.isClass())
      rt("class '" + fn.klass()->def->name + "' must be called with new",
         MiniError::Kind::NotCallable);
    rt(std::string(typeName(fn)) + " is not callable",
       MiniError::Kind::NotCallable);
  }

  Value callUser(FunctionData& f, Value thisVal, std::vector<Value> args) {
    if (++depth > 256) {
      --depth;
      rt("call stack overflow");
    }
    callStack.push_back(f.def->uid);
    if (config.hooks.onFunctionEnter) config.hooks.onFunctionEnter(f.def->uid);
    EnvPtr env = EnvData::child(f.env);
    for (std::size_t i = 0; i < f.def->params.size(); ++i)
      env->declare(f.def->params[i],
                   i < args.size() ? args[i] : Value::null());
    auto argArr = std::make_shared<ArrayData>();
    argArr->items = args;
    env->declare("arguments", Value::wrap(argArr));
    Frame frame;
    frame.thisVal = std::move(thisVal);
    frame.module = f.ownerModule;
    Value result;
    try {
      for (const auto& s : f.def->body) {
        ExecResult r = exec(*s, env, frame);
        if (r.flow == Flow::Return) {
          result = std::move(r.ret);
          break;
        }
      }
    } catch (MiniError& e) {
      if (e.stack.size() < 24) e.stack.push_back(f.def->uid);
      --depth;
      callStack.pop_back();
      throw;
    }
    --depth;
    callStack.pop_back();
    return result;
  }

  Value callNative(NativeData& n, Value /*thisVal*/, std::vector<Value> args,
                   EnvPtr callerEnv, Frame& callerFrame) {
    auto arg = [&](std::size_t i) -> const Value& {
      static const Value nullV;
      return i < args.size() ? args[i] : nullV;
    };
    auto needStr = [&](std::size_t i, const char* what) -> const std::string& {
      if (!arg(i).isStr()) rt(std::string(n.name) + " expects a string " + what);
      return arg(i).text();
    };
    switch (n.kind) {
      case NativeKind::Print: {
        std::ostream& os = self.printSink ? *self.printSink : std::cout;
        os << render(arg(0), 4) << "\n";
        return Value::null();
      }
      case NativeKind::Assert: {
        if (!arg(0).isBool()) rt("assert expects a boolean condition");
        if (!arg(1).isStr()) rt("assert expects a string message");
        if (!arg(0).boolean()) {
          if (self.assertSink) self.assertSink->push_back(arg(1).text());
        }
        return Value::null();
      }
      case NativeKind::Len: {
        if (arg(0).isStr()) return Value::num(double(arg(0).text().size()));
        if (arg(0).isArray())
          return Value::num(double(arg(0).array()->items.size()));
        rt("len expects a string or array");
      }
      case NativeKind::Str: {
        const Value& v = arg(0);
        if (v.isNum()) return Value::str(lang::formatNumber(v.num()));
        if (v.isStr()) return v;
        if (v.isBool()) return Value::str(v.boolean() ? "true" : "false");
        if (v.isNull()) return Value::str("null");
        rt("str expects a primitive value");
      }
      case NativeKind::Push: {
        if (!arg(0).isArray()) rt("push expects an array");
        arg(0).array()->items.push_back(arg(1));
        return Value::num(double(arg(0).array()->items.size()));
      }
      case NativeKind::Keys: {
        if (!arg(0).isObject()) rt("keys expects an object");
        auto arr = std::make_shared<ArrayData>();
        for (const auto& [k, v] : arg(0).object()->props.entries)
          arr->items.push_back(Value::str(k));
        return Value::wrap(arr);
      }
      case NativeKind::Eval:
        return evalCode(needStr(0, "of code"), arg(0).strData()->guardedBy,
                        callerEnv, callerFrame);
      case NativeKind::Exec:
      case NativeKind::ExecSync:
      case NativeKind::Spawn: {
        // Simulated: the only effect is the log entry.
        std::string marker = n.name + ":" + needStr(0, "command");
        self.sideEffectLog_.push_back(marker);
        return Value::str(marker);
      }
      case NativeKind::Require: {
        const std::string& spec = needStr(0, "specifier");
        if (!callerFrame.module) rt("require outside of a module");
        fs::path target;
        try {
          target = packages.resolve(spec, callerFrame.module->absPath,
                                    *callerFrame.module->owner);
        } catch (const MissingDependency& e) {
          rt(e.what());
        }
        return exportsView(instantiate(target));
      }
      case NativeKind::Apply: {
        std::vector<Value> applied;
        if (arg(1).isArray()) applied = arg(1).array()->items;
        else if (!arg(1).isNull()) rt("apply expects an argument array");
        return call(n.bound, arg(0), std::move(applied), callerEnv,
                    callerFrame);
      }
      case NativeKind::LookupGetter:
      case NativeKind::LookupSetter: {
        const std::string& name = needStr(0, "property name");
        ObjectData& o = *n.bound.object();
        PropList& own = n.kind == NativeKind::LookupGetter ? o.getters
                                                           : o.setters;
        if (Value* v = own.find(name)) return *v;
        if (o.cls) {
          PropList& cl = n.kind == NativeKind::LookupGetter ? o.cls->getters
                                                            : o.cls->setters;
          if (Value* v = cl.find(name)) return *v;
        }
        return Value::null();
      }
      case NativeKind::DefineGetter:
      case NativeKind::DefineSetter: {
        const std::string& name = needStr(0, "property name");
        ObjectData& o = *n.bound.object();
        (n.kind == NativeKind::DefineGetter ? o.getters : o.setters)
            .set(name, arg(1));
        return Value::null();
      }
      case NativeKind::GuardCheck: {
        guardCheck(arg(0), n.runtime);
        return arg(0);
      }
      case NativeKind::GuardCall: {
        Value callee = arg(1).isStr() ? memberGet(arg(0), arg(1).text())
                                      : indexGet(arg(0), arg(1));
        guardCheck(callee, n.runtime);
        std::vector<Value> fwd;
        if (arg(2).isArray()) fwd = arg(2).array()->items;
        return call(callee, arg(0), std::move(fwd), callerEnv, callerFrame);
      }
      case NativeKind::StubGetCode:
      case NativeKind::StubGetCodeForFile: {
        bool file = n.kind == NativeKind::StubGetCodeForFile;
        const std::string& id = needStr(0, file ? "path" : "uid");
        auto it = n.runtime->entries.find(id);
        if (it == n.runtime->entries.end())
          rt("code store has no entry for \"" + id + "\"");
        self.rawExpansions_.push_back(
            {file ? "file" : "function", id, it->second.size()});
        if (config.hooks.onStubExpansion)
          config.hooks.onStubExpansion(file ? "file" : "function", id,
                                       it->second.size());
        auto sd = std::make_shared<StrData>();
        sd->text = it->second;
        sd->guardedBy = n.runtime->guarded ? n.runtime : nullptr;
        return Value::wrap(sd);
      }
      case NativeKind::StubGetStub: {
        const std::string& id = needStr(0, "uid");
        auto it = n.runtime->stubCache.find(id);
        return it == n.runtime->stubCache.end() ? Value::null() : it->second;
      }
      case NativeKind::StubSetStub: {
        const std::string& id = needStr(0, "uid");
        if (!arg(1).isStr()) rt("setStub expects a string");
        n.runtime->stubCache[id] = arg(1);
        return Value::null();
      }
      case NativeKind::StubCpFunProps: {
        if (arg(0).isFunction() && arg(1).isFunction()) {
          for (const auto& [k, v] : arg(0).function()->props.entries)
            arg(1).function()->props.set(k, v);
        }
        return arg(1);
      }
    }
    rt("unknown builtin");
  }

  void guardCheck(const Value& callee, StubRuntime* runtime) {
    GuardPolicy::Mode mode = runtime ? runtime->mode : config.guardPolicy.mode;
    if (mode == GuardPolicy::Mode::Off) return;
    if (!callee.isNative()) return;
    for (const auto& [name, v] : dangerous) {
      if (v.isNative() && v.native().get() == callee.native().get()) {
        self.guardEvents_.push_back(name);
        if (config.hooks.onGuardEvent) config.hooks.onGuardEvent(name);
        if (mode == GuardPolicy::Mode::Exit)
          throw MiniError{MiniError::Kind::GuardExit,
                          "guarded call to dangerous builtin '" + name + "'",
                          callStack};
        std::cerr << "stubshrink: guard warning: call to dangerous builtin '"
                  << name << "'\n";
        return;
      }
    }
  }

  Value evalCode(const std::string& code, const StubRuntime* guardedBy,
                 EnvPtr callerEnv, Frame& callerFrame) {
    // Evaluating the same text repeatedly (anonymous and method stubs do)
    // reuses the parsed form; each evaluation still captures the current
    // scope chain independently.
    lang::ModulePtr m;
    if (auto it = evalParseCache.find(code); it != evalParseCache.end()) {
      m = it->second;
    } else {
      try {
        m = lang::parse(code, "<eval>");
      } catch (const ParseError& e) {
        rt(e.what(), MiniError::Kind::Parse);
      } catch (const StyleMixError& e) {
        rt(e.what(), MiniError::Kind::Parse);
      }
      evalParseCache.emplace(code, m);
    }
    for (const auto& item : m->items) {
      if (!std::holds_alternative<lang::StmtPtr>(item.node))
        rt("import/export cannot be executed in an eval",
           MiniError::Kind::EvalImport);
    }
    EnvPtr env = EnvData::child(callerEnv ? callerEnv : globals);
    if (guardedBy) {
      auto intrinsic = [&](const char* name, NativeKind kind) {
        auto nd = std::make_shared<NativeData>();
        nd->kind = kind;
        nd->name = name;
        nd->runtime = const_cast<StubRuntime*>(guardedBy);
        env->declare(name, Value::wrap(nd));
      };
      intrinsic("__guardCheck", NativeKind::GuardCheck);
      intrinsic("__guardCall", NativeKind::GuardCall);
    }
    Frame frame;
    frame.thisVal = Value::null();
    frame.module = callerFrame.module;
    Value last;
    for (const auto& item : m->items) {
      const auto& sp = std::get<lang::StmtPtr>(item.node);
      ExecResult r = exec(*sp, env, frame);
      if (r.flow == Flow::Return) rt("return outside function in eval");
      if (std::holds_alternative<lang::ExprStmt>(sp->node))
        last = std::move(r.ret);
    }
    return last;
  }

  std::map<std::string, lang::ModulePtr> evalParseCache;

  std::string render(const Value& v, int depthLeft) {
    if (v.isNull()) return "null";
    if (v.isNum()) return lang::formatNumber(v.num());
    if (v.isBool()) return v.boolean() ? "true" : "false";
    if (v.isStr()) return v.text();
    if (depthLeft <= 0) return "...";
    if (v.isArray()) {
      std::string out = "[";
      const auto& items = v.array()->items;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += render(items[i], depthLeft - 1);
      }
      return out + "]";
    }
    if (v.isObject()) {
      std::string out = "{";
      const auto& entries = v.object()->props.entries;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) out += ", ";
        out += entries[i].first + ": " + render(entries[i].second,
                                                depthLeft - 1);
      }
      return out + "}";
    }
    if (v.isFunction()) {
      const auto& name = v.function()->def->name;
      return "<function " + (name ? *name : "anonymous") + ">";
    }
    if (v.isClass()) return "<class " + v.klass()->def->name + ">";
    return "<builtin " + v.native()->name + ">";
  }
};

Interpreter::Interpreter(const PackageHandle& packages,
                         const RuntimeConfig& config)
    : impl_(std::make_unique<Impl>(*this, packages, config)) {}

Interpreter::~Interpreter() = default;

ModuleRecord& Interpreter::runModule(const fs::path& absPath) {
  return impl_->instantiate(absPath);
}

Value Interpreter::evalInScope(const std::string& code, EnvPtr env) {
  Frame frame;
  frame.thisVal = Value::null();
  frame.module = nullptr;
  return impl_->evalCode(code, nullptr, env ? env : impl_->globals, frame);
}

Value Interpreter::callValue(const Value& fn, Value thisVal,
                             std::vector<Value> args) {
  Frame frame;
  frame.thisVal = Value::null();
  frame.module = fn.isFunction() ? fn.function()->ownerModule : nullptr;
  return impl_->call(fn, std::move(thisVal), std::move(args), nullptr, frame);
}

Value Interpreter::exportsView(ModuleRecord& rec) {
  return impl_->exportsView(rec);
}

std::string TestReport::toJson() const {
  json j;
  j["guardEvents"] = guardEvents;
  j["guardExit"] = guardExit;
  j["sideEffectLog"] = sideEffectLog;
  j["wallTimeMs"] = wallTimeMs;
  json evs = json::array();
  for (const auto& e : expansionEvents) {
    evs.push_back({{"kind", e.kind},
                   {"id", e.id},
                   {"bytesLoaded", e.bytesLoaded},
                   {"cacheHit", e.cacheHit}});
  }
  j["expansionEvents"] = evs;
  json tsts = json::array();
  for (const auto& t : tests) {
    json tj;
    tj["path"] = t.path;
    tj["passed"] = t.passed;
    tj["failures"] = t.failures;
    tj["error"] = t.error ? json(*t.error) : json(nullptr);
    tsts.push_back(tj);
  }
  j["tests"] = tsts;
  return j.dump(2);
}

TestReport runTests(
    const PackageHandle& pkg, const RuntimeConfig& config,
    const std::function<void(const std::string&)>& onModuleExecuted) {
  TestReport report;
  std::set<std::string> fetched;
  auto start = std::chrono::steady_clock::now();
  for (const fs::path& test : pkg.testFiles()) {
    Interpreter interp(pkg, config);
    interp.onModuleExecuted = onModuleExecuted;
    TestCase tc;
    tc.path = pkg.relPath(test);
    interp.assertSink = &tc.failures;
    bool guardExit = false;
    try {
      interp.runModule(test);
    } catch (const MiniError& e) {
      if (e.kind == MiniError::Kind::GuardExit) {
        guardExit = true;
        report.guardExit = true;
      }
      tc.error = e.describe();
    }
    tc.passed = tc.failures.empty() && !tc.error;
    report.tests.push_back(std::move(tc));
    for (const auto& s : interp.sideEffectLog())
      report.sideEffectLog.push_back(s);
    for (const auto& g : interp.guardEvents())
      report.guardEvents.push_back(g);
    for (const auto& raw : interp.rawExpansions()) {
      ExpansionEvent ev;
      ev.kind = raw.kind;
      ev.id = raw.id;
      ev.cacheHit = fetched.count(raw.id) > 0;
      ev.bytesLoaded = ev.cacheHit ? 0 : raw.bytes;
      fetched.insert(raw.id);
      report.expansionEvents.push_back(std::move(ev));
    }
    if (guardExit) break;
  }
  auto end = std::chrono::steady_clock::now();
  report.wallTimeMs =
      std::chrono::duration<double, std::milli>(end - start).count();
  return report;
}

}  // namespace stubshrink::interp
