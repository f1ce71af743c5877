#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "stubshrink/ast.hpp"

namespace stubshrink::interp {

struct StrData;
struct ArrayData;
struct ObjectData;
struct FunctionData;
struct ClassData;
struct NativeData;
struct ModuleRecord;
struct StubRuntime;

struct Value {
  std::variant<std::monostate, double, bool, std::shared_ptr<StrData>,
               std::shared_ptr<ArrayData>, std::shared_ptr<ObjectData>,
               std::shared_ptr<FunctionData>, std::shared_ptr<ClassData>,
               std::shared_ptr<NativeData>>
      v;

  Value() = default;

  static Value null() { return Value(); }
  static Value num(double d) { Value x; x.v = d; return x; }
  static Value boolean(bool b) { Value x; x.v = b; return x; }
  static Value str(std::string s);
  static Value wrap(std::shared_ptr<StrData> p) { Value x; x.v = std::move(p); return x; }
  static Value wrap(std::shared_ptr<ArrayData> p) { Value x; x.v = std::move(p); return x; }
  static Value wrap(std::shared_ptr<ObjectData> p) { Value x; x.v = std::move(p); return x; }
  static Value wrap(std::shared_ptr<FunctionData> p) { Value x; x.v = std::move(p); return x; }
  static Value wrap(std::shared_ptr<ClassData> p) { Value x; x.v = std::move(p); return x; }
  static Value wrap(std::shared_ptr<NativeData> p) { Value x; x.v = std::move(p); return x; }

  bool isNull() const { return std::holds_alternative<std::monostate>(v); }
  bool isNum() const { return std::holds_alternative<double>(v); }
  bool isBool() const { return std::holds_alternative<bool>(v); }
  bool isStr() const { return std::holds_alternative<std::shared_ptr<StrData>>(v); }
  bool isArray() const { return std::holds_alternative<std::shared_ptr<ArrayData>>(v); }
  bool isObject() const { return std::holds_alternative<std::shared_ptr<ObjectData>>(v); }
  bool isFunction() const { return std::holds_alternative<std::shared_ptr<FunctionData>>(v); }
  bool isClass() const { return std::holds_alternative<std::shared_ptr<ClassData>>(v); }
  bool isNative() const { return std::holds_alternative<std::shared_ptr<NativeData>>(v); }

  double num() const { return std::get<double>(v); }
  bool boolean() const { return std::get<bool>(v); }
  const std::shared_ptr<StrData>& strData() const { return std::get<std::shared_ptr<StrData>>(v); }
  const std::shared_ptr<ArrayData>& array() const { return std::get<std::shared_ptr<ArrayData>>(v); }
  const std::shared_ptr<ObjectData>& object() const { return std::get<std::shared_ptr<ObjectData>>(v); }
  const std::shared_ptr<FunctionData>& function() const { return std::get<std::shared_ptr<FunctionData>>(v); }
  const std::shared_ptr<ClassData>& klass() const { return std::get<std::shared_ptr<ClassData>>(v); }
  const std::shared_ptr<NativeData>& native() const { return std::get<std::shared_ptr<NativeData>>(v); }

  const std::string& text() const;
};

struct StrData {
  std::string text;
  // Set when the text was fetched from a guarded CodeStore; eval uses it to
  // put the guard intrinsics in scope for the evaluated code.
  const StubRuntime* guardedBy = nullptr;
};

inline Value Value::str(std::string s) {
  Value x;
  x.v = std::make_shared<StrData>(StrData{std::move(s), nullptr});
  return x;
}

inline const std::string& Value::text() const { return strData()->text; }

struct ArrayData {
  std::vector<Value> items;
};

// Insertion-ordered property list; the order matters for keys() and for
// function property copying.
struct PropList {
  std::vector<std::pair<std::string, Value>> entries;

  Value* find(const std::string& k) {
    for (auto& [key, val] : entries)
      if (key == k) return &val;
    return nullptr;
  }
  const Value* find(const std::string& k) const {
    for (const auto& [key, val] : entries)
      if (key == k) return &val;
    return nullptr;
  }
  void set(const std::string& k, Value v) {
    if (Value* p = find(k)) {
      *p = std::move(v);
    } else {
      entries.emplace_back(k, std::move(v));
    }
  }
};

struct ObjectData {
  PropList props;
  PropList getters;
  PropList setters;
  std::shared_ptr<ClassData> cls;  // set for `new C(...)` instances
};

struct ClassData {
  lang::ClassDefPtr def;
  Value ctor;  // Function value, or null
  PropList methods;
  PropList getters;
  PropList setters;
};

struct Cell {
  Value v;
};
using CellPtr = std::shared_ptr<Cell>;

struct EnvData;
using EnvPtr = std::shared_ptr<EnvData>;

struct EnvData {
  EnvPtr parent;
  std::vector<std::pair<std::string, CellPtr>> bindings;
  bool sealed = false;  // the globals scope rejects writes

  CellPtr findLocal(const std::string& name) const {
    for (const auto& [n, c] : bindings)
      if (n == name) return c;
    return nullptr;
  }
  CellPtr find(const std::string& name) const {
    for (const EnvData* e = this; e; e = e->parent.get())
      if (CellPtr c = e->findLocal(name)) return c;
    return nullptr;
  }
  CellPtr declare(const std::string& name, Value v) {
    auto c = std::make_shared<Cell>(Cell{std::move(v)});
    bindings.emplace_back(name, c);
    return c;
  }
  static EnvPtr child(EnvPtr parent) {
    auto e = std::make_shared<EnvData>();
    e->parent = std::move(parent);
    return e;
  }
};

struct FunctionData {
  lang::FunctionDefPtr def;
  EnvPtr env;  // captured environment
  PropList props;
  ModuleRecord* ownerModule = nullptr;
};

enum class NativeKind {
  Print, Assert, Len, Str, Push, Keys, Eval, Exec, ExecSync, Spawn, Require,
  Apply, LookupGetter, DefineGetter, LookupSetter, DefineSetter,
  GuardCheck, GuardCall,
  StubGetCode, StubGetCodeForFile, StubGetStub, StubSetStub, StubCpFunProps,
};

struct NativeData {
  NativeKind kind;
  std::string name;
  Value bound;                    // receiver for apply/accessor intrinsics
  StubRuntime* runtime = nullptr; // stub/guard natives
};

// MiniMod-level error, carried as a C++ exception and surfaced either as a
// failed test or an API error depending on the boundary it reaches.
struct MiniError {
  enum class Kind { Runtime, Parse, EvalImport, Cycle, NotCallable, GuardExit };
  Kind kind = Kind::Runtime;
  std::string message;
  std::vector<std::string> stack;  // innermost first

  std::string describe() const {
    const char* k = "RuntimeError";
    switch (kind) {
      case Kind::Runtime: k = "RuntimeError"; break;
      case Kind::Parse: k = "ParseError"; break;
      case Kind::EvalImport: k = "EvalImportError"; break;
      case Kind::Cycle: k = "CycleError"; break;
      case Kind::NotCallable: k = "NotCallable"; break;
      case Kind::GuardExit: k = "GuardExit"; break;
    }
    std::string out = std::string(k) + ": " + message;
    for (const auto& f : stack) out += "\n  at " + f;
    return out;
  }
};

}  // namespace stubshrink::interp
