#include "stubshrink/ast.hpp"

namespace stubshrink::lang {

namespace {

std::vector<StmtPtr> cloneBody(const std::vector<StmtPtr>& body) {
  std::vector<StmtPtr> out;
  out.reserve(body.size());
  for (const auto& s : body) out.push_back(cloneStmt(*s));
  return out;
}

std::vector<ExprPtr> cloneExprs(const std::vector<ExprPtr>& es) {
  std::vector<ExprPtr> out;
  out.reserve(es.size());
  for (const auto& e : es) out.push_back(cloneExpr(*e));
  return out;
}

}  // namespace

ExprPtr cloneExpr(const Expr& e) {
  auto out = std::make_unique<Expr>();
  out->span = e.span;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, NumberLit> ||
                      std::is_same_v<T, StringLit> ||
                      std::is_same_v<T, BoolLit> ||
                      std::is_same_v<T, NullLit> ||
                      std::is_same_v<T, Identifier> ||
                      std::is_same_v<T, ThisExpr>) {
          out->node = n;
        } else if constexpr (std::is_same_v<T, ArrayLit>) {
          out->node = ArrayLit{cloneExprs(n.elements)};
        } else if constexpr (std::is_same_v<T, ObjectLit>) {
          ObjectLit o;
          for (const auto& en : n.entries) {
            ObjectEntry c;
            c.kind = en.kind;
            c.key = en.key;
            c.stringKey = en.stringKey;
            if (en.value) c.value = cloneExpr(*en.value);
            if (en.fn) c.fn = cloneFunctionDef(*en.fn);
            o.entries.push_back(std::move(c));
          }
          out->node = std::move(o);
        } else if constexpr (std::is_same_v<T, FunctionExpr>) {
          out->node = FunctionExpr{cloneFunctionDef(*n.fn)};
        } else if constexpr (std::is_same_v<T, CallExpr>) {
          out->node = CallExpr{cloneExpr(*n.callee), cloneExprs(n.args)};
        } else if constexpr (std::is_same_v<T, MemberExpr>) {
          out->node = MemberExpr{cloneExpr(*n.object), n.name};
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          out->node = IndexExpr{cloneExpr(*n.object), cloneExpr(*n.index)};
        } else if constexpr (std::is_same_v<T, NewExpr>) {
          out->node = NewExpr{cloneExpr(*n.callee), cloneExprs(n.args)};
        } else if constexpr (std::is_same_v<T, BinaryExpr>) {
          out->node = BinaryExpr{n.op, cloneExpr(*n.lhs), cloneExpr(*n.rhs)};
        } else if constexpr (std::is_same_v<T, UnaryExpr>) {
          out->node = UnaryExpr{n.op, cloneExpr(*n.operand)};
        }
      },
      e.node);
  return out;
}

StmtPtr cloneStmt(const Stmt& s) {
  auto out = std::make_unique<Stmt>();
  out->span = s.span;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, LetStmt>) {
          out->node = LetStmt{n.name, cloneExpr(*n.value)};
        } else if constexpr (std::is_same_v<T, AssignStmt>) {
          out->node = AssignStmt{cloneExpr(*n.target), cloneExpr(*n.value)};
        } else if constexpr (std::is_same_v<T, ExprStmt>) {
          out->node = ExprStmt{cloneExpr(*n.value)};
        } else if constexpr (std::is_same_v<T, ReturnStmt>) {
          out->node = ReturnStmt{n.value ? cloneExpr(*n.value) : nullptr};
        } else if constexpr (std::is_same_v<T, IfStmt>) {
          IfStmt c;
          c.cond = cloneExpr(*n.cond);
          c.thenBody = cloneBody(n.thenBody);
          if (n.elseBody) c.elseBody = cloneBody(*n.elseBody);
          out->node = std::move(c);
        } else if constexpr (std::is_same_v<T, WhileStmt>) {
          out->node = WhileStmt{cloneExpr(*n.cond), cloneBody(n.body)};
        } else if constexpr (std::is_same_v<T, FunctionDeclStmt>) {
          out->node = FunctionDeclStmt{cloneFunctionDef(*n.fn)};
        } else if constexpr (std::is_same_v<T, ClassDeclStmt>) {
          out->node = ClassDeclStmt{cloneClassDef(*n.cls)};
        }
      },
      s.node);
  return out;
}

FunctionDefPtr cloneFunctionDef(const FunctionDef& f) {
  auto out = std::make_shared<FunctionDef>();
  out->kind = f.kind;
  out->name = f.name;
  out->stringKey = f.stringKey;
  out->params = f.params;
  out->body = cloneBody(f.body);
  out->span = f.span;
  out->stubIgnore = f.stubIgnore;
  out->uid = f.uid;
  return out;
}

ClassDefPtr cloneClassDef(const ClassDef& c) {
  auto out = std::make_shared<ClassDef>();
  out->name = c.name;
  if (c.ctor) out->ctor = cloneFunctionDef(*c.ctor);
  for (const auto& m : c.members) out->members.push_back(cloneFunctionDef(*m));
  out->span = c.span;
  return out;
}

ModulePtr cloneModule(const Module& m) {
  auto out = std::make_shared<Module>();
  out->path = m.path;
  out->style = m.style;
  for (const auto& it : m.items) {
    Item c;
    c.span = it.span;
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, StmtPtr>) {
            c.node = cloneStmt(*n);
          } else if constexpr (std::is_same_v<T, ImportDecl>) {
            c.node = n;
          } else if constexpr (std::is_same_v<T, ExportFunctionDecl>) {
            c.node = ExportFunctionDecl{cloneFunctionDef(*n.fn)};
          } else if constexpr (std::is_same_v<T, ExportNamedDecl>) {
            c.node = n;
          } else if constexpr (std::is_same_v<T, ExportDefaultDecl>) {
            c.node = ExportDefaultDecl{cloneExpr(*n.value)};
          }
        },
        it.node);
    out->items.push_back(std::move(c));
  }
  return out;
}

// --- structural equality (spans and uids ignored) ---

namespace {

bool eqFn(const FunctionDef& a, const FunctionDef& b);
bool eqBody(const std::vector<StmtPtr>& a, const std::vector<StmtPtr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!structuralEq(*a[i], *b[i])) return false;
  return true;
}
bool eqExprs(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!structuralEq(*a[i], *b[i])) return false;
  return true;
}

bool eqFn(const FunctionDef& a, const FunctionDef& b) {
  return a.kind == b.kind && a.name == b.name && a.stringKey == b.stringKey &&
         a.params == b.params && a.stubIgnore == b.stubIgnore &&
         eqBody(a.body, b.body);
}

bool eqClass(const ClassDef& a, const ClassDef& b) {
  if (a.name != b.name) return false;
  if (static_cast<bool>(a.ctor) != static_cast<bool>(b.ctor)) return false;
  if (a.ctor && !eqFn(*a.ctor, *b.ctor)) return false;
  if (a.members.size() != b.members.size()) return false;
  for (std::size_t i = 0; i < a.members.size(); ++i)
    if (!eqFn(*a.members[i], *b.members[i])) return false;
  return true;
}

}  // namespace

bool structuralEq(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, NumberLit>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, StringLit>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, BoolLit>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, NullLit> ||
                             std::is_same_v<T, ThisExpr>) {
          return true;
        } else if constexpr (std::is_same_v<T, Identifier>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<T, ArrayLit>) {
          return eqExprs(x.elements, y.elements);
        } else if constexpr (std::is_same_v<T, ObjectLit>) {
          if (x.entries.size() != y.entries.size()) return false;
          for (std::size_t i = 0; i < x.entries.size(); ++i) {
            const auto& p = x.entries[i];
            const auto& q = y.entries[i];
            if (p.kind != q.kind || p.key != q.key ||
                p.stringKey != q.stringKey)
              return false;
            if (p.kind == ObjectEntry::Kind::Plain) {
              if (!structuralEq(*p.value, *q.value)) return false;
            } else if (!eqFn(*p.fn, *q.fn)) {
              return false;
            }
          }
          return true;
        } else if constexpr (std::is_same_v<T, FunctionExpr>) {
          return eqFn(*x.fn, *y.fn);
        } else if constexpr (std::is_same_v<T, CallExpr>) {
          return structuralEq(*x.callee, *y.callee) && eqExprs(x.args, y.args);
        } else if constexpr (std::is_same_v<T, MemberExpr>) {
          return x.name == y.name && structuralEq(*x.object, *y.object);
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          return structuralEq(*x.object, *y.object) &&
                 structuralEq(*x.index, *y.index);
        } else if constexpr (std::is_same_v<T, NewExpr>) {
          return structuralEq(*x.callee, *y.callee) && eqExprs(x.args, y.args);
        } else if constexpr (std::is_same_v<T, BinaryExpr>) {
          return x.op == y.op && structuralEq(*x.lhs, *y.lhs) &&
                 structuralEq(*x.rhs, *y.rhs);
        } else if constexpr (std::is_same_v<T, UnaryExpr>) {
          return x.op == y.op && structuralEq(*x.operand, *y.operand);
        }
      },
      a.node);
}

bool structuralEq(const Stmt& a, const Stmt& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, LetStmt>) {
          return x.name == y.name && structuralEq(*x.value, *y.value);
        } else if constexpr (std::is_same_v<T, AssignStmt>) {
          return structuralEq(*x.target, *y.target) &&
                 structuralEq(*x.value, *y.value);
        } else if constexpr (std::is_same_v<T, ExprStmt>) {
          return structuralEq(*x.value, *y.value);
        } else if constexpr (std::is_same_v<T, ReturnStmt>) {
          if (static_cast<bool>(x.value) != static_cast<bool>(y.value))
            return false;
          return !x.value || structuralEq(*x.value, *y.value);
        } else if constexpr (std::is_same_v<T, IfStmt>) {
          if (!structuralEq(*x.cond, *y.cond)) return false;
          if (!eqBody(x.thenBody, y.thenBody)) return false;
          if (x.elseBody.has_value() != y.elseBody.has_value()) return false;
          return !x.elseBody || eqBody(*x.elseBody, *y.elseBody);
        } else if constexpr (std::is_same_v<T, WhileStmt>) {
          return structuralEq(*x.cond, *y.cond) && eqBody(x.body, y.body);
        } else if constexpr (std::is_same_v<T, FunctionDeclStmt>) {
          return eqFn(*x.fn, *y.fn);
        } else if constexpr (std::is_same_v<T, ClassDeclStmt>) {
          return eqClass(*x.cls, *y.cls);
        }
      },
      a.node);
}

bool structuralEq(const Module& a, const Module& b) {
  if (a.style != b.style || a.items.size() != b.items.size()) return false;
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    const Item& x = a.items[i];
    const Item& y = b.items[i];
    if (x.node.index() != y.node.index()) return false;
    bool ok = std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          const auto& m = std::get<T>(y.node);
          if constexpr (std::is_same_v<T, StmtPtr>) {
            return structuralEq(*n, *m);
          } else if constexpr (std::is_same_v<T, ImportDecl>) {
            if (n.isDefault != m.isDefault || n.spec != m.spec) return false;
            if (n.isDefault) return n.defaultLocal == m.defaultLocal;
            if (n.bindings.size() != m.bindings.size()) return false;
            for (std::size_t j = 0; j < n.bindings.size(); ++j)
              if (n.bindings[j].imported != m.bindings[j].imported ||
                  n.bindings[j].local != m.bindings[j].local)
                return false;
            return true;
          } else if constexpr (std::is_same_v<T, ExportFunctionDecl>) {
            return eqFn(*n.fn, *m.fn);
          } else if constexpr (std::is_same_v<T, ExportNamedDecl>) {
            if (n.entries.size() != m.entries.size()) return false;
            for (std::size_t j = 0; j < n.entries.size(); ++j)
              if (n.entries[j].local != m.entries[j].local ||
                  n.entries[j].exported != m.entries[j].exported)
                return false;
            return true;
          } else if constexpr (std::is_same_v<T, ExportDefaultDecl>) {
            return structuralEq(*n.value, *m.value);
          }
        },
        x.node);
    if (!ok) return false;
  }
  return true;
}

}  // namespace stubshrink::lang
