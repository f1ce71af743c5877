#include "stubshrink/module_info.hpp"

namespace stubshrink::lang {

namespace {

struct Walker {
  std::vector<FunctionInfo> out;
  std::vector<FunctionDefPtr> stack;

  void function(const FunctionDefPtr& fn, const ClassDef* owner) {
    FunctionInfo info;
    info.def = fn;
    info.parent = stack.empty() ? nullptr : stack.back();
    info.ownerClass = owner;
    info.depth = static_cast<int>(stack.size());
    out.push_back(info);
    stack.push_back(fn);
    for (const auto& s : fn->body) stmt(*s);
    stack.pop_back();
  }

  void klass(const ClassDef& cls) {
    if (cls.ctor) function(cls.ctor, &cls);
    for (const auto& m : cls.members) function(m, &cls);
  }

  void expr(const Expr& e) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ArrayLit>) {
            for (const auto& el : n.elements) expr(*el);
          } else if constexpr (std::is_same_v<T, ObjectLit>) {
            for (const auto& en : n.entries) {
              if (en.value) expr(*en.value);
              if (en.fn) function(en.fn, nullptr);
            }
          } else if constexpr (std::is_same_v<T, FunctionExpr>) {
            function(n.fn, nullptr);
          } else if constexpr (std::is_same_v<T, CallExpr>) {
            expr(*n.callee);
            for (const auto& a : n.args) expr(*a);
          } else if constexpr (std::is_same_v<T, MemberExpr>) {
            expr(*n.object);
          } else if constexpr (std::is_same_v<T, IndexExpr>) {
            expr(*n.object);
            expr(*n.index);
          } else if constexpr (std::is_same_v<T, NewExpr>) {
            expr(*n.callee);
            for (const auto& a : n.args) expr(*a);
          } else if constexpr (std::is_same_v<T, BinaryExpr>) {
            expr(*n.lhs);
            expr(*n.rhs);
          } else if constexpr (std::is_same_v<T, UnaryExpr>) {
            expr(*n.operand);
          }
        },
        e.node);
  }

  void stmt(const Stmt& s) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, LetStmt>) {
            expr(*n.value);
          } else if constexpr (std::is_same_v<T, AssignStmt>) {
            expr(*n.target);
            expr(*n.value);
          } else if constexpr (std::is_same_v<T, ExprStmt>) {
            expr(*n.value);
          } else if constexpr (std::is_same_v<T, ReturnStmt>) {
            if (n.value) expr(*n.value);
          } else if constexpr (std::is_same_v<T, IfStmt>) {
            expr(*n.cond);
            for (const auto& c : n.thenBody) stmt(*c);
            if (n.elseBody)
              for (const auto& c : *n.elseBody) stmt(*c);
          } else if constexpr (std::is_same_v<T, WhileStmt>) {
            expr(*n.cond);
            for (const auto& c : n.body) stmt(*c);
          } else if constexpr (std::is_same_v<T, FunctionDeclStmt>) {
            function(n.fn, nullptr);
          } else if constexpr (std::is_same_v<T, ClassDeclStmt>) {
            klass(*n.cls);
          }
        },
        s.node);
  }
};

}  // namespace

std::vector<FunctionInfo> functionsOf(const Module& m) {
  Walker w;
  for (const auto& it : m.items) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, StmtPtr>) {
            w.stmt(*n);
          } else if constexpr (std::is_same_v<T, ExportFunctionDecl>) {
            w.function(n.fn, nullptr);
          } else if constexpr (std::is_same_v<T, ExportDefaultDecl>) {
            w.expr(*n.value);
          }
        },
        it.node);
  }
  return w.out;
}

}  // namespace stubshrink::lang
