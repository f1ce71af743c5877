#include "stubshrink/printer.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace stubshrink::lang {

std::string formatNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

// Binding strength used for minimal parenthesization.
enum Prec {
  PREC_OR = 1,
  PREC_AND,
  PREC_EQ,
  PREC_REL,
  PREC_ADD,
  PREC_MUL,
  PREC_UNARY,
  PREC_POSTFIX,
  PREC_PRIMARY,
};

int opPrec(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return PREC_OR;
    case BinaryOp::And: return PREC_AND;
    case BinaryOp::Eq:
    case BinaryOp::Ne: return PREC_EQ;
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: return PREC_REL;
    case BinaryOp::Add:
    case BinaryOp::Sub: return PREC_ADD;
    case BinaryOp::Mul:
    case BinaryOp::Div: return PREC_MUL;
  }
  return PREC_PRIMARY;
}

const char* opText(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
  }
  return "?";
}

struct Printer {
  std::string out;
  int indent = 0;
  int line = 0;
  std::set<int> directiveTargets;  // output lines needing `// @stub:ignore` above

  void emit(std::string_view s) {
    for (char c : s)
      if (c == '\n') ++line;
    out += s;
  }
  void nl() { emit("\n"); }
  void pad() { out.append(static_cast<std::size_t>(indent) * 2, ' '); }

  static std::string quote(const std::string& s) {
    std::string r = "\"";
    for (char c : s) {
      if (c == '"') r += "\\\"";
      else if (c == '\\') r += "\\\\";
      else if (c == '\n') r += "\\n";
      else r.push_back(c);
    }
    r += "\"";
    return r;
  }

  // --- expressions ---

  void expr(const Expr& e, int ctxPrec = 0) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, NumberLit>) {
            emit(formatNumber(n.value));
          } else if constexpr (std::is_same_v<T, StringLit>) {
            emit(quote(n.value));
          } else if constexpr (std::is_same_v<T, BoolLit>) {
            emit(n.value ? "true" : "false");
          } else if constexpr (std::is_same_v<T, NullLit>) {
            emit("null");
          } else if constexpr (std::is_same_v<T, Identifier>) {
            emit(n.name);
          } else if constexpr (std::is_same_v<T, ThisExpr>) {
            emit("this");
          } else if constexpr (std::is_same_v<T, ArrayLit>) {
            emit("[");
            for (std::size_t i = 0; i < n.elements.size(); ++i) {
              if (i) emit(", ");
              expr(*n.elements[i]);
            }
            emit("]");
          } else if constexpr (std::is_same_v<T, ObjectLit>) {
            objectLit(n);
          } else if constexpr (std::is_same_v<T, FunctionExpr>) {
            markDirective(*n.fn);
            functionHead(*n.fn, "function");
            block(n.fn->body);
          } else if constexpr (std::is_same_v<T, CallExpr>) {
            bool wrap = needsCalleeParens(*n.callee);
            if (wrap) emit("(");
            expr(*n.callee, PREC_POSTFIX);
            if (wrap) emit(")");
            args(n.args);
          } else if constexpr (std::is_same_v<T, MemberExpr>) {
            bool wrap = needsCalleeParens(*n.object);
            if (wrap) emit("(");
            expr(*n.object, PREC_POSTFIX);
            if (wrap) emit(")");
            emit(".");
            emit(n.name);
          } else if constexpr (std::is_same_v<T, IndexExpr>) {
            bool wrap = needsCalleeParens(*n.object);
            if (wrap) emit("(");
            expr(*n.object, PREC_POSTFIX);
            if (wrap) emit(")");
            emit("[");
            expr(*n.index);
            emit("]");
          } else if constexpr (std::is_same_v<T, NewExpr>) {
            emit("new ");
            expr(*n.callee, PREC_POSTFIX);
            args(n.args);
          } else if constexpr (std::is_same_v<T, BinaryExpr>) {
            int p = opPrec(n.op);
            bool wrap = p < ctxPrec;
            if (wrap) emit("(");
            expr(*n.lhs, p);
            emit(" ");
            emit(opText(n.op));
            emit(" ");
            expr(*n.rhs, p + 1);  // left-associative
            if (wrap) emit(")");
          } else if constexpr (std::is_same_v<T, UnaryExpr>) {
            bool wrap = PREC_UNARY < ctxPrec;
            if (wrap) emit("(");
            emit("!");
            expr(*n.operand, PREC_UNARY);
            if (wrap) emit(")");
          }
        },
        e.node);
  }

  // Postfix chains over binary/unary operands need grouping; so do function
  // expressions in callee/object position (`(function() {...})()`).
  static bool needsCalleeParens(const Expr& e) {
    return std::holds_alternative<BinaryExpr>(e.node) ||
           std::holds_alternative<UnaryExpr>(e.node) ||
           std::holds_alternative<FunctionExpr>(e.node);
  }

  void args(const std::vector<ExprPtr>& a) {
    emit("(");
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i) emit(", ");
      expr(*a[i]);
    }
    emit(")");
  }

  void objectLit(const ObjectLit& o) {
    if (o.entries.empty()) {
      emit("{}");
      return;
    }
    emit("{");
    nl();
    ++indent;
    for (std::size_t i = 0; i < o.entries.size(); ++i) {
      const ObjectEntry& en = o.entries[i];
      pad();
      switch (en.kind) {
        case ObjectEntry::Kind::Plain:
          emit(key(en));
          emit(": ");
          expr(*en.value);
          break;
        case ObjectEntry::Kind::Method:
          markDirective(*en.fn);
          emit(key(en));
          emit(": ");
          functionHead(*en.fn, "function");
          block(en.fn->body);
          break;
        case ObjectEntry::Kind::Getter:
          markDirective(*en.fn);
          emit("get ");
          emit(key(en));
          emit("()");
          block(en.fn->body);
          break;
        case ObjectEntry::Kind::Setter:
          markDirective(*en.fn);
          emit("set ");
          emit(key(en));
          emit("(");
          emit(en.fn->params[0]);
          emit(")");
          block(en.fn->body);
          break;
      }
      if (i + 1 < o.entries.size()) emit(",");
      nl();
    }
    --indent;
    pad();
    emit("}");
  }

  static std::string key(const ObjectEntry& en) {
    return en.stringKey ? quote(en.key) : en.key;
  }

  void functionHead(const FunctionDef& fn, const char* kw) {
    emit(kw);
    if (fn.name && fn.kind == FnKind::Named) {
      emit(" ");
      emit(*fn.name);
    }
    emit("(");
    for (std::size_t i = 0; i < fn.params.size(); ++i) {
      if (i) emit(", ");
      emit(fn.params[i]);
    }
    emit(")");
  }

  // `{ ... }` with the open brace on the current line and the close brace at
  // the current indent. Leaves the cursor after the close brace.
  void block(const std::vector<StmtPtr>& body) {
    emit(" {");
    nl();
    ++indent;
    for (const auto& s : body) stmt(*s);
    --indent;
    pad();
    emit("}");
  }

  void markDirective(const FunctionDef& fn) {
    if (fn.stubIgnore) directiveTargets.insert(line);
  }

  // --- statements ---

  void stmt(const Stmt& s) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, LetStmt>) {
            pad();
            emit("let ");
            emit(n.name);
            emit(" = ");
            expr(*n.value);
            emit(";");
            nl();
          } else if constexpr (std::is_same_v<T, AssignStmt>) {
            pad();
            expr(*n.target);
            emit(" = ");
            expr(*n.value);
            emit(";");
            nl();
          } else if constexpr (std::is_same_v<T, ExprStmt>) {
            pad();
            expr(*n.value);
            emit(";");
            nl();
          } else if constexpr (std::is_same_v<T, ReturnStmt>) {
            pad();
            if (n.value) {
              emit("return ");
              expr(*n.value);
              emit(";");
            } else {
              emit("return;");
            }
            nl();
          } else if constexpr (std::is_same_v<T, IfStmt>) {
            pad();
            emit("if (");
            expr(*n.cond);
            emit(")");
            block(n.thenBody);
            if (n.elseBody) {
              emit(" else");
              block(*n.elseBody);
            }
            nl();
          } else if constexpr (std::is_same_v<T, WhileStmt>) {
            pad();
            emit("while (");
            expr(*n.cond);
            emit(")");
            block(n.body);
            nl();
          } else if constexpr (std::is_same_v<T, FunctionDeclStmt>) {
            pad();
            markDirective(*n.fn);
            functionHead(*n.fn, "function");
            block(n.fn->body);
            nl();
          } else if constexpr (std::is_same_v<T, ClassDeclStmt>) {
            classDecl(*n.cls);
          }
        },
        s.node);
  }

  void classDecl(const ClassDef& cls) {
    pad();
    emit("class ");
    emit(cls.name);
    emit(" {");
    nl();
    ++indent;
    if (cls.ctor) {
      pad();
      markDirective(*cls.ctor);
      emit("constructor(");
      for (std::size_t i = 0; i < cls.ctor->params.size(); ++i) {
        if (i) emit(", ");
        emit(cls.ctor->params[i]);
      }
      emit(")");
      block(cls.ctor->body);
      nl();
    }
    for (const auto& m : cls.members) {
      pad();
      markDirective(*m);
      if (m->kind == FnKind::Getter) {
        emit("get ");
        emit(*m->name);
        emit("()");
      } else if (m->kind == FnKind::Setter) {
        emit("set ");
        emit(*m->name);
        emit("(");
        emit(m->params[0]);
        emit(")");
      } else {
        emit(*m->name);
        emit("(");
        for (std::size_t i = 0; i < m->params.size(); ++i) {
          if (i) emit(", ");
          emit(m->params[i]);
        }
        emit(")");
      }
      block(m->body);
      nl();
    }
    --indent;
    pad();
    emit("}");
    nl();
  }

  // --- module items ---

  void item(const Item& it) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, StmtPtr>) {
            stmt(*n);
          } else if constexpr (std::is_same_v<T, ImportDecl>) {
            if (n.isDefault) {
              emit("import ");
              emit(n.defaultLocal);
            } else {
              emit("import { ");
              for (std::size_t i = 0; i < n.bindings.size(); ++i) {
                if (i) emit(", ");
                emit(n.bindings[i].imported);
                if (n.bindings[i].local != n.bindings[i].imported) {
                  emit(" as ");
                  emit(n.bindings[i].local);
                }
              }
              emit(n.bindings.empty() ? "}" : " }");
            }
            emit(" from ");
            emit(quote(n.spec));
            emit(";");
            nl();
          } else if constexpr (std::is_same_v<T, ExportFunctionDecl>) {
            markDirective(*n.fn);
            emit("export ");
            functionHead(*n.fn, "function");
            block(n.fn->body);
            nl();
          } else if constexpr (std::is_same_v<T, ExportNamedDecl>) {
            emit("export { ");
            for (std::size_t i = 0; i < n.entries.size(); ++i) {
              if (i) emit(", ");
              emit(n.entries[i].local);
              if (n.entries[i].exported != n.entries[i].local) {
                emit(" as ");
                emit(n.entries[i].exported);
              }
            }
            emit(n.entries.empty() ? "};" : " };");
            nl();
          } else if constexpr (std::is_same_v<T, ExportDefaultDecl>) {
            emit("export default ");
            expr(*n.value);
            emit(";");
            nl();
          }
        },
        it.node);
  }

  std::string finish() {
    if (directiveTargets.empty()) return std::move(out);
    // Insert `// @stub:ignore` lines above every line that begins an
    // annotated function, copying that line's indentation.
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= out.size(); ++i) {
      if (i == out.size() || out[i] == '\n') {
        lines.push_back(out.substr(start, i - start));
        start = i + 1;
      }
    }
    std::string result;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (directiveTargets.count(static_cast<int>(i))) {
        const std::string& l = lines[i];
        std::size_t ws = l.find_first_not_of(' ');
        result += l.substr(0, ws == std::string::npos ? 0 : ws);
        result += "// @stub:ignore\n";
      }
      result += lines[i];
      if (i + 1 < lines.size()) result += "\n";
    }
    return result;
  }
};

}  // namespace

std::string print(const Module& m) {
  Printer p;
  for (const auto& it : m.items) p.item(it);
  return p.finish();
}

std::string printStmts(const std::vector<StmtPtr>& stmts) {
  Printer p;
  for (const auto& s : stmts) p.stmt(*s);
  return p.finish();
}

std::string printExpr(const Expr& e) {
  Printer p;
  p.expr(e);
  return p.finish();
}

}  // namespace stubshrink::lang
