#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace stubshrink::lang {

// Source location of a syntax node. Lines are 1-based, columns 0-based.
// byteLen is the byte length of the exact substring the span denotes.
struct Span {
  std::string file;
  int startLine = 1;
  int startCol = 0;
  int endLine = 1;
  int endCol = 0;
  std::size_t byteLen = 0;
  std::size_t startOffset = 0;
  std::size_t endOffset = 0;

  bool contains(const Span& inner) const {
    auto leq = [](int l1, int c1, int l2, int c2) {
      return l1 < l2 || (l1 == l2 && c1 <= c2);
    };
    return leq(startLine, startCol, inner.startLine, inner.startCol) &&
           leq(inner.endLine, inner.endCol, endLine, endCol);
  }
};

enum class ModuleStyle { Esm, Cjs, Plain };

enum class FnKind { Named, Anonymous, Method, Getter, Setter, Constructor };

enum class BinaryOp { Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class UnaryOp { Not };

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;

struct FunctionDef;
struct ClassDef;
using FunctionDefPtr = std::shared_ptr<FunctionDef>;
using ClassDefPtr = std::shared_ptr<ClassDef>;

// --- expressions ---

struct NumberLit { double value = 0; };
struct StringLit { std::string value; };
struct BoolLit { bool value = false; };
struct NullLit {};
struct Identifier { std::string name; };
struct ThisExpr {};
struct ArrayLit { std::vector<ExprPtr> elements; };

struct ObjectEntry {
  enum class Kind { Plain, Method, Getter, Setter };
  Kind kind = Kind::Plain;
  std::string key;
  bool stringKey = false;  // key written as a string literal
  ExprPtr value;           // Plain entries
  FunctionDefPtr fn;       // Method/Getter/Setter entries
};
struct ObjectLit { std::vector<ObjectEntry> entries; };

struct FunctionExpr { FunctionDefPtr fn; };
struct CallExpr { ExprPtr callee; std::vector<ExprPtr> args; };
struct MemberExpr { ExprPtr object; std::string name; };
struct IndexExpr { ExprPtr object; ExprPtr index; };
struct NewExpr { ExprPtr callee; std::vector<ExprPtr> args; };
struct BinaryExpr { BinaryOp op; ExprPtr lhs; ExprPtr rhs; };
struct UnaryExpr { UnaryOp op; ExprPtr operand; };

struct Expr {
  Span span;
  std::variant<NumberLit, StringLit, BoolLit, NullLit, Identifier, ThisExpr,
               ArrayLit, ObjectLit, FunctionExpr, CallExpr, MemberExpr,
               IndexExpr, NewExpr, BinaryExpr, UnaryExpr>
      node;
};

// --- statements ---

struct LetStmt { std::string name; ExprPtr value; };
struct AssignStmt { ExprPtr target; ExprPtr value; };  // target: Identifier | MemberExpr | IndexExpr
struct ExprStmt { ExprPtr value; };
struct ReturnStmt { ExprPtr value; };  // null for bare `return;`
struct IfStmt {
  ExprPtr cond;
  std::vector<StmtPtr> thenBody;
  std::optional<std::vector<StmtPtr>> elseBody;
};
struct WhileStmt { ExprPtr cond; std::vector<StmtPtr> body; };
struct FunctionDeclStmt { FunctionDefPtr fn; };
struct ClassDeclStmt { ClassDefPtr cls; };

struct Stmt {
  Span span;
  std::variant<LetStmt, AssignStmt, ExprStmt, ReturnStmt, IfStmt, WhileStmt,
               FunctionDeclStmt, ClassDeclStmt>
      node;
};

// A function definition anywhere in a module. `uid` is derived from the
// definition's start position: "<path>:<startLine>:<startCol>".
struct FunctionDef {
  FnKind kind = FnKind::Anonymous;
  std::optional<std::string> name;  // identifier, or property-key string
  bool stringKey = false;           // name came from a string-literal key
  std::vector<std::string> params;
  std::vector<StmtPtr> body;
  Span span;
  bool stubIgnore = false;  // set by a `// @stub:ignore` directive line
  std::string uid;
};

struct ClassDef {
  std::string name;
  FunctionDefPtr ctor;                   // may be null
  std::vector<FunctionDefPtr> members;   // methods, getters, setters
  Span span;
};

// --- module items ---

struct ImportBinding { std::string imported; std::string local; };
struct ImportDecl {
  bool isDefault = false;
  std::string defaultLocal;             // when isDefault
  std::vector<ImportBinding> bindings;  // when !isDefault
  std::string spec;
};
struct ExportFunctionDecl { FunctionDefPtr fn; };
struct ExportNamedDecl {
  struct Entry { std::string local; std::string exported; };
  std::vector<Entry> entries;
};
struct ExportDefaultDecl { ExprPtr value; };

struct Item {
  Span span;
  std::variant<StmtPtr, ImportDecl, ExportFunctionDecl, ExportNamedDecl,
               ExportDefaultDecl>
      node;
};

struct Module {
  std::string path;
  ModuleStyle style = ModuleStyle::Plain;
  std::vector<Item> items;
};

using ModulePtr = std::shared_ptr<Module>;

// Deep copies. Cloned nodes keep the original spans and uids, which is what
// lets transformed trees (bundles, stub substitutions) be traced back to
// their source positions.
ExprPtr cloneExpr(const Expr& e);
StmtPtr cloneStmt(const Stmt& s);
FunctionDefPtr cloneFunctionDef(const FunctionDef& f);
ClassDefPtr cloneClassDef(const ClassDef& c);
ModulePtr cloneModule(const Module& m);

// Structural equality ignoring spans and uids (stubIgnore annotations count).
bool structuralEq(const Expr& a, const Expr& b);
bool structuralEq(const Stmt& a, const Stmt& b);
bool structuralEq(const Module& a, const Module& b);

}  // namespace stubshrink::lang
