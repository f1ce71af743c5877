#include "stubshrink/parser.hpp"

#include <cctype>
#include <set>
#include <unordered_set>

#include "stubshrink/errors.hpp"

namespace stubshrink::lang {

namespace {

enum class Tok {
  Number, String, Ident, Punct, Eof,
};

struct Token {
  Tok kind = Tok::Eof;
  std::string text;   // identifier name, punct spelling, raw number text
  std::string strVal; // decoded string literal value
  double numVal = 0;
  int line = 1;
  int col = 0;
  std::size_t offset = 0;
  std::size_t endOffset = 0;
  int endLine = 1;
  int endCol = 0;
};

const std::unordered_set<std::string> kReserved = {
    "let", "function", "return", "if", "else", "while", "class", "new",
    "this", "true", "false", "null", "import", "export", "default",
};

struct Lexer {
  std::string_view src;
  std::string file;
  std::size_t pos = 0;
  int line = 1;
  int col = 0;
  std::vector<Token> tokens;
  std::set<int> directiveLines;  // lines holding exactly `// @stub:ignore`
  int lastTokenLine = 0;

  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError(file, line, col, msg);
  }

  char peek(std::size_t ahead = 0) const {
    return pos + ahead < src.size() ? src[pos + ahead] : '\0';
  }

  void advance() {
    if (pos < src.size()) {
      if (src[pos] == '\n') {
        ++line;
        col = 0;
      } else {
        ++col;
      }
      ++pos;
    }
  }

  void run() {
    for (;;) {
      skipTrivia();
      Token t;
      t.line = line;
      t.col = col;
      t.offset = pos;
      if (pos >= src.size()) {
        t.kind = Tok::Eof;
        finish(t);
        tokens.push_back(t);
        return;
      }
      char c = peek();
      if (std::isdigit(static_cast<unsigned char>(c))) {
        lexNumber(t);
      } else if (c == '"') {
        lexString(t);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
                 c == '$') {
        lexIdent(t);
      } else {
        lexPunct(t);
      }
      finish(t);
      lastTokenLine = t.endLine;
      tokens.push_back(t);
    }
  }

  void finish(Token& t) {
    t.endOffset = pos;
    t.endLine = line;
    t.endCol = col;
  }

  void skipTrivia() {
    for (;;) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        int commentLine = line;
        bool lineHadCode = (lastTokenLine == commentLine);
        advance();
        advance();
        std::string body;
        while (peek() != '\n' && peek() != '\0') {
          body.push_back(peek());
          advance();
        }
        auto first = body.find_first_not_of(" \t");
        auto last = body.find_last_not_of(" \t\r");
        std::string trimmed = first == std::string::npos
                                  ? std::string()
                                  : body.substr(first, last - first + 1);
        if (!lineHadCode && trimmed == "@stub:ignore") {
          directiveLines.insert(commentLine);
        }
      } else {
        return;
      }
    }
  }

  void lexNumber(Token& t) {
    t.kind = Tok::Number;
    std::string text;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      text.push_back(peek());
      advance();
    }
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      text.push_back('.');
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        text.push_back(peek());
        advance();
      }
    }
    if (peek() == 'e' || peek() == 'E') {
      char next = peek(1);
      std::size_t digitAt = (next == '+' || next == '-') ? 2 : 1;
      if (std::isdigit(static_cast<unsigned char>(peek(digitAt)))) {
        text.push_back(peek());
        advance();
        if (peek() == '+' || peek() == '-') {
          text.push_back(peek());
          advance();
        }
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
          text.push_back(peek());
          advance();
        }
      }
    }
    t.text = text;
    t.numVal = std::stod(text);
  }

  void lexString(Token& t) {
    t.kind = Tok::String;
    advance();  // opening quote
    std::string out;
    for (;;) {
      char c = peek();
      if (c == '\0' || c == '\n') fail("unterminated string literal");
      if (c == '"') {
        advance();
        break;
      }
      if (c == '\\') {
        advance();
        char esc = peek();
        if (esc == '"') out.push_back('"');
        else if (esc == '\\') out.push_back('\\');
        else if (esc == 'n') out.push_back('\n');
        else fail(std::string("unsupported escape \\") + esc);
        advance();
      } else {
        out.push_back(c);
        advance();
      }
    }
    t.strVal = out;
  }

  void lexIdent(Token& t) {
    t.kind = Tok::Ident;
    std::string name;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
           peek() == '$') {
      name.push_back(peek());
      advance();
    }
    t.text = name;
  }

  void lexPunct(Token& t) {
    t.kind = Tok::Punct;
    static const char* two[] = {"==", "!=", "<=", ">=", "&&", "||"};
    for (const char* op : two) {
      if (peek() == op[0] && peek(1) == op[1]) {
        t.text = op;
        advance();
        advance();
        return;
      }
    }
    char c = peek();
    static const std::string singles = "+-*/<>!=(){}[],;.:";
    if (singles.find(c) == std::string::npos)
      fail(std::string("unexpected character '") + c + "'");
    t.text = std::string(1, c);
    advance();
  }
};

struct Parser {
  std::vector<Token> toks;
  std::set<int> directiveLines;
  std::string file;
  std::size_t idx = 0;

  const Token& cur() const { return toks[idx]; }
  const Token& prev() const { return toks[idx == 0 ? 0 : idx - 1]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(file, cur().line, cur().col, msg);
  }

  bool atPunct(const char* p) const {
    return cur().kind == Tok::Punct && cur().text == p;
  }
  bool atIdent(const char* name) const {
    return cur().kind == Tok::Ident && cur().text == name;
  }
  void expectPunct(const char* p) {
    if (!atPunct(p)) fail(std::string("expected '") + p + "'");
    ++idx;
  }
  void expectIdent(const char* name) {
    if (!atIdent(name)) fail(std::string("expected '") + name + "'");
    ++idx;
  }
  bool eatPunct(const char* p) {
    if (atPunct(p)) {
      ++idx;
      return true;
    }
    return false;
  }

  std::string expectName() {
    if (cur().kind != Tok::Ident) fail("expected identifier");
    if (kReserved.count(cur().text)) fail("reserved word '" + cur().text + "'");
    // The guard intrinsics resolve only inside guarded evaluated code and
    // cannot be rebound by user declarations.
    if (cur().text == "__guardCheck" || cur().text == "__guardCall")
      fail("'" + cur().text + "' is a reserved intrinsic name");
    std::string n = cur().text;
    ++idx;
    return n;
  }

  Span spanFrom(const Token& start) const {
    Span s;
    s.file = file;
    s.startLine = start.line;
    s.startCol = start.col;
    s.startOffset = start.offset;
    s.endLine = prev().endLine;
    s.endCol = prev().endCol;
    s.endOffset = prev().endOffset;
    s.byteLen = s.endOffset - s.startOffset;
    return s;
  }

  std::string uidFor(const Span& s) const {
    return file + ":" + std::to_string(s.startLine) + ":" +
           std::to_string(s.startCol);
  }

  // --- modules ---

  ModulePtr parseModule() {
    auto m = std::make_shared<Module>();
    m->path = file;
    while (cur().kind != Tok::Eof) {
      m->items.push_back(parseItem());
    }
    detectStyle(*m);
    return m;
  }

  Item parseItem() {
    const Token& start = cur();
    Item item;
    if (atIdent("import")) {
      ++idx;
      item.node = parseImportTail();
    } else if (atIdent("export")) {
      ++idx;
      if (atIdent("function")) {
        ++idx;
        ExportFunctionDecl d;
        d.fn = parseFunctionRest(FnKind::Named, /*requireName=*/true,
                                 /*startTok=*/start);
        item.node = std::move(d);
      } else if (atIdent("default")) {
        ++idx;
        ExportDefaultDecl d;
        d.value = parseExpression();
        expectPunct(";");
        item.node = std::move(d);
      } else if (atPunct("{")) {
        ++idx;
        ExportNamedDecl d;
        if (!atPunct("}")) {
          for (;;) {
            ExportNamedDecl::Entry e;
            e.local = expectName();
            e.exported = e.local;
            if (atIdent("as")) {
              ++idx;
              e.exported = expectName();
            }
            d.entries.push_back(std::move(e));
            if (!eatPunct(",")) break;
          }
        }
        expectPunct("}");
        expectPunct(";");
        item.node = std::move(d);
      } else {
        fail("expected 'function', 'default' or '{' after 'export'");
      }
    } else {
      item.node = parseStatement();
    }
    item.span = spanFrom(start);
    return item;
  }

  ImportDecl parseImportTail() {
    ImportDecl d;
    if (atPunct("{")) {
      ++idx;
      if (!atPunct("}")) {
        for (;;) {
          ImportBinding b;
          b.imported = expectName();
          b.local = b.imported;
          if (atIdent("as")) {
            ++idx;
            b.local = expectName();
          }
          d.bindings.push_back(std::move(b));
          if (!eatPunct(",")) break;
        }
      }
      expectPunct("}");
    } else {
      d.isDefault = true;
      d.defaultLocal = expectName();
    }
    expectIdent("from");
    if (cur().kind != Tok::String) fail("expected module specifier string");
    d.spec = cur().strVal;
    ++idx;
    expectPunct(";");
    return d;
  }

  // --- statements ---

  StmtPtr parseStatement() {
    const Token& start = cur();
    auto stmt = std::make_unique<Stmt>();
    if (atIdent("let")) {
      ++idx;
      LetStmt s;
      s.name = expectName();
      expectPunct("=");
      s.value = parseExpression();
      expectPunct(";");
      stmt->node = std::move(s);
    } else if (atIdent("return")) {
      ++idx;
      ReturnStmt s;
      if (!atPunct(";")) s.value = parseExpression();
      expectPunct(";");
      stmt->node = std::move(s);
    } else if (atIdent("if")) {
      ++idx;
      IfStmt s;
      expectPunct("(");
      s.cond = parseExpression();
      expectPunct(")");
      s.thenBody = parseBlock();
      if (atIdent("else")) {
        ++idx;
        s.elseBody = parseBlock();
      }
      stmt->node = std::move(s);
    } else if (atIdent("while")) {
      ++idx;
      WhileStmt s;
      expectPunct("(");
      s.cond = parseExpression();
      expectPunct(")");
      s.body = parseBlock();
      stmt->node = std::move(s);
    } else if (atIdent("function") && toks[idx + 1].kind == Tok::Ident) {
      ++idx;
      FunctionDeclStmt s;
      s.fn = parseFunctionRest(FnKind::Named, true, start);
      stmt->node = std::move(s);
    } else if (atIdent("class")) {
      ++idx;
      ClassDeclStmt s;
      s.cls = parseClassRest(start);
      stmt->node = std::move(s);
    } else {
      ExprPtr e = parseExpression();
      if (atPunct("=")) {
        ++idx;
        if (!std::holds_alternative<Identifier>(e->node) &&
            !std::holds_alternative<MemberExpr>(e->node) &&
            !std::holds_alternative<IndexExpr>(e->node)) {
          fail("invalid assignment target");
        }
        AssignStmt s;
        s.target = std::move(e);
        s.value = parseExpression();
        expectPunct(";");
        stmt->node = std::move(s);
      } else {
        expectPunct(";");
        stmt->node = ExprStmt{std::move(e)};
      }
    }
    stmt->span = spanFrom(start);
    return stmt;
  }

  std::vector<StmtPtr> parseBlock() {
    expectPunct("{");
    std::vector<StmtPtr> body;
    while (!atPunct("}")) {
      if (cur().kind == Tok::Eof) fail("unterminated block");
      body.push_back(parseStatement());
    }
    expectPunct("}");
    return body;
  }

  // Parses a function definition after the `function` keyword has been
  // consumed. `startTok` marks the span start (the `function` keyword, or
  // `get`/`set`/member name for class and object members).
  FunctionDefPtr parseFunctionRest(FnKind kind, bool requireName,
                                   const Token& startTok) {
    auto fn = std::make_shared<FunctionDef>();
    fn->kind = kind;
    if (requireName) {
      fn->name = expectName();
    } else if (cur().kind == Tok::Ident) {
      // Named function expressions are not in the grammar.
      fail("function expressions are anonymous");
    }
    expectPunct("(");
    if (!atPunct(")")) {
      for (;;) {
        fn->params.push_back(expectName());
        if (!eatPunct(",")) break;
      }
    }
    expectPunct(")");
    fn->body = parseBlock();
    fn->span = spanFrom(startTok);
    fn->uid = uidFor(fn->span);
    fn->stubIgnore = directiveLines.count(fn->span.startLine - 1) > 0;
    return fn;
  }

  ClassDefPtr parseClassRest(const Token& startTok) {
    auto cls = std::make_shared<ClassDef>();
    cls->name = expectName();
    expectPunct("{");
    while (!atPunct("}")) {
      if (cur().kind == Tok::Eof) fail("unterminated class body");
      const Token& memberStart = cur();
      if (atIdent("constructor")) {
        ++idx;
        if (cls->ctor) fail("duplicate constructor");
        auto fn = parseMemberTail(FnKind::Constructor, "constructor",
                                  memberStart);
        cls->ctor = fn;
      } else if (atIdent("get") && toks[idx + 1].kind == Tok::Ident) {
        ++idx;
        std::string name = expectName();
        cls->members.push_back(parseMemberTail(FnKind::Getter, name,
                                               memberStart));
      } else if (atIdent("set") && toks[idx + 1].kind == Tok::Ident) {
        ++idx;
        std::string name = expectName();
        cls->members.push_back(parseMemberTail(FnKind::Setter, name,
                                               memberStart));
      } else {
        std::string name = expectName();
        cls->members.push_back(parseMemberTail(FnKind::Method, name,
                                               memberStart));
      }
    }
    expectPunct("}");
    cls->span = spanFrom(startTok);
    return cls;
  }

  FunctionDefPtr parseMemberTail(FnKind kind, const std::string& name,
                                 const Token& startTok) {
    auto fn = std::make_shared<FunctionDef>();
    fn->kind = kind;
    fn->name = name;
    expectPunct("(");
    if (!atPunct(")")) {
      for (;;) {
        fn->params.push_back(expectName());
        if (!eatPunct(",")) break;
      }
    }
    expectPunct(")");
    if (kind == FnKind::Getter && !fn->params.empty())
      fail("getter takes no parameters");
    if (kind == FnKind::Setter && fn->params.size() != 1)
      fail("setter takes exactly one parameter");
    fn->body = parseBlock();
    fn->span = spanFrom(startTok);
    fn->uid = uidFor(fn->span);
    fn->stubIgnore = directiveLines.count(fn->span.startLine - 1) > 0;
    return fn;
  }

  // --- expressions (precedence climbing) ---

  ExprPtr parseExpression() { return parseOr(); }

  ExprPtr finishBinary(ExprPtr lhs, BinaryOp op, ExprPtr rhs,
                       const Token& start) {
    auto e = std::make_unique<Expr>();
    e->node = BinaryExpr{op, std::move(lhs), std::move(rhs)};
    e->span = spanFrom(start);
    return e;
  }

  ExprPtr parseOr() {
    const Token& start = cur();
    ExprPtr lhs = parseAnd();
    while (atPunct("||")) {
      ++idx;
      lhs = finishBinary(std::move(lhs), BinaryOp::Or, parseAnd(), start);
    }
    return lhs;
  }

  ExprPtr parseAnd() {
    const Token& start = cur();
    ExprPtr lhs = parseEquality();
    while (atPunct("&&")) {
      ++idx;
      lhs = finishBinary(std::move(lhs), BinaryOp::And, parseEquality(), start);
    }
    return lhs;
  }

  ExprPtr parseEquality() {
    const Token& start = cur();
    ExprPtr lhs = parseRelational();
    for (;;) {
      BinaryOp op;
      if (atPunct("==")) op = BinaryOp::Eq;
      else if (atPunct("!=")) op = BinaryOp::Ne;
      else break;
      ++idx;
      lhs = finishBinary(std::move(lhs), op, parseRelational(), start);
    }
    return lhs;
  }

  ExprPtr parseRelational() {
    const Token& start = cur();
    ExprPtr lhs = parseAdditive();
    for (;;) {
      BinaryOp op;
      if (atPunct("<")) op = BinaryOp::Lt;
      else if (atPunct("<=")) op = BinaryOp::Le;
      else if (atPunct(">")) op = BinaryOp::Gt;
      else if (atPunct(">=")) op = BinaryOp::Ge;
      else break;
      ++idx;
      lhs = finishBinary(std::move(lhs), op, parseAdditive(), start);
    }
    return lhs;
  }

  ExprPtr parseAdditive() {
    const Token& start = cur();
    ExprPtr lhs = parseMultiplicative();
    for (;;) {
      BinaryOp op;
      if (atPunct("+")) op = BinaryOp::Add;
      else if (atPunct("-")) op = BinaryOp::Sub;
      else break;
      ++idx;
      lhs = finishBinary(std::move(lhs), op, parseMultiplicative(), start);
    }
    return lhs;
  }

  ExprPtr parseMultiplicative() {
    const Token& start = cur();
    ExprPtr lhs = parseUnary();
    for (;;) {
      BinaryOp op;
      if (atPunct("*")) op = BinaryOp::Mul;
      else if (atPunct("/")) op = BinaryOp::Div;
      else break;
      ++idx;
      lhs = finishBinary(std::move(lhs), op, parseUnary(), start);
    }
    return lhs;
  }

  ExprPtr parseUnary() {
    const Token& start = cur();
    if (atPunct("!")) {
      ++idx;
      auto e = std::make_unique<Expr>();
      e->node = UnaryExpr{UnaryOp::Not, parseUnary()};
      e->span = spanFrom(start);
      return e;
    }
    return parsePostfix();
  }

  ExprPtr parsePostfix() {
    const Token& start = cur();
    ExprPtr e = parsePrimary();
    return parsePostfixOps(std::move(e), start, /*allowCall=*/true);
  }

  ExprPtr parsePostfixOps(ExprPtr e, const Token& start, bool allowCall) {
    for (;;) {
      if (atPunct(".")) {
        ++idx;
        if (cur().kind != Tok::Ident) fail("expected property name");
        MemberExpr m;
        m.object = std::move(e);
        m.name = cur().text;
        ++idx;
        e = std::make_unique<Expr>();
        e->node = std::move(m);
        e->span = spanFrom(start);
      } else if (atPunct("[")) {
        ++idx;
        IndexExpr ix;
        ix.object = std::move(e);
        ix.index = parseExpression();
        expectPunct("]");
        e = std::make_unique<Expr>();
        e->node = std::move(ix);
        e->span = spanFrom(start);
      } else if (allowCall && atPunct("(")) {
        CallExpr c;
        c.callee = std::move(e);
        c.args = parseArgs();
        e = std::make_unique<Expr>();
        e->node = std::move(c);
        e->span = spanFrom(start);
      } else {
        return e;
      }
    }
  }

  std::vector<ExprPtr> parseArgs() {
    expectPunct("(");
    std::vector<ExprPtr> args;
    if (!atPunct(")")) {
      for (;;) {
        args.push_back(parseExpression());
        if (!eatPunct(",")) break;
      }
    }
    expectPunct(")");
    return args;
  }

  ExprPtr parsePrimary() {
    const Token& start = cur();
    auto e = std::make_unique<Expr>();
    if (cur().kind == Tok::Number) {
      e->node = NumberLit{cur().numVal};
      ++idx;
    } else if (cur().kind == Tok::String) {
      e->node = StringLit{cur().strVal};
      ++idx;
    } else if (atIdent("true") || atIdent("false")) {
      e->node = BoolLit{cur().text == "true"};
      ++idx;
    } else if (atIdent("null")) {
      e->node = NullLit{};
      ++idx;
    } else if (atIdent("this")) {
      e->node = ThisExpr{};
      ++idx;
    } else if (atIdent("function")) {
      ++idx;
      FunctionExpr f;
      f.fn = parseFunctionRest(FnKind::Anonymous, false, start);
      e->node = std::move(f);
    } else if (atIdent("new")) {
      ++idx;
      NewExpr n;
      const Token& calleeStart = cur();
      ExprPtr callee = parsePrimary();
      n.callee = parsePostfixOps(std::move(callee), calleeStart, false);
      n.args = parseArgs();
      e->node = std::move(n);
    } else if (atPunct("(")) {
      ++idx;
      ExprPtr inner = parseExpression();
      expectPunct(")");
      return inner;  // grouping only; no AST node
    } else if (atPunct("[")) {
      ++idx;
      ArrayLit a;
      if (!atPunct("]")) {
        for (;;) {
          a.elements.push_back(parseExpression());
          if (!eatPunct(",")) break;
        }
      }
      expectPunct("]");
      e->node = std::move(a);
    } else if (atPunct("{")) {
      e->node = parseObjectLit();
    } else if (cur().kind == Tok::Ident && !kReserved.count(cur().text)) {
      e->node = Identifier{cur().text};
      ++idx;
    } else {
      fail("expected expression");
    }
    e->span = spanFrom(start);
    return e;
  }

  ObjectLit parseObjectLit() {
    expectPunct("{");
    ObjectLit obj;
    if (!atPunct("}")) {
      for (;;) {
        obj.entries.push_back(parseObjectEntry());
        if (!eatPunct(",")) break;
      }
    }
    expectPunct("}");
    return obj;
  }

  ObjectEntry parseObjectEntry() {
    ObjectEntry entry;
    const Token& start = cur();
    if (atIdent("get") && (toks[idx + 1].kind == Tok::Ident ||
                           toks[idx + 1].kind == Tok::String)) {
      ++idx;
      entry.kind = ObjectEntry::Kind::Getter;
      readKey(entry);
      entry.fn = parseMemberTail(FnKind::Getter, entry.key, start);
      entry.fn->stringKey = entry.stringKey;
      return entry;
    }
    if (atIdent("set") && (toks[idx + 1].kind == Tok::Ident ||
                           toks[idx + 1].kind == Tok::String)) {
      ++idx;
      entry.kind = ObjectEntry::Kind::Setter;
      readKey(entry);
      entry.fn = parseMemberTail(FnKind::Setter, entry.key, start);
      entry.fn->stringKey = entry.stringKey;
      return entry;
    }
    readKey(entry);
    expectPunct(":");
    if (atIdent("function")) {
      // A function-valued property is an object method; it is reassignable
      // through `this` at stub-expansion time.
      const Token& fnStart = cur();
      ++idx;
      entry.kind = ObjectEntry::Kind::Method;
      entry.fn = parseFunctionRest(FnKind::Method, false, fnStart);
      entry.fn->name = entry.key;
      entry.fn->stringKey = entry.stringKey;
    } else {
      entry.kind = ObjectEntry::Kind::Plain;
      entry.value = parseExpression();
    }
    return entry;
  }

  void readKey(ObjectEntry& entry) {
    if (cur().kind == Tok::String) {
      entry.key = cur().strVal;
      entry.stringKey = true;
      ++idx;
    } else if (cur().kind == Tok::Ident && !kReserved.count(cur().text)) {
      entry.key = cur().text;
      ++idx;
    } else {
      fail("expected property key");
    }
  }

  // --- module style ---

  void detectStyle(Module& m) {
    bool esm = false;
    for (const auto& item : m.items) {
      if (!std::holds_alternative<StmtPtr>(item.node)) esm = true;
    }
    bool cjs = false;
    auto checkExpr = [&](const Expr& e, auto&& self) -> void {
      if (auto* id = std::get_if<Identifier>(&e.node)) {
        if (id->name == "require") cjs = true;
      } else if (auto* mem = std::get_if<MemberExpr>(&e.node)) {
        if (auto* obj = std::get_if<Identifier>(&mem->object->node)) {
          if (obj->name == "exports" ||
              (obj->name == "module" && mem->name == "exports"))
            cjs = true;
        }
        self(*mem->object, self);
      } else {
        forEachChildExpr(e, [&](const Expr& c) { self(c, self); });
        forEachChildFn(e, [&](const FunctionDef& f) {
          for (const auto& s : f.body) walkStmt(*s, self);
        });
      }
    };
    for (const auto& item : m.items) {
      if (auto* sp = std::get_if<StmtPtr>(&item.node)) {
        walkStmt(**sp, checkExpr);
      } else if (auto* ef = std::get_if<ExportFunctionDecl>(&item.node)) {
        for (const auto& s : ef->fn->body) walkStmt(*s, checkExpr);
      } else if (auto* ed = std::get_if<ExportDefaultDecl>(&item.node)) {
        checkExpr(*ed->value, checkExpr);
      }
    }
    if (esm && cjs) throw StyleMixError(m.path);
    m.style = esm ? ModuleStyle::Esm : (cjs ? ModuleStyle::Cjs : ModuleStyle::Plain);
  }

  template <typename F>
  static void forEachChildExpr(const Expr& e, F&& f) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ArrayLit>) {
            for (const auto& el : n.elements) f(*el);
          } else if constexpr (std::is_same_v<T, ObjectLit>) {
            for (const auto& en : n.entries)
              if (en.value) f(*en.value);
          } else if constexpr (std::is_same_v<T, CallExpr>) {
            f(*n.callee);
            for (const auto& a : n.args) f(*a);
          } else if constexpr (std::is_same_v<T, MemberExpr>) {
            f(*n.object);
          } else if constexpr (std::is_same_v<T, IndexExpr>) {
            f(*n.object);
            f(*n.index);
          } else if constexpr (std::is_same_v<T, NewExpr>) {
            f(*n.callee);
            for (const auto& a : n.args) f(*a);
          } else if constexpr (std::is_same_v<T, BinaryExpr>) {
            f(*n.lhs);
            f(*n.rhs);
          } else if constexpr (std::is_same_v<T, UnaryExpr>) {
            f(*n.operand);
          }
        },
        e.node);
  }

  template <typename F>
  static void forEachChildFn(const Expr& e, F&& f) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, FunctionExpr>) {
            f(*n.fn);
          } else if constexpr (std::is_same_v<T, ObjectLit>) {
            for (const auto& en : n.entries)
              if (en.fn) f(*en.fn);
          }
        },
        e.node);
  }

  template <typename ExprFn>
  static void walkStmt(const Stmt& s, ExprFn&& onExpr) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, LetStmt>) {
            onExpr(*n.value, onExpr);
          } else if constexpr (std::is_same_v<T, AssignStmt>) {
            onExpr(*n.target, onExpr);
            onExpr(*n.value, onExpr);
          } else if constexpr (std::is_same_v<T, ExprStmt>) {
            onExpr(*n.value, onExpr);
          } else if constexpr (std::is_same_v<T, ReturnStmt>) {
            if (n.value) onExpr(*n.value, onExpr);
          } else if constexpr (std::is_same_v<T, IfStmt>) {
            onExpr(*n.cond, onExpr);
            for (const auto& c : n.thenBody) walkStmt(*c, onExpr);
            if (n.elseBody)
              for (const auto& c : *n.elseBody) walkStmt(*c, onExpr);
          } else if constexpr (std::is_same_v<T, WhileStmt>) {
            onExpr(*n.cond, onExpr);
            for (const auto& c : n.body) walkStmt(*c, onExpr);
          } else if constexpr (std::is_same_v<T, FunctionDeclStmt>) {
            for (const auto& c : n.fn->body) walkStmt(*c, onExpr);
          } else if constexpr (std::is_same_v<T, ClassDeclStmt>) {
            if (n.cls->ctor)
              for (const auto& c : n.cls->ctor->body) walkStmt(*c, onExpr);
            for (const auto& mem : n.cls->members)
              for (const auto& c : mem->body) walkStmt(*c, onExpr);
          }
        },
        s.node);
  }
};

}  // namespace

ModulePtr parse(std::string_view text, const std::string& path) {
  Lexer lexer;
  lexer.src = text;
  lexer.file = path;
  lexer.run();
  Parser parser;
  parser.toks = std::move(lexer.tokens);
  parser.directiveLines = std::move(lexer.directiveLines);
  parser.file = path;
  return parser.parseModule();
}

}  // namespace stubshrink::lang
