#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "stubshrink/errors.hpp"
#include "stubshrink/module_info.hpp"
#include "stubshrink/parser.hpp"
#include "stubshrink/printer.hpp"

using namespace stubshrink;
using namespace stubshrink::lang;

TEST_CASE("parse classifies simple modules") {
  auto m = parse("let x = 1;", "a.mm");
  CHECK(m->style == ModuleStyle::Plain);
  CHECK(m->items.size() == 1);
}

TEST_CASE("mixing esm and cjs constructs is a parse error") {
  CHECK_THROWS_AS(parse("import { a } from \"./m\"; module.exports = a;",
                        "mix.mm"),
                  StyleMixError);
  CHECK_THROWS_AS(parse("export function f() { return require(\"./x\"); }",
                        "mix2.mm"),
                  StyleMixError);
}

TEST_CASE("uid comes from the definition start position") {
  auto m = parse("function f(a){return a;} f(1);", "p.mm");
  auto fns = functionsOf(*m);
  REQUIRE(fns.size() == 1);
  // Hand-computed: `function` starts at line 1, column 0.
  CHECK(fns[0].def->uid == "p.mm:1:0");
  CHECK(fns[0].def->kind == FnKind::Named);
  CHECK(m->items.size() == 2);
}

TEST_CASE("canonical golden form") {
  CHECK(print(*parse("let x=1;", "g.mm")) == "let x = 1;\n");
}

TEST_CASE("print round-trips structurally and is idempotent") {
  const char* sources[] = {
      "let x = 1;",
      "function f(a, b) { if (a < b) { return a; } else { return b; } }",
      "class C { constructor(v) { this.v = v; } m() { return this.v; } "
      "get p() { return 1; } set p(x) { this.v = x; } }",
      "let o = { a: 1, \"k w\": 2, m: function(q) { return q; }, "
      "get g() { return 3; }, set s(v) { print(v); } };",
      "export function foo(w) { return w; }\nimport { A, B as C } from "
      "\"./a\";\nexport { foo as bar };\nexport default 7;",
      "let m = require(\"./x\"); module.exports = m;",
      "while (false) { push([], new Object2(1)); }",
      "print((1 + 2) * 3); print(1 + 2 * 3); print(!(true && false));",
      "let arr = [1, 2.5, 1e+30, 0.125, \"s\\\\t\\n\"];",
      "// @stub:ignore\nfunction keep(a) { return a; }",
      "let f = function() { return function() { return 1; }; };",
      "f(function(x) { return x; }, 2);",
  };
  for (const char* src : sources) {
    CAPTURE(src);
    auto m1 = parse(src, "r.mm");
    std::string p1 = print(*m1);
    auto m2 = parse(p1, "r.mm");
    CHECK(structuralEq(*m1, *m2));
    CHECK(print(*m2) == p1);
  }
}

TEST_CASE("stub ignore directive attaches to the next line's functions") {
  auto m = parse("// @stub:ignore\nfunction a() { return 1; }\n"
                 "function b() { return 2; }\n"
                 "// @stub:ignore\nlet c = function() { return 3; };\n"
                 "// not a directive @stub:ignore\nfunction d() { return 4; }",
                 "d.mm");
  auto fns = functionsOf(*m);
  REQUIRE(fns.size() == 4);
  CHECK(fns[0].def->stubIgnore);
  CHECK_FALSE(fns[1].def->stubIgnore);
  CHECK(fns[2].def->stubIgnore);
  CHECK_FALSE(fns[3].def->stubIgnore);
  // survives reprinting
  auto m2 = parse(print(*m), "d.mm");
  auto fns2 = functionsOf(*m2);
  CHECK(fns2[0].def->stubIgnore);
  CHECK(fns2[2].def->stubIgnore);
}

TEST_CASE("functionsOf enumerates nested and member functions in order") {
  auto m = parse("function f() { let g = function() { return 0; }; }", "n.mm");
  auto fns = functionsOf(*m);
  REQUIRE(fns.size() == 2);
  CHECK(fns[0].def->kind == FnKind::Named);
  CHECK(fns[1].def->kind == FnKind::Anonymous);
  CHECK(fns[1].parent == fns[0].def);

  auto c = parse("class C { constructor() { } m() { } get p() { return 1; } }",
                 "c.mm");
  auto cfns = functionsOf(*c);
  REQUIRE(cfns.size() == 3);
  CHECK(cfns[0].def->kind == FnKind::Constructor);
  CHECK(cfns[1].def->kind == FnKind::Method);
  CHECK(cfns[2].def->kind == FnKind::Getter);

  CHECK(functionsOf(*parse("", "e.mm")).empty());
}

TEST_CASE("object literal function values are methods") {
  auto m = parse("let o = { m: function(a) { return a; }, "
                 "\"two words\": function() { return 1; } };",
                 "o.mm");
  auto fns = functionsOf(*m);
  REQUIRE(fns.size() == 2);
  CHECK(fns[0].def->kind == FnKind::Method);
  CHECK(*fns[0].def->name == "m");
  CHECK(fns[1].def->kind == FnKind::Method);
  CHECK(*fns[1].def->name == "two words");
  CHECK(fns[1].def->stringKey);
}

TEST_CASE("span containment and uid injectivity") {
  const char* src =
      "function outer(a) {\n"
      "  let inner = function(b) { return b * a; };\n"
      "  if (a > 0) { return inner(a); } else { return 0; }\n"
      "}\n"
      "class K { constructor() { this.v = [1, { n: function() { return 2; } "
      "}]; } }\n";
  auto m = parse(src, "s.mm");
  auto fns = functionsOf(*m);
  std::set<std::string> uids;
  for (const auto& fi : fns) {
    CHECK(uids.insert(fi.def->uid).second);
    if (fi.parent) {
      CAPTURE(fi.def->uid);
      CHECK(fi.parent->span.contains(fi.def->span));
    }
    // byteLen covers the exact substring
    CHECK(fi.def->span.byteLen ==
          fi.def->span.endOffset - fi.def->span.startOffset);
    std::string sub(src + fi.def->span.startOffset,
                    src + fi.def->span.endOffset);
    CHECK(!sub.empty());
    CHECK(sub.front() != ' ');
    CHECK(sub.back() == '}');
  }
}

TEST_CASE("parse errors carry positions") {
  CHECK_THROWS_AS(parse("let x = ;", "bad.mm"), ParseError);
  CHECK_THROWS_AS(parse("let x = 1", "bad.mm"), ParseError);  // no semicolon
  CHECK_THROWS_AS(parse("function (a) { }", "bad.mm"), ParseError);
  CHECK_THROWS_AS(parse("let __guardCheck = 1;", "bad.mm"), ParseError);
  try {
    parse("let x =\n  @;", "pos.mm");
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("export default prints in statement position") {
  auto m = parse("function bar() { return 1; }\nexport default bar;", "x.mm");
  std::string p = print(*m);
  CHECK(p.find("export default bar;") != std::string::npos);
}

TEST_CASE("round-trip and idempotence over every corpus source") {
  namespace fs = std::filesystem;
  std::size_t checked = 0;
  for (auto it = fs::recursive_directory_iterator(STUBSHRINK_CORPUS);
       it != fs::recursive_directory_iterator(); ++it) {
    if (!it->is_regular_file() || it->path().extension() != ".mm") continue;
    std::ifstream in(it->path(), std::ios::binary);
    std::string text{std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>()};
    CAPTURE(it->path().string());
    auto m1 = parse(text, "corpus.mm");
    std::string p1 = print(*m1);
    auto m2 = parse(p1, "corpus.mm");
    CHECK(structuralEq(*m1, *m2));
    CHECK(print(*m2) == p1);
    ++checked;
  }
  CHECK(checked > 30);
}

TEST_CASE("number formatting is shortest round-trip") {
  CHECK(formatNumber(1.0) == "1");
  CHECK(formatNumber(0.5) == "0.5");
  CHECK(formatNumber(100.0) == "100");
  CHECK(formatNumber(1e30) == "1e+30");
  auto m = parse("let v = 0.1;", "n.mm");
  CHECK(print(*m) == "let v = 0.1;\n");
}
