#pragma once

#include <string>

#include "stubshrink/ast.hpp"

namespace stubshrink::lang {

/// Canonical, deterministic formatter. All size accounting in the toolchain
/// is over canonical-printed bytes, so reprinting an already-canonical module
/// is a fixpoint: print(parse(print(parse(s)))) == print(parse(s)).
std::string print(const Module& m);

/// Prints a bare statement list at top-level indent (used for stored code
/// fragments that are evaluated rather than loaded as modules).
std::string printStmts(const std::vector<StmtPtr>& stmts);

std::string printExpr(const Expr& e);

/// Shortest round-trip decimal form of a MiniMod number (also used by the
/// interpreter's str() builtin).
std::string formatNumber(double v);

}  // namespace stubshrink::lang
