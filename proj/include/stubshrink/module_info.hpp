#pragma once

#include <functional>
#include <vector>

#include "stubshrink/ast.hpp"

namespace stubshrink::lang {

struct FunctionInfo {
  FunctionDefPtr def;
  FunctionDefPtr parent;        // enclosing function, null at module level
  const ClassDef* ownerClass = nullptr;  // set for constructors and members
  int depth = 0;                // function nesting depth
};

/// Every function in the module in source order, including nested functions
/// and object/class members.
std::vector<FunctionInfo> functionsOf(const Module& m);

}  // namespace stubshrink::lang
