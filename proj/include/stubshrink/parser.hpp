#pragma once

#include <string>
#include <string_view>

#include "stubshrink/ast.hpp"

namespace stubshrink::lang {

/// Parses MiniMod source text into a Module. `path` is the package-relative
/// path recorded in spans and uids. Throws ParseError on malformed input and
/// StyleMixError when esm and cjs constructs co-occur.
ModulePtr parse(std::string_view text, const std::string& path);

}  // namespace stubshrink::lang
