#pragma once

#include <stdexcept>
#include <string>

namespace stubshrink {

struct ParseError : std::runtime_error {
  std::string file;
  int line = 0;
  int col = 0;
  ParseError(std::string f, int l, int c, const std::string& msg)
      : std::runtime_error(f + ":" + std::to_string(l) + ":" +
                           std::to_string(c) + ": " + msg),
        file(std::move(f)),
        line(l),
        col(c) {}
};

// esm and cjs constructs co-occur in one file.
struct StyleMixError : std::runtime_error {
  explicit StyleMixError(const std::string& file)
      : std::runtime_error(file + ": module mixes esm and cjs styles") {}
};

struct ManifestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingDependency : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RevisionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutputExists : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Unstubbable : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BundleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MapGap : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace stubshrink
