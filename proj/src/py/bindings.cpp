#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "stubshrink/bundler.hpp"
#include "stubshrink/callgraph.hpp"
#include "stubshrink/interp.hpp"
#include "stubshrink/module_info.hpp"
#include "stubshrink/parser.hpp"
#include "stubshrink/printer.hpp"
#include "stubshrink/stubbify.hpp"

namespace py = pybind11;
using namespace stubshrink;
using nlohmann::json;

namespace {

py::object jsonToPy(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return py::none();
    case json::value_t::boolean: return py::bool_(j.get<bool>());
    case json::value_t::number_integer: return py::int_(j.get<long long>());
    case json::value_t::number_unsigned:
      return py::int_(j.get<unsigned long long>());
    case json::value_t::number_float: return py::float_(j.get<double>());
    case json::value_t::string: return py::str(j.get<std::string>());
    case json::value_t::array: {
      py::list out;
      for (const auto& item : j) out.append(jsonToPy(item));
      return out;
    }
    case json::value_t::object: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = jsonToPy(v);
      return out;
    }
    default: return py::none();
  }
}

py::object parseJsonText(const std::string& text) {
  return jsonToPy(json::parse(text));
}

callgraph::ReachabilitySet cgFor(const interp::PackageHandle& pkg,
                                 const std::string& mode) {
  if (mode == "dynamic") return callgraph::dynamicReachability(pkg);
  return callgraph::staticReachability(pkg);
}

}  // namespace

PYBIND11_MODULE(stubshrink, m) {
  m.doc() = "stubshrink: call-graph driven debloating for MiniMod packages";

  m.def(
      "format",
      [](const std::string& text, const std::string& path) {
        return lang::print(*lang::parse(text, path));
      },
      py::arg("text"), py::arg("path") = "<input>.mm",
      "Parse MiniMod source and return its canonical form.");

  m.def(
      "functions_of",
      [](const std::string& text, const std::string& path) {
        auto mod = lang::parse(text, path);
        py::list out;
        for (const auto& fi : lang::functionsOf(*mod)) {
          py::dict d;
          d["uid"] = fi.def->uid;
          d["kind"] = [&] {
            switch (fi.def->kind) {
              case lang::FnKind::Named: return "named";
              case lang::FnKind::Anonymous: return "anonymous";
              case lang::FnKind::Method: return "method";
              case lang::FnKind::Getter: return "getter";
              case lang::FnKind::Setter: return "setter";
              case lang::FnKind::Constructor: return "constructor";
            }
            return "unknown";
          }();
          d["name"] = fi.def->name ? py::object(py::str(*fi.def->name))
                                   : py::object(py::none());
          d["stubIgnore"] = fi.def->stubIgnore;
          d["depth"] = fi.depth;
          out.append(d);
        }
        return out;
      },
      py::arg("text"), py::arg("path") = "<input>.mm",
      "Enumerate every function with its uid and kind.");

  m.def(
      "reachability",
      [](const std::string& pkgdir, const std::string& mode) {
        auto pkg = interp::PackageHandle::load(pkgdir);
        return parseJsonText(cgFor(pkg, mode).toJson());
      },
      py::arg("pkgdir"), py::arg("mode") = "static",
      "Compute a static or dynamic reachability set for a package.");

  m.def(
      "run_tests",
      [](const std::string& pkgdir) {
        auto pkg = interp::PackageHandle::load(pkgdir);
        return parseJsonText(
            interp::runTests(pkg, interp::RuntimeConfig{}).toJson());
      },
      py::arg("pkgdir"), "Run a package's test suite and return the report.");

  m.def(
      "stubbify",
      [](const std::string& pkgdir, const std::string& outDir,
         const std::string& mode, const std::string& guard, bool force) {
        auto pkg = interp::PackageHandle::load(pkgdir);
        auto rs = cgFor(pkg, mode);
        stubbify::StubbifyOptions opts;
        opts.outDir = outDir;
        opts.force = force;
        opts.guard = interp::parseGuardMode(guard);
        auto out = stubbify::stubbifyPackage(pkg, rs, opts);
        py::dict d;
        d["outDir"] = out.outDir.string();
        d["fileStubs"] = out.plan.fileStubs;
        d["functionStubs"] = out.plan.functionStubs;
        d["size"] = parseJsonText(out.size.toJson());
        return d;
      },
      py::arg("pkgdir"), py::arg("out_dir"), py::arg("mode") = "static",
      py::arg("guard") = "off", py::arg("force") = false,
      "Replace unreachable files and functions with self-expanding stubs.");

  m.def(
      "bundle",
      [](const std::string& pkgdir) {
        auto pkg = interp::PackageHandle::load(pkgdir);
        auto b = bundler::bundle(pkg);
        py::dict d;
        d["text"] = b.text;
        d["entry"] = b.entry;
        d["kept"] = b.kept;
        d["removed"] = b.removed;
        d["positionMap"] = parseJsonText(b.mapToJson());
        return d;
      },
      py::arg("pkgdir"),
      "Produce a tree-shaken single-file bundle with its position map.");
}
