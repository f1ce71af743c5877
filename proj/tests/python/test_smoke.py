"""Smoke tests for the python bindings: each exposed operation runs end to
end against a scratch package and the shipped corpus."""

import os
import pathlib
import shutil

import pytest

import stubshrink

CORPUS = pathlib.Path(os.environ.get("STUBSHRINK_CORPUS", "corpus"))


def write_package(root: pathlib.Path) -> pathlib.Path:
    (root / "src").mkdir(parents=True)
    (root / "tests").mkdir()
    (root / "minipkg.json").write_text(
        '{"name":"pyfix","version":"0.0.1","main":"src/index.mm",'
        '"tests":["tests/t1.mm"],"dependencies":{},"devDependencies":{}}'
    )
    (root / "src/index.mm").write_text(
        "export function used(n) { return n * 3; }\n"
        "export function spare(n) {\n"
        "  let ledger = [];\n"
        "  let i = 0;\n"
        "  while (i < n) { push(ledger, i * i + 7); i = i + 1; }\n"
        "  let sum = 0;\n"
        "  let j = 0;\n"
        "  while (j < len(ledger)) { sum = sum + ledger[j]; j = j + 1; }\n"
        "  return sum;\n"
        "}\n"
    )
    (root / "tests/t1.mm").write_text(
        'import { used } from "../src/index";\n'
        'assert(used(2) == 6, "used");\n'
    )
    return root


def test_format_canonicalizes():
    assert stubshrink.format("let x=1;") == "let x = 1;\n"


def test_format_rejects_bad_input():
    with pytest.raises(Exception):
        stubshrink.format("let = ;")


def test_functions_of_reports_kinds_and_uids():
    fns = stubshrink.functions_of(
        "function f(a) { return a; }\n"
        "class C { constructor() { } get p() { return 1; } }\n",
        "m.mm",
    )
    kinds = [f["kind"] for f in fns]
    assert kinds == ["named", "constructor", "getter"]
    assert fns[0]["uid"] == "m.mm:1:0"


def test_pipeline_on_scratch_package(tmp_path):
    pkg = write_package(tmp_path / "pkg")

    rs = stubshrink.reachability(str(pkg), "static")
    assert rs["mode"] == "static"
    assert "src/index.mm" in rs["reachableFiles"]
    assert "src/index.mm:1:0" in rs["reachableFunctions"]

    report = stubshrink.run_tests(str(pkg))
    assert [t["passed"] for t in report["tests"]] == [True]

    out = stubshrink.stubbify(str(pkg), str(tmp_path / "out"), "static")
    assert out["functionStubs"] == ["src/index.mm:2:0"]
    assert out["size"]["stubbedBytes"] < out["size"]["originalBytes"]

    stubbed_report = stubshrink.run_tests(str(tmp_path / "out"))
    assert [t["passed"] for t in stubbed_report["tests"]] == [True]


def test_bundle_scratch_package(tmp_path):
    pkg = write_package(tmp_path / "pkg")
    bundle = stubshrink.bundle(str(pkg))
    assert "function used$0" in bundle["text"]
    assert "src/index.mm:1:0" in bundle["positionMap"]


@pytest.mark.skipif(not CORPUS.is_dir(), reason="corpus not available")
def test_corpus_webshapes_reduction(tmp_path):
    subject = tmp_path / "webshapes"
    shutil.copytree(CORPUS / "webshapes", subject)
    out = stubshrink.stubbify(str(subject), str(tmp_path / "out"), "static")
    size = out["size"]
    assert size["reductionPct"] >= 30.0
    report = stubshrink.run_tests(str(tmp_path / "out"))
    assert all(t["passed"] for t in report["tests"])
