#!/usr/bin/env python3
"""
End-to-end test script for the analyze command, the emitted report and view_report.
"""

import contextlib
import csv
import io
import json
import os
import re
import shutil
import sys
import tempfile
from unittest.mock import patch

# Add the current directory to the Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import main as cli
import view_report
from config import AnalysisConfig
from fixture_repos import FixtureRepo, java_class, kotlin_class, one_step_repo, staggered_repo
from report_writer import list_migration_authors, load_schema, rational, validate_report


@contextlib.contextmanager
def _output_dir():
    path = tempfile.mkdtemp(prefix="jkminer_out_")
    try:
        yield path
    finally:
        shutil.rmtree(path, ignore_errors=True)


def _analyze(*args):
    with patch('commit_processor.ENABLE_PROGRESS_BARS', False):
        return cli.main(["analyze", *args])


def _load(out):
    with open(os.path.join(out, "report.json"), 'r', encoding='utf-8') as f:
        return json.load(f)


def _last_stderr_record(buffer):
    lines = [line for line in buffer.getvalue().splitlines() if line.strip()]
    return json.loads(lines[-1])


def test_one_step_report():
    """A single-commit rewrite is reported as a OneStep full migration."""
    print("=== One-Step Report Test ===")
    fx = one_step_repo()
    try:
        with _output_dir() as out:
            assert _analyze("--repo", fx.path, "--out", out) == 0
            report = _load(out)
            validate_report(report)

            assert list(report) == ['schema_version', 'tool_version', 'generated_at', 'config', 'repository',
                                    'commits', 'summary', 'frequent_itemsets', 'skipped_files']
            assert report['repository']['head'] == fx.commits[-1]
            assert report['repository']['history'] == "first-parent"
            assert [c['commit_id'] for c in report['commits']] == fx.commits

            summary = report['summary']
            assert summary['status'] == "FullyMigratedJ2K"
            assert summary['total_commits'] == 5
            assert summary['interval']['length'] == 1
            assert summary['interval']['first_kotlin_index'] == 3
            assert summary['interval']['normalized_length'] == {'fraction': "1/5", 'value': 0.2}
            assert summary['migration_class'] == "OneStep"
            assert summary['file_migration_proportion']['fraction'] == "1/1"
            assert summary['event_counts'] == {'FileLevel': 2, 'MethodLevel': 0, 'UpdateInsert': 0}
            assert summary['migration_commit_counts']['FileLevel'] == 1
            assert summary['migration_authors'] == [
                {'author_name': "Dev One", 'author_email': "dev1@example.com", 'event_count': 2}]

            swap = report['commits'][3]
            assert swap['message_keywords'] == ["kotlin", "convert"]
            assert swap['snapshot']['java_sloc'] == 0
            assert {e['evidence']['basename'] for e in swap['events']} == {"Main", "Util"}
            assert {(c['kind'], c['language']) for c in swap['changes']} == {
                ("Removed", "Java"), ("Added", "Kotlin")}

            with open(os.path.join(out, "snapshots.csv"), newline='', encoding='utf-8') as f:
                rows = list(csv.DictReader(f))
            assert len(rows) == 5
            assert rows[3]['java_sloc'] == "0" and rows[3]['kotlin_proportion'] == "1.000000"
            with open(os.path.join(out, "events.csv"), newline='', encoding='utf-8') as f:
                events = list(csv.DictReader(f))
            assert [e['kind'] for e in events] == ["FileLevel", "FileLevel"]
            assert os.path.exists(os.path.join(out, "itemsets.csv"))
    finally:
        fx.cleanup()
    print("[OK] One-step report")


def test_detector_disabled():
    fx = one_step_repo()
    try:
        with _output_dir() as out:
            assert _analyze("--repo", fx.path, "--out", out, "--detectors", "method,update_insert",
                            "--format", "json") == 0
            report = _load(out)
            assert report['config']['detectors'] == ["method", "update_insert"]
            assert report['summary']['event_counts']['FileLevel'] == 0
            assert report['summary']['migration_authors'] == []
            assert report['summary']['file_migration_proportion']['fraction'] == "0/1"
            assert not os.path.exists(os.path.join(out, "events.csv"))
    finally:
        fx.cleanup()
    print("[OK] Disabled detector")


def test_staggered_report():
    fx = staggered_repo()
    try:
        with _output_dir() as out:
            assert _analyze("--repo", fx.path, "--out", out, "--recent-baseline", "all_commits") == 0
            summary = _load(out)['summary']
            assert summary['migration_class'] == "Staggered"
            assert summary['interval']['length'] == 4
            assert summary['file_migration_proportion']['fraction'] == "3/4"
            assert [t['baseline'] for t in summary['trends']] == ["FirstKotlin", "Recent"]
    finally:
        fx.cleanup()


def test_error_exit_codes():
    """Error records on stderr with the documented exit codes."""
    print("=== Exit Code Test ===")
    missing = os.path.join(tempfile.gettempdir(), "jkminer_no_such_repo")
    err = io.StringIO()
    with _output_dir() as out, contextlib.redirect_stderr(err):
        code = _analyze("--repo", missing, "--out", out)
    assert code == 2
    assert _last_stderr_record(err) == {
        'error': "NotARepository", 'message': f"Path does not exist: {missing}", 'exit_code': 2}

    fx = one_step_repo()
    try:
        for bad_args in (["--min-support", "2"], ["--detectors", "bogus"], ["--format", "xml"],
                         ["--max-itemset-size", "0"]):
            err = io.StringIO()
            with _output_dir() as out, contextlib.redirect_stderr(err):
                assert _analyze("--repo", fx.path, "--out", out, *bad_args) == 6, bad_args
            assert _last_stderr_record(err)['error'] == "InvalidConfiguration"

        with tempfile.NamedTemporaryFile(prefix="jkminer_file_") as blocker:
            err = io.StringIO()
            with contextlib.redirect_stderr(err):
                assert _analyze("--repo", fx.path, "--out", blocker.name) == 5
            assert _last_stderr_record(err)['error'] == "UnwritableOutput"
    finally:
        fx.cleanup()
    print("[OK] Exit codes")


def _normalized(path):
    with open(path, 'rb') as f:
        data = f.read()
    return re.sub(rb'"generated_at": "[^"]*"', b'"generated_at": ""', data)


def test_deterministic_output():
    """Two runs give byte-identical files once the timestamp is blanked."""
    fx = staggered_repo()
    try:
        with _output_dir() as out:
            assert _analyze("--repo", fx.path, "--out", out) == 0
            first = {name: _normalized(os.path.join(out, name)) for name in sorted(os.listdir(out))}
            assert _analyze("--repo", fx.path, "--out", out) == 0
            second = {name: _normalized(os.path.join(out, name)) for name in sorted(os.listdir(out))}
            assert first == second
            assert set(first) == {"report.json", "snapshots.csv", "itemsets.csv", "events.csv"}
    finally:
        fx.cleanup()
    print("[OK] Deterministic output")


def test_migration_authors_and_skips():
    """Authors ranked by event count; binary Java versions are skipped, not fatal."""
    print("=== Authors and Skips Test ===")
    alice = ("Alice", "alice@example.com")
    bob = ("Bob", "bob@example.com")
    with FixtureRepo() as fx:
        fx.commit({"app/A.java": java_class("A", ["a"]), "app/B.java": java_class("B", ["b"]),
                   "app/C.java": java_class("C", ["c"]), "app/K.kt": kotlin_class("K", ["k"])}, "init", author=bob)
        fx.commit({"app/C.java": None, "app/C.kt": kotlin_class("C", ["c"])}, "convert C", author=bob)
        fx.commit({"app/A.java": None, "app/A.kt": kotlin_class("A", ["a"]),
                   "app/B.java": None, "app/B.kt": kotlin_class("B", ["b"])}, "convert A and B", author=alice)
        fx.commit({"app/D.java": java_class("D", ["d"])}, "add D", author=bob)
        fx.commit({"app/D.java": b"\x00\x01\x02 not text", "app/K.kt": kotlin_class("K", ["k", "k2"])},
                  "binary", author=bob)

        with _output_dir() as out:
            assert _analyze("--repo", fx.path, "--out", out) == 0
            report = _load(out)

        assert [(a['author_name'], a['event_count']) for a in report['summary']['migration_authors']] == [
            ("Alice", 2), ("Bob", 1)]
        skipped = report['skipped_files']
        assert [(s['commit_id'], s['path']) for s in skipped] == [(fx.commits[4], "app/D.java")]
        assert report['commits'][4]['error'] is None
    print("[OK] Authors and skipped files")


def test_run_returns_report():
    fx = one_step_repo()
    try:
        with _output_dir() as out, patch('commit_processor.ENABLE_PROGRESS_BARS', False):
            report = cli.run(AnalysisConfig(repo_path=fx.path, output_dir=out, formats="json"))
            assert [(a.author_name, a.event_count) for a in list_migration_authors(report)] == [("Dev One", 2)]
            assert len(report.events) == 2
    finally:
        fx.cleanup()


def test_rational_and_schema():
    from fractions import Fraction
    assert rational(None) is None
    assert rational(Fraction(15, 93)) == {'fraction': "5/31", 'value': 0.16129}
    assert rational(Fraction(1, 3))['value'] == 0.333333
    assert load_schema()['properties']['schema_version'] == {'const': 1}


def test_dump_ast_command():
    with tempfile.TemporaryDirectory(prefix="jkminer_src_") as tmp:
        path = os.path.join(tmp, "Hello.kt")
        with open(path, 'w', encoding='utf-8') as f:
            f.write("fun hello() = 1\n")
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            assert cli.main(["dump-ast", path]) == 0
        lines = out.getvalue().splitlines()
        assert lines[0].startswith("[0] CompilationUnit")
        assert any("Method 'hello'" in line for line in lines)

        odd = os.path.join(tmp, "notes.txt")
        with open(odd, 'w', encoding='utf-8') as f:
            f.write("class A {}\n")
        err = io.StringIO()
        with contextlib.redirect_stderr(err):
            assert cli.main(["dump-ast", odd]) == 6
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            assert cli.main(["dump-ast", odd, "--language", "java"]) == 0
        assert "Class 'A'" in out.getvalue()


def test_environment_and_logging():
    """Malformed numeric variables exit 6; dump-ast never sets up the log file."""
    import config

    with patch.dict(os.environ, {'JKMINER_MIN_HEIGHT': "tall", 'JKMINER_DICE_THRESHOLD': "0.25"}), \
            patch.dict('config.ENV_ERRORS', clear=True):
        assert config._env_number("MIN_HEIGHT", 2) == 2
        assert config._env_number("DICE_THRESHOLD", 0.5, float) == 0.25
        assert config.ENV_ERRORS == {'JKMINER_MIN_HEIGHT': "tall"}

    fx = one_step_repo()
    try:
        err = io.StringIO()
        with patch.dict('config.ENV_ERRORS', {'JKMINER_MAX_ITEMSET_SIZE': "lots"}), \
                _output_dir() as out, contextlib.redirect_stderr(err):
            assert _analyze("--repo", fx.path, "--out", out) == 6
        record = _last_stderr_record(err)
        assert record['error'] == "InvalidConfiguration"
        assert "JKMINER_MAX_ITEMSET_SIZE='lots'" in record['message']
    finally:
        fx.cleanup()

    with tempfile.TemporaryDirectory(prefix="jkminer_src_") as tmp, patch('main.setup_logging') as setup:
        path = os.path.join(tmp, "A.java")
        with open(path, 'w', encoding='utf-8') as f:
            f.write("class A {}\n")
        with contextlib.redirect_stdout(io.StringIO()):
            assert cli.main(["dump-ast", path]) == 0
        setup.assert_not_called()
        with contextlib.redirect_stderr(io.StringIO()):
            assert _analyze("--repo", os.path.join(tmp, "missing"), "--out", tmp) == 2
        setup.assert_called_once()
    print("[OK] Environment errors and logging setup")


def test_view_report():
    fx = one_step_repo()
    try:
        with _output_dir() as out:
            assert _analyze("--repo", fx.path, "--out", out) == 0
            report_path = os.path.join(out, "report.json")
            for command in (["summary"], ["authors"], ["events", "--kind", "FileLevel"], ["itemsets"]):
                buffer = io.StringIO()
                with contextlib.redirect_stdout(buffer):
                    assert view_report.main([*command, "--report", report_path]) == 0
                assert buffer.getvalue()
            buffer = io.StringIO()
            with contextlib.redirect_stdout(buffer):
                view_report.main(["summary", "--report", report_path])
            assert "FullyMigratedJ2K" in buffer.getvalue()
            assert "(first-parent history)" in buffer.getvalue()
            with contextlib.redirect_stdout(io.StringIO()):
                assert view_report.main(["summary", "--report", os.path.join(out, "missing.json")]) == 1
    finally:
        fx.cleanup()
    print("[OK] view_report commands")


def main():
    """Main test function."""
    print("CLI and Report Test Suite")
    print("=" * 50)

    tests = [test_one_step_report, test_detector_disabled, test_staggered_report, test_error_exit_codes,
             test_deterministic_output, test_migration_authors_and_skips, test_run_returns_report,
             test_rational_and_schema, test_dump_ast_command, test_environment_and_logging, test_view_report]
    failed = 0
    for test in tests:
        try:
            test()
        except Exception as e:
            print(f"[FAILED] {test.__name__}: {e}")
            failed += 1

    if failed:
        print(f"\n[FAILED] {failed} of {len(tests)} tests failed!")
        return False
    print("\n[OK] All tests passed successfully!")
    return True


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
