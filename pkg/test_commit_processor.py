#!/usr/bin/env python3
"""
Test script for the per-commit analysis fan-out.
Checks that threaded and sequential runs agree and that failures are contained.
"""

import os
import sys
from unittest.mock import patch

# Add the current directory to the Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from commit_processor import CommitProcessor, analyze_commit
from config import AnalysisConfig
from errors import CorruptHistory
from fixture_repos import FixtureRepo, java_class, kotlin_class, staggered_repo
from migration_detect import MigrationKind
from repo_walker import open_repository, walk_history


def _mixed_fixture():
    fx = FixtureRepo()
    fx.commit({"app/A.java": java_class("A", ["start", "stop"]), "app/B.kt": kotlin_class("B", ["run"]),
               "app/C.java": java_class("C", ["c"])}, "init")
    fx.commit({"app/A.java": java_class("A", ["start"]), "app/B.kt": kotlin_class("B", ["run", "stop"])},
              "Migrate stop to Kotlin")
    fx.commit({"app/C.java": None, "app/C.kt": kotlin_class("C", ["c"])}, "convert C")
    fx.commit({"app/A.java": java_class("A", [])}, "drop start")
    return fx


def _walk(fx):
    with open_repository(fx.path) as handle:
        return list(walk_history(handle))


def test_analyze_commit():
    """Detectors, transaction and keywords for one commit."""
    print("=== Analyze Commit Test ===")
    fx = _mixed_fixture()
    try:
        commits = _walk(fx)
        config = AnalysisConfig(repo_path=fx.path)

        method_commit = analyze_commit(commits[1], config)
        assert [e.kind for e in method_commit.events] == [MigrationKind.METHOD_LEVEL]
        assert method_commit.transaction is not None
        assert method_commit.keywords == ["kotlin", "migrat"]
        assert method_commit.error is None and method_commit.skipped == []

        file_commit = analyze_commit(commits[2], config)
        assert [e.kind for e in file_commit.events] == [MigrationKind.FILE_LEVEL]
        assert file_commit.transaction is None
        assert file_commit.keywords == ["convert"]

        assert analyze_commit(commits[3], config).events == []
    finally:
        fx.cleanup()
    print("[OK] Per-commit analysis")


def test_disabled_detectors():
    fx = _mixed_fixture()
    try:
        commits = _walk(fx)
        config = AnalysisConfig(repo_path=fx.path, detectors="file")
        analysis = analyze_commit(commits[1], config)
        assert analysis.events == []
        assert analysis.transaction is not None  # transactions do not depend on detectors
        assert [e.kind for e in analyze_commit(commits[2], config).events] == [MigrationKind.FILE_LEVEL]
    finally:
        fx.cleanup()
    print("[OK] Disabled detectors emit nothing")


def test_parallel_matches_sequential():
    """Thread pool results are merged back into walk order."""
    print("=== Parallel vs Sequential Test ===")
    fx = staggered_repo()
    try:
        commits = _walk(fx)
        config = AnalysisConfig(repo_path=fx.path)
        with patch('commit_processor.ENABLE_PROGRESS_BARS', False):
            with patch('commit_processor.ENABLE_MULTI_THREADING', True):
                processor = CommitProcessor(config)
                parallel = processor.process_commits(commits)
                assert processor.stats['thread_count'] > 1
            with patch('commit_processor.ENABLE_MULTI_THREADING', False):
                sequential = CommitProcessor(config).process_commits(commits)

        assert [a.commit.order_index for a in parallel] == list(range(len(commits)))
        assert [a.events for a in parallel] == [a.events for a in sequential]
        assert [a.transaction for a in parallel] == [a.transaction for a in sequential]
        assert processor.stats['events'] == 3
        assert processor.stats['failed_commits'] == 0
    finally:
        fx.cleanup()
    print("[OK] Parallel and sequential runs agree")


def test_failure_is_recorded():
    """An unexpected error in one commit is logged and recorded, not raised."""
    fx = staggered_repo()
    try:
        commits = _walk(fx)
        config = AnalysisConfig(repo_path=fx.path)
        with patch('commit_processor.ENABLE_PROGRESS_BARS', False), \
                patch('commit_processor.analyze_commit', side_effect=RuntimeError("boom")):
            processor = CommitProcessor(config)
            results = processor.process_commits(commits)
        assert len(results) == len(commits)
        assert all(a.error and "boom" in a.error for a in results)
        assert all(len(a.skipped) == 1 and "boom" in a.skipped[0].reason for a in results)
        assert processor.stats['failed_commits'] == len(commits)

        with patch('commit_processor.ENABLE_PROGRESS_BARS', False), \
                patch('commit_processor.analyze_commit', side_effect=CorruptHistory("bad object")):
            try:
                CommitProcessor(config).process_commits(commits)
                assert False, "expected CorruptHistory"
            except CorruptHistory:
                pass
    finally:
        fx.cleanup()
    print("[OK] Failures contained, corrupt history propagates")


def main():
    """Main test function."""
    print("Commit Processor Test Suite")
    print("=" * 50)

    tests = [test_analyze_commit, test_disabled_detectors, test_parallel_matches_sequential, test_failure_is_recorded]
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
