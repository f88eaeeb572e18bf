#!/usr/bin/env python3
"""
Performance floor: a synthetic 1,000-commit repository with about 200 source
files must be analyzed end-to-end in under a minute.

Building the repository takes a while, so the test only runs when
JKMINER_RUN_PERF=1 is set.
"""

import os
import random
import shutil
import sys
import tempfile
import time
from unittest.mock import patch

# Add the current directory to the Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config import AnalysisConfig
from fixture_repos import FixtureRepo, java_class, kotlin_class
from main import run

PERF_ENABLED = os.getenv("JKMINER_RUN_PERF", "").strip() == "1"
TOTAL_COMMITS = 1000
SOURCE_FILES = 200
TIME_LIMIT_SECONDS = 60


def build_large_repo(seed=1) -> FixtureRepo:
    """Java app that is gradually edited and migrated to Kotlin."""
    rng = random.Random(seed)
    fx = FixtureRepo()
    names = [f"C{i:03d}" for i in range(SOURCE_FILES)]
    methods = {name: ["m0", "m1"] for name in names}
    fx.commit({f"app/src/{name}.java": java_class(name, methods[name]) for name in names}, "initial import")

    migrated = set()
    for n in range(1, TOTAL_COMMITS):
        name = rng.choice(names)
        methods[name] = methods[name] + [f"m{len(methods[name])}"]
        if name in migrated:
            fx.commit({f"app/src/{name}.kt": kotlin_class(name, methods[name])}, f"kotlin work {n}")
        elif rng.random() < 0.15:
            migrated.add(name)
            fx.commit({f"app/src/{name}.java": None, f"app/src/{name}.kt": kotlin_class(name, methods[name])},
                      f"Convert {name} to Kotlin")
        else:
            fx.commit({f"app/src/{name}.java": java_class(name, methods[name])}, f"java work {n}")
    return fx


def test_performance_floor():
    if not PERF_ENABLED:
        print("[SKIP] Set JKMINER_RUN_PERF=1 to run the performance floor test")
        return

    print("=== Performance Floor Test ===")
    fx = build_large_repo()
    out = tempfile.mkdtemp(prefix="jkminer_perf_")
    try:
        start = time.monotonic()
        with patch('commit_processor.ENABLE_PROGRESS_BARS', False):
            report = run(AnalysisConfig(repo_path=fx.path, output_dir=out))
        elapsed = time.monotonic() - start

        assert report.summary.total_commits == TOTAL_COMMITS
        assert report.events
        print(f"[OK] Analyzed {TOTAL_COMMITS} commits in {elapsed:.1f} seconds")
        assert elapsed < TIME_LIMIT_SECONDS, f"analysis took {elapsed:.1f}s"
    finally:
        fx.cleanup()
        shutil.rmtree(out, ignore_errors=True)


def main():
    """Main test function."""
    print("Performance Test Suite")
    print("=" * 50)
    try:
        test_performance_floor()
    except Exception as e:
        print(f"[FAILED] test_performance_floor: {e}")
        return False
    return True


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
