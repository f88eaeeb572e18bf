"""
Scripted git repositories for the test scripts.

Repositories are built with GitPython in temporary directories, with fixed
authors and dates so that every run produces the same commit ids.
"""

import os
import shutil
import tempfile
from typing import Dict, List, Optional, Tuple

from git import Actor, Repo

BASE_TIMESTAMP = 1577836800  # 2020-01-01T00:00:00Z
DEFAULT_AUTHOR = ("Dev One", "dev1@example.com")


def java_class(name: str, methods: List[str] = (), package: str = "app", extra: str = "") -> str:
    """Java source with one class and the given no-arg methods, each with a distinct body."""
    body = "".join(
        f"    public int {m}() {{\n        int value = {i + 1};\n        log(\"{m}\");\n        return value * {i + 2};\n    }}\n\n"
        for i, m in enumerate(methods)
    )
    return f"package {package};\n\npublic class {name} {{\n{extra}{body}    private void log(String s) {{ }}\n}}\n"


def kotlin_class(name: str, functions: List[str] = (), package: str = "app", extra: str = "") -> str:
    """Kotlin source with one class and the given functions, each with a distinct body."""
    body = "".join(
        f"    fun {f}(): Int {{\n        val value = {i + 1}\n        log(\"{f}\")\n        return value * {i + 2}\n    }}\n\n"
        for i, f in enumerate(functions)
    )
    return f"package {package}\n\nclass {name} {{\n{extra}{body}    private fun log(s: String) {{ }}\n}}\n"


def java_lines(name: str, n: int) -> str:
    """Java class with exactly n sLOC (n >= 2)."""
    fields = "".join(f"    int f{i} = {i};\n" for i in range(n - 2))
    return f"class {name} {{\n{fields}}}\n"


def kotlin_lines(name: str, n: int) -> str:
    """Kotlin class with exactly n sLOC (n >= 2)."""
    props = "".join(f"    val p{i} = {i}\n" for i in range(n - 2))
    return f"class {name} {{\n{props}}}\n"


class FixtureRepo:
    """A throwaway git repository driven commit by commit."""

    def __init__(self):
        self.path = tempfile.mkdtemp(prefix="jkminer_fixture_")
        self.repo = Repo.init(self.path)
        with self.repo.config_writer() as cw:
            cw.set_value("user", "name", DEFAULT_AUTHOR[0])
            cw.set_value("user", "email", DEFAULT_AUTHOR[1])
        self.commits: List[str] = []
        self._clock = BASE_TIMESTAMP

    def _write(self, path: str, content):
        full = os.path.join(self.path, path)
        os.makedirs(os.path.dirname(full) or self.path, exist_ok=True)
        mode = 'wb' if isinstance(content, bytes) else 'w'
        with open(full, mode, **({} if mode == 'wb' else {'encoding': 'utf-8', 'newline': '\n'})) as f:
            f.write(content)

    def commit(self, files: Optional[Dict[str, Optional[object]]] = None, message: str = "change",
               author: Tuple[str, str] = DEFAULT_AUTHOR, parents=None, head: bool = True) -> str:
        """
        Apply file changes and commit them.

        Args:
            files: path -> new content (str or bytes), or None to delete the path
            message: commit message
            author: (name, email)
            parents: explicit parent commits (for merges and side branches)
            head: move HEAD to the new commit

        Returns:
            The new commit id
        """
        files = files or {}
        for path, content in sorted(files.items()):
            if content is None:
                self.repo.index.remove([path], working_tree=True)
            else:
                self._write(path, content)
                self.repo.index.add([path])

        self._clock += 60
        date = f"{self._clock} +0000"
        actor = Actor(*author)
        kwargs = {}
        if parents is not None:
            kwargs['parent_commits'] = parents
        commit = self.repo.index.commit(message, author=actor, committer=actor,
                                        author_date=date, commit_date=date, head=head, **kwargs)
        if head:
            self.commits.append(commit.hexsha)
        else:
            # side-branch commit: put index and worktree back on HEAD
            self.repo.git.reset("--hard", "HEAD")
            self.repo.git.clean("-fdq")
        return commit.hexsha

    def rename(self, old: str, new: str, message: str = "rename", content: Optional[str] = None, **kwargs) -> str:
        with open(os.path.join(self.path, old), 'r', encoding='utf-8') as f:
            current = f.read()
        return self.commit({old: None, new: current if content is None else content}, message, **kwargs)

    def cleanup(self):
        self.repo.close()
        shutil.rmtree(self.path, ignore_errors=True)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.cleanup()


def make_snapshots(series, commit_prefix: str = "c") -> list:
    """LanguageSnapshots from (java_sloc, kotlin_sloc) pairs, one per commit."""
    from lang_metrics import Language, LanguageSnapshot

    snapshots = []
    for i, (java, kotlin) in enumerate(series):
        sloc = {Language.JAVA: java, Language.KOTLIN: kotlin, Language.OTHER: 0}
        files = {Language.JAVA: int(java > 0), Language.KOTLIN: int(kotlin > 0), Language.OTHER: 0}
        snapshots.append(LanguageSnapshot(i, f"{commit_prefix}{i:04d}", sloc, files))
    return snapshots


def one_step_repo() -> FixtureRepo:
    """Java app rewritten to Kotlin in a single commit."""
    fx = FixtureRepo()
    fx.commit({"README.md": "# demo\n"}, "init")
    fx.commit({"app/src/Main.java": java_class("Main", ["start"]),
               "app/src/Util.java": java_class("Util", ["help"])}, "java app")
    fx.commit({"app/src/Util.java": java_class("Util", ["help", "assist"])}, "more java")
    fx.commit({"app/src/Main.java": None, "app/src/Util.java": None,
               "app/src/Main.kt": kotlin_class("Main", ["start"]),
               "app/src/Util.kt": kotlin_class("Util", ["help", "assist"])}, "Convert to Kotlin")
    fx.commit({"app/src/Util.kt": kotlin_class("Util", ["help", "assist", "more"])}, "kotlin work")
    return fx


def staggered_repo() -> FixtureRepo:
    """Java app migrated file by file over several commits."""
    fx = FixtureRepo()
    fx.commit({"app/A.java": java_class("A", ["a"]), "app/B.java": java_class("B", ["b"]),
               "app/C.java": java_class("C", ["c"])}, "java app")
    fx.commit({"app/A.java": None, "app/A.kt": kotlin_class("A", ["a"])}, "migrate A")
    fx.commit({"app/B.java": java_class("B", ["b", "b2"])}, "java change")
    fx.commit({"app/B.java": None, "app/B.kt": kotlin_class("B", ["b", "b2"])}, "migrate B")
    fx.commit({"app/C.java": None, "app/C.kt": kotlin_class("C", ["c"])}, "migrate C")
    fx.commit({"app/A.kt": kotlin_class("A", ["a", "a2"])}, "kotlin change")
    return fx


def series_repo(series) -> FixtureRepo:
    """One commit per (java_sloc, kotlin_sloc) pair; 0 removes the file, other values must be >= 2."""
    fx = FixtureRepo()
    present = {"app/Main.java": False, "app/Main.kt": False}
    for i, (java, kotlin) in enumerate(series):
        files = {}
        for path, lines, render in (("app/Main.java", java, java_lines), ("app/Main.kt", kotlin, kotlin_lines)):
            if lines:
                files[path] = render("Main", lines)
                present[path] = True
            elif present[path]:
                files[path] = None
                present[path] = False
        fx.commit(files, f"step {i}")
    return fx


def anomalous_repo() -> FixtureRepo:
    """Java removed at #3, Kotlin introduced later at #4."""
    return series_repo([(5, 0), (5, 0), (5, 0), (0, 0), (0, 5), (0, 6)])


def mixed_latest_repo() -> FixtureRepo:
    """Kotlin added at #1 and both languages still growing at the tip."""
    return series_repo([(10, 0), (10, 10), (12, 10), (20, 20)])


def recent_baseline_repo() -> FixtureRepo:
    """110 commits, Kotlin introduced at #10 (1-based)."""
    return series_repo([(100, 0)] * 9 + [(100 + i % 3, 5 + i) for i in range(101)])


FIXTURE_REPOS = (one_step_repo, staggered_repo, anomalous_repo, mixed_latest_repo, recent_baseline_repo)
