"""Language classification and per-commit sLOC / file-count snapshots."""

import logging
import posixpath
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Union

from config import EXCLUDE_GENERATED_TESTS, GENERATED_TEST_FILENAMES
from repo_walker import ChangeKind, CommitRecord, RepositoryHandle, is_binary, list_tree

logger = logging.getLogger(__name__)


class Language(str, Enum):
    JAVA = "Java"
    KOTLIN = "Kotlin"
    OTHER = "Other"


_EXTENSIONS = {
    ".java": Language.JAVA,
    ".kt": Language.KOTLIN,
    ".kts": Language.KOTLIN,
}


def detect_language(path: str) -> Language:
    return _EXTENSIONS.get(posixpath.splitext(path)[1].lower(), Language.OTHER)


def _decode(content: Union[str, bytes]) -> Optional[str]:
    if isinstance(content, str):
        return content
    if is_binary(content):
        return None
    return content.decode("utf-8", errors="replace")


def count_sloc(content: Union[str, bytes], language: Language) -> int:
    """Count lines that are neither blank nor comment-only.

    Java and Kotlin recognise // and /* */ comments; Kotlin block comments nest.
    A block comment left open at end of file is closed there. String literals are
    not lexed, so comment markers inside strings are treated as comments.
    Other files count non-blank lines; binary content counts 0.
    """
    text = _decode(content)
    if text is None:
        return 0
    if language == Language.OTHER:
        return sum(1 for line in text.splitlines() if line.strip())

    nests = language == Language.KOTLIN
    depth = 0
    count = 0
    for line in text.splitlines():
        if depth == 0 and "/" not in line:
            if line.strip():
                count += 1
            continue

        has_code = False
        i, n = 0, len(line)
        while i < n:
            ch = line[i]
            nxt = line[i + 1] if i + 1 < n else ""
            if depth > 0:
                if ch == "*" and nxt == "/":
                    depth -= 1
                    i += 2
                elif nests and ch == "/" and nxt == "*":
                    depth += 1
                    i += 2
                else:
                    i += 1
                continue
            if ch == "/" and nxt == "/":
                break
            if ch == "/" and nxt == "*":
                depth = 1
                i += 2
                continue
            if not ch.isspace():
                has_code = True
            i += 1
        if has_code:
            count += 1
    return count


@dataclass(frozen=True)
class GeneratedTestPolicy:
    """Excludes IDE-generated test files that are never touched after creation."""

    enabled: bool = EXCLUDE_GENERATED_TESTS
    filenames: FrozenSet[str] = frozenset(GENERATED_TEST_FILENAMES)

    def excluded_paths(self, commits: Iterable[CommitRecord]) -> FrozenSet[str]:
        if not self.enabled:
            return frozenset()
        candidates = set()
        touched = set()
        for commit in commits:
            for change in commit.changes:
                if change.kind == ChangeKind.ADDED:
                    if posixpath.basename(change.new_path) in self.filenames:
                        candidates.add(change.new_path)
                elif change.kind in (ChangeKind.MODIFIED, ChangeKind.RENAMED):
                    touched.add(change.old_path)
                    touched.add(change.new_path)
        excluded = frozenset(candidates - touched)
        if excluded:
            logger.debug(f"Excluding generated test files: {sorted(excluded)}")
        return excluded


@dataclass(frozen=True)
class LanguageSnapshot:
    order_index: int
    commit_id: str
    sloc: Dict[Language, int] = field(hash=False)
    files: Dict[Language, int] = field(hash=False)

    @property
    def kotlin_proportion(self) -> Optional[Fraction]:
        total = self.sloc[Language.KOTLIN] + self.sloc[Language.JAVA]
        if total == 0:
            return None
        return Fraction(self.sloc[Language.KOTLIN], total)

    @property
    def has_source(self) -> bool:
        return self.sloc[Language.JAVA] > 0 or self.sloc[Language.KOTLIN] > 0 \
            or self.files[Language.JAVA] > 0 or self.files[Language.KOTLIN] > 0

    def to_row(self) -> dict:
        proportion = self.kotlin_proportion
        return {
            'commit_index': self.order_index,
            'commit_id': self.commit_id,
            'java_sloc': self.sloc[Language.JAVA],
            'kotlin_sloc': self.sloc[Language.KOTLIN],
            'java_files': self.files[Language.JAVA],
            'kotlin_files': self.files[Language.KOTLIN],
            'kotlin_proportion': "" if proportion is None else f"{float(proportion):.6f}",
        }


SNAPSHOT_CSV_FIELDS = ['commit_index', 'commit_id', 'java_sloc', 'kotlin_sloc',
                       'java_files', 'kotlin_files', 'kotlin_proportion']


class _SlocTable:
    """Running per-file table: path -> (language, sloc)."""

    def __init__(self, excluded: FrozenSet[str]):
        self.excluded = excluded
        self.entries: Dict[str, tuple] = {}
        self._by_blob: Dict[tuple, tuple] = {}

    def _measure(self, path, content_handle) -> tuple:
        language = detect_language(path)
        key = (content_handle.sha, language)
        if key not in self._by_blob:
            content = content_handle.read()
            # binary blobs only count as Other files, whatever their extension
            if language != Language.OTHER and is_binary(content):
                self._by_blob[key] = (Language.OTHER, 0)
            else:
                self._by_blob[key] = (language, count_sloc(content, language))
        return self._by_blob[key]

    def put(self, path, content_handle):
        if path in self.excluded:
            return
        self.entries[path] = self._measure(path, content_handle)

    def drop(self, path):
        self.entries.pop(path, None)

    def snapshot(self, order_index, commit_id) -> LanguageSnapshot:
        sloc = {lang: 0 for lang in Language}
        files = {lang: 0 for lang in Language}
        for language, lines in self.entries.values():
            sloc[language] += lines
            files[language] += 1
        return LanguageSnapshot(order_index, commit_id, sloc, files)


def snapshot_series(walk: Iterable[CommitRecord], exclusions: Optional[GeneratedTestPolicy] = None) -> List[LanguageSnapshot]:
    """One LanguageSnapshot per commit, maintained incrementally along the walk.

    The walk is materialised first: the generated-test policy needs the whole
    history to know which files are never modified.
    """
    commits = list(walk)
    policy = exclusions or GeneratedTestPolicy(enabled=False)
    table = _SlocTable(policy.excluded_paths(commits))

    snapshots = []
    for commit in commits:
        for change in commit.changes:
            if change.kind == ChangeKind.ADDED:
                table.put(change.new_path, change.new_content)
            elif change.kind == ChangeKind.REMOVED:
                table.drop(change.old_path)
            elif change.kind == ChangeKind.MODIFIED:
                table.put(change.new_path, change.new_content)
            elif change.kind == ChangeKind.RENAMED:
                table.drop(change.old_path)
                table.put(change.new_path, change.new_content)
        snapshots.append(table.snapshot(commit.order_index, commit.id))

    logger.info(f"[OK] Computed {len(snapshots)} language snapshots")
    return snapshots


def recompute_snapshot(handle: RepositoryHandle, commit_id: str, order_index: int,
                       excluded: FrozenSet[str] = frozenset()) -> LanguageSnapshot:
    """Snapshot computed from scratch over the full tree at `commit_id`."""
    table = _SlocTable(excluded)
    for path, content in list_tree(handle, commit_id).items():
        table.put(path, content)
    return table.snapshot(order_index, commit_id)
