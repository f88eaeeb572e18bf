"""Migration-commit detectors and app-level migration characterization."""

import logging
import posixpath
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import floor
from typing import Dict, List, Optional, Sequence, Tuple

from ast_frontend import METHOD, AstNode, parse
from config import MIGRATION_KEYWORDS, RECENT_BASELINE_FRACTION
from errors import DegenerateHistory, UndecodableContent, UndefinedForAnomalous
from lang_metrics import Language, LanguageSnapshot, detect_language
from repo_walker import ChangeKind, CommitRecord, FileChange
from tree_diff import DELETE, INSERT, EditScript, TreeDiffParameters, diff_trees, topmost_actions

logger = logging.getLogger(__name__)

ANONYMOUS_METHOD = "<anonymous>"


class MigrationKind(str, Enum):
    FILE_LEVEL = "FileLevel"
    METHOD_LEVEL = "MethodLevel"
    UPDATE_INSERT = "UpdateInsert"


@dataclass(frozen=True)
class MigrationEvent:
    commit_id: str
    order_index: int
    kind: MigrationKind
    java_paths: Tuple[str, ...]
    kotlin_paths: Tuple[str, ...]
    basename: Optional[str] = None
    deleted_java_methods: Tuple[str, ...] = ()
    inserted_kotlin_methods: Tuple[str, ...] = ()

    @property
    def evidence(self) -> dict:
        if self.kind == MigrationKind.FILE_LEVEL:
            return {'basename': self.basename}
        return {
            'deleted_java_methods': list(self.deleted_java_methods),
            'inserted_kotlin_methods': list(self.inserted_kotlin_methods),
        }

    def to_dict(self) -> dict:
        return {
            'commit_id': self.commit_id,
            'order_index': self.order_index,
            'kind': self.kind.value,
            'java_paths': list(self.java_paths),
            'kotlin_paths': list(self.kotlin_paths),
            'evidence': self.evidence,
        }


@dataclass(frozen=True)
class ParseSkipped:
    """A file version left out of diffing, recorded in the report."""

    commit_id: str
    path: str
    reason: str

    def to_dict(self) -> dict:
        return {'commit_id': self.commit_id, 'path': self.path, 'reason': self.reason}


@dataclass
class FileDiff:
    path: str
    language: Language
    old_tree: AstNode
    new_tree: AstNode
    script: EditScript

    def method_names(self, op: str) -> List[str]:
        """Names of topmost Method nodes deleted (op=Delete) or inserted (op=Insert)."""
        tree = self.old_tree if op == DELETE else self.new_tree
        return [a.value or ANONYMOUS_METHOD for a in topmost_actions(self.script, tree, op, METHOD)]


@dataclass
class CommitDiffs:
    commit: CommitRecord
    diffs: List[FileDiff] = field(default_factory=list)
    skipped: List[ParseSkipped] = field(default_factory=list)

    def for_language(self, language: Language) -> List[FileDiff]:
        return [d for d in self.diffs if d.language == language]


def message_keywords(message: str) -> List[str]:
    lowered = message.lower()
    return [k for k in MIGRATION_KEYWORDS if k in lowered]


def updated_source_files(commit: CommitRecord, language: Optional[Language] = None) -> List[FileChange]:
    """Modified files, and renames that change content, written in Java or Kotlin."""
    out = []
    for change in commit.changes:
        if change.kind == ChangeKind.MODIFIED:
            pass
        elif change.kind == ChangeKind.RENAMED and change.old_content.sha != change.new_content.sha:
            pass
        else:
            continue
        lang = detect_language(change.new_path)
        if lang == Language.OTHER or (language is not None and lang != language):
            continue
        out.append(change)
    return out


def added_kotlin_files(commit: CommitRecord) -> List[FileChange]:
    return [c for c in commit.changes
            if c.kind == ChangeKind.ADDED and detect_language(c.new_path) == Language.KOTLIN]


def touches_both_languages(commit: CommitRecord) -> bool:
    return bool(updated_source_files(commit, Language.JAVA)) and bool(updated_source_files(commit, Language.KOTLIN))


def diff_commit_files(commit: CommitRecord, params: Optional[TreeDiffParameters] = None,
                      languages: Sequence[Language] = (Language.JAVA, Language.KOTLIN)) -> CommitDiffs:
    """Parse and diff every updated Java/Kotlin file of `commit` against its previous version."""
    result = CommitDiffs(commit)
    for change in updated_source_files(commit):
        language = detect_language(change.new_path)
        if language not in languages:
            continue
        try:
            old_tree = parse(change.old_content.read(), language)
            new_tree = parse(change.new_content.read(), language)
        except UndecodableContent as e:
            logger.warning(f"[WARNING] Skipping {change.new_path} in {commit.id[:10]}: {e}")
            result.skipped.append(ParseSkipped(commit.id, change.new_path, str(e)))
            continue
        script = diff_trees(old_tree, new_tree, params)
        logger.debug(f"{commit.id[:10]} {change.new_path}: {len(script)} edit actions")
        result.diffs.append(FileDiff(change.new_path, language, old_tree, new_tree, script))
    return result


def detect_file_migration(commit: CommitRecord) -> List[MigrationEvent]:
    """Pair removed .java files with added .kt files of the same basename.

    Pairing ignores directories, but same-directory pairs are taken first;
    remaining files pair up in lexicographic path order.
    """
    removed = defaultdict(list)
    added = defaultdict(list)
    for change in commit.changes:
        if change.kind == ChangeKind.REMOVED and change.old_path.endswith(".java"):
            stem = posixpath.splitext(posixpath.basename(change.old_path))[0]
            removed[stem].append(change.old_path)
        elif change.kind == ChangeKind.ADDED and change.new_path.endswith(".kt"):
            stem = posixpath.splitext(posixpath.basename(change.new_path))[0]
            added[stem].append(change.new_path)

    pairs = []
    for stem in sorted(set(removed) & set(added)):
        java_left = sorted(removed[stem])
        kotlin_left = sorted(added[stem])
        for java_path in list(java_left):
            same_dir = [k for k in kotlin_left if posixpath.dirname(k) == posixpath.dirname(java_path)]
            if same_dir:
                pairs.append((stem, java_path, same_dir[0]))
                java_left.remove(java_path)
                kotlin_left.remove(same_dir[0])
        for java_path, kotlin_path in zip(java_left, kotlin_left):
            pairs.append((stem, java_path, kotlin_path))

    pairs.sort(key=lambda p: (p[1], p[2]))
    return [MigrationEvent(commit.id, commit.order_index, MigrationKind.FILE_LEVEL,
                           (java_path,), (kotlin_path,), basename=stem)
            for stem, java_path, kotlin_path in pairs]


def _methods_by_path(diffs: List[FileDiff], op: str) -> Dict[str, List[str]]:
    found = {}
    for diff in diffs:
        names = diff.method_names(op)
        if names:
            found[diff.path] = names
    return found


def detect_method_migration(commit: CommitRecord, diffs: Optional[CommitDiffs] = None,
                            name_matching: bool = False,
                            params: Optional[TreeDiffParameters] = None) -> List[MigrationEvent]:
    """One MethodLevel event when a Java file loses a method and a Kotlin file gains one."""
    if not touches_both_languages(commit):
        return []
    if diffs is None:
        diffs = diff_commit_files(commit, params)

    deleted = _methods_by_path(diffs.for_language(Language.JAVA), DELETE)
    inserted = _methods_by_path(diffs.for_language(Language.KOTLIN), INSERT)
    if not deleted or not inserted:
        return []

    java_names = sorted({n for names in deleted.values() for n in names})
    kotlin_names = sorted({n for names in inserted.values() for n in names})
    if name_matching:
        common = sorted(set(java_names) & set(kotlin_names))
        if not common:
            return []
        java_names = kotlin_names = common
        deleted = {p: n for p, n in deleted.items() if set(n) & set(common)}
        inserted = {p: n for p, n in inserted.items() if set(n) & set(common)}

    return [MigrationEvent(commit.id, commit.order_index, MigrationKind.METHOD_LEVEL,
                           tuple(sorted(deleted)), tuple(sorted(inserted)),
                           deleted_java_methods=tuple(java_names),
                           inserted_kotlin_methods=tuple(kotlin_names))]


def _declared_methods(change: FileChange) -> List[str]:
    try:
        tree = parse(change.new_content.read(), Language.KOTLIN)
    except UndecodableContent:
        return []
    return sorted({node.value or ANONYMOUS_METHOD for node in tree.iter_preorder() if node.kind == METHOD})


def detect_update_insert_migration(commit: CommitRecord, diffs: Optional[CommitDiffs] = None,
                                   params: Optional[TreeDiffParameters] = None) -> List[MigrationEvent]:
    """One UpdateInsert event when a Java file loses a method and the commit adds a Kotlin file."""
    new_kotlin = added_kotlin_files(commit)
    if not new_kotlin or not updated_source_files(commit, Language.JAVA):
        return []
    if diffs is None:
        diffs = diff_commit_files(commit, params, languages=(Language.JAVA,))

    deleted = _methods_by_path(diffs.for_language(Language.JAVA), DELETE)
    if not deleted:
        return []

    kotlin_names = sorted({n for change in new_kotlin for n in _declared_methods(change)})
    return [MigrationEvent(commit.id, commit.order_index, MigrationKind.UPDATE_INSERT,
                           tuple(sorted(deleted)), tuple(sorted(c.new_path for c in new_kotlin)),
                           deleted_java_methods=tuple(sorted({n for names in deleted.values() for n in names})),
                           inserted_kotlin_methods=tuple(kotlin_names))]


class AppStatus(str, Enum):
    FULLY_MIGRATED_J2K = "FullyMigratedJ2K"
    MIXED_LATEST = "MixedLatest"
    KOTLIN_ONLY_HISTORY = "KotlinOnlyHistory"
    JAVA_ONLY_LATEST = "JavaOnlyLatest"
    OTHER = "Other"


class MigrationClass(str, Enum):
    ONE_STEP = "OneStep"
    STAGGERED = "Staggered"
    ANOMALOUS = "Anomalous"


class TrendBaseline(str, Enum):
    FIRST_KOTLIN = "FirstKotlin"
    RECENT = "Recent"


class Direction(str, Enum):
    UP = "Up"
    DOWN = "Down"
    EQUAL = "Equal"


def _java(s: LanguageSnapshot) -> int:
    return s.sloc[Language.JAVA]


def _kotlin(s: LanguageSnapshot) -> int:
    return s.sloc[Language.KOTLIN]


def initial_snapshot(snapshots: Sequence[LanguageSnapshot]) -> Optional[LanguageSnapshot]:
    """First snapshot holding any Java or Kotlin code."""
    return next((s for s in snapshots if _java(s) > 0 or _kotlin(s) > 0), None)


def classify_app(snapshots: Sequence[LanguageSnapshot]) -> AppStatus:
    if not snapshots:
        raise ValueError("classify_app needs at least one snapshot")
    first = initial_snapshot(snapshots)
    last = snapshots[-1]
    if first is not None and _java(first) > 0 and _kotlin(first) == 0 \
            and _java(last) == 0 and _kotlin(last) > 0:
        return AppStatus.FULLY_MIGRATED_J2K
    if all(_java(s) == 0 for s in snapshots) and any(_kotlin(s) > 0 for s in snapshots):
        return AppStatus.KOTLIN_ONLY_HISTORY
    if _kotlin(last) == 0 and _java(last) > 0:
        return AppStatus.JAVA_ONLY_LATEST
    if _kotlin(last) > 0 and _java(last) > 0:
        return AppStatus.MIXED_LATEST
    return AppStatus.OTHER


@dataclass(frozen=True)
class MigrationInterval:
    first_kotlin_index: int
    last_java_index: int
    total_commits: int
    first_kotlin_commit: str
    last_java_commit: str

    @property
    def length(self) -> int:
        return self.last_java_index - self.first_kotlin_index + 1

    @property
    def normalized_length(self) -> Fraction:
        return Fraction(self.length, self.total_commits)


def compute_interval(snapshots: Sequence[LanguageSnapshot]) -> Optional[MigrationInterval]:
    """Interval from the first commit with Kotlin to the commit that removes the last Java.

    Present only for fully migrated apps, whose latest snapshot has no Java.
    """
    if not snapshots or classify_app(snapshots) != AppStatus.FULLY_MIGRATED_J2K:
        return None
    first_kotlin = next(i for i, s in enumerate(snapshots) if _kotlin(s) > 0)
    last_with_java = max(i for i, s in enumerate(snapshots) if _java(s) > 0)
    last_java = last_with_java + 1
    return MigrationInterval(
        first_kotlin_index=snapshots[first_kotlin].order_index,
        last_java_index=snapshots[last_java].order_index,
        total_commits=len(snapshots),
        first_kotlin_commit=snapshots[first_kotlin].commit_id,
        last_java_commit=snapshots[last_java].commit_id,
    )


def classify_interval(interval: MigrationInterval) -> MigrationClass:
    if interval.length == 1:
        return MigrationClass.ONE_STEP
    if interval.length > 1:
        return MigrationClass.STAGGERED
    return MigrationClass.ANOMALOUS


def file_migration_proportion(events: Sequence[MigrationEvent], interval: MigrationInterval) -> Fraction:
    """Share of interval commits with at least one file-level migration.

    Raises:
        UndefinedForAnomalous: interval length < 1
    """
    if interval.length < 1:
        raise UndefinedForAnomalous(f"Interval length {interval.length} has no file-migration proportion")
    migrating = {e.order_index for e in events
                 if e.kind == MigrationKind.FILE_LEVEL
                 and interval.first_kotlin_index <= e.order_index <= interval.last_java_index}
    return Fraction(len(migrating), interval.length)


@dataclass(frozen=True)
class EvolutionTrend:
    baseline: TrendBaseline
    baseline_index: int
    baseline_commit: str
    amount_direction: Direction
    proportion_direction: Direction

    def to_dict(self) -> dict:
        return {
            'baseline': self.baseline.value,
            'baseline_index': self.baseline_index,
            'baseline_commit': self.baseline_commit,
            'amount_direction': self.amount_direction.value,
            'proportion_direction': self.proportion_direction.value,
        }


def _direction(latest, baseline) -> Direction:
    if latest > baseline:
        return Direction.UP
    if latest < baseline:
        return Direction.DOWN
    return Direction.EQUAL


def recent_baseline_index(snapshots: Sequence[LanguageSnapshot], mode: str = "kotlin_era") -> int:
    """Position of the commit just before the latest 10% of commits.

    kotlin_era counts commits from the first Kotlin commit through the latest;
    all_commits counts every commit.
    """
    latest = len(snapshots) - 1
    first_kotlin = next((i for i, s in enumerate(snapshots) if _kotlin(s) > 0), None)
    if mode == "kotlin_era":
        if first_kotlin is None:
            raise DegenerateHistory("No commit contains Kotlin code")
        window = latest - first_kotlin + 1
    elif mode == "all_commits":
        window = len(snapshots)
    else:
        raise ValueError(f"Unknown recent baseline mode: {mode}")
    return max(0, latest - floor(RECENT_BASELINE_FRACTION * window))


def compute_trends(snapshots: Sequence[LanguageSnapshot], mode: str = "kotlin_era") -> List[EvolutionTrend]:
    """Kotlin amount and proportion of the latest commit against two baselines.

    Raises:
        DegenerateHistory: no Kotlin at all, or Kotlin first appears in the latest commit
    """
    first_kotlin = next((i for i, s in enumerate(snapshots) if _kotlin(s) > 0), None)
    if first_kotlin is None:
        raise DegenerateHistory("No commit contains Kotlin code")
    latest = len(snapshots) - 1
    if first_kotlin == latest:
        raise DegenerateHistory("Kotlin first appears in the latest commit")

    last = snapshots[latest]
    trends = []
    for baseline, index in ((TrendBaseline.FIRST_KOTLIN, first_kotlin),
                            (TrendBaseline.RECENT, recent_baseline_index(snapshots, mode))):
        base = snapshots[index]
        trends.append(EvolutionTrend(
            baseline=baseline,
            baseline_index=base.order_index,
            baseline_commit=base.commit_id,
            amount_direction=_direction(_kotlin(last), _kotlin(base)),
            proportion_direction=_direction(last.kotlin_proportion or 0, base.kotlin_proportion or 0),
        ))
    return trends


@dataclass
class AppSummary:
    status: AppStatus
    total_commits: int
    interval: Optional[MigrationInterval] = None
    migration_class: Optional[MigrationClass] = None
    file_migration_proportion: Optional[Fraction] = None
    trends: List[EvolutionTrend] = field(default_factory=list)
    trends_note: Optional[str] = None


def summarize_app(snapshots: Sequence[LanguageSnapshot], events: Sequence[MigrationEvent],
                  mode: str = "kotlin_era") -> AppSummary:
    """Fold snapshots and events into the app-level characterization."""
    if not snapshots:
        return AppSummary(AppStatus.OTHER, 0, trends_note="Repository has no commits")

    summary = AppSummary(classify_app(snapshots), len(snapshots))
    summary.interval = compute_interval(snapshots)
    if summary.interval is not None:
        summary.migration_class = classify_interval(summary.interval)
        if summary.interval.length >= 1:
            summary.file_migration_proportion = file_migration_proportion(events, summary.interval)
    try:
        summary.trends = compute_trends(snapshots, mode)
    except DegenerateHistory as e:
        summary.trends_note = str(e)
    logger.info(f"[OK] App status {summary.status.value}"
                + (f", {summary.migration_class.value} interval of {summary.interval.length} commits"
                   if summary.interval is not None else ""))
    return summary
