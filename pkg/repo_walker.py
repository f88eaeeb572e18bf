"""Walk a local git repository oldest-first along the first-parent chain.

Each commit is diffed against its first parent (the empty tree for the root),
with rename detection at RENAME_SIMILARITY percent. Renames that change the file
extension are split into Removed + Added so that a Foo.java -> Foo.kt rename is
seen by the file-level migration detector.
"""

import logging
import os
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

import git
from git.exc import GitCommandError, InvalidGitRepositoryError, NoSuchPathError

from config import BINARY_SNIFF_BYTES, RENAME_SIMILARITY
from errors import CorruptHistory, NotARepository, UnreadableRepository

logger = logging.getLogger(__name__)

_SUBMODULE_MODE = "160000"

# Merges are followed through their first parent only; recorded in report metadata.
HISTORY_TRAVERSAL = "first-parent"


class ChangeKind(str, Enum):
    ADDED = "Added"
    REMOVED = "Removed"
    MODIFIED = "Modified"
    RENAMED = "Renamed"


class RepositoryHandle:
    """An opened repository. Reads only; never writes to the repository."""

    def __init__(self, repo: git.Repo, path: str, branch: Optional[str] = None):
        self.repo = repo
        self.path = path
        self.branch = branch
        self._lock = threading.Lock()  # git cat-file --batch is shared by all readers

    @property
    def revision(self) -> str:
        return self.branch or "HEAD"

    def read_blob(self, sha: str) -> bytes:
        with self._lock:
            try:
                return self.repo.odb.stream(bytes.fromhex(sha)).read()
            except Exception as e:
                raise CorruptHistory(f"Cannot read object {sha}: {e}") from e

    def close(self):
        self.repo.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()


@dataclass(frozen=True)
class ContentHandle:
    """Lazy reference to the exact bytes of one file version."""

    sha: str
    handle: RepositoryHandle = field(compare=False, repr=False)

    def read(self) -> bytes:
        return self.handle.read_blob(self.sha)


@dataclass(frozen=True)
class FileChange:
    kind: ChangeKind
    old_path: Optional[str] = None
    new_path: Optional[str] = None
    old_content: Optional[ContentHandle] = None
    new_content: Optional[ContentHandle] = None

    @property
    def path(self) -> str:
        """The path this change leaves in the tree, or the removed path."""
        return self.new_path if self.new_path is not None else self.old_path


@dataclass(frozen=True)
class CommitRecord:
    id: str
    parent_ids: Tuple[str, ...]
    order_index: int
    timestamp: int
    author_name: str
    author_email: str
    message: str
    changes: Tuple[FileChange, ...]


def is_binary(content: bytes) -> bool:
    """NUL-byte sniffing over the first BINARY_SNIFF_BYTES bytes."""
    return b"\0" in content[:BINARY_SNIFF_BYTES]


def open_repository(path, branch: Optional[str] = None) -> RepositoryHandle:
    """Open the git repository at `path` for walking.

    Raises:
        NotARepository: path missing or not a git repository
        UnreadableRepository: repository cannot be read, or branch does not resolve
    """
    repo_path = Path(path)
    if not repo_path.exists():
        raise NotARepository(f"Path does not exist: {path}")
    if not repo_path.is_dir():
        raise NotARepository(f"Not a directory: {path}")
    if not os.access(repo_path, os.R_OK | os.X_OK):
        raise UnreadableRepository(f"Permission denied: {path}")

    try:
        repo = git.Repo(str(repo_path))
    except (InvalidGitRepositoryError, NoSuchPathError) as e:
        raise NotARepository(f"Not a git repository: {path}") from e
    except (OSError, git.GitError) as e:
        raise UnreadableRepository(f"Cannot open repository {path}: {e}") from e

    if branch:
        try:
            repo.commit(branch)
        except Exception as e:
            repo.close()
            raise UnreadableRepository(f"Branch {branch!r} not found in {path}") from e

    logger.debug(f"Opened repository {path} (revision {branch or 'HEAD'})")
    return RepositoryHandle(repo, str(repo_path), branch)


def _parse_raw_diff(output: str) -> List[Tuple[str, str, str, str, str, Optional[str], Optional[str]]]:
    """Parse `git diff-tree -z --raw` output into (old_mode, new_mode, old_sha, new_sha, status, old_path, new_path)."""
    tokens = output.split("\0")
    entries = []
    i = 0
    while i < len(tokens):
        meta = tokens[i].strip()
        if not meta.startswith(":"):
            i += 1
            continue
        old_mode, new_mode, old_sha, new_sha, status = meta[1:].split()[:5]
        letter = status[0]
        if letter in ("R", "C"):
            old_path, new_path = tokens[i + 1], tokens[i + 2]
            i += 3
        else:
            old_path = new_path = tokens[i + 1]
            i += 2
        entries.append((old_mode, new_mode, old_sha, new_sha, letter, old_path, new_path))
    return entries


def _extension(path: str) -> str:
    return os.path.splitext(path)[1].lower()


def _changes_for(handle: RepositoryHandle, commit: git.Commit) -> Tuple[FileChange, ...]:
    args = ["-r", "-z", "--raw", "--no-commit-id", f"--find-renames={RENAME_SIMILARITY}%"]
    try:
        if commit.parents:
            output = handle.repo.git.diff_tree(*args, commit.parents[0].hexsha, commit.hexsha)
        else:
            output = handle.repo.git.diff_tree(*args, "--root", commit.hexsha)
    except GitCommandError as e:
        raise CorruptHistory(f"Cannot diff commit {commit.hexsha}: {e}") from e

    changes = []
    for old_mode, new_mode, old_sha, new_sha, letter, old_path, new_path in _parse_raw_diff(output):
        if _SUBMODULE_MODE in (old_mode, new_mode):
            continue
        old_blob = ContentHandle(old_sha, handle)
        new_blob = ContentHandle(new_sha, handle)
        if letter == "A":
            changes.append(FileChange(ChangeKind.ADDED, None, new_path, None, new_blob))
        elif letter == "D":
            changes.append(FileChange(ChangeKind.REMOVED, old_path, None, old_blob, None))
        elif letter in ("M", "T"):
            if old_sha == new_sha:
                continue  # mode-only change
            changes.append(FileChange(ChangeKind.MODIFIED, old_path, new_path, old_blob, new_blob))
        elif letter in ("R", "C"):
            if _extension(old_path) != _extension(new_path):
                if letter == "R":
                    changes.append(FileChange(ChangeKind.REMOVED, old_path, None, old_blob, None))
                changes.append(FileChange(ChangeKind.ADDED, None, new_path, None, new_blob))
            else:
                changes.append(FileChange(ChangeKind.RENAMED, old_path, new_path, old_blob, new_blob))
        else:
            logger.warning(f"Ignoring unknown change status {letter!r} for {new_path} in {commit.hexsha[:10]}")

    changes.sort(key=lambda c: (c.path, c.kind.value))
    return tuple(changes)


def walk_history(handle: RepositoryHandle) -> Iterator[CommitRecord]:
    """Yield CommitRecords oldest-first along the first-parent chain of the selected branch."""
    if handle.branch is None and not handle.repo.head.is_valid():
        logger.warning(f"Repository {handle.path} has no commits")
        return
    try:
        handle.repo.commit(handle.revision)
    except Exception as e:
        raise CorruptHistory(f"Cannot resolve {handle.revision}: {e}") from e

    try:
        commits = handle.repo.iter_commits(handle.revision, first_parent=True, reverse=True)
        for order_index, commit in enumerate(commits):
            yield CommitRecord(
                id=commit.hexsha,
                parent_ids=tuple(p.hexsha for p in commit.parents),
                order_index=order_index,
                timestamp=int(commit.authored_date),
                author_name=commit.author.name or "",
                author_email=commit.author.email or "",
                message=commit.message if isinstance(commit.message, str) else commit.message.decode("utf-8", "replace"),
                changes=_changes_for(handle, commit),
            )
    except GitCommandError as e:
        raise CorruptHistory(f"Cannot walk history of {handle.path}: {e}") from e


def list_tree(handle: RepositoryHandle, commit_id: str) -> Dict[str, ContentHandle]:
    """All files of the tree at `commit_id`, keyed by repository-relative path."""
    try:
        output = handle.repo.git.ls_tree("-r", "-z", "--full-tree", commit_id)
    except GitCommandError as e:
        raise CorruptHistory(f"Cannot list tree of {commit_id}: {e}") from e

    files = {}
    for entry in output.split("\0"):
        if not entry:
            continue
        meta, path = entry.split("\t", 1)
        mode, obj_type, sha = meta.split()
        if obj_type != "blob":
            continue
        files[path] = ContentHandle(sha, handle)
    return files
