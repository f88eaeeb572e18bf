import logging
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional

from config import (AnalysisConfig, ENABLE_MULTI_THREADING, ENABLE_PROGRESS_BARS, MAX_WORKER_THREADS,
                    MIN_COMMITS_FOR_MULTI_THREADING, PROGRESS_BAR_DESCRIPTION)
from errors import CorruptHistory
from migration_detect import (MigrationEvent, ParseSkipped, added_kotlin_files, detect_file_migration,
                              detect_method_migration, detect_update_insert_migration, diff_commit_files,
                              message_keywords, touches_both_languages, updated_source_files)
from lang_metrics import Language
from pattern_miner import Transaction, build_transaction
from repo_walker import CommitRecord
from tree_diff import TreeDiffParameters

try:
    from tqdm import tqdm
    TQDM_AVAILABLE = True
except ImportError:
    TQDM_AVAILABLE = False


@dataclass
class CommitAnalysis:
    """Everything the per-commit stage produces for one commit."""

    commit: CommitRecord
    events: List[MigrationEvent] = field(default_factory=list)
    transaction: Optional[Transaction] = None
    skipped: List[ParseSkipped] = field(default_factory=list)
    keywords: List[str] = field(default_factory=list)
    error: Optional[str] = None


def analyze_commit(commit: CommitRecord, config: AnalysisConfig,
                   params: Optional[TreeDiffParameters] = None) -> CommitAnalysis:
    """Run the enabled detectors and build the transaction for one commit."""
    params = params or TreeDiffParameters(config.min_height, config.dice_threshold, config.max_size)
    analysis = CommitAnalysis(commit, keywords=message_keywords(commit.message))

    both = touches_both_languages(commit)
    java_with_new_kotlin = bool(added_kotlin_files(commit)) and bool(updated_source_files(commit, Language.JAVA))
    diffs = None
    if both:
        diffs = diff_commit_files(commit, params)
    elif java_with_new_kotlin and "update_insert" in config.detectors:
        diffs = diff_commit_files(commit, params, languages=(Language.JAVA,))
    if diffs is not None:
        analysis.skipped.extend(diffs.skipped)

    if "file" in config.detectors:
        analysis.events.extend(detect_file_migration(commit))
    if "method" in config.detectors and both:
        analysis.events.extend(detect_method_migration(commit, diffs, config.name_matching, params))
    if "update_insert" in config.detectors and java_with_new_kotlin:
        analysis.events.extend(detect_update_insert_migration(commit, diffs, params))
    if both:
        analysis.transaction = build_transaction(diffs)
    return analysis


class CommitProcessor:
    """
    Fans per-commit analysis out over a thread pool and merges results by order_index.
    """

    def __init__(self, config: AnalysisConfig):
        self.config = config
        self.params = TreeDiffParameters(config.min_height, config.dice_threshold, config.max_size)
        self.logger = logging.getLogger(__name__)
        self._lock = threading.Lock()
        self.stats: Dict[str, Any] = {}

    def _progress_bar(self, total: int):
        if ENABLE_PROGRESS_BARS and TQDM_AVAILABLE and total:
            return tqdm(total=total, desc=PROGRESS_BAR_DESCRIPTION, unit="commit", ncols=80,
                        bar_format='{l_bar}{bar}| {n_fmt}/{total_fmt} [{elapsed}<{remaining}, {rate_fmt}]')
        return None

    def _analyze_safely(self, commit: CommitRecord) -> CommitAnalysis:
        thread_id = threading.current_thread().ident
        try:
            with self._lock:
                self.logger.debug(f"[Thread-{thread_id}] Analyzing commit {commit.order_index} {commit.id[:10]}")
            return analyze_commit(commit, self.config, self.params)
        except CorruptHistory:
            raise
        except Exception as e:
            error_msg = f"Error analyzing commit {commit.id[:10]}: {e}"
            with self._lock:
                self.logger.error(f"[Thread-{thread_id}] [FAILED] {error_msg}")
            return CommitAnalysis(commit, keywords=message_keywords(commit.message),
                                  skipped=[ParseSkipped(commit.id, "", f"analysis error: {e}")],
                                  error=error_msg)

    def process_commits(self, commits: List[CommitRecord]) -> List[CommitAnalysis]:
        """
        Analyze commits, in parallel when worthwhile.

        Args:
            commits: CommitRecords in walk order

        Returns:
            One CommitAnalysis per commit, ordered by order_index
        """
        start_time = datetime.now()
        parallel = ENABLE_MULTI_THREADING and len(commits) >= MIN_COMMITS_FOR_MULTI_THREADING
        thread_count = min(MAX_WORKER_THREADS, len(commits)) if parallel else 1
        if parallel:
            self.logger.info(f"[OK] Starting multi-threaded analysis with {thread_count} threads for {len(commits)} commits")
        else:
            self.logger.info(f"Analyzing {len(commits)} commits sequentially")

        progress_bar = self._progress_bar(len(commits))
        results: List[CommitAnalysis] = []
        try:
            if parallel:
                with ThreadPoolExecutor(max_workers=thread_count) as executor:
                    futures = {executor.submit(self._analyze_safely, c): c for c in commits}
                    for future in as_completed(futures):
                        results.append(future.result())
                        if progress_bar:
                            progress_bar.update(1)
            else:
                for commit in commits:
                    results.append(self._analyze_safely(commit))
                    if progress_bar:
                        progress_bar.update(1)
        finally:
            if progress_bar:
                progress_bar.close()

        results.sort(key=lambda a: a.commit.order_index)
        failed = sum(1 for a in results if a.error)
        self.stats = {
            'total_commits': len(commits),
            'events': sum(len(a.events) for a in results),
            'transactions': sum(1 for a in results if a.transaction is not None),
            'skipped_files': sum(len(a.skipped) for a in results),
            'failed_commits': failed,
            'processing_time': (datetime.now() - start_time).total_seconds(),
            'thread_count': thread_count,
        }
        self.logger.info(f"[OK] Commit analysis completed:")
        self.logger.info(f"  - Total commits: {self.stats['total_commits']}")
        self.logger.info(f"  - Migration events: {self.stats['events']}")
        self.logger.info(f"  - Transactions: {self.stats['transactions']}")
        self.logger.info(f"  - Skipped files: {self.stats['skipped_files']}")
        if failed:
            self.logger.warning(f"[WARNING] {failed} commits could not be analyzed")
        self.logger.info(f"  - Processing time: {self.stats['processing_time']:.2f} seconds")
        return results
