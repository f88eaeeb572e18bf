import csv
import datetime
import json
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import jsonschema

from commit_processor import CommitAnalysis
from config import (EVENTS_CSV_FILENAME, ITEMSETS_CSV_FILENAME, REPORT_FILENAME, REPORT_SCHEMA_VERSION,
                    SNAPSHOTS_CSV_FILENAME, TOOL_VERSION)
from errors import UnwritableOutput
from lang_metrics import SNAPSHOT_CSV_FIELDS, Language, LanguageSnapshot, detect_language
from migration_detect import AppSummary, MigrationKind
from pattern_miner import ITEMSET_CSV_FIELDS, FrequentItemset

SCHEMA_PATH = Path(__file__).parent / "report_schema.json"

EVENT_CSV_FIELDS = ['commit_index', 'commit_id', 'kind', 'java_paths', 'kotlin_paths', 'evidence']


def rational(value: Optional[Fraction]) -> Optional[dict]:
    """Exact fraction plus a 6-place float, or None."""
    if value is None:
        return None
    value = Fraction(value)
    return {'fraction': f"{value.numerator}/{value.denominator}", 'value': round(float(value), 6)}


@dataclass
class MigrationAuthor:
    author_name: str
    author_email: str
    event_count: int

    def to_dict(self) -> dict:
        return {'author_name': self.author_name, 'author_email': self.author_email, 'event_count': self.event_count}


@dataclass
class AnalysisReport:
    config: dict
    repository: dict
    analyses: List[CommitAnalysis]
    snapshots: List[LanguageSnapshot]
    summary: AppSummary
    itemsets: List[FrequentItemset]
    tool_version: str = TOOL_VERSION
    generated_at: str = field(default_factory=lambda: datetime.datetime.now(datetime.timezone.utc).isoformat())

    @property
    def events(self):
        return [event for analysis in self.analyses for event in analysis.events]

    @property
    def skipped(self):
        return [s for analysis in self.analyses for s in analysis.skipped]

    def _commit_record(self, analysis: CommitAnalysis, snapshot: LanguageSnapshot) -> dict:
        commit = analysis.commit
        return {
            'order_index': commit.order_index,
            'commit_id': commit.id,
            'parent_ids': list(commit.parent_ids),
            'timestamp': commit.timestamp,
            'author_name': commit.author_name,
            'author_email': commit.author_email,
            'message': commit.message,
            'message_keywords': list(analysis.keywords),
            'changes': [{
                'kind': change.kind.value,
                'old_path': change.old_path,
                'new_path': change.new_path,
                'language': detect_language(change.path).value,
            } for change in commit.changes],
            'snapshot': {
                'java_sloc': snapshot.sloc[Language.JAVA],
                'kotlin_sloc': snapshot.sloc[Language.KOTLIN],
                'other_sloc': snapshot.sloc[Language.OTHER],
                'java_files': snapshot.files[Language.JAVA],
                'kotlin_files': snapshot.files[Language.KOTLIN],
                'other_files': snapshot.files[Language.OTHER],
                'kotlin_proportion': rational(snapshot.kotlin_proportion),
            },
            'events': [event.to_dict() for event in analysis.events],
            'transaction_items': None if analysis.transaction is None else analysis.transaction.item_texts(),
            'error': analysis.error,
        }

    def _summary(self) -> dict:
        summary = self.summary
        interval = summary.interval
        counts = {kind.value: 0 for kind in MigrationKind}
        commits_with = {kind.value: set() for kind in MigrationKind}
        for event in self.events:
            counts[event.kind.value] += 1
            commits_with[event.kind.value].add(event.order_index)
        return {
            'status': summary.status.value,
            'total_commits': summary.total_commits,
            'interval': None if interval is None else {
                'first_kotlin_index': interval.first_kotlin_index,
                'first_kotlin_commit': interval.first_kotlin_commit,
                'last_java_index': interval.last_java_index,
                'last_java_commit': interval.last_java_commit,
                'length': interval.length,
                'normalized_length': rational(interval.normalized_length),
            },
            'migration_class': None if summary.migration_class is None else summary.migration_class.value,
            'file_migration_proportion': rational(summary.file_migration_proportion),
            'trends': [trend.to_dict() for trend in summary.trends],
            'trends_note': summary.trends_note,
            'event_counts': counts,
            'migration_commit_counts': {k: len(v) for k, v in commits_with.items()},
            'migration_authors': [a.to_dict() for a in list_migration_authors(self)],
        }

    def to_dict(self) -> dict:
        """Report document with keys in a fixed order."""
        by_index = {s.order_index: s for s in self.snapshots}
        return {
            'schema_version': REPORT_SCHEMA_VERSION,
            'tool_version': self.tool_version,
            'generated_at': self.generated_at,
            'config': self.config,
            'repository': self.repository,
            'commits': [self._commit_record(a, by_index[a.commit.order_index]) for a in self.analyses],
            'summary': self._summary(),
            'frequent_itemsets': [{
                'size': itemset.size,
                'support': rational(itemset.support),
                'items': itemset.item_texts(),
            } for itemset in self.itemsets],
            'skipped_files': [s.to_dict() for s in self.skipped],
        }


def build_report(config: dict, repository: dict, analyses: Sequence[CommitAnalysis],
                 snapshots: Sequence[LanguageSnapshot], summary: AppSummary,
                 itemsets: Sequence[FrequentItemset]) -> AnalysisReport:
    """Single-writer fold of per-commit results, ordered by order_index."""
    ordered = sorted(analyses, key=lambda a: a.commit.order_index)
    return AnalysisReport(config, repository, ordered, list(snapshots), summary, list(itemsets))


def list_migration_authors(report: AnalysisReport) -> List[MigrationAuthor]:
    """Authors of migration commits, by (name, email), most events first."""
    counts: Dict[tuple, int] = {}
    for analysis in report.analyses:
        if not analysis.events:
            continue
        key = (analysis.commit.author_name, analysis.commit.author_email)
        counts[key] = counts.get(key, 0) + len(analysis.events)
    rows = [MigrationAuthor(name, email, n) for (name, email), n in counts.items()]
    rows.sort(key=lambda a: (-a.event_count, a.author_name, a.author_email))
    return rows


def load_schema() -> dict:
    with open(SCHEMA_PATH, 'r', encoding='utf-8') as f:
        return json.load(f)


def validate_report(document: dict):
    """Raises jsonschema.ValidationError when the document breaks the shipped schema."""
    jsonschema.validate(instance=document, schema=load_schema())


class ReportWriter:
    """Writes report.json and the CSV series into one output directory."""

    def __init__(self, output_dir: str):
        self.output_dir = output_dir
        self.logger = logging.getLogger(__name__)

    def prepare(self):
        """Create the output directory; raises UnwritableOutput when that is impossible."""
        try:
            os.makedirs(self.output_dir, exist_ok=True)
        except OSError as e:
            raise UnwritableOutput(f"Cannot create output directory {self.output_dir}: {e}") from e
        if not os.access(self.output_dir, os.W_OK):
            raise UnwritableOutput(f"Output directory is not writable: {self.output_dir}")

    def _write_csv(self, filename: str, headers: List[str], rows: List[dict]) -> str:
        path = os.path.join(self.output_dir, filename)
        with open(path, 'w', newline='', encoding='utf-8') as csvfile:
            writer = csv.DictWriter(csvfile, fieldnames=headers, lineterminator='\n')
            writer.writeheader()
            writer.writerows(rows)
        self.logger.debug(f"Wrote {len(rows)} rows to {path}")
        return path

    def write(self, report: AnalysisReport, formats: Sequence[str]) -> List[str]:
        """
        Emit the report in the requested formats.

        Args:
            report: the assembled AnalysisReport
            formats: any of "json", "csv"

        Returns:
            Paths of the files written
        """
        self.prepare()
        written = []
        try:
            if "json" in formats:
                document = report.to_dict()
                validate_report(document)
                path = os.path.join(self.output_dir, REPORT_FILENAME)
                with open(path, 'w', encoding='utf-8', newline='\n') as f:
                    f.write(json.dumps(document, indent=2, ensure_ascii=False))
                    f.write("\n")
                written.append(path)

            if "csv" in formats:
                written.append(self._write_csv(SNAPSHOTS_CSV_FILENAME, SNAPSHOT_CSV_FIELDS,
                                               [s.to_row() for s in report.snapshots]))
                written.append(self._write_csv(ITEMSETS_CSV_FILENAME, ITEMSET_CSV_FIELDS,
                                               [i.to_row() for i in report.itemsets]))
                written.append(self._write_csv(EVENTS_CSV_FILENAME, EVENT_CSV_FIELDS, [{
                    'commit_index': e.order_index,
                    'commit_id': e.commit_id,
                    'kind': e.kind.value,
                    'java_paths': ";".join(e.java_paths),
                    'kotlin_paths': ";".join(e.kotlin_paths),
                    'evidence': json.dumps(e.evidence, sort_keys=True),
                } for e in report.events]))
        except OSError as e:
            raise UnwritableOutput(f"Cannot write report to {self.output_dir}: {e}") from e

        for path in written:
            self.logger.info(f"[OK] Wrote {path}")
        return written

