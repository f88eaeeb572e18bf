#!/usr/bin/env python3
"""
Command-line entry point.

Usage:
    python main.py analyze --repo PATH [--branch B] [--detectors file,method,update_insert]
                           [--min-support F] [--max-itemset-size N] [--no-exclude-generated-tests]
                           [--match-method-names] [--recent-baseline kotlin_era|all_commits]
                           [--out DIR] [--format json,csv]
    python main.py dump-ast FILE [--language java|kotlin]

Every analyze flag can also be set through a JKMINER_* environment variable (see config.py).
"""

import argparse
import json
import logging
import sys

from ast_frontend import dump_tree, parse
from commit_processor import CommitProcessor
from config import LOG_FILE, LOG_LEVEL, RECENT_BASELINE_MODES, VERBOSE_GIT_LOGS, AnalysisConfig
from errors import InvalidConfiguration, MigrationMinerError
from lang_metrics import GeneratedTestPolicy, Language, detect_language, snapshot_series
from migration_detect import summarize_app
from pattern_miner import apriori
from repo_walker import HISTORY_TRAVERSAL, open_repository, walk_history
from report_writer import AnalysisReport, ReportWriter, build_report


def setup_logging():
    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(LOG_FILE),
            logging.StreamHandler()
        ]
    )

    # Reduce GitPython verbosity based on configuration
    if not VERBOSE_GIT_LOGS:
        logging.getLogger('git').setLevel(logging.WARNING)
        logging.getLogger('git.cmd').setLevel(logging.WARNING)


class MigrationMinerApp:
    def __init__(self, config: AnalysisConfig):
        self.config = config.validate()
        self.writer = ReportWriter(config.output_dir)
        self.logger = logging.getLogger(__name__)

    def run(self) -> AnalysisReport:
        """Walk, measure, detect, mine and emit."""
        config = self.config
        self.logger.info(f"Starting migration analysis of {config.repo_path}")
        self.writer.prepare()

        with open_repository(config.repo_path, config.branch) as handle:
            commits = list(walk_history(handle))
            self.logger.info(f"[OK] Walked {len(commits)} commits on {handle.revision}")

            snapshots = snapshot_series(commits, GeneratedTestPolicy(enabled=config.exclude_generated_tests))
            analyses = CommitProcessor(config).process_commits(commits)

        events = [event for analysis in analyses for event in analysis.events]
        summary = summarize_app(snapshots, events, config.recent_baseline_mode)

        transactions = [a.transaction for a in analyses if a.transaction is not None]
        itemsets = apriori(transactions, config.min_support, config.max_itemset_size)

        repository = {
            'path': config.repo_path,
            'branch': config.branch,
            'head': commits[-1].id if commits else None,
            'history': HISTORY_TRAVERSAL,
        }
        report = build_report(config.to_dict(), repository, analyses, snapshots, summary, itemsets)
        self.writer.write(report, config.formats)
        self.logger.info("Migration analysis completed.")
        return report


def run(config: AnalysisConfig) -> AnalysisReport:
    return MigrationMinerApp(config).run()


def _config_from_args(args) -> AnalysisConfig:
    overrides = {
        'repo_path': args.repo,
        'branch': args.branch,
        'detectors': args.detectors,
        'min_support': args.min_support,
        'max_itemset_size': args.max_itemset_size,
        'exclude_generated_tests': args.exclude_generated_tests,
        'name_matching': args.match_method_names,
        'recent_baseline_mode': args.recent_baseline,
        'output_dir': args.out,
        'formats': args.format,
    }
    return AnalysisConfig(**{k: v for k, v in overrides.items() if v is not None})


def _dump_ast(args) -> int:
    if args.language:
        language = Language.JAVA if args.language == 'java' else Language.KOTLIN
    else:
        language = detect_language(args.file)
    if language == Language.OTHER:
        raise InvalidConfiguration(f"Cannot tell the language of {args.file}; pass --language")
    with open(args.file, 'rb') as f:
        content = f.read()
    sys.stdout.write(dump_tree(parse(content, language)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Mine Java to Kotlin migrations from a git repository')
    subparsers = parser.add_subparsers(dest='command', required=True)

    analyze = subparsers.add_parser('analyze', help='Analyze one repository and write the report')
    analyze.add_argument('--repo', type=str, help='Path of the local git repository')
    analyze.add_argument('--branch', type=str, help='Branch to walk (default: HEAD)')
    analyze.add_argument('--detectors', type=str, help='Comma-separated subset of file,method,update_insert')
    analyze.add_argument('--min-support', type=str, help='Minimum itemset support in (0, 1]')
    analyze.add_argument('--max-itemset-size', type=int, help='Largest itemset size to mine')
    analyze.add_argument('--no-exclude-generated-tests', dest='exclude_generated_tests',
                         action='store_const', const=False, default=None,
                         help='Count IDE-generated test files in sLOC')
    analyze.add_argument('--match-method-names', action='store_const', const=True, default=None,
                         help='Require equal method names for method-level migrations')
    analyze.add_argument('--recent-baseline', choices=RECENT_BASELINE_MODES,
                         help='How the recent trend baseline counts commits')
    analyze.add_argument('--out', type=str, help='Output directory')
    analyze.add_argument('--format', type=str, help='Comma-separated subset of json,csv')

    dump = subparsers.add_parser('dump-ast', help='Print the unified AST of one source file')
    dump.add_argument('file', help='Java or Kotlin source file')
    dump.add_argument('--language', choices=['java', 'kotlin'], help='Override detection by extension')
    return parser


def main(argv=None) -> int:
    """Main entry point. Returns the process exit code."""
    args = build_parser().parse_args(argv)
    # dump-ast only prints the tree; it never creates the log file
    if args.command == 'analyze':
        setup_logging()
    logger = logging.getLogger(__name__)
    try:
        if args.command == 'dump-ast':
            return _dump_ast(args)
        run(_config_from_args(args))
        return 0
    except MigrationMinerError as e:
        logger.error(f"[FAILED] {e.error_name}: {e}")
        print(json.dumps(e.to_record()), file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception(f"[FAILED] Unexpected error: {e}")
        print(json.dumps({'error': type(e).__name__, 'message': str(e), 'exit_code': 1}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
