#!/usr/bin/env python3
"""
Utility script to inspect an emitted migration report.
Usage: python view_report.py [command] [options]
"""

import json
import os
import sys
import argparse

from config import OUTPUT_DIR, REPORT_FILENAME


def load_report(path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def main(argv=None):
    parser = argparse.ArgumentParser(description='Inspect a migration report')
    parser.add_argument('command', choices=['summary', 'authors', 'events', 'itemsets'],
                        help='Command to execute')
    parser.add_argument('--report', type=str, default=os.path.join(OUTPUT_DIR, REPORT_FILENAME),
                        help=f'Report file (default: {os.path.join(OUTPUT_DIR, REPORT_FILENAME)})')
    parser.add_argument('--kind', type=str, choices=['FileLevel', 'MethodLevel', 'UpdateInsert'],
                        help='Filter events by kind')
    parser.add_argument('--size', type=int, help='Only itemsets of this size')
    parser.add_argument('--limit', type=int, default=20, help='Maximum rows to print (default: 20)')

    args = parser.parse_args(argv)

    try:
        report = load_report(args.report)
    except (OSError, ValueError) as e:
        print(f"[FAILED] Cannot read report {args.report}: {e}")
        return 1

    if args.command == 'summary':
        show_summary(report)
    elif args.command == 'authors':
        show_authors(report)
    elif args.command == 'events':
        show_events(report, args.kind, args.limit)
    elif args.command == 'itemsets':
        show_itemsets(report, args.size, args.limit)
    return 0


def _rational(value):
    if value is None:
        return "n/a"
    return f"{value['fraction']} ({value['value'] * 100:.2f}%)"


def show_summary(report):
    """Display the app-level summary."""
    summary = report['summary']
    print("=== MIGRATION SUMMARY ===")
    print(f"Repository: {report['repository']['path']} ({report['repository']['history']} history)")
    print(f"Commits analyzed: {summary['total_commits']}")
    print(f"App status: {summary['status']}")

    interval = summary['interval']
    if interval:
        print(f"Migration interval: {interval['length']} commits "
              f"(#{interval['first_kotlin_index']} .. #{interval['last_java_index']}), "
              f"normalized {_rational(interval['normalized_length'])}")
        print(f"Migration class: {summary['migration_class']}")
        print(f"File-migration proportion: {_rational(summary['file_migration_proportion'])}")
    else:
        print("Migration interval: not applicable")

    print("\nEvents by kind:")
    for kind, count in summary['event_counts'].items():
        print(f"  {kind}: {count} events in {summary['migration_commit_counts'][kind]} commits")

    if summary['trends']:
        print("\nTrends (Kotlin amount / proportion):")
        for trend in summary['trends']:
            print(f"  vs {trend['baseline']} (#{trend['baseline_index']}): "
                  f"{trend['amount_direction']} / {trend['proportion_direction']}")
    elif summary['trends_note']:
        print(f"\nTrends: {summary['trends_note']}")

    if report['skipped_files']:
        print(f"\n[WARNING] {len(report['skipped_files'])} file versions were skipped")


def show_authors(report):
    """List developers who made migration commits."""
    authors = report['summary']['migration_authors']
    if not authors:
        print("No migration commits found.")
        return
    print(f"Found {len(authors)} migration authors:")
    print("-" * 80)
    for i, author in enumerate(authors, 1):
        print(f"{i}. {author['author_name']} <{author['author_email']}>: {author['event_count']} events")


def show_events(report, kind, limit):
    """List migration events, oldest first."""
    events = [e for commit in report['commits'] for e in commit['events']]
    if kind:
        events = [e for e in events if e['kind'] == kind]
        print(f"Filtered by kind: {kind}")
    if not events:
        print("No events found matching the criteria.")
        return

    print(f"\nFound {len(events)} events:")
    print("-" * 80)
    for i, event in enumerate(events[:limit], 1):
        print(f"{i}. #{event['order_index']} {event['commit_id'][:10]} {event['kind']}")
        print(f"   Java: {', '.join(event['java_paths'])}")
        print(f"   Kotlin: {', '.join(event['kotlin_paths'])}")
        print(f"   Evidence: {json.dumps(event['evidence'], sort_keys=True)}")
    if len(events) > limit:
        print(f"... {len(events) - limit} more")


def show_itemsets(report, size, limit):
    """List frequent change patterns."""
    itemsets = report['frequent_itemsets']
    if size:
        itemsets = [s for s in itemsets if s['size'] == size]
    if not itemsets:
        print("No frequent itemsets.")
        return
    for itemset in itemsets[:limit]:
        print(f"[{itemset['size']}] {itemset['support']['value'] * 100:.2f}%  {', '.join(itemset['items'])}")
    if len(itemsets) > limit:
        print(f"... {len(itemsets) - limit} more")


if __name__ == "__main__":
    sys.exit(main())
