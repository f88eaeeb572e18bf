#!/usr/bin/env python3
"""
Test script for change transactions and Apriori mining.
The randomized oracle compares against brute-force subset enumeration.
"""

import os
import random
import sys
from fractions import Fraction
from itertools import combinations

# Add the current directory to the Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from ast_frontend import BLOCK, CLASS, IF, INVOCATION, LOCAL_VARIABLE, METHOD, PROPERTY, RETURN, UnifiedKind
from fixture_repos import FixtureRepo, java_class, kotlin_class
from lang_metrics import Language
from migration_detect import CommitDiffs, FileDiff, diff_commit_files
from pattern_miner import PatternItem, Transaction, apriori, build_transaction, build_transactions
from repo_walker import CommitRecord, open_repository, walk_history
from tree_diff import DELETE, INSERT, MOVE, UPDATE, EditAction

RANDOM_SEED = 7
RANDOM_CASES = 100

_ENTITIES = [METHOD, INVOCATION, PROPERTY, LOCAL_VARIABLE, RETURN, IF]
_PARENTS = [CLASS, METHOD, IF]
_ACTIONS = ["INS", "DEL", "UPD", "MOV"]


def _item_pool():
    pool = []
    for action in _ACTIONS:
        for entity in _ENTITIES:
            for parent in _PARENTS:
                for language in ("J", "K"):
                    pool.append(PatternItem(action, entity, parent, language))
    return pool


def _transaction(i, items):
    return Transaction(f"{i:040x}", i, frozenset(items))


def test_item_text():
    item = PatternItem("INS", PROPERTY, CLASS, "K")
    assert item.text == "INS-Property Declaration in Class (K)"
    assert str(PatternItem("DEL", LOCAL_VARIABLE, METHOD, "J")) == "DEL-Local Variable in Method (J)"
    other = PatternItem("UPD", UnifiedKind.other("binary_expression"), METHOD, "J")
    assert other.text == "UPD-Other(binary_expression) in Method (J)"


def test_apriori_worked_example():
    """{A,B},{A,B},{A,C},{B} at support 0.5."""
    print("=== Apriori Worked Example ===")
    a = PatternItem("INS", METHOD, CLASS, "K")
    b = PatternItem("DEL", METHOD, CLASS, "J")
    c = PatternItem("UPD", INVOCATION, METHOD, "J")
    transactions = [_transaction(0, {a, b}), _transaction(1, {a, b}), _transaction(2, {a, c}),
                    _transaction(3, {b})]
    itemsets = apriori(transactions, Fraction(1, 2), 4)
    assert [(s.item_texts(), s.support) for s in itemsets] == [
        ([b.text], Fraction(3, 4)),
        ([a.text], Fraction(3, 4)),
        (sorted([a.text, b.text]), Fraction(1, 2)),
    ]
    assert itemsets[2].size == 2
    assert itemsets[0].to_row() == {'size': 1, 'support': "0.750000", 'items': b.text}
    print("[OK] Worked example")


def test_apriori_parameters():
    transactions = [_transaction(0, {PatternItem("INS", METHOD, CLASS, "K")})]
    for bad_support in (0, "0", Fraction(3, 2), "-0.1"):
        try:
            apriori(transactions, bad_support, 4)
            assert False, f"expected ValueError for {bad_support}"
        except ValueError:
            pass
    try:
        apriori(transactions, "0.5", 0)
        assert False, "expected ValueError"
    except ValueError:
        pass
    assert apriori([], "0.5", 4) == []
    assert apriori(transactions, "1", 4)[0].support == 1
    assert apriori(transactions, 0.5, 4)[0].support == 1


def _brute_force(transactions, min_support, max_size):
    baskets = [frozenset(item.text for item in t.items) for t in transactions]
    universe = sorted(set().union(*baskets))
    total = len(baskets)
    found = {}
    for size in range(1, max_size + 1):
        for combo in combinations(universe, size):
            count = sum(1 for basket in baskets if basket.issuperset(combo))
            if Fraction(count, total) >= min_support:
                found[combo] = Fraction(count, total)
    return found


def test_apriori_matches_brute_force():
    """Randomized instances agree exactly with exhaustive enumeration."""
    print("=== Apriori Oracle Test ===")
    rng = random.Random(RANDOM_SEED)
    pool = _item_pool()
    for case in range(RANDOM_CASES):
        universe = rng.sample(pool, rng.randint(1, 12))
        transactions = [_transaction(i, rng.sample(universe, rng.randint(1, len(universe))))
                        for i in range(rng.randint(1, 50))]
        min_support = rng.choice([Fraction(1, 50), Fraction(1, 20), Fraction(1, 10), Fraction(1, 5),
                                  Fraction(3, 10), Fraction(1, 2)])
        max_size = rng.randint(1, 4)

        mined = {tuple(s.item_texts()): s.support for s in apriori(transactions, min_support, max_size)}
        expected = _brute_force(transactions, min_support, max_size)
        assert mined == expected, f"case {case}: {len(mined)} mined vs {len(expected)} expected"

        for key in mined:
            for k in range(len(key)):
                subset = key[:k] + key[k + 1:]
                if subset:
                    assert subset in mined and mined[subset] >= mined[key], f"case {case}: closure broken"
    print(f"[OK] {RANDOM_CASES} instances match brute force")


def test_apriori_output_order():
    rng = random.Random(11)
    pool = _item_pool()[:8]
    transactions = [_transaction(i, rng.sample(pool, rng.randint(1, 8))) for i in range(30)]
    itemsets = apriori(transactions, Fraction(1, 10), 3)
    keys = [(s.size, -s.support, s.item_texts()) for s in itemsets]
    assert keys == sorted(keys)
    assert all(s.item_texts() == sorted(s.item_texts()) for s in itemsets)


def _commit(i=0):
    return CommitRecord(f"{i:040x}", (), i, 0, "Dev", "dev@example.com", "", ())


def _diff(path, language, actions):
    return FileDiff(path, language, None, None, actions)


def test_build_transaction():
    """Items from every diff action; only commits with both languages count."""
    java_actions = [EditAction(DELETE, METHOD, "stop", CLASS), EditAction(UPDATE, INVOCATION, "b", METHOD),
                    EditAction(DELETE, METHOD, "other", CLASS)]
    kotlin_actions = [EditAction(INSERT, METHOD, "stop", CLASS), EditAction(MOVE, BLOCK, None, METHOD)]

    both = CommitDiffs(_commit(1), [_diff("A.java", Language.JAVA, java_actions),
                                    _diff("B.kt", Language.KOTLIN, kotlin_actions)])
    transaction = build_transaction(both)
    assert transaction.order_index == 1
    assert transaction.item_texts() == [
        "DEL-Method in Class (J)",
        "INS-Method in Class (K)",
        "MOV-Block in Method (K)",
        "UPD-Invocation in Method (J)",
    ]

    java_only = CommitDiffs(_commit(2), [_diff("A.java", Language.JAVA, java_actions)])
    assert build_transaction(java_only) is None
    unchanged_kotlin = CommitDiffs(_commit(3), [_diff("A.java", Language.JAVA, java_actions),
                                                _diff("B.kt", Language.KOTLIN, [])])
    assert build_transaction(unchanged_kotlin) is None

    assert [t.order_index for t in build_transactions([both, java_only, unchanged_kotlin])] == [1]
    print("[OK] Transactions")


def test_transaction_from_repository():
    fx = FixtureRepo()
    try:
        fx.commit({"app/A.java": java_class("A", ["start", "stop"]), "app/B.kt": kotlin_class("B", ["run"])}, "init")
        fx.commit({"app/A.java": java_class("A", ["start"]), "app/B.kt": kotlin_class("B", ["run", "stop"])},
                  "move stop")
        with open_repository(fx.path) as handle:
            commit = list(walk_history(handle))[1]
            transaction = build_transaction(diff_commit_files(commit))
        texts = transaction.item_texts()
        assert "DEL-Method in Class (J)" in texts
        assert "INS-Method in Class (K)" in texts
        assert all(t.endswith("(J)") or t.endswith("(K)") for t in texts)
    finally:
        fx.cleanup()
    print("[OK] Transaction from a real commit")


def main():
    """Main test function."""
    print("Pattern Miner Test Suite")
    print("=" * 50)

    tests = [test_item_text, test_apriori_worked_example, test_apriori_parameters, test_apriori_matches_brute_force,
             test_apriori_output_order, test_build_transaction, test_transaction_from_repository]
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
