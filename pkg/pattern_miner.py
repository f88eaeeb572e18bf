"""Inter-language change transactions and Apriori frequent itemset mining."""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional

from ast_frontend import UnifiedKind
from config import MAX_ITEMSET_SIZE, MIN_SUPPORT
from lang_metrics import Language
from migration_detect import CommitDiffs
from tree_diff import DELETE, INSERT, MOVE, UPDATE

logger = logging.getLogger(__name__)

ACTION_CODES = {INSERT: "INS", DELETE: "DEL", UPDATE: "UPD", MOVE: "MOV"}
LANGUAGE_CODES = {Language.JAVA: "J", Language.KOTLIN: "K"}


@dataclass(frozen=True)
class PatternItem:
    action: str  # INS, DEL, UPD, MOV
    entity: UnifiedKind
    parent: UnifiedKind
    language: str  # J or K

    @property
    def text(self) -> str:
        return f"{self.action}-{self.entity.label} in {self.parent.label} ({self.language})"

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class Transaction:
    commit_id: str
    order_index: int
    items: FrozenSet[PatternItem]

    def item_texts(self) -> List[str]:
        return sorted(item.text for item in self.items)


@dataclass(frozen=True)
class FrequentItemset:
    items: tuple  # PatternItems sorted by text
    support: Fraction

    @property
    def size(self) -> int:
        return len(self.items)

    def item_texts(self) -> List[str]:
        return [item.text for item in self.items]

    def to_row(self) -> dict:
        return {
            'size': self.size,
            'support': f"{float(self.support):.6f}",
            'items': ";".join(self.item_texts()),
        }


ITEMSET_CSV_FIELDS = ['size', 'support', 'items']


def build_transaction(diffs: CommitDiffs) -> Optional[Transaction]:
    """Set of change items of one commit; None unless both languages contribute."""
    items = set()
    for diff in diffs.diffs:
        code = LANGUAGE_CODES[diff.language]
        for action in diff.script:
            items.add(PatternItem(ACTION_CODES[action.op], action.kind, action.parent_kind, code))
    languages = {item.language for item in items}
    if languages != {"J", "K"}:
        return None
    return Transaction(diffs.commit.id, diffs.commit.order_index, frozenset(items))


def build_transactions(commit_diffs: Iterable[CommitDiffs]) -> List[Transaction]:
    transactions = []
    for diffs in commit_diffs:
        transaction = build_transaction(diffs)
        if transaction is not None:
            transactions.append(transaction)
    return transactions


def _has_all_subsets(candidate: tuple, frequent: set) -> bool:
    for k in range(len(candidate)):
        if candidate[:k] + candidate[k + 1:] not in frequent:
            return False
    return True


def apriori(transactions: List[Transaction], min_support=MIN_SUPPORT,
            max_size: int = MAX_ITEMSET_SIZE) -> List[FrequentItemset]:
    """All itemsets with support >= min_support and size <= max_size.

    Level-wise: k-candidates join two frequent (k-1)-sets sharing their first
    k-2 items and are pruned unless every (k-1)-subset is frequent.
    Output is sorted by size, then support descending, then item texts.
    """
    min_support = Fraction(str(min_support)) if not isinstance(min_support, Fraction) else min_support
    if not (0 < min_support <= 1):
        raise ValueError(f"min_support must be in (0, 1], got {min_support}")
    if max_size < 1:
        raise ValueError(f"max_size must be >= 1, got {max_size}")
    total = len(transactions)
    if total == 0:
        return []

    by_text: Dict[str, PatternItem] = {}
    baskets = []
    for transaction in transactions:
        texts = frozenset(item.text for item in transaction.items)
        for item in transaction.items:
            by_text[item.text] = item
        baskets.append(texts)

    def support_of(candidates):
        counts = {c: 0 for c in candidates}
        for basket in baskets:
            for c in candidates:
                if basket.issuperset(c):
                    counts[c] += 1
        return {c: Fraction(n, total) for c, n in counts.items() if Fraction(n, total) >= min_support}

    results: Dict[tuple, Fraction] = {}
    level = support_of([(text,) for text in sorted(by_text)])
    size = 1
    while level:
        results.update(level)
        logger.debug(f"Apriori level {size}: {len(level)} frequent itemsets")
        if size >= max_size:
            break
        previous = sorted(level)
        frequent = set(previous)
        candidates = []
        for i, a in enumerate(previous):
            for b in previous[i + 1:]:
                if a[:-1] != b[:-1]:
                    break
                candidate = a + (b[-1],)
                if _has_all_subsets(candidate, frequent):
                    candidates.append(candidate)
        level = support_of(candidates)
        size += 1

    itemsets = [FrequentItemset(tuple(by_text[t] for t in key), support) for key, support in results.items()]
    itemsets.sort(key=lambda s: (s.size, -s.support, s.item_texts()))
    logger.info(f"[OK] Mined {len(itemsets)} frequent itemsets from {total} transactions")
    return itemsets
