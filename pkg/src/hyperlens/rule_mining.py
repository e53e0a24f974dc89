"""Transactions, frequent itemsets (Apriori) and association rules.

A transaction is the set of distinct documents touched in one session.
Mining is level-wise with candidate join + subset pruning. All support and
confidence thresholds are applied with exact integer arithmetic: counts are
integers and user thresholds are converted to exact decimal fractions, so
``support >= min_support`` never depends on float rounding.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .errors import HyperlensError
from .session_builder import Session

logger = logging.getLogger(__name__)

DEFAULT_MIN_SUPPORT = 0.01
DEFAULT_MIN_CONFIDENCE = 0.80
DEFAULT_MAX_ITEMSET_SIZE = 6


class NoTransactions(HyperlensError):
    category = "mining"


class ItemsetCapExceeded(HyperlensError):
    """A frequent itemset larger than the configured cap exists; raising
    beats silently truncating the lattice."""

    category = "mining"


@dataclass(frozen=True)
class Transaction:
    tid: str
    items: FrozenSet[str]


@dataclass(frozen=True)
class ItemSet:
    items: Tuple[str, ...]      # sorted
    support_count: int
    support: float


@dataclass(frozen=True)
class AssociationRule:
    antecedent: Tuple[str, ...]  # sorted, disjoint from consequent
    consequent: Tuple[str, ...]
    support: float
    confidence: float


@dataclass
class FrequentItemsets:
    """Apriori output: all frequent itemsets with their exact counts."""

    itemsets: List[ItemSet]
    counts: Dict[FrozenSet[str], int]
    n_transactions: int


def build_transactions(sessions: Iterable[Session],
                       restrict_to: Optional[Set[str]] = None,
                       per_user: bool = False) -> tuple:
    """One transaction per session (or per user) with items deduplicated.

    ``restrict_to`` drops items outside the given doc universe. Sessions
    that contribute no items are dropped and counted. Returns
    ``(transactions, n_dropped)``.
    """
    groups: Dict[str, Set[str]] = {}
    order: List[str] = []
    n_candidates = 0
    for session in sessions:
        tid = session.user.as_str() if per_user else session.session_id
        if tid not in groups:
            groups[tid] = set()
            order.append(tid)
            n_candidates += 1
        items = groups[tid]
        for ref in session.resources:
            if restrict_to is None or ref.doc_id in restrict_to:
                items.add(ref.doc_id)
    transactions = [Transaction(tid=tid, items=frozenset(groups[tid]))
                    for tid in order if groups[tid]]
    return transactions, n_candidates - len(transactions)


def _exact_fraction(threshold: float) -> Fraction:
    # str() gives the shortest decimal repr, so 0.05 means exactly 5/100.
    return Fraction(str(threshold))


def min_count_for_support(min_support: float, n_transactions: int) -> int:
    """Smallest integer count c with c / n >= min_support."""
    frac = _exact_fraction(min_support)
    need = -((-frac.numerator * n_transactions) // frac.denominator)
    return max(1, need)


def meets_confidence(union_count: int, antecedent_count: int,
                     min_confidence: float) -> bool:
    """union/antecedent >= min_confidence, compared in integers."""
    frac = _exact_fraction(min_confidence)
    return union_count * frac.denominator >= frac.numerator * antecedent_count


def _count_candidates(transactions: List[FrozenSet[str]],
                      candidates: Set[Tuple[str, ...]], size: int) -> Counter:
    """Exact candidate counts; per transaction, pick whichever is cheaper:
    enumerating its size-k subsets or scanning the candidate list."""
    counts: Counter = Counter()
    candidate_items = set()
    for cand in candidates:
        candidate_items.update(cand)
    for tx in transactions:
        relevant = sorted(tx & candidate_items)
        if len(relevant) < size:
            continue
        if comb(len(relevant), size) <= len(candidates):
            for combo in combinations(relevant, size):
                if combo in candidates:
                    counts[combo] += 1
        else:
            tx_set = set(relevant)
            for cand in candidates:
                if tx_set.issuperset(cand):
                    counts[cand] += 1
    return counts


def _join_candidates(frequent: List[Tuple[str, ...]], size: int) -> Set[Tuple[str, ...]]:
    """Join (k-1)-itemsets sharing a (k-2)-prefix, then prune candidates
    with any infrequent (k-1)-subset (support anti-monotonicity)."""
    frequent_set = set(frequent)
    candidates = set()
    for i, left in enumerate(frequent):
        for right in frequent[i + 1:]:
            if left[:size - 2] != right[:size - 2]:
                break  # sorted list: shared prefixes are contiguous
            merged = tuple(sorted(set(left) | set(right)))
            if len(merged) != size:
                continue
            if all(sub in frequent_set for sub in combinations(merged, size - 1)):
                candidates.add(merged)
    return candidates


def mine_frequent_itemsets(transactions: List[Transaction], min_support: float,
                           max_size: int = DEFAULT_MAX_ITEMSET_SIZE) -> FrequentItemsets:
    """All itemsets with support >= min_support, level-wise.

    Raises :class:`ItemsetCapExceeded` if a frequent itemset larger than
    ``max_size`` exists.
    """
    if not 0 < min_support <= 1:
        raise ValueError(f"min_support must be in (0, 1], got {min_support}")
    if not transactions:
        raise NoTransactions("cannot mine an empty transaction set")

    n = len(transactions)
    need = min_count_for_support(min_support, n)
    tx_sets = [t.items for t in transactions]

    counts: Dict[FrozenSet[str], int] = {}
    singles: Counter = Counter()
    for tx in tx_sets:
        singles.update(tx)
    level = sorted((item,) for item, c in singles.items() if c >= need)
    for item_tuple in level:
        counts[frozenset(item_tuple)] = singles[item_tuple[0]]

    size = 1
    while level:
        size += 1
        candidates = _join_candidates(level, size)
        if not candidates:
            break
        level_counts = _count_candidates(tx_sets, candidates, size)
        level = sorted(cand for cand, c in level_counts.items() if c >= need)
        if level and size > max_size:
            raise ItemsetCapExceeded(
                f"{len(level)} frequent itemsets of size {size} exceed the "
                f"cap of {max_size}; raise max_size or min_support")
        for cand in level:
            counts[frozenset(cand)] = level_counts[cand]

    itemsets = [ItemSet(items=tuple(sorted(key)), support_count=c, support=c / n)
                for key, c in counts.items()]
    itemsets.sort(key=lambda s: (len(s.items), s.items))
    return FrequentItemsets(itemsets=itemsets, counts=counts, n_transactions=n)


def generate_rules(frequent: FrequentItemsets, min_confidence: float,
                   single_consequent: bool = False) -> List[AssociationRule]:
    """Every rule A => C with A u C frequent and confidence >= threshold.

    Confidence is union_count / antecedent_count; the comparison against
    the threshold uses the integer counts directly.
    """
    if not 0 <= min_confidence <= 1:
        raise ValueError(f"min_confidence must be in [0, 1], got {min_confidence}")
    rules = []
    n = frequent.n_transactions
    for itemset in frequent.itemsets:
        if len(itemset.items) < 2:
            continue
        union_count = itemset.support_count
        items = itemset.items
        for ant_size in range(1, len(items)):
            if single_consequent and len(items) - ant_size != 1:
                continue
            for antecedent in combinations(items, ant_size):
                ant_count = frequent.counts[frozenset(antecedent)]
                if not meets_confidence(union_count, ant_count, min_confidence):
                    continue
                consequent = tuple(sorted(set(items) - set(antecedent)))
                rules.append(AssociationRule(
                    antecedent=antecedent, consequent=consequent,
                    support=union_count / n,
                    confidence=union_count / ant_count))
    rules.sort(key=lambda r: (r.antecedent, r.consequent))
    return rules


def render_rules(rules: Iterable[AssociationRule]) -> str:
    """TSV: ``antecedent(comma-sep)<TAB>consequent<TAB>support<TAB>confidence``."""
    return "".join(
        f"{','.join(r.antecedent)}\t{','.join(r.consequent)}"
        f"\t{r.support!r}\t{r.confidence!r}\n"
        for r in rules
    )


def parse_rules(text: str) -> List[AssociationRule]:
    rules = []
    for line in text.splitlines():
        if not line.strip():
            continue
        ant, cons, support, confidence = line.split("\t")
        rules.append(AssociationRule(
            antecedent=tuple(ant.split(",")),
            consequent=tuple(cons.split(",")),
            support=float(support),
            confidence=float(confidence)))
    return rules
