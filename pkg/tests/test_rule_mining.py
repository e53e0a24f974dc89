import random
from collections import Counter
from datetime import datetime, timezone
from fractions import Fraction
from itertools import combinations

import pytest

from hyperlens.rule_mining import (ItemsetCapExceeded, NoTransactions,
                                   Transaction, build_transactions,
                                   generate_rules, min_count_for_support,
                                   mine_frequent_itemsets, parse_rules,
                                   render_rules)
from hyperlens.session_builder import ResourceRef, Session, UserKey


def tx(*item_groups):
    return [Transaction(tid=f"t{i}", items=frozenset(items))
            for i, items in enumerate(item_groups)]


# ---------------------------------------------------------------------------
# Independent oracle: full enumeration over every itemset and rule split.


def oracle_frequent(transactions, min_support):
    """Counts of all itemsets meeting min_support, by exhaustive
    per-transaction subset enumeration and exact fraction comparison."""
    n = len(transactions)
    counter = Counter()
    for t in transactions:
        items = sorted(t.items)
        for r in range(1, len(items) + 1):
            for combo in combinations(items, r):
                counter[combo] += 1
    threshold = Fraction(str(min_support))
    return {combo: count for combo, count in counter.items()
            if Fraction(count, n) >= threshold}


def oracle_rules(freq_counts, min_confidence):
    """All A => C splits, exact-fraction confidence filter."""
    threshold = Fraction(str(min_confidence))
    rules = set()
    for itemset, union_count in freq_counts.items():
        if len(itemset) < 2:
            continue
        for r in range(1, len(itemset)):
            for antecedent in combinations(itemset, r):
                ant_count = freq_counts[antecedent]
                if Fraction(union_count, ant_count) >= threshold:
                    consequent = tuple(sorted(set(itemset) - set(antecedent)))
                    rules.add((antecedent, consequent))
    return rules


# ---------------------------------------------------------------------------


FIVE_TX = tx("ABC", "AB", "AC", "BC", "ABC")


def test_worked_example_counts():
    frequent = mine_frequent_itemsets(FIVE_TX, min_support=0.4)
    counts = {s.items: s.support_count for s in frequent.itemsets}
    assert counts == {
        ("A",): 4, ("B",): 4, ("C",): 4,
        ("A", "B"): 3, ("A", "C"): 3, ("B", "C"): 3,
        ("A", "B", "C"): 2,
    }
    for s in frequent.itemsets:
        assert s.support == s.support_count / 5


def test_worked_example_rules_at_080():
    frequent = mine_frequent_itemsets(FIVE_TX, min_support=0.4)
    rules = generate_rules(frequent, min_confidence=0.8)
    # conf(AB => C) = 2/3 and conf(A => B) = 3/4 both fall short, as does
    # every other split here; the oracle agrees the rule list is empty.
    got = {(r.antecedent, r.consequent) for r in rules}
    assert got == oracle_rules(oracle_frequent(FIVE_TX, 0.4), 0.8)
    assert got == set()


def test_full_support_itemset_rule_confidence_one():
    transactions = tx("XY", "XY", "XYZ")
    frequent = mine_frequent_itemsets(transactions, min_support=1.0)
    rules = generate_rules(frequent, min_confidence=1.0)
    pairs = {(r.antecedent, r.consequent): r.confidence for r in rules}
    assert pairs[(("X",), ("Y",))] == 1.0
    assert pairs[(("Y",), ("X",))] == 1.0


def test_min_support_one_boundary():
    transactions = tx("AB", "CD")
    frequent = mine_frequent_itemsets(transactions, min_support=1.0)
    assert frequent.itemsets == []


def test_min_confidence_zero_keeps_every_split():
    frequent = mine_frequent_itemsets(FIVE_TX, min_support=0.4)
    rules = generate_rules(frequent, min_confidence=0.0)
    expected = sum(2 ** len(s.items) - 2 for s in frequent.itemsets
                   if len(s.items) >= 2)
    assert len(rules) == expected


def test_threshold_integer_arithmetic():
    # 0.4 * 5 must mean exactly 2, despite float representation.
    assert min_count_for_support(0.4, 5) == 2
    assert min_count_for_support(0.5, 4) == 2
    assert min_count_for_support(0.5, 5) == 3
    assert min_count_for_support(0.01, 99) == 1
    assert min_count_for_support(0.01, 101) == 2


def test_anti_monotonicity():
    rng = random.Random(5)
    transactions = tx(*["".join(rng.sample("ABCDEFGH", rng.randint(1, 6)))
                        for _ in range(30)])
    frequent = mine_frequent_itemsets(transactions, min_support=0.1,
                                      max_size=8)
    counts = {s.items: s.support_count for s in frequent.itemsets}
    for items, count in counts.items():
        for r in range(1, len(items)):
            for sub in combinations(items, r):
                assert sub in counts
                assert counts[sub] >= count


def test_rule_count_identity():
    frequent = mine_frequent_itemsets(FIVE_TX, min_support=0.2)
    rules = generate_rules(frequent, min_confidence=0.0)
    for rule in rules:
        union = frozenset(rule.antecedent) | frozenset(rule.consequent)
        union_count = frequent.counts[union]
        ant_count = frequent.counts[frozenset(rule.antecedent)]
        # confidence * count(antecedent) = count(union), exactly in integers
        assert rule.confidence == union_count / ant_count
        assert round(rule.confidence * ant_count) == union_count


def test_random_instance_matches_oracle():
    rng = random.Random(17)
    items = "ABCDEFGHIJKL"  # 12 items
    transactions = tx(*["".join(rng.sample(items, rng.randint(1, 7)))
                        for _ in range(40)])
    min_support, min_confidence = 0.1, 0.6
    frequent = mine_frequent_itemsets(transactions, min_support, max_size=12)
    got = {s.items: s.support_count for s in frequent.itemsets}
    assert got == oracle_frequent(transactions, min_support)
    got_rules = {(r.antecedent, r.consequent)
                 for r in generate_rules(frequent, min_confidence)}
    assert got_rules == oracle_rules(got, min_confidence)


def test_single_consequent_mode():
    frequent = mine_frequent_itemsets(FIVE_TX, min_support=0.2)
    rules = generate_rules(frequent, min_confidence=0.0,
                           single_consequent=True)
    assert all(len(r.consequent) == 1 for r in rules)


def test_no_transactions():
    with pytest.raises(NoTransactions):
        mine_frequent_itemsets([], min_support=0.5)


def test_itemset_cap_exceeded():
    transactions = tx(*(["ABCDEFG"] * 4))
    with pytest.raises(ItemsetCapExceeded):
        mine_frequent_itemsets(transactions, min_support=1.0, max_size=6)
    # A larger cap mines the same instance fine.
    frequent = mine_frequent_itemsets(transactions, min_support=1.0, max_size=7)
    assert max(len(s.items) for s in frequent.itemsets) == 7


# ---------------------------------------------------------------------------
# Transactions from sessions


def _session(sid, user, docs):
    ts = datetime(2014, 6, 1, tzinfo=timezone.utc)
    return Session(session_id=sid, user=UserKey("10.0.0.1", user),
                   start=ts, end=ts,
                   resources=[ResourceRef(vendor="v", doc_id=d) for d in docs])


def test_build_transactions_dedup():
    transactions, dropped = build_transactions([_session("s1", "u", ["A", "B", "A"])])
    assert transactions[0].items == frozenset({"A", "B"})
    assert dropped == 0


def test_build_transactions_drops_empty():
    transactions, dropped = build_transactions([
        _session("s1", "u", ["A"]),
        _session("s2", "u", []),
    ])
    assert len(transactions) == 1
    assert dropped == 1


def test_build_transactions_restriction():
    transactions, dropped = build_transactions(
        [_session("s1", "u", ["A", "B"]), _session("s2", "u", ["B"])],
        restrict_to={"A"})
    assert len(transactions) == 1
    assert transactions[0].items == frozenset({"A"})
    assert dropped == 1


def test_build_transactions_per_user():
    transactions, _ = build_transactions(
        [_session("s1", "u", ["A"]), _session("s2", "u", ["B"])],
        per_user=True)
    assert len(transactions) == 1
    assert transactions[0].items == frozenset({"A", "B"})


def test_planted_session_transaction_count():
    sessions = [_session(f"s{i}", f"u{i % 9}", ["A", "B"]) for i in range(500)]
    sessions += [_session(f"e{i}", "u0", []) for i in range(25)]
    transactions, dropped = build_transactions(sessions)
    assert len(transactions) == 500
    assert dropped == 25


def test_render_parse_rules_round_trip():
    frequent = mine_frequent_itemsets(FIVE_TX, min_support=0.2)
    rules = generate_rules(frequent, min_confidence=0.5)
    text = render_rules(rules)
    again = parse_rules(text)
    assert [(r.antecedent, r.consequent, r.support, r.confidence)
            for r in again] == \
        [(r.antecedent, r.consequent, r.support, r.confidence) for r in rules]
