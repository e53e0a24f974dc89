import random
from itertools import product

import pytest

from hyperlens.errors import KTooLarge
from hyperlens.hypergraph_partition import (Hypergraph, InfeasibleBalance,
                                            NoRules, Partition,
                                            build_hypergraph, coarsen,
                                            cut_report, fm_refine,
                                            initial_bisection,
                                            isolated_vertex_placement,
                                            parse_hypergraph, parse_partition,
                                            partition_k, render_hypergraph,
                                            render_partition,
                                            render_vertex_names,
                                            to_doc_assignment)
from hyperlens.rule_mining import AssociationRule


def rule(ant, cons, confidence, support=0.1):
    return AssociationRule(antecedent=tuple(sorted(ant)),
                           consequent=tuple(sorted(cons)),
                           support=support, confidence=confidence)


def hg_from_edges(n, edges):
    """Vertices v0..v(n-1); edges as (iterable of indices, weight)."""
    return Hypergraph(vertices=[f"v{i}" for i in range(n)],
                      edges=[(tuple(sorted(set(pins))), w) for pins, w in edges])


# Exhaustive oracle over all balanced bisections (small n only).
def exhaustive_min_cut(hg: Hypergraph, epsilon: float) -> float:
    n = hg.n_vertices
    bound = (1.0 + epsilon) * hg.total_weight() / 2
    best = None
    for bits in product((0, 1), repeat=n - 1):
        assignment = (0,) + bits  # fix vertex 0 to side 0; halves the space
        weights = [0.0, 0.0]
        for v, part in enumerate(assignment):
            weights[part] += hg.vertex_weights[v]
        if min(weights) == 0 or max(weights) > bound + 1e-9:
            continue
        cut = 0.0
        for pins, weight in hg.edges:
            first = assignment[pins[0]]
            if any(assignment[v] != first for v in pins[1:]):
                cut += weight
        if best is None or cut < best:
            best = cut
    assert best is not None, "no balanced bisection exists"
    return best


SIX_VERTEX = hg_from_edges(6, [((0, 1, 2), 1.0), ((3, 4, 5), 1.0), ((2, 3), 1.0)])


# ---------------------------------------------------------------------------
# build_hypergraph


def test_build_hypergraph_merges_rule_variants():
    rules = [rule("AB", "C", 0.9), rule("AC", "B", 0.8)]
    hg = build_hypergraph(rules)
    assert hg.vertices == ["A", "B", "C"]
    assert len(hg.edges) == 1
    pins, weight = hg.edges[0]
    assert pins == (0, 1, 2)
    assert weight == pytest.approx(0.85)


def test_build_hypergraph_single_rule():
    hg = build_hypergraph([rule("A", "B", 1.0)])
    assert hg.edges == [((0, 1), 1.0)]


def test_build_hypergraph_random_recount():
    rng = random.Random(3)
    docs = [f"D{i}" for i in range(15)]
    rules = []
    for _ in range(30):
        items = rng.sample(docs, rng.randint(2, 4))
        cut_at = rng.randint(1, len(items) - 1)
        rules.append(rule(items[:cut_at], items[cut_at:], rng.uniform(0.2, 1.0)))
    hg = build_hypergraph(rules)
    expected_vertices = sorted({d for r in rules
                                for d in r.antecedent + r.consequent})
    assert hg.vertices == expected_vertices
    expected_sets = {frozenset(r.antecedent + r.consequent) for r in rules}
    assert len(hg.edges) == len(expected_sets)


def test_build_hypergraph_weight_modes():
    rules = [rule("A", "B", 0.5), rule("B", "A", 0.7)]
    assert build_hypergraph(rules, "mean").edges[0][1] == pytest.approx(0.6)
    assert build_hypergraph(rules, "sum").edges[0][1] == pytest.approx(1.2)
    assert build_hypergraph(rules, "count").edges[0][1] == 2.0


def test_build_hypergraph_no_rules():
    with pytest.raises(NoRules):
        build_hypergraph([])


# ---------------------------------------------------------------------------
# coarsen


def test_coarsen_heaviest_pair_first():
    # 1 is shared: the weight-5 edge wins the matching, the weight-1 loses.
    hg = hg_from_edges(3, [((0, 1), 5.0), ((1, 2), 1.0)])
    levels = coarsen(hg, target_vertices=2)
    assert len(levels) == 1
    _, vmap = levels[0]
    assert vmap[0] == vmap[1]
    assert vmap[2] != vmap[0]


def test_coarsen_identity_when_small():
    assert coarsen(SIX_VERTEX, target_vertices=6) == []


def test_coarsen_merges_weights_and_edges():
    hg = hg_from_edges(4, [((0, 1), 2.0), ((2, 3), 2.0), ((0, 2), 1.0),
                           ((1, 3), 1.0)])
    levels = coarsen(hg, target_vertices=2)
    coarse, vmap = levels[-1]
    assert coarse.n_vertices == 2
    # The two cross edges collapse onto the same coarse pair and merge.
    assert len(coarse.edges) == 1
    assert coarse.edges[0][1] == pytest.approx(2.0)
    assert sum(coarse.vertex_weights) == pytest.approx(4.0)


def test_coarsen_respects_planted_communities():
    # Intra edges heavy, one light bridge: no cross-community merge.
    edges = []
    for base in (0, 4):
        for i in range(base, base + 4):
            for j in range(i + 1, base + 4):
                edges.append(((i, j), 5.0))
    edges.append(((3, 4), 1.0))
    hg = hg_from_edges(8, edges)
    levels = coarsen(hg, target_vertices=4)
    community = [0] * 4 + [1] * 4
    for _, vmap in levels:
        groups = {}
        for v, coarse_id in enumerate(vmap):
            groups.setdefault(coarse_id, set()).add(community[v])
        assert all(len(g) == 1 for g in groups.values())
        community = [None] * (max(vmap) + 1)
        for v, coarse_id in enumerate(vmap):
            community[coarse_id] = 0 if v < 4 else 1
        break  # first level is enough for the fixture


# ---------------------------------------------------------------------------
# initial_bisection


def test_initial_bisection_two_vertices():
    hg = hg_from_edges(2, [((0, 1), 1.0)])
    p = initial_bisection(hg, epsilon=0.1, seed=0)
    assert sorted(p.assignment) == [0, 1]


def test_initial_bisection_six_vertex_fixture():
    p = initial_bisection(SIX_VERTEX, epsilon=0.1, seed=1)
    report = cut_report(SIX_VERTEX, p)
    assert report.cut == exhaustive_min_cut(SIX_VERTEX, 0.1) == 1.0


def test_initial_bisection_infeasible_heavy_vertex():
    hg = Hypergraph(vertices=["a", "b", "c"],
                    edges=[((0, 1), 1.0), ((0, 2), 1.0)],
                    vertex_weights=[10.0, 1.0, 1.0])
    with pytest.raises(InfeasibleBalance):
        initial_bisection(hg, epsilon=0.1, seed=0)


# ---------------------------------------------------------------------------
# fm_refine


def _random_hypergraph(rng, n, n_edges, max_pin=4):
    edges = []
    seen = set()
    for _ in range(n_edges):
        size = rng.randint(2, min(max_pin, n))
        pins = frozenset(rng.sample(range(n), size))
        if pins in seen:
            continue
        seen.add(pins)
        edges.append((tuple(sorted(pins)), float(rng.randint(1, 10))))
    if not edges:
        edges = [((0, 1), 1.0)]
    return hg_from_edges(n, edges)


def _random_balanced_partition(rng, hg, epsilon):
    n = hg.n_vertices
    bound = (1.0 + epsilon) * n / 2
    while True:
        assignment = [rng.randint(0, 1) for _ in range(n)]
        ones = sum(assignment)
        if 0 < ones < n and ones <= bound and n - ones <= bound:
            return Partition(k=2, assignment=assignment, epsilon=epsilon)


def test_fm_refine_keeps_optimal_fixture():
    p = Partition(k=2, assignment=[0, 0, 0, 1, 1, 1], epsilon=0.1)
    refined = fm_refine(SIX_VERTEX, p)
    assert cut_report(SIX_VERTEX, refined).cut == 1.0


def test_fm_refine_moves_misplaced_vertex():
    edges = [((0, 1), 1.0), ((0, 2), 1.0), ((1, 2), 1.0),
             ((3, 4), 1.0), ((3, 5), 1.0), ((4, 5), 1.0)]
    hg = hg_from_edges(6, edges)
    p = Partition(k=2, assignment=[0, 0, 0, 1, 1, 0], epsilon=0.34)
    before = cut_report(hg, p).cut
    refined = fm_refine(hg, p)
    after = cut_report(hg, refined).cut
    assert before == 2.0
    assert after == 0.0
    assert refined.assignment == [0, 0, 0, 1, 1, 1]


def test_fm_refine_never_increases_cut_property():
    rng = random.Random(99)
    for _ in range(40):
        n = rng.randint(4, 14)
        hg = _random_hypergraph(rng, n, rng.randint(2, 18))
        p = _random_balanced_partition(rng, hg, epsilon=0.4)
        before = cut_report(hg, p).cut
        refined = fm_refine(hg, p, max_passes=6)
        after = cut_report(hg, refined).cut
        assert after <= before + 1e-12
        refined.validate(hg)


def test_fm_refine_three_way():
    # Three triangles, one vertex planted wrong.
    edges = []
    for base in (0, 3, 6):
        edges += [((base, base + 1), 1.0), ((base, base + 2), 1.0),
                  ((base + 1, base + 2), 1.0)]
    hg = hg_from_edges(9, edges)
    assignment = [0, 0, 0, 1, 1, 1, 2, 2, 0]
    p = Partition(k=3, assignment=assignment, epsilon=0.5)
    refined = fm_refine(hg, p)
    assert cut_report(hg, refined).cut == 0.0


# ---------------------------------------------------------------------------
# partition_k


def test_partition_k_six_vertex_fixture():
    partition, report = partition_k(SIX_VERTEX, k=2, epsilon=0.1, seed=7)
    assert report.cut == exhaustive_min_cut(SIX_VERTEX, 0.1) == 1.0
    docs = to_doc_assignment(SIX_VERTEX, partition)
    side_of = {doc: part for doc, part in docs.items()}
    assert side_of["v0"] == side_of["v1"] == side_of["v2"]
    assert side_of["v3"] == side_of["v4"] == side_of["v5"]
    assert side_of["v0"] != side_of["v3"]


def test_partition_k_singletons():
    partition, report = partition_k(SIX_VERTEX, k=6, epsilon=0.1, seed=0)
    assert sorted(partition.assignment) == list(range(6))
    assert report.cut == pytest.approx(3.0)  # every edge is cut


def test_partition_k_too_large():
    with pytest.raises(KTooLarge):
        partition_k(SIX_VERTEX, k=7, epsilon=0.1, seed=0)


def test_partition_k_balance_bound_random():
    rng = random.Random(12)
    for _ in range(15):
        n = rng.randint(6, 18)
        hg = _random_hypergraph(rng, n, rng.randint(4, 24))
        k = rng.choice([2, 3, 4])
        partition, report = partition_k(hg, k=k, epsilon=0.2, seed=rng.randint(0, 999))
        partition.validate(hg)
        bound = (1.0 + 0.2) * hg.total_weight() / k
        for weight in partition.part_weights(hg):
            assert 0 < weight <= bound
        assert report.cut <= report.connectivity + 1e-12


def test_partition_k_deterministic():
    rng = random.Random(4)
    hg = _random_hypergraph(rng, 20, 30)
    first, _ = partition_k(hg, k=4, epsilon=0.15, seed=123)
    second, _ = partition_k(hg, k=4, epsilon=0.15, seed=123)
    assert first.assignment == second.assignment


def test_partition_k_bisection_quality_floor():
    rng = random.Random(2024)
    for trial in range(50):
        n = rng.randint(5, 12)
        hg = _random_hypergraph(rng, n, rng.randint(3, 16))
        _, report = partition_k(hg, k=2, epsilon=0.3, seed=trial)
        optimum = exhaustive_min_cut(hg, 0.3)
        assert report.cut <= 1.25 * optimum + 1e-9


def test_partition_k_planted_communities():
    rng = random.Random(5)
    n_comm, size = 17, 9
    edges = []
    for c in range(n_comm):
        base = c * size
        members = list(range(base, base + size))
        for i in members:
            for j in members:
                if i < j and rng.random() < 0.5:
                    edges.append(((i, j), 1.0))
        edges.append((tuple(members[:3]), 1.0))  # one hyperedge per community
    for _ in range(30):
        u, v = rng.sample(range(n_comm * size), 2)
        if u // size != v // size:
            edges.append((tuple(sorted((u, v))), 0.1))
    hg = hg_from_edges(n_comm * size, edges)
    partition, _ = partition_k(hg, k=n_comm, epsilon=0.1, seed=42)

    total_majority = 0
    for c in range(n_comm):
        members = range(c * size, (c + 1) * size)
        parts = [partition.assignment[v] for v in members]
        majority = max(set(parts), key=parts.count)
        total_majority += sum(1 for p in parts if p == majority)
    assert total_majority / (n_comm * size) >= 0.9


# ---------------------------------------------------------------------------
# isolated vertex placement


def test_isolated_placement_identity():
    assignment = {"a": 0, "b": 1}
    assert isolated_vertex_placement(["a", "b"], assignment, k=2) == assignment


def test_isolated_placement_lightest_first():
    assignment = {}
    for i in range(4):
        assignment[f"p0_{i}"] = 0
        assignment[f"p1_{i}"] = 1
    for i in range(9):
        assignment[f"p2_{i}"] = 2
    docs = set(assignment) | {"x1", "x2", "x3"}
    placed = isolated_vertex_placement(docs, assignment, k=3)
    sizes = [sum(1 for p in placed.values() if p == part) for part in range(3)]
    # 4,4,9 plus three docs: two land on the tied-lightest part 0 (first and
    # third insert), one on part 1.
    assert sizes == [6, 5, 9]
    assert placed["x1"] == 0 and placed["x2"] == 1 and placed["x3"] == 0


def test_isolated_placement_total_assignment():
    rng = random.Random(8)
    assignment = {f"d{i}": rng.randint(0, 4) for i in range(30)}
    docs = {f"d{i}" for i in range(50)}
    placed = isolated_vertex_placement(docs, assignment, k=5)
    assert set(placed) == docs
    for doc, part in assignment.items():
        assert placed[doc] == part


# ---------------------------------------------------------------------------
# file formats


def test_hypergraph_file_round_trip():
    text = render_hypergraph(SIX_VERTEX)
    header = text.splitlines()[0].split()
    assert header == ["3", "6", "W"]
    names = render_vertex_names(SIX_VERTEX).splitlines()
    again = parse_hypergraph(text, names)
    assert again.vertices == SIX_VERTEX.vertices
    assert again.edges == SIX_VERTEX.edges


def test_unweighted_hypergraph_parse():
    hg = parse_hypergraph("2 3\n1 2\n2 3\n")
    assert hg.edges == [((0, 1), 1.0), ((1, 2), 1.0)]


def test_partition_file_round_trip():
    partition, _ = partition_k(SIX_VERTEX, k=2, epsilon=0.1, seed=7)
    text = render_partition(partition)
    again = parse_partition(text, k=2, epsilon=0.1)
    assert again.assignment == partition.assignment
