"""Association-rule hypergraph construction and balanced k-way partitioning.

The partitioner is a self-contained multilevel scheme: coarsen by
heavy-connectivity matching, bisect the coarse hypergraph by greedy region
growth with restarts, then uncoarsen with a move-once best-prefix
refinement pass (Fiduccia-Mattheyses style) at every level. k-way splits
are produced by recursive bisection with proportional side targets, so the
final parts honor weight(p) <= (1 + epsilon) * total / k.

All cut accounting is integer-exact: edge weights are scaled by 1000 and
rounded on entry, and every gain, cut and comparison happens on those
integers. Reported cut values convert back to weight units.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import HyperlensError, KTooLarge
from .rule_mining import AssociationRule

logger = logging.getLogger(__name__)

WEIGHT_SCALE = 1000
COARSEN_TARGET = 60        # stop coarsening at max(2k, 60) vertices
COARSEN_MIN_SHRINK = 0.05  # stop when a level shrinks less than this
DEFAULT_RESTARTS = 8
DEFAULT_MAX_PASSES = 10


class NoRules(HyperlensError):
    category = "hypergraph"


class InfeasibleBalance(HyperlensError):
    category = "hypergraph"


@dataclass
class Hypergraph:
    """Weighted hyperedges over an indexed vertex set.

    Edges hold sorted vertex-index tuples; duplicate vertex sets are merged
    at construction time. Vertex weights default to 1.
    """

    vertices: List[str]
    edges: List[Tuple[Tuple[int, ...], float]]
    vertex_weights: List[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.vertex_weights:
            self.vertex_weights = [1.0] * len(self.vertices)
        for pins, weight in self.edges:
            if len(set(pins)) < 2:
                raise ValueError(f"hyperedge {pins} needs >= 2 distinct vertices")
            if weight <= 0:
                raise ValueError(f"hyperedge {pins} weight must be positive")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def total_weight(self) -> float:
        return sum(self.vertex_weights)


@dataclass
class Partition:
    k: int
    assignment: List[int]  # vertex index -> part in [0, k)
    epsilon: float

    def part_weights(self, hg: Hypergraph) -> List[float]:
        weights = [0.0] * self.k
        for v, part in enumerate(self.assignment):
            weights[part] += hg.vertex_weights[v]
        return weights

    def validate(self, hg: Hypergraph) -> None:
        bound = (1.0 + self.epsilon) * hg.total_weight() / self.k
        weights = self.part_weights(hg)
        for part, weight in enumerate(weights):
            if weight == 0:
                raise InfeasibleBalance(f"part {part} is empty")
            if weight > bound + 1e-9:
                raise InfeasibleBalance(
                    f"part {part} weight {weight} exceeds bound {bound}")


@dataclass
class CutReport:
    cut: float
    connectivity: float
    per_part_sizes: List[float]


def build_hypergraph(rules: Sequence[AssociationRule],
                     weight_mode: str = "mean") -> Hypergraph:
    """One hyperedge per distinct antecedent-union-consequent vertex set.

    ``weight_mode`` picks how the confidences of rules sharing a vertex set
    combine: their mean (default), sum, or plain rule count.
    """
    if not rules:
        raise NoRules("no association rules to build a hypergraph from")
    if weight_mode not in ("mean", "sum", "count"):
        raise ValueError(f"unknown weight_mode {weight_mode!r}")

    confidences: Dict[frozenset, List[float]] = {}
    for rule in rules:
        key = frozenset(rule.antecedent) | frozenset(rule.consequent)
        confidences.setdefault(key, []).append(rule.confidence)

    vertices = sorted({doc for key in confidences for doc in key})
    index = {doc: i for i, doc in enumerate(vertices)}
    edges = []
    for key in sorted(confidences, key=lambda s: tuple(sorted(s))):
        values = confidences[key]
        if weight_mode == "mean":
            weight = sum(values) / len(values)
        elif weight_mode == "sum":
            weight = sum(values)
        else:
            weight = float(len(values))
        pins = tuple(sorted(index[doc] for doc in key))
        edges.append((pins, weight))
    return Hypergraph(vertices=vertices, edges=edges)


# ---------------------------------------------------------------------------
# Internal integer-weight representation


def _quantize(weight: float) -> int:
    return max(1, round(weight * WEIGHT_SCALE))


class _IntGraph:
    """Partitioning workhorse: integer edge weights, incidence lists, and a
    per-vertex fine-vertex multiplicity used for count constraints."""

    __slots__ = ("n", "edges", "wv", "sizes", "incident")

    def __init__(self, n: int, edges: List[Tuple[Tuple[int, ...], int]],
                 wv: List[float], sizes: List[int]):
        self.n = n
        self.edges = edges
        self.wv = wv
        self.sizes = sizes
        self.incident: List[List[int]] = [[] for _ in range(n)]
        for ei, (pins, _) in enumerate(edges):
            for v in pins:
                self.incident[v].append(ei)

    @classmethod
    def from_hypergraph(cls, hg: Hypergraph) -> "_IntGraph":
        edges = [(pins, _quantize(w)) for pins, w in hg.edges]
        return cls(hg.n_vertices, edges, list(hg.vertex_weights),
                   [1] * hg.n_vertices)

    def total_weight(self) -> float:
        return sum(self.wv)

    def total_size(self) -> int:
        return sum(self.sizes)


def _merge_edges(raw: Iterable[Tuple[Tuple[int, ...], int]]) -> List[Tuple[Tuple[int, ...], int]]:
    merged: Dict[Tuple[int, ...], int] = {}
    for pins, weight in raw:
        merged[pins] = merged.get(pins, 0) + weight
    return [(pins, merged[pins]) for pins in sorted(merged)]


def _induced(graph: _IntGraph, indices: List[int]) -> _IntGraph:
    """Sub-hypergraph on ``indices``; edge pins outside are dropped and
    edges left with fewer than 2 pins disappear."""
    local = {v: i for i, v in enumerate(indices)}
    raw = []
    for pins, weight in graph.edges:
        kept = tuple(sorted(local[v] for v in pins if v in local))
        if len(kept) >= 2:
            raw.append((kept, weight))
    return _IntGraph(len(indices), _merge_edges(raw),
                     [graph.wv[v] for v in indices],
                     [graph.sizes[v] for v in indices])


def _cut_value(graph: _IntGraph, parts: List[int]) -> int:
    cut = 0
    for pins, weight in graph.edges:
        first = parts[pins[0]]
        if any(parts[v] != first for v in pins[1:]):
            cut += weight
    return cut


def _connectivity_value(graph: _IntGraph, parts: List[int]) -> int:
    total = 0
    for pins, weight in graph.edges:
        spanned = len({parts[v] for v in pins})
        total += weight * (spanned - 1)
    return total


# ---------------------------------------------------------------------------
# Coarsening


def _pair_scores(graph: _IntGraph) -> Dict[Tuple[int, int], float]:
    """Heavy-connectivity rating: each hyperedge contributes w / (|e| - 1)
    to every vertex pair it joins."""
    scores: Dict[Tuple[int, int], float] = {}
    for pins, weight in graph.edges:
        share = weight / (len(pins) - 1)
        for i, u in enumerate(pins):
            for v in pins[i + 1:]:
                key = (u, v)
                scores[key] = scores.get(key, 0.0) + share
    return scores


def _coarsen_once(graph: _IntGraph, max_merged_weight: float) -> Optional[Tuple[_IntGraph, List[int]]]:
    scores = _pair_scores(graph)
    if not scores:
        return None
    matched = [False] * graph.n
    pairs = []
    # Heaviest connectivity first; ties resolve to the lowest vertex pair.
    for (u, v), _score in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])):
        if matched[u] or matched[v]:
            continue
        if graph.wv[u] + graph.wv[v] > max_merged_weight:
            continue
        matched[u] = matched[v] = True
        pairs.append((u, v))
    if not pairs:
        return None

    vmap = [-1] * graph.n
    partner = {}
    for u, v in pairs:
        partner[u] = v
        partner[v] = u
    next_id = 0
    for v in range(graph.n):
        if vmap[v] != -1:
            continue
        vmap[v] = next_id
        mate = partner.get(v)
        if mate is not None and vmap[mate] == -1:
            vmap[mate] = next_id
        next_id += 1

    wv = [0.0] * next_id
    sizes = [0] * next_id
    for v in range(graph.n):
        wv[vmap[v]] += graph.wv[v]
        sizes[vmap[v]] += graph.sizes[v]
    raw = []
    for pins, weight in graph.edges:
        mapped = tuple(sorted({vmap[v] for v in pins}))
        if len(mapped) >= 2:
            raw.append((mapped, weight))
    return _IntGraph(next_id, _merge_edges(raw), wv, sizes), vmap


def _coarsen(graph: _IntGraph, target: int) -> List[Tuple[_IntGraph, List[int]]]:
    """Hierarchy of (coarser graph, fine-to-coarse map) pairs; empty when
    the graph is already small enough."""
    levels = []
    current = graph
    max_merged = 4.0 * current.total_weight() / max(target, 2)
    while current.n > target:
        result = _coarsen_once(current, max_merged)
        if result is None:
            break
        coarser, vmap = result
        if coarser.n > current.n * (1 - COARSEN_MIN_SHRINK):
            break
        levels.append((coarser, vmap))
        current = coarser
    return levels


# ---------------------------------------------------------------------------
# Initial bisection by greedy region growth


def _grow_once(graph: _IntGraph, caps: Tuple[float, float],
               min_sizes: Tuple[int, int], target0: float,
               start: int) -> Optional[List[int]]:
    total_w = graph.total_weight()
    total_size = graph.total_size()
    required0 = total_w - caps[1]  # side 1 must not be left overweight
    in0 = [False] * graph.n
    score = [0] * graph.n
    frontier = set()

    w0 = 0.0
    size0 = 0

    def add(v: int) -> None:
        nonlocal w0, size0
        in0[v] = True
        w0 += graph.wv[v]
        size0 += graph.sizes[v]
        frontier.discard(v)
        for ei in graph.incident[v]:
            pins, weight = graph.edges[ei]
            for u in pins:
                if not in0[u]:
                    score[u] += weight
                    frontier.add(u)

    if graph.wv[start] > caps[0]:
        return None
    add(start)

    while w0 < target0 and w0 < caps[0]:
        if size0 > total_size - min_sizes[1]:
            break
        best = -1
        # Highest absorbed connectivity first, lowest index on ties; fall
        # back to any unassigned vertex when the frontier is empty
        # (disconnected graphs).
        candidates = sorted(frontier, key=lambda u: (-score[u], u))
        if not candidates:
            candidates = [u for u in range(graph.n) if not in0[u]]
        for u in candidates:
            if w0 + graph.wv[u] <= caps[0] and \
                    size0 + graph.sizes[u] <= total_size - min_sizes[1]:
                best = u
                break
        if best == -1:
            break
        add(best)

    w1 = total_w - w0
    size1 = total_size - size0
    if w0 < required0 - 1e-9 or w0 > caps[0] + 1e-9 or w1 > caps[1] + 1e-9:
        return None
    if size0 < min_sizes[0] or size1 < min_sizes[1]:
        return None
    return [0 if in0[v] else 1 for v in range(graph.n)]


def _grow_bisection(graph: _IntGraph, caps: Tuple[float, float],
                    min_sizes: Tuple[int, int], target0: float,
                    seed: int, restarts: int) -> List[int]:
    if max(graph.wv) > max(caps):
        raise InfeasibleBalance(
            f"vertex weight {max(graph.wv)} exceeds both side capacities {caps}")
    if graph.total_weight() > caps[0] + caps[1] + 1e-9:
        raise InfeasibleBalance(
            f"total weight {graph.total_weight()} exceeds capacity {caps}")
    rng = random.Random(seed)
    best: Optional[List[int]] = None
    best_cut = None
    for _ in range(max(1, restarts)):
        start = rng.randrange(graph.n)
        parts = _grow_once(graph, caps, min_sizes, target0, start)
        if parts is None:
            continue
        cut = _cut_value(graph, parts)
        if best_cut is None or cut < best_cut:
            best, best_cut = parts, cut
    if best is None:
        # Deterministic sweep over all start vertices as a last resort.
        for start in range(graph.n):
            parts = _grow_once(graph, caps, min_sizes, target0, start)
            if parts is None:
                continue
            cut = _cut_value(graph, parts)
            if best_cut is None or cut < best_cut:
                best, best_cut = parts, cut
    if best is None:
        raise InfeasibleBalance("no balanced bisection found by region growth")
    return best


# ---------------------------------------------------------------------------
# FM-style refinement (move-once passes with best-prefix rollback)


class _Refiner:
    """One refinement run over a fixed k-way assignment.

    Keeps per-edge pin counts per part; a vertex's move gain is
    sum(w_e for edges whose other pins all sit in the target part)
    minus sum(w_e for edges entirely inside its own part).
    """

    def __init__(self, graph: _IntGraph, parts: List[int], k: int,
                 caps: Sequence[float], min_sizes: Sequence[int]):
        self.g = graph
        self.parts = parts
        self.k = k
        self.caps = list(caps)
        self.min_sizes = list(min_sizes)
        self.pin_counts = [self._count_pins(pins) for pins, _ in graph.edges]
        self.part_weight = [0.0] * k
        self.part_size = [0] * k
        for v, part in enumerate(parts):
            self.part_weight[part] += graph.wv[v]
            self.part_size[part] += graph.sizes[v]
        self.cut = _cut_value(graph, parts)

    def _count_pins(self, pins) -> Dict[int, int]:
        counts: Dict[int, int] = {}
        for v in pins:
            part = self.parts[v]
            counts[part] = counts.get(part, 0) + 1
        return counts

    def best_move(self, v: int) -> Optional[Tuple[int, int]]:
        """(gain, target part) for the best move of v, or None if v has no
        adjacent part to move to."""
        own = self.parts[v]
        internal = 0
        pull: Dict[int, int] = {}
        for ei in self.g.incident[v]:
            pins, weight = self.g.edges[ei]
            counts = self.pin_counts[ei]
            if counts.get(own, 0) == len(pins):
                internal += weight
            for part, count in counts.items():
                if part == own:
                    continue
                pull.setdefault(part, 0)
                # count == |e|-1 forces v to be the sole remaining pin, so
                # moving v to `part` makes the edge internal there.
                if count == len(pins) - 1:
                    pull[part] += weight
        if not pull:
            return None
        # Highest gain, lowest part id on ties.
        target = min(pull, key=lambda part: (-pull[part], part))
        return pull[target] - internal, target

    def feasible(self, v: int, target: int) -> bool:
        own = self.parts[v]
        if self.part_weight[target] + self.g.wv[v] > self.caps[target] + 1e-9:
            return False
        if self.part_size[own] - self.g.sizes[v] < self.min_sizes[own]:
            return False
        return True

    def apply(self, v: int, target: int) -> int:
        """Move v, returning the exact cut delta (negative is better)."""
        own = self.parts[v]
        delta = 0
        for ei in self.g.incident[v]:
            pins, weight = self.g.edges[ei]
            counts = self.pin_counts[ei]
            before_cut = len(counts) >= 2
            counts[own] -= 1
            if counts[own] == 0:
                del counts[own]
            counts[target] = counts.get(target, 0) + 1
            after_cut = len(counts) >= 2
            delta += weight * (int(after_cut) - int(before_cut))
        self.parts[v] = target
        self.part_weight[own] -= self.g.wv[v]
        self.part_weight[target] += self.g.wv[v]
        self.part_size[own] -= self.g.sizes[v]
        self.part_size[target] += self.g.sizes[v]
        self.cut += delta
        return delta


def _fm_pass(refiner: _Refiner) -> int:
    """One move-once pass; returns the committed (non-negative) gain."""
    g = refiner.g
    locked = [False] * g.n
    gains: Dict[int, Tuple[int, int]] = {}
    buckets: Dict[int, set] = {}

    def enqueue(v: int) -> None:
        move = refiner.best_move(v)
        old = gains.pop(v, None)
        if old is not None:
            bucket = buckets.get(old[0])
            if bucket is not None:
                bucket.discard(v)
                if not bucket:
                    del buckets[old[0]]
        if move is None:
            return
        gains[v] = move
        buckets.setdefault(move[0], set()).add(v)

    for v in range(g.n):
        enqueue(v)

    moves: List[Tuple[int, int, int]] = []  # (vertex, from part, cut delta)
    cum = 0
    best_cum = 0
    best_prefix = 0
    while buckets:
        chosen = None
        for gain in sorted(buckets, reverse=True):
            for v in sorted(buckets[gain]):
                if refiner.feasible(v, gains[v][1]):
                    chosen = v
                    break
            if chosen is not None:
                break
        if chosen is None:
            break
        gain, target = gains[chosen]
        own = refiner.parts[chosen]
        delta = refiner.apply(chosen, target)
        if delta != -gain:
            raise RuntimeError(
                f"gain bookkeeping out of sync: cached {gain}, applied {-delta}")
        locked[chosen] = True
        bucket = buckets[gain]
        bucket.discard(chosen)
        if not bucket:
            del buckets[gain]
        del gains[chosen]
        moves.append((chosen, own, delta))
        cum += gain
        if cum > best_cum:
            best_cum = cum
            best_prefix = len(moves)
        touched = set()
        for ei in g.incident[chosen]:
            touched.update(g.edges[ei][0])
        for u in sorted(touched):
            if not locked[u]:
                enqueue(u)

    # Roll back to the best prefix (possibly everything).
    for v, origin, _delta in reversed(moves[best_prefix:]):
        refiner.apply(v, origin)
    return best_cum


def _refine(graph: _IntGraph, parts: List[int], k: int,
            caps: Sequence[float], min_sizes: Sequence[int],
            max_passes: int) -> List[int]:
    refiner = _Refiner(graph, parts, k, caps, min_sizes)
    for _ in range(max(0, max_passes)):
        before = refiner.cut
        improvement = _fm_pass(refiner)
        recomputed = _cut_value(graph, refiner.parts)
        if recomputed != refiner.cut:
            raise RuntimeError(
                f"incremental cut {refiner.cut} != recomputed {recomputed}")
        if refiner.cut > before:
            raise RuntimeError("refinement pass increased the cut")
        if improvement <= 0:
            break
    return refiner.parts


# ---------------------------------------------------------------------------
# Public operations


def coarsen(hg: Hypergraph, target_vertices: int, seed: int = 0) -> List[Tuple[Hypergraph, List[int]]]:
    """Coarsening hierarchy as (hypergraph, fine-to-coarse vertex map)
    pairs; the list is empty when ``hg`` is already at or below target.

    Matching is heaviest-connectivity-first with lowest-index tie breaks,
    so the result is deterministic; ``seed`` is accepted for interface
    stability.
    """
    del seed
    graph = _IntGraph.from_hypergraph(hg)
    hierarchy = _coarsen(graph, target_vertices)
    result = []
    for level, vmap in hierarchy:
        coarse = Hypergraph(
            vertices=[f"m{i}" for i in range(level.n)],
            edges=[(pins, weight / WEIGHT_SCALE) for pins, weight in level.edges],
            vertex_weights=list(level.wv))
        result.append((coarse, vmap))
    return result


def initial_bisection(hg: Hypergraph, epsilon: float, seed: int,
                      restarts: int = DEFAULT_RESTARTS) -> Partition:
    """Balanced 2-way split by seeded greedy region growth, best of
    ``restarts`` attempts by cut."""
    graph = _IntGraph.from_hypergraph(hg)
    total = graph.total_weight()
    cap = (1.0 + epsilon) * total / 2
    parts = _grow_bisection(graph, (cap, cap), (1, 1), total / 2, seed, restarts)
    return Partition(k=2, assignment=parts, epsilon=epsilon)


def fm_refine(hg: Hypergraph, partition: Partition,
              max_passes: int = DEFAULT_MAX_PASSES) -> Partition:
    """Refine a partition without ever increasing its cut; the balance
    bound of the input partition is preserved."""
    graph = _IntGraph.from_hypergraph(hg)
    bound = (1.0 + partition.epsilon) * graph.total_weight() / partition.k
    parts = _refine(graph, list(partition.assignment), partition.k,
                    [bound] * partition.k, [1] * partition.k, max_passes)
    return Partition(k=partition.k, assignment=parts, epsilon=partition.epsilon)


def cut_report(hg: Hypergraph, partition: Partition) -> CutReport:
    graph = _IntGraph.from_hypergraph(hg)
    return CutReport(
        cut=_cut_value(graph, partition.assignment) / WEIGHT_SCALE,
        connectivity=_connectivity_value(graph, partition.assignment) / WEIGHT_SCALE,
        per_part_sizes=partition.part_weights(hg),
    )


def _child_seed(seed: int, label: str) -> int:
    rng = random.Random(f"{seed}:{label}")
    return rng.getrandbits(31)


def partition_k(hg: Hypergraph, k: int, epsilon: float, seed: int,
                restarts: int = DEFAULT_RESTARTS,
                max_passes: int = DEFAULT_MAX_PASSES) -> Tuple[Partition, CutReport]:
    """Recursive multilevel bisection into k parts.

    Each bisection coarsens to max(2k, 60) vertices, grows an initial
    split, and refines while projecting back through the hierarchy. Side
    capacities are expressed against the final per-part bound, so every
    leaf satisfies weight <= (1 + epsilon) * total / k.
    """
    n = hg.n_vertices
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > n:
        raise KTooLarge(f"k={k} exceeds vertex count {n}")
    graph = _IntGraph.from_hypergraph(hg)
    total = graph.total_weight()
    final_bound = (1.0 + epsilon) * total / k
    if max(graph.wv) > final_bound:
        raise InfeasibleBalance(
            f"vertex weight {max(graph.wv)} exceeds the per-part bound "
            f"{final_bound}")

    assignment = [0] * n
    next_part = [0]

    def bisect(sub: _IntGraph, caps, min_sizes, target0, sub_seed) -> List[int]:
        """Multilevel 2-way split of one induced sub-hypergraph."""
        hierarchy = _coarsen(sub, COARSEN_TARGET)
        graphs = [sub] + [g for g, _ in hierarchy]
        try:
            parts = _grow_bisection(graphs[-1], caps, min_sizes, target0,
                                    sub_seed, restarts)
        except InfeasibleBalance:
            if not hierarchy:
                raise
            # Coarse vertices got too heavy for a balanced split; retry flat.
            hierarchy = []
            graphs = [sub]
            parts = _grow_bisection(sub, caps, min_sizes, target0,
                                    sub_seed, restarts)
        parts = _refine(graphs[-1], parts, 2, caps, min_sizes, max_passes)
        for level in range(len(hierarchy) - 1, -1, -1):
            vmap = hierarchy[level][1]
            fine = graphs[level]
            parts = [parts[vmap[v]] for v in range(fine.n)]
            parts = _refine(fine, parts, 2, caps, min_sizes, max_passes)
        return parts

    def split(indices: List[int], k_parts: int, label: str) -> None:
        if k_parts == 1:
            part = next_part[0]
            next_part[0] += 1
            for v in indices:
                assignment[v] = part
            return
        k0 = (k_parts + 1) // 2
        k1 = k_parts - k0
        sub = _induced(graph, indices)
        caps = (k0 * final_bound, k1 * final_bound)
        min_sizes = (k0, k1)
        target0 = sub.total_weight() * k0 / k_parts
        parts = bisect(sub, caps, min_sizes, target0, _child_seed(seed, label))
        side0 = [indices[v] for v in range(sub.n) if parts[v] == 0]
        side1 = [indices[v] for v in range(sub.n) if parts[v] == 1]
        split(side0, k0, label + "0")
        split(side1, k1, label + "1")

    split(list(range(n)), k, "r")
    partition = Partition(k=k, assignment=assignment, epsilon=epsilon)
    partition.validate(hg)
    return partition, cut_report(hg, partition)


def to_doc_assignment(hg: Hypergraph, partition: Partition) -> Dict[str, int]:
    return {hg.vertices[v]: part for v, part in enumerate(partition.assignment)}


def isolated_vertex_placement(all_docs: Iterable[str],
                              doc_assignment: Dict[str, int],
                              k: int) -> Dict[str, int]:
    """Docs missing from the hypergraph go one by one to the currently
    lightest part (lowest part id on ties), so balance is preserved."""
    result = dict(doc_assignment)
    sizes = [0.0] * k
    for part in result.values():
        sizes[part] += 1
    for doc in sorted(set(all_docs) - set(result)):
        part = min(range(k), key=lambda p: (sizes[p], p))
        result[doc] = part
        sizes[part] += 1
    return result


# ---------------------------------------------------------------------------
# File formats


def render_hypergraph(hg: Hypergraph) -> str:
    """Text form: header ``E V W`` then one ``weight v1 v2 ...`` line per
    hyperedge with 1-indexed vertices."""
    lines = [f"{len(hg.edges)} {hg.n_vertices} W"]
    for pins, weight in hg.edges:
        lines.append(" ".join([repr(weight)] + [str(v + 1) for v in pins]))
    return "".join(line + "\n" for line in lines)


def parse_hypergraph(text: str, vertex_names: Optional[List[str]] = None) -> Hypergraph:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise HyperlensError("empty hypergraph file")
    header = lines[0].split()
    if len(header) not in (2, 3):
        raise HyperlensError(f"bad hypergraph header {lines[0]!r}")
    n_edges, n_vertices = int(header[0]), int(header[1])
    weighted = len(header) == 3 and header[2] in ("W", "1")
    if len(lines) - 1 != n_edges:
        raise HyperlensError(
            f"expected {n_edges} edge lines, found {len(lines) - 1}")
    edges = []
    for line in lines[1:]:
        fields = line.split()
        if weighted:
            weight, pins = float(fields[0]), fields[1:]
        else:
            weight, pins = 1.0, fields
        edges.append((tuple(sorted(int(p) - 1 for p in pins)), weight))
    if vertex_names is None:
        vertex_names = [f"v{i + 1}" for i in range(n_vertices)]
    if len(vertex_names) != n_vertices:
        raise HyperlensError("vertex name count does not match header")
    return Hypergraph(vertices=vertex_names, edges=edges)


def render_vertex_names(hg: Hypergraph) -> str:
    return "".join(name + "\n" for name in hg.vertices)


def parse_vertex_names(text: str) -> List[str]:
    return [line for line in text.splitlines() if line.strip()]


def render_partition(partition: Partition) -> str:
    return "".join(f"{part}\n" for part in partition.assignment)


def parse_partition(text: str, k: int, epsilon: float) -> Partition:
    assignment = [int(line) for line in text.splitlines() if line.strip()]
    return Partition(k=k, assignment=assignment, epsilon=epsilon)
