"""Profile-vs-cluster scoring and recommendations.

A user profile is the set of distinct in-universe documents the user
browsed. Each profile is scored against every cluster by treating cluster
membership as the predicted positive class and profile membership as the
actual positive class:

    precision = |cluster & profile| / |cluster|
    recall    = |cluster & profile| / |profile|
    f1        = 2PR / (P + R), or 0 when P + R = 0

Per user we keep the whole score triple of the best cluster (best by F1 by
default, ties to the lowest cluster id), then average the per-user triples
component-wise to get one row per algorithm.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .content_clustering import ClusterAssignment
from .errors import HyperlensError
from .session_builder import Session, UserKey

logger = logging.getLogger(__name__)


class EmptyCluster(HyperlensError):
    category = "evaluation"


class NoProfiles(HyperlensError):
    category = "evaluation"


@dataclass(frozen=True)
class EvalConfig:
    min_doc_views: int = 10
    min_profile_items: int = 15
    k_clusters: int = 17
    best_of_metric: str = "f1"          # f1 | precision | recall
    independent_maxima: bool = False    # per-metric maxima instead of one triple
    restrict_before_threshold: bool = True

    def __post_init__(self):
        if min(self.min_doc_views, self.min_profile_items, self.k_clusters) < 1:
            raise ValueError("eval thresholds must be positive")
        if self.best_of_metric not in ("f1", "precision", "recall"):
            raise ValueError(f"unknown metric {self.best_of_metric!r}")


@dataclass(frozen=True)
class UserProfile:
    user: UserKey
    items: frozenset


@dataclass(frozen=True)
class ScoreTriple:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, hits: int, cluster_size: int, profile_size: int) -> "ScoreTriple":
        precision = hits / cluster_size
        recall = hits / profile_size
        if precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        else:
            f1 = 0.0
        return cls(precision=precision, recall=recall, f1=f1)

    def metric(self, name: str) -> float:
        return getattr(self, name)


def doc_view_counts(sessions: Iterable[Session]) -> Dict[str, int]:
    """Total views per doc across all sessions, duplicates counted."""
    counts: Dict[str, int] = {}
    for session in sessions:
        for ref in session.resources:
            counts[ref.doc_id] = counts.get(ref.doc_id, 0) + 1
    return counts


def select_top_documents(sessions: Sequence[Session], cfg: EvalConfig) -> Set[str]:
    """Docs viewed at least ``min_doc_views`` times in total."""
    counts = doc_view_counts(sessions)
    return {doc for doc, count in counts.items() if count >= cfg.min_doc_views}


def build_profiles(sessions: Sequence[Session], cfg: EvalConfig,
                   doc_universe: Set[str]) -> List[UserProfile]:
    """One profile per user with enough distinct in-universe items.

    By default items are restricted to the universe before applying the
    size threshold; ``restrict_before_threshold=False`` applies the
    threshold to all distinct items first.
    """
    per_user: Dict[UserKey, set] = {}
    order: List[UserKey] = []
    for session in sessions:
        if session.user not in per_user:
            per_user[session.user] = set()
            order.append(session.user)
        per_user[session.user].update(ref.doc_id for ref in session.resources)

    profiles = []
    for user in sorted(order, key=lambda u: (u.host, u.username)):
        items = per_user[user]
        in_universe = items & doc_universe
        gate = in_universe if cfg.restrict_before_threshold else items
        if len(gate) >= cfg.min_profile_items and in_universe:
            profiles.append(UserProfile(user=user, items=frozenset(in_universe)))
    return profiles


def score_pair(profile: UserProfile, cluster: Set[str]) -> ScoreTriple:
    if not cluster:
        raise EmptyCluster("cannot score an empty cluster")
    hits = len(cluster & profile.items)
    return ScoreTriple.from_counts(hits, len(cluster), len(profile.items))


def score_user(profile: UserProfile, clusters: Sequence[Set[str]],
               cfg: EvalConfig) -> Tuple[ScoreTriple, int]:
    """The whole triple of the best-scoring cluster (ties to the lowest
    cluster id), or per-metric maxima when configured. Returns the triple
    and the winning cluster id (-1 in independent-maxima mode)."""
    triples = [score_pair(profile, cluster) for cluster in clusters]
    if cfg.independent_maxima:
        return ScoreTriple(
            precision=max(t.precision for t in triples),
            recall=max(t.recall for t in triples),
            f1=max(t.f1 for t in triples)), -1
    best_id = 0
    for cid in range(1, len(triples)):
        if triples[cid].metric(cfg.best_of_metric) > triples[best_id].metric(cfg.best_of_metric):
            best_id = cid
    return triples[best_id], best_id


@dataclass
class UserScore:
    user: UserKey
    triple: ScoreTriple
    best_cluster: int


def evaluate_algorithm(assignment: ClusterAssignment,
                       profiles: Sequence[UserProfile], cfg: EvalConfig,
                       threads: int = 1) -> Tuple[ScoreTriple, List[UserScore]]:
    """Component-wise mean of per-user triples plus the per-user table.

    Per-user scoring is independent, so it may fan out over a thread pool;
    results are reduced in profile order either way.
    """
    if not profiles:
        raise NoProfiles("no user profiles to evaluate")
    clusters = [c for c in assignment.clusters() if c]

    def one(profile: UserProfile) -> UserScore:
        triple, best = score_user(profile, clusters, cfg)
        return UserScore(user=profile.user, triple=triple, best_cluster=best)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            table = list(pool.map(one, profiles))
    else:
        table = [one(p) for p in profiles]

    n = len(table)
    mean = ScoreTriple(
        precision=sum(s.triple.precision for s in table) / n,
        recall=sum(s.triple.recall for s in table) / n,
        f1=sum(s.triple.f1 for s in table) / n)
    return mean, table


def recommend(profile: UserProfile, clusters: Sequence[Set[str]],
              n: int, cfg: EvalConfig,
              popularity: Optional[Dict[str, int]] = None) -> List[str]:
    """Top-n unbrowsed items of the user's best cluster, most-viewed first
    (doc id breaks ties)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    popularity = popularity or {}
    # Recommending needs one concrete cluster, so a single best is picked
    # by the configured metric even in independent-maxima mode.
    triples = [score_pair(profile, cluster) for cluster in clusters]
    best = 0
    for cid in range(1, len(triples)):
        if triples[cid].metric(cfg.best_of_metric) > triples[best].metric(cfg.best_of_metric):
            best = cid
    candidates = sorted(clusters[best] - profile.items,
                        key=lambda doc: (-popularity.get(doc, 0), doc))
    return candidates[:n]


def render_user_scores(per_algorithm: Dict[str, List[UserScore]]) -> str:
    """Per-user detail as JSON keyed by algorithm."""
    payload = {
        algo: [
            {"user": {"host": s.user.host, "username": s.user.username},
             "precision": s.triple.precision,
             "recall": s.triple.recall,
             "f1": s.triple.f1,
             "best_cluster": s.best_cluster}
            for s in scores
        ]
        for algo, scores in sorted(per_algorithm.items())
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def render_recommendations(items: Iterable[Tuple[UserKey, List[str]]]) -> str:
    """JSON lines, one ``{user, items}`` object per user."""
    lines = []
    for user, docs in items:
        lines.append(json.dumps(
            {"user": {"host": user.host, "username": user.username},
             "items": docs},
            sort_keys=True, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)
