"""Content-based clustering baselines over the title matrix.

Five algorithms (k-means, farthest-first traversal, agglomerative
hierarchical, diagonal-covariance Gaussian mixture EM, DBSCAN) plus a
"filtered" variant that standardizes dimensions before k-means. They all
run on the rows of a :class:`~hyperlens.text_index.TermDocMatrix` and
return the same assignment shape, so the evaluation stage treats them
uniformly.

Determinism rules shared by every algorithm: rows are processed in sorted
doc-id order regardless of input order, all randomness comes from the
given seed, and ties break toward the lowest index. Cluster ids are
relabeled densely by first appearance.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import HyperlensError, KTooLarge
from .text_index import TermDocMatrix

logger = logging.getLogger(__name__)

DEFAULT_K = 17
DBSCAN_EPS = 0.9
DBSCAN_MIN_PTS = 3
EM_VARIANCE_FLOOR = 1e-6
EM_SVD_DIMS = 32


@dataclass
class ClusterAssignment:
    algorithm: str
    labels: Dict[str, int]
    k_effective: int
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def clusters(self) -> List[set]:
        """Doc sets ordered by cluster id."""
        groups: List[set] = [set() for _ in range(self.k_effective)]
        for doc, cid in self.labels.items():
            groups[cid].add(doc)
        return groups


def _canonical(m: TermDocMatrix) -> Tuple[List[str], np.ndarray]:
    order = np.argsort(np.array(m.doc_ids, dtype=object))
    docs = [m.doc_ids[i] for i in order]
    return docs, np.asarray(m.values, dtype=float)[order]


def _finish(algorithm: str, docs: List[str], raw: np.ndarray,
            params: dict, seed: Optional[int]) -> ClusterAssignment:
    """Relabel raw cluster ids densely by first appearance in doc order."""
    remap: Dict[int, int] = {}
    labels = {}
    for doc, cid in zip(docs, raw.tolist()):
        if cid not in remap:
            remap[cid] = len(remap)
        labels[doc] = remap[cid]
    return ClusterAssignment(algorithm=algorithm, labels=labels,
                             k_effective=len(remap), params=params, seed=seed)


def _check_k(k: int, n: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise KTooLarge(f"k={k} exceeds document count {n}")


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (np.sum(x * x, axis=1)[:, None] + np.sum(centers * centers, axis=1)[None, :]
          - 2.0 * x @ centers.T)
    return np.maximum(d2, 0.0)


def _farthest_traversal(x: np.ndarray, k: int, first: int) -> List[int]:
    """Max-min traversal: each next index maximizes its distance to the
    picked set (argmax takes the lowest index on ties)."""
    ids = [first]
    min_d2 = _sq_dists(x, x[first:first + 1])[:, 0]
    for _ in range(1, k):
        nxt = int(np.argmax(min_d2))
        ids.append(nxt)
        min_d2 = np.minimum(min_d2, _sq_dists(x, x[nxt:nxt + 1])[:, 0])
    return ids


def _init_centers(x: np.ndarray, k: int, rng: np.random.Generator,
                  init: str) -> np.ndarray:
    n = x.shape[0]
    if init == "farthest":
        return x[_farthest_traversal(x, k, int(rng.integers(n)))].copy()
    if init == "kmeans++":
        centers = np.empty((k, x.shape[1]))
        centers[0] = x[rng.integers(n)]
        d2 = _sq_dists(x, centers[0:1])[:, 0]
        for j in range(1, k):
            total = d2.sum()
            if total <= 0:
                # Every point coincides with a center; geometry is flat,
                # any deterministic pick works.
                idx = j % n
            else:
                idx = int(rng.choice(n, p=d2 / total))
            centers[j] = x[idx]
            d2 = np.minimum(d2, _sq_dists(x, centers[j:j + 1])[:, 0])
        return centers
    raise ValueError(f"unknown init {init!r}")


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int) -> Tuple[np.ndarray, List[float], int]:
    n, k = x.shape[0], centers.shape[0]
    labels = np.full(n, -1)
    objective_trace: List[float] = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        d2 = _sq_dists(x, centers)
        new_labels = np.argmin(d2, axis=1)
        # Re-seed empty clusters from the point farthest from its center.
        assigned_d2 = d2[np.arange(n), new_labels]
        for cid in range(k):
            if not np.any(new_labels == cid):
                far = int(np.argmax(assigned_d2))
                new_labels[far] = cid
                centers[cid] = x[far]
                assigned_d2[far] = 0.0
        objective_trace.append(float(assigned_d2.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for cid in range(k):
            members = x[labels == cid]
            if len(members):
                centers[cid] = members.mean(axis=0)
    return labels, objective_trace, iterations


def kmeans(m: TermDocMatrix, k: int = DEFAULT_K, seed: int = 0,
           max_iter: int = 100, init: str = "farthest") -> ClusterAssignment:
    """Lloyd's algorithm; initial centers come from a seeded farthest-point
    traversal by default (``init="kmeans++"`` for D^2 sampling)."""
    docs, x = _canonical(m)
    _check_k(k, len(docs))
    rng = np.random.default_rng(seed)
    centers = _init_centers(x, k, rng, init)
    labels, trace, iterations = _lloyd(x, centers, max_iter)
    params = {"k": k, "max_iter": max_iter, "iterations": iterations,
              "init": init, "objective_trace": trace}
    return _finish("kmeans", docs, labels, params, seed)


def farthest_first(m: TermDocMatrix, k: int = DEFAULT_K, seed: int = 0) -> ClusterAssignment:
    """Farthest-first traversal: random first center, then repeatedly the
    point maximizing its distance to the chosen centers."""
    docs, x = _canonical(m)
    n = len(docs)
    _check_k(k, n)
    rng = np.random.default_rng(seed)
    center_ids = _farthest_traversal(x, k, int(rng.integers(n)))
    labels = np.argmin(_sq_dists(x, x[center_ids]), axis=1)
    return _finish("farthest_first", docs, labels,
                   {"k": k, "centers": center_ids}, seed)


def hierarchical(m: TermDocMatrix, k: int = DEFAULT_K,
                 linkage: str = "average") -> ClusterAssignment:
    """Agglomerative clustering on Euclidean distance.

    Merges the closest active pair until k clusters remain; equal distances
    resolve to the lexicographically smallest index pair.
    """
    if linkage not in ("single", "complete", "average"):
        raise ValueError(f"unknown linkage {linkage!r}")
    docs, x = _canonical(m)
    n = len(docs)
    _check_k(k, n)

    d = np.sqrt(_sq_dists(x, x))
    np.fill_diagonal(d, np.inf)
    active = np.ones(n, dtype=bool)
    sizes = np.ones(n)
    members: List[List[int]] = [[i] for i in range(n)]

    for _ in range(n - k):
        flat = int(np.argmin(d))  # row-major: lowest (i, j) among ties
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        if linkage == "single":
            merged = np.minimum(d[i], d[j])
        elif linkage == "complete":
            merged = np.maximum(d[i], d[j])
        else:
            merged = (sizes[i] * d[i] + sizes[j] * d[j]) / (sizes[i] + sizes[j])
        d[i] = merged
        d[:, i] = merged
        d[i, i] = np.inf
        d[j, :] = np.inf
        d[:, j] = np.inf
        sizes[i] += sizes[j]
        members[i].extend(members[j])
        members[j] = []
        active[j] = False

    raw = np.full(n, -1)
    cid = 0
    for i in range(n):
        if active[i]:
            for idx in members[i]:
                raw[idx] = cid
            cid += 1
    return _finish("hierarchical", docs, raw, {"k": k, "linkage": linkage}, None)


def _svd_project(x: np.ndarray, dims: int) -> np.ndarray:
    """Deterministic truncated-SVD projection with a sign convention
    (largest-magnitude loading of each component is positive)."""
    dims = max(1, min(dims, min(x.shape)))
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    for j in range(vt.shape[0]):
        pivot = np.argmax(np.abs(vt[j]))
        if vt[j, pivot] < 0:
            vt[j] = -vt[j]
            u[:, j] = -u[:, j]
    return u[:, :dims] * s[:dims]


def em_mixture(m: TermDocMatrix, k: int = DEFAULT_K, seed: int = 0,
               max_iter: int = 100, reg: float = EM_VARIANCE_FLOOR,
               svd_dims: int = EM_SVD_DIMS) -> ClusterAssignment:
    """Diagonal-covariance Gaussian mixture fit by EM.

    Runs on a seeded truncated-SVD projection of the matrix because
    diagonal Gaussians on raw sparse rows degenerate. Components whose
    weight underflows are re-seeded on the worst-explained point and
    counted. Hard labels come from the max responsibility.
    """
    docs, x = _canonical(m)
    n = len(docs)
    _check_k(k, n)
    z = _svd_project(x, svd_dims)
    dims = z.shape[1]

    rng = np.random.default_rng(seed)
    means = z[rng.choice(n, size=k, replace=False)].copy()
    base_var = np.maximum(z.var(axis=0), reg)
    variances = np.tile(base_var, (k, 1))
    weights = np.full(k, 1.0 / k)

    loglik_trace: List[float] = []
    reseeded = 0
    resp = np.full((n, k), 1.0 / k)
    for _ in range(max_iter):
        # E step in log space.
        log_prob = -0.5 * (
            np.sum(np.log(2.0 * np.pi * variances), axis=1)[None, :]
            + _mahalanobis_diag(z, means, variances))
        log_weighted = log_prob + np.log(weights)[None, :]
        log_norm = _logsumexp(log_weighted)
        loglik = float(log_norm.sum())
        resp = np.exp(log_weighted - log_norm[:, None])

        if loglik_trace and abs(loglik - loglik_trace[-1]) < 1e-10 * max(1.0, abs(loglik)):
            loglik_trace.append(loglik)
            break
        loglik_trace.append(loglik)

        # M step with a variance floor.
        nk = resp.sum(axis=0)
        reseeded_now = []
        for cid in range(k):
            if nk[cid] < 1e-9:
                worst = int(np.argmin(np.max(resp, axis=1)))
                nk[cid] = 1.0
                resp[:, cid] = 0.0
                resp[worst, cid] = 1.0
                reseeded_now.append(cid)
                reseeded += 1
        weights = nk / nk.sum()
        means = (resp.T @ z) / nk[:, None]
        for cid in range(k):
            if cid in reseeded_now:
                variances[cid] = base_var  # broad restart, not a point spike
                continue
            diff = z - means[cid]
            variances[cid] = np.maximum(
                (resp[:, cid] @ (diff * diff)) / nk[cid], reg)

    labels = np.argmax(resp, axis=1)
    params = {"k": k, "max_iter": max_iter, "reg": reg, "svd_dims": dims,
              "loglik_trace": loglik_trace, "reseeded_components": reseeded}
    return _finish("em", docs, labels, params, seed)


def _mahalanobis_diag(z: np.ndarray, means: np.ndarray,
                      variances: np.ndarray) -> np.ndarray:
    out = np.empty((z.shape[0], means.shape[0]))
    for cid in range(means.shape[0]):
        diff = z - means[cid]
        out[:, cid] = np.sum(diff * diff / variances[cid], axis=1)
    return out


def _logsumexp(a: np.ndarray) -> np.ndarray:
    peak = a.max(axis=1)
    return peak + np.log(np.sum(np.exp(a - peak[:, None]), axis=1))


def dbscan(m: TermDocMatrix, eps: float = DBSCAN_EPS,
           min_pts: int = DBSCAN_MIN_PTS,
           noise_singletons: bool = True) -> ClusterAssignment:
    """Core/border/noise labeling on Euclidean distance.

    Noise points become singleton clusters by default so that evaluation
    sees a total assignment; the cluster count is data-driven.
    """
    docs, x = _canonical(m)
    n = len(docs)
    d = np.sqrt(_sq_dists(x, x))
    neighbor_lists = [np.nonzero(d[i] <= eps)[0] for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in neighbor_lists])

    labels = np.full(n, -1)
    cid = 0
    for i in range(n):
        if labels[i] != -1 or not core[i]:
            continue
        labels[i] = cid
        queue = deque(neighbor_lists[i])
        while queue:
            j = queue.popleft()
            if labels[j] == -1:
                labels[j] = cid
                if core[j]:
                    queue.extend(neighbor_lists[j])
        cid += 1

    if noise_singletons:
        for i in range(n):
            if labels[i] == -1:
                labels[i] = cid
                cid += 1
        kept_docs, raw = docs, labels
    else:
        kept = labels != -1
        kept_docs = [doc for doc, keep in zip(docs, kept) if keep]
        raw = labels[kept]
    assignment = _finish("dbscan", kept_docs, raw,
                         {"eps": eps, "min_pts": min_pts,
                          "noise_singletons": noise_singletons}, None)
    return assignment


def filtered_kmeans(m: TermDocMatrix, k: int = DEFAULT_K, seed: int = 0,
                    max_iter: int = 100, init: str = "farthest") -> ClusterAssignment:
    """Standardize each dimension (dropping zero-variance ones), then
    k-means."""
    docs, x = _canonical(m)
    _check_k(k, len(docs))
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    keep = std > 0
    if not np.any(keep):
        raise HyperlensError("all matrix columns are constant; nothing to cluster")
    z = (x[:, keep] - mean[keep]) / std[keep]
    rng = np.random.default_rng(seed)
    centers = _init_centers(z, k, rng, init)
    labels, trace, iterations = _lloyd(z, centers, max_iter)
    params = {"k": k, "max_iter": max_iter, "iterations": iterations,
              "init": init, "dropped_dims": int((~keep).sum()),
              "objective_trace": trace}
    return _finish("filtered_kmeans", docs, labels, params, seed)


def render_assignment(assignment: ClusterAssignment) -> str:
    """TSV ``doc_id<TAB>cluster_id`` in doc order."""
    return "".join(f"{doc}\t{assignment.labels[doc]}\n"
                   for doc in sorted(assignment.labels))


def parse_assignment(text: str, algorithm: str = "") -> ClusterAssignment:
    labels = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        doc, cid = line.split("\t")
        labels[doc] = int(cid)
    k_eff = max(labels.values()) + 1 if labels else 0
    return ClusterAssignment(algorithm=algorithm, labels=labels,
                             k_effective=k_eff)
