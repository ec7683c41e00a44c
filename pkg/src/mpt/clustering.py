"""Spectral clustering by thresholded column distances of a rank-K reconstruction.

Steps: keep the ``K`` eigenpairs of the adjacency matrix largest in
magnitude, rebuild ``M_hat``, join nodes ``i`` and ``j`` whenever
``||M_hat[:, i] - M_hat[:, j]||_inf < tau`` and return the connected
components of that graph.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import BadInput, SizeMismatch
from .linalg import SymMatrix, rank_k_reconstruct, sym_eigen


@dataclass(frozen=True)
class Clustering:
    """Partition of ``n`` nodes; ``labels`` are ``0 .. num_clusters - 1`` in order of first appearance."""

    labels: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.labels)
        if raw.ndim != 1 or raw.size == 0:
            raise BadInput("labels must be a non-empty 1-d sequence")
        _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
        rank = np.empty(first.size, dtype=np.intp)
        rank[np.argsort(first, kind="stable")] = np.arange(first.size)
        labels = rank[inverse.reshape(-1)]
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def num_clusters(self) -> int:
        return int(self.labels.max()) + 1

    def same_partition(self, other: "Clustering") -> bool:
        # canonical first-appearance labels make partition equality plain equality
        return self.n == other.n and bool(np.array_equal(self.labels, other.labels))


@dataclass(frozen=True)
class ClusterConfig:
    """``tau`` is a positive threshold or ``"auto"``.

    The automatic threshold needs the density ``rho``; when it is left as
    ``None`` the mean entry of the adjacency matrix is used.
    """

    K: int
    tau: Union[float, str] = "auto"
    xi: float = 1.1
    c: float = 1.0
    rho: Optional[float] = None

    def __post_init__(self):
        if self.K < 1:
            raise BadInput("K must be at least 1")
        if isinstance(self.tau, str):
            if self.tau != "auto":
                raise BadInput(f"tau must be a number or 'auto', got {self.tau!r}")
        elif not self.tau > 0:
            raise BadInput("tau must be positive")


def auto_tau(rho: float, n: int, xi: float = 1.1, c: float = 1.0) -> float:
    """``c rho^(3/4) n^(-1/4) (log n)^(xi/2)``.

    The geometric mean of ``rho`` and the entrywise noise scale
    ``sqrt(rho / n) (log n)^xi``: asymptotically above the noise and
    below the signal.
    """
    if not 0 < rho <= 1:
        raise BadInput(f"rho must lie in (0, 1], got {rho}")
    if n < 2:
        raise BadInput("n must be at least 2")
    return c * rho ** 0.75 * n ** -0.25 * math.log(n) ** (xi / 2)


def spectral_estimate(A, K: int) -> SymMatrix:
    """Rank-``K`` reconstruction from the eigenpairs of ``A`` largest in magnitude."""
    a = SymMatrix(A)
    if not 1 <= K <= a.n:
        raise BadInput(f"K must lie in [1, {a.n}]")
    return rank_k_reconstruct(sym_eigen(a), K)


def column_distances(m) -> np.ndarray:
    """``D[i, j] = ||M[:, i] - M[:, j]||_inf``, diagonal entries included."""
    a = np.asarray(m, dtype=float)
    return cdist(a.T, a.T, "chebyshev")


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            if rx < ry:
                rx, ry = ry, rx
            self.parent[rx] = ry


def threshold_components(m, tau: float) -> Clustering:
    """Connected components of the graph with edges where column distance ``< tau``."""
    d = column_distances(m)
    n = d.shape[0]
    uf = _UnionFind(n)
    for i in range(n):
        for j in np.flatnonzero(d[i, i + 1:] < tau):
            uf.union(i, i + 1 + int(j))
    return Clustering(np.array([uf.find(i) for i in range(n)]))


def resolve_tau(A, cfg: ClusterConfig) -> float:
    if cfg.tau != "auto":
        return float(cfg.tau)
    a = np.asarray(A)
    rho = cfg.rho if cfg.rho is not None else float(a.mean())
    if not rho > 0:
        raise BadInput("cannot pick tau automatically for an empty graph")
    return auto_tau(min(rho, 1.0), a.shape[0], cfg.xi, cfg.c)


def cluster_with_details(A, cfg: ClusterConfig) -> tuple:
    """Return ``(clustering, M_hat, tau)``."""
    a = SymMatrix(A)
    if cfg.K > a.n:
        raise BadInput(f"K={cfg.K} exceeds n={a.n}")
    tau = resolve_tau(a, cfg)
    m_hat = spectral_estimate(a, cfg.K)
    return threshold_components(m_hat, tau), m_hat, tau


def cluster(A, cfg: ClusterConfig) -> Clustering:
    return cluster_with_details(A, cfg)[0]


def recovery_check(found: Clustering, truth: Clustering) -> tuple:
    """``(exact, misclassified)`` for two partitions, ignoring label names.

    With equal cluster counts ``misclassified`` is the minimum Hamming
    distance over label bijections; otherwise it is ``n`` minus a greedy
    matching of the contingency table.
    """
    if found.n != truth.n:
        raise SizeMismatch(f"clusterings have {found.n} and {truth.n} nodes")
    table = np.zeros((found.num_clusters, truth.num_clusters), dtype=np.int64)
    np.add.at(table, (found.labels, truth.labels), 1)
    if table.shape[0] == table.shape[1]:
        rows, cols = linear_sum_assignment(table, maximize=True)
        matched = int(table[rows, cols].sum())
    else:
        matched = 0
        work = table.copy()
        for _ in range(min(work.shape)):
            i, j = np.unravel_index(np.argmax(work), work.shape)
            if work[i, j] <= 0:
                break
            matched += int(work[i, j])
            work[i, :] = -1
            work[:, j] = -1
    return found.same_partition(truth), found.n - matched


def matrix_errors(M_hat, M) -> tuple:
    """``(max |M_hat - M|, ||M_hat - M||_F)``."""
    a, b = np.asarray(M_hat, dtype=float), np.asarray(M, dtype=float)
    if a.shape != b.shape:
        raise SizeMismatch(f"shapes {a.shape} and {b.shape} differ")
    diff = a - b
    return float(np.max(np.abs(diff))), float(np.linalg.norm(diff))


def copy_node(M, i: int, j: int) -> SymMatrix:
    """Overwrite row and column ``i`` of ``M`` with those of node ``j``.

    Only ``2n - 1`` entries change, so the Frobenius error stays at the
    scale of one column while node ``i`` becomes indistinguishable from
    ``j``'s community.
    """
    a = np.array(M, dtype=float)
    n = a.shape[0]
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise BadInput("i and j must be distinct node indices")
    a[i, :] = a[j, :]
    a[:, i] = a[:, j]
    a[i, i] = a[j, j]
    return SymMatrix(a)


def min_column_gap(bm) -> float:
    """Smallest ``||M[:, i] - M[:, j]||_inf`` over nodes in different communities."""
    p = bm.rho * bm.P0
    k = p.shape[0]
    if k == 1:
        return math.inf
    gaps = [np.max(np.abs(p[:, a] - p[:, b])) for a in range(k) for b in range(a + 1, k)]
    return float(min(gaps))
