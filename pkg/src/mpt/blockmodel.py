"""Stochastic blockmodels: edge probabilities, sampling and the exact spectrum."""
from __future__ import annotations

from dataclasses import dataclass
from os import PathLike
from typing import Union

import numpy as np

from .errors import BadInput, InvalidProbability, NonSymmetricP0
from .linalg import EigenSystem, SymMatrix, canonical_signs, sym_eigen


@dataclass(frozen=True)
class Blockmodel:
    """Community assignment ``z`` (0-based labels), base matrix ``P0`` and density ``rho``.

    Edge probabilities are ``M_ij = rho * P0[z[i], z[j]]``.
    """

    z: np.ndarray
    P0: np.ndarray
    rho: float

    def __post_init__(self):
        z = np.array(self.z, dtype=np.intp)
        p0 = np.array(self.P0, dtype=float)
        if p0.ndim == 0:
            p0 = p0.reshape(1, 1)
        if p0.ndim != 2 or p0.shape[0] != p0.shape[1] or p0.size == 0:
            raise BadInput(f"P0 must be a non-empty square matrix, got shape {p0.shape}")
        k = p0.shape[0]
        if not np.all(np.isfinite(p0)) or np.any(p0 < 0) or np.any(p0 > 1):
            raise InvalidProbability("P0 entries must lie in [0, 1]")
        if not np.array_equal(p0, p0.T):
            raise NonSymmetricP0("P0 must be symmetric")
        rho = float(self.rho)
        if not 0 <= rho <= 1:
            raise InvalidProbability(f"rho must lie in [0, 1], got {rho}")
        if rho * p0.max() > 1:
            raise InvalidProbability("rho * max(P0) exceeds 1")
        if z.ndim != 1 or z.size == 0:
            raise BadInput("assignment must be a non-empty 1-d array")
        if z.min() < 0 or z.max() >= k:
            raise BadInput(f"labels must lie in [0, {k - 1}]")
        if np.unique(z).size != k:
            raise BadInput("assignment is not surjective onto the communities")
        for a in (z, p0):
            a.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "P0", p0)
        object.__setattr__(self, "rho", rho)

    @property
    def n(self) -> int:
        return self.z.size

    @property
    def K(self) -> int:
        return self.P0.shape[0]

    @property
    def block_sizes(self) -> np.ndarray:
        return np.bincount(self.z, minlength=self.K)

    @property
    def balanced(self) -> bool:
        sizes = self.block_sizes
        return bool(np.all(sizes == sizes[0]))


@dataclass(frozen=True)
class SampledGraph:
    A: SymMatrix
    M: SymMatrix
    H: SymMatrix
    seed: object


def make_balanced_sbm(K: int, m: int, P0, rho: float) -> Blockmodel:
    """``K`` communities of ``m`` consecutive nodes each."""
    if K < 1 or m < 1:
        raise BadInput("K and m must be positive")
    p0 = np.array(P0, dtype=float)
    if p0.ndim == 0:
        p0 = p0.reshape(1, 1)
    if p0.shape != (K, K):
        raise BadInput(f"P0 must be {K}x{K}, got {p0.shape}")
    if not 0 < rho <= 1:
        raise InvalidProbability(f"rho must lie in (0, 1], got {rho}")
    return Blockmodel(np.repeat(np.arange(K), m), p0, rho)


def make_sbm(z, P0, rho: float) -> Blockmodel:
    """General (possibly unbalanced) blockmodel from an explicit assignment."""
    return Blockmodel(z, P0, rho)


def edge_prob_matrix(bm: Blockmodel) -> SymMatrix:
    return SymMatrix(bm.rho * bm.P0[np.ix_(bm.z, bm.z)])


def sample_graph(bm: Blockmodel, seed, no_self_loops: bool = False) -> SampledGraph:
    """Draw ``A_ij ~ Bernoulli(M_ij)`` independently for ``j >= i`` and mirror.

    Uniforms are consumed in row-major order over the upper triangle,
    diagonal included, so a seed fixes the graph.  ``no_self_loops`` zeroes
    the diagonal of ``A`` (and of ``M``, so that ``H`` stays centred).
    """
    m = np.array(edge_prob_matrix(bm))
    n = bm.n
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n)
    draws = rng.random(iu[0].size) < m[iu]
    a = np.zeros((n, n))
    a[iu] = draws
    a[iu[1], iu[0]] = draws
    if no_self_loops:
        np.fill_diagonal(a, 0.0)
        np.fill_diagonal(m, 0.0)
    A, M = SymMatrix(a), SymMatrix(m)
    return SampledGraph(A=A, M=M, H=SymMatrix(a - m), seed=seed)


def exact_sbm_spectrum(bm: Blockmodel) -> EigenSystem:
    """Top-``K`` eigenpairs of ``M`` from the ``K x K`` reduced problem.

    With ``S = diag(sqrt|F_k|)`` the nonzero spectrum of ``M`` is that of
    ``S (rho P0) S``; an eigenvector ``w`` lifts to ``w[z(i)] / sqrt|F_z(i)|``.
    The pairs are sorted descending, and lifted vectors follow the same sign
    rule as :func:`sym_eigen`.
    """
    root = np.sqrt(bm.block_sizes.astype(float))
    reduced = root[:, None] * (bm.rho * bm.P0) * root[None, :]
    small = sym_eigen(reduced, method="jacobi")
    lifted = small.vectors[bm.z] / root[bm.z][:, None]
    lifted = canonical_signs(lifted)
    vals = np.array(small.values)
    for a in (vals, lifted):
        a.setflags(write=False)
    return EigenSystem(vals, lifted)


PathType = Union[str, PathLike]


def read_labels(path: PathType) -> np.ndarray:
    """One integer label per line."""
    try:
        with open(path) as fh:
            labels = [int(ln) for ln in fh.read().split()]
    except ValueError as exc:
        raise BadInput(f"{path}: {exc}") from None
    if not labels:
        raise BadInput(f"{path}: no labels")
    return np.array(labels, dtype=np.intp)


def write_labels(path: PathType, labels) -> None:
    with open(path, "w") as fh:
        fh.writelines(f"{int(x)}\n" for x in labels)
