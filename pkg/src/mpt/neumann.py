"""Truncated Neumann series ``sum_p (H / lambda)^p u`` and related checks.

The empirical zeta vector is the per-term absolute sum
``zeta_alpha = sum_{p>=1} |[(H / lambda)^p u]_alpha|``.  It dominates the
absolute value of the summed series and is the quantity the entrywise
eigenvector bounds consume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bounds import zeta_fail_prob
from .errors import BadInput, DimMismatch, KTooLarge, PreconditionViolated, SpectralDominance
from .linalg import EigenSystem, SymMatrix, spectral_norm

TAIL_TARGET = 1e-10
P_MAX_CAP = 200


class TruncationCapExceeded(PreconditionViolated):
    """The series converges too slowly to reach the tail target within the order cap."""


@dataclass(frozen=True)
class SeriesResult:
    """Truncated series ``sum_{p=1}^{P_max} (H / lambda)^p u``.

    ``partial`` and ``per_entry_abs`` have the shape of ``u`` (a vector or a
    matrix of column vectors).  ``tail_bound`` bounds the 2-norm of the
    discarded remainder of every column.
    """

    partial: np.ndarray
    per_entry_abs: np.ndarray
    P_max: int
    tail_bound: float
    ratio: float


def default_order(ratio: float, u_two: float, target: float = TAIL_TARGET,
                  cap: int = P_MAX_CAP) -> int:
    """Smallest ``P >= 1`` with ``u_two ratio^(P+1) / (1 - ratio) <= target``."""
    if u_two == 0 or ratio == 0:
        return 1
    # ratio^(P+1) <= target (1 - ratio) / u_two
    need = math.log(target * (1.0 - ratio) / u_two) / math.log(ratio) - 1.0
    p = max(1, math.ceil(need - 1e-12))
    if p > cap:
        raise TruncationCapExceeded(
            f"series needs order {p} > cap {cap} (||H||/|lambda| = {ratio:.4g})")
    return p


def neumann_series_apply(H, lam: float, u, P_max: Optional[int] = None,
                         H_norm: Optional[float] = None) -> SeriesResult:
    """Evaluate the Neumann remainder series by repeated matrix products.

    Parameters
    ----------
    H : SymMatrix or array_like
    lam : float
        Nonzero scalar with ``||H|| < |lam|``.
    u : array_like, shape (n,) or (n, m)
    P_max : int, optional
        Truncation order; by default the smallest order whose geometric tail
        is at most ``1e-10``, which must not exceed 200.
    H_norm : float, optional
        Precomputed ``||H||``.
    """
    h = np.asarray(SymMatrix(H))
    u = np.asarray(u, dtype=float)
    if u.shape[0] != h.shape[0] or u.ndim not in (1, 2):
        raise DimMismatch(f"u has shape {u.shape}, H is {h.shape[0]}x{h.shape[0]}")
    if H_norm is None:
        H_norm = spectral_norm(h)
    if lam == 0 or not H_norm < abs(lam):
        raise SpectralDominance(f"||H|| = {H_norm} must be below |lambda| = {abs(lam)}")
    ratio = H_norm / abs(lam)
    u_two = float(np.max(np.linalg.norm(u, axis=0))) if u.size else 0.0
    if P_max is None:
        P_max = default_order(ratio, u_two)
    elif P_max < 1:
        raise BadInput("P_max must be at least 1")
    step = h / lam
    w = u
    partial = np.zeros_like(u)
    absum = np.zeros_like(u)
    for _ in range(P_max):
        w = step @ w
        partial += w
        absum += np.abs(w)
    tail = u_two * ratio ** (P_max + 1) / (1.0 - ratio)
    return SeriesResult(partial, absum, int(P_max), float(tail), float(ratio))


def empirical_zeta(H, lam: float, vectors, P_max: Optional[int] = None,
                   H_norm: Optional[float] = None) -> np.ndarray:
    """Per-term absolute sums for each column of ``vectors``."""
    return neumann_series_apply(H, lam, vectors, P_max=P_max, H_norm=H_norm).per_entry_abs


def neumann_reconstruct(E_M: EigenSystem, H, t: int, E_pert: EigenSystem,
                        P_max: Optional[int] = None) -> tuple:
    """Rebuild the ``t``-th perturbed eigenvector from the eigensystem of ``M``.

    Evaluates ``sum_s (lambda_s / lambda~_t) <v~_t, u_s> sum_{p>=0} (H / lambda~_t)^p u_s``
    truncated at ``P_max`` and returns ``(vector, ||vector - v~_t||_2)``.
    ``t`` is 1-based.
    """
    h = np.asarray(SymMatrix(H))
    n = h.shape[0]
    if E_M.n != n or E_pert.n != n:
        raise DimMismatch("eigensystems and H differ in size")
    if not 1 <= t <= n:
        raise BadInput(f"t={t} outside [1, {n}]")
    lam_t = float(E_pert.values[t - 1])
    v_t = E_pert.vectors[:, t - 1]
    H_norm = spectral_norm(h)
    if lam_t == 0 or not H_norm < abs(lam_t):
        raise SpectralDominance(f"||H|| = {H_norm} must be below |lambda~_t| = {abs(lam_t)}")
    coef = E_M.values / lam_t * (E_M.vectors.T @ v_t)
    start = E_M.vectors @ coef
    series = neumann_series_apply(h, lam_t, start, P_max=P_max, H_norm=H_norm)
    rhs = start + series.partial
    return rhs, float(np.linalg.norm(rhs - v_t))


def interaction_cap(n: int, xi: float, kappa: float = 0.5) -> float:
    """Largest admissible power ``kappa / 8 (log n)^xi`` (not floored)."""
    return kappa / 8.0 * math.log(n) ** xi


def interaction_mc(n: int, k: int, xi: float, u, trials: int, rng_seed,
                   kappa: float = 0.5, enforce_cap: bool = True,
                   batch: int = 64) -> tuple:
    """Monte Carlo check of the power-interaction estimate.

    ``X`` has independent symmetric entries ``+-n^(-1/2)`` on and above the
    diagonal.  Returns ``(exceed_freq, bound_freq)``: the largest
    per-entry frequency of ``|(X^k u)_alpha| >= (log n)^(k xi)`` over the
    trials, and the stated failure probability
    ``n^(-1/4 (log_mu n)^(xi-1) (log_mu e)^(-xi))`` with ``mu = 2 / (kappa + 1)``.

    The power ``k`` must satisfy ``k <= kappa / 8 (log n)^xi``; at small
    ``n`` that admits no positive power, so ``enforce_cap=False`` allows
    exploring the estimate outside its stated range.
    """
    u = np.asarray(u, dtype=float)
    if n < 2 or u.shape != (n,):
        raise DimMismatch(f"u must have shape ({n},)")
    if not math.isclose(float(np.max(np.abs(u))), 1.0, rel_tol=0, abs_tol=1e-12):
        raise BadInput("u must have unit infinity norm")
    if k < 1 or trials < 1:
        raise BadInput("k and trials must be positive")
    if enforce_cap and k > interaction_cap(n, xi, kappa):
        raise KTooLarge(f"k={k} exceeds (kappa/8)(log n)^xi = {interaction_cap(n, xi, kappa):.4g}")
    threshold = math.log(n) ** (k * xi)
    rng = np.random.default_rng(rng_seed)
    iu = np.triu_indices(n)
    scale = 1.0 / math.sqrt(n)
    hits = np.zeros(n, dtype=np.int64)
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        signs = rng.integers(0, 2, size=(b, iu[0].size), dtype=np.int8) * 2 - 1
        x = np.zeros((b, n, n))
        x[:, iu[0], iu[1]] = signs * scale
        x[:, iu[1], iu[0]] = signs * scale
        w = np.broadcast_to(u, (b, n))[..., None]
        for _ in range(k):
            w = x @ w
        hits += np.sum(np.abs(w[..., 0]) >= threshold, axis=0)
        done += b
    exceed = float(hits.max() / trials)
    return exceed, zeta_fail_prob(n, xi, kappa, plus_one=False)
