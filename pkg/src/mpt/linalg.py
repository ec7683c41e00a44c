"""Dense symmetric linear algebra.

Eigendecomposition uses a cyclic Jacobi kernel with a round-robin pair
ordering, so that every rotation of one step touches disjoint index pairs and
the whole step is a handful of vectorised numpy operations.  Above
``JACOBI_MAX_N`` the LAPACK symmetric driver is used instead; both routes go
through the same sorting and sign conventions.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from os import PathLike
from typing import Union

import numpy as np

from .errors import BadInput, DimMismatch, NoConvergence

__all__ = [
    "SymMatrix",
    "EigenSystem",
    "OrthonormalBasis",
    "PrincipalAngles",
    "sym_eigen",
    "sym_eigvals",
    "spectral_norm",
    "rank_k_reconstruct",
    "principal_angles",
    "align_basis",
    "quad_form",
    "span_h",
    "canonical_signs",
    "read_matrix",
    "write_matrix",
    "JACOBI_MAX_N",
]

JACOBI_MAX_N = 64
MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-12
# relative width within which two entries count as tied for the sign rule
SIGN_TIE_RTOL = 1e-9


class SymMatrix:
    """Immutable dense real symmetric matrix.

    Input that is asymmetric by at most ``1e-12 * max(1, max|X|)`` is
    replaced by ``(X + X.T) / 2``; anything further from symmetric is
    rejected, as are non-finite entries.
    """

    __slots__ = ("_data",)

    def __init__(self, entries):
        if isinstance(entries, SymMatrix):
            self._data = entries._data
            return
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise DimMismatch(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise BadInput("matrix has non-finite entries")
        asym = float(np.max(np.abs(a - a.T)))
        if asym > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(a)))):
            raise BadInput(f"matrix is not symmetric (max |X - X^T| = {asym:.3g})")
        if asym > 0:
            a = (a + a.T) / 2
        a.setflags(write=False)
        self._data = a

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def n(self) -> int:
        return self._data.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None and not copy:
            return self._data
        return self._data.astype(self._data.dtype if dtype is None else dtype)

    def __add__(self, other):
        return SymMatrix(self._data + np.asarray(other))

    def __sub__(self, other):
        return SymMatrix(self._data - np.asarray(other))

    def __neg__(self):
        return SymMatrix(-self._data)

    def __mul__(self, scalar):
        return SymMatrix(self._data * float(scalar))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return self._data.shape == other._data.shape and bool(np.all(self._data == other._data))

    __hash__ = None

    def __repr__(self):
        return f"SymMatrix(n={self.n})"


def _sym_array(m) -> np.ndarray:
    if isinstance(m, SymMatrix):
        return m.data
    return SymMatrix(m).data


@dataclass(frozen=True)
class EigenSystem:
    """Eigenpairs sorted by descending eigenvalue.

    ``vectors[:, t]`` is the unit eigenvector paired with ``values[t]``.
    In each vector the entry of largest magnitude is positive (ties go to
    the lowest index).
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def n(self) -> int:
        return len(self.values)

    def residual(self, m) -> float:
        """Largest ``||M v_t - lambda_t v_t||_2`` over all pairs."""
        a = _sym_array(m)
        r = a @ self.vectors - self.vectors * self.values
        return float(np.max(np.linalg.norm(r, axis=0)))


@dataclass(frozen=True)
class OrthonormalBasis:
    """``d`` orthonormal columns of an ``n x d`` array."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[1] == 0 or v.shape[1] > v.shape[0]:
            raise DimMismatch(f"basis must be n x d with 1 <= d <= n, got {v.shape}")
        gram = v.T @ v
        err = float(np.max(np.abs(gram - np.eye(v.shape[1]))))
        if err > 1e-8:
            raise BadInput(f"basis vectors are not orthonormal (max Gram error {err:.3g})")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def projector(self) -> np.ndarray:
        return self.vectors @ self.vectors.T


@dataclass(frozen=True)
class PrincipalAngles:
    angles: np.ndarray

    @property
    def max(self) -> float:
        return float(self.angles[-1])

    def sin_frobenius(self) -> float:
        return float(np.sqrt(np.sum(np.sin(self.angles) ** 2)))


def _basis(x) -> OrthonormalBasis:
    return x if isinstance(x, OrthonormalBasis) else OrthonormalBasis(x)


# --------------------------------------------------------------------------
# Jacobi kernel

@lru_cache(maxsize=None)
def _round_robin(n: int):
    """Pair schedule for one sweep: ``n - 1`` (or ``n``) steps of disjoint pairs."""
    m = n + (n % 2)
    players = list(range(m))
    steps = []
    for _ in range(m - 1):
        pairs = []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                pairs.append((min(a, b), max(a, b)))
        if pairs:
            pairs.sort()
            p = np.array([a for a, _ in pairs], dtype=np.intp)
            q = np.array([b for _, b in pairs], dtype=np.intp)
            steps.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(steps)


def _jacobi(a: np.ndarray, tol: float):
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    target = tol * np.linalg.norm(a)
    steps = _round_robin(n)
    for _ in range(MAX_SWEEPS + 1):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= target:
            return np.diag(a).copy(), v
        for p, q in steps:
            apq = a[p, q]
            live = apq != 0.0
            if not live.all():
                if not live.any():
                    continue
                p, q, apq = p[live], q[live], apq[live]
            tau = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            c = 1.0 / np.hypot(1.0, t)
            s = t * c

            ap, aq = a[:, p], a[:, q]
            a[:, p] = ap * c - aq * s
            a[:, q] = ap * s + aq * c
            ap, aq = a[p, :], a[q, :]
            cc, ss = c[:, None], s[:, None]
            a[p, :] = cc * ap - ss * aq
            a[q, :] = ss * ap + cc * aq
            a[p, q] = 0.0
            a[q, p] = 0.0

            vp, vq = v[:, p], v[:, q]
            v[:, p] = vp * c - vq * s
            v[:, q] = vp * s + vq * c
    raise NoConvergence(f"Jacobi did not converge in {MAX_SWEEPS} sweeps (n={n})")


def canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive (lowest index on ties)."""
    mag = np.abs(vectors)
    top = mag.max(axis=0)
    first = np.argmax(mag >= top * (1.0 - SIGN_TIE_RTOL), axis=0)
    signs = np.sign(vectors[first, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _pick_method(n: int, method: str) -> str:
    if method == "auto":
        return "jacobi" if n <= JACOBI_MAX_N else "lapack"
    if method not in ("jacobi", "lapack"):
        raise BadInput(f"unknown eigensolver {method!r}")
    return method


def sym_eigen(m, tol: float = 1e-12, method: str = "auto") -> EigenSystem:
    """Full eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    m : SymMatrix or array-like
    tol : float
        Jacobi stops once the off-diagonal Frobenius norm is at most
        ``tol * ||M||_F``.  Must lie in ``(0, 1e-4]``.
    method : {"auto", "jacobi", "lapack"}
        ``auto`` runs Jacobi up to ``JACOBI_MAX_N`` rows and LAPACK beyond.
    """
    if not 0.0 < tol <= 1e-4:
        raise BadInput(f"tol must lie in (0, 1e-4], got {tol}")
    a = _sym_array(m)
    method = _pick_method(a.shape[0], method)
    if method == "jacobi":
        vals, vecs = _jacobi(a, tol)
    else:
        vals, vecs = np.linalg.eigh(a)
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = canonical_signs(vecs[:, order])
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return EigenSystem(vals, vecs)


def sym_eigvals(m, method: str = "auto") -> np.ndarray:
    """Eigenvalues only, descending."""
    a = _sym_array(m)
    if _pick_method(a.shape[0], method) == "jacobi":
        return sym_eigen(a, method="jacobi").values
    return np.linalg.eigvalsh(a)[::-1].copy()


def spectral_norm(m, method: str = "auto") -> float:
    """Largest eigenvalue magnitude."""
    vals = sym_eigvals(m, method=method)
    return float(max(abs(vals[0]), abs(vals[-1])))


def rank_k_reconstruct(e: EigenSystem, k: int) -> SymMatrix:
    """Sum of ``lambda v v^T`` over the ``k`` eigenpairs largest in magnitude.

    Ties in magnitude are resolved in favour of the smaller index.
    """
    n = e.n
    if not 1 <= k <= n:
        raise BadInput(f"k must lie in [1, {n}], got {k}")
    idx = np.argsort(-np.abs(e.values), kind="stable")[:k]
    v = e.vectors[:, idx]
    out = (v * e.values[idx]) @ v.T
    return SymMatrix((out + out.T) / 2)


def _small_svd(a: np.ndarray):
    """SVD of a small square matrix through the Jacobi kernel on ``A^T A``."""
    d = a.shape[1]
    es = sym_eigen(a.T @ a, method="jacobi")
    sig = np.sqrt(np.clip(es.values, 0.0, None))
    v = np.array(es.vectors)
    av = a @ v
    cutoff = 1e-10 * max(1.0, sig[0])
    cols = []
    for i in range(d):
        if sig[i] > cutoff:
            w = av[:, i] / sig[i]
            for c in cols:
                w = w - (c @ w) * c
            cols.append(w / np.linalg.norm(w))
            continue
        # zero singular value: complete with a standard basis direction
        for k in range(a.shape[0]):
            w = np.zeros(a.shape[0])
            w[k] = 1.0
            for c in cols:
                w = w - (c @ w) * c
            nrm = np.linalg.norm(w)
            if nrm > 0.5:
                cols.append(w / nrm)
                break
    return np.column_stack(cols), sig, v


def principal_angles(u, v) -> PrincipalAngles:
    """Principal angles between two equal-dimension subspaces, ascending."""
    bu, bv = _basis(u), _basis(v)
    if bu.dim != bv.dim or bu.d != bv.d:
        raise DimMismatch(f"bases are {bu.dim}x{bu.d} and {bv.dim}x{bv.d}")
    a = bu.vectors.T @ bv.vectors
    _, cos, _ = _small_svd(a)
    # arccos is inaccurate near 0; take small angles from the sines of the residual
    _, sin, _ = _small_svd(bv.vectors - bu.vectors @ a)
    sin = sin[::-1]
    small = sin < cos
    angles = np.where(small, np.arcsin(np.clip(sin, 0.0, 1.0)), np.arccos(np.clip(cos, 0.0, 1.0)))
    return PrincipalAngles(angles)


def align_basis(x, y) -> OrthonormalBasis:
    """Rotate the basis ``x`` within its span to line up with ``y`` column by column.

    With ``U S V^T`` the SVD of ``X^T Y`` the result is ``X U V^T``; then
    ``Xhat^T Y = V S V^T`` and, for ``delta = sin`` of the largest principal
    angle, ``<xhat_i, y_i> >= 1 - delta^2`` and ``|<xhat_i, y_j>| <= delta^2``.
    """
    bx, by = _basis(x), _basis(y)
    if bx.dim != by.dim or bx.d != by.d:
        raise DimMismatch(f"bases are {bx.dim}x{bx.d} and {by.dim}x{by.d}")
    uu, _, vv = _small_svd(bx.vectors.T @ by.vectors)
    xhat = bx.vectors @ (uu @ vv.T)
    # one Gram-Schmidt pass keeps the result orthonormal to working precision
    q, r = np.linalg.qr(xhat)
    xhat = q * np.sign(np.diag(r))
    return OrthonormalBasis(xhat)


def quad_form(x, h, y) -> float:
    """``<x, H y>``."""
    a = _sym_array(h)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (a.shape[0],) or y.shape != (a.shape[0],):
        raise DimMismatch(f"vectors {x.shape}, {y.shape} do not match n={a.shape[0]}")
    return float(x @ a @ y)


def span_h(h, basis) -> float:
    """Exact ``max |<x, H x>|`` over unit ``x`` in the span of ``basis``.

    This is the spectral norm of the compressed matrix ``B^T H B``.
    """
    a = _sym_array(h)
    b = _basis(basis)
    if b.dim != a.shape[0]:
        raise DimMismatch(f"basis dimension {b.dim} != n={a.shape[0]}")
    c = b.vectors.T @ a @ b.vectors
    return spectral_norm((c + c.T) / 2)


# --------------------------------------------------------------------------
# text format: line 1 holds n, then n rows of n numbers

PathType = Union[str, PathLike]


def read_matrix(path: PathType) -> SymMatrix:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise BadInput(f"{path}: empty matrix file")
    try:
        n = int(lines[0].strip())
        rows = [[float(tok) for tok in ln.split()] for ln in lines[1:]]
    except ValueError as exc:
        raise BadInput(f"{path}: {exc}") from None
    if n < 1 or len(rows) != n or any(len(r) != n for r in rows):
        raise BadInput(f"{path}: expected {n} rows of {n} values")
    return SymMatrix(rows)


def write_matrix(path: PathType, m) -> None:
    a = _sym_array(m)
    with open(path, "w") as fh:
        fh.write(f"{a.shape[0]}\n")
        for row in a:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
