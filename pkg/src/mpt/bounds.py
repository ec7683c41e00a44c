"""Closed-form perturbation bounds for symmetric matrices.

Setting: ``M`` symmetric with eigenvalues ``lambda_1 >= ... >= lambda_n``,
a symmetric perturbation ``H`` and the eigenvalues ``lambda~`` of ``M + H``.
Eigen-indices (``t``, ``T``, ``r``, ``s``, ``s_down``) are 1-based
throughout this module, matching the usual mathematical convention;
arrays are still indexed from 0.

All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AllEqual,
    BadInput,
    BlockSizeMismatch,
    DimMismatch,
    DivergentSeries,
    IndexOutOfRange,
    NonPositiveGap,
    PreconditionViolated,
    SpectralDominance,
    ZeroGap,
)
from .linalg import OrthonormalBasis, SymMatrix

DEFAULT_XI = 1.1
DEFAULT_KAPPA = 0.5

BOUND_CSV_HEADER = ["kind", "t", "lower", "upper", "preconditions_met", "details"]
# reports whose single number is stored in ``value`` (and the ``upper`` column)
SCALAR_KINDS = frozenset({"dk_simple", "dk_subspace", "spectral_envelope"})


@dataclass(frozen=True)
class BoundReport:
    """Result of evaluating one bound.

    Interval bounds fill ``lower``/``upper``; scalar bounds fill ``value``.
    An upper end that needs an unmet precondition is left as ``None``.
    """

    kind: str
    t: Optional[int] = None
    lower: Optional[float] = None
    upper: Optional[float] = None
    value: Optional[float] = None
    preconditions_met: bool = True
    details: dict = field(default_factory=dict)

    def contains(self, x: float, slack: float = 0.0) -> bool:
        if self.lower is not None and x < self.lower - slack:
            return False
        if self.upper is not None and x > self.upper + slack:
            return False
        return True

    def to_csv_row(self) -> list:
        upper = self.value if self.kind in SCALAR_KINDS else self.upper
        details = ";".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        return [
            self.kind,
            "" if self.t is None else str(self.t),
            _fmt(self.lower),
            _fmt(upper),
            str(bool(self.preconditions_met)).lower(),
            details,
        ]

    @classmethod
    def from_csv_row(cls, row: Sequence[str]) -> "BoundReport":
        if len(row) != len(BOUND_CSV_HEADER):
            raise BadInput(f"expected {len(BOUND_CSV_HEADER)} columns, got {len(row)}")
        kind, t, lower, upper, met, details = row
        parsed = {}
        for item in filter(None, details.split(";")):
            key, _, raw = item.partition("=")
            parsed[key] = _parse(raw)
        up = _parse(upper) if upper else None
        return cls(
            kind=kind,
            t=int(t) if t else None,
            lower=_parse(lower) if lower else None,
            upper=None if kind in SCALAR_KINDS else up,
            value=up if kind in SCALAR_KINDS else None,
            preconditions_met=met == "true",
            details=parsed,
        )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _parse(raw: str):
    if raw in ("true", "false"):
        return raw == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def _values(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise BadInput("values must be a non-empty 1-d sequence")
    return v


def _check_index(name: str, i: int, lo: int, hi: int) -> None:
    if not lo <= i <= hi:
        raise IndexOutOfRange(f"{name}={i} outside [{lo}, {hi}]")


def _nonneg(**kw) -> None:
    for k, v in kw.items():
        if not v >= 0:
            raise BadInput(f"{k} must be nonnegative, got {v}")


# --------------------------------------------------------------------------
# classical bounds

def weyl_interval(lambda_t: float, H_norm: float) -> tuple:
    """``[lambda_t - ||H||, lambda_t + ||H||]``."""
    _nonneg(H_norm=H_norm)
    return (lambda_t - H_norm, lambda_t + H_norm)


def dk_simple_sin(perturbed_values, lambda_t: float, t: int, H_norm: float) -> BoundReport:
    """Davis-Kahan bound ``||H|| / delta_t`` on the sine of the eigenvector angle.

    ``delta_t`` is the distance from ``lambda_t`` to the nearest perturbed
    eigenvalue other than the ``t``-th.
    """
    vals = _values(perturbed_values)
    n = vals.size
    if n < 2:
        raise BadInput("need at least two eigenvalues")
    _check_index("t", t, 1, n)
    _nonneg(H_norm=H_norm)
    others = np.delete(vals, t - 1)
    delta = float(np.min(np.abs(others - lambda_t)))
    if delta == 0.0:
        raise ZeroGap(f"delta_t = 0 at t={t}")
    raw = H_norm / delta
    return BoundReport(
        kind="dk_simple",
        t=t,
        value=min(1.0, raw),
        details={"delta_t": delta, "H_norm": H_norm, "vacuous": raw > 1.0},
    )


def dk_subspace_sin(values, r: int, s: int, H_norm: float) -> BoundReport:
    """Bound ``2 sqrt(d) ||H|| / delta`` on ``||sin Theta||_F`` for eigenvectors ``r..s``.

    The gap uses the unperturbed spectrum,
    ``delta = min(lambda_{r-1} - lambda_r, lambda_s - lambda_{s+1})`` with
    ``lambda_0 = +inf`` and ``lambda_{n+1} = -inf``.
    """
    vals = _values(values)
    n = vals.size
    _check_index("r", r, 1, n)
    _check_index("s", s, r, n)
    _nonneg(H_norm=H_norm)
    above = math.inf if r == 1 else vals[r - 2] - vals[r - 1]
    below = math.inf if s == n else vals[s - 1] - vals[s]
    delta = float(min(above, below))
    if not delta > 0:
        raise NonPositiveGap(f"delta = {delta} for r={r}, s={s}")
    d = s - r + 1
    raw = 2.0 * math.sqrt(d) * H_norm / delta
    cap = math.sqrt(d)
    return BoundReport(
        kind="dk_subspace",
        t=r,
        value=min(cap, raw),
        details={"r": r, "s": s, "d": d, "delta": delta, "H_norm": H_norm, "vacuous": raw > cap},
    )


def pairwise_h(H, basis) -> tuple:
    """``(h_pair, h_span)``: largest ``|<u_i, H u_j>|`` over the basis, and ``d`` times it."""
    h = np.asarray(SymMatrix(H))
    b = basis if isinstance(basis, OrthonormalBasis) else OrthonormalBasis(basis)
    if b.dim != h.shape[0]:
        raise DimMismatch(f"basis dimension {b.dim} != n={h.shape[0]}")
    c = b.vectors.T @ h @ b.vectors
    h_pair = float(np.max(np.abs(c)))
    return h_pair, b.d * h_pair


# --------------------------------------------------------------------------
# eigenvalue intervals

def eigval_interval_top(values, T: int, t: int, h: float, H_norm: float,
                        h_source: str = "direct") -> BoundReport:
    """Interval for the ``t``-th perturbed eigenvalue from the top ``T`` eigenvectors.

    ``h`` bounds ``|<x, H x>|`` over unit ``x`` spanned by ``u_1 .. u_T``.
    The lower end ``lambda_t - h`` always holds.  The upper end
    ``lambda_t + h + ||H||^2 / (lambda_t - lambda_{T+1} + h - ||H||)`` needs
    ``lambda_t - lambda_{T+1} > 2 ||H|| - h`` and is ``None`` otherwise.
    """
    vals = _values(values)
    n = vals.size
    _check_index("T", T, 1, n - 1)
    _check_index("t", t, 1, T)
    _nonneg(h=h, H_norm=H_norm)
    lam = float(vals[t - 1])
    gap = lam - float(vals[T])
    met = gap > 2.0 * H_norm - h
    upper = lam + h + H_norm ** 2 / (gap + h - H_norm) if met else None
    return BoundReport(
        kind="eigval_top",
        t=t,
        lower=lam - h,
        upper=upper,
        preconditions_met=bool(met),
        details={
            "T": T,
            "h": h,
            "h_source": h_source,
            "H_norm": H_norm,
            "gap": gap,
            "weyl_lower": lam - H_norm,
            "weyl_upper": lam + H_norm,
        },
    )


def eigval_interval_bottom(values, s_down: int, t: int, h: float, H_norm: float,
                           h_source: str = "direct") -> BoundReport:
    """Interval for the ``t``-th perturbed eigenvalue from the bottom eigenvectors ``s_down .. n``.

    Obtained by applying :func:`eigval_interval_top` to ``-M`` and ``-H``:
    lower ``lambda_t - h - ||H||^2 / (lambda_{s_down-1} - lambda_t + h - ||H||)``
    (present only when ``lambda_{s_down-1} - lambda_t > 2 ||H|| - h``),
    upper ``lambda_t + h``.
    """
    vals = _values(values)
    n = vals.size
    _check_index("s_down", s_down, 2, n)
    _check_index("t", t, s_down, n)
    mirrored = eigval_interval_top(-vals[::-1], n + 1 - s_down, n + 1 - t, h, H_norm, h_source)
    d = dict(mirrored.details)
    del d["T"]
    d["s_down"] = s_down
    d["weyl_lower"], d["weyl_upper"] = -d.pop("weyl_upper"), -d.pop("weyl_lower")
    return BoundReport(
        kind="eigval_bottom",
        t=t,
        lower=None if mirrored.upper is None else -mirrored.upper,
        upper=-mirrored.lower,
        preconditions_met=mirrored.preconditions_met,
        details=d,
    )


# --------------------------------------------------------------------------
# probabilistic ingredients

def hoeffding_tail(gamma: float, sigma: float) -> float:
    """``min(1, 2 exp(-gamma^2 / (8 sigma^2)))``."""
    if not (gamma > 0 and sigma > 0):
        raise BadInput("gamma and sigma must be positive")
    return min(1.0, 2.0 * math.exp(-gamma ** 2 / (8.0 * sigma ** 2)))


def spectral_norm_envelope(sigma: float, B: float, n: int, C: float = 3.0,
                           C_prime: float = 0.0) -> BoundReport:
    """Envelope ``2 sigma sqrt(n) + C sqrt(B sigma) n^(1/4) log n`` on ``||H||``.

    ``C`` and ``C_prime`` are unspecified constants in the asymptotic
    statement; the defaults are desk-scale calibrations for +-1 entries.
    ``preconditions_met`` reports ``sigma >= C' n^(-1/2) B log^2 n``.
    """
    if not (sigma > 0 and B > 0):
        raise BadInput("sigma and B must be positive")
    if n < 2:
        raise BadInput("n must be at least 2")
    ln = math.log(n)
    value = 2.0 * sigma * math.sqrt(n) + C * math.sqrt(B * sigma) * n ** 0.25 * ln
    met = sigma >= C_prime * B * ln ** 2 / math.sqrt(n)
    return BoundReport(
        kind="spectral_envelope",
        value=value,
        preconditions_met=bool(met),
        details={"sigma": sigma, "B": B, "n": n, "C": C, "C_prime": C_prime},
    )


# --------------------------------------------------------------------------
# gaps and angles

@dataclass(frozen=True)
class GapInfo:
    """Multiplicities and gaps of a spectrum.

    ``mult[i]`` and ``gap[i]`` are ``d`` and ``delta`` for the eigenvalue at
    array position ``i``; the pairwise helpers take 1-based indices.
    """

    values: np.ndarray
    tol: float
    mult: np.ndarray
    gap: np.ndarray

    def inv_delta(self, s: int, t: int) -> float:
        """``min{d_i / delta_i : i in {s, t}}``."""
        i, j = s - 1, t - 1
        return float(min(self.mult[i] / self.gap[i], self.mult[j] / self.gap[j]))

    def delta(self, s: int, t: int) -> float:
        return 1.0 / self.inv_delta(s, t)

    def inv_delta_sqrt(self, s: int, t: int) -> float:
        """``min{sqrt(d_i) / delta_i : i in {s, t}}``, the variant the angle bounds produce."""
        i, j = s - 1, t - 1
        return float(min(math.sqrt(self.mult[i]) / self.gap[i],
                         math.sqrt(self.mult[j]) / self.gap[j]))

    def delta_sqrt(self, s: int, t: int) -> float:
        return 1.0 / self.inv_delta_sqrt(s, t)

    def cluster(self, s: int) -> np.ndarray:
        """0-based positions ``i`` with ``|lambda_i - lambda_s| <= tol``."""
        return np.flatnonzero(np.abs(self.values - self.values[s - 1]) <= self.tol)


def gap_info(values, equality_tol: Optional[float] = None) -> GapInfo:
    vals = _values(values)
    if np.any(np.diff(vals) > 0):
        raise BadInput("values must be sorted in descending order")
    if equality_tol is None:
        equality_tol = 1e-9 * float(np.max(np.abs(vals)))
    _nonneg(equality_tol=equality_tol)
    dist = np.abs(vals[:, None] - vals[None, :])
    same = dist <= equality_tol
    mult = same.sum(axis=1)
    if np.any(mult == vals.size):
        raise AllEqual("a single eigenvalue cluster covers the whole spectrum")
    gap = np.where(same, np.inf, dist).min(axis=1)
    for a in (vals, mult, gap):
        a.setflags(write=False)
    return GapInfo(values=vals, tol=float(equality_tol), mult=mult, gap=gap)


def dk_angle_bounds(info: GapInfo, H_norm: float, t: int, s: int) -> tuple:
    """``(sin_t, cos_s)`` bounds for an aligned eigenbasis, each clamped to 1.

    ``sin_t = 2 sqrt(2 d_t) ||H|| / delta_t`` and
    ``cos_s = 2 sqrt(2) ||H|| min{sqrt(d_i) / delta_i : i in {s, t}}``.
    """
    n = info.values.size
    _check_index("t", t, 1, n)
    _check_index("s", s, 1, n)
    _nonneg(H_norm=H_norm)
    if not (info.gap[t - 1] > 0 and info.gap[s - 1] > 0):
        raise ZeroGap("eigengap is zero")
    sin_t = 2.0 * math.sqrt(2.0 * info.mult[t - 1]) * H_norm / info.gap[t - 1]
    cos_s = 2.0 * math.sqrt(2.0) * H_norm * info.inv_delta_sqrt(s, t)
    return min(1.0, float(sin_t)), min(1.0, float(cos_s))


# --------------------------------------------------------------------------
# entrywise eigenvector bounds

def _entry_inputs(values, zeta, vectors, t, alpha):
    vals = _values(values)
    n = vals.size
    z = np.asarray(zeta, dtype=float)
    u = np.asarray(vectors, dtype=float)
    if u.ndim != 2 or u.shape[0] != n or not 1 <= u.shape[1] <= n or z.shape != u.shape:
        raise DimMismatch("zeta and vectors must be n x m arrays of matching shape, m <= n")
    m = u.shape[1]
    if np.any(vals[m:] != 0):
        raise DimMismatch("only eigenvectors with zero eigenvalue may be omitted")
    _check_index("t", t, 1, m)
    if alpha is not None:
        _check_index("alpha", alpha, 0, n - 1)
        z, u = z[alpha], u[alpha]
    return vals[:m], z, u


def entrywise_bound_dk(values, info: GapInfo, H_norm: float, t: int, zeta, vectors,
                       alpha: Optional[int] = None):
    """Bound on ``|v~_alpha - u_alpha|`` for the ``t``-th eigenvector using Weyl and Davis-Kahan inputs.

    Parameters
    ----------
    values : array_like
        Eigenvalues of ``M``, descending.
    info : GapInfo
        From :func:`gap_info` on ``values``.
    H_norm : float
        Spectral norm of ``H``.
    t : int
        1-based eigenvector index.
    zeta : ndarray, shape (n, m)
        Column ``s`` is ``zeta(u_s; H, lambda_t)``.
    vectors : ndarray, shape (n, m)
        Column ``s`` is the eigenvector ``u_s`` of ``M``.  Trailing
        eigenvectors may be left out when their eigenvalues are zero, since
        their terms vanish.
    alpha : int, optional
        0-based entry.  When omitted the bound for every entry is returned.

    Returns
    -------
    float or ndarray
    """
    vals, z, u = _entry_inputs(values, zeta, vectors, t, alpha)
    _nonneg(H_norm=H_norm)
    lam_t = abs(vals[t - 1])
    lam_star = lam_t - H_norm
    if not lam_star > 0:
        raise SpectralDominance(f"|lambda_t| = {lam_t} <= ||H|| = {H_norm}")
    i = t - 1
    d_t, delta_t = info.mult[i], info.gap[i]
    ratio = lam_t / lam_star
    out = (np.abs(u[..., i]) * (8.0 * d_t * (H_norm / delta_t) ** 2 + H_norm / lam_star)
           + ratio ** 2 * z[..., i])
    coef = np.array([abs(vals[s]) * info.inv_delta(s + 1, t) if s != i and vals[s] != 0 else 0.0
                     for s in range(vals.size)])
    live = coef > 0
    if np.any(live):
        inner = np.abs(u[..., live]) + ratio * z[..., live]
        out = out + 2.0 * math.sqrt(2.0) * H_norm / lam_star * (inner @ coef[live])
    return float(out) if alpha is not None else out


def entrywise_bound_general(values, eps: float, sin_t: float, cos_list, zeta, vectors,
                            t: int, alpha: Optional[int] = None):
    """Bound on ``|v~_alpha - u_alpha|`` from eigenvalue and angle information.

    ``eps`` is the absolute eigenvalue shift ``|lambda_t - lambda~_t|`` (or
    an upper bound on it), ``sin_t`` bounds the sine of the angle between
    ``v~_t`` and ``u_t`` and ``cos_list[s]`` bounds ``|cos|`` of the angle
    between ``v~_t`` and ``u_s`` (entry ``t - 1`` is ignored).  ``zeta`` and
    ``vectors`` are as in :func:`entrywise_bound_dk`.
    """
    vals, z, u = _entry_inputs(values, zeta, vectors, t, alpha)
    _nonneg(eps=eps, sin_t=sin_t)
    cos = np.abs(np.asarray(cos_list, dtype=float))
    if cos.shape != vals.shape:
        raise DimMismatch("cos_list needs one entry per supplied eigenvector")
    i = t - 1
    lam_t = abs(vals[i])
    denom = lam_t - eps
    if not denom > 0:
        raise SpectralDominance(f"|lambda_t| = {lam_t} <= eps = {eps}")
    ratio = lam_t / denom
    out = np.abs(u[..., i]) * (sin_t ** 2 + eps / denom) + ratio ** 2 * z[..., i]
    coef = np.abs(vals) * cos / denom
    coef[i] = 0.0
    live = coef > 0
    if np.any(live):
        out = out + (np.abs(u[..., live]) + ratio * z[..., live]) @ coef[live]
    return float(out) if alpha is not None else out


# --------------------------------------------------------------------------
# tail bounds on the Neumann remainder

@dataclass(frozen=True)
class ZetaBoundParams:
    """Inputs shared by the zeta tail bounds.

    ``gamma`` is the moment scale (``E|H_ij / gamma|^p <= 1/n`` for
    ``p >= 2``), ``lam`` the reference eigenvalue, ``H_norm`` the spectral
    norm of ``H`` and ``u_inf``/``u_two`` the norms of the vector the series
    acts on.
    """

    gamma: float
    lam: float
    n: int
    H_norm: float
    u_inf: float = 1.0
    u_two: float = 1.0
    xi: float = DEFAULT_XI
    kappa: float = DEFAULT_KAPPA

    @property
    def b(self) -> float:
        return 2.0 / (self.kappa + 1.0)


def zeta_fail_prob(n: int, xi: float, kappa: float, plus_one: bool = True) -> float:
    """``n^(-1/4 (log_b n)^(xi-1) (log_b e)^(-xi) [+ 1])`` capped at 1, ``b = 2 / (kappa + 1)``.

    The ``+ 1`` accounts for a union bound over the ``n`` entries; without
    it this is the per-entry probability of the interaction estimate.
    """
    ln_b = math.log(2.0 / (kappa + 1.0))
    ln_n = math.log(n)
    expo = -0.25 * (ln_n / ln_b) ** (xi - 1.0) * (1.0 / ln_b) ** (-xi)
    if plus_one:
        expo += 1.0
    log_p = expo * ln_n
    return 1.0 if log_p >= 0 else math.exp(log_p)


def _zeta_parts(p: ZetaBoundParams) -> tuple:
    if p.n < 2:
        raise BadInput("n must be at least 2")
    _nonneg(gamma=p.gamma, H_norm=p.H_norm, u_inf=p.u_inf, u_two=p.u_two)
    if not p.xi > 1:
        raise PreconditionViolated(f"xi > 1 violated (xi={p.xi})")
    if not 0 < p.kappa < 1:
        raise PreconditionViolated(f"0 < kappa < 1 violated (kappa={p.kappa})")
    if not p.lam > p.H_norm:
        raise PreconditionViolated(f"lambda > ||H|| violated ({p.lam} <= {p.H_norm})")
    big_l = math.log(p.n) ** p.xi
    if not p.gamma * big_l < p.lam:
        raise PreconditionViolated(
            f"gamma (log n)^xi < lambda violated ({p.gamma * big_l} >= {p.lam})")
    first = p.gamma * big_l / (p.lam - p.gamma * big_l)
    r = p.H_norm / p.lam
    e = math.floor(p.kappa / 8.0 * big_l + 1.0)
    second = r ** e / (1.0 - r)
    return first, second, zeta_fail_prob(p.n, p.xi, p.kappa)


def zeta_tail_bound(p: ZetaBoundParams) -> tuple:
    """``(bound, fail_prob)`` for ``max_alpha |sum_{k>=1} (H/lambda)^k u|_alpha``.

    ``bound = gamma L / (lambda - gamma L) ||u||_inf + r^e / (1 - r) ||u||_2``
    with ``L = (log n)^xi``, ``r = ||H|| / lambda`` and
    ``e = floor(kappa L / 8 + 1)``.
    """
    first, second, fail = _zeta_parts(p)
    return first * p.u_inf + second * p.u_two, fail


def zeta_tail_bound_mag(p: ZetaBoundParams, F_size: int, alpha_in_F: bool) -> tuple:
    """As :func:`zeta_tail_bound` for an entry ``alpha``, when ``|H_ij / gamma| <= n^(-1/2)``.

    ``F`` is the support of ``u``; entries outside it gain the factor
    ``sqrt(|F| / n)`` on the first term.
    """
    if not 0 <= F_size <= p.n:
        raise BadInput(f"|F| must lie in [0, {p.n}]")
    first, second, fail = _zeta_parts(p)
    beta = 1.0 if alpha_in_F else math.sqrt(F_size / p.n)
    return beta * first * p.u_inf + second * p.u_two, fail


def zeta_tail_bound_block(p: ZetaBoundParams, block_sizes, block_values, alpha_block: int) -> tuple:
    """Entry bound for a block vector ``u = sum_k c_k 1_{F_k}``.

    ``alpha_block`` is the 1-based block holding the entry.  The norms in
    ``p`` are ignored; each block contributes with ``||1_F||_inf = 1`` and
    ``||1_F||_2 = sqrt(|F|)``.  The failure probability is multiplied by
    the number of blocks (capped at 1).
    """
    sizes = np.asarray(block_sizes, dtype=int)
    c = np.abs(np.asarray(block_values, dtype=float))
    if sizes.ndim != 1 or sizes.shape != c.shape or sizes.size == 0:
        raise BadInput("block_sizes and block_values must be equal-length sequences")
    if np.any(sizes < 0) or int(sizes.sum()) != p.n:
        raise BlockSizeMismatch(f"block sizes sum to {int(sizes.sum())}, expected n={p.n}")
    _check_index("alpha_block", alpha_block, 1, sizes.size)
    first, second, fail = _zeta_parts(p)
    beta = np.sqrt(sizes / p.n)
    beta[alpha_block - 1] = 1.0
    bound = float(np.sum(c * (beta * first + np.sqrt(sizes) * second)))
    return bound, min(1.0, fail * sizes.size)


def series_split_bound(beta: float, Q: float, eta: float, X_norm: float, K: int,
                       u_two: float) -> float:
    """``beta eta Q / (1 - eta Q) + u_two (eta ||X||)^(K+1) / (1 - eta ||X||)``.

    Bounds ``sum_{k>=1} |[(eta X)^k u]_alpha|`` given
    ``|(X^k u)_alpha| <= beta Q^k`` for ``k <= K``.
    """
    _nonneg(beta=beta, Q=Q, eta=eta, X_norm=X_norm, u_two=u_two)
    if K < 0:
        raise BadInput("K must be nonnegative")
    if not (eta * Q < 1 and eta * X_norm < 1):
        raise DivergentSeries(f"eta={eta} must be below min(1/Q, 1/||X||)")
    head = beta * eta * Q / (1.0 - eta * Q)
    tail = u_two * (eta * X_norm) ** (K + 1) / (1.0 - eta * X_norm)
    return head + tail
