"""Seeded desk-scale experiments and the bound-soundness verification suite.

Every experiment returns its rows as a list of dicts and, when an output
path is configured, writes them as CSV: a ``# schema=...`` comment line,
the header, then rows sorted by ``(n, trial)``.  Each trial draws from its
own generator seeded by ``(base_seed, n, trial)``, so a row never depends
on which other rows were computed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Optional, Sequence, Union

import numpy as np

from . import bounds as bd
from .blockmodel import Blockmodel, exact_sbm_spectrum, sample_graph
from .clustering import ClusterConfig, Clustering, cluster_with_details, matrix_errors, recovery_check
from .errors import BadInput, PreconditionViolated
from .linalg import (
    OrthonormalBasis,
    align_basis,
    principal_angles,
    span_h,
    spectral_norm,
    sym_eigen,
    sym_eigvals,
)
from .neumann import TruncationCapExceeded, neumann_series_apply

PathType = Union[str, PathLike]

EIGVAL_COLUMNS = [
    "n", "trial", "rho", "lambda_1", "lambda_1_pert", "abs_err", "H_norm", "h",
    "lower", "upper", "preconditions_met", "weyl_lower", "weyl_upper",
]
EIGVEC_COLUMNS = [
    "n", "trial", "rho", "err_two", "err_inf", "ratio_inf_two", "H_norm",
    "dk_sin", "dk_two_bound", "entrywise_dk_max", "zeta_inf", "P_max",
]
RECOVERY_COLUMNS = [
    "n", "trial", "rho", "K", "tau", "c", "exact", "misclassified", "num_clusters",
    "max_err", "frob_err", "entrywise_scale",
]
VIOLATION_COLUMNS = ["instance", "n", "check", "t", "observed", "bound"]
SUMMARY_COLUMNS = ["check", "evaluated", "violations"]

SCHEMAS = {
    "eigval": "mpt.eigval.v1",
    "eigvec": "mpt.eigvec.v1",
    "recovery": "mpt.recovery.v1",
    "violations": "mpt.violations.v1",
    "verify": "mpt.verify.v1",
}


def default_P0(K: int) -> np.ndarray:
    """``[[0.5]]`` for one community, else ``diag(1, 0.9, 0.8, ...)`` floored at 0.1."""
    if K == 1:
        return np.array([[0.5]])
    return np.diag(np.maximum(0.1, 1.0 - 0.1 * np.arange(K)))


@dataclass
class ExperimentConfig:
    """Parameters shared by the experiments.

    ``rho_rule`` is ``"constant"`` (use ``rho``) or ``"log"``, which sets
    ``rho = min(1, (log n)^rho_eps / n)``.  Every ``n`` must be a multiple
    of ``K``; communities are balanced.
    """

    name: str = "eigval"
    n_list: Sequence[int] = (100, 200, 400, 800)
    K: int = 1
    P0: Optional[np.ndarray] = None
    rho_rule: str = "constant"
    rho: float = 1.0
    rho_eps: float = 3.0
    trials: int = 20
    base_seed: int = 0
    xi: float = bd.DEFAULT_XI
    kappa: float = bd.DEFAULT_KAPPA
    c: float = 1.0
    no_self_loops: bool = False
    output: Optional[PathType] = None

    def __post_init__(self):
        self.n_list = [int(n) for n in self.n_list]
        if self.trials < 1:
            raise BadInput("trials must be at least 1")
        if not self.n_list or any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise BadInput("n_list must be non-empty and strictly ascending")
        if self.K < 1 or any(n % self.K for n in self.n_list):
            raise BadInput("every n must be a positive multiple of K")
        if self.rho_rule not in ("constant", "log"):
            raise BadInput(f"unknown rho rule {self.rho_rule!r}")
        self.P0 = default_P0(self.K) if self.P0 is None else np.array(self.P0, dtype=float).reshape(self.K, self.K)

    def rho_for(self, n: int) -> float:
        if self.rho_rule == "constant":
            return float(self.rho)
        return min(1.0, math.log(n) ** self.rho_eps / n)

    def blockmodel(self, n: int) -> Blockmodel:
        return Blockmodel(np.repeat(np.arange(self.K), n // self.K), self.P0, self.rho_for(n))


def trial_seed(base_seed: int, n: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(base_seed), int(n), int(trial)])


# --------------------------------------------------------------------------
# CSV

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def write_csv(path: PathType, schema: str, columns: Sequence[str], rows: Sequence[dict]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={schema}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in columns])


def read_csv(path: PathType) -> tuple:
    """Return ``(schema, header, rows)`` with rows as lists of strings."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema="):
            raise BadInput(f"{path}: missing schema comment")
        r = list(csv.reader(fh))
    return first[len("# schema="):], r[0], r[1:]


def _finish(cfg: ExperimentConfig, kind: str, columns, rows) -> list:
    rows.sort(key=lambda r: (r["n"], r["trial"]))
    if cfg.output is not None:
        write_csv(cfg.output, SCHEMAS[kind], columns, rows)
    return rows


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def _padded_values(top: np.ndarray, n: int) -> np.ndarray:
    vals = np.concatenate([top, np.zeros(n - top.size)])
    return np.sort(vals)[::-1]


# --------------------------------------------------------------------------
# experiments

def run_eigval_experiment(cfg: ExperimentConfig) -> list:
    """Top eigenvalue shift against Weyl and the span-restricted interval."""
    rows = []
    for n in cfg.n_list:
        bm = cfg.blockmodel(n)
        exact = exact_sbm_spectrum(bm)
        vals = _padded_values(exact.values, n)
        # top block: the positive part of the spectrum (at least one vector)
        T = min(max(1, int(np.sum(exact.values > 0))), n - 1)
        basis = OrthonormalBasis(exact.vectors[:, :T])
        for trial in range(cfg.trials):
            g = sample_graph(bm, trial_seed(cfg.base_seed, n, trial), cfg.no_self_loops)
            lam_pert = float(sym_eigvals(g.A)[0])
            H_norm = spectral_norm(g.H)
            h = span_h(g.H, basis)
            rep = bd.eigval_interval_top(vals, T, 1, h, H_norm)
            rows.append({
                "n": n, "trial": trial, "rho": bm.rho,
                "lambda_1": vals[0], "lambda_1_pert": lam_pert,
                "abs_err": abs(lam_pert - vals[0]), "H_norm": H_norm, "h": h,
                "lower": rep.lower, "upper": rep.upper,
                "preconditions_met": rep.preconditions_met,
                "weyl_lower": vals[0] - H_norm, "weyl_upper": vals[0] + H_norm,
            })
    return _finish(cfg, "eigval", EIGVAL_COLUMNS, rows)


def run_eigvec_experiment(cfg: ExperimentConfig) -> list:
    """Top eigenvector error in 2- and infinity-norm against Davis-Kahan and the entrywise bound."""
    rows = []
    for n in cfg.n_list:
        bm = cfg.blockmodel(n)
        exact = exact_sbm_spectrum(bm)
        vals = _padded_values(exact.values, n)
        info = bd.gap_info(vals) if np.ptp(vals) > 0 else None
        u = np.array(exact.vectors)
        cluster1 = np.flatnonzero(np.abs(exact.values - exact.values[0]) <= 1e-9 * max(1.0, abs(exact.values[0])))
        for trial in range(cfg.trials):
            g = sample_graph(bm, trial_seed(cfg.base_seed, n, trial), cfg.no_self_loops)
            sym = sym_eigen(g.A)
            H_norm = spectral_norm(g.H)
            v = sym.vectors[:, cluster1]
            u_hat = np.array(align_basis(u[:, cluster1], v).vectors) if vals[0] != 0 else u[:, cluster1]
            diff = sym.vectors[:, 0] - u_hat[:, 0]
            err_two = float(np.linalg.norm(diff))
            err_inf = float(np.max(np.abs(diff)))
            row = {"n": n, "trial": trial, "rho": bm.rho, "err_two": err_two, "err_inf": err_inf,
                   "ratio_inf_two": err_inf / err_two if err_two > 0 else 0.0, "H_norm": H_norm}
            if H_norm > 0 and n >= 2:
                dk = bd.dk_simple_sin(sym.values, vals[0], 1, H_norm).value
                row.update(dk_sin=dk, dk_two_bound=math.sqrt(2.0) * dk)
            else:
                row.update(dk_sin=0.0, dk_two_bound=0.0)
            if info is not None and np.all(exact.values >= 0) and abs(vals[0]) > H_norm:
                basis = u.copy()
                basis[:, cluster1] = u_hat
                try:
                    series = neumann_series_apply(g.H, vals[0], basis, H_norm=H_norm)
                except TruncationCapExceeded:
                    series = None
                if series is not None:
                    ent = bd.entrywise_bound_dk(vals, info, H_norm, 1, series.per_entry_abs, basis)
                    row.update(entrywise_dk_max=float(np.max(ent)),
                               zeta_inf=float(np.max(series.per_entry_abs[:, 0])),
                               P_max=series.P_max)
            rows.append(row)
    return _finish(cfg, "eigvec", EIGVEC_COLUMNS, rows)


def run_recovery_experiment(cfg: ExperimentConfig) -> list:
    """Exact-recovery rate of the thresholded spectral clustering."""
    rows = []
    for n in cfg.n_list:
        bm = cfg.blockmodel(n)
        truth = Clustering(bm.z)
        scale = math.sqrt(bm.rho / n) * math.log(n) ** cfg.xi
        ccfg = ClusterConfig(K=bm.K, tau="auto", xi=cfg.xi, c=cfg.c, rho=bm.rho)
        for trial in range(cfg.trials):
            g = sample_graph(bm, trial_seed(cfg.base_seed, n, trial), cfg.no_self_loops)
            found, m_hat, tau = cluster_with_details(g.A, ccfg)
            exact, mis = recovery_check(found, truth)
            max_err, frob_err = matrix_errors(m_hat, g.M)
            rows.append({
                "n": n, "trial": trial, "rho": bm.rho, "K": bm.K, "tau": tau, "c": cfg.c,
                "exact": exact, "misclassified": mis, "num_clusters": found.num_clusters,
                "max_err": max_err, "frob_err": frob_err, "entrywise_scale": scale,
            })
    return _finish(cfg, "recovery", RECOVERY_COLUMNS, rows)


# --------------------------------------------------------------------------
# soundness sweep

SCALE_FACTORS = (0.01, 0.1, 0.3)
CHECKS = (
    "weyl", "dk_simple", "dk_subspace", "eigval_top", "eigval_top_pairwise",
    "eigval_bottom", "eigval_bottom_pairwise", "dk_sin", "dk_cos",
    "entrywise_dk", "entrywise_general",
)


@dataclass
class SweepResult:
    instances: int
    evaluated: dict = field(default_factory=lambda: {c: 0 for c in CHECKS})
    violations: list = field(default_factory=list)
    skipped: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def random_instance(rng: np.random.Generator, n_range=(3, 20)) -> tuple:
    """Random ``(M, H)`` with a known spectrum, possibly with repeated eigenvalues.

    ``||H||`` is a fixed fraction of the smallest gap between distinct
    eigenvalues of ``M``.
    """
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    if rng.random() < 0.5:
        levels = n
        mult = np.ones(n, dtype=int)
    else:
        levels = int(rng.integers(2, n + 1))
        mult = np.ones(levels, dtype=int) + rng.multinomial(n - levels, np.ones(levels) / levels)
    while True:
        lv = np.sort(rng.uniform(-5.0, 5.0, size=levels))[::-1]
        if np.min(-np.diff(lv)) >= 0.02:
            break
    spectrum = np.repeat(lv, mult)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    m = (q * spectrum) @ q.T
    m = (m + m.T) / 2
    g = rng.standard_normal((n, n))
    g = (g + g.T) / 2
    gap = float(np.min(-np.diff(lv)))
    f = SCALE_FACTORS[int(rng.integers(len(SCALE_FACTORS)))]
    h = g * (f * gap / spectral_norm(g))
    return m, (h + h.T) / 2


def _clusters(info: bd.GapInfo) -> list:
    out, i, n = [], 0, info.values.size
    while i < n:
        members = info.cluster(i + 1)
        j = int(members.max()) + 1
        out.append(np.arange(i, j))
        i = j
    return out


def check_instance(m, h, norm_scale: float = 1.0, instance: int = 0) -> SweepResult:
    """Evaluate every bound on one ``(M, H)`` pair against the exact answer.

    ``norm_scale`` multiplies the ``||H||`` handed to the bounds; values
    below one make the bounds unsound and exist to prove the harness can
    fail.
    """
    res = SweepResult(instances=1)
    m = np.asarray(m, float)
    h = np.asarray(h, float)
    n = m.shape[0]
    em = sym_eigen(m)
    ep = sym_eigen(m + h)
    lam, lam_p = np.array(em.values), np.array(ep.values)
    true_norm = spectral_norm(h)
    H_norm = true_norm * norm_scale
    slack = 1e-9 * (1.0 + float(np.max(np.abs(lam))))
    info = bd.gap_info(lam)
    clusters = _clusters(info)

    def record(check, t, observed, bound):
        res.evaluated[check] += 1
        if observed > bound + slack:
            res.violations.append({"instance": instance, "n": n, "check": check, "t": t,
                                   "observed": float(observed), "bound": float(bound)})

    def record_interval(check, t, x, rep):
        res.evaluated[check] += 1
        if not rep.contains(x, slack):
            bound = rep.lower if rep.lower is not None and x < rep.lower else rep.upper
            res.violations.append({"instance": instance, "n": n, "check": check, "t": t,
                                   "observed": float(x), "bound": float(bound)})

    # Weyl
    for i in range(n):
        lo, hi = bd.weyl_interval(lam[i], H_norm)
        record_interval("weyl", i + 1, lam_p[i], bd.BoundReport("weyl", lower=lo, upper=hi))

    # classical Davis-Kahan for single vectors
    for i in range(n):
        try:
            rep = bd.dk_simple_sin(lam_p, lam[i], i + 1, H_norm)
        except PreconditionViolated:
            continue
        c = min(1.0, abs(float(em.vectors[:, i] @ ep.vectors[:, i])))
        record("dk_simple", i + 1, math.sqrt(max(0.0, 1.0 - c * c)), rep.value)

    # subspace Davis-Kahan on clusters and top blocks
    blocks = [(int(c[0]) + 1, int(c[-1]) + 1) for c in clusters]
    blocks += [(1, int(c[-1]) + 1) for c in clusters[1:-1]]
    for r, s in blocks:
        rep = bd.dk_subspace_sin(lam, r, s, H_norm)
        ang = principal_angles(em.vectors[:, r - 1:s], ep.vectors[:, r - 1:s])
        record("dk_subspace", r, ang.sin_frobenius(), rep.value)

    # eigenvalue intervals at cluster boundaries
    for c in clusters[:-1]:
        T = int(c[-1]) + 1
        top = OrthonormalBasis(em.vectors[:, :T])
        h_exact = span_h(h, top) * norm_scale
        h_pair = bd.pairwise_h(h, top)[1] * norm_scale
        for t in range(1, T + 1):
            for check, hv in (("eigval_top", h_exact), ("eigval_top_pairwise", h_pair)):
                rep = bd.eigval_interval_top(lam, T, t, hv, H_norm)
                record_interval(check, t, lam_p[t - 1], rep)
    for c in clusters[1:]:
        s_down = int(c[0]) + 1
        bottom = OrthonormalBasis(em.vectors[:, s_down - 1:])
        h_exact = span_h(h, bottom) * norm_scale
        h_pair = bd.pairwise_h(h, bottom)[1] * norm_scale
        for t in range(s_down, n + 1):
            for check, hv in (("eigval_bottom", h_exact), ("eigval_bottom_pairwise", h_pair)):
                rep = bd.eigval_interval_bottom(lam, s_down, t, hv, H_norm)
                record_interval(check, t, lam_p[t - 1], rep)

    # aligned eigenbasis of M: rotate each eigenspace towards the perturbed vectors
    u = np.array(em.vectors)
    for c in clusters:
        u[:, c] = align_basis(em.vectors[:, c], ep.vectors[:, c]).vectors
    inner = ep.vectors.T @ u  # inner[t, s] = <v~_t, u_s>

    for t in range(1, n + 1):
        i = t - 1
        sin_true = math.sqrt(max(0.0, 1.0 - min(1.0, inner[i, i] ** 2)))
        cos_true = np.abs(inner[i])
        for s in range(1, n + 1):
            sin_b, cos_b = bd.dk_angle_bounds(info, H_norm, t, s)
            if s == t:
                record("dk_sin", t, sin_true, sin_b)
            else:
                record("dk_cos", t, cos_true[s - 1], cos_b)

        if not abs(lam[i]) > true_norm:
            res.skipped += 1
            continue
        try:
            zeta = neumann_series_apply(h, lam[i], u, H_norm=true_norm).per_entry_abs
        except TruncationCapExceeded:
            res.skipped += 1
            continue
        err = np.abs(ep.vectors[:, i] - u[:, i])
        if abs(lam[i]) > H_norm:
            ent = bd.entrywise_bound_dk(lam, info, H_norm, t, zeta, u)
            record("entrywise_dk", t, float(np.max(err - ent)), 0.0)
        eps = abs(lam[i] - lam_p[i]) * norm_scale
        if abs(lam[i]) > eps:
            ent = bd.entrywise_bound_general(lam, eps, sin_true * norm_scale, cos_true * norm_scale,
                                             zeta, u, t)
            record("entrywise_general", t, float(np.max(err - ent)), 0.0)
    return res


def run_soundness_sweep(seed: int, instances: int = 1000, norm_scale: float = 1.0) -> SweepResult:
    total = SweepResult(instances=instances)
    for k in range(instances):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), k]))
        m, h = random_instance(rng)
        r = check_instance(m, h, norm_scale=norm_scale, instance=k)
        for c in CHECKS:
            total.evaluated[c] += r.evaluated[c]
        total.violations.extend(r.violations)
        total.skipped += r.skipped
    return total


def run_verification_suite(seed: int, report: Optional[PathType] = None,
                           violations_path: Optional[PathType] = None,
                           instances: int = 1000, norm_scale: float = 1.0) -> int:
    """Run the soundness sweep; return 0 when no bound is violated, 4 otherwise.

    ``report`` receives one row per check with evaluation and violation
    counts.  ``violations_path`` is written only when something failed.
    """
    res = run_soundness_sweep(seed, instances=instances, norm_scale=norm_scale)
    if report is not None:
        counts = {c: 0 for c in CHECKS}
        for v in res.violations:
            counts[v["check"]] += 1
        rows = [{"check": c, "evaluated": res.evaluated[c], "violations": counts[c]} for c in CHECKS]
        write_csv(report, SCHEMAS["verify"], SUMMARY_COLUMNS, rows)
    if res.violations and violations_path is not None:
        write_csv(violations_path, SCHEMAS["violations"], VIOLATION_COLUMNS, res.violations)
    return 0 if res.ok else 4


# --------------------------------------------------------------------------
# Monte Carlo checks of the probabilistic ingredients

def hoeffding_mc(u, v, gammas, trials: int, seed, batch: int = 20000) -> dict:
    """Empirical ``P(|<u, H v>| >= gamma)`` for symmetric +-1 noise (sub-Gaussian, sigma = 1).

    Returns a mapping ``gamma -> (frequency, 2 exp(-gamma^2 / 8))``.
    """
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    n = u.size
    if v.shape != (n,):
        raise BadInput("u and v must have the same length")
    iu, ju = np.triu_indices(n)
    # <u, H v> = sum_{i<=j} H_ij w_ij
    w = u[iu] * v[ju] + np.where(iu != ju, u[ju] * v[iu], 0.0)
    rng = np.random.default_rng(seed)
    gammas = [float(g) for g in gammas]
    hits = np.zeros(len(gammas), dtype=np.int64)
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        signs = rng.integers(0, 2, size=(b, w.size), dtype=np.int8) * 2 - 1
        vals = np.abs(signs @ w)
        hits += np.array([np.sum(vals >= g) for g in gammas])
        done += b
    return {g: (hits[i] / trials, bd.hoeffding_tail(g, 1.0)) for i, g in enumerate(gammas)}


def noise_gamma(bm: Blockmodel) -> float:
    """Smallest ``gamma >= 1`` with ``E|H_ij / gamma|^p <= 1/n`` for all ``p >= 2``.

    Centred Bernoulli entries satisfy ``|H_ij| <= 1``, so for ``gamma >= 1``
    the second moment ``q (1 - q) / gamma^2`` dominates the higher ones.
    """
    q = bm.rho * bm.P0
    return max(1.0, math.sqrt(bm.n * float(np.max(q * (1.0 - q)))))


def zeta_mc(bm: Blockmodel, trials: int, seed, xi: float = bd.DEFAULT_XI,
            kappa: float = bd.DEFAULT_KAPPA) -> list:
    """Empirical ``||zeta(u_1; H, lambda_1)||_inf`` against the tail bound, one row per trial."""
    exact = exact_sbm_spectrum(bm)
    lam = float(exact.values[0])
    u = np.array(exact.vectors[:, 0])
    gamma = noise_gamma(bm)
    rows = []
    for trial in range(trials):
        g = sample_graph(bm, trial_seed(seed, bm.n, trial))
        H_norm = spectral_norm(g.H)
        p = bd.ZetaBoundParams(gamma=gamma, lam=lam, n=bm.n, H_norm=H_norm,
                               u_inf=float(np.max(np.abs(u))), u_two=float(np.linalg.norm(u)),
                               xi=xi, kappa=kappa)
        bound, fail = bd.zeta_tail_bound(p)
        zeta = neumann_series_apply(g.H, lam, u, H_norm=H_norm).per_entry_abs
        rows.append({"trial": trial, "zeta_inf": float(np.max(zeta)), "bound": bound,
                     "fail_prob": fail, "H_norm": H_norm, "gamma": gamma})
    return rows
