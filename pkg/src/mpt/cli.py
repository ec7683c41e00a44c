"""Command-line entry point ``mpt``.

Exit codes: 0 success, 2 bad input, 3 a precondition does not hold,
4 the verification suite found a bound violation.
"""
from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import bounds as bd
from .blockmodel import make_balanced_sbm, read_labels, sample_graph, write_labels
from .clustering import ClusterConfig, Clustering, cluster_with_details, recovery_check
from .errors import BadInput, MPTError
from .experiments import (
    ExperimentConfig,
    run_eigval_experiment,
    run_eigvec_experiment,
    run_recovery_experiment,
    run_verification_suite,
    write_csv,
    zeta_mc,
)
from .linalg import OrthonormalBasis, read_matrix, span_h, spectral_norm, sym_eigen, write_matrix

EXIT_OK, EXIT_BAD_INPUT, EXIT_PRECONDITION, EXIT_VIOLATION = 0, 2, 3, 4


def parse_matrix_arg(text: str) -> np.ndarray:
    """``"0.5"`` or ``"0.8,0.1;0.1,0.8"`` (rows separated by ``;``)."""
    try:
        rows = [[float(x) for x in r.split(",")] for r in text.split(";")]
    except ValueError:
        raise BadInput(f"cannot parse matrix {text!r}") from None
    if any(len(r) != len(rows) for r in rows):
        raise BadInput(f"matrix {text!r} is not square")
    return np.array(rows)


def parse_int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise BadInput(f"cannot parse integer list {text!r}") from None


def parse_tau(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise BadInput(f"tau must be a number or 'auto', got {text!r}") from None


# --------------------------------------------------------------------------
# commands

def cmd_gen_sbm(args) -> int:
    bm = make_balanced_sbm(args.k, args.m, parse_matrix_arg(args.p0), args.rho)
    g = sample_graph(bm, args.seed, no_self_loops=args.no_self_loops)
    write_matrix(args.out, g.A)
    if args.out_m:
        write_matrix(args.out_m, g.M)
    if args.labels:
        write_labels(args.labels, bm.z)
    print(f"n={bm.n} K={bm.K} rho={bm.rho} edges={int(np.triu(np.asarray(g.A)).sum())}")
    return EXIT_OK


def cmd_eigen(args) -> int:
    e = sym_eigen(read_matrix(args.matrix), tol=args.tol, method=args.method)
    with open(args.out, "w", newline="") as fh:
        fh.write("# schema=mpt.eigen.v1\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value"] + [f"v{i}" for i in range(e.n)])
        for t in range(e.n):
            w.writerow([t + 1, repr(float(e.values[t]))] + [repr(float(x)) for x in e.vectors[:, t]])
    print(f"n={e.n} lambda_max={float(e.values[0])!r} lambda_min={float(e.values[-1])!r}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    m = read_matrix(args.m)
    h = read_matrix(args.h)
    if m.n != h.n:
        raise BadInput(f"M is {m.n}x{m.n} but H is {h.n}x{h.n}")
    n = m.n
    em = sym_eigen(m)
    pert = sym_eigen(m + h)
    H_norm = spectral_norm(h)
    T = args.T if args.T is not None else 1
    s_down = args.s_down if args.s_down is not None else n
    t = args.t
    reports = []
    lo, hi = bd.weyl_interval(em.values[t - 1], H_norm)
    reports.append(bd.BoundReport("weyl", t=t, lower=lo, upper=hi, details={"H_norm": H_norm}))
    if n >= 2:
        reports.append(bd.dk_simple_sin(pert.values, em.values[t - 1], t, H_norm))
    if n >= 2 and t <= T < n:
        top = OrthonormalBasis(em.vectors[:, :T])
        reports.append(bd.eigval_interval_top(em.values, T, t, span_h(h, top), H_norm))
        reports.append(bd.eigval_interval_top(em.values, T, t, bd.pairwise_h(h, top)[1], H_norm,
                                              h_source="pairwise"))
    if n >= 2 and 2 <= s_down <= t:
        bottom = OrthonormalBasis(em.vectors[:, s_down - 1:])
        reports.append(bd.eigval_interval_bottom(em.values, s_down, t, span_h(h, bottom), H_norm))
    with open(args.out, "w", newline="") as fh:
        fh.write("# schema=mpt.bounds.v1\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(bd.BOUND_CSV_HEADER)
        for r in reports:
            w.writerow(r.to_csv_row())
    print(f"lambda~_{t}={float(pert.values[t - 1])!r} ||H||={H_norm!r} reports={len(reports)}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    cfg = ClusterConfig(K=args.k, tau=parse_tau(args.tau), xi=args.xi, c=args.c, rho=args.rho)
    found, _, tau = cluster_with_details(read_matrix(args.a), cfg)
    write_labels(args.out, found.labels)
    msg = f"clusters={found.num_clusters} tau={tau!r}"
    if args.truth:
        exact, mis = recovery_check(found, Clustering(read_labels(args.truth)))
        msg += f" exact={str(exact).lower()} misclassified={mis}"
    print(msg)
    return EXIT_OK


def _experiment_config(args, name: str) -> ExperimentConfig:
    return ExperimentConfig(
        name=name,
        n_list=parse_int_list(args.n_list),
        K=args.k,
        P0=parse_matrix_arg(args.p0) if args.p0 else None,
        rho_rule=args.rho_rule,
        rho=args.rho,
        rho_eps=args.rho_eps,
        trials=args.trials,
        base_seed=args.seed,
        xi=args.xi,
        kappa=args.kappa,
        c=args.c,
        no_self_loops=args.no_self_loops,
        output=args.out,
    )


def cmd_experiment(args) -> int:
    if args.which == "verify":
        code = run_verification_suite(args.seed, report=args.report, violations_path=args.violations,
                                      instances=args.instances, norm_scale=args.norm_scale)
        print("verify: " + ("no violations" if code == 0 else f"violations written to {args.violations}"))
        return code
    runner = {"eigval": run_eigval_experiment, "eigvec": run_eigvec_experiment,
              "recovery": run_recovery_experiment}[args.which]
    rows = runner(_experiment_config(args, args.which))
    print(f"{args.which}: {len(rows)} rows -> {args.out}")
    return EXIT_OK


def cmd_zeta(args) -> int:
    if args.mc:
        if args.seed is None:
            raise BadInput("--seed is required with --mc")
        bm = make_balanced_sbm(args.k, args.m, parse_matrix_arg(args.p0), args.rho)
        rows = zeta_mc(bm, args.trials, args.seed, xi=args.xi, kappa=args.kappa)
        if args.out:
            write_csv(args.out, "mpt.zeta.v1", ["trial", "zeta_inf", "bound", "fail_prob", "H_norm", "gamma"], rows)
        held = sum(r["zeta_inf"] <= r["bound"] for r in rows)
        print(f"held={held}/{len(rows)} fail_prob={rows[0]['fail_prob']!r}")
        return EXIT_OK
    p = bd.ZetaBoundParams(gamma=args.gamma, lam=args.lam, n=args.n, H_norm=args.h_norm,
                           u_inf=args.u_inf, u_two=args.u_two, xi=args.xi, kappa=args.kappa)
    if args.f_size is not None:
        bound, fail = bd.zeta_tail_bound_mag(p, args.f_size, args.alpha_in_f)
    else:
        bound, fail = bd.zeta_tail_bound(p)
    print(f"bound={bound!r} fail_prob={fail!r}")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser

def _add_model_args(p, defaults_k=1):
    p.add_argument("--k", type=int, default=defaults_k, help="number of communities")
    p.add_argument("--p0", default=None, help='base matrix, e.g. "0.5" or "0.8,0.1;0.1,0.8"')
    p.add_argument("--no-self-loops", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpt", description="Matrix perturbation bounds and blockmodel clustering.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-sbm", help="sample a balanced blockmodel adjacency matrix")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True, help="community size")
    p.add_argument("--p0", required=True)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="adjacency matrix file")
    p.add_argument("--out-m", default=None, help="also write the edge probability matrix")
    p.add_argument("--labels", default=None, help="also write the community labels")
    p.add_argument("--no-self-loops", action="store_true")
    p.set_defaults(func=cmd_gen_sbm)

    p = sub.add_parser("eigen", help="eigendecomposition of a symmetric matrix file")
    p.add_argument("--matrix", required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--method", choices=["auto", "jacobi", "lapack"], default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("bounds", help="evaluate bounds for M and a perturbation H")
    p.add_argument("--m", required=True)
    p.add_argument("--h", required=True)
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--T", type=int, default=None, help="size of the top block (default 1)")
    p.add_argument("--s-down", type=int, default=None, help="first index of the bottom block (default n)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("cluster", help="spectral clustering of an adjacency matrix")
    p.add_argument("--a", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--tau", default="auto")
    p.add_argument("--xi", type=float, default=bd.DEFAULT_XI)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=None, help="density for tau=auto (default: mean of A)")
    p.add_argument("--truth", default=None, help="labels file to score against")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("experiment", help="run a seeded experiment")
    esub = p.add_subparsers(dest="which", required=True)
    for name in ("eigval", "eigvec", "recovery"):
        e = esub.add_parser(name)
        e.add_argument("--n-list", default="100,200,400,800")
        _add_model_args(e, defaults_k=3 if name == "recovery" else 1)
        e.add_argument("--rho-rule", choices=["constant", "log"], default="log" if name == "recovery" else "constant")
        e.add_argument("--rho", type=float, default=1.0)
        e.add_argument("--rho-eps", type=float, default=3.0)
        e.add_argument("--trials", type=int, default=20)
        e.add_argument("--seed", type=int, required=True)
        e.add_argument("--xi", type=float, default=bd.DEFAULT_XI)
        e.add_argument("--kappa", type=float, default=bd.DEFAULT_KAPPA)
        e.add_argument("--c", type=float, default=1.0)
        e.add_argument("--out", required=True)
    e = esub.add_parser("verify", help="bound-soundness sweep")
    e.add_argument("--seed", type=int, required=True)
    e.add_argument("--instances", type=int, default=1000)
    e.add_argument("--report", default="verify_report.csv")
    e.add_argument("--violations", default="violations.csv")
    e.add_argument("--norm-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("zeta", help="tail bound on the Neumann remainder")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=100.0)
    p.add_argument("--h-norm", type=float, default=0.0)
    p.add_argument("--u-inf", type=float, default=1.0)
    p.add_argument("--u-two", type=float, default=1.0)
    p.add_argument("--xi", type=float, default=bd.DEFAULT_XI)
    p.add_argument("--kappa", type=float, default=bd.DEFAULT_KAPPA)
    p.add_argument("--f-size", type=int, default=None, help="support size for the per-entry variant")
    p.add_argument("--alpha-in-f", action="store_true")
    p.add_argument("--mc", action="store_true", help="Monte Carlo check on blockmodel noise")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--m", type=int, default=128)
    p.add_argument("--p0", default="0.7,0.3;0.3,0.6")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_zeta)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MPTError as exc:
        print(f"mpt: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"mpt: error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
