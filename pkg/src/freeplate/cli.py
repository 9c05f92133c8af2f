"""Command-line entry point: ``freeplate {solve,bound,verify,sweep} --config run.yaml``.

Exit status: 0 when every check passes, 1 when a check fails, 2 for bad
configuration or arguments, 3 for numerical failures such as an
insufficient trial space.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import scipy

from . import __version__
from .assembly import assemble, stiffness
from .basis import build_basis
from .bounds import BoundInputs, next_bound, sum_bound
from .config import RunConfig, dump_config, load_config
from .eigensolver import solve
from .errors import ConfigError, FreePlateError, InvalidArgument
from .verify import (
    check_bounds,
    coercivity_ledger,
    laplacian_hessian_gap,
    residuals,
    szego_weinberg_compare,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

ORTHONORMALITY_TOL = 1e-8
ZERO_MODE_RESIDUAL_TOL = 1e-10
GRAM_RTOL = 1e-10


# ---------------------------------------------------------------- serialization

def fmt(value) -> str:
    """Round-trip exact text for a CSV cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_json(path: Path, payload: Dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def provenance(cfg: RunConfig, command: str) -> Dict[str, Any]:
    # Output location and worker count are excluded so that the sidecar is
    # identical for runs that differ only in how they were scheduled.
    conf = cfg.to_dict()
    conf.pop("output")
    return {
        "command": command,
        "config": conf,
        "versions": {
            "freeplate": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


# ---------------------------------------------------------------- work units

def _grid_points(cfg: RunConfig) -> List[RunConfig]:
    taus = cfg.grids.tau or (cfg.tau,)
    sigmas = cfg.grids.sigma or (cfg.sigma,)
    ps = cfg.grids.p or (cfg.p,)
    return [cfg.replace(tau=t, sigma=s, p=p) for t, s, p in itertools.product(taus, sigmas, ps)]


def _run_parallel(fn, items: Sequence, workers: int) -> List[Any]:
    """Map ``fn`` over ``items``; results are returned in input order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _spectrum(cfg: RunConfig, p: int, k: int):
    basis = build_basis(cfg.domain, p)
    fm = assemble(cfg.domain, basis)
    prov = {"domain": cfg.domain.describe(), "tau": cfg.tau, "sigma": cfg.sigma, "p": p,
            "basis_size": basis.size}
    return basis, fm, solve(fm, cfg.params, k, cfg.drop_tol, prov)


def _bound_rows(report) -> List[List[Any]]:
    return [[r.m, r.partial_sum, r.sum_bound, r.sum_margin, r.next_eigenvalue, r.next_bound,
             r.next_margin, r.branch, r.r_star, r.passed] for r in report.rows]


def verify_point(cfg: RunConfig) -> Dict[str, Any]:
    """Full pipeline at one parameter point, with the optional higher-degree retest."""
    k = max(cfg.k, cfg.m_max + 1, 2)
    stages = [("primary", cfg.p)]
    out: Dict[str, Any] = {"bounds": [], "checks": [], "residuals": [], "eigenvalues": [],
                           "matrices": {}}
    basis, fm, res = _spectrum(cfg, cfg.p, k)
    report = check_bounds(res, cfg.domain, cfg.params, cfg.m_max)
    stage_data = [("primary", cfg.p, basis, fm, res, report)]
    if not report.passed and cfg.retest_p is not None:
        b2, fm2, res2 = _spectrum(cfg, cfg.retest_p, k)
        stage_data.append(("retest", cfg.retest_p, b2, fm2, res2,
                           check_bounds(res2, cfg.domain, cfg.params, cfg.m_max)))
        stages.append(("retest", cfg.retest_p))
    final_report = stage_data[-1][5]

    for stage, p, _, _, r, rep in stage_data:
        for row in _bound_rows(rep):
            out["bounds"].append([stage, p] + row)
        for j, g in enumerate(r.eigenvalues, start=1):
            out["eigenvalues"].append([stage, p, j, g])

    def check(name, value, threshold, ok):
        out["checks"].append([name, value, threshold, bool(ok)])

    check("bounds", float(len(final_report.failing_rows())), 0.0, final_report.passed)
    gam = res.eigenvalues
    check("orthonormality", res.orthonormality_residual, ORTHONORMALITY_TOL,
          res.orthonormality_residual <= ORTHONORMALITY_TOL)
    zero_tol = 1e-8 * max(1.0, float(gam[1]))
    check("zero_mode", float(gam[0]), zero_tol, gam[0] <= zero_tol)
    check("nonnegativity", float(gam.min()), -res.nonnegativity_tol,
          gam.min() >= -res.nonnegativity_tol)

    if cfg.p >= 4:
        for j in (1, 2):
            rr = residuals(cfg.domain, basis, (gam[j - 1], res.coefficients[:, j - 1]), cfg.params)
            out["residuals"].append([j, gam[j - 1], rr.interior, rr.bc1, rr.bc2])
            if j == 1:
                worst = max(rr.interior, rr.bc1, rr.bc2)
                check("zero_mode_residual", worst, ZERO_MODE_RESIDUAL_TOL,
                      worst <= ZERO_MODE_RESIDUAL_TOL)

    A = stiffness(fm, cfg.params)
    a_norm = float(np.linalg.norm(A, 2))
    h_norm = float(np.linalg.norm(fm.H, 2))
    coer = coercivity_ledger(fm, cfg.params)
    check("coercivity", coer, -GRAM_RTOL * a_norm, coer >= -GRAM_RTOL * a_norm)
    gap = laplacian_hessian_gap(fm)
    check("hessian_laplacian_gram", gap, -GRAM_RTOL * h_norm, gap >= -GRAM_RTOL * h_norm)

    if cfg.dump_matrices:
        out["matrices"] = {"H": fm.H, "L": fm.L, "G": fm.G, "M": fm.M, "A": A}
    out["kept_dimension"] = res.kept_dimension
    out["basis_size"] = basis.size
    out["stages"] = stages
    out["passed"] = all(c[3] for c in out["checks"])
    return out


def sweep_point(cfg: RunConfig) -> List[List[Any]]:
    _, _, res = _spectrum(cfg, cfg.p, cfg.k)
    gam = res.eigenvalues
    partial = np.cumsum(gam)
    rows = []
    for j, g in enumerate(gam, start=1):
        inp_next = BoundInputs(cfg.n, cfg.domain.volume, cfg.tau, j - 1)
        nb, branch, _ = next_bound(inp_next)
        sb = sum_bound(BoundInputs(cfg.n, cfg.domain.volume, cfg.tau, j))
        rows.append([cfg.tau, cfg.sigma, cfg.p, j, g, partial[j - 1], sb, sb - partial[j - 1],
                     nb, nb - g, branch])
    return rows


# ---------------------------------------------------------------- commands

def _dump(out: Path, prefix: str, mats: Dict[str, np.ndarray]) -> None:
    d = out / "matrices"
    d.mkdir(parents=True, exist_ok=True)
    for name, mat in mats.items():
        np.save(d / f"{prefix}{name}.npy", np.ascontiguousarray(mat))


def cmd_solve(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    basis, fm, res = _spectrum(cfg, cfg.p, cfg.k)
    write_csv(out / "eigenvalues.csv", ["j", "gamma"],
              ([j, g] for j, g in enumerate(res.eigenvalues, start=1)))
    prov = provenance(cfg, "solve")
    prov["diagnostics"] = {
        "basis_size": basis.size,
        "kept_dimension": res.kept_dimension,
        "orthonormality_residual": repr(res.orthonormality_residual),
        "smooth_domain": cfg.domain.smooth,
    }
    write_json(out / "solve.json", prov)
    if cfg.dump_matrices:
        _dump(out, "", {"H": fm.H, "L": fm.L, "G": fm.G, "M": fm.M, "A": stiffness(fm, cfg.params)})
    if cfg.plot_data:
        write_csv(out / "plot_spectrum.csv", ["tau", "sigma", "p", "j", "gamma"],
                  ([cfg.tau, cfg.sigma, cfg.p, j, g] for j, g in enumerate(res.eigenvalues, start=1)))
    if res.orthonormality_residual > ORTHONORMALITY_TOL:
        print(f"orthonormality residual {res.orthonormality_residual!r} exceeds "
              f"{ORTHONORMALITY_TOL!r}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


BOUND_HEADER = ["n", "volume", "tau", "m", "sum_bound", "next_bound", "branch", "r_min",
                "r_star", "F_star", "bracket_lo", "bracket_hi", "iterations", "converged"]


def bound_table(n: int, volume: float, taus: Sequence[float], ms: Sequence[int]) -> List[List[Any]]:
    rows = []
    for tau in taus:
        for m in ms:
            inp = BoundInputs(n, volume, tau, m)
            sb = sum_bound(inp) if m >= 1 else 0.0
            nb, branch, tr = next_bound(inp)
            attained = tr is not None and tr.attained
            rows.append([n, volume, tau, m, sb, nb, branch, inp.r_min,
                         tr.r_star if attained else None,
                         tr.F_star if attained else None,
                         tr.lo if attained else None,
                         tr.hi if attained else None,
                         tr.iterations if attained else None,
                         tr.converged if attained else None])
    return rows


def cmd_bound(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    taus = cfg.grids.tau or (cfg.tau,)
    ms = cfg.grids.m or tuple(range(cfg.m_max + 1))
    rows = bound_table(cfg.n, cfg.domain.volume, taus, ms)
    write_csv(out / "bounds.csv", BOUND_HEADER, rows)
    write_json(out / "bound.json", provenance(cfg, "bound"))
    bad = [r for r in rows if r[6] == "tau_positive" and r[13] is False]
    for r in bad:
        print(f"minimizer did not converge: tau={r[2]!r} m={r[3]}", file=sys.stderr)
    return EXIT_FAIL if bad else EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    points = _grid_points(cfg)
    results = _run_parallel(verify_point, points, cfg.workers)

    key_cols = ["block", "domain", "tau", "sigma", "p"]
    bounds_rows, check_rows, resid_rows, eig_rows, stage_rows = [], [], [], [], []
    failures = []
    hypothesis = "smooth" if cfg.domain.smooth else "beyond-smoothness-hypothesis"
    for b, (pt, r) in enumerate(zip(points, results)):
        key = [b, pt.domain.describe(), pt.tau, pt.sigma, pt.p]
        for row in r["bounds"]:
            bounds_rows.append(key + [hypothesis] + row)
            if row[-1] is False and row[0] == r["stages"][-1][0]:
                failures.append(("bound", key + row))
        for row in r["checks"]:
            check_rows.append(key + row)
            if not row[3]:
                failures.append(("check", key + row))
        resid_rows.extend(key + row for row in r["residuals"])
        eig_rows.extend(key + row for row in r["eigenvalues"])
        stage_rows.append(key + [r["basis_size"], r["kept_dimension"],
                                 ";".join(f"{s}:{p}" for s, p in r["stages"]), r["passed"]])
        if r["matrices"]:
            _dump(out, f"block{b}_", r["matrices"])

    write_csv(out / "bound_report.csv",
              key_cols + ["hypothesis", "stage", "stage_p", "m", "partial_sum", "sum_bound",
                          "sum_margin", "next_eigenvalue", "next_bound", "next_margin", "branch",
                          "r_star", "passed"], bounds_rows)
    write_csv(out / "checks.csv", key_cols + ["check", "value", "threshold", "passed"], check_rows)
    write_csv(out / "residuals.csv", key_cols + ["j", "gamma", "interior", "bc1", "bc2"], resid_rows)
    write_csv(out / "eigenvalues.csv", key_cols + ["stage", "stage_p", "j", "gamma"], eig_rows)
    write_csv(out / "blocks.csv", key_cols + ["basis_size", "kept_dimension", "stages", "passed"],
              stage_rows)
    if cfg.plot_data:
        write_csv(out / "plot_bounds.csv",
                  key_cols + ["stage", "stage_p", "m", "partial_sum", "sum_bound", "next_eigenvalue",
                              "next_bound"],
                  ([r[0], r[1], r[2], r[3], r[4], r[6], r[7], r[8], r[9], r[10], r[12], r[13]]
                   for r in bounds_rows))

    summary: Dict[str, Any] = {"blocks": len(points), "failures": len(failures)}
    if cfg.compare:
        comp_rows, comp_summary = [], []
        pairs = list(dict.fromkeys((pt.tau, pt.sigma) for pt in points))
        for tau, sigma in pairs:
            if not tau > 0:
                # the comparison is only posed for positive tension
                comp_summary.append({"tau": repr(tau), "sigma": repr(sigma),
                                     "regime": "not-applicable"})
                continue
            table, used_p = _compare(cfg.replace(tau=tau, sigma=sigma))
            comp_rows.extend([tau, sigma, i, r.domain, r.is_ball, r.gamma2, used_p]
                             for i, r in enumerate(table.rows))
            comp_summary.append({
                "tau": repr(tau),
                "sigma": repr(sigma),
                "ball_is_maximizer": table.ball_is_maximizer,
                "margin": None if table.margin is None else repr(table.margin),
                "regime": table.regime,
                "p": used_p,
            })
            if table.ball_is_maximizer is False:
                failures.append(("comparison", [tau, sigma, table.regime, table.margin, used_p]))
        write_csv(out / "comparison.csv",
                  ["tau", "sigma", "rank", "domain", "is_ball", "gamma2", "p"], comp_rows)
        summary["comparison"] = comp_summary
    summary["passed"] = not failures
    summary["failures"] = len(failures)
    prov = provenance(cfg, "verify")
    prov["summary"] = summary
    write_json(out / "verify.json", prov)

    for kind, row in failures:
        print("FAIL," + kind + "," + ",".join(fmt(v) for v in row), file=sys.stderr)
    return EXIT_OK if not failures else EXIT_FAIL


def _compare(cfg: RunConfig):
    domains = (cfg.domain,) + tuple(d for d in cfg.compare if d != cfg.domain)
    table = szego_weinberg_compare(domains, cfg.params, cfg.compare_p)
    if table.ball_is_maximizer is False and cfg.compare_retest_p is not None:
        return szego_weinberg_compare(domains, cfg.params, cfg.compare_retest_p), cfg.compare_retest_p
    return table, cfg.compare_p


SWEEP_HEADER = ["tau", "sigma", "p", "j", "gamma", "partial_sum", "sum_bound", "sum_margin",
                "next_bound", "next_margin", "branch"]


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.grids.empty():
        raise InvalidArgument("sweep needs at least one non-empty grid axis (tau, sigma, p or m)")
    out = Path(cfg.out)
    if cfg.grids.tau or cfg.grids.sigma or cfg.grids.p:
        points = _grid_points(cfg)
        blocks = _run_parallel(sweep_point, points, cfg.workers)
        write_csv(out / "sweep.csv", SWEEP_HEADER, itertools.chain.from_iterable(blocks))
    if cfg.grids.m:
        taus = cfg.grids.tau or (cfg.tau,)
        write_csv(out / "bound_curve.csv", BOUND_HEADER,
                  bound_table(cfg.n, cfg.domain.volume, taus, cfg.grids.m))
    write_json(out / "sweep.json", provenance(cfg, "sweep"))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "bound": cmd_bound, "verify": cmd_verify, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="freeplate", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, metavar="PATH", help="YAML run configuration")
        sp.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
        sp.add_argument("--workers", type=int, metavar="N", help="parallel sweep workers")
        sp.add_argument("--dump-matrices", action="store_true", help="save Gram matrices as .npy")
        sp.add_argument("--plot-data", action="store_true", help="emit plot-ready CSV files")
        sp.add_argument("--print-config", action="store_true",
                        help="print the normalised configuration and exit")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        changes: Dict[str, Any] = {}
        if args.out is not None:
            changes["out"] = args.out
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("--workers", "must be >= 1")
            changes["workers"] = args.workers
        if args.dump_matrices:
            changes["dump_matrices"] = True
        if args.plot_data:
            changes["plot_data"] = True
        cfg = cfg.replace(**changes)
        if args.print_config:
            sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidArgument as exc:
        print(f"invalid argument: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FreePlateError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
