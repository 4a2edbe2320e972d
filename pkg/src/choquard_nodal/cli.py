"""Command-line pipeline: solve, invariant checks and psi scans.

Exit status: 0 verified solution, 2 solved but verification thresholds unmet
(or a failed check), 3 solver failure, 4 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from .config import SolverConfig, load_config
from .coulomb import coulomb_energy, potential_values, potential_values_direct
from .energy import energy_from_terms, h_gradient_values, interaction_terms
from .errors import ChoquardError, ConfigError, SolverError
from .inner_solver import minimize_fixed_partition
from .nehari import InteractionData, n_tilde, nehari_matrix, project
from .outer_search import PsiEvaluator, optimize_partition
from .partition_grid import build_grid, make_partition
from .radial_field import RadialField, h_inner_values
from .verifier import verify

__all__ = [
    "SolverConfig",
    "EXIT_OK",
    "EXIT_UNVERIFIED",
    "EXIT_SOLVER",
    "EXIT_CONFIG",
    "run_solve",
    "run_check",
    "run_psi_scan",
    "dumps_summary",
    "main",
]

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNVERIFIED = 2
EXIT_SOLVER = 3
EXIT_CONFIG = 4

SUMMARY_KEYS = (
    "p",
    "k",
    "radii",
    "r_infty",
    "grid_points",
    "energy",
    "psi_trace_len",
    "constraint_residual",
    "gradient_norm",
    "interface_jumps",
    "relative_jumps",
    "ode_residual",
    "sign_changes",
    "strauss_ratio",
    "nehari_min_eigenvalue",
    "converged",
    "exit_code",
    "wall_time_seconds",
    "seed",
)


def _fmt(x: float) -> str:
    s = "%.17g" % x
    return s if any(c in s for c in ".eni") else s + ".0"


def _emit(value) -> str:
    # json with every float at 17 significant digits; non-finite -> null
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _fmt(float(value)) if math.isfinite(value) else "null"
    if isinstance(value, str):
        import json

        return json.dumps(value)
    if isinstance(value, dict):
        items = ", ".join(f"{_emit(str(k))}: {_emit(v)}" for k, v in value.items())
        return "{" + items + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_emit(v) for v in value) + "]"
    raise TypeError(f"cannot serialise {type(value).__name__}")


def dumps_summary(summary: dict) -> str:
    lines = [f"  {_emit(k)}: {_emit(v)}" for k, v in summary.items()]
    return "{\n" + ",\n".join(lines) + "\n}\n"


def _empty_summary(config: SolverConfig | None) -> dict:
    out = dict.fromkeys(SUMMARY_KEYS)
    out.update(radii=[], interface_jumps=[], relative_jumps=[], converged=False, psi_trace_len=0)
    if config is not None:
        out.update(p=config.p, k=config.k, r_infty=config.r_infty, seed=config.seed)
    return out


def write_profile(path: Path, bundle) -> None:
    grid = bundle.grid
    component = np.asarray(grid.annulus_of)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "W", "component"])
        for t, v, c in zip(grid.nodes, bundle.glued.values, component):
            w.writerow([_fmt(t), _fmt(v), int(c)])


def run_solve(config: SolverConfig, out_dir: str | Path | None = None) -> tuple[int, dict]:
    """Solve, verify and write ``profile.csv`` and ``summary.json``.

    Returns the exit status and the summary dictionary.
    """
    start = time.perf_counter()
    summary = _empty_summary(config)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    bundle = None
    try:
        if config.k == 0:
            bundle = minimize_fixed_partition(make_partition([]), config)
            trace_len, converged = 0, True
        else:
            result = optimize_partition(config.k, config)
            bundle = result.best_bundle
            trace_len, converged = len(result.trace), result.converged
        report = verify(bundle, jump_threshold=config.jump_threshold)
    except ChoquardError as exc:
        bundle = None
        summary.update(exit_code=EXIT_SOLVER, error={"code": exc.code, "message": str(exc)})
        log.error("solver failure [%s]: %s", exc.code, exc)
    else:
        code = EXIT_OK if report.passed else EXIT_UNVERIFIED
        summary.update(
            radii=list(bundle.partition.radii),
            grid_points=bundle.grid.n_nodes,
            energy=bundle.energy,
            psi_trace_len=trace_len,
            constraint_residual=bundle.constraint_residual,
            gradient_norm=bundle.gradient_norm,
            interface_jumps=report.interface_jumps,
            relative_jumps=report.relative_jumps,
            ode_residual=report.ode_residual,
            sign_changes=report.sign_changes,
            strauss_ratio=report.strauss_ratio,
            nehari_min_eigenvalue=bundle.nehari.min_eigenvalue_N_tilde,
            converged=converged,
            exit_code=code,
        )
        if report.failures:
            summary["failures"] = report.failures
    summary["wall_time_seconds"] = time.perf_counter() - start
    if out is not None:
        if bundle is not None:
            write_profile(out / "profile.csv", bundle)
        (out / "summary.json").write_text(dumps_summary(summary))
    return summary["exit_code"], summary


def _check_partition(config: SolverConfig):
    return make_partition(0.9 * np.arange(1, config.k + 1))


def _random_fields(rng, grid, m):
    # smooth random profiles vanishing at r_infty
    t = grid.nodes
    out = np.zeros((m, t.size))
    for i in range(m):
        c = rng.uniform(0.2, 2.0, size=3)
        out[i] = (c[0] + c[1] * np.cos(c[2] * t)) * np.exp(-t / (1 + c[2])) * (1 - t / grid.r_infty)
    return out


def run_check(config: SolverConfig, direct_kappa: float | None = None, out=None) -> int:
    """Run the invariant suite and print one pass/fail line per check.

    ``direct_kappa`` overrides the kernel normalisation used by the O(n^2)
    reference path; any value other than ``config.kappa`` is a deliberate
    fault that the fast-vs-direct check must catch.
    """
    out = out or sys.stdout
    rng = np.random.default_rng(config.seed)
    kappa = config.kappa
    direct_kappa = kappa if direct_kappa is None else float(direct_kappa)
    n = min(config.points_per_annulus, 400)
    part = _check_partition(config)
    grid = build_grid(part, n, config.r_infty)
    results = []

    # Cauchy-Schwarz on random nonnegative pairs
    worst = -np.inf
    for _ in range(200):
        f, g = np.abs(_random_fields(rng, grid, 2)) * rng.uniform(0.1, 1.0, size=(2, grid.n_nodes))
        F, G = RadialField(f, grid), RadialField(g, grid)
        dfg = coulomb_energy(F, G, kappa)
        dff = coulomb_energy(F, F, kappa)
        dgg = coulomb_energy(G, G, kappa)
        worst = max(worst, (dfg**2 - dff * dgg) / (dff * dgg))
    results.append(("cauchy_schwarz", worst <= 1e-12, f"max relative violation {worst:.3e}"))

    # positive-definite N-tilde at Nehari points and the determinant identity
    cert_ok, cert_min, det_err = True, np.inf, 0.0
    for p in (2.6, 3.0, 4.0, 4.9):
        for k in range(0, 4):
            g = build_grid(make_partition(0.9 * np.arange(1, k + 1)), 200, config.r_infty)
            U = np.abs(_random_fields(rng, g, k + 1))
            for i in range(k + 1):
                mask = np.ones(g.n_nodes, dtype=bool)
                mask[g.free_slice(i + 1)] = False
                U[i, mask] = 0.0
            a, B = interaction_terms(g, U, p, kappa)
            data = InteractionData(a, B)
            nt = project(data, p)
            cert_min = min(cert_min, nt.min_eigenvalue_N_tilde)
            Nt = n_tilde(data, nt.t, p)
            N = nehari_matrix(data, nt.t, p)
            lhs, rhs = np.linalg.det(N), (-1) ** (k + 1) * np.linalg.det(Nt)
            det_err = max(det_err, abs(lhs - rhs) / abs(rhs))
            cert_ok &= nt.min_eigenvalue_N_tilde > 0
    results.append(("nehari_certification", cert_ok, f"min eigenvalue {cert_min:.3e}"))
    results.append(("determinant_identity", det_err <= 1e-8, f"max relative error {det_err:.3e}"))

    # H^1 gradient against central differences of the energy
    p = config.p
    U = _random_fields(rng, grid, part.k + 1)
    for i in range(part.k + 1):
        mask = np.ones(grid.n_nodes, dtype=bool)
        mask[grid.free_slice(i + 1)] = False
        U[i, mask] = 0.0
    Gr = h_gradient_values(grid, U, p, kappa)

    def energy(V):
        return energy_from_terms(*interaction_terms(grid, V, p, kappa), p)

    worst = 0.0
    eps = 1e-5
    for _ in range(20):
        D = rng.standard_normal(U.shape) * (U != 0)
        fd = (energy(U + eps * D) - energy(U - eps * D)) / (2 * eps)
        an = float(np.sum(h_inner_values(grid, Gr, D)))
        worst = max(worst, abs(fd - an) / max(abs(an), 1e-300))
    results.append(("h1_gradient", worst <= 1e-5, f"max relative error {worst:.3e}"))

    # O(n) path against the O(n^2) reference
    worst = 0.0
    for _ in range(20):
        f = rng.standard_normal(grid.n_nodes)
        fast = potential_values(grid, f, kappa)
        slow = potential_values_direct(grid, f, direct_kappa)
        worst = max(worst, float(np.max(np.abs(fast - slow)) / np.max(np.abs(slow))))
    results.append(("fast_vs_direct", worst <= 1e-12, f"max relative difference {worst:.3e}"))

    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=out)
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_UNVERIFIED


def run_psi_scan(config: SolverConfig, r1, r2=None, out=None) -> list[tuple]:
    """Evaluate psi on a 1-D (``k = 1``) or 2-D (``k = 2``) grid of radii.

    ``r1`` and ``r2`` are ``(start, stop, num)``.  Writes CSV ``r1[,r2],psi``;
    failed solves and unordered pairs are skipped or reported as ``nan``.
    """
    out = out or sys.stdout
    k = 1 if r2 is None else 2
    config = config.with_(k=k)
    evaluator = PsiEvaluator(config)
    xs = np.linspace(*r1[:2], int(r1[2]))
    ys = np.linspace(*r2[:2], int(r2[2])) if r2 is not None else [None]
    rows = []
    w = csv.writer(out)
    w.writerow(["r1", "psi"] if k == 1 else ["r1", "r2", "psi"])
    for x in xs:
        for y in ys:
            radii = [x] if y is None else [x, y]
            if y is not None and not y > x:
                continue
            try:
                value = evaluator(make_partition(radii)).psi
            except (SolverError, ValueError) as exc:
                log.warning("psi failed at %s: %s", radii, exc)
                value = float("nan")
            rows.append((*radii, value))
            w.writerow([_fmt(v) for v in rows[-1]])
    return rows


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _add_config_flags(sp):
    sp.add_argument("--config", type=Path, help="JSON file with any SolverConfig fields")
    sp.add_argument("--p", type=float)
    sp.add_argument("--k", type=int)
    sp.add_argument("--grid", dest="points_per_annulus", type=int, help="points per annulus")
    sp.add_argument("--r-infty", dest="r_infty", type=float)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--tol-nehari", dest="tol_nehari", type=float)
    sp.add_argument("--tol-grad", dest="tol_grad", type=float)
    sp.add_argument("--tol-r", dest="tol_r", type=float)
    sp.add_argument("--tol-psi", dest="tol_psi", type=float)
    sp.add_argument("--jump-threshold", dest="jump_threshold", type=float)
    sp.add_argument("--max-inner-iters", dest="max_inner_iters", type=int)
    sp.add_argument("--max-outer-evals", dest="max_outer_evals", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("-v", "--verbose", action="store_true")


_CONFIG_FIELDS = (
    "p",
    "k",
    "points_per_annulus",
    "r_infty",
    "kappa",
    "tol_nehari",
    "tol_grad",
    "tol_r",
    "tol_psi",
    "jump_threshold",
    "max_inner_iters",
    "max_outer_evals",
    "seed",
)


def config_from_args(args) -> SolverConfig:
    overrides = {f: getattr(args, f) for f in _CONFIG_FIELDS}
    if args.config is not None:
        return load_config(args.config, **overrides)
    return SolverConfig(**{k: v for k, v in overrides.items() if v is not None})


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="choquard-nodal", description="Radial k-node solutions of the Choquard equation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    solve = sub.add_parser("solve", help="solve, verify and write profile.csv / summary.json")
    _add_config_flags(solve)
    solve.add_argument("--out-dir", type=Path, default=Path("."))
    check = sub.add_parser("check", help="run the invariant suite")
    _add_config_flags(check)
    check.add_argument("--direct-kappa", type=float, help="fault injection for the reference path")
    scan = sub.add_parser("psi-scan", help="tabulate psi over a grid of radii")
    _add_config_flags(scan)
    scan.add_argument("--r1", type=float, nargs=3, metavar=("START", "STOP", "NUM"), required=True)
    scan.add_argument("--r2", type=float, nargs=3, metavar=("START", "STOP", "NUM"))
    scan.add_argument("--out", type=Path, help="CSV path (default stdout)")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors exit with EXIT_CONFIG, --help with 0
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
    except (ConfigError, OSError, ValueError, TypeError) as exc:
        field = getattr(exc, "field", None)
        print(f"config error{f' [{field}]' if field else ''}: {exc}", file=sys.stderr)
        if args.command == "solve":
            args.out_dir.mkdir(parents=True, exist_ok=True)
            summary = _empty_summary(None)
            summary.update({f: getattr(args, f) for f in ("p", "k", "r_infty", "seed") if getattr(args, f) is not None})
            summary.update(
                exit_code=EXIT_CONFIG,
                error={"code": getattr(exc, "code", "config_error"), "field": field, "message": str(exc)},
            )
            (args.out_dir / "summary.json").write_text(dumps_summary(summary))
        return EXIT_CONFIG

    try:
        if args.command == "solve":
            code, summary = run_solve(config, args.out_dir)
            print(f"exit {code}: energy={summary['energy']} radii={summary['radii']}")
            return code
        if args.command == "check":
            return run_check(config, direct_kappa=args.direct_kappa)
        if args.out is not None:
            with open(args.out, "w", newline="") as fh:
                run_psi_scan(config, args.r1, args.r2, out=fh)
        else:
            run_psi_scan(config, args.r1, args.r2)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ChoquardError as exc:
        print(f"failure [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
