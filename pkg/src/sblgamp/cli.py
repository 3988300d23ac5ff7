"""Command-line interface: ``sblgamp {recover,phase,runtime,nmse,selftest}``.

Exit status: 0 on success, 1 on usage or input errors, 2 when a recovery
did not converge.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .bench import SOLVERS, nmse_sweep, phase_transition, runtime_sweep
from .config import ConfigError, format_config, load_config, solver_name
from .files import FileFormatError, read_matrix, read_vector, write_matrix, write_table
from .model import DomainError, NumericalError, ProblemInstance, nmse
from .selftest import run_selftest

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2


def _add_common(p, sweep=True):
    p.add_argument("--config", metavar="PATH", help="key = value configuration file")
    p.add_argument("--print-defaults", action="store_true",
                   help="print the resolved configuration and exit")
    p.add_argument("--solver", choices=["sbl-gamp", "sbl-em"] + (["both"] if sweep else []))
    p.add_argument("--out", metavar="PATH", required=False)
    if sweep:
        p.add_argument("--seed", type=int, metavar="U64")
        p.add_argument("--workers", type=int, metavar="INT")
        p.add_argument("--threshold", type=float, metavar="REAL")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors share exit status 1 with input errors; 2 means non-convergence
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sblgamp", description="Sparse Bayesian learning via GAMP.")
    sub = parser.add_subparsers(dest="command", required=True)

    rec = sub.add_parser("recover", help="recover a sparse signal from matrix and observation files")
    rec.add_argument("matrix", nargs="?", help="sensing matrix file (.csv or .bin)")
    rec.add_argument("obs", nargs="?", help="observation vector file")
    rec.add_argument("--truth", metavar="PATH", help="ground-truth vector, enables NMSE reporting")
    _add_common(rec, sweep=False)

    for kind, text in (("phase", "locate the 0.5 success-rate contour over M/N"),
                       ("runtime", "mean solve time versus N"),
                       ("nmse", "mean NMSE versus M/N at fixed SNR")):
        _add_common(sub.add_parser(kind, help=text))

    sub.add_parser("selftest", help="run the fast invariant checks")
    return parser


def _overrides(args) -> dict:
    out = {}
    if args.solver:
        out["sweep.solvers"] = (("sbl_gamp", "sbl_em") if args.solver == "both"
                                else (solver_name(args.solver),))
    if getattr(args, "seed", None) is not None:
        out["sweep.seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        out["sweep.workers"] = args.workers
    if getattr(args, "threshold", None) is not None:
        out["sweep.threshold"] = args.threshold
    return out


def _fail(message) -> int:
    print(f"sblgamp: error: {message}", file=sys.stderr)
    return EXIT_INPUT


def cmd_recover(args) -> int:
    kind = "phase"  # any kind works; recover only reads the prior/em/gamp sections
    try:
        cfg = load_config(kind, args.config)
    except ConfigError as exc:
        return _fail("invalid configuration:\n  " + "\n  ".join(exc.problems))
    if args.print_defaults:
        text = format_config(cfg, "sblgamp recover settings")
        print("".join(line + "\n" for line in text.splitlines()
                      if not line.startswith("sweep.")), end="")
        return EXIT_OK
    if not (args.matrix and args.obs and args.out):
        return _fail("recover needs MATRIX and OBS files and --out PATH")

    solver = solver_name(args.solver or "sbl-gamp")
    try:
        A = read_matrix(args.matrix)
        y = read_vector(args.obs)
        truth = read_vector(args.truth) if args.truth else None
        if y.shape[0] != A.shape[0]:
            raise FileFormatError(
                f"dimension mismatch: {args.matrix} is {A.shape[0]}x{A.shape[1]} "
                f"but {args.obs} has length {y.shape[0]}")
        if truth is not None and truth.shape[0] != A.shape[1]:
            raise FileFormatError(
                f"dimension mismatch: {args.truth} has length {truth.shape[0]} "
                f"but {args.matrix} has {A.shape[1]} columns")
        inst = ProblemInstance(A, y, truth=truth)
    except (FileFormatError, DomainError) as exc:
        return _fail(str(exc))

    start = time.perf_counter()
    try:
        res = SOLVERS[solver](inst, cfg.prior, cfg.em)
    except NumericalError as exc:
        print(f"solver breakdown: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    elapsed = time.perf_counter() - start

    out = Path(args.out)
    write_matrix(out, res.x_hat)
    write_matrix(out.with_name(out.stem + ".var" + out.suffix), res.x_var)
    print(f"solver: {solver}")
    print(f"em_iters: {res.em_iters}")
    print(f"inner_iters_total: {res.inner_iters_total}")
    print(f"converged: {str(res.converged).lower()}")
    if res.retries:
        print(f"damped_retries: {res.retries}")
    print(f"wall_time_s: {elapsed:.6f}")
    if truth is not None and np.any(truth):
        print(f"nmse: {nmse(res.x_hat, truth)!r}")
    return EXIT_OK if res.converged and not res.failed else EXIT_NOT_CONVERGED


def _phase_table(rows):
    header = ["solver", "m_over_n", "k_over_m_half", "bracketed", "probes", "trials"]
    return header, [[r.solver, r.m_over_n, r.k_over_m_half, r.bracketed, r.probes, r.trials] for r in rows]


def _runtime_table(rows, solvers):
    header = ["n", "m", "k", "trials"]
    for s in solvers:
        header += [f"mean_time_s_{s}", f"mean_em_iters_{s}", f"failures_{s}"]
    body = []
    for r in rows:
        line = [r.n, r.m, r.k, r.stats[solvers[0]].trials]
        for s in solvers:
            st = r.stats[s]
            line += [st.mean_time_s, st.mean_em_iters, st.failures]
        body.append(line)
    return header, body


def _nmse_table(rows, solvers):
    header = ["m_over_n", "n", "m", "k", "trials"]
    for s in solvers:
        header += [f"mean_nmse_{s}", f"mean_nmse_db_{s}", f"failures_{s}"]
    body = []
    for r in rows:
        line = [r.m_over_n, r.n, r.m, r.k, r.stats[solvers[0]].trials]
        for s in solvers:
            st = r.stats[s]
            line += [st.mean_nmse, st.mean_nmse_db, st.failures]
        body.append(line)
    return header, body


def cmd_sweep(kind, args) -> int:
    try:
        cfg = load_config(kind, args.config, _overrides(args))
    except ConfigError as exc:
        return _fail("invalid configuration:\n  " + "\n  ".join(exc.problems))
    if args.print_defaults:
        print(format_config(cfg, f"sblgamp {kind} settings"), end="")
        return EXIT_OK

    out = Path(args.out or f"{kind}.csv")
    if not out.parent.is_dir():
        return _fail(f"output directory {out.parent} does not exist")
    if kind == "phase":
        header, body = _phase_table(phase_transition(cfg))
    elif kind == "runtime":
        header, body = _runtime_table(runtime_sweep(cfg), cfg.solvers)
    else:
        header, body = _nmse_table(nmse_sweep(cfg), cfg.solvers)
    write_table(out, header, body)
    manifest = out.with_suffix(".manifest")
    manifest.write_text(format_config(cfg, f"sblgamp {kind} manifest; rerun with --config {manifest.name}"))
    print(f"wrote {out} ({len(body)} rows) and {manifest}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return EXIT_OK if run_selftest() else 1
    if args.command == "recover":
        return cmd_recover(args)
    return cmd_sweep(args.command, args)


if __name__ == "__main__":
    sys.exit(main())
