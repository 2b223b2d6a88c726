"""Command-line interface: ``trichocert <subcommand> ...``.

Every JSON document written here carries the resolved run configuration
under ``"config"``. Exit codes: 0 success, 2 invalid input, 3 solver or
numerical failure, 4 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import io
from .conic import SolverError
from .correlations import UsdParams, correlations_of, usd_matrix, witness_w
from .dimension import estimate_dimension
from .lower_bound import (FAST_DELTA, FINE_DELTA, DegenerateToleranceError, MonotonicityError,
                          ScanAborted, scan as lower_bound_scan)
from .qubit import ValidationError, trine_scenario
from .seesaw import is_simulable, seesaw
from .validation import check_norm

DEFAULT_SEED = 20210
EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_INTERNAL = 0, 2, 3, 4

PROFILES = {
    "fast": {"restarts": 200, "max_iters": 300, "conv_tol": 1e-6, "delta": FAST_DELTA},
    "paper": {"restarts": 4500, "max_iters": 300, "conv_tol": 1e-6, "delta": FINE_DELTA},
}

logger = logging.getLogger("trichocert")


@dataclass
class RunConfig:
    subcommand: str
    input: Optional[str] = None
    output: Optional[str] = None
    norm: Optional[str] = None
    restarts: Optional[int] = None
    max_iters: Optional[int] = None
    conv_tol: Optional[float] = None
    delta: Optional[float] = None
    bis_tol: Optional[float] = None
    seed: int = DEFAULT_SEED
    profile: str = "fast"
    jobs: Optional[int] = None

    def resolve(self) -> "RunConfig":
        """Fill unset fields from the profile; explicit values always win."""
        preset = PROFILES[self.profile]
        for key, value in preset.items():
            if getattr(self, key) is None:
                setattr(self, key, value)
        if self.bis_tol is None:
            self.bis_tol = 1e-6
        if self.jobs is None:
            self.jobs = os.cpu_count() or 1
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _common(p, io_flags=True):
    if io_flags:
        p.add_argument("--output", "-o", help="output file (default: stdout)")
    p.add_argument("--profile", choices=sorted(PROFILES), default="fast")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--jobs", type=int, help="worker processes (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trichocert",
        description="Certify irreducibly three-outcome qubit measurements from "
                    "prepare-and-measure correlations.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("usd", help="USD correlation matrix for (p, q, xi)")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--xi", type=float, required=True)
    _common(p)

    p = sub.add_parser("witness", help="evaluate the linear witness on a matrix")
    p.add_argument("--input", required=True, help='JSON {"matrix": [[...], [...], [...]]}')
    _common(p)

    p = sub.add_parser("trine", help="print the trine scenario and its correlations")
    _common(p)

    p = sub.add_parser("seesaw", help="seesaw upper bound on the distance to simulable correlations")
    p.add_argument("--input", required=True)
    p.add_argument("--norm", default="l2", help="l2 (Euclidean) or linf (supremum)")
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--conv-tol", type=float)
    p.add_argument("--trace", help="CSV file for the per-iteration distances")
    _common(p)

    p = sub.add_parser("lowerbound", help="certified lower bound on the sup-norm distance")
    p.add_argument("--input", required=True)
    p.add_argument("--delta", type=float, help="angular grid step")
    p.add_argument("--bis-tol", type=float)
    p.add_argument("--adaptive", action="store_true")
    p.add_argument("--samples", help="CSV file for (phi, eps_c)")
    _common(p)

    p = sub.add_parser("simulable", help="is the three-outcome measurement of a scenario simulable?")
    p.add_argument("--input", help="scenario JSON (default: the trine scenario)")
    p.add_argument("--tol", type=float, default=1e-8)
    _common(p)

    p = sub.add_parser("dimension", help="rank-based effective dimension of a data matrix")
    p.add_argument("--data", required=True, help="CSV with a header row")
    p.add_argument("--tol", type=float, help="absolute singular value cutoff")
    _common(p)

    p = sub.add_parser("scan", help="sweep a (p, q, xi) grid, writing CSV")
    for name in ("p", "q", "xi"):
        p.add_argument(f"--{name}", default="0:1:11",
                       help="comma-separated values or start:stop:count (default 0:1:11)")
    p.add_argument("--distances", action="store_true",
                   help="also run seesaw in both norms for realizable points")
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--conv-tol", type=float)
    _common(p)
    return parser


def _grid(spec: str) -> list:
    if ":" in spec:
        start, stop, count = spec.split(":")
        return np.linspace(float(start), float(stop), int(count)).tolist()
    return [float(v) for v in spec.split(",") if v.strip()]


def _config(args) -> RunConfig:
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    values = {k: v for k, v in vars(args).items() if k in fields}
    if "input" not in values and getattr(args, "data", None):
        values["input"] = args.data
    return RunConfig(**values).resolve()


def _cmd_usd(args, cfg):
    params = UsdParams(args.p, args.q, args.xi)
    P = usd_matrix(params)
    return {"params": {"p": params.p, "q": params.q, "xi": params.xi},
            "matrix": P, "realizable": params.realizable, "witness": witness_w(P)}


def _cmd_witness(args, cfg):
    P = io.read_correlation_json(args.input)
    return {"matrix": P, "witness": witness_w(P)}


def _cmd_trine(args, cfg):
    s = trine_scenario()
    return {"scenario": s.to_dict(), "matrix": correlations_of(s)}


def _cmd_seesaw(args, cfg):
    P = io.read_correlation_json(args.input)
    cfg.norm = check_norm(args.norm)
    res = seesaw(P, norm=cfg.norm, restarts=cfg.restarts, max_iters=cfg.max_iters,
                 conv_tol=cfg.conv_tol, seed=cfg.seed, n_jobs=cfg.jobs,
                 keep_trace=bool(args.trace))
    if args.trace:
        io.write_csv(args.trace, ["restart", "iteration", "t"], res.trace)
    return res.to_dict()


def _cmd_lowerbound(args, cfg):
    P = io.read_correlation_json(args.input)
    try:
        res = lower_bound_scan(P, delta=cfg.delta, adaptive=args.adaptive,
                               bis_tol=cfg.bis_tol, n_jobs=cfg.jobs)
    except ScanAborted as exc:
        if args.samples:
            io.write_csv(args.samples, ["phi", "eps_c"], exc.samples)
        raise
    if args.samples:
        io.write_csv(args.samples, ["phi", "eps_c"], res.samples)
    return res.to_dict()


def _cmd_simulable(args, cfg):
    s = io.read_scenario_json(args.input) if args.input else trine_scenario()
    ok, dec = is_simulable(s.m1, tol=args.tol)
    return {"simulable": ok, "decomposition": None if dec is None else dec.to_dict()}


def _cmd_dimension(args, cfg):
    A = io.read_data_csv(args.data)
    return estimate_dimension(A, tol=args.tol).to_dict()


def _cmd_scan(args, cfg):
    rows = []
    for p in _grid(args.p):
        for q in _grid(args.q):
            for xi in _grid(args.xi):
                params = UsdParams(p, q, xi)
                P = usd_matrix(params)
                r2 = rinf = ""
                if args.distances and params.realizable:
                    kw = dict(restarts=cfg.restarts, max_iters=cfg.max_iters,
                              conv_tol=cfg.conv_tol, seed=cfg.seed, n_jobs=cfg.jobs)
                    r2 = seesaw(P, "euclid", **kw).r_upper
                    rinf = seesaw(P, "sup", **kw).r_upper
                rows.append([p, q, xi, int(params.realizable), witness_w(P), r2, rinf])
    io.write_csv(args.output, ["p", "q", "xi", "realizable", "witness", "r2", "rinf"], rows)
    return None


COMMANDS = {
    "usd": _cmd_usd, "witness": _cmd_witness, "trine": _cmd_trine, "seesaw": _cmd_seesaw,
    "lowerbound": _cmd_lowerbound, "simulable": _cmd_simulable, "dimension": _cmd_dimension,
    "scan": _cmd_scan,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        result = COMMANDS[args.subcommand](args, cfg)
        if result is not None:
            io.write_json({"config": cfg.to_dict(), "result": result}, args.output)
        return EXIT_OK
    except (ValidationError, DegenerateToleranceError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, MonotonicityError, ScanAborted) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
