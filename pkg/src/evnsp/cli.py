"""Command-line entry point.

Subcommands: run (advance a configured system and write artifacts),
verify (manufactured-solution and refinement suites), init (emit initial
data as a snapshot), diag (one-shot diagnostics on a snapshot).

Exit codes: 0 ok, 2 config error, 3 numerical abort, 4 verification
failure.  EVNSP_THREADS caps BLAS/OpenMP parallelism (1 = reference mode).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .config import load_config
from .diagnostics import make_record
from .errors import ConfigError, EvnspError
from .model_full import BipolarState
from .model_reduced import ReducedState, reconstruct_full
from .poisson import weighted_mean
from .runner import build_initial_state, run
from .snapshot import pack_state, read_snapshot, unpack_state, write_snapshot

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4


def _error_block(kind: str, exc: BaseException) -> None:
    block = {"error": type(exc).__name__, "kind": kind, "message": str(exc)}
    print(json.dumps(block), file=sys.stderr)


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out_dir = args.out_dir or cfg.out_dir
    state = reduced = None
    t0 = 0.0
    if args.restart:
        grid, comp = read_snapshot(args.restart)
        if grid != cfg.grid():
            raise ConfigError("restart snapshot grid does not match the config")
        unpacked = unpack_state(grid, comp)
        if isinstance(unpacked, tuple):
            state, reduced = unpacked
        else:
            state = unpacked
        t0 = args.t0
    run(cfg, out_dir=out_dir, state=state, reduced=reduced, t0=t0)
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import SUITES, verify

    suites = args.suite or None
    if suites:
        unknown = [s for s in suites if s not in SUITES]
        if unknown:
            raise ConfigError(f"unknown suite(s): {', '.join(unknown)}")
    report = verify(suites)
    print(json.dumps(report, indent=2, default=float))
    return EXIT_OK if report["all_passed"] else EXIT_VERIFY


def _cmd_init(args) -> int:
    cfg = load_config(args.config)
    state, reduced, _ = build_initial_state(cfg)
    write_snapshot(args.out, cfg.grid(), pack_state(state, reduced))
    return EXIT_OK


def _cmd_diag(args) -> int:
    cfg = load_config(args.config)
    grid, comp = read_snapshot(args.snapshot)
    unpacked = unpack_state(grid, comp)
    reduced = None
    if isinstance(unpacked, tuple):
        state, reduced = unpacked
    else:
        state = unpacked
    if isinstance(state, ReducedState):
        reduced, state = state, reconstruct_full(state)
        state.psi = reduced.psi if reduced.psi is not None else grid.scalar()

    if isinstance(state, BipolarState):
        p = (cfg.phys(charge_sign="-"), cfg.phys(charge_sign="+"))
        rho_mean0 = 0.5 * (weighted_mean(grid, state.minus.rho)
                           + weighted_mean(grid, state.plus.rho))
    else:
        p = cfg.phys()
        rho_mean0 = weighted_mean(grid, state.rho)
    rec = make_record(args.time, state, p, rho_mean0, reduced=reduced)
    print(",".join(rec.columns))
    print(",".join(f"{v:.17g}" for v in rec.row()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="evnsp")
    ap.add_argument("--version", action="version", version=f"evnsp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="advance the configured system to t_end")
    p.add_argument("config")
    p.add_argument("--out-dir", help="override [output] out_dir")
    p.add_argument("--restart", help="resume from an EVNSP1 snapshot")
    p.add_argument("--t0", type=float, default=0.0,
                   help="simulation time of the restart snapshot")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("verify", help="run the verification suites")
    p.add_argument("--suite", action="append",
                   help="restrict to one suite (repeatable)")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("init", help="emit well-prepared initial data")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="snapshot path to write")
    p.set_defaults(fn=_cmd_init)

    p = sub.add_parser("diag", help="one-shot diagnostics on a snapshot")
    p.add_argument("snapshot")
    p.add_argument("config")
    p.add_argument("--time", type=float, default=0.0,
                   help="time value recorded in the diagnostics row")
    p.set_defaults(fn=_cmd_diag)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        _error_block("config", e)
        return EXIT_CONFIG
    except (EvnspError, FloatingPointError) as e:
        _error_block("numerical", e)
        return EXIT_NUMERICAL
    except OSError as e:
        _error_block("config", e)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
