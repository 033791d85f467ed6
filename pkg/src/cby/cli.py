"""Command line driver: cby run | check | idata.

Exit status taxonomy: 0 complete, 2 hyperbolicity refusal, 3 breakdown
mid-run, 4 config error.
"""

import argparse
import os
import sys

import numpy as np

from .blocks import char_speeds, fosh_check
from .config import build_state, eos_of, halt_of, parse_config, stencil_of
from .errors import CbyError, ParseError, SingularPrincipal, ValidationError
from .integrate import evolve
from .monitor import RESIDUAL_NAMES, compute_report, einstein_residual, norms
from .snapshot import write_snapshot

EXIT_OK = 0
EXIT_HYPERBOLICITY = 2
EXIT_BREAKDOWN = 3
EXIT_CONFIG = 4


def _tiles():
    """CBY_TILES selects the worker tile count; the numpy execution path is
    tile-independent, so any positive value yields identical results."""
    raw = os.environ.get("CBY_TILES", "1")
    try:
        tiles = int(raw)
    except ValueError:
        raise ValidationError(f"CBY_TILES must be an integer, got {raw!r}")
    if tiles < 1:
        raise ValidationError("CBY_TILES must be >= 1")
    return tiles


def _load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _csv_header():
    cols = ["t"]
    for name in RESIDUAL_NAMES:
        cols += [f"{name}_l2", f"{name}_linf"]
    return ",".join(cols)


def cmd_run(args):
    cfg = _load_config(args.config)
    _tiles()
    state = build_state(cfg)
    stencil = stencil_of(cfg)

    fr = fosh_check(state)
    print(fr)
    if not fr.passed:
        print("status: refused (hyperbolicity check failed before stepping)")
        return EXIT_HYPERBOLICITY

    outdir = cfg.directory
    os.makedirs(outdir, exist_ok=True)
    csv_path = os.path.join(outdir, "residuals.csv")
    csv = open(csv_path, "w", encoding="utf-8")
    csv.write(_csv_header() + "\n")

    def on_report(s, step, report):
        csv.write(",".join(repr(x) for x in report.row()) + "\n")
        csv.flush()
        write_snapshot(s, os.path.join(outdir, f"state_{step:06d}.bin"))
        print(f"step {step:6d}  {report}")

    result = evolve(state, cfg.t_end, stencil, halt=halt_of(cfg),
                    every_steps=cfg.every_steps, fosh_every=cfg.fosh_every,
                    on_report=on_report)
    csv.close()
    print(f"status: {result.status} ({result.reason}) after {result.steps} steps, "
          f"t = {result.state.t:.6g}")
    if result.status == "complete":
        return EXIT_OK
    if result.status == "refused":
        return EXIT_HYPERBOLICITY
    return EXIT_BREAKDOWN


def cmd_check(args):
    cfg = _load_config(args.config)
    _tiles()
    state = build_state(cfg)
    stencil = stencil_of(cfg)

    fr = fosh_check(state)
    print(fr)
    print(f"eigenvalue extrema: min {fr.min_eigenvalue:.6e}, max {1.0 + fr.max_abs_B:.6e}")
    try:
        v_light, v_sound = char_speeds(state)
        print(f"characteristic coordinate speeds: light {v_light:.6e}, sound {v_sound:.6e}")
    except SingularPrincipal as exc:
        print(f"characteristic speeds singular: {exc}")

    report = compute_report(state, stencil)
    print("initial residuals (L2, Linf):")
    for name in RESIDUAL_NAMES:
        print(f"  {name:15s} {report.l2[name]:.6e}  {report.linf[name]:.6e}")

    S, _ = einstein_residual(state)
    ham_l2, ham_linf = norms(S[0, 0], state.L)
    mom_l2, mom_linf = norms(S[0, 1:], state.L)
    print("initial-slice constraint residuals (rows 0mu of S):")
    print(f"  hamiltonian     {ham_l2:.6e}  {ham_linf:.6e}")
    print(f"  momentum        {mom_l2:.6e}  {mom_linf:.6e}")
    return EXIT_OK if fr.passed else EXIT_HYPERBOLICITY


def cmd_idata(args):
    cfg = _load_config(args.config)
    state = build_state(cfg)
    nbytes = write_snapshot(state, args.output)
    print(f"wrote {args.output} ({nbytes} bytes)")
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cby",
        description="Symmetric hyperbolic Einstein/Einstein-Euler evolution "
                    "on a periodic 3-torus with constraint monitoring.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="evolve a scenario and write residuals.csv")
    p_run.add_argument("config")
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="hyperbolicity and initial residual report")
    p_check.add_argument("config")
    p_check.set_defaults(func=cmd_check)

    p_idata = sub.add_parser("idata", help="build initial data and write a snapshot")
    p_idata.add_argument("config")
    p_idata.add_argument("-o", "--output", required=True)
    p_idata.set_defaults(func=cmd_idata)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_HYPERBOLICITY if exc.hyperbolicity else EXIT_CONFIG
    except ParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CbyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BREAKDOWN


if __name__ == "__main__":
    sys.exit(main())
