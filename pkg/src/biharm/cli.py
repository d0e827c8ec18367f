"""Command-line interface: ``biharm {solve,sweep,homoclinic,reconstruct,verify,replay}``.

Every file written is accompanied by ``<stem>.manifest.json``, which records
the fully resolved options; ``biharm replay <manifest>`` regenerates the same
bytes.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .dynamics import PhaseState, energy, homoclinic_derivatives, relative_ode_residual
from .family import (PeriodDetectionFailed, QuadratureError, biharmonic_residual,
                     reconstruct_u, solve_member, sweep_family)
from .integrator import StiffFailure
from .params import DomainError, ProblemParams, make_generic_params, make_params
from .shooting import SHOOTING_CONFIG, BracketFailed, ShootingError, ValidationFailed
from .verify import SUITES, run_suites

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 64

log = logging.getLogger("biharm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(x: float) -> str:
    """17 significant digits: parses back to the identical double."""
    return format(float(x), ".17g")


def write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(c if isinstance(c, str) else fmt(c) for c in row) + "\n")


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, allow_nan=True)
        fh.write("\n")


def _add_params(p, need_n: bool = False):
    p.add_argument("--n", type=int, help="dimension n >= 5")
    if not need_n:
        p.add_argument("--A", type=float)
        p.add_argument("--B", type=float)
        p.add_argument("--p", type=float)


def _add_numerics(p):
    p.add_argument("--tol", type=float, default=SHOOTING_CONFIG.rel_tol,
                   help="relative tolerance (absolute tolerance is 1e-2 of it)")
    p.add_argument("--horizon", type=float, default=SHOOTING_CONFIG.horizon,
                   help="shooting horizon in t units")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="biharm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("solve", help="one periodic family member")
    _add_params(p)
    p.add_argument("--a", type=float, required=True, help="minimum value, 0 < a < a0")
    _add_numerics(p)
    p.add_argument("--samples", type=int, default=1001, help="profile rows over one period")
    p.add_argument("--out", default="solve", help="output stem")

    p = sub.add_parser("sweep", help="family table over a grid of a")
    _add_params(p)
    p.add_argument("--a-min", type=float, required=True)
    p.add_argument("--a-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--grid", choices=("linear", "geometric"), default="linear")
    _add_numerics(p)
    p.add_argument("--workers", type=int, default=None,
                   help="parallel rows (default $BIHARM_THREADS or CPU count)")
    p.add_argument("--out", default="sweep", help="output stem")

    p = sub.add_parser("homoclinic", help="closed-form homoclinic profile")
    _add_params(p)
    p.add_argument("--t-min", type=float, default=-10.0)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--out", default="homoclinic", help="output stem")

    p = sub.add_parser("reconstruct", help="u(r) from a periodic member")
    _add_params(p)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--L", type=float, default=0.0, help="log-radius shift")
    p.add_argument("--r-min", type=float, default=1e-3)
    p.add_argument("--r-max", type=float, default=10.0)
    p.add_argument("--samples", type=int, default=400)
    _add_numerics(p)
    p.add_argument("--out", default="reconstruct", help="output stem")

    p = sub.add_parser("verify", help="run property suites")
    _add_params(p)
    p.add_argument("--suite", action="append", default=None,
                   help=f"one of {', '.join(SUITES + ('all',))}; repeatable")
    _add_numerics(p)

    p = sub.add_parser("replay", help="re-run a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="write to this stem instead of the recorded one")
    return parser


def resolve_params(args) -> ProblemParams:
    generic = [getattr(args, k, None) for k in ("A", "B", "p")]
    if args.n is not None:
        if any(g is not None for g in generic):
            raise UsageError("give either --n or --A/--B/--p, not both")
        return make_params(args.n)
    if all(g is not None for g in generic):
        return make_generic_params(*generic)
    raise UsageError("--n (or all of --A, --B, --p) is required")


def _config(args):
    if not (args.tol > 0 and math.isfinite(args.tol)):
        raise UsageError(f"--tol must be positive, got {args.tol}")
    if not args.horizon > 0:
        raise UsageError(f"--horizon must be positive, got {args.horizon}")
    return SHOOTING_CONFIG.replace(rel_tol=args.tol, abs_tol=1e-2 * args.tol, horizon=args.horizon)


def _options(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "workers")}


def _manifest(args, outputs: List[str]) -> dict:
    return {
        "command": args.command,
        "options": _options(args),
        "version": __version__,
        "outputs": outputs,
    }


def _finish(args, stem: str, outputs: List[str]) -> None:
    write_json(stem + ".manifest.json", _manifest(args, outputs))


def _ensure_dir(stem: str) -> None:
    d = os.path.dirname(stem)
    if d:
        os.makedirs(d, exist_ok=True)


def cmd_solve(args) -> int:
    P = resolve_params(args)
    cfg = _config(args)
    if args.samples < 2:
        raise UsageError("--samples must be >= 2")
    if not 0.0 < args.a < P.a0:
        raise UsageError(f"--a must satisfy 0 < a < a0={P.a0!r}, got {args.a!r}")
    sol = solve_member(P, args.a, cfg)
    _ensure_dir(args.out)
    ts, states = sol.sample(args.samples)
    rows = []
    for t, y in zip(ts, states):
        rows.append((t, *y, energy(P, PhaseState.from_array(t, y))))
    write_csv(args.out + ".csv", ("t", "v", "v1", "v2", "v3", "energy"), rows)
    write_json(args.out + ".json", {"a": sol.a, "beta_star": sol.beta_star, "period": sol.period,
                                    "energy": sol.energy, "v_max": sol.v_max})
    _finish(args, args.out, [args.out + ".csv", args.out + ".json"])
    print(f"a={fmt(sol.a)} beta*={fmt(sol.beta_star)} L={fmt(sol.period)} -> {args.out}.csv")
    return EXIT_OK


def a_grid(a_min: float, a_max: float, steps: int, grid: str) -> list:
    if steps < 1 or not a_min <= a_max:
        raise UsageError("empty grid: need --steps >= 1 and --a-min <= --a-max")
    if steps == 1:
        return [a_min]
    if grid == "geometric":
        if a_min <= 0:
            raise UsageError("geometric grid needs --a-min > 0")
        return [float(x) for x in np.geomspace(a_min, a_max, steps)]
    return [float(x) for x in np.linspace(a_min, a_max, steps)]


def cmd_sweep(args) -> int:
    P = resolve_params(args)
    cfg = _config(args)
    values = a_grid(args.a_min, args.a_max, args.steps, args.grid)
    for a in values:
        if not 0.0 < a < P.a0:
            raise UsageError(f"grid value a={a!r} outside (0, a0={P.a0!r})")
    rows = sweep_family(P, values, cfg, workers=args.workers)
    _ensure_dir(args.out)
    write_csv(args.out + ".csv", ("a", "beta_star", "period", "energy", "v_max", "status"),
              [(r.a, r.beta_star, r.period, r.energy, r.v_max, r.status.replace(",", ";"))
               for r in rows])
    _finish(args, args.out, [args.out + ".csv"])
    failed = [r for r in rows if not r.ok]
    for r in failed:
        print(f"row a={fmt(r.a)} failed: {r.status}", file=sys.stderr)
    print(f"{len(rows) - len(failed)}/{len(rows)} rows ok -> {args.out}.csv")
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_homoclinic(args) -> int:
    P = resolve_params(args)
    if P.is_generic:
        raise UsageError("the homoclinic profile needs --n")
    if args.samples < 2 or not args.t_min < args.t_max:
        raise UsageError("need --samples >= 2 and --t-min < --t-max")
    ts = np.linspace(args.t_min, args.t_max, args.samples)
    rows = []
    worst = 0.0
    for t in ts:
        v, v1, v2, v3, v4 = homoclinic_derivatives(P, float(t))
        worst = max(worst, relative_ode_residual(P, v, v2, v4))
        rows.append((t, v, v1, v2, v3, energy(P, PhaseState(float(t), v, v1, v2, v3))))
    _ensure_dir(args.out)
    write_csv(args.out + ".csv", ("t", "v", "v1", "v2", "v3", "energy"), rows)
    write_json(args.out + ".json", {"n": P.n, "cn": P.cn, "peak": homoclinic_derivatives(P, 0.0)[0],
                                    "max_residual": worst})
    _finish(args, args.out, [args.out + ".csv", args.out + ".json"])
    print(f"max relative residual {worst:.3e} -> {args.out}.csv")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    P = resolve_params(args)
    if P.is_generic:
        raise UsageError("reconstruction needs --n")
    cfg = _config(args)
    if not args.r_min > 0:
        raise UsageError(f"--r-min must be positive, got {args.r_min}")
    if not args.r_max > args.r_min or args.samples < 2:
        raise UsageError("need --r-max > --r-min and --samples >= 2")
    if not 0.0 < args.a < P.a0:
        raise UsageError(f"--a must satisfy 0 < a < a0={P.a0!r}, got {args.a!r}")
    sol = solve_member(P, args.a, cfg)
    rs = np.geomspace(args.r_min, args.r_max, args.samples)
    k = P.decay_exponent
    rows = []
    for r in rs:
        u = reconstruct_u(P, sol, args.L, float(r))
        rows.append((r, u, r ** k * u))
    res = biharmonic_residual(P, sol, args.L, rs)
    _ensure_dir(args.out)
    write_csv(args.out + ".csv", ("r", "u", "u_scaled"), rows)
    write_json(args.out + ".json", {"a": sol.a, "beta_star": sol.beta_star, "period": sol.period,
                                    "L": args.L, "v_max": sol.v_max, "max_residual": res})
    _finish(args, args.out, [args.out + ".csv", args.out + ".json"])
    print(f"max biharmonic residual {res:.3e} -> {args.out}.csv")
    return EXIT_OK


def cmd_verify(args) -> int:
    P = resolve_params(args)
    cfg = _config(args)
    names = args.suite or ["all"]
    for name in names:
        if name not in SUITES + ("all",):
            raise UsageError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    results = run_suites(P, names, cfg)
    for suite, c in results:
        print(f"{suite:<11s}{c.line()}")
    n_fail = sum(not c.passed for _, c in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return EXIT_OK if n_fail == 0 else EXIT_VALIDATION


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "homoclinic": cmd_homoclinic,
    "reconstruct": cmd_reconstruct,
    "verify": cmd_verify,
}


def manifest_argv(manifest: dict, out: Optional[str] = None) -> List[str]:
    """Command line equivalent to a manifest."""
    argv = [manifest["command"]]
    opts = dict(manifest["options"])
    if out is not None:
        opts["out"] = out
    for key, val in sorted(opts.items()):
        if val is None:
            continue
        flag = "--" + key.replace("_", "-")
        if key in ("A", "B", "p", "n", "a", "L"):
            flag = "--" + key
        if isinstance(val, list):
            for item in val:
                argv += [flag, str(item)]
        else:
            argv += [flag, repr(val) if isinstance(val, float) else str(val)]
    return argv


def cmd_replay(args) -> int:
    try:
        with open(args.manifest, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read manifest {args.manifest}: {exc}") from exc
    if manifest.get("command") not in COMMANDS:
        raise UsageError(f"manifest has no replayable command: {manifest.get('command')!r}")
    return main(manifest_argv(manifest, args.out))


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        if args.command == "replay":
            return cmd_replay(args)
        return COMMANDS[args.command](args)
    except (UsageError, DomainError) as exc:
        print(f"biharm: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationFailed as exc:
        print(f"biharm: validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (BracketFailed, PeriodDetectionFailed, ShootingError, QuadratureError,
            StiffFailure) as exc:
        print(f"biharm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
