"""torsionctl: command-line runs of spectra, Green kernels, heat kernels and torsion.

Exit codes: 0 all checks pass, 1 usage or I/O error, 2 a check failed,
3 numerical failure.  ``--config FILE`` reads an INI file whose section named
after the subcommand supplies defaults; flags on the command line win.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import __version__
from .cohomology import harmonic_dim_check, mayer_vietoris_betti, orbifold_invariant_betti, spindle_gluing
from .green_kernels import (FLAVORS, boundary_residual, builtin_indices, coexact_green_eval,
                            green_bound_check, jump_condition_check, ode_residual, sample_pairs,
                            symmetry_residual)
from .heat_kernels import SolverConfig, SolverError, duhamel_compare, random_pairs
from .link_spectrum import (SpectrumError, circle_quotient_spectrum, format_spectrum, load_spectrum,
                            sphere_spectrum, validate_spectrum)
from .spindle import EigenSolverError, conical_spectrum
from .zeta_torsion import (DEFAULT_CUTOFFS, ZetaError, circle_series, residue_check,
                           spindle_series, torsion, torsion_compare, trace_grid)

EXIT_OK, EXIT_USAGE, EXIT_CHECK, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    tolerance: float | None = None


@dataclass
class Report:
    command: str
    version: str
    config: dict
    checks: list[Check] = field(default_factory=list)
    payload: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, value=None, tolerance=None):
        self.checks.append(Check(name, bool(passed), None if value is None else float(value),
                                 None if tolerance is None else float(tolerance)))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_jsonable)

    def to_text(self) -> str:
        lines = [f"torsionctl {self.command} (version {self.version})"]
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            detail = ""
            if c.value is not None:
                detail = f"  value={c.value:.6g}"
                if c.tolerance is not None:
                    detail += f"  tol={c.tolerance:.3g}"
            lines.append(f"  {tag}  {c.name}{detail}")
        for key, val in self.payload.items():
            if isinstance(val, (int, float, str)):
                lines.append(f"  {key}: {val}")
        return "\n".join(lines)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def threads() -> int:
    """Worker count from TORSIONCTL_THREADS (default 1)."""
    raw = os.environ.get("TORSIONCTL_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"TORSIONCTL_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("TORSIONCTL_THREADS must be at least 1")
    return n


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from None


# ---------------------------------------------------------------------------

def cmd_spectrum(args) -> Report:
    rep = Report("spectrum", __version__, _echo(args))
    if args.load:
        try:
            spec = load_spectrum(args.load)
        except OSError as exc:
            raise UsageError(f"cannot read {args.load}: {exc.strerror or exc}") from None
        except SpectrumError as exc:
            rep.add("parse+validate", False)
            rep.payload["error"] = str(exc)
            return rep
    elif args.m == 1:
        spec = circle_quotient_spectrum(args.k, args.cutoff)
    else:
        spec = sphere_spectrum(args.m, args.cutoff)
    violations = validate_spectrum(spec)
    if args.validate or not args.load:
        rep.add("validate", not violations, len(violations), 0)
    rep.payload.update(m=spec.m, k=spec.group_order, cutoff=spec.cutoff, families=len(spec.modes),
                       families_per_degree={str(i): len(spec.families(i)) for i in range(spec.m + 1)},
                       violations=violations)
    if args.out:
        _write(args.out, format_spectrum(spec))
        rep.payload["out"] = args.out
    return rep


def cmd_green(args) -> Report:
    rep = Report("green", __version__, _echo(args))
    if args.flavor not in FLAVORS:
        raise UsageError(f"unknown flavor {args.flavor!r}; choose from {', '.join(FLAVORS)}")
    grid = np.linspace(0.01, 1.0, 100)
    interior = grid[(grid > 0) & (grid < 1)]
    checks = {"ode", "jump", "symmetry", "boundary"} if args.checks == "all" else set(args.checks.split(","))
    if args.boundary_check:
        checks.add("boundary")
    unknown = checks - {"ode", "jump", "symmetry", "boundary"}
    if unknown:
        raise UsageError(f"unknown checks: {sorted(unknown)}")
    indices = [ind for ind in builtin_indices(args.m, args.cutoff)
               if args.degree is None or ind.degree == args.degree]
    if args.m == 1 and args.k:
        indices = [ind for ind in indices if round(math.sqrt(ind.mu)) % args.k == 0 or ind.degree == 1]
    tol = args.tolerance
    worst = {c: 0.0 for c in checks}
    for ind in indices:
        if "ode" in checks:
            worst["ode"] = max(worst["ode"], ode_residual(ind, args.flavor, grid, grid))
        if "jump" in checks:
            worst["jump"] = max(worst["jump"], max(jump_condition_check(ind, args.flavor, r)
                                                    for r in interior[::10]))
        if "symmetry" in checks:
            worst["symmetry"] = max(worst["symmetry"], symmetry_residual(ind, args.flavor, grid))
        if "boundary" in checks and args.flavor != "model":
            applies = ind.mu > 0 if args.flavor == "absolute" else ind.nu > 0
            if applies:
                worst["boundary"] = max(worst["boundary"], boundary_residual(ind, args.flavor, grid[:-1]))
    for name in sorted(checks):
        rep.add(f"{name} residual ({args.flavor}, m={args.m})", worst[name] < tol, worst[name], tol)
    rep.payload["indices"] = len(indices)
    if args.samples:
        rng = np.random.default_rng(args.seed)
        pairs = sample_pairs(args.k, args.samples, rng)
        fit = green_bound_check(args.k, args.flavor, pairs)
        rep.add("log-distance bound (validation half)", fit.violations == 0, fit.violations, 0)
        rep.payload["bound"] = asdict(fit)
    if args.eval:
        r1, t1, r2, t2 = args.eval
        ev = coexact_green_eval(circle_quotient_spectrum(args.k, 1.0), args.degree or 0, args.flavor,
                                (r1, t1), (r2, t2))
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["flavor", "r1", "theta1", "r2", "theta2", "value", "tail_bound"])
        writer.writerow([args.flavor, r1, t1, r2, t2, repr(ev.value), repr(ev.tail_bound)])
        rep.payload["csv"] = buf.getvalue()
        if args.out:
            _write(args.out, buf.getvalue())
    return rep


def cmd_heat(args) -> Report:
    rep = Report("heat", __version__, _echo(args))
    rng = np.random.default_rng(args.seed)
    pairs = random_pairs(args.k, args.pairs, rng, args.r_min, 1.0)
    cfg = SolverConfig(h=args.h, steps=args.steps, stretch=args.stretch, richardson=not args.no_richardson,
                       r_out=args.r_out)
    grid = duhamel_compare(args.k, args.times, pairs, cfg, args.method, workers=threads())
    rep.add("sup relative discrepancy", grid.sup_rel_discrepancy < args.tolerance,
            grid.sup_rel_discrepancy, args.tolerance)
    rep.payload["heat_grid"] = grid.to_json_dict()
    rep.payload["sup_rel_discrepancy"] = grid.sup_rel_discrepancy
    if args.out:
        _write(args.out, json.dumps(grid.to_json_dict(), indent=2, sort_keys=True))
    if args.emit_plot_data:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "dist", "K_c", "K_o"])
        for ti, t in enumerate(grid.times):
            for pi, (a, b) in enumerate(pairs):
                xa, ya = a.cartesian()
                dist = min(math.hypot(xa - b.r * math.cos(b.theta + 2 * math.pi * j / args.k),
                                      ya - b.r * math.sin(b.theta + 2 * math.pi * j / args.k))
                           for j in range(args.k))
                writer.writerow([t, repr(dist), repr(grid.values_c[ti][pi]), repr(grid.values_o[ti][pi])])
        _write(args.emit_plot_data, buf.getvalue())
    return rep


def cmd_torsion(args) -> Report:
    rep = Report("torsion", __version__, _echo(args))
    if args.circle == args.spindle:
        raise UsageError("choose exactly one of --circle and --spindle")
    if args.circle:
        if args.L is None or not args.L > 0:
            raise UsageError("--circle needs --L > 0")
        series = circle_series(args.L)
        target = -math.log(args.L)
        paths = {"closed": series, "mellin": {i: s.as_mellin() for i, s in series.items()}}
        for name in (["closed", "mellin"] if args.method == "both" else [args.method]):
            tr = torsion(paths[name])
            err = abs(tr.log_torsion - target)
            rep.add(f"log T = -log L ({name})", err < args.tolerance, err, args.tolerance)
            rep.payload[f"torsion_{name}"] = tr.to_json_dict()
        if args.residue_check:
            times = trace_grid()
            fit = residue_check(times, {1: series[1].trace(times)}, 1, weights={1: 1.0},
                                tolerance=1e-6)
            rep.add("circle log-t coefficient", fit.passed, fit.log_coefficient, fit.tolerance)
        return rep
    k = args.k
    if args.compare:
        report = torsion_compare(k, args.radius, args.cutoffs)
        rep.add("|log T_c - log T_o|", report.discrepancy < args.tolerance, report.discrepancy, args.tolerance)
        rep.add("harmonic dimensions", all(c.passed for c in harmonic_dim_check(k)))
        rep.payload["torsion_report"] = report.to_json_dict()
        rep.payload["log_T_c"] = report.log_T_c
        rep.payload["log_T_o"] = report.log_T_o
    if args.residue_check:
        spec = conical_spectrum(k, args.radius, max(args.cutoffs))
        series = spindle_series(spec)
        times = trace_grid()
        traces = {i: s.trace(times) for i, s in series.items()}
        fit = residue_check(times, traces, 2)
        rep.add("weighted log-t coefficient", fit.passed, fit.log_coefficient, fit.tolerance)
        rep.payload["residue"] = asdict(fit)
        rep.payload["single_degree"] = {str(i): asdict(residue_check(times, traces, 2, weights={i: 1.0}))
                                        for i in range(3)}
    if not (args.compare or args.residue_check):
        spec = conical_spectrum(k, args.radius, max(args.cutoffs))
        tr = torsion(spindle_series(spec))
        rep.payload["torsion_report"] = tr.to_json_dict()
        rep.payload["log_torsion"] = tr.log_torsion
        mv = mayer_vietoris_betti(spindle_gluing(k))
        rep.add("kernel dims match Betti numbers",
                list(spec.kernel_dims()) == list(mv.dims) == list(orbifold_invariant_betti(k).dims))
    return rep


# ---------------------------------------------------------------------------

def _echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the report as JSON")
    common.add_argument("--quiet", action="store_true", help="suppress normal output")
    common.add_argument("--config", help="INI file with a section per subcommand")

    parser = _Parser(prog="torsionctl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"torsionctl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", parents=[common], help="build, validate and write link spectra")
    p.add_argument("--k", type=_positive_int, default=1, help="order of Z_k acting on S^1")
    p.add_argument("--m", type=_positive_int, default=1, help="link dimension (m > 1: round sphere)")
    p.add_argument("--cutoff", type=float, default=100.0)
    p.add_argument("--out")
    p.add_argument("--load")
    p.add_argument("--validate", action="store_true")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("green", parents=[common], help="radial Green kernel checks and evaluations")
    p.add_argument("--k", type=_positive_int, default=1)
    p.add_argument("--m", type=int, choices=(1, 3), default=1)
    p.add_argument("--degree", type=int)
    p.add_argument("--flavor", default="model")
    p.add_argument("--checks", default="all", help="all or a comma list of ode,jump,symmetry,boundary")
    p.add_argument("--boundary-check", action="store_true")
    p.add_argument("--cutoff", type=float, default=60.0)
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--samples", type=int, default=0, help="pairs for the log-distance bound fit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval", type=_floats, help="r1,theta1,r2,theta2 for a CSV kernel row")
    p.add_argument("--out")
    p.set_defaults(func=cmd_green)

    p = sub.add_parser("heat", parents=[common], help="mode-sum versus image-sum heat kernels")
    p.add_argument("--k", type=_positive_int, default=2)
    p.add_argument("--times", type=_floats, default=[0.05, 0.2, 1.0])
    p.add_argument("--pairs", type=_positive_int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r-min", type=float, default=0.3)
    p.add_argument("--method", choices=("solver", "bessel"), default="solver")
    p.add_argument("--h", type=float, default=SolverConfig.h)
    p.add_argument("--steps", type=_positive_int, default=SolverConfig.steps)
    p.add_argument("--stretch", type=float, default=SolverConfig.stretch)
    p.add_argument("--r-out", type=float)
    p.add_argument("--no-richardson", action="store_true")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--out")
    p.add_argument("--emit-plot-data", metavar="CSV")
    p.set_defaults(func=cmd_heat)

    p = sub.add_parser("torsion", parents=[common], help="torsion, residue check and conical/orbifold comparison")
    p.add_argument("--circle", action="store_true")
    p.add_argument("--L", type=float)
    p.add_argument("--method", choices=("closed", "mellin", "both"), default="both")
    p.add_argument("--spindle", action="store_true")
    p.add_argument("--k", type=_positive_int, default=2)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--cutoffs", type=_floats, default=list(DEFAULT_CUTOFFS))
    p.add_argument("--compare", action="store_true")
    p.add_argument("--residue-check", action="store_true")
    p.add_argument("--tolerance", type=float, default=None)
    p.set_defaults(func=cmd_torsion)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = configparser.ConfigParser()
    cfg.optionxform = str  # keys are case sensitive, like the flags (--L)
    try:
        with open(known.config, encoding="utf-8") as fh:
            cfg.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {known.config}: {exc.strerror or exc}") from None
    except configparser.Error as exc:
        raise UsageError(f"malformed config {known.config}: {exc}") from None
    subactions = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, subparser in subactions.choices.items():
        if not cfg.has_section(name):
            continue
        by_dest = {a.dest: a for a in subparser._actions}
        defaults = {}
        for key, raw in cfg.items(name):
            dest = key.replace("-", "_")
            action = by_dest.get(dest)
            if action is None:
                raise UsageError(f"config [{name}] has unknown key {key!r}")
            if isinstance(action, argparse._StoreTrueAction):
                defaults[dest] = cfg.getboolean(name, key)
            elif action.type is not None:
                try:
                    defaults[dest] = action.type(raw)
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise UsageError(f"config [{name}] {key}: {exc}") from None
            else:
                defaults[dest] = raw
        subparser.set_defaults(**defaults)


_TORSION_TOL = {"circle": 1e-6, "spindle": 1e-4}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if args.command == "torsion" and args.tolerance is None:
            args.tolerance = _TORSION_TOL["circle" if args.circle else "spindle"]
        report = args.func(args)
    except UsageError as exc:
        print(f"torsionctl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, EigenSolverError, ZetaError, FloatingPointError, ArithmeticError) as exc:
        print(f"torsionctl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SpectrumError, ValueError) as exc:
        print(f"torsionctl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not args.quiet:
        print(report.to_json() if args.json else report.to_text())
    return EXIT_OK if report.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
