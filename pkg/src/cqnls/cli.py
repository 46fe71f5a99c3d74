"""Command-line front end: ``cqnls <command> [options]``.

Every command writes into its own output directory (``--out``, default
``cqnls-out/<command>``) and prints a short JSON or text summary. Exit codes:
0 success, 1 usage, 2 domain error, 3 convergence failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import __version__
from .curve import (
    LOWER_RHO_FACTOR,
    SolitonCurve,
    classify_stability,
    default_samples,
    find_critical_frequency,
    normalized_solutions,
    trace_curve,
    variational_values,
)
from .errors import CQNLSError, DomainError, PerturbationOutOfRange
from .functionals import evaluate
from .ground_state import ShootingConfig, as_frequency, residual, solve_ground_state
from .output import config_hash, svg_polyline, write_json


class UsageError(CQNLSError):
    exit_code = 1


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


TRUE = {"1", "true", "yes", "on"}


def _flag(value) -> bool:
    return value if isinstance(value, bool) else str(value).strip().lower() in TRUE


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; '#' starts a comment, keys use option names."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _common(p: argparse.ArgumentParser):
    p.add_argument("--out", help="output directory (default cqnls-out/<command>)")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-h", type=float, default=0.02)
    p.add_argument("--r-max", type=float, default=None)
    p.add_argument("--svg", default=False, action="store_true", help="also write an SVG plot")
    p.add_argument("-v", "--verbose", action="store_true")


def _curve_opts(p: argparse.ArgumentParser):
    p.add_argument("--samples", type=int, default=128)
    p.add_argument("--omega-min", type=float, default=0.002)
    p.add_argument("--omega-max", type=float, default=0.18)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--curve-dir", help="reuse (or create) curve.json in this directory")


def build_parser() -> Parser:
    parser = Parser(prog="cqnls", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)
    parser.commands = sub.choices

    p = sub.add_parser("ground-state", help="solve Q_omega, write profile.csv and report.json")
    _common(p)
    p.add_argument("--omega", type=float, help="frequency in (0, 3/16), required")

    p = sub.add_parser("curve", help="trace omega -> M(Q_omega), write curve.csv and summary.json")
    _common(p)
    _curve_opts(p)

    p = sub.add_parser("critical", help="omega* and m0 by golden section")
    _common(p)
    _curve_opts(p)
    p.add_argument("--start", type=float, nargs=2, metavar=("A", "B"),
                   help="grow the bracket downhill from [A, B]")

    p = sub.add_parser("spectrum", help="lowest radial eigenvalues of L+ and L-")
    _common(p)
    p.add_argument("--omega", type=float, help="frequency in (0, 3/16), required")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--modes", action="store_true", help="dump eigenvectors as CSV")

    p = sub.add_parser("evolve", help="stability experiment from three perturbations")
    _common(p)
    _curve_opts(p)
    p.add_argument("--omega", type=float, help="frequency in (0, 3/16), required")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--dyn-h", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--no-curve", action="store_true", help="skip the slope-rule cross-check")

    p = sub.add_parser("classify", help="Stable / Unstable / Marginal by the omega* rule")
    _common(p)
    _curve_opts(p)
    p.add_argument("--omega", type=float, help="frequency in (0, 3/16), required")

    p = sub.add_parser("normalized", help="frequencies with M(Q_omega) = m")
    _common(p)
    _curve_opts(p)
    p.add_argument("--mass", type=float, help="target mass, required")

    p = sub.add_parser("variational", help="d_m and d_m^I")
    _common(p)
    _curve_opts(p)
    p.add_argument("--mass", type=float, help="target mass, required")

    p = sub.add_parser("constants", help="d0, rho, m0, omega*, omega_{E=0}")
    _common(p)
    _curve_opts(p)
    return parser


REQUIRED = {
    "ground-state": ("omega",), "spectrum": ("omega",), "evolve": ("omega",),
    "classify": ("omega",), "normalized": ("mass",), "variational": ("mass",),
}


def parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sp = parser.commands[args.command]
        known = set(vars(sp.parse_known_args([], argparse.Namespace())[0]))
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        sp.set_defaults(**cfg)
        args = parser.parse_args(argv)
    for name in REQUIRED.get(args.command, ()):
        if getattr(args, name) is None:
            parser.commands[args.command].error(f"--{name} is required (flag or config file)")
    for name in ("svg", "verbose", "modes", "no_curve"):
        if hasattr(args, name):
            setattr(args, name, _flag(getattr(args, name)))
    return args


def validate(args):
    """Reject bad parameters before any solve."""
    if getattr(args, "omega", None) is not None:
        as_frequency(args.omega)
    if getattr(args, "mass", None) is not None and not args.mass > 0:
        raise DomainError("mass must be positive")
    if getattr(args, "eps", None) is not None and abs(args.eps) > 0.1:
        raise PerturbationOutOfRange(f"|eps| = {abs(args.eps):g} > 0.1")
    if not args.grid_h > 0:
        raise DomainError("grid spacing must be positive")
    if hasattr(args, "samples"):
        if args.samples < 64:
            raise DomainError("the curve needs at least 64 samples")
        as_frequency(args.omega_min)
        as_frequency(args.omega_max)
        if not args.omega_min < args.omega_max:
            raise DomainError("omega-min must be below omega-max")
    if getattr(args, "k", None) is not None and not 1 <= args.k <= 8:
        raise DomainError("k must be between 1 and 8")


def _params(args) -> dict:
    skip = {"out", "config", "verbose", "curve_dir", "workers", "svg"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


class Run:
    def __init__(self, args):
        self.args = args
        self.out = Path(args.out or Path("cqnls-out") / args.command)
        self.out.mkdir(parents=True, exist_ok=True)
        self.params = _params(args)
        self.meta = {"command": args.command, "config_hash": config_hash(self.params),
                     "seed": args.seed, "grid_h": repr(args.grid_h),
                     "r_max": repr(args.r_max) if args.r_max is not None else "default"}

    def shooting(self) -> ShootingConfig:
        return ShootingConfig(grid_h=self.args.grid_h, r_max=self.args.r_max)

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
        return path

    def json(self, name: str, payload: dict) -> str:
        text = write_json({**payload, "meta": self.meta})
        self.write(name, text)
        return text

    def curve(self) -> SolitonCurve:
        a = self.args
        cfg = replace(self.shooting(), r_max=None)
        cache = Path(a.curve_dir) / "curve.json" if a.curve_dir else None
        key = config_hash({"samples": a.samples, "omega_min": a.omega_min,
                           "omega_max": a.omega_max, "grid_h": a.grid_h})
        if cache is not None and cache.exists():
            data = json.loads(cache.read_text())
            if data.get("key") == key:
                return SolitonCurve.from_dict(data["curve"])
        curve = trace_curve(default_samples(a.samples, a.omega_min, a.omega_max), cfg,
                            workers=a.workers)
        if cache is not None:
            cache.parent.mkdir(parents=True, exist_ok=True)
            cache.write_text(json.dumps({"key": key, "curve": curve.to_dict()}, sort_keys=True))
        return curve


def cmd_ground_state(run: Run):
    q = solve_ground_state(run.args.omega, run.shooting())
    rep = evaluate(q)
    meta = {**run.meta, "n": q.grid.n}
    run.write("profile.csv", q.to_csv(meta))
    text = run.json("report.json", {**asdict(rep), "omega": q.omega.omega,
                                    "amplitude": q.amplitude_a, "decay_c": q.decay_c,
                                    "decay_rate": q.decay_rate, "residual": residual(q)})
    return text


def cmd_curve(run: Run):
    c = run.curve()
    run.write("curve.csv", c.to_csv(run.meta))
    if run.args.svg:
        run.write("curve.svg", svg_polyline(c.omegas, c.column("mass"), "omega", "M(Q)"))
    return run.json("summary.json", c.summary())


def cmd_critical(run: Run):
    c = run.curve()
    start = tuple(run.args.start) if run.args.start else None
    w, m0 = find_critical_frequency(c, c.config, start=start)
    return run.json("critical.json", {"omega_star": w, "m0": m0})


def cmd_spectrum(run: Run):
    from .spectral import OperatorKind, build_operator, cosine_similarity, lowest_eigenpairs, \
        mode_csv, rayleigh_lambda_star, spectrum_csv

    q = solve_ground_state(run.args.omega, run.shooting())
    rows = []
    for kind in OperatorKind:
        op = build_operator(q, kind)
        pairs = lowest_eigenpairs(op, run.args.k)
        if kind is OperatorKind.LPLUS:
            cos = cosine_similarity(pairs[0].vector, q.grid.nodes * q.values)
        for i, p in enumerate(pairs):
            rows.append((q.omega.omega, kind, i, p.value))
            if run.args.modes:
                run.write(f"mode_{kind}_{i}.csv", mode_csv(op, p, run.meta))
    run.write("spectrum.csv", spectrum_csv(rows, {**run.meta, "n": q.grid.n}))
    ls = rayleigh_lambda_star(q)
    return run.json("spectrum.json", {
        "omega": q.omega.omega,
        "eigenvalues": {str(k): [r[3] for r in rows if r[1] is k] for k in OperatorKind},
        "lambda_star": ls.formula, "lambda_star_rayleigh": ls.rayleigh,
        # L+ Q = -2Q^3 + 4Q^5 is not a multiple of Q, so its ground mode need not be Q
        "lplus_ground_cosine_to_q": cos, "lplus_ground_parallel_to_q": bool(cos > 0.999)})


def cmd_evolve(run: Run):
    from .dynamics import ExperimentConfig, stability_experiment

    a = run.args
    curve = None if a.no_curve else run.curve()
    cfg = ExperimentConfig(h=a.dyn_h, dt=a.dt, seed=a.seed)
    verdict, runs = stability_experiment(a.omega, a.eps, a.horizon, cfg, curve)
    for r in runs:
        name = f"trajectory_{r.kind.value}"
        run.write(name + ".csv", r.record.to_csv(run.meta))
        if a.svg and r.record.times:
            run.write(name + ".svg", svg_polyline(r.record.times, r.record.orbit_distance_series,
                                                  "t", "orbit distance"))
    payload = verdict.to_dict()
    payload["runs"] = [{"kind": r.kind.value, "initial_distance": r.initial_distance,
                        "max_distance": r.max_distance, "blew_up": r.blew_up} for r in runs]
    run.json("verdict.json", payload)
    return str(verdict.classification)


def cmd_classify(run: Run):
    v = classify_stability(run.args.omega, run.curve())
    run.json("classification.json", v.to_dict())
    return str(v.classification)


def cmd_normalized(run: Run):
    sols = normalized_solutions(run.args.mass, run.curve())
    run.json("normalized.json", {"mass": run.args.mass, "frequencies": sols})
    return "\n".join(repr(w) for w in sols) if sols else "none"


def cmd_variational(run: Run):
    v = variational_values(run.args.mass, run.curve())
    return run.json("variational.json", v.to_dict())


def cmd_constants(run: Run):
    c = run.curve()
    s = c.summary()
    rho_check = abs(s["rho"] - 64.0 / 9.0 * s["d0"] ** 2) / s["rho"]
    lower = LOWER_RHO_FACTOR * s["rho"]
    s["rho_vs_d0_relative_gap"] = rho_check
    s["rho_matches_d0"] = rho_check < 1e-3
    s["m0_within_bounds"] = lower * (1 - 1e-3) <= s["m0"] <= s["rho"] * (1 + 1e-3)
    return run.json("constants.json", s)


COMMANDS = {
    "ground-state": cmd_ground_state,
    "curve": cmd_curve,
    "critical": cmd_critical,
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "classify": cmd_classify,
    "normalized": cmd_normalized,
    "variational": cmd_variational,
    "constants": cmd_constants,
}


def main(argv=None) -> int:
    try:
        args = parse(sys.argv[1:] if argv is None else argv)
        if args.verbose:
            import logging
            logging.basicConfig(level=logging.DEBUG)
        validate(args)
        text = COMMANDS[args.command](Run(args))
    except CQNLSError as exc:
        print(f"cqnls: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    print(text.rstrip("\n"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
