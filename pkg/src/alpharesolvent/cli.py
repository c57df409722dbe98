"""Command-line front end: ``alpharesolvent <command> [options]``.

Exit status: 0 on success, 1 when ``verify`` finds a failing check, 2 on
invalid input and 3 when a computation leaves its validated numerical
envelope.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from ._accel import backend
from ._io import write_json
from .errors import NumericalEnvelopeError, ValidationError
from .kernels import DEFAULT_N, Grid
from .mlf import DEFAULT_TOL, MLParams, mittag_leffler
from .norms import NormSpec
from .resolvent import P_ALPHA, S_ALPHA, Generator, p_alpha, s_alpha, s_alpha_volterra
from .semivariation import sv_estimate
from .solver import grid_from_spec, mild_solution, regularity_constant, request_from_dict, write_bundle
from .verify import load_scenario, run_suite

OUT_ENV = "ALPHARESOLVENT_OUT"
DEFAULT_OUT = "alpharesolvent_out"
GRID_KEYS = ("r", "N", "grid", "gamma")
GRID_DEFAULTS = {"r": 1.0, "N": DEFAULT_N, "grid": "uniform"}
COMMANDS = ("ml-eval", "family", "solve", "semivariation", "verify", "regularity")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


@dataclass
class RunConfig:
    command: str
    input_path: Optional[str] = None
    output_dir: Path = Path(DEFAULT_OUT)
    tolerance: float = DEFAULT_TOL
    seed: int = 42
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if not self.tolerance > 0:
            raise ValidationError("--tol must be positive")


def _resolve_out(flag: Optional[str]) -> Path:
    if flag:
        return Path(flag)
    return Path(os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _read_json(path: str) -> dict:
    """Read a JSON file; a bare name like ``solve_zero`` selects a bundled scenario."""
    p = Path(path)
    if not p.exists():
        name = p.name if p.suffix == ".json" else p.name + ".json"
        bundled = resources.files("alpharesolvent").joinpath("scenarios").joinpath(name)
        if not bundled.is_file():
            raise ValidationError(f"input file {path!r} not found")
        text = bundled.read_text()
    else:
        text = p.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def _matrix(text: str) -> np.ndarray:
    try:
        a = np.asarray(json.loads(text), dtype=float)
    except (json.JSONDecodeError, TypeError, ValueError):
        raise ValidationError(f"--A must be a JSON matrix such as [[0,1],[-2,-2]], got {text!r}") from None
    return np.atleast_2d(a)


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ValidationError(f"--z must be a real or complex number, got {text!r}") from None


def _grid(opts: dict, alpha: float) -> Grid:
    merged = dict(GRID_DEFAULTS, alpha=alpha)
    merged.update({k: opts[k] for k in GRID_KEYS if opts.get(k) is not None})
    return grid_from_spec(merged)


def _show(x: complex) -> str:
    return repr(float(x.real)) if x.imag == 0 else repr(complex(x))


# ---------------------------------------------------------------------------
# commands


def cmd_ml_eval(cfg: RunConfig) -> int:
    o = cfg.options
    p = MLParams(o["alpha"] if o["alpha"] is not None else 1.0, o["beta"], cfg.tolerance)
    z = _complex(o["z"])
    val = mittag_leffler(p, z)
    print(_show(val))
    if cfg.options.get("out_given"):
        write_json(cfg.output_dir / "ml_eval.json", {"alpha": p.alpha, "beta": p.beta, "z": [z.real, z.imag], "value": [val.real, val.imag]})
    return EXIT_OK


def cmd_family(cfg: RunConfig) -> int:
    o = cfg.options
    alpha = o["alpha"] if o["alpha"] is not None else 1.5
    gen = Generator(_matrix(o["A"]))
    grid = _grid(o, alpha)
    if o["method"] == "volterra":
        if o["kind"] != S_ALPHA:
            raise ValidationError("the Volterra march builds S_alpha only")
        fam = s_alpha_volterra(gen, alpha, grid)
    elif o["kind"] == S_ALPHA:
        fam = s_alpha(gen, alpha, grid, cfg.tolerance)
    else:
        fam = p_alpha(gen, alpha, grid, cfg.tolerance)
    path = fam.to_json(cfg.output_dir / "family.json")
    print(f"{fam.kind} ({fam.provenance}) on {grid.n + 1} nodes -> {path}")
    return EXIT_OK


def _request(cfg: RunConfig) -> dict:
    """Request dict from ``--input``; explicitly given flags take precedence."""
    o = cfg.options
    d = dict(_read_json(cfg.input_path)) if cfg.input_path else {}
    if o.get("A"):
        d["A"] = _matrix(o["A"]).tolist()
    for key in ("alpha",) + GRID_KEYS:
        if o.get(key) is not None:
            d[key] = o[key]
    d.setdefault("alpha", 1.5)
    for key, v in GRID_DEFAULTS.items():
        d.setdefault(key, v)
    if "A" not in d:
        raise ValidationError("no generator given: pass --A or an --input file with an 'A' entry")
    return d


def cmd_solve(cfg: RunConfig) -> int:
    d = _request(cfg)
    req = request_from_dict(d, cfg.options.get("norm"))
    bundle = mild_solution(req)
    csv_path, json_path = write_bundle(bundle, cfg.output_dir)
    u_end = bundle.u.values[-1]
    print("u(r) = " + " ".join(repr(float(v)) for v in np.real(u_end)))
    print(f"residual_sup = {bundle.residual_sup:.6g}")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_semivariation(cfg: RunConfig) -> int:
    d = _request(cfg)
    alpha = float(d["alpha"])
    gen = Generator(np.atleast_2d(np.asarray(d["A"], dtype=float)))
    fam = s_alpha(gen, alpha, grid_from_spec(d), cfg.tolerance)
    est = sv_estimate(fam, NormSpec(cfg.options["norm"]), n_max=cfg.options["n_max"], rel_tol=cfg.options["rel_tol"], seed=cfg.seed)
    print(f"{'n':>6}  SV_d")
    for n, v in est.history:
        print(f"{n:>6}  {v!r}")
    print(f"value = {est.value!r}  converged = {est.converged}")
    est.to_json(cfg.output_dir / "semivariation.json")
    return EXIT_OK


def cmd_regularity(cfg: RunConfig) -> int:
    d = _request(cfg)
    gen = Generator(np.atleast_2d(np.asarray(d["A"], dtype=float)))
    rep = regularity_constant(gen, float(d["alpha"]), float(d["r"]), n_steps=int(d["N"]), norm=cfg.options["norm"])
    print(f"C_estimate = {rep.C_estimate!r} (worst probe: {rep.worst_probe})")
    print(f"corollary_sup = {rep.corollary_sup!r}")
    print(f"sv_estimate = {rep.sv_estimate.value!r}")
    write_json(cfg.output_dir / "regularity.json", rep.to_dict())
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    scenario = _read_json(cfg.input_path) if cfg.input_path else load_scenario()
    n = cfg.options.get("N")

    def line(c):
        mark = "PASS" if c.passed else "FAIL"
        print(f"{mark}  [{c.anchor}] {c.name}: {c.value:.3g} {c.comparison} {c.threshold:g}", flush=True)

    checks = run_suite(scenario, n=n, seed=cfg.seed, tol=cfg.tolerance, progress=line)
    failed = [c for c in checks if not c.passed]
    report = {
        "seed": cfg.seed,
        "N": n if n is not None else scenario.get("N", 1024),
        "all_passed": not failed,
        "passed": len(checks) - len(failed),
        "failed": len(failed),
        "checks": [c.to_dict() for c in checks],
    }
    path = write_json(cfg.output_dir / "verify.json", report)
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed -> {path}")
    for c in failed:
        print(f"violated: [{c.anchor}] {c.name}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_CHECK_FAILED


HANDLERS = {
    "ml-eval": cmd_ml_eval,
    "family": cmd_family,
    "solve": cmd_solve,
    "semivariation": cmd_semivariation,
    "verify": cmd_verify,
    "regularity": cmd_regularity,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, default=None, help="fractional order (ml-eval: any alpha > 0)")
    common.add_argument("--r", type=float, default=None, help="time horizon (default 1)")
    common.add_argument("--N", type=int, default=None, help=f"number of grid steps (default {DEFAULT_N})")
    common.add_argument("--grid", choices=("uniform", "graded"), default=None)
    common.add_argument("--gamma", type=float, default=None, help="grading exponent for --grid graded")
    common.add_argument("--norm", choices=("euclidean", "l1", "linf"), default="euclidean")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="Mittag-Leffler tolerance")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--input", default=None, help="JSON input file or bundled scenario name")

    parser = argparse.ArgumentParser(prog="alpharesolvent", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({backend()} backend)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ml-eval", parents=[common], help="evaluate E_{alpha,beta}(z)")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--z", required=True, help="argument, e.g. 1, -2.5 or 1+2j")

    p = sub.add_parser("family", parents=[common], help="sample S_alpha or P_alpha and write family.json")
    p.add_argument("--A", default="[[-1.0]]", help="generator as a JSON matrix")
    p.add_argument("--kind", choices=(S_ALPHA, P_ALPHA), default=S_ALPHA)
    p.add_argument("--method", choices=("matrix_function", "volterra"), default="matrix_function")

    p = sub.add_parser("solve", parents=[common], help="solve from a JSON request, write solution.csv/.json")
    p.add_argument("--A", default=None, help="override the request's generator")

    p = sub.add_parser("semivariation", parents=[common], help="estimate the semivariation of S_alpha")
    p.add_argument("--A", default=None, help="generator as a JSON matrix")
    p.add_argument("--n-max", type=int, default=128, dest="n_max")
    p.add_argument("--rel-tol", type=float, default=1e-3, dest="rel_tol")

    sub.add_parser("verify", parents=[common], help="run the invariant suite on a scenario")

    p = sub.add_parser("regularity", parents=[common], help="empirical regularity constant")
    p.add_argument("--A", default=None, help="generator as a JSON matrix")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    opts = dict(vars(args))
    opts["out_given"] = args.out is not None or bool(os.environ.get(OUT_ENV))
    return RunConfig(
        command=args.command,
        input_path=args.input,
        output_dir=_resolve_out(args.out),
        tolerance=args.tol,
        seed=args.seed,
        options=opts,
    )


def run(cfg: RunConfig) -> int:
    return HANDLERS[cfg.command](cfg)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(config_from_args(args))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalEnvelopeError as exc:
        print(f"numerical envelope exceeded: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
