"""Invariant suite behind ``alpharesolvent verify``.

Each check carries an anchor naming the identity or statement it exercises,
a measured value, the threshold it is held to and the outcome.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from typing import Callable, Iterable, Optional

import mpmath
import numpy as np

from .errors import ValidationError
from .kernels import Grid, SampledFunction, convolve_g
from .mlf import MLParams, ml_values, mittag_leffler, rgamma
from .resolvent import Generator, p_alpha, s_alpha, s_alpha_volterra
from .semivariation import Subdivision, sv_estimate, sv_on_subdivision
from .solver import (
    SolveRequest,
    check_p_identities,
    corollary_identity_residual,
    corollary_sup,
    equivalence_diagnostics,
    mild_solution,
    stieltjes_report,
    sv_lower_bound,
    triangle_wave,
)

DEFAULT_SCENARIO = "default.json"


@dataclass(frozen=True)
class Check:
    anchor: str
    name: str
    value: float
    threshold: float
    passed: bool
    comparison: str = "<="

    def to_dict(self) -> dict:
        d = asdict(self)
        if not math.isfinite(d["value"]):
            d["value"] = None  # e.g. the order of a residual that is already at roundoff
        return d


def load_scenario(path: Optional[str] = None) -> dict:
    """Read a scenario file, or the bundled default when ``path`` is None."""
    if path is None:
        text = resources.files("alpharesolvent").joinpath("scenarios").joinpath(DEFAULT_SCENARIO).read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"scenario file is not valid JSON: {exc}") from None


def _le(anchor, name, value, threshold) -> Check:
    value = float(value)
    return Check(anchor, name, value, float(threshold), bool(value <= threshold))


def _ge(anchor, name, value, threshold) -> Check:
    value = float(value)
    return Check(anchor, name, value, float(threshold), bool(value >= threshold), ">=")


def mp_mittag_leffler(alpha: float, beta: float, z: float, dps: int = 40) -> float:
    """High-precision power-series oracle for real arguments."""
    with mpmath.workdps(dps):
        a, b, zz = mpmath.mpf(alpha), mpmath.mpf(beta), mpmath.mpf(z)
        s = mpmath.mpf(0)
        k = 0
        while True:
            term = zz**k * mpmath.rgamma(a * k + b)
            s += term
            if k > 5 and abs(term) < mpmath.mpf(10) ** (-dps + 5):
                return float(s)
            k += 1


def scalar_corollary_oracle(lam: float, alpha: float, r: float = 1.0) -> float:
    """``max_{0<=t<=r} |t lam P(t)|`` for a scalar generator, by dense search and golden-section refinement."""
    phi = lambda t: abs(lam) * t**alpha * abs(mp_mittag_leffler(alpha, alpha, lam * t**alpha, 30))
    ts = np.linspace(0.0, r, 401)
    vals = [phi(t) for t in ts]
    j = int(np.argmax(vals))
    lo, hi = ts[max(j - 1, 0)], ts[min(j + 1, ts.size - 1)]
    g = (math.sqrt(5) - 1) / 2
    for _ in range(60):
        c, d = hi - g * (hi - lo), lo + g * (hi - lo)
        if phi(c) >= phi(d):
            hi = d
        else:
            lo = c
    return max(phi(0.5 * (lo + hi)), max(vals))


def _order(errs: list) -> float:
    e = [x for x in errs if x > 0]
    if len(e) < len(errs):
        return math.inf
    return min(math.log2(a / b) for a, b in zip(e, e[1:]))


def _ml_checks(seed: int, tol: float) -> Iterable[Check]:
    x = np.linspace(-5.0, 5.0, 101)
    e_exp = np.abs(ml_values(MLParams(1.0, 1.0, tol), x) - np.exp(x)).max()
    e_cos = np.abs(ml_values(MLParams(2.0, 1.0, tol), -(x**2)) - np.cos(x)).max()
    yield _le("ml:classical", "E_{1,1}(x) = exp(x), x in [-5, 5]", e_exp, 1e-10)
    yield _le("ml:classical", "E_{2,1}(-x^2) = cos(x), x in [-5, 5]", e_cos, 1e-10)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(50):
        a = rng.uniform(1.0, 2.0)
        b = rng.uniform(0.5, 3.0)
        z = rng.uniform(0, 10) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        lhs = mittag_leffler(MLParams(a, b, tol), z)
        rhs = rgamma(b) + z * mittag_leffler(MLParams(a, b + a, tol), z)
        worst = max(worst, abs(lhs - rhs))
    yield _le("ml:recurrence", "E_{a,b}(z) = 1/Gamma(b) + z E_{a,a+b}(z), 50 random cases", worst, 1e-10)


def _kernel_checks(r: float, n: int) -> Iterable[Check]:
    errs = []
    for m in (n // 4, n // 2, n):
        g = Grid.uniform(r, m)
        f = SampledFunction(g, np.sin(2 * np.pi * g.nodes / r))
        errs.append(np.abs(convolve_g(0.6, convolve_g(0.9, f)).values - convolve_g(1.5, f).values).max())
    yield _le("kernel:semigroup", f"f=sin(2 pi t): max |g_0.6*(g_0.9*f) - g_1.5*f|, N={n}", errs[-1], 5e-5)
    yield _ge("kernel:semigroup", "observed order under halving", _order(errs), 1.8)


def _resolvent_checks(gens: dict, oracle: list, alpha: float, r: float, n: int) -> Iterable[Check]:
    for name in oracle:
        a = gens[name]
        for al in (1.25, 1.5, 1.75):
            errs = []
            for m in (n // 4, n // 2, n):
                g = Grid.uniform(r, m)
                errs.append(np.abs(s_alpha(a, al, g).samples - s_alpha_volterra(a, al, g, check_envelope=m >= 256).samples).max())
            yield _le("volterra-oracle", f"{name}, alpha={al}: max |S_mf - S_volterra|, N={n}", errs[-1], 1e-3)
            decreasing = all(b < a_ for a_, b in zip(errs, errs[1:]))
            yield Check("volterra-oracle", f"{name}, alpha={al}: error decreasing under refinement", float(decreasing), 1.0, decreasing, "==")
    g = Grid.uniform(r, n)
    for name, a in gens.items():
        gen = Generator(np.asarray(a, dtype=float))
        fam = s_alpha(gen, alpha, g)
        s = fam.samples
        eye = np.eye(gen.dim)
        gs = convolve_g(alpha, fam.as_sampled(), lead_exponent=alpha).values
        d_res = np.abs(s - eye - gs @ gen.entries).max()
        r_res = np.abs(s - eye - np.einsum("ij,sjk->sik", gen.entries, gs)).max()
        yield _le("resolvent-definition(c)", f"{name}: max |S - I - (g_alpha*S) A|", d_res, 1e-5)
        yield _le("remark:A(g_alpha*S)", f"{name}: max |A (g_alpha*S) - (S - I)|", r_res, 1e-5)
        comm = np.linalg.norm(gen.entries @ s - s @ gen.entries, 2, axis=(1, 2))
        bound = 1e-9 * max(gen.norm, 1e-300) * np.linalg.norm(s, 2, axis=(1, 2))
        ratio = float(np.max(comm / np.maximum(bound, 1e-300))) if gen.norm > 0 else 0.0
        yield _le("resolvent-definition(b)", f"{name}: commutation |AS - SA| / (1e-9 |A||S|)", ratio, 1.0)
        pc = convolve_g(alpha - 1.0, fam.as_sampled(), lead_exponent=alpha).values
        p = p_alpha(gen, alpha, g).samples
        yield _le("P-definition", f"{name}: max |P - g_(alpha-1)*S| at interior nodes", np.abs(p - pc)[1:-1].max(), 1e-6)


def _prop_checks(gens: dict, names: list, alpha: float, r: float, n: int) -> Iterable[Check]:
    for name in names:
        a = np.asarray(gens[name], dtype=float)
        dim = a.shape[0]
        x = np.ones(dim)
        rows = []
        for m in (n // 4, n // 2, n):
            g = Grid.uniform(r, m)
            f = SampledFunction(g, np.outer(np.cos(np.pi * g.nodes), x))
            rows.append(check_p_identities(a, alpha, g, x, 0.25 * r, 0.75 * r, f))
        for part in "abcd":
            errs = [row[part] for row in rows]
            yield _le(f"P-identity({part})", f"{name}: residual at N={n}", errs[-1], 1e-5)
            tiny = errs[-1] <= 1e-12
            order = math.inf if tiny else _order(errs)
            yield _ge(f"P-identity({part})", f"{name}: observed order under halving", order, 1.5)
        g = Grid.uniform(r, n)
        yield _le("corollary:scaling-identity", f"{name}: max |P*(alpha S x) - t P x|", corollary_identity_residual(a, alpha, g, x), 1e-5)


def _stieltjes_checks(alpha: float, r: float, n: int) -> Iterable[Check]:
    g = Grid.uniform(r, n)
    t = g.nodes
    for label, vals in (("1", np.ones_like(t)), ("t", t), ("sawtooth", triangle_wave(t))):
        rep = stieltjes_report([[-1.0]], alpha, SampledFunction(g, vals[:, None]))
        yield _le("stieltjes-lemma", f"f={label}: max |Stieltjes sum - A(P*f)|", rep["max_gap"], 1e-3)
        c = rep["continuity"]
        yield _le("continuity-lemma", f"f={label}: worst jump / allowance for A(P*f)", c["worst_ratio"], 1.0)


def _solution_checks(alpha: float, r: float, n: int) -> Iterable[Check]:
    g = Grid.uniform(r, n)
    zero = SampledFunction(g, np.zeros((g.nodes.size, 1)))
    b = mild_solution(SolveRequest([[-1.0]], alpha, [1.0], [1.0], zero))
    yield _le("strong-solution-formula", "A=[-1], f=0: Caputo residual sup", b.residual_sup, 5e-3)
    x, y = np.array([1.0, -2.0]), np.array([0.5, 3.0])
    ones = SampledFunction(g, np.ones((g.nodes.size, 2)))
    b0 = mild_solution(SolveRequest(np.zeros((2, 2)), alpha, x, y, ones))
    exact = x + r * y + r**alpha * rgamma(alpha + 1.0)
    yield _le("strong-solution-formula", "A=0, f=1: |u(r) - (x + r y + g_(alpha+1)(r))|", np.abs(b0.u.values[-1] - exact).max(), 1e-8)
    saw = SampledFunction(g, np.outer(triangle_wave(g.nodes), [1.0, 1.0]))
    eq = equivalence_diagnostics(SolveRequest(np.diag([-1.0, -10.0]), alpha, [0.0, 0.0], [0.0, 0.0], saw))
    ok = eq["strong"]["passed"] and eq["Sf_C1"]["passed"] and eq["APf_continuous"]["passed"]
    yield Check("equivalence", "A=diag(-1,-10), sawtooth f: all three indicators pass", float(ok), 1.0, bool(ok), "==")


def _semivariation_checks(alpha: float, r: float, n: int, seed: int) -> Iterable[Check]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        k = int(rng.integers(1, 9))
        samples = rng.standard_normal(k + 1)
        d = Subdivision(np.sort(rng.uniform(0, 1, k + 1)) + np.arange(k + 1))
        val = sv_on_subdivision(samples, d).value
        worst = max(worst, abs(val - np.abs(np.diff(samples)).sum()))
    yield _le("semivariation:total-variation", "scalar families: |SV_d - sum |dG||", worst, 1e-12)
    g = Grid.uniform(r, n)
    for name, a in (("scalar", [[-1.0]]), ("damped", [[0.0, 1.0], [-2.0, -2.0]])):
        est = sv_estimate(s_alpha(a, alpha, g), n_max=min(n, 128))
        vals = [v for _, v in est.history]
        drop = max([a_ - b for a_, b in zip(vals, vals[1:])] + [0.0])
        yield _le("semivariation:refinement-monotone", f"S_alpha for {name}: largest decrease across dyadic levels", drop, 1e-10)
    d = Subdivision.uniform(0.0, r, 4)
    gap = d.min_gap
    rep = sv_lower_bound([[-1.0]], alpha, r, d, [gap / 4, gap / 8, gap / 16], n_steps=n)
    yield Check("theorem-proof-inequality", "A=[-1], n=4: inequality holds at eps = g/4, g/8, g/16", float(rep["all_hold"]), 1.0, rep["all_hold"], "==")
    c = [row["correction"] for row in rep["rows"]]
    yield _le("theorem-proof-inequality", "correction(g/16) / correction(g/4)", c[-1] / c[0], 0.5)


def _corollary_checks(gens: dict, alpha: float, r: float, n: int, regression: dict) -> Iterable[Check]:
    for name, a in gens.items():
        hi = corollary_sup(a, alpha, Grid.uniform(r, n))
        lo = corollary_sup(a, alpha, Grid.uniform(r, n // 2))
        rel = abs(hi - lo) / hi if hi > 0 else abs(hi - lo)
        yield _le("corollary:tAP-bounded", f"{name}: relative change of max|t A P(t)| from N={n // 2} to N={n}", rel, 1e-2)
    oracle = regression.get("corollary_sup_scalar")
    if oracle is None:
        oracle = scalar_corollary_oracle(-1.0, alpha, r)
    val = corollary_sup([[-1.0]], alpha, Grid.uniform(r, n))
    yield _le("corollary:tAP-bounded", "A=[-1]: |max|t A P(t)| - scalar ML oracle|", abs(val - oracle), 1e-4)


def _regression_checks(regression: dict, alpha: float, tol: float) -> Iterable[Check]:
    v = regression.get("E_1.5_1_at_-1")
    if v is not None:
        got = mittag_leffler(MLParams(1.5, 1.0, tol), -1.0).real
        yield _le("ml:regression", "E_{1.5,1}(-1) against the frozen high-precision value", abs(got - v), 1e-12)


def run_suite(scenario: Optional[dict] = None, n: Optional[int] = None, seed: int = 42, tol: float = 1e-12,
              progress: Optional[Callable[[Check], None]] = None) -> list:
    """Run every check of the scenario; returns the list of :class:`Check` results."""
    sc = load_scenario() if scenario is None else scenario
    alpha = float(sc.get("alpha", 1.5))
    r = float(sc.get("r", 1.0))
    n = int(n if n is not None else sc.get("N", 1024))
    if n < 16 or n % 4:
        raise ValidationError("verify needs N >= 16 and divisible by 4")
    gens = {k: np.asarray(v, dtype=float) for k, v in sc["generators"].items()}
    regression = sc.get("regression", {})
    groups = [
        _ml_checks(seed, tol),
        _regression_checks(regression, alpha, tol),
        _kernel_checks(r, n),
        _resolvent_checks(gens, sc.get("oracle_generators", []), alpha, r, n),
        _prop_checks(gens, sc.get("identity_generators", list(gens)), alpha, r, n),
        _stieltjes_checks(alpha, r, n),
        _solution_checks(alpha, r, n),
        _semivariation_checks(alpha, r, n, seed),
        _corollary_checks(gens, alpha, r, n, regression),
    ]
    results = []
    for group in groups:
        for check in group:
            results.append(check)
            if progress is not None:
                progress(check)
    return results
