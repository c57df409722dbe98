"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line (also repeated in the pytest
terminal summary) and then asserts. Oracles are independent of the code
under test: mpmath series for Mittag-Leffler values, closed forms, the
Volterra march and the primal brute-force semivariation search.
"""

import math
import time

import mpmath
import numpy as np

from alpharesolvent import (
    Grid,
    NormSpec,
    SampledFunction,
    SolveRequest,
    Subdivision,
    check_p_identities,
    convolve_g,
    corollary_sup,
    mild_solution,
    ml_values,
    mittag_leffler,
    MLParams,
    s_alpha,
    s_alpha_volterra,
    sv_brute_force,
    sv_estimate,
    sv_lower_bound,
    sv_on_subdivision,
)
from alpharesolvent.mlf import rgamma
from alpharesolvent.solver import stieltjes_report, triangle_wave
from alpharesolvent.verify import load_scenario

from conftest import mp_ml, record_acceptance

N = 1024
SCENARIO = load_scenario()
GENERATORS = {k: np.asarray(v, dtype=float) for k, v in SCENARIO["generators"].items()}


def report(number: int, title: str, items: list) -> None:
    """Print the criterion line, then fail the test if any item failed.

    ``items`` holds (description, value, threshold, ok) tuples.
    """
    ok = all(i[3] for i in items)
    worst = [i for i in items if not i[3]] or items
    detail = "; ".join(f"{d}: {v:.3g} (limit {t:g})" for d, v, t, _ in worst[:3])
    if len(worst) > 3:
        detail += f"; +{len(worst) - 3} more"
    record_acceptance(f"{'PASS' if ok else 'FAIL'} criterion {number:>2} [{title}] {detail}")
    assert ok, detail


def le(desc, value, limit):
    return (desc, float(value), float(limit), bool(value <= limit))


def ge(desc, value, limit):
    return (desc, float(value), float(limit), bool(value >= limit))


def order(errs):
    return min(math.log2(a / b) for a, b in zip(errs, errs[1:]))


def test_criterion_01_ml_correctness():
    t0 = time.perf_counter()
    x = np.linspace(-5.0, 5.0, 101)
    e_exp = np.abs(ml_values(MLParams(1.0, 1.0), x) - np.exp(x)).max()
    e_cos = np.abs(ml_values(MLParams(2.0, 1.0), -(x**2)) - np.cos(x)).max()
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(50):
        a = rng.uniform(1.0, 2.0)
        b = rng.uniform(0.5, 3.0)
        z = rng.uniform(0.0, 10.0) * np.exp(1j * rng.uniform(0.0, 2 * np.pi))
        lhs = mittag_leffler(MLParams(a, b), z)
        rhs = rgamma(b) + z * mittag_leffler(MLParams(a, b + a), z)
        worst = max(worst, abs(lhs - rhs))
    elapsed = time.perf_counter() - t0
    report(1, "ML correctness", [
        le("|E_1,1 - exp|", e_exp, 1e-10),
        le("|E_2,1(-x^2) - cos|", e_cos, 1e-10),
        le("recurrence", worst, 1e-10),
        le("runtime s", elapsed, 5.0),
    ])


def test_criterion_02_kernel_semigroup():
    t0 = time.perf_counter()
    errs = []
    for n in (256, 512, 1024):
        g = Grid.uniform(1.0, n)
        f = SampledFunction(g, np.sin(2 * np.pi * g.nodes))
        errs.append(np.abs(convolve_g(0.6, convolve_g(0.9, f)).values - convolve_g(1.5, f).values).max())
    elapsed = time.perf_counter() - t0
    report(2, "kernel semigroup", [
        le("sup error N=1024", errs[-1], 5e-5),
        ge("order", order(errs), 1.8),
        le("runtime s", elapsed, 10.0),
    ])


def test_criterion_03_resolvent_oracle():
    t0 = time.perf_counter()
    items = []
    for name, a in (("A=[-1]", [[-1.0]]), ("damped", [[0.0, 1.0], [-2.0, -2.0]])):
        for alpha in (1.25, 1.5, 1.75):
            errs = []
            for n in (256, 512, 1024):
                g = Grid.uniform(1.0, n)
                errs.append(np.abs(s_alpha(a, alpha, g).samples - s_alpha_volterra(a, alpha, g).samples).max())
            items.append(le(f"{name} alpha={alpha}", errs[-1], 1e-3))
            dec = all(b < a_ for a_, b in zip(errs, errs[1:]))
            items.append((f"{name} alpha={alpha} decreasing", float(dec), 1.0, dec))
    items.append(le("runtime s", time.perf_counter() - t0, 60.0))
    report(3, "resolvent oracle agreement", items)


def test_criterion_04_definition_and_remark():
    g = Grid.uniform(1.0, N)
    items = []
    for name, a in GENERATORS.items():
        fam = s_alpha(a, 1.5, g)
        gs = convolve_g(1.5, fam.as_sampled(), lead_exponent=1.5).values
        eye = np.eye(a.shape[0])
        items.append(le(f"{name} S - I - (g*S)A", np.abs(fam.samples - eye - gs @ a).max(), 1e-5))
        items.append(le(f"{name} A(g*S) - (S - I)", np.abs(np.einsum("ij,sjk->sik", a, gs) - fam.samples + eye).max(), 1e-5))
    report(4, "definition residual and remark", items)


def test_criterion_05_prop_identities():
    gens = {
        "zero": np.zeros((2, 2)),
        "nilpotent": np.array([[0.0, 1.0], [0.0, 0.0]]),
        "A=[-1]": np.array([[-1.0]]),
        "diag(-1,-10)": np.diag([-1.0, -10.0]),
    }
    items = []
    for name, a in gens.items():
        x = np.ones(a.shape[0])
        rows = []
        for n in (N // 4, N // 2, N):
            g = Grid.uniform(1.0, n)
            f = SampledFunction(g, np.outer(np.cos(np.pi * g.nodes), x))
            rows.append(check_p_identities(a, 1.5, g, x, 0.25, 0.75, f))
        for part in "abcd":
            errs = [r[part] for r in rows]
            items.append(le(f"{name} ({part})", errs[-1], 1e-5))
            # an identity that holds to roundoff has no measurable decay order
            if errs[-1] > 1e-12:
                items.append(ge(f"{name} ({part}) order", order(errs), 1.5))
    report(5, "identities (a)-(d)", items)


def test_criterion_06_stieltjes():
    g = Grid.uniform(1.0, N)
    t = g.nodes
    items = []
    for label, vals in (("1", np.ones_like(t)), ("t", t), ("sawtooth", triangle_wave(t))):
        rep = stieltjes_report([[-1.0]], 1.5, SampledFunction(g, vals[:, None]))
        items.append(le(f"f={label} gap", rep["max_gap"], 1e-3))
        items.append(le(f"f={label} jump/allowance", rep["continuity"]["worst_ratio"], 1.0))
    report(6, "Stieltjes lemma", items)


def test_criterion_07_strong_solution():
    g = Grid.uniform(1.0, N)
    zero = SampledFunction(g, np.zeros((N + 1, 1)))
    eig = mild_solution(SolveRequest([[-1.0]], 1.5, [1.0], [1.0], zero))
    x, y = np.array([1.0, -2.0]), np.array([0.5, 3.0])
    ones = SampledFunction(g, np.ones((N + 1, 2)))
    zero_a = mild_solution(SolveRequest(np.zeros((2, 2)), 1.5, x, y, ones))
    with mpmath.workdps(30):
        closed = float(1 / mpmath.gamma(2.5))
    report(7, "strong-solution formula", [
        le("eigen-solution residual_sup", eig.residual_sup, 5e-3),
        le("A=0 residual_sup", zero_a.residual_sup, 5e-3),
        le("A=0 |u(1) - (x + y + 1/Gamma(2.5))|", np.abs(zero_a.u.values[-1] - (x + y + closed)).max(), 1e-8),
    ])


def test_criterion_08_semivariation():
    rng = np.random.default_rng(42)
    tv = 0.0
    for _ in range(20):
        k = int(rng.integers(1, 9))
        s = rng.standard_normal(k + 1)
        d = Subdivision(np.cumsum(rng.uniform(0.1, 1.0, k + 1)))
        tv = max(tv, abs(sv_on_subdivision(s, d).value - np.abs(np.diff(s)).sum()))
    rel = 0.0
    for i in range(20):
        m = int(rng.integers(2, 4))
        n = int(rng.integers(1, 5))
        samples = rng.standard_normal((n + 1, m, m))
        d = Subdivision(np.arange(n + 1, dtype=float))
        dual = sv_on_subdivision(samples, d, NormSpec("euclidean"), seed=i).value
        brute = sv_brute_force(samples, NormSpec("euclidean"), seed=i)
        rel = max(rel, abs(dual - brute) / brute)
    drop = 0.0
    g = Grid.uniform(1.0, N)
    for a in ([[-1.0]], [[0.0, 1.0], [-2.0, -2.0]], [[-1.0, 0.0], [0.0, -10.0]]):
        vals = [v for _, v in sv_estimate(s_alpha(a, 1.5, g), n_max=256).history]
        drop = max([drop] + [p - q for p, q in zip(vals, vals[1:])])
    report(8, "semivariation", [
        le("scalar |SV - TV|", tv, 1e-12),
        le("dual vs brute force, relative", rel, 1e-2),
        le("largest decrease under refinement", drop, 1e-10),
    ])


def test_criterion_09_theorem_inequality():
    d = Subdivision.uniform(0.0, 1.0, 4)
    gap = d.min_gap
    rep = sv_lower_bound([[-1.0]], 1.5, 1.0, d, [gap / 4, gap / 8, gap / 16], n_steps=N)
    items = []
    for row in rep["rows"]:
        # for a scalar generator the bound is attained, so allow roundoff only
        slack = row["AL_norm"] + row["correction"] - row["lhs"]
        items.append(ge(f"eps={row['eps']:.4g} slack", slack, -1e-12 * max(1.0, row["lhs"])))
    c = [row["correction"] for row in rep["rows"]]
    items.append(le("correction(g/16)/correction(g/4)", c[-1] / c[0], 0.5))
    report(9, "theorem-proof inequality", items)


def _scalar_oracle(alpha=1.5):
    """max over t in [0, 1] of t^alpha |E_{alpha,alpha}(-t^alpha)| by mpmath."""
    phi = lambda t: t**alpha * abs(mp_ml(alpha, alpha, -(t**alpha), dps=30))
    ts = np.linspace(0.0, 1.0, 201)
    vals = [phi(t) for t in ts]
    k = int(np.argmax(vals))
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, 200)]
    gr = (math.sqrt(5) - 1) / 2
    for _ in range(60):
        a, b = hi - gr * (hi - lo), lo + gr * (hi - lo)
        if phi(a) < phi(b):
            lo = a
        else:
            hi = b
    return max(max(vals), phi(0.5 * (lo + hi)))


def test_criterion_10_corollary():
    items = []
    for name, a in GENERATORS.items():
        hi = corollary_sup(a, 1.5, Grid.uniform(1.0, 1024))
        lo = corollary_sup(a, 1.5, Grid.uniform(1.0, 512))
        assert math.isfinite(hi)
        rel = abs(hi - lo) / hi if hi > 0 else abs(hi - lo)
        items.append(le(f"{name} N=512 vs 1024", rel, 1e-2))
    val = corollary_sup([[-1.0]], 1.5, Grid.uniform(1.0, 1024))
    items.append(le("A=[-1] vs mpmath oracle", abs(val - _scalar_oracle()), 1e-4))
    report(10, "corollary", items)
