import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alpharesolvent import (
    Grid,
    SampledFunction,
    SolveRequest,
    Subdivision,
    check_p_identities,
    corollary_sup,
    equivalence_diagnostics,
    mild_solution,
    p_convolve,
    ramp_testfunction,
    regularity_constant,
    stieltjes_apf,
    sv_lower_bound,
)
from alpharesolvent.errors import ValidationError
from alpharesolvent.mlf import rgamma
from alpharesolvent.solver import continuity_check, jump_excess, request_from_dict, triangle_wave

from conftest import mp_ml


def _const(grid, value, dim=1):
    return SampledFunction(grid, np.full((grid.nodes.size, dim), float(value)))


def test_zero_generator_closed_form():
    g = Grid.uniform(1.0, 512)
    x, y = np.array([1.0, -1.0]), np.array([2.0, 0.5])
    b = mild_solution(SolveRequest(np.zeros((2, 2)), 1.5, x, y, _const(g, 1.0, 2)))
    np.testing.assert_allclose(b.u.values[-1], x + y + rgamma(2.5), atol=1e-12)
    assert rgamma(2.5) == pytest.approx(0.7522527780636751, abs=1e-15)


def test_eigen_solution():
    g = Grid.uniform(1.0, 1024)
    b = mild_solution(SolveRequest([[-1.0]], 1.5, [1.0], [1.0], _const(g, 0.0)))
    ref = mp_ml(1.5, 1.0, -1.0).real + mp_ml(1.5, 2.0, -1.0).real
    assert b.u.values[-1, 0] == pytest.approx(ref, abs=1e-12)
    assert b.residual_sup <= 1e-3


def test_trivial_problem_is_zero():
    g = Grid.uniform(1.0, 64)
    b = mild_solution(SolveRequest(np.diag([-1.0, -3.0]), 1.5, [0, 0], [0, 0], _const(g, 0.0, 2)))
    assert np.all(b.u.values == 0) and b.residual_sup == 0


def test_request_validation():
    g = Grid.uniform(1.0, 16)
    with pytest.raises(ValidationError):
        SolveRequest([[-1.0]], 1.5, [1.0, 2.0], [1.0], _const(g, 0.0))
    with pytest.raises(ValidationError):
        SolveRequest([[-1.0]], 0.9, [1.0], [1.0], _const(g, 0.0))
    with pytest.raises(ValidationError):
        request_from_dict({"alpha": 1.5})


@pytest.mark.parametrize("a", [np.zeros((2, 2)), np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[-1.0]]), np.diag([-1.0, -10.0])])
def test_prop_identities(a):
    errs = []
    for n in (256, 512):
        g = Grid.uniform(1.0, n)
        x = np.ones(a.shape[0])
        f = SampledFunction(g, np.outer(np.cos(np.pi * g.nodes), x))
        errs.append(check_p_identities(a, 1.5, g, x, 0.25, 0.75, f))
    for part in "abcd":
        assert errs[-1][part] <= 1e-4


def test_stieltjes_matches_apf():
    g = Grid.uniform(1.0, 1024)
    f = _const(g, 1.0)
    lhs = stieltjes_apf([[-1.0]], 1.5, f, 1.0)
    rhs = -p_convolve([[-1.0]], 1.5, f).values[-1]
    assert np.abs(lhs - rhs).max() <= 1e-3


def test_stieltjes_trivial_cases():
    g = Grid.uniform(1.0, 64)
    assert np.all(stieltjes_apf([[-1.0]], 1.5, _const(g, 0.0), 1.0) == 0)
    assert np.all(stieltjes_apf(np.zeros((1, 1)), 1.5, _const(g, 1.0), 1.0) == 0)


def test_continuity_flags_planted_jump():
    coarse_grid = Grid.uniform(1.0, 128)
    fine_grid = Grid.uniform(1.0, 256)
    step = lambda t: np.where(t >= 0.5 + 1e-12, 1.0, 0.0) + np.sin(t)
    res = continuity_check(step(fine_grid.nodes)[:, None], step(coarse_grid.nodes)[:, None], 1e-8)
    assert not res["passed"]
    smooth = continuity_check(np.sin(fine_grid.nodes)[:, None], np.sin(coarse_grid.nodes)[:, None], 1e-8)
    assert smooth["passed"]
    assert jump_excess(np.linspace(0, 1, 9)[:, None]).max() < 1e-14


def test_equivalence_sawtooth():
    g = Grid.uniform(1.0, 512)
    saw = SampledFunction(g, np.outer(triangle_wave(g.nodes), [1.0, 1.0]))
    eq = equivalence_diagnostics(SolveRequest(np.diag([-1.0, -10.0]), 1.5, [0, 0], [0, 0], saw))
    assert eq["strong"]["passed"] and eq["Sf_C1"]["passed"] and eq["APf_continuous"]["passed"]
    assert eq["consistent"]


def test_ramp_testfunction():
    g = Grid.uniform(1.0, 64)
    d = Subdivision.uniform(0.0, 1.0, 1)
    f = ramp_testfunction(d, 0.25, [[0.6], [0.6]], g)
    np.testing.assert_allclose(f.values, 0.6)
    d2 = Subdivision.uniform(0.0, 1.0, 2)
    xs = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    f2 = ramp_testfunction(d2, d2.min_gap / 4, xs, g)
    # continuous: neighbours differ by at most |x_{i+1} - x_i| h / eps
    steps = np.abs(np.diff(f2.values, axis=0)).max()
    assert steps <= np.abs(np.diff(xs, axis=0)).max() * g.h / (d2.min_gap / 4) + 1e-12
    with pytest.raises(ValidationError):
        ramp_testfunction(d2, 0.75, xs, g)


def test_sv_lower_bound_holds_and_correction_decays():
    d = Subdivision.uniform(0.0, 1.0, 4)
    gap = d.min_gap
    rep = sv_lower_bound([[-1.0]], 1.5, 1.0, d, [gap / 4, gap / 8, gap / 16], n_steps=512)
    assert rep["all_hold"]
    c = [row["correction"] for row in rep["rows"]]
    assert c[-1] <= 0.5 * c[0]


def test_sv_lower_bound_zero_generator():
    d = Subdivision.uniform(0.0, 1.0, 3)
    rep = sv_lower_bound(np.zeros((1, 1)), 1.5, 1.0, d, [d.min_gap / 4], n_steps=128)
    row = rep["rows"][0]
    assert row["lhs"] == 0 and row["AL_norm"] == 0


def test_regularity_for_zero_generator():
    rep = regularity_constant(np.zeros((1, 1)), 1.5, 1.0, probes={"one": _const(Grid.uniform(1.0, 256), 1.0)}, n_steps=256)
    # u = g_{alpha+1}, u' = g_alpha, max at t = 1 is 1/Gamma(1.5)
    assert rep.C_estimate == pytest.approx(rgamma(1.5), rel=1e-6)


def test_regularity_scalar_is_finite():
    rep = regularity_constant([[-1.0]], 1.5, 1.0, n_steps=256)
    assert math.isfinite(rep.C_estimate) and rep.C_estimate > 0
    assert rep.probe_count >= 3


def test_corollary_scalar_oracle():
    val = corollary_sup([[-1.0]], 1.5, Grid.uniform(1.0, 1024))
    t = np.linspace(1e-6, 1.0, 401)
    dense = max(t_**1.5 * abs(mp_ml(1.5, 1.5, -(t_**1.5))) for t_ in t[-40:])
    assert val >= dense - 1e-12
    assert val == pytest.approx(mp_ml(1.5, 1.5, -1.0).real, abs=1e-4)


@settings(max_examples=10, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_solution_is_linear_in_data(a, b):
    g = Grid.uniform(1.0, 64)
    A = [[-2.0]]
    f1 = SampledFunction(g, np.sin(3 * g.nodes)[:, None])
    f2 = SampledFunction(g, g.nodes[:, None] ** 2)
    u1 = mild_solution(SolveRequest(A, 1.5, [1.0], [0.0], f1)).u.values
    u2 = mild_solution(SolveRequest(A, 1.5, [0.0], [1.0], f2)).u.values
    f12 = SampledFunction(g, a * f1.values + b * f2.values)
    u12 = mild_solution(SolveRequest(A, 1.5, [a], [b], f12)).u.values
    np.testing.assert_allclose(u12, a * u1 + b * u2, atol=1e-12 * (1 + abs(a) + abs(b)))
