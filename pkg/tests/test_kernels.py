import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alpharesolvent import Grid, SampledFunction, caputo, convolve, convolve_g, g_kernel, integrate
from alpharesolvent.errors import GridError, ValidationError
from alpharesolvent.kernels import g_values, pi_weights, second_derivative
from alpharesolvent.mlf import MLParams, ml_values, rgamma


def test_g_kernel_values():
    assert g_kernel(1.0, 0.37) == pytest.approx(1.0)
    assert g_kernel(2.0, 0.5) == pytest.approx(0.5)
    assert g_kernel(1.5, 1.0) == pytest.approx(2 / math.sqrt(math.pi), rel=1e-15)
    with pytest.raises(ValidationError):
        g_kernel(1.5, -0.2)


def test_grid_validation():
    with pytest.raises(GridError):
        Grid(np.array([0.0, 0.5, 0.4, 1.0]))
    with pytest.raises((GridError, ValidationError)):
        Grid(np.array([0.1, 0.5, 1.0]))
    g = Grid.uniform(2.0, 8)
    assert g.is_uniform and g.h == pytest.approx(0.25) and g.r == 2.0
    assert not Grid.graded(1.0, 8, 2.0).is_uniform
    assert g.coarsen().n == 4


def test_semigroup_on_kernel_samples():
    # g_0.9 is infinite at 0 and cannot be sampled; its primitive g_1.9 can
    g = Grid.uniform(1.0, 512)
    with pytest.raises(ValidationError):
        SampledFunction(g, g_values(0.9, g.nodes))
    out = convolve_g(0.6, SampledFunction(g, g_values(1.9, g.nodes)), lead_exponent=0.9)
    np.testing.assert_allclose(out.values, g_values(2.5, g.nodes), atol=1e-12)
    # a centred difference at t = 1 - h recovers g_0.6 * g_0.9 = g_1.5
    slope = (out.values[-1] - out.values[-3]) / (2 * g.h)
    assert slope == pytest.approx(g_kernel(1.5, g.nodes[-2]), abs=1e-6)


def test_integrate_constant_is_exact():
    g = Grid.uniform(1.0, 64)
    out = integrate(SampledFunction(g, np.ones(65)))
    np.testing.assert_allclose(out.values, g.nodes, atol=1e-15)


def test_power_rule_t_squared():
    g = Grid.uniform(1.0, 1024)
    out = convolve_g(0.5, SampledFunction(g, g.nodes**2))
    exact = 2.0 * rgamma(3.5)
    assert out.values[-1] == pytest.approx(exact, abs=1e-6)
    assert exact == pytest.approx(0.6018022224509402, abs=1e-15)


def test_weighted_rule_is_exact_on_power_law():
    # samples c + s^mu psi with psi linear are integrated exactly
    g = Grid.uniform(1.0, 16)
    mu = 0.5
    vals = 2.0 + g.nodes**mu * (1.0 + 3.0 * g.nodes)
    out = convolve_g(0.7, SampledFunction(g, vals), lead_exponent=mu)
    t = g.nodes
    exact = (
        2.0 * g_values(1.7, t)
        + math.gamma(1 + mu) * g_values(1.7 + mu, t)
        + 3.0 * math.gamma(2 + mu) * g_values(2.7 + mu, t)
    )
    np.testing.assert_allclose(out.values, exact, atol=1e-13)


def test_convolve_trapezoid():
    g = Grid.uniform(1.0, 128)
    one = SampledFunction(g, np.ones(129))
    np.testing.assert_allclose(convolve(one, one).values, g.nodes, atol=1e-14)
    tt = SampledFunction(g, g.nodes)
    np.testing.assert_allclose(convolve(tt, one).values, g.nodes**2 / 2, atol=1e-4)


def test_second_derivative_of_linear():
    g = Grid.uniform(1.0, 20)
    d2 = second_derivative(g, 3.0 - 2.0 * g.nodes)
    np.testing.assert_allclose(d2, 0.0, atol=1e-10)


def test_caputo_of_power_law():
    alpha = 1.5
    g = Grid.uniform(1.0, 512)
    f = SampledFunction(g, g_values(alpha + 1.0, g.nodes))
    d = caputo(alpha, f, 0.0, 0.0)
    np.testing.assert_allclose(d.values[2:-2], 1.0, atol=1e-6)


def test_caputo_eigenfunction():
    alpha = 1.5
    g = Grid.uniform(1.0, 1024)
    e = ml_values(MLParams(alpha, 1.0), -(g.nodes**alpha)).real
    d = caputo(alpha, SampledFunction(g, e), 1.0, 0.0)
    np.testing.assert_allclose(d.values[2:-2], -e[2:-2], atol=1e-4)


def test_caputo_rejects_order():
    g = Grid.uniform(1.0, 16)
    with pytest.raises(ValidationError):
        caputo(0.5, SampledFunction(g, np.zeros(17)), 0.0, 0.0)


def test_graded_grid_product_integration():
    g = Grid.graded(1.0, 256, 2.0)
    out = convolve_g(1.5, SampledFunction(g, np.ones(257)))
    np.testing.assert_allclose(out.values, g_values(2.5, g.nodes), atol=1e-14)


def test_semigroup_convergence_order():
    errs = []
    for n in (256, 512, 1024):
        g = Grid.uniform(1.0, n)
        f = SampledFunction(g, np.sin(2 * np.pi * g.nodes))
        errs.append(np.abs(convolve_g(0.6, convolve_g(0.9, f)).values - convolve_g(1.5, f).values).max())
    assert errs[-1] <= 5e-5
    assert min(np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])) >= 1.8


def test_weights_rows_integrate_constants():
    g = Grid.uniform(1.0, 32)
    w = pi_weights(g, 1.3)
    np.testing.assert_allclose(w.sum(axis=1), g_values(2.3, g.nodes), atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(
    beta=st.floats(0.2, 2.0),
    a=st.floats(-5, 5),
    b=st.floats(-5, 5),
    seed=st.integers(0, 2**16),
)
def test_convolve_g_linear_and_causal(beta, a, b, seed):
    rng = np.random.default_rng(seed)
    g = Grid.uniform(1.0, 40)
    f1 = rng.standard_normal(41)
    f2 = rng.standard_normal(41)
    lhs = convolve_g(beta, SampledFunction(g, a * f1 + b * f2)).values
    rhs = a * convolve_g(beta, SampledFunction(g, f1)).values + b * convolve_g(beta, SampledFunction(g, f2)).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-11 * (1 + abs(a) + abs(b)))
    # perturbing f after node k leaves outputs up to node k unchanged
    k = int(rng.integers(1, 39))
    f3 = f1.copy()
    f3[k + 1 :] += 1.0
    np.testing.assert_array_equal(
        convolve_g(beta, SampledFunction(g, f1)).values[: k + 1],
        convolve_g(beta, SampledFunction(g, f3)).values[: k + 1],
    )
