import json
import os
import subprocess
import sys

import numpy as np
import pytest

from alpharesolvent import _loops
from alpharesolvent._accel import HAS_NUMBA
from alpharesolvent.kernels import Grid, pi_weights
from alpharesolvent.mlf import rgamma

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba not importable")


@needs_numba
def test_ml_series_backends_agree():
    rng = np.random.default_rng(0)
    coef = np.array([rgamma(1.5 * k + 1.0) for k in range(300)])
    z = rng.uniform(-10, 10, 200) + 1j * rng.uniform(-3, 3, 200)
    a = _loops.ml_series_nb(z, coef, 1e-16)
    b = _loops.ml_series_np(z, coef, 1e-16)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-13, atol=1e-14)


@needs_numba
@pytest.mark.parametrize("kind", ["uniform", "graded"])
def test_pi_weights_backends_agree(kind):
    g = Grid.uniform(1.0, 64) if kind == "uniform" else Grid.graded(1.0, 64, 2.0)
    args = (g.nodes, 0.7, rgamma(1.7), rgamma(2.7))
    np.testing.assert_allclose(_loops.pi_weights_nb(*args), _loops.pi_weights_np(*args), atol=1e-14)


@needs_numba
def test_convolution_backends_agree():
    rng = np.random.default_rng(1)
    amat, bmat = rng.standard_normal((2, 65, 3, 3))
    f = rng.standard_normal((65, 3, 2))
    np.testing.assert_allclose(_loops.lag_conv_nb(amat, bmat, f), _loops.lag_conv_np(amat, bmat, f), atol=1e-12)
    fa, ha = rng.standard_normal((2, 65, 3, 3))
    np.testing.assert_allclose(_loops.trapz_conv_nb(fa, ha, 0.1), _loops.trapz_conv_np(fa, ha, 0.1), atol=1e-12)


@needs_numba
def test_volterra_backends_agree():
    w = pi_weights(Grid.uniform(1.0, 64), 1.5)
    a = np.array([[0.0, 1.0], [-2.0, -2.0]])
    np.testing.assert_allclose(_loops.volterra_march_nb(w, a), _loops.volterra_march_np(w, a), atol=1e-13)


def test_env_flag_selects_numpy(tmp_path):
    env = dict(os.environ, ALPHARESOLVENT_DISABLE_NUMBA="1")
    code = (
        "import json, alpharesolvent as a\n"
        "from alpharesolvent import Grid, s_alpha\n"
        "s = s_alpha([[0.0, 1.0], [-2.0, -2.0]], 1.5, Grid.uniform(1.0, 64)).samples\n"
        "print(json.dumps([a.backend(), s[-1].tolist()]))\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, last = json.loads(out.stdout)
    assert name == "numpy"
    from alpharesolvent import s_alpha

    ref = s_alpha([[0.0, 1.0], [-2.0, -2.0]], 1.5, Grid.uniform(1.0, 64)).samples[-1]
    np.testing.assert_allclose(last, ref, atol=1e-13)
