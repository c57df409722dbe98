"""Time the numba and pure-numpy versions of each hot loop side by side.

Run with numba importable (the numba columns are skipped otherwise)::

    python benchmarks/bench_kernels.py --N 1024 --repeat 5

Each row also reports the largest absolute difference between the two
outputs, so the benchmark doubles as an equivalence smoke test.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from alpharesolvent import _loops
from alpharesolvent._accel import HAS_NUMBA
from alpharesolvent.kernels import Grid, pi_weights
from alpharesolvent.mlf import MLParams, ml_values, rgamma


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def _diff(a, b):
    if isinstance(a, tuple):
        a, b = a[0], b[0]
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def cases(n: int, rng: np.random.Generator) -> dict:
    alpha = 1.5
    grid = Grid.uniform(1.0, n)
    nodes = grid.nodes

    # Mittag-Leffler series coefficients 1/Gamma(alpha k + 1)
    k = np.arange(400)
    coef = np.array([rgamma(alpha * j + 1.0) for j in k])
    z = rng.uniform(-8, 8, 4 * n) + 0j

    a = np.array([[0.0, 1.0], [-2.0, -2.0]])
    w = pi_weights(grid, alpha)
    amat = rng.standard_normal((n + 1, 2, 2))
    bmat = rng.standard_normal((n + 1, 2, 2))
    f = rng.standard_normal((n + 1, 2, 1))
    fa = rng.standard_normal((n + 1, 2, 2))
    ha = rng.standard_normal((n + 1, 2, 2))

    return {
        "ml_series": (lambda m: m(z, coef, 1e-16), _loops.ml_series_nb, _loops.ml_series_np),
        "pi_weights": (
            lambda m: m(nodes, alpha, rgamma(alpha + 1.0), rgamma(alpha + 2.0)),
            _loops.pi_weights_nb,
            _loops.pi_weights_np,
        ),
        "lag_conv": (lambda m: m(amat, bmat, f), _loops.lag_conv_nb, _loops.lag_conv_np),
        "trapz_conv": (lambda m: m(fa, ha, grid.h), _loops.trapz_conv_nb, _loops.trapz_conv_np),
        "volterra_march": (lambda m: m(w, a), _loops.volterra_march_nb, _loops.volterra_march_np),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    print(f"N = {args.N}, best of {args.repeat}, numba available: {HAS_NUMBA}")
    print(f"{'kernel':<16}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, (call, nb, npf) in cases(args.N, rng).items():
        t_np, out_np = _best(lambda: call(npf), args.repeat)
        if HAS_NUMBA:
            call(nb)  # compile outside the timing
            t_nb, out_nb = _best(lambda: call(nb), args.repeat)
            print(f"{name:<16}{t_nb:>12.4g}{t_np:>12.4g}{t_np / t_nb:>10.2f}{_diff(out_nb, out_np):>14.3g}")
        else:
            print(f"{name:<16}{'-':>12}{t_np:>12.4g}{'-':>10}{'-':>14}")

    # end-to-end: one matrix-function evaluation of S_alpha on the grid
    p = MLParams(1.5, 1.0)
    zz = rng.uniform(-8, 8, 8 * args.N)
    t_ml, _ = _best(lambda: ml_values(p, zz), args.repeat)
    print(f"ml_values on {zz.size} points via the active backend: {t_ml:.4g} s")


if __name__ == "__main__":
    main()
