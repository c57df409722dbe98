"""Riemann-Liouville kernels, product-integration convolutions and the Caputo derivative.

All convolutions act on :class:`SampledFunction` objects: samples on a
:class:`Grid` of ``[0, r]``, interpolated piecewise linearly between nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import special
from scipy.integrate import trapezoid as integrate_trapz

from . import _loops
from .errors import GridError, ValidationError
from .mlf import rgamma

DEFAULT_N = 512


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing mesh ``0 = t_0 < ... < t_N = r``."""

    nodes: np.ndarray
    kind: str = "custom"
    gamma: float = 1.0

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise GridError("grid needs at least two nodes")
        if nodes[0] != 0.0:
            raise GridError("first grid node must be exactly 0")
        if not np.all(np.diff(nodes) > 0):
            raise GridError("grid nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, r: float = 1.0, n: int = DEFAULT_N) -> "Grid":
        _check_rn(r, n)
        nodes = r * np.arange(n + 1) / n
        nodes[-1] = r
        return cls(nodes, "uniform", 1.0)

    @classmethod
    def graded(cls, r: float = 1.0, n: int = DEFAULT_N, gamma: float = 2.0) -> "Grid":
        """Nodes ``r (j/N)^gamma``, clustered at t = 0 for gamma > 1."""
        _check_rn(r, n)
        if not gamma >= 1.0:
            raise GridError(f"grading exponent must be >= 1, got {gamma}")
        nodes = r * (np.arange(n + 1) / n) ** gamma
        nodes[-1] = r
        return cls(nodes, "graded" if gamma != 1.0 else "uniform", float(gamma))

    @property
    def n(self) -> int:
        return self.nodes.size - 1

    @property
    def r(self) -> float:
        return float(self.nodes[-1])

    @property
    def is_uniform(self) -> bool:
        if self.kind == "uniform":
            return True
        h = np.diff(self.nodes)
        return bool(np.allclose(h, h[0], rtol=1e-12, atol=0.0))

    @property
    def h(self) -> float:
        if not self.is_uniform:
            raise GridError("step size is only defined on uniform grids")
        return self.r / self.n

    def same_as(self, other: "Grid") -> bool:
        return self is other or (
            self.nodes.shape == other.nodes.shape and np.array_equal(self.nodes, other.nodes)
        )

    def index_of(self, t: float, rtol: float = 1e-12) -> int:
        """Index of the node equal to ``t`` (within rounding); raises if there is none."""
        j = int(np.argmin(np.abs(self.nodes - t)))
        if abs(self.nodes[j] - t) > rtol * max(1.0, self.r):
            raise GridError(f"t = {t!r} is not a grid node")
        return j

    def coarsen(self) -> "Grid":
        """Every other node (requires an even N)."""
        if self.n % 2:
            raise GridError("cannot halve a grid with odd N")
        return Grid(self.nodes[::2].copy(), self.kind, self.gamma)

    def _key(self):
        return self.nodes.tobytes()


def _check_rn(r, n):
    if not (r > 0 and math.isfinite(r)):
        raise GridError(f"horizon r must be positive, got {r}")
    if int(n) != n or n < 1:
        raise GridError(f"N must be a positive integer, got {n}")


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Samples ``values[j] = f(t_j)`` with piecewise-linear interpolation.

    ``values`` has shape ``(N+1,)`` for scalars, ``(N+1, m)`` for vectors and
    ``(N+1, n, n)`` for operator families.
    """

    grid: Grid
    values: np.ndarray
    interpolation: str = field(default="linear")

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape[:1] != (self.grid.nodes.size,):
            raise ValidationError(
                f"{v.shape[0] if v.ndim else 0} samples for a grid of {self.grid.nodes.size} nodes"
            )
        if not np.all(np.isfinite(v)):
            raise ValidationError("sampled values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable) -> "SampledFunction":
        vals = np.array([np.asarray(fn(t)) for t in grid.nodes])
        return cls(grid, vals)

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def shape(self) -> tuple:
        return self.values.shape[1:]

    def __call__(self, t):
        """Linear interpolation at arbitrary points of [0, r]."""
        t = np.asarray(t, dtype=float)
        flat = self.values.reshape(self.values.shape[0], -1)
        cols = [np.interp(t, self.t, flat[:, c].real) for c in range(flat.shape[1])]
        if np.iscomplexobj(flat):
            cols = [c + 1j * np.interp(t, self.t, flat[:, i].imag) for i, c in enumerate(cols)]
        out = np.stack(cols, axis=-1)
        return out.reshape(t.shape + self.shape)

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.grid, values, self.interpolation)

    def sup_norm(self, norm: Callable | None = None) -> float:
        return float(np.max(pointwise_norm(self.values, norm)))

    # CSV: column 0 is t, the remaining columns the flattened components.
    def to_csv(self, path, header: Optional[list] = None) -> None:
        from ._io import write_csv

        flat = self.values.reshape(self.values.shape[0], -1)
        if np.iscomplexobj(flat):
            if np.max(np.abs(flat.imag), initial=0.0) > 0:
                raise ValidationError("CSV export supports real samples only")
            flat = flat.real
        cols = header or ["t"] + [f"f{i}" for i in range(flat.shape[1])]
        write_csv(path, cols, np.column_stack([self.t, flat]))

    @classmethod
    def from_csv(cls, path) -> "SampledFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t = data[:, 0]
        return cls(Grid(t, "uniform" if np.allclose(np.diff(t), t[1] - t[0]) else "custom"), data[:, 1:])


def pointwise_norm(values: np.ndarray, norm: Callable | None = None) -> np.ndarray:
    """Norm of each sample; Euclidean/Frobenius by default."""
    v = np.asarray(values)
    if v.ndim == 1:
        return np.abs(v)
    if norm is None:
        return np.sqrt(np.sum(np.abs(v.reshape(v.shape[0], -1)) ** 2, axis=1))
    return np.array([norm(x) for x in v])


# ---------------------------------------------------------------------------
# kernels


def g_kernel(beta: float, t):
    """``g_beta(t) = t^(beta-1) / Gamma(beta)`` for beta > 0 and t > 0."""
    if not beta > 0:
        raise ValidationError("g_0 is the delta distribution; handle it symbolically (convolve_g)")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValidationError("g_beta is evaluated at t > 0 only")
    out = t ** (beta - 1.0) * rgamma(beta)
    return float(out) if out.ndim == 0 else out


def g_values(beta: float, t) -> np.ndarray:
    """g_beta on an array that may contain t = 0 (value 0 there for beta > 1, 1/Gamma(1) for beta = 1)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = t[pos] ** (beta - 1.0) * rgamma(beta)
    if beta == 1.0:
        out[~pos] = 1.0
    elif beta < 1.0:
        out[~pos] = np.inf
    return out


@lru_cache(maxsize=64)
def _pi_weights_cached(key: bytes, beta: float) -> np.ndarray:
    nodes = np.frombuffer(key, dtype=float)
    w = _loops.pi_weights(nodes, beta, rgamma(beta + 1.0), rgamma(beta + 2.0))
    w.setflags(write=False)
    return w


def pi_weights(grid: Grid, beta: float) -> np.ndarray:
    """Product-integration weights W: ``(g_beta * f)(t_j) ~ sum_k W[j,k] f_k``.

    Exact for f piecewise linear on the grid.
    """
    if beta == 0:
        return np.eye(grid.nodes.size)
    if beta < 0:
        raise ValidationError("kernel order must be >= 0")
    return _pi_weights_cached(grid._key(), float(beta))


def _beta_moment_diff(t, a, b, nu, beta):
    """``int_a^b (t - s)^(beta-1) s^nu ds`` for 0 <= a < b <= t, elementwise."""
    p = nu + 1.0
    q = beta
    xa = a / t
    xb = b / t
    hi = xa > 0.5
    with np.errstate(invalid="ignore", divide="ignore"):
        diff = np.where(
            hi,
            special.betainc(q, p, 1.0 - xa) - special.betainc(q, p, 1.0 - xb),
            special.betainc(p, q, xb) - special.betainc(p, q, xa),
        )
    return t ** (beta + nu) * special.beta(p, q) * diff


@lru_cache(maxsize=32)
def _weighted_weights_cached(key: bytes, beta: float, mu: float) -> np.ndarray:
    nodes = np.frombuffer(key, dtype=float)
    n = nodes.size
    w = np.zeros((n, n))
    jj, kk = np.tril_indices(n, -1)  # pairs with k < j; cell [t_k, t_{k+1}]
    t = nodes[jj]
    a = nodes[kk]
    b = nodes[kk + 1]
    h = b - a
    j0 = _beta_moment_diff(t, a, b, mu, beta)
    j1 = _beta_moment_diff(t, a, b, mu + 1.0, beta)
    rg = rgamma(beta)
    w1 = (j1 - a * j0) / h * rg
    w0 = j0 * rg - w1
    np.add.at(w, (jj, kk + 1), w1)
    np.add.at(w, (jj, kk), w0)
    w.setflags(write=False)
    return w


def weighted_pi_weights(grid: Grid, beta: float, mu: float) -> np.ndarray:
    """Weights for ``(g_beta * (s^mu psi))(t_j) ~ sum_k W[j,k] psi_k`` with psi piecewise linear."""
    if not beta > 0:
        raise ValidationError("weighted product integration needs beta > 0")
    if not mu > -1:
        raise ValidationError("leading exponent must exceed -1")
    return _weighted_weights_cached(grid._key(), float(beta), float(mu))


def _apply(w: np.ndarray, values: np.ndarray) -> np.ndarray:
    flat = values.reshape(values.shape[0], -1)
    return (w @ flat).reshape(values.shape)


def _split_leading(grid: Grid, values: np.ndarray, mu: float):
    """Write samples as ``c + s^mu psi(s)``; returns (c, psi) with psi_0 extrapolated."""
    t = grid.nodes
    c = values[0]
    rest = values - c
    shape = (-1,) + (1,) * (values.ndim - 1)
    psi = np.empty_like(rest, dtype=np.result_type(rest, float))
    psi[1:] = rest[1:] / t[1:].reshape(shape) ** mu
    if t.size > 2:
        psi[0] = psi[1] + (psi[1] - psi[2]) * t[1] / (t[2] - t[1])
    else:
        psi[0] = psi[1]
    return c, psi


def convolve_g(beta: float, f: SampledFunction, lead_exponent: Optional[float] = None) -> SampledFunction:
    """``(g_beta * f)(t_j)`` by product integration.

    With ``lead_exponent=None`` f is interpolated linearly and the kernel is
    integrated exactly, so the result is exact for piecewise-linear f. With a
    leading exponent ``mu`` the samples are modelled as ``f(0) + s^mu psi(s)``
    with psi piecewise linear, which restores second-order accuracy for data
    behaving like ``s^mu`` at the origin.
    """
    if beta < 0:
        raise ValidationError("kernel order must be >= 0")
    if beta == 0:
        return f
    if lead_exponent is None or lead_exponent == 0:
        return f.with_values(_apply(pi_weights(f.grid, beta), f.values))
    c, psi = _split_leading(f.grid, f.values, lead_exponent)
    base = np.multiply.outer(g_values(beta + 1.0, f.t), c)
    out = base + _apply(weighted_pi_weights(f.grid, beta, lead_exponent), psi)
    out[0] = 0.0
    return f.with_values(out)


def integrate(f: SampledFunction, lead_exponent: Optional[float] = None) -> SampledFunction:
    """Running integral ``int_0^t f``; this is ``convolve_g(1, f)``."""
    return convolve_g(1.0, f, lead_exponent)


# ---------------------------------------------------------------------------
# general convolution


def _as_blocks(values: np.ndarray, left: bool):
    """Reshape samples to (N+1, p, q) blocks for matrix products."""
    if values.ndim == 1:
        return values[:, None, None]
    if values.ndim == 2:
        return values[:, None, :] if left else values[:, :, None]
    return values


def convolve(f: SampledFunction, h: SampledFunction) -> SampledFunction:
    """``int_0^t f(t - s) h(s) ds`` by the trapezoid rule.

    Matrix-valued ``f`` acts on vector- or matrix-valued ``h`` by matrix
    product; scalar factors multiply; equal-length vectors multiply
    componentwise. On non-uniform grids ``f(t_j - s_k)`` is interpolated.
    """
    if not f.grid.same_as(h.grid):
        raise GridError("convolve needs both factors on the same grid")
    fv, hv = f.values, h.values
    if fv.ndim == 2 and hv.ndim == 2:
        if fv.shape != hv.shape:
            raise ValidationError("componentwise convolution needs equal shapes")
        cols = [
            convolve(f.with_values(fv[:, i]), h.with_values(hv[:, i])).values for i in range(fv.shape[1])
        ]
        return f.with_values(np.stack(cols, axis=1))
    if fv.ndim == 1 and hv.ndim > 1:
        out = _conv_blocks(f.grid, fv[:, None, None], hv.reshape(hv.shape[0], 1, -1))
        return f.with_values(out.reshape(hv.shape))
    fa = _as_blocks(fv, left=True)
    ha = _as_blocks(hv, left=False)
    if fa.shape[2] != ha.shape[1]:
        raise ValidationError(f"inner dimensions differ: {fv.shape[1:]} vs {hv.shape[1:]}")
    out = _conv_blocks(f.grid, fa, ha)
    if fv.ndim == 1 and hv.ndim == 1:
        out = out[:, 0, 0]
    elif fv.ndim == 3 and hv.ndim == 2:
        out = out[:, :, 0]
    return f.with_values(out)


def _conv_blocks(grid: Grid, fa: np.ndarray, ha: np.ndarray) -> np.ndarray:
    dtype = np.result_type(fa, ha, float)
    fa = np.ascontiguousarray(fa, dtype=dtype)
    ha = np.ascontiguousarray(ha, dtype=dtype)
    if grid.is_uniform:
        return _loops.trapz_conv(fa, ha, grid.h)
    t = grid.nodes
    flat = fa.reshape(fa.shape[0], -1)
    out = np.zeros((t.size, fa.shape[1], ha.shape[2]), dtype=dtype)
    for j in range(1, t.size):
        s = t[: j + 1]
        shifted = np.stack([np.interp(t[j] - s, t, flat[:, c].real) for c in range(flat.shape[1])], axis=1)
        if np.iscomplexobj(flat):
            shifted = shifted + 1j * np.stack(
                [np.interp(t[j] - s, t, flat[:, c].imag) for c in range(flat.shape[1])], axis=1
            )
        shifted = shifted.reshape((j + 1,) + fa.shape[1:])
        prod = np.einsum("kab,kbs->kas", shifted, ha[: j + 1])
        out[j] = integrate_trapz(prod, s, axis=0)
    return out


# ---------------------------------------------------------------------------
# Caputo derivative


def second_derivative(grid: Grid, w: np.ndarray) -> np.ndarray:
    """Three-point second differences; one-sided three-point stencils at both ends."""
    t = grid.nodes
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    shape = (-1,) + (1,) * (w.ndim - 1)
    h0 = h0.reshape(shape)
    h1 = h1.reshape(shape)
    inner = 2.0 * (h0 * w[2:] - (h0 + h1) * w[1:-1] + h1 * w[:-2]) / (h0 * h1 * (h0 + h1))
    return np.concatenate([inner[:1], inner, inner[-1:]], axis=0)


def caputo(
    alpha: float,
    f: SampledFunction,
    f0,
    f1,
    lead_exponent: float | str | None = "alpha",
) -> SampledFunction:
    """Caputo derivative of order ``alpha`` in (1, 2).

    Computed as the second derivative of ``g_{2-alpha} * (f - f0 - f1 t)``,
    where ``f0 = f(0)`` and ``f1 = f'(0)`` are supplied by the caller.

    ``lead_exponent`` is the power law assumed for ``f - f0 - f1 t`` near 0.
    The default ``alpha`` matches solutions of order-alpha problems; pass None
    for plain linear product integration.
    """
    if not 1 < alpha < 2:
        raise ValidationError(f"Caputo order must lie in (1, 2), got {alpha}")
    if f.grid.n < 4:
        raise GridError("caputo needs at least 5 grid nodes")
    if lead_exponent == "alpha":
        lead_exponent = alpha
    f0 = np.asarray(f0)
    f1 = np.asarray(f1)
    trend = f0 + np.multiply.outer(f.t, f1)
    phi = f.with_values(f.values - trend)
    w = convolve_g(2.0 - alpha, phi, lead_exponent)
    return f.with_values(second_derivative(f.grid, w.values))
