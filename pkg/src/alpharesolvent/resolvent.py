"""alpha-times resolvent families S_alpha(t) and P_alpha(t) of a matrix generator.

Two independent constructions are provided:

* matrix functions, ``S_alpha(t) = E_{alpha,1}(t^alpha A)`` and
  ``P_alpha(t) = t^(alpha-1) E_{alpha,alpha}(t^alpha A)``;
* a direct march of the Volterra equation ``S(t) = I + (g_alpha * S)(t) A``
  with the product-integration weights of :mod:`alpharesolvent.kernels`.

More generally ``(g_gamma * S_alpha)(t) = t^gamma E_{alpha,1+gamma}(t^alpha A)``
(:func:`moment_family`), which gives convolutions of the family with
piecewise-linear data in closed form (:func:`family_convolve`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _loops
from ._io import write_json
from .errors import NumericalEnvelopeError, StepSolveError, ValidationError
from .kernels import Grid, SampledFunction, pi_weights
from .mlf import DEFAULT_TOL, MLParams, ml_matrix_family

#: Volterra march is only trusted for ||A|| r^alpha up to this value ...
VOLTERRA_NORM_CAP = 8.0
#: ... and on uniform grids with at least this many steps.
VOLTERRA_MIN_N = 256

S_ALPHA = "S_alpha"
P_ALPHA = "P_alpha"


@dataclass(frozen=True, eq=False)
class Generator:
    """Square matrix standing in for the generator A, with cached spectral data."""

    entries: np.ndarray
    spectral: Optional[tuple] = field(default=None)

    def __post_init__(self):
        a = np.array(self.entries)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"generator must be a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("generator entries must be finite")
        if not np.iscomplexobj(a):
            a = a.astype(float)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        if self.spectral is None:
            lam, v = np.linalg.eig(a)
            with np.errstate(all="ignore"):
                cond = float(np.linalg.cond(v))
            if not np.isfinite(cond):
                cond = np.inf
            spec = (lam, v, cond)
        else:
            spec = self.spectral
        lam, v, cond = spec
        scale = max(np.linalg.norm(a, 2), 1.0)
        if np.isfinite(cond) and np.linalg.norm(a @ v - v * lam[None, :], 2) > 1e-8 * scale:
            spec = (lam, v, np.inf)
        object.__setattr__(self, "spectral", spec)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.entries)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))

    def __matmul__(self, other):
        return self.entries @ other

    def apply(self, values: np.ndarray) -> np.ndarray:
        """A applied to each sample: vectors (N+1, n) or matrices (N+1, n, n)."""
        v = np.asarray(values)
        if v.ndim == 2:
            return v @ self.entries.T
        return np.einsum("ij,sjk->sik", self.entries, v)


def as_generator(a) -> Generator:
    return a if isinstance(a, Generator) else Generator(np.asarray(a))


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    """Matrix samples of S_alpha or P_alpha on a grid."""

    grid: Grid
    samples: np.ndarray
    kind: str
    alpha: float
    provenance: str = "matrix_function"

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 3 or s.shape[0] != self.grid.nodes.size or s.shape[1] != s.shape[2]:
            raise ValidationError(f"family samples must be (N+1, n, n), got {s.shape}")
        if self.kind not in (S_ALPHA, P_ALPHA):
            raise ValidationError(f"unknown family kind {self.kind!r}")
        if self.provenance not in ("matrix_function", "volterra"):
            raise ValidationError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "samples", s)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def as_sampled(self) -> SampledFunction:
        return SampledFunction(self.grid, self.samples)

    def to_dict(self) -> dict:
        s = self.samples
        if np.iscomplexobj(s):
            if np.max(np.abs(s.imag), initial=0.0) > 0:
                raise ValidationError("JSON export supports real families only")
            s = s.real
        return {
            "alpha": self.alpha,
            "kind": self.kind,
            "provenance": self.provenance,
            "dim": self.dim,
            "grid": self.grid.nodes.tolist(),
            "samples": [m.reshape(-1).tolist() for m in s],
        }

    def to_json(self, path):
        return write_json(path, self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "OperatorFamily":
        grid = Grid(np.asarray(d["grid"], dtype=float))
        raw = np.asarray(d["samples"], dtype=float)
        n = int(d.get("dim", round(np.sqrt(raw[0].size))))
        return cls(grid, raw.reshape(-1, n, n), d["kind"], float(d["alpha"]), d["provenance"])


def _check_alpha(alpha: float) -> float:
    if not 1.0 < alpha < 2.0:
        raise ValidationError(f"alpha must lie in (1, 2), got {alpha}")
    return float(alpha)


def moment_family(a, alpha: float, order: float, times, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``(g_order * S_alpha)(t) = t^order E_{alpha,1+order}(t^alpha A)`` for each t.

    ``order = 0`` gives S_alpha itself, ``order = alpha - 1`` gives P_alpha.
    """
    gen = as_generator(a)
    if order < 0:
        raise ValidationError("moment order must be >= 0")
    t = np.asarray(times, dtype=float)
    flat = t.ravel()
    if np.any(flat < 0):
        raise ValidationError("times must be >= 0")
    e = ml_matrix_family(MLParams(alpha, 1.0 + order, tol), gen, flat**alpha)
    if order > 0:
        e = e * (flat**order)[:, None, None]
        e[flat == 0] = 0.0
    return e.reshape(t.shape + (gen.dim, gen.dim))


def s_alpha(a, alpha: float, grid: Grid, tol: float = DEFAULT_TOL) -> OperatorFamily:
    """S_alpha(t_j) = E_{alpha,1}(t_j^alpha A)."""
    alpha = _check_alpha(alpha)
    samples = moment_family(a, alpha, 0.0, grid.nodes, tol)
    samples[0] = np.eye(samples.shape[1])
    return OperatorFamily(grid, samples, S_ALPHA, alpha, "matrix_function")


def p_alpha(a, alpha: float, grid: Grid, tol: float = DEFAULT_TOL) -> OperatorFamily:
    """P_alpha(t_j) = t_j^(alpha-1) E_{alpha,alpha}(t_j^alpha A); zero at t = 0."""
    alpha = _check_alpha(alpha)
    samples = moment_family(a, alpha, alpha - 1.0, grid.nodes, tol)
    samples[0] = 0.0
    return OperatorFamily(grid, samples, P_ALPHA, alpha, "matrix_function")


def s_alpha_volterra(a, alpha: float, grid: Grid, check_envelope: bool = True) -> OperatorFamily:
    """March ``S(t_j) = I + sum_k W[j,k] S(t_k) A`` with implicit diagonal term.

    Stable envelope: uniform grid, N >= 256 and ||A|| r^alpha <= 8; pass
    ``check_envelope=False`` to run outside it (e.g. for convergence studies).
    """
    alpha = _check_alpha(alpha)
    gen = as_generator(a)
    if check_envelope:
        size = gen.norm * grid.r**alpha
        if size > VOLTERRA_NORM_CAP:
            raise NumericalEnvelopeError(
                f"||A|| r^alpha = {size:.4g} exceeds the Volterra stability envelope {VOLTERRA_NORM_CAP:g}"
            )
        if not grid.is_uniform or grid.n < VOLTERRA_MIN_N:
            raise NumericalEnvelopeError(
                f"Volterra march needs a uniform grid with N >= {VOLTERRA_MIN_N}"
            )
    w = np.ascontiguousarray(pi_weights(grid, alpha))
    amat = np.ascontiguousarray(gen.entries)
    diag = np.diag(w)
    for wjj in np.unique(diag[1:]):
        m = np.eye(gen.dim) - wjj * amat
        if np.linalg.cond(m) > 1e12:
            raise StepSolveError(f"step matrix I - {wjj:.3g} A is numerically singular")
    samples = _loops.volterra_march(w, amat)
    return OperatorFamily(grid, samples, S_ALPHA, alpha, "volterra")


def family_convolve(a, alpha: float, order: float, f: SampledFunction, tol: float = DEFAULT_TOL) -> SampledFunction:
    """``(g_order * S_alpha * f)(t_j)`` for vector-valued f interpolated linearly.

    The kernel ``g_order * S_alpha`` is integrated exactly against each
    linear piece through the closed-form moments of orders ``order + 1`` and
    ``order + 2``. ``order = alpha - 1`` gives ``P_alpha * f``.
    """
    gen = as_generator(a)
    grid = f.grid
    fv = np.asarray(f.values)
    vector = fv.ndim == 2
    if fv.ndim == 1 and gen.dim == 1:
        fv = fv[:, None]
    if fv.ndim == 2:
        fb = fv[:, :, None]
    elif fv.ndim == 3:
        fb = fv
    else:
        raise ValidationError("family_convolve needs vector or matrix samples")
    if fb.shape[1] != gen.dim:
        raise ValidationError(f"data dimension {fb.shape[1]} does not match generator dimension {gen.dim}")
    dtype = np.result_type(gen.entries, fb, float)
    fb = np.ascontiguousarray(fb, dtype=dtype)
    t = grid.nodes
    if grid.is_uniform:
        k1 = moment_family(gen, alpha, order + 1.0, t, tol).astype(dtype)
        k2 = moment_family(gen, alpha, order + 2.0, t, tol).astype(dtype)
        h = grid.h
        amat = np.zeros_like(k1)
        bmat = np.zeros_like(k1)
        amat[1:] = k1[1:] - k1[:-1]
        bmat[1:] = (k2[1:] - k2[:-1]) / h - k1[:-1]
        out = _loops.lag_conv(np.ascontiguousarray(amat), np.ascontiguousarray(bmat), fb)
    else:
        jj, kk = np.tril_indices(t.size, -1)
        ua = t[jj] - t[kk]
        ub = t[jj] - t[kk + 1]
        k1a = moment_family(gen, alpha, order + 1.0, ua, tol).astype(dtype)
        k1b = moment_family(gen, alpha, order + 1.0, ub, tol).astype(dtype)
        k2a = moment_family(gen, alpha, order + 2.0, ua, tol).astype(dtype)
        k2b = moment_family(gen, alpha, order + 2.0, ub, tol).astype(dtype)
        h = (t[kk + 1] - t[kk])[:, None, None]
        i0 = k1a - k1b
        i1 = (k2a - k2b) / h - k1b
        df = fb[kk + 1] - fb[kk]
        contrib = np.einsum("pij,pjq->piq", i0, fb[kk]) + np.einsum("pij,pjq->piq", i1, df)
        out = np.zeros((t.size,) + contrib.shape[1:], dtype=dtype)
        np.add.at(out, jj, contrib)
    if gen.is_real and np.isrealobj(f.values):
        out = out.real
    if vector:
        out = out[:, :, 0]
    elif np.asarray(f.values).ndim == 1:
        out = out[:, 0, 0]
    return f.with_values(out)


def p_convolve(a, alpha: float, f: SampledFunction, tol: float = DEFAULT_TOL) -> SampledFunction:
    """``(P_alpha * f)(t_j)``."""
    return family_convolve(a, _check_alpha(alpha), alpha - 1.0, f, tol)
