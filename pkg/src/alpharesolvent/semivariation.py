"""Semivariation of sampled operator families.

For a subdivision ``d_0 < ... < d_n`` with increments ``D_i = G(d_i) - G(d_{i-1})``,

    SV_d[G] = sup_{||x_i|| <= 1} || sum_i D_i x_i ||
            = sup_{||y||_* <= 1} sum_i || D_i^H y ||_*,

the second form obtained by writing the outer norm through its dual and
exchanging the two suprema. The dual form is a maximization of a convex
function over a single dual ball, so its supremum sits on the extreme points:

* ``l1`` (dual ball = cube): enumerate the vertices ``{-1, 1}^m``;
* ``linf`` (dual ball = cross-polytope): the vertices ``+-e_k`` suffice;
* ``euclidean``: multi-start normalized-gradient ascent on the sphere, which
  increases a convex objective monotonically.

Maximizing ``x_i`` are then read off from the dual direction, and the reported
value is ``|| sum_i D_i x_i ||`` for those ``x_i`` - a certified lower bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._io import write_json
from .errors import ValidationError
from .norms import EUCLIDEAN, L1, LINF, NormSpec, as_norm

#: Deterministic multi-start count for the euclidean ascent.
N_STARTS = 16
#: Largest dimension for which the cube vertices are enumerated exhaustively.
VERTEX_DIM_CAP = 12
#: Unit-vector norms may exceed 1 by at most this.
UNIT_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class Subdivision:
    """Partition ``a = d_0 < d_1 < ... < d_n = b``."""

    points: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValidationError("a subdivision needs at least two points")
        if not np.all(np.isfinite(p)) or np.any(np.diff(p) <= 0):
            raise ValidationError("subdivision points must be finite and strictly increasing")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @classmethod
    def uniform(cls, a: float, b: float, n: int) -> "Subdivision":
        return cls(np.linspace(a, b, int(n) + 1))

    @property
    def n(self) -> int:
        return self.points.size - 1

    @property
    def min_gap(self) -> float:
        return float(np.diff(self.points).min())

    def refines(self, other: "Subdivision", atol: float = 1e-12) -> bool:
        return all(np.min(np.abs(self.points - q)) <= atol for q in other.points)


@dataclass(frozen=True, eq=False)
class SemivariationEstimate:
    value: float
    subdivision: Subdivision
    maximizer: np.ndarray
    dual: Optional[np.ndarray] = None
    converged: bool = True
    history: list = field(default_factory=list)

    def __post_init__(self):
        if not (np.isfinite(self.value) and self.value >= 0):
            raise ValidationError(f"semivariation value must be finite and >= 0, got {self.value}")

    @property
    def n(self) -> int:
        return self.subdivision.n

    def to_dict(self) -> dict:
        mx = np.asarray(self.maximizer)
        if np.iscomplexobj(mx):
            mx = mx.real if np.max(np.abs(mx.imag), initial=0.0) == 0 else mx
        out = {
            "value": float(self.value),
            "n": self.n,
            "converged": bool(self.converged),
            "maximizer": mx.tolist() if np.isrealobj(mx) else [[str(c) for c in row] for row in mx],
        }
        if self.history:
            out["table"] = [{"n": int(k), "sv": float(v)} for k, v in self.history]
        return out

    def to_json(self, path):
        return write_json(path, self.to_dict())


def _samples_at(g, d: Subdivision) -> np.ndarray:
    """Matrix samples of ``g`` at the subdivision points."""
    samples = getattr(g, "samples", None)
    if samples is None:
        arr = np.asarray(g)
        if arr.ndim == 1:
            arr = arr[:, None, None]
        if arr.ndim != 3 or arr.shape[0] != d.points.size:
            raise ValidationError("raw samples must be (n+1, m, k), one per subdivision point")
        return arr
    grid = g.grid
    idx = [grid.index_of(p) for p in d.points]
    return np.asarray(samples)[idx]


def _real_if_possible(a: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(a) and np.max(np.abs(a.imag), initial=0.0) == 0.0:
        return a.real
    return a


def _primal(norm: NormSpec, v: np.ndarray) -> np.ndarray:
    """Unit-ball maximizer of Re<v, x> for each row of v (x in the primal ball)."""
    x = np.zeros_like(v)
    mag = np.abs(v)
    if norm.tag == EUCLIDEAN:
        nv = np.linalg.norm(v, axis=1)
        ok = nv > 0
        x[ok] = v[ok] / nv[ok, None]
        x[~ok, 0] = 1.0
    elif norm.tag == L1:
        k = np.argmax(mag, axis=1)
        rows = np.arange(v.shape[0])
        x[rows, k] = np.where(mag[rows, k] > 0, v[rows, k] / np.where(mag[rows, k] > 0, mag[rows, k], 1), 1.0)
    else:
        x = np.where(mag > 0, v / np.where(mag > 0, mag, 1), 1.0)
    return x


def _dual_objective(inc_h: np.ndarray, y: np.ndarray, dual: NormSpec) -> float:
    # inc_h: (n, k, m) conjugate-transposed increments
    return float(dual(inc_h @ y, axis=1).sum())


def _ascent(inc: np.ndarray, starts: list, iters: int = 500) -> tuple:
    """Normalized-gradient ascent of sum_i ||D_i^H y||_2 on the unit sphere."""
    inc_h = np.conj(np.swapaxes(inc, 1, 2))
    best_val, best_y = -1.0, starts[0]
    for y in starts:
        ny = np.linalg.norm(y)
        if ny == 0:
            continue
        y = y / ny
        val = _dual_objective(inc_h, y, NormSpec(EUCLIDEAN))
        for _ in range(iters):
            v = inc_h @ y  # (n, k)
            nv = np.linalg.norm(v, axis=1)
            ok = nv > 0
            if not ok.any():
                break
            grad = np.einsum("imk,ik->m", inc[ok], v[ok] / nv[ok, None])
            ng = np.linalg.norm(grad)
            if ng == 0:
                break
            y_new = grad / ng
            new = _dual_objective(inc_h, y_new, NormSpec(EUCLIDEAN))
            y = y_new
            if new <= val * (1 + 1e-15) + 1e-300:
                val = max(val, new)
                break
            val = new
        if val > best_val:
            best_val, best_y = val, y
    return best_val, best_y


def _euclidean_starts(inc: np.ndarray, rng: np.random.Generator, n_starts: int, warm) -> list:
    m = inc.shape[1]
    cplx = np.iscomplexobj(inc)
    starts = []
    if warm is not None and np.asarray(warm).shape == (m,):
        starts.append(np.asarray(warm, dtype=inc.dtype))
    stacked = np.concatenate(list(inc), axis=1) if inc.shape[0] else np.zeros((m, 1))
    u, _, _ = np.linalg.svd(stacked, full_matrices=False)
    starts.append(u[:, 0])
    norms = np.linalg.norm(inc, ord=2, axis=(1, 2))
    for i in np.argsort(-norms)[: min(4, inc.shape[0])]:
        ui, _, _ = np.linalg.svd(inc[i])
        starts.append(ui[:, 0])
    for _ in range(n_starts):
        y = rng.standard_normal(m)
        if cplx:
            y = y + 1j * rng.standard_normal(m)
        starts.append(y)
    return starts


def _cube_vertices(m: int):
    # y and -y give the same objective; fix the first sign
    for signs in itertools.product((1.0, -1.0), repeat=m - 1):
        yield np.array((1.0,) + signs)


def _dual_search(inc: np.ndarray, norm: NormSpec, n_starts: int, seed: int, vertex_cap: int, warm):
    """Return (dual direction y, exact?)."""
    m = inc.shape[1]
    inc_h = np.conj(np.swapaxes(inc, 1, 2))
    if norm.tag == EUCLIDEAN:
        rng = np.random.default_rng(seed)
        _, y = _ascent(inc, _euclidean_starts(inc, rng, n_starts, warm))
        return y, True
    if np.iscomplexobj(inc):
        raise ValidationError("l1/linf semivariation supports real families only")
    dual = norm.dual
    if norm.tag == LINF:
        # dual ball is the l1 ball: its extreme points are +-e_k
        scores = np.abs(inc).sum(axis=(0, 2))
        y = np.zeros(m)
        y[int(np.argmax(scores))] = 1.0
        return y, True
    # norm.tag == L1: dual ball is the unit cube
    if m <= vertex_cap:
        best, best_y = -1.0, None
        for y in _cube_vertices(m):
            val = _dual_objective(inc_h, y, dual)
            if val > best:
                best, best_y = val, y
        return best_y, True
    rng = np.random.default_rng(seed)
    best, best_y = -1.0, None
    for _ in range(max(n_starts, 64)):
        y = rng.choice((-1.0, 1.0), size=m)
        val = _dual_objective(inc_h, y, dual)
        improved = True
        while improved:
            improved = False
            for c in range(m):
                y[c] = -y[c]
                new = _dual_objective(inc_h, y, dual)
                if new > val:
                    val, improved = new, True
                else:
                    y[c] = -y[c]
        if val > best:
            best, best_y = val, y.copy()
    return best_y, False


def sv_on_subdivision(
    g,
    d: Subdivision,
    norm=None,
    *,
    n_starts: int = N_STARTS,
    seed: int = 0,
    vertex_cap: int = VERTEX_DIM_CAP,
    warm_start=None,
) -> SemivariationEstimate:
    """SV_d[G] for an :class:`OperatorFamily` (sampled at ``d``) or raw samples.

    Parameters
    ----------
    g : OperatorFamily or array (n+1, m, k)
        Family whose grid contains every point of ``d``, or the samples
        ``G(d_0), ..., G(d_n)`` themselves.
    d : Subdivision
    norm : NormSpec or str
        Norm used on both the domain and the target space.
    warm_start : array, optional
        Dual direction tried first (e.g. from a coarser subdivision).

    Returns
    -------
    SemivariationEstimate
        ``value`` is ``|| sum_i D_i x_i ||`` for the returned maximizers, so it
        never exceeds the true SV_d. ``converged`` is False only when the cube
        was too large to enumerate and a local search was used instead.
    """
    norm = as_norm(norm)
    samples = _real_if_possible(np.asarray(_samples_at(g, d)))
    inc = np.diff(samples, axis=0)
    m, k = inc.shape[1], inc.shape[2]
    if not np.any(inc):
        x = np.zeros((d.n, k))
        x[:, 0] = 1.0
        return SemivariationEstimate(0.0, d, x, np.eye(m)[0], True)
    y, exact = _dual_search(inc, norm, n_starts, seed, vertex_cap, warm_start)
    inc_h = np.conj(np.swapaxes(inc, 1, 2))
    xs = _primal(norm, inc_h @ y)
    value = float(norm(np.einsum("imk,ik->m", inc, xs)))
    return SemivariationEstimate(value, d, xs, y, exact)


def dyadic_levels(n_grid: int, n_max: Optional[int] = None) -> list:
    """n = 2, 4, 8, ... dividing the grid step count, up to ``n_max``."""
    cap = n_grid if n_max is None else min(int(n_max), n_grid)
    levels = []
    n = 2
    while n <= cap and n_grid % n == 0:
        levels.append(n)
        n *= 2
    if not levels:
        raise ValidationError(f"grid with N = {n_grid} admits no dyadic subdivision up to {cap}")
    return levels


def sv_estimate(
    g,
    norm=None,
    n_max: Optional[int] = 128,
    rel_tol: float = 1e-3,
    levels: Optional[Sequence[int]] = None,
    seed: int = 0,
) -> SemivariationEstimate:
    """Estimate SV[G] on the family's interval by nested dyadic subdivisions.

    Level ``n`` uses every ``N/n``-th grid node, so the subdivisions are nested
    and their values nondecreasing. The returned estimate is the largest value
    found; ``converged`` is true when the last two levels differ by less than
    ``rel_tol`` times the value. ``history`` holds the (n, SV_d) table.
    """
    grid = g.grid
    levels = list(levels) if levels is not None else dyadic_levels(grid.n, n_max)
    history = []
    best = None
    warm = None
    exact = True
    for n in levels:
        if grid.n % n:
            raise ValidationError(f"level n = {n} does not divide the grid step count {grid.n}")
        d = Subdivision(grid.nodes[:: grid.n // n])
        est = sv_on_subdivision(g, d, norm, seed=seed, warm_start=warm)
        exact &= est.converged
        warm = est.dual
        history.append((n, est.value))
        if best is None or est.value >= best.value:
            best = est
    vals = [v for _, v in history]
    if len(vals) >= 2:
        settled = abs(vals[-1] - vals[-2]) <= rel_tol * max(vals[-1], 0.0) or max(vals) == 0.0
    else:
        settled = vals[0] == 0.0
    return SemivariationEstimate(best.value, best.subdivision, best.maximizer, best.dual, bool(settled and exact), history)


def sv_brute_force(
    samples,
    norm=None,
    per_ball: int = 10,
    refine: int = 2000,
    sweeps: int = 3,
    seed: int = 0,
    starts: int = 8,
) -> float:
    """Primal maximization of ``|| sum_i D_i x_i ||`` over discretized unit balls.

    Independent of the dual formula; meant for small checks (n * dim small).
    l1 and linf balls are replaced by their extreme points, which is exact
    because the objective is convex in each ``x_i``. The euclidean sphere is
    sampled with ``per_ball`` points per factor; the best ``starts`` coarse
    tuples are then refined coordinatewise over ``refine`` sphere points,
    each ``x_i`` in turn with the others held fixed.
    """
    norm = as_norm(norm)
    arr = np.asarray(samples, dtype=float)
    inc = np.diff(arr, axis=0)
    n, m, k = inc.shape
    if norm.tag == L1:
        pts = np.concatenate([np.eye(k), -np.eye(k)])
    elif norm.tag == LINF:
        pts = np.array(list(itertools.product((1.0, -1.0), repeat=k)))
    else:
        pts = _sphere_points(k, per_ball, seed)
    images = np.einsum("iab,jb->ija", inc, pts)  # D_i applied to every candidate
    scored = []
    for idx in itertools.product(range(len(pts)), repeat=n):
        total = sum((images[i, j] for i, j in enumerate(idx)), np.zeros(m))
        scored.append((float(norm(total)), idx))
    scored.sort(key=lambda s: -s[0])
    best = scored[0][0]
    if norm.tag != EUCLIDEAN:
        return best
    fine = _sphere_points(k, refine, seed + 1)
    fine_images = np.einsum("iab,jb->ija", inc, fine)
    for _, idx in scored[:starts]:
        xs = [pts[j] for j in idx]
        cur = -1.0
        for _ in range(sweeps):
            for i in range(n):
                rest = sum((inc[l] @ xs[l] for l in range(n) if l != i), np.zeros(m))
                vals = norm(rest[None, :] + fine_images[i], axis=1)
                j = int(np.argmax(vals))
                if vals[j] > cur:
                    cur = float(vals[j])
                    xs[i] = fine[j]
        best = max(best, cur)
    return best


def _sphere_points(k: int, count: int, seed: int) -> np.ndarray:
    if k == 1:
        return np.array([[1.0], [-1.0]])
    if k == 2:
        th = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    if k == 3:
        # Fibonacci lattice
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        phi = np.pi * (1 + 5**0.5) * i
        rr = np.sqrt(1 - z * z)
        return np.stack([rr * np.cos(phi), rr * np.sin(phi), z], axis=1)
    rng = np.random.default_rng(seed)
    p = rng.standard_normal((count, k))
    return p / np.linalg.norm(p, axis=1, keepdims=True)
