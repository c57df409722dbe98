"""Solutions of ``D_t^alpha u = A u + f``, ``u(0) = x``, ``u'(0) = y``, and their diagnostics.

The solution is assembled from the resolvent families,

    u(t) = S_alpha(t) x + (1 * S_alpha)(t) y + (P_alpha * f)(t),

and checked against the Caputo derivative computed by :mod:`alpharesolvent.kernels`.
The rest of the module evaluates the identities linking S_alpha, P_alpha and
A, the Stieltjes representation of ``A (P_alpha * f)``, the semivariation
lower bound built from ramp forcings, and the empirical regularity constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from ._io import write_csv, write_json
from .errors import ValidationError
from .kernels import Grid, SampledFunction, caputo, convolve, convolve_g, integrate
from .norms import NormSpec, as_norm
from .resolvent import S_ALPHA, Generator, OperatorFamily, as_generator, moment_family, p_convolve
from .semivariation import SemivariationEstimate, Subdivision, sv_estimate, sv_on_subdivision

#: Nodes dropped at each end of the grid when measuring the Caputo residual.
RESIDUAL_TRIM = 2
#: Jumps beyond this multiple of the local quadrature error count as discontinuities.
JUMP_FACTOR = 10.0
#: Expected shrink factor of the extrapolation mismatch of continuous data when h halves.
REFINE_CONTRACTION = 0.75


@dataclass(frozen=True, eq=False)
class SolveRequest:
    A: Generator
    alpha: float
    x: np.ndarray
    y: np.ndarray
    f: SampledFunction
    norm: NormSpec = field(default_factory=NormSpec)

    def __post_init__(self):
        gen = as_generator(self.A)
        object.__setattr__(self, "A", gen)
        if not 1.0 < self.alpha < 2.0:
            raise ValidationError(f"alpha must lie in (1, 2), got {self.alpha}")
        n = gen.dim
        for name in ("x", "y"):
            v = np.atleast_1d(np.asarray(getattr(self, name)))
            v = v.astype(np.result_type(v, float))
            if v.shape != (n,):
                raise ValidationError(f"{name} must have length {n}, got shape {v.shape}")
            if not np.all(np.isfinite(v)):
                raise ValidationError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        fv = np.asarray(self.f.values)
        if fv.ndim == 1 and n == 1:
            object.__setattr__(self, "f", self.f.with_values(fv[:, None]))
        elif fv.ndim != 2 or fv.shape[1] != n:
            raise ValidationError(f"forcing must be vector-valued with dimension {n}, got {fv.shape}")
        object.__setattr__(self, "norm", as_norm(self.norm))

    @property
    def grid(self) -> Grid:
        return self.f.grid


@dataclass(frozen=True, eq=False)
class SolutionBundle:
    u: SampledFunction
    u_prime: SampledFunction
    Au: SampledFunction
    residual: np.ndarray
    residual_sup: float
    components: dict
    diagnostics: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        t = self.u.t
        uv = self.u.values
        res = np.full(t.size, np.nan)
        res[RESIDUAL_TRIM : t.size - RESIDUAL_TRIM] = self.residual
        header = ["t"] + [f"u{i}" for i in range(uv.shape[1])] + ["residual"]
        rows = np.column_stack([t, uv.real, res])
        write_csv(path, header, rows, allow_missing=True)

    def summary(self) -> dict:
        uv = self.u.values
        return {
            "residual_sup": self.residual_sup,
            "u_final": uv[-1].real.tolist(),
            "u_prime_sup": float(np.max(np.linalg.norm(self.u_prime.values, axis=1))),
            "Au_sup": float(np.max(np.linalg.norm(self.Au.values, axis=1))),
            **self.diagnostics,
        }


@dataclass(frozen=True)
class RegularityReport:
    C_estimate: float
    probe_count: int
    worst_probe: str
    sv_estimate: SemivariationEstimate
    corollary_sup: float
    ratios: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("C_estimate", "corollary_sup"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be finite and >= 0, got {v}")

    def to_dict(self) -> dict:
        return {
            "C_estimate": self.C_estimate,
            "probe_count": self.probe_count,
            "worst_probe": self.worst_probe,
            "ratios": self.ratios,
            "corollary_sup": self.corollary_sup,
            "sv_estimate": self.sv_estimate.to_dict(),
        }


# ---------------------------------------------------------------------------
# numerical differentiation


def derivative(grid: Grid, values: np.ndarray) -> np.ndarray:
    """First derivative at the nodes.

    Fourth-order central differences on uniform grids (one-sided five-point
    stencils at the two nodes nearest each end); second-order
    :func:`numpy.gradient` on other grids.
    """
    v = np.asarray(values)
    if not grid.is_uniform or grid.n < 4:
        return np.gradient(v, grid.nodes, axis=0, edge_order=2)
    h = grid.h
    d = np.empty_like(v, dtype=np.result_type(v, float))
    d[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    d[0] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / (12 * h)
    d[1] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3] + v[4]) / (12 * h)
    d[-1] = (25 * v[-1] - 48 * v[-2] + 36 * v[-3] - 16 * v[-4] + 3 * v[-5]) / (12 * h)
    d[-2] = (3 * v[-1] + 10 * v[-2] - 18 * v[-3] + 6 * v[-4] - v[-5]) / (12 * h)
    return d


def _sup(norm: NormSpec, values) -> float:
    v = np.asarray(values)
    return float(np.max(norm.pointwise(v), initial=0.0))


def _real(gen: Generator, *arrays):
    out = [a.real if gen.is_real and np.iscomplexobj(a) else a for a in arrays]
    return out if len(out) > 1 else out[0]


# ---------------------------------------------------------------------------
# solution


def mild_solution(req: SolveRequest) -> SolutionBundle:
    """Assemble ``u = S x + (1 * S) y + P * f`` and its Caputo residual.

    ``(1 * S)(t) y`` comes from ``t E_{alpha,2}(t^alpha A) y``; a quadrature of
    ``int_0^t S(s) y ds`` is kept in ``diagnostics['Sy_crosscheck']``.
    """
    gen, alpha, grid, norm = req.A, req.alpha, req.grid, req.norm
    t = grid.nodes
    s = moment_family(gen, alpha, 0.0, t)
    s[0] = np.eye(gen.dim)
    m1 = moment_family(gen, alpha, 1.0, t)
    sx = _real(gen, s @ req.x)
    sy = _real(gen, m1 @ req.y)
    pf = p_convolve(gen, alpha, req.f).values
    u_vals = sx + sy + pf
    u = req.f.with_values(u_vals)

    sy_quad = integrate(req.f.with_values(_real(gen, s @ req.y)), lead_exponent=alpha).values
    u_prime = req.f.with_values(derivative(grid, u_vals))
    au = req.f.with_values(gen.apply(u_vals))
    dal = caputo(alpha, u, req.x, req.y).values
    res_full = dal - au.values - req.f.values
    inner = slice(RESIDUAL_TRIM, t.size - RESIDUAL_TRIM)
    residual = norm(res_full[inner], axis=1)
    residual_sup = float(residual.max(initial=0.0))
    return SolutionBundle(
        u=u,
        u_prime=u_prime,
        Au=au,
        residual=residual,
        residual_sup=residual_sup,
        components={"Sx": sx, "Sy_integral": sy, "Pf": pf},
        diagnostics={"Sy_crosscheck": _sup(norm, sy - sy_quad)},
    )


# ---------------------------------------------------------------------------
# identities between S_alpha, P_alpha and A


def _local_integral(gen, alpha, order, lo, hi, weight, m, lead):
    """int_lo^hi weight(u) * (g_order * S)(u) du by product integration on m steps."""
    u = np.linspace(lo, hi, m + 1)
    vals = moment_family(gen, alpha, order, u)
    if order == 0 and lo == 0:
        vals[0] = np.eye(gen.dim)
    vals = vals * weight(u)[:, None, None]
    grid = Grid(u - lo)
    return integrate(SampledFunction(grid, vals), lead_exponent=lead).values[-1]


def check_p_identities(
    A,
    alpha: float,
    grid: Grid,
    x,
    a: float,
    b: float,
    f: SampledFunction,
    t: Optional[float] = None,
    norm=None,
) -> dict:
    """Sup-norm residuals of the four identities relating A, S_alpha and P_alpha.

    ``a``: ``A int_0^t P(s) x ds = S(t) x - x`` at every node.
    ``b``: ``A int_a^b s P(t-s) x ds = a S(t-a) x - b S(t-b) x + int_a^b S(t-s) x ds``
    at the single time ``t`` (default: the grid horizon).
    ``c``: ``A (g_alpha * (s P(s) x))(t) = -alpha (g_alpha * S)(t) x + t P(t) x``.
    ``d``: ``A (g_alpha * S * f) = ((S - I) * f)``.

    Every quadrature here is independent of the closed-form moments used by
    :func:`alpharesolvent.resolvent.family_convolve`.
    """
    gen = as_generator(A)
    norm = as_norm(norm)
    tnodes = grid.nodes
    t = grid.r if t is None else float(t)
    if not 0.0 <= a <= b <= t <= grid.r + 1e-12:
        raise ValidationError("need 0 <= a <= b <= t <= r")
    x = np.asarray(x, dtype=float).reshape(gen.dim)
    eye = np.eye(gen.dim)
    s = moment_family(gen, alpha, 0.0, tnodes)
    s[0] = eye
    p = moment_family(gen, alpha, alpha - 1.0, tnodes)
    p[0] = 0.0
    sx = _real(gen, s @ x)
    px = _real(gen, p @ x)

    # (a)
    ipx = integrate(SampledFunction(grid, px), lead_exponent=alpha - 1.0).values
    ra = _sup(norm, gen.apply(ipx) - (sx - x))

    # (b): substitute u = t - s, u in [t-b, t-a]
    m = grid.n
    lo, hi = t - b, t - a
    if hi > lo:
        lead_p = alpha - 1.0 if lo == 0 else None
        lead_s = alpha if lo == 0 else None
        lhs = _local_integral(gen, alpha, alpha - 1.0, lo, hi, lambda u: t - u, m, lead_p) @ x
        int_s = _local_integral(gen, alpha, 0.0, lo, hi, lambda u: np.ones_like(u), m, lead_s) @ x
    else:
        lhs = np.zeros(gen.dim)
        int_s = np.zeros(gen.dim)
    s_ends = moment_family(gen, alpha, 0.0, np.array([t - a, t - b]))
    rhs = a * (s_ends[0] @ x) - b * (s_ends[1] @ x) + int_s
    rb = float(norm(_real(gen, gen.entries @ lhs - rhs)))

    # (c)
    spx = tnodes[:, None] * px
    lhs_c = gen.apply(convolve_g(alpha, SampledFunction(grid, spx), lead_exponent=alpha).values)
    gs = convolve_g(alpha, SampledFunction(grid, sx), lead_exponent=alpha).values
    rc = _sup(norm, lhs_c - (-alpha * gs + spx))

    # (d)
    fv = np.asarray(f.values)
    if fv.ndim == 1:
        fv = fv[:, None]
    sfun = SampledFunction(grid, _real(gen, s))
    sf = convolve(sfun, SampledFunction(grid, fv)).values
    lhs_d = gen.apply(convolve_g(alpha, SampledFunction(grid, sf)).values)
    rhs_d = convolve(SampledFunction(grid, _real(gen, s - eye)), SampledFunction(grid, fv)).values
    rd = _sup(norm, lhs_d - rhs_d)
    return {"a": ra, "b": rb, "c": rc, "d": rd}


# name fixed by the public interface
check_prop31 = check_p_identities


def corollary_identity_residual(A, alpha: float, grid: Grid, x, norm=None) -> float:
    """``max_j ||(P * f)(t_j) - t_j P(t_j) x||`` for ``f = alpha S x``."""
    gen = as_generator(A)
    norm = as_norm(norm)
    x = np.asarray(x, dtype=float).reshape(gen.dim)
    t = grid.nodes
    s = moment_family(gen, alpha, 0.0, t)
    s[0] = np.eye(gen.dim)
    p = moment_family(gen, alpha, alpha - 1.0, t)
    p[0] = 0.0
    f = SampledFunction(grid, _real(gen, alpha * (s @ x)))
    lhs = p_convolve(gen, alpha, f).values
    return _sup(norm, lhs - _real(gen, t[:, None] * (p @ x)))


def corollary_sup(A, alpha: float, grid: Grid, norm=None) -> float:
    """``max_j ||t_j A P_alpha(t_j)||`` in the induced operator norm."""
    gen = as_generator(A)
    norm = as_norm(norm)
    t = grid.nodes
    p = moment_family(gen, alpha, alpha - 1.0, t)
    p[0] = 0.0
    tap = t[:, None, None] * np.einsum("ij,sjk->sik", gen.entries, p)
    return float(norm.op_norms(_real(gen, tap)).max())


# ---------------------------------------------------------------------------
# Stieltjes representation of A (P * f)


def _midpoint_values(f: SampledFunction) -> np.ndarray:
    v = np.asarray(f.values)
    return 0.5 * (v[1:] + v[:-1])


def stieltjes_profile(A, alpha: float, f: SampledFunction) -> np.ndarray:
    """``-sum_k [S(t_j - s_{k+1}) - S(t_j - s_k)] f(s_k^*)`` at every node (midpoint tags)."""
    gen = as_generator(A)
    grid = f.grid
    t = grid.nodes
    fv = np.asarray(f.values)
    if fv.ndim == 1:
        fv = fv[:, None]
    fmid = 0.5 * (fv[1:] + fv[:-1])
    out = np.zeros((t.size, gen.dim), dtype=np.result_type(gen.entries, fv, float))
    if grid.is_uniform:
        s = moment_family(gen, alpha, 0.0, t)
        s[0] = np.eye(gen.dim)
        inc = s[:-1] - s[1:]  # S(t_j - s_{k+1}) - S(t_j - s_k) at lag j - k: S_{m-1} - S_m
        for j in range(1, t.size):
            out[j] = -np.einsum("kab,kb->a", inc[j - 1 :: -1], fmid[:j])
    else:
        for j in range(1, t.size):
            s = moment_family(gen, alpha, 0.0, t[j] - t[: j + 1])
            s[-1] = np.eye(gen.dim)
            out[j] = -np.einsum("kab,kb->a", s[1:] - s[:-1], fmid[:j])
    return _real(gen, out)


def stieltjes_apf(A, alpha: float, f: SampledFunction, t: float) -> np.ndarray:
    """Riemann-Stieltjes sum for ``A (P_alpha * f)(t)`` at a grid node ``t``."""
    gen = as_generator(A)
    grid = f.grid
    j = grid.index_of(t)
    tn = grid.nodes
    fv = np.asarray(f.values)
    if fv.ndim == 1:
        fv = fv[:, None]
    if j == 0:
        return np.zeros(gen.dim)
    s = moment_family(gen, alpha, 0.0, tn[j] - tn[: j + 1])
    s[-1] = np.eye(gen.dim)
    fmid = 0.5 * (fv[1 : j + 1] + fv[:j])
    return _real(gen, -np.einsum("kab,kb->a", s[1:] - s[:-1], fmid))


def apf_profile(A, alpha: float, f: SampledFunction) -> np.ndarray:
    """``A (P_alpha * f)`` at every node (closed-form kernel moments)."""
    gen = as_generator(A)
    fv = np.asarray(f.values)
    if fv.ndim == 1:
        f = f.with_values(fv[:, None])
    return gen.apply(p_convolve(gen, alpha, f).values)


def jump_excess(values: np.ndarray, norm=None) -> np.ndarray:
    """Mismatch between left and right linear extrapolations at interior nodes.

    At node j the left limit is predicted from (v_{j-2}, v_{j-1}) and the
    right limit from (v_{j+1}, v_{j+2}). Entry ``i`` belongs to node ``i + 2``.
    """
    norm = as_norm(norm)
    v = np.asarray(values)
    if v.ndim == 1:
        v = v[:, None]
    left = 2 * v[1:-3] - v[:-4]
    right = 2 * v[3:-1] - v[4:]
    return norm(left - right, axis=1)


def continuity_check(fine: np.ndarray, coarse: np.ndarray, local_error, floor: float = 1e-12, norm=None) -> dict:
    """Refinement test for jumps in a profile sampled on a grid and its 2:1 coarsening.

    For continuous piecewise-smooth data the extrapolation mismatch of
    :func:`jump_excess` shrinks when the step is halved; across a true jump it
    stays at the jump size. A node fails when its fine-grid mismatch exceeds
    ``REFINE_CONTRACTION`` times the coarse-grid mismatch at the same time by
    more than ``JUMP_FACTOR`` times the local quadrature error.
    """
    ef = jump_excess(fine, norm)
    ec = jump_excess(coarse, norm)
    nc = np.asarray(coarse).shape[0] - 1
    k = np.arange(2, nc - 1)  # coarse nodes with a full stencil
    if k.size == 0:
        raise ValidationError("continuity check needs at least 5 coarse nodes")
    e_fine = ef[2 * k - 2]
    # widest coarse mismatch among neighbouring coarse nodes, so the position of
    # a kink inside the stencils does not matter
    padded = np.concatenate([ec[:1], ec, ec[-1:]])
    e_coarse = np.maximum(np.maximum(padded[k - 2], padded[k - 1]), padded[k])
    loc = np.broadcast_to(np.asarray(local_error, dtype=float), (np.asarray(fine).shape[0],))
    win = np.lib.stride_tricks.sliding_window_view(loc, 9).max(axis=1)  # fine nodes 2k-4 .. 2k+4
    loc_k = win[np.clip(2 * k - 4, 0, win.size - 1)]
    allowed = REFINE_CONTRACTION * e_coarse + JUMP_FACTOR * np.maximum(loc_k, floor)
    ratio = e_fine / allowed
    worst = int(np.argmax(ratio))
    return {
        "passed": bool(np.all(e_fine <= allowed)),
        "max_jump": float(e_fine.max(initial=0.0)),
        "worst_ratio": float(ratio[worst]),
        "worst_node": int(2 * k[worst]),
    }


def _coarse_forcing(f: SampledFunction) -> SampledFunction:
    if f.grid.n % 2 or f.grid.n < 8:
        raise ValidationError("continuity checks need an even grid with N >= 8")
    return SampledFunction(f.grid.coarsen(), np.asarray(f.values)[::2])


def stieltjes_report(A, alpha: float, f: SampledFunction, norm=None) -> dict:
    """Two-route agreement for ``A (P * f)`` and its continuity on the grid.

    The local quadrature error at a node is the larger of the gap between the
    Stieltjes sum and the closed-form route and the change of the Stieltjes
    sum under 2:1 coarsening.
    """
    norm = as_norm(norm)
    st = stieltjes_profile(A, alpha, f)
    ap = apf_profile(A, alpha, f)
    gap = norm(st - ap, axis=1)
    fc = _coarse_forcing(f)
    stc = stieltjes_profile(A, alpha, fc)
    ch = norm(stc - st[::2], axis=1)
    local = gap.copy()
    local[::2] = np.maximum(local[::2], ch)
    local[1::2] = np.maximum(local[1::2], np.maximum(ch[:-1], ch[1:]))
    cont = continuity_check(ap, apf_profile(A, alpha, fc), local, norm=norm)
    return {"max_gap": float(gap.max(initial=0.0)), "gap_at_r": float(gap[-1]), "continuity": cont}


# ---------------------------------------------------------------------------
# equivalence indicators


def equivalence_diagnostics(req: SolveRequest, strong_tol: float = 5e-3, c1_tol: float = 1e-2) -> dict:
    """Side-by-side indicators for the three equivalent regularity statements.

    ``strong``: ``u'`` and ``Au`` are finite and the Caputo residual of the
    assembled u is either below ``strong_tol`` relative to ``1 + ||f||`` or
    shrinks by at least ``REFINE_CONTRACTION`` from the 2:1 coarsened grid
    (i.e. the discrete equation is converging).
    ``Sf_C1``: central difference quotients of ``S * f`` at steps h and 2h
    agree to ``c1_tol`` relative to their size.
    ``APf_continuous``: no jump of ``A (P * f)`` beyond ``JUMP_FACTOR`` times
    the local quadrature error.
    """
    gen, alpha, f, norm = req.A, req.alpha, req.f, req.norm
    grid = f.grid
    fsup = _sup(norm, f.values)
    bundle = mild_solution(req)
    finite = bool(np.all(np.isfinite(bundle.u_prime.values)) and np.all(np.isfinite(bundle.Au.values)))
    coarse_req = SolveRequest(gen, alpha, req.x, req.y, _coarse_forcing(f), norm)
    coarse_res = mild_solution(coarse_req).residual_sup
    small = bundle.residual_sup <= strong_tol * (1.0 + fsup)
    shrinking = bundle.residual_sup <= REFINE_CONTRACTION * coarse_res
    strong_ok = finite and (small or shrinking)

    t = grid.nodes
    s = moment_family(gen, alpha, 0.0, t)
    s[0] = np.eye(gen.dim)
    sf = convolve(SampledFunction(grid, _real(gen, s)), f).values
    d1 = derivative(grid, sf)
    coarse = grid.coarsen()
    d2 = derivative(coarse, sf[::2])
    dq_gap = _sup(norm, d1[::2][2:-2] - d2[2:-2])
    dq_scale = 1.0 + _sup(norm, d1)
    c1_ok = bool(np.isfinite(dq_gap) and dq_gap <= c1_tol * dq_scale)

    st = stieltjes_report(gen, alpha, f, norm)
    cont = st["continuity"]
    return {
        "strong": {"passed": bool(strong_ok), "residual_sup": bundle.residual_sup, "coarse_residual_sup": coarse_res},
        "Sf_C1": {"passed": c1_ok, "difference_quotient_gap": dq_gap},
        "APf_continuous": {"passed": cont["passed"], "max_jump": cont["max_jump"], "worst_ratio": cont["worst_ratio"]},
        "consistent": bool(strong_ok == c1_ok == cont["passed"]),
    }


# ---------------------------------------------------------------------------
# ramp forcings and the semivariation lower bound


def ramp_testfunction(d: Subdivision, eps: float, xs, grid: Grid) -> SampledFunction:
    """Piecewise-constant data ``x_i`` on ``[d_{i-1}, d_i - eps]`` joined by linear ramps.

    On ``[d_i - eps, d_i]`` the function moves linearly from ``x_i`` to
    ``x_{i+1}``, so ``xs`` needs ``n + 1`` entries for ``n`` cells.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    n = d.n
    if xs.shape[0] != n + 1:
        raise ValidationError(f"need {n + 1} vectors for a subdivision with {n} cells, got {xs.shape[0]}")
    if not 0 < eps < d.min_gap:
        raise ValidationError(f"eps must lie in (0, {d.min_gap:g}), got {eps}")
    if np.any(np.linalg.norm(xs, axis=1) > 1 + 1e-12):
        raise ValidationError("ramp vectors must have norm <= 1")
    tau = grid.nodes
    pts = d.points
    cell = np.clip(np.searchsorted(pts, tau, side="right") - 1, 0, n - 1)  # tau in [d_cell, d_cell+1)
    right = pts[cell + 1]
    lam = np.clip((tau - (right - eps)) / eps, 0.0, 1.0)
    vals = xs[cell] + lam[:, None] * (xs[cell + 1] - xs[cell])
    return SampledFunction(grid, vals)


def ramp_grid(r: float, n_steps: int, d: Subdivision, eps: float) -> Grid:
    """Uniform grid on [0, r] with the breakpoints ``d_i`` and ``d_i - eps`` inserted."""
    base = np.linspace(0.0, r, n_steps + 1)
    extra = np.concatenate([d.points, d.points[1:] - eps])
    nodes = np.unique(np.concatenate([base, extra]))
    # merge near-duplicates produced by rounding
    keep = np.concatenate([[True], np.diff(nodes) > 1e-12 * r])
    nodes = nodes[keep]
    nodes[-1] = r
    return Grid(nodes)


def sv_lower_bound(
    A,
    alpha: float,
    r: float,
    d: Subdivision,
    eps_schedule: Sequence[float],
    xs=None,
    n_steps: int = 1024,
    norm=None,
) -> dict:
    """Compare ``||sum_i [S(r - d_{i-1}) - S(r - d_i)] x_i||`` with ``||A L(f)|| + correction``.

    ``L(f) = (P * f)(r)`` for the ramp forcing built from ``xs`` and each
    ``eps``; the correction is
    ``sum_i ||S(r - d_i) v_i - (1/eps) int_{d_i - eps}^{d_i} S(r - s) v_i ds||``
    with ``v_i = x_{i+1} - x_i``. When ``xs`` is omitted the maximizers of
    SV_d for ``tau -> S(r - tau)`` are used, with ``x_{n+1} = -x_n`` (this
    makes the last ramp contribute).
    """
    gen = as_generator(A)
    norm = as_norm(norm)
    pts = d.points
    if abs(pts[0]) > 1e-14 or abs(pts[-1] - r) > 1e-12 * max(r, 1.0):
        raise ValidationError("subdivision must span [0, r]")
    n = d.n
    s_at = _real(gen, moment_family(gen, alpha, 0.0, r - pts))
    s_at[-1] = np.eye(gen.dim)
    if xs is None:
        est = sv_on_subdivision(s_at, Subdivision(pts), norm)
        xs = np.concatenate([est.maximizer, -est.maximizer[-1:]], axis=0)
    xs = np.asarray(xs, dtype=float).reshape(n + 1, gen.dim)
    inc = s_at[:-1] - s_at[1:]  # S(r - d_{i-1}) - S(r - d_i)
    lhs = float(norm(np.einsum("iab,ib->a", inc, xs[:n])))
    rows = []
    for eps in eps_schedule:
        grid = ramp_grid(r, n_steps, d, eps)
        f = ramp_testfunction(d, eps, xs, grid)
        al = gen.entries @ p_convolve(gen, alpha, f).values[-1]
        al_norm = float(norm(_real(gen, al)))
        v = xs[1:] - xs[:-1]
        u0 = r - pts[1:]
        m1a = moment_family(gen, alpha, 1.0, u0 + eps)
        m1b = moment_family(gen, alpha, 1.0, u0)
        avg = (m1a - m1b) / eps
        s_d = s_at[1:]
        terms = np.einsum("iab,ib->ia", s_d, v) - np.einsum("iab,ib->ia", _real(gen, avg), v)
        corr = float(norm(terms, axis=1).sum())
        slack = 1e-12 * max(1.0, lhs)
        rows.append(
            {"eps": float(eps), "lhs": lhs, "AL_norm": al_norm, "correction": corr, "holds": bool(lhs <= al_norm + corr + slack)}
        )
    corrs = [row["correction"] for row in rows]
    return {
        "rows": rows,
        "all_hold": all(row["holds"] for row in rows),
        "correction_nonincreasing": bool(all(b <= a + 1e-15 for a, b in zip(corrs, corrs[1:]))),
    }


# ---------------------------------------------------------------------------
# regularity constant


def default_probes(grid: Grid, dim: int) -> dict:
    """Constant, linear, sinusoidal and ramp forcings in the first coordinate."""
    t = grid.nodes
    e = np.zeros(dim)
    e[0] = 1.0
    probes = {
        "const": SampledFunction(grid, np.outer(np.ones_like(t), e)),
        "linear": SampledFunction(grid, np.outer(t / grid.r, e)),
        "sin": SampledFunction(grid, np.outer(np.sin(2 * np.pi * t / grid.r), e)),
    }
    d = Subdivision.uniform(0.0, grid.r, 4)
    xs = np.outer([1.0, -1.0, 1.0, -1.0, 1.0], e)
    probes["ramp"] = ramp_testfunction(d, d.min_gap / 4, xs, grid)
    return probes


def regularity_constant(
    A,
    alpha: float,
    r: float = 1.0,
    probes: Optional[Mapping[str, SampledFunction] | Sequence[SampledFunction]] = None,
    n_steps: int = 512,
    norm=None,
    sv_levels: Optional[int] = 128,
) -> RegularityReport:
    """Largest ``(||u'|| + ||A u||) / ||f||`` over the probes, with ``x = y = 0``."""
    gen = as_generator(A)
    norm = as_norm(norm)
    grid = Grid.uniform(r, n_steps)
    if probes is None:
        probes = default_probes(grid, gen.dim)
    if not isinstance(probes, Mapping):
        probes = {f"probe{i}": p for i, p in enumerate(probes)}
    if not probes:
        raise ValidationError("at least one probe is required")
    zero = np.zeros(gen.dim)
    ratios = {}
    for name, f in probes.items():
        fsup = _sup(norm, np.asarray(f.values))
        if fsup == 0:
            raise ValidationError(f"probe {name!r} vanishes identically")
        bundle = mild_solution(SolveRequest(gen, alpha, zero, zero, f, norm))
        ratios[name] = (_sup(norm, bundle.u_prime.values) + _sup(norm, bundle.Au.values)) / fsup
    worst = max(ratios, key=ratios.get)
    fam_grid = probes[worst].grid
    s = moment_family(gen, alpha, 0.0, fam_grid.nodes)
    s[0] = np.eye(gen.dim)
    fam = OperatorFamily(fam_grid, _real(gen, s), S_ALPHA, alpha)
    sv = sv_estimate(fam, norm, n_max=sv_levels) if fam_grid.is_uniform else sv_estimate(fam, norm, levels=[1])
    return RegularityReport(
        C_estimate=float(ratios[worst]),
        probe_count=len(ratios),
        worst_probe=str(worst),
        sv_estimate=sv,
        corollary_sup=corollary_sup(gen, alpha, fam_grid, norm),
        ratios=ratios,
    )


# ---------------------------------------------------------------------------
# JSON requests


def triangle_wave(t, period: float = 0.25, amplitude: float = 1.0) -> np.ndarray:
    """Continuous sawtooth: rises linearly from 0 to ``amplitude`` and back each period."""
    ph = np.asarray(t, dtype=float) / period
    return amplitude * 2.0 * np.abs(ph - np.floor(ph + 0.5))


def _vec(v, n: int) -> np.ndarray:
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if a.size == 1 and n > 1:
        a = np.full(n, float(a[0]))
    if a.shape != (n,):
        raise ValidationError(f"expected a vector of length {n}, got {a.tolist()}")
    return a


def forcing_from_spec(spec: Mapping, grid: Grid, n: int) -> SampledFunction:
    """Build the forcing f from its JSON description."""
    if not isinstance(spec, Mapping) or "kind" not in spec:
        raise ValidationError("forcing must be an object with a 'kind' field")
    kind = spec["kind"]
    prm = spec.get("params", {k: v for k, v in spec.items() if k != "kind"})
    t = grid.nodes
    if kind == "const":
        vals = np.outer(np.ones_like(t), _vec(prm.get("value", 1.0), n))
    elif kind == "poly":
        coeffs = prm.get("coeffs", [1.0])
        vals = sum(np.outer(t**k, _vec(c, n)) for k, c in enumerate(coeffs))
    elif kind == "sin":
        amp = _vec(prm.get("amplitude", 1.0), n)
        om = float(prm.get("frequency", 1.0))
        ph = float(prm.get("phase", 0.0))
        vals = np.outer(np.sin(2 * np.pi * om * t + ph), amp)
    elif kind == "sawtooth":
        amp = _vec(prm.get("amplitude", 1.0), n)
        vals = np.outer(triangle_wave(t, float(prm.get("period", 0.25))), amp)
    elif kind == "ramp":
        d = Subdivision(np.asarray(prm["d"], dtype=float))
        xs = np.asarray(prm["xs"], dtype=float).reshape(d.n + 1, n)
        return ramp_testfunction(d, float(prm["eps"]), xs, grid)
    elif kind == "samples":
        vals = np.asarray(prm["values"], dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape != (t.size, n):
            raise ValidationError(f"sampled forcing must have shape ({t.size}, {n}), got {vals.shape}")
    else:
        raise ValidationError(f"unknown forcing kind {kind!r}")
    return SampledFunction(grid, np.asarray(vals, dtype=float))


def grid_from_spec(d: Mapping) -> Grid:
    r = float(d.get("r", 1.0))
    n = int(d.get("N", 512))
    kind = d.get("grid", "uniform")
    if kind == "uniform":
        return Grid.uniform(r, n)
    if kind == "graded":
        alpha = float(d.get("alpha", 1.5))
        return Grid.graded(r, n, float(d.get("gamma", 2.0 / (alpha - 1.0))))
    raise ValidationError(f"unknown grid kind {kind!r}")


def request_from_dict(d: Mapping, norm=None) -> SolveRequest:
    """Parse ``{alpha, r, N, grid, gamma?, A, x, y, f}`` into a :class:`SolveRequest`."""
    try:
        alpha = float(d["alpha"])
        a = np.asarray(d["A"], dtype=float)
    except KeyError as exc:
        raise ValidationError(f"solve request is missing {exc.args[0]!r}") from None
    gen = Generator(np.atleast_2d(a))
    n = gen.dim
    grid = grid_from_spec(d)
    x = _vec(d.get("x", np.zeros(n)), n)
    y = _vec(d.get("y", np.zeros(n)), n)
    f = forcing_from_spec(d.get("f", {"kind": "const", "value": 0.0}), grid, n)
    return SolveRequest(gen, alpha, x, y, f, as_norm(norm if norm is not None else d.get("norm")))


def write_bundle(bundle: SolutionBundle, out_dir, stem: str = "solution") -> tuple:
    """Write ``<stem>.csv`` and the ``<stem>.json`` diagnostics sidecar."""
    out = Path(out_dir)
    csv_path = out / f"{stem}.csv"
    json_path = out / f"{stem}.json"
    bundle.to_csv(csv_path)
    write_json(json_path, bundle.summary())
    return csv_path, json_path
