"""Hot numeric kernels, each in a numba flavour (``*_nb``) and a numpy flavour (``*_np``).

The public names at the bottom of the module dispatch to one flavour based on
:data:`alpharesolvent._accel.HAS_NUMBA`. Tests call both flavours directly.
"""

import math

import numpy as np

from ._accel import HAS_NUMBA, njit

# Lanczos coefficients, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@njit
def _lanczos_core(x):
    # log Gamma(x) for x >= 0.5
    x -= 1.0
    acc = _LANCZOS[0]
    for i in range(1, 9):
        acc += _LANCZOS[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (x + 0.5) * math.log(t) - t + math.log(acc)


@njit
def lanczos_lgamma(x):
    """log(|Gamma(x)|) for real x not a non-positive integer."""
    if x < 0.5:
        s = math.sin(math.pi * x)
        return math.log(math.pi / abs(s)) - _lanczos_core(1.0 - x)
    return _lanczos_core(x)


@njit
def lanczos_gamma(x):
    """Gamma(x) for real x not a non-positive integer."""
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * math.exp(_lanczos_core(1.0 - x)))
    if x > 171.7:
        return math.inf
    xm = x - 1.0
    acc = _LANCZOS[0]
    for i in range(1, 9):
        acc += _LANCZOS[i] / (xm + i)
    t = xm + _LANCZOS_G + 0.5
    # split the power to avoid premature overflow
    p = t ** (0.5 * (xm + 0.5))
    return math.sqrt(2.0 * math.pi) * p * (p * math.exp(-t)) * acc


# ---------------------------------------------------------------------------
# Mittag-Leffler series

@njit
def ml_series_nb(z, coef, tol):
    """Kahan-summed series sum_k coef[k] z^k for each entry of ``z``.

    Returns (values, error estimate, terms used). A term count of -1 means
    the stopping rule was not met, or a power or coefficient left the double
    range, within ``len(coef)`` terms.
    """
    m = z.shape[0]
    nmax = coef.shape[0]
    out = np.empty(m, dtype=np.complex128)
    err = np.empty(m)
    used = np.empty(m, dtype=np.int64)
    eps = 2.220446049250313e-16
    for i in range(m):
        zi = z[i]
        s = 0j
        comp = 0j
        abssum = 0.0
        prev = np.inf
        zk = 1.0 + 0j
        used[i] = -1
        for k in range(nmax):
            term = coef[k] * zk
            a = abs(term)
            abssum += a * (1.0 + 0.5 * k)
            y = term - comp
            tt = s + y
            comp = (tt - s) - y
            s = tt
            if zi == 0 or (k > 0 and a < tol and a < prev):
                used[i] = k + 1
                break
            if coef[k + 1 if k + 1 < nmax else k] == 0.0 or not np.isfinite(a):
                break
            prev = a
            zk = zk * zi
        out[i] = s
        err[i] = eps * abssum
    return out, err, used


def ml_series_np(z, coef, tol, chunk=4096):
    z = np.asarray(z, dtype=np.complex128)
    out = np.empty(z.size, dtype=np.complex128)
    err = np.empty(z.size)
    used = np.empty(z.size, dtype=np.int64)
    for lo in range(0, z.size, chunk):
        sl = slice(lo, lo + chunk)
        out[sl], err[sl], used[sl] = _ml_series_block(z[sl], coef, tol)
    return out, err, used


def _ml_series_block(z, coef, tol):
    nmax = coef.shape[0]
    k = np.arange(nmax)
    with np.errstate(over="ignore", invalid="ignore"):
        zk = np.ones((z.size, nmax), dtype=np.complex128)
        if nmax > 1:
            zk[:, 1:] = np.cumprod(np.broadcast_to(z[:, None], (z.size, nmax - 1)), axis=1)
        terms = coef[None, :] * zk
        a = np.abs(terms)
    prev = np.concatenate([np.full((z.size, 1), np.inf), a[:, :-1]], axis=1)
    stop = (a < tol) & (a < prev) & (k[None, :] > 0)
    stop[z == 0, 0] = True
    hit = stop.any(axis=1)
    first = np.where(hit, stop.argmax(axis=1), nmax - 1)
    keep = k[None, :] <= first[:, None]
    terms = np.where(keep, terms, 0.0)
    bad = ~np.all(np.isfinite(terms), axis=1)
    bad |= np.any(keep & (coef[None, :] == 0.0), axis=1)
    with np.errstate(invalid="ignore"):
        out = terms.sum(axis=1)
        err = np.finfo(float).eps * np.sum(np.where(keep, a * (1.0 + 0.5 * k[None, :]), 0.0), axis=1)
    used = np.where(hit & ~bad, first + 1, -1)
    return out, err, used


# ---------------------------------------------------------------------------
# Product-integration weights for g_beta against piecewise-linear data

@njit
def pi_weights_nb(nodes, beta, rg1, rg2):
    """Weights W with (g_beta * f)(t_j) ~ sum_k W[j, k] f(t_k).

    ``rg1 = 1/Gamma(beta+1)``, ``rg2 = 1/Gamma(beta+2)``.
    """
    n = nodes.shape[0]
    w = np.zeros((n, n))
    for j in range(1, n):
        t = nodes[j]
        for k in range(j):
            a = nodes[k]
            b = nodes[k + 1]
            h = b - a
            ua = t - a
            ub = t - b
            k1a = ua**beta * rg1
            k2a = ua ** (beta + 1.0) * rg2
            if ub > 0.0:
                k1b = ub**beta * rg1
                k2b = ub ** (beta + 1.0) * rg2
            else:
                k1b = 0.0
                k2b = 0.0
            i0 = k1a - k1b
            w1 = (k2a - k2b) / h - k1b
            w[j, k + 1] += w1
            w[j, k] += i0 - w1
    return w


def pi_weights_np(nodes, beta, rg1, rg2):
    n = nodes.shape[0]
    t = nodes[:, None]
    a = nodes[None, :-1]
    b = nodes[None, 1:]
    h = b - a
    ua = np.clip(t - a, 0.0, None)
    ub = np.clip(t - b, 0.0, None)
    k1a = ua**beta * rg1
    k1b = ub**beta * rg1
    k2a = ua ** (beta + 1.0) * rg2
    k2b = ub ** (beta + 1.0) * rg2
    i0 = k1a - k1b
    w1 = (k2a - k2b) / h - k1b
    w = np.zeros((n, n))
    w[:, 1:] += w1
    w[:, :-1] += i0 - w1
    return np.tril(w)


# ---------------------------------------------------------------------------
# Lagged matrix convolution with per-lag matrices (uniform grids)

@njit
def lag_conv_nb(amat, bmat, f):
    """out_j = sum_{m=1}^{j} A_m f_{j-m} + B_m (f_{j-m+1} - f_{j-m}).

    amat, bmat: (N+1, n, n); f: (N+1, n, q).
    """
    npts, n, q = f.shape
    out = np.zeros((npts, amat.shape[1], q), dtype=amat.dtype)
    for j in range(1, npts):
        for m in range(1, j + 1):
            k = j - m
            for r in range(amat.shape[1]):
                for c in range(n):
                    am = amat[m, r, c]
                    bm = bmat[m, r, c]
                    for s in range(q):
                        out[j, r, s] += am * f[k, c, s] + bm * (f[k + 1, c, s] - f[k, c, s])
    return out


def lag_conv_np(amat, bmat, f):
    npts = f.shape[0]
    df = np.diff(f, axis=0)
    out = np.zeros((npts, amat.shape[1], f.shape[2]), dtype=np.result_type(amat, f))
    for j in range(1, npts):
        m = np.arange(j, 0, -1)  # lag for k = 0..j-1
        out[j] = np.einsum("krc,kcs->rs", amat[m], f[:j]) + np.einsum(
            "krc,kcs->rs", bmat[m], df[:j]
        )
    return out


# ---------------------------------------------------------------------------
# Trapezoidal convolution on a uniform grid

@njit
def trapz_conv_nb(fa, ha, h):
    """out_j = int_0^{t_j} F(t_j - s) H(s) ds, trapezoid rule, matrix products.

    fa: (N+1, p, q); ha: (N+1, q, r).
    """
    npts, p, q = fa.shape
    rr = ha.shape[2]
    out = np.zeros((npts, p, rr), dtype=fa.dtype)
    for j in range(1, npts):
        for k in range(j + 1):
            c = 0.5 * h if (k == 0 or k == j) else h
            fm = fa[j - k]
            hm = ha[k]
            for a in range(p):
                for b in range(q):
                    fab = c * fm[a, b]
                    for s in range(rr):
                        out[j, a, s] += fab * hm[b, s]
    return out


def trapz_conv_np(fa, ha, h):
    npts = fa.shape[0]
    out = np.zeros((npts, fa.shape[1], ha.shape[2]), dtype=np.result_type(fa, ha))
    for j in range(1, npts):
        c = np.full(j + 1, h)
        c[0] = c[-1] = 0.5 * h
        out[j] = np.einsum("k,kab,kbs->as", c, fa[j::-1], ha[: j + 1])
    return out


# ---------------------------------------------------------------------------
# Matrix Volterra march S_j = I + sum_k W[j,k] S_k A

@njit
def volterra_march_nb(w, amat):
    npts = w.shape[0]
    n = amat.shape[0]
    eye = np.eye(n, dtype=amat.dtype)
    s = np.zeros((npts, n, n), dtype=amat.dtype)
    s[0] = eye
    for j in range(1, npts):
        acc = np.zeros((n, n), dtype=amat.dtype)
        for k in range(j):
            acc += w[j, k] * s[k]
        rhs = eye + acc @ amat
        m = eye - w[j, j] * amat
        # S_j M = rhs  <=>  M^T S_j^T = rhs^T
        s[j] = np.linalg.solve(m.T.copy(), rhs.T.copy()).T
    return s


def volterra_march_np(w, amat):
    npts = w.shape[0]
    n = amat.shape[0]
    eye = np.eye(n, dtype=amat.dtype)
    s = np.zeros((npts, n, n), dtype=amat.dtype)
    s[0] = eye
    for j in range(1, npts):
        acc = np.tensordot(w[j, :j], s[:j], axes=1)
        rhs = eye + acc @ amat
        m = eye - w[j, j] * amat
        s[j] = np.linalg.solve(m.T, rhs.T).T
    return s


if HAS_NUMBA:
    ml_series = ml_series_nb
    pi_weights = pi_weights_nb
    lag_conv = lag_conv_nb
    trapz_conv = trapz_conv_nb
    volterra_march = volterra_march_nb
else:
    ml_series = ml_series_np
    pi_weights = pi_weights_np
    lag_conv = lag_conv_np
    trapz_conv = trapz_conv_np
    volterra_march = volterra_march_np
