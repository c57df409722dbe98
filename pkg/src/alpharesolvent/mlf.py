"""Two-parameter Mittag-Leffler function for scalar and matrix arguments.

``E_{a,b}(z) = sum_k z^k / Gamma(a k + b)``.

Scalars are evaluated from the power series in double precision while the
cancellation estimate stays below the requested tolerance; beyond that the
same series is summed with mpmath at a working precision large enough to
absorb the cancellation. Matrices go through the eigendecomposition when the
eigenvector basis is well conditioned and through the matrix power series
otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from . import _loops
from .errors import ConditioningError, DomainError, MLOverflowError, ValidationError

DEFAULT_TOL = 1e-12
#: Largest |z| accepted by the scalar evaluator.
MAX_ABS_Z = 50.0
#: Hard cap on the number of series terms.
MAX_TERMS = 20000
#: Spectral route is used when cond(V) is at most this.
SPECTRAL_COND_CAP = 1e6
#: Series stop once a decreasing term falls below tolerance * TAIL_MARGIN, so the
#: truncated tail is negligible next to the requested tolerance.
TAIL_MARGIN = 1e-4


@dataclass(frozen=True)
class MLParams:
    alpha: float
    beta: float = 1.0
    tolerance: float = DEFAULT_TOL

    def __post_init__(self):
        for name in ("alpha", "beta", "tolerance"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValidationError(f"MLParams.{name} must be a positive finite real, got {v!r}")


def gamma(x: float) -> float:
    """Gamma function (Lanczos approximation)."""
    return float(_loops.lanczos_gamma(float(x)))


def rgamma(x: float) -> float:
    """Reciprocal Gamma function, zero at the poles."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        return 0.0
    if x > 171.0:
        return 0.0
    return 1.0 / gamma(x)


@lru_cache(maxsize=256)
def _coefficients(alpha: float, beta: float, nterms: int) -> np.ndarray:
    """Correctly rounded 1/Gamma(alpha k + beta), k < nterms (0 after underflow)."""
    with mpmath.workdps(30):
        a = mpmath.mpf(alpha)
        b = mpmath.mpf(beta)
        return np.array([float(mpmath.rgamma(a * k + b)) for k in range(nterms)])


def _terms_needed(alpha: float, beta: float, zmax: float, tol: float) -> int:
    """Smallest K past the peak with |term_K| < tol at |z| = zmax (plus margin)."""
    if zmax == 0:
        return 2
    lz = math.log(zmax)
    lt = math.log(tol)
    prev = math.inf
    for k in range(MAX_TERMS):
        e = -_loops.lanczos_lgamma(alpha * k + beta) + k * lz
        if k > 0 and e < lt and e < prev:
            return k + 8
        prev = e
    return MAX_TERMS


def _check_domain(p: MLParams, absz: float) -> None:
    if absz > MAX_ABS_Z:
        raise DomainError(
            f"|z| = {absz:.6g} exceeds the validated envelope |z| <= {MAX_ABS_Z:g} "
            f"for E_{{{p.alpha:g},{p.beta:g}}}"
        )


def _mp_series(alpha: float, beta: float, z: complex, tol: float, log10_peak: float) -> complex:
    dps = int(max(30, log10_peak + (-math.log10(tol)) + 15))
    with mpmath.workdps(dps):
        a = mpmath.mpf(alpha)
        b = mpmath.mpf(beta)
        zz = mpmath.mpc(z)
        s = mpmath.mpc(0)
        zk = mpmath.mpc(1)
        prev = mpmath.inf
        mtol = mpmath.mpf(tol) * mpmath.mpf("1e-3")
        for k in range(MAX_TERMS):
            term = zk * mpmath.rgamma(a * k + b)
            s += term
            at = abs(term)
            if k > 0 and at < mtol and at < prev:
                if abs(s) > mpmath.mpf(np.finfo(float).max):
                    raise MLOverflowError(
                        f"|E_{{{alpha:g},{beta:g}}}({z})| exceeds the double range"
                    )
                return complex(s)
            prev = at
            zk *= zz
    raise DomainError(f"series for E_{{{alpha:g},{beta:g}}}({z}) did not converge in {MAX_TERMS} terms")


def ml_values(p: MLParams, z) -> np.ndarray:
    """Vectorized E_{alpha,beta}(z) over an array of complex arguments."""
    z = np.asarray(z, dtype=np.complex128)
    shape = z.shape
    z = z.ravel()
    if z.size == 0:
        return z.reshape(shape)
    if not np.all(np.isfinite(z)):
        raise ValidationError("Mittag-Leffler argument must be finite")
    absz = np.abs(z)
    zmax = float(absz.max())
    _check_domain(p, zmax)
    stop = p.tolerance * TAIL_MARGIN
    nterms = _terms_needed(p.alpha, p.beta, zmax, stop)
    coef = _coefficients(p.alpha, p.beta, nterms)
    vals, err, used = _loops.ml_series(z, coef, stop)
    bad = (err > p.tolerance) | (used < 0) | ~np.isfinite(vals)
    if np.any(bad):
        for i in np.flatnonzero(bad):
            lp = _log10_peak(p, float(absz[i]))
            vals[i] = _mp_series(p.alpha, p.beta, complex(z[i]), p.tolerance, lp)
    return vals.reshape(shape)


def _log10_peak(p: MLParams, absz: float) -> float:
    if absz == 0:
        return 0.0
    k_peak = max(0.0, (absz ** (1.0 / p.alpha) - p.beta) / p.alpha)
    best = -math.inf
    for k in range(max(0, int(k_peak) - 2), int(k_peak) + 3):
        best = max(best, k * math.log(absz) - _loops.lanczos_lgamma(p.alpha * k + p.beta))
    return max(0.0, best / math.log(10.0))


def mittag_leffler(p: MLParams, z: complex) -> complex:
    """E_{alpha,beta}(z) to absolute accuracy ``p.tolerance``.

    Raises
    ------
    DomainError
        For |z| > 50 or when the series does not settle.
    MLOverflowError
        When the magnitude of the series terms exceeds the double range.
    """
    return complex(ml_values(p, np.array([z]))[0])


# ---------------------------------------------------------------------------
# matrix arguments


def _as_matrix(m) -> np.ndarray:
    arr = getattr(m, "entries", m)
    arr = np.asarray(arr)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix entries must be finite")
    return arr


def _eig(m: np.ndarray):
    lam, v = np.linalg.eig(m)
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(v)
    if not np.isfinite(cond):
        cond = np.inf
    return lam, v, float(cond)


def _spectral(p: MLParams, lam, v, scales) -> np.ndarray:
    vals = ml_values(p, scales[:, None] * lam[None, :])  # (m, n)
    vinv = np.linalg.inv(v)
    return np.einsum("ik,sk,kj->sij", v, vals, vinv)


def _series(p: MLParams, m: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """Sum_k c_k (s M)^k for each scale s, with a cancellation estimate."""
    n = m.shape[0]
    smax = float(np.max(np.abs(scales))) if scales.size else 0.0
    norm_m = float(np.linalg.norm(m, 2))
    _check_domain(p, smax * norm_m)
    stop_tol = p.tolerance * TAIL_MARGIN
    nterms = _terms_needed(p.alpha, p.beta, smax * norm_m, stop_tol)
    coef = _coefficients(p.alpha, p.beta, nterms)
    dtype = np.result_type(m, scales, float)
    out = np.zeros((scales.size, n, n), dtype=dtype)
    absacc = np.zeros(scales.size)
    power = np.eye(n, dtype=m.dtype)
    sk = np.ones_like(scales, dtype=dtype)
    prev = np.full(scales.size, np.inf)
    done = np.zeros(scales.size, dtype=bool)
    for k in range(nterms):
        pnorm = np.linalg.norm(power, 2)
        tnorm = np.abs(sk) * coef[k] * pnorm
        live = ~done
        out[live] += (sk[live] * coef[k])[:, None, None] * power
        absacc[live] += tnorm[live] * (k + 1)
        stop = live & (k > 0) & (tnorm < stop_tol) & (tnorm < prev)
        done |= stop
        prev = tnorm
        if done.all() or pnorm == 0.0:
            done[:] = True
            break
        power = power @ m
        sk = sk * scales
    if not done.all():
        raise ConditioningError("matrix Mittag-Leffler series did not reach its stopping rule")
    return out, np.finfo(float).eps * absacc


def ml_matrix_family(p: MLParams, m, scales) -> np.ndarray:
    """E_{alpha,beta}(s M) for every s in ``scales``; shape (len(scales), n, n).

    The real part is returned when M and the scales are real.
    """
    mat = _as_matrix(m)
    scales = np.atleast_1d(np.asarray(scales, dtype=float))
    spectral = getattr(m, "spectral", None)
    if spectral is not None:
        lam, v, cond = spectral
    else:
        lam, v, cond = _eig(mat)
    if cond <= SPECTRAL_COND_CAP:
        out = _spectral(p, lam, v, scales)
    else:
        out, err = _series(p, mat, scales)
        # roundoff check: E_b(M) - I/Gamma(b) - M E_{b+a}(M) should vanish
        shifted, _ = _series(MLParams(p.alpha, p.beta + p.alpha, p.tolerance), mat, scales)
        eye = np.eye(mat.shape[0])
        resid = out - rgamma(p.beta) * eye - scales[:, None, None] * np.einsum("ij,sjk->sik", mat, shifted)
        rnorm = np.max(np.abs(resid)) if resid.size else 0.0
        if max(float(err.max(initial=0.0)), rnorm) > 1e3 * p.tolerance:
            raise ConditioningError(
                f"eigenbasis condition number {cond:.3g} exceeds {SPECTRAL_COND_CAP:g} and the "
                f"series fallback error estimate {max(float(err.max(initial=0.0)), rnorm):.3g} "
                f"fails the {1e3 * p.tolerance:.1g} bound"
            )
    if np.isrealobj(mat):
        out = out.real.copy() if np.iscomplexobj(out) else out
    return out


def ml_matrix(p: MLParams, m) -> np.ndarray:
    """E_{alpha,beta}(M) for a square matrix (or :class:`Generator`) M."""
    return ml_matrix_family(p, m, np.array([1.0]))[0]
