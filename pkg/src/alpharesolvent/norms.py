"""Vector norms on the finite-dimensional state space and their duals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

EUCLIDEAN = "euclidean"
L1 = "l1"
LINF = "linf"

_ORD = {EUCLIDEAN: 2, L1: 1, LINF: np.inf}
_DUAL = {EUCLIDEAN: EUCLIDEAN, L1: LINF, LINF: L1}


@dataclass(frozen=True)
class NormSpec:
    """One of the norms ``euclidean``, ``l1`` or ``linf`` on C^m or R^m."""

    tag: str = EUCLIDEAN
    dim: int | None = None

    def __post_init__(self):
        if self.tag not in _ORD:
            raise ValidationError(f"unknown norm {self.tag!r}; expected one of {sorted(_ORD)}")
        if self.dim is not None and int(self.dim) < 1:
            raise ValidationError("norm dimension must be >= 1")

    @property
    def ord(self):
        return _ORD[self.tag]

    @property
    def dual(self) -> "NormSpec":
        return NormSpec(_DUAL[self.tag], self.dim)

    def __call__(self, x, axis: int = -1) -> np.ndarray:
        """Norm along ``axis``; a 1-d vector gives a scalar."""
        x = np.asarray(x)
        if x.ndim == 0:
            return np.abs(x)
        return np.linalg.norm(x, ord=self.ord, axis=axis)

    def op_norm(self, m) -> float:
        """Induced operator norm of a matrix."""
        m = np.atleast_2d(np.asarray(m))
        return float(np.linalg.norm(m, ord=self.ord))

    def op_norms(self, mats) -> np.ndarray:
        """Induced norms of a stack of matrices (..., n, k)."""
        mats = np.asarray(mats)
        if self.tag == EUCLIDEAN:
            return np.linalg.norm(mats, ord=2, axis=(-2, -1))
        if self.tag == L1:
            return np.abs(mats).sum(axis=-2).max(axis=-1)
        return np.abs(mats).sum(axis=-1).max(axis=-1)

    def pointwise(self, values) -> np.ndarray:
        """Norm of every sample of a (N+1,), (N+1, m) or (N+1, n, k) array."""
        v = np.asarray(values)
        if v.ndim == 1:
            return np.abs(v)
        if v.ndim == 2:
            return self(v, axis=1)
        return self.op_norms(v)


def as_norm(norm) -> NormSpec:
    if isinstance(norm, NormSpec):
        return norm
    if norm is None:
        return NormSpec()
    return NormSpec(str(norm))
