"""Target functions to be approximated.

A target exposes ``value(pts)`` and ``grad(pts)`` on point arrays of shape
``(npts, d)``. Targets with a straight internal layer also expose a ``layer``
descriptor so quadrature can be graded toward it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Layer", "TanhLayer", "Polynomial1D", "Constant", "CallableTarget", "tanh_1d", "tanh_2d"]


@dataclass(frozen=True)
class Layer:
    """Straight layer ``normal . x = offset`` of characteristic ``width``."""

    normal: np.ndarray
    offset: float
    width: float


class TanhLayer:
    r"""Target ``tanh((v . x - c) / eps)``.

    Parameters
    ----------
    v : array_like
        Direction vector (need not be unit length).
    c : float
        Offset.
    eps : float
        Layer parameter.
    """

    monotone_along_normal = True

    def __init__(self, v, c: float, eps: float):
        if eps <= 0:
            raise ValueError(f"eps must be positive, got {eps}")
        self.v = np.atleast_1d(np.asarray(v, dtype=float))
        self.c = float(c)
        self.eps = float(eps)
        nv = np.linalg.norm(self.v)
        if nv == 0:
            raise ValueError("direction vector must be nonzero")
        self.layer = Layer(self.v / nv, self.c / nv, self.eps / nv)

    @property
    def dim(self) -> int:
        return self.v.size

    def __repr__(self):
        return f"TanhLayer(v={self.v.tolist()}, c={self.c}, eps={self.eps})"

    def _arg(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        return (pts @ self.v - self.c) / self.eps

    def value(self, pts) -> np.ndarray:
        return np.tanh(self._arg(pts))

    def grad(self, pts) -> np.ndarray:
        t = np.tanh(self._arg(pts))
        return ((1.0 - t * t) / self.eps)[:, None] * self.v[None, :]

    def __call__(self, pts):
        return self.value(pts)

    def total_variation_interval(self, lo: float, hi: float) -> float:
        """Variation on ``[lo, hi]`` (1D only): the target is monotone."""
        v = self.value(np.array([[lo], [hi]]))
        return float(abs(v[1] - v[0]))


def tanh_1d(a: float = 0.5, eps: float = 1e-4) -> TanhLayer:
    """``tanh((x - a) / eps)``."""
    return TanhLayer([1.0], a, eps)


def tanh_2d(eps: float = 1e-4) -> TanhLayer:
    """``tanh((y - x) / eps)``."""
    return TanhLayer([-1.0, 1.0], 0.0, eps)


class Polynomial1D:
    """Polynomial in one variable, coefficients in increasing degree."""

    layer = None
    dim = 1

    def __init__(self, coeffs):
        self.poly = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
        self.dpoly = self.poly.deriv()

    def value(self, pts):
        return self.poly(np.asarray(pts, dtype=float).reshape(-1))

    def grad(self, pts):
        return self.dpoly(np.asarray(pts, dtype=float).reshape(-1))[:, None]

    def __call__(self, pts):
        return self.value(pts)


class Constant:
    layer = None

    def __init__(self, c: float, dim: int = 1):
        self.c = float(c)
        self.dim = dim

    def value(self, pts):
        return np.full(np.asarray(pts).reshape(-1, self.dim).shape[0], self.c)

    def grad(self, pts):
        return np.zeros(np.asarray(pts).reshape(-1, self.dim).shape)

    def __call__(self, pts):
        return self.value(pts)


class CallableTarget:
    """Wrap plain callables ``f(pts)`` and ``df(pts)``."""

    def __init__(self, f, df, dim: int = 1, layer: Layer | None = None):
        self.f, self.df, self.dim, self.layer = f, df, dim, layer

    def value(self, pts):
        return np.asarray(self.f(np.asarray(pts, dtype=float).reshape(-1, self.dim)), dtype=float)

    def grad(self, pts):
        g = np.asarray(self.df(np.asarray(pts, dtype=float).reshape(-1, self.dim)), dtype=float)
        return g.reshape(-1, self.dim)

    def __call__(self, pts):
        return self.value(pts)
