"""Uniform open B-spline spaces of arbitrary degree and interior regularity.

Spaces live on axis-aligned boxes in one or two dimensions. Knots are laid out
directly in physical coordinates, which is equivalent to an affine geometric
map with a constant diagonal Jacobian.

Element-local evaluation is the workhorse: every element knows its knot span,
so the polynomial piece of an element can be evaluated anywhere (including on
its boundary, which is how one-sided traces are obtained).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

__all__ = [
    "UnivariateSpace",
    "SplineSpace",
    "DofFunction",
    "open_uniform_knots",
    "make_space",
    "eval_basis",
    "eval_function",
    "eval_gradient",
    "basis_ders",
]


def open_uniform_knots(degree: int, regularity: int, n_el: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Open knot vector with uniform spacing and interior multiplicity ``p - alpha``."""
    _check_degree(degree, regularity, n_el)
    mult = degree - regularity
    interior = np.linspace(lo, hi, n_el + 1)[1:-1]
    return np.concatenate([
        np.full(degree + 1, float(lo)),
        np.repeat(interior, mult),
        np.full(degree + 1, float(hi)),
    ])


def _check_degree(degree: int, regularity: int, n_el: int) -> None:
    if degree < 0:
        raise ValueError(f"degree must be non-negative, got {degree}")
    if not -1 <= regularity <= degree - 1:
        raise ValueError(
            f"regularity must satisfy -1 <= alpha <= p-1, got alpha={regularity} for p={degree}")
    if n_el < 1:
        raise ValueError(f"need at least one element, got {n_el}")


def basis_ders(knots: np.ndarray, degree: int, span: int, x, nder: int = 1) -> np.ndarray:
    """Non-vanishing basis functions of a knot span and their derivatives.

    Cox-de Boor recursion in the triangular-table form (Piegl & Tiller,
    algorithms A2.2/A2.3), vectorized over evaluation points. The span is
    fixed by the caller, so points on the span boundary return the one-sided
    polynomial piece of that span.

    Parameters
    ----------
    knots : ndarray
        Knot vector.
    degree : int
        Polynomial degree ``p``.
    span : int
        Index ``i`` with ``knots[i] < knots[i+1]``.
    x : array_like
        Evaluation points.
    nder : int
        Highest derivative order.

    Returns
    -------
    ndarray of shape ``(nder + 1, len(x), p + 1)``
        ``out[k, q, r]`` is the ``k``-th derivative of ``N_{span-p+r, p}`` at ``x[q]``.
    """
    p = degree
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = x.size
    ndu = np.zeros((p + 1, p + 1, m))
    ndu[0, 0] = 1.0
    left = np.zeros((p + 1, m))
    right = np.zeros((p + 1, m))
    for j in range(1, p + 1):
        left[j] = x - knots[span + 1 - j]
        right[j] = knots[span + j] - x
        saved = np.zeros(m)
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    out = np.zeros((nder + 1, m, p + 1))
    out[0] = ndu[:, p].T
    top = min(nder, p)
    a = np.zeros((2, p + 1, m))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, top + 1):
            d = np.zeros(m)
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d = d + a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d = d + a[s2, k] * ndu[r, pk]
            out[k, :, r] = d
            s1, s2 = s2, s1
    fac = p
    for k in range(1, top + 1):
        out[k] *= fac
        fac *= p - k
    return out


@dataclass(frozen=True, eq=False)
class UnivariateSpace:
    """Univariate open uniform B-spline space on ``[lo, hi]``."""

    degree: int
    regularity: int
    n_el: int
    lo: float = 0.0
    hi: float = 1.0
    knots: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")
        knots = open_uniform_knots(self.degree, self.regularity, self.n_el, self.lo, self.hi)
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)

    @property
    def mult(self) -> int:
        return self.degree - self.regularity

    @property
    def n(self) -> int:
        return self.n_el * self.mult + self.regularity + 1

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / self.n_el

    @cached_property
    def breakpoints(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_el + 1)

    @cached_property
    def regularities(self) -> np.ndarray:
        """Regularity at each unique knot; -1 at the two ends."""
        alpha = np.full(self.n_el + 1, self.regularity)
        alpha[0] = alpha[-1] = -1
        return alpha

    def span(self, e: int) -> int:
        return self.degree + e * self.mult

    def element_dofs(self, e: int) -> np.ndarray:
        return e * self.mult + np.arange(self.degree + 1)

    def element_bounds(self, e: int) -> tuple[float, float]:
        z = self.breakpoints
        return float(z[e]), float(z[e + 1])

    def basis(self, e: int, x, nder: int = 1) -> np.ndarray:
        """Local basis of element ``e`` at ``x``; shape ``(nder+1, len(x), p+1)``."""
        return basis_ders(self.knots, self.degree, self.span(e), x, nder)

    def locate(self, x, side: str | None = None) -> np.ndarray:
        """Element index of each point.

        At a breakpoint the right element is returned unless ``side='left'``;
        the right endpoint of the interval always maps to the last element.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        tol = 1e-12 * (self.hi - self.lo)
        if np.any(x < self.lo - tol) or np.any(x > self.hi + tol):
            raise ValueError(f"point outside [{self.lo}, {self.hi}]")
        t = (x - self.lo) / self.h
        e = np.floor(t + 1e-12).astype(int)
        if side == "left":
            on_knot = np.abs(t - np.round(t)) < 1e-12
            e = np.where(on_knot, np.round(t).astype(int) - 1, e)
        return np.clip(e, 0, self.n_el - 1)

    @cached_property
    def greville(self) -> np.ndarray:
        """Greville abscissae; for p=0 the element midpoints."""
        p, k = self.degree, self.knots
        if p == 0:
            return 0.5 * (k[:-1] + k[1:])
        return np.array([k[i + 1:i + p + 1].mean() for i in range(self.n)])


class SplineSpace:
    """Tensor-product spline space in one or two dimensions.

    Element ``e`` in 2D is ``e1 + n_el1 * e2`` and dof ``(i1, i2)`` is
    ``i1 + n1 * i2``: direction 1 runs fastest.
    """

    def __init__(self, factors: Sequence[UnivariateSpace]):
        if len(factors) not in (1, 2):
            raise ValueError("only 1D and 2D spaces are supported")
        ps = {f.degree for f in factors}
        alphas = {f.regularity for f in factors}
        if len(ps) != 1 or len(alphas) != 1:
            raise ValueError("all directions must share degree and regularity")
        self.factors = tuple(factors)

    def __repr__(self):
        shape = "x".join(str(f.n_el) for f in self.factors)
        return f"SplineSpace(d={self.dim}, p={self.degree}, alpha={self.regularity}, n_el={shape})"

    @property
    def dim(self) -> int:
        return len(self.factors)

    @property
    def degree(self) -> int:
        return self.factors[0].degree

    @property
    def regularity(self) -> int:
        return self.factors[0].regularity

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(f.n for f in self.factors)

    @property
    def el_shape(self) -> tuple[int, ...]:
        return tuple(f.n_el for f in self.factors)

    @property
    def n_dof(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_el(self) -> int:
        return int(np.prod(self.el_shape))

    @property
    def h(self) -> float:
        """Largest element edge length."""
        return max(f.h for f in self.factors)

    @property
    def domain(self) -> tuple[tuple[float, float], ...]:
        return tuple((f.lo, f.hi) for f in self.factors)

    @property
    def measure(self) -> float:
        return float(np.prod([f.hi - f.lo for f in self.factors]))

    @property
    def n_loc(self) -> int:
        return (self.degree + 1) ** self.dim

    def element_index(self, e: int) -> tuple[int, ...]:
        if self.dim == 1:
            return (e,)
        n1 = self.factors[0].n_el
        return (e % n1, e // n1)

    def element_number(self, idx: Sequence[int]) -> int:
        if self.dim == 1:
            return int(idx[0])
        return int(idx[0] + self.factors[0].n_el * idx[1])

    def element_box(self, e: int) -> np.ndarray:
        """Element bounds as an array of shape ``(d, 2)``."""
        idx = self.element_index(e)
        return np.array([f.element_bounds(i) for f, i in zip(self.factors, idx)])

    def element_measure(self, e: int) -> float:
        box = self.element_box(e)
        return float(np.prod(box[:, 1] - box[:, 0]))

    def element_dofs(self, e: int) -> np.ndarray:
        idx = self.element_index(e)
        if self.dim == 1:
            return self.factors[0].element_dofs(idx[0])
        d1 = self.factors[0].element_dofs(idx[0])
        d2 = self.factors[1].element_dofs(idx[1])
        return (d1[None, :] + self.factors[0].n * d2[:, None]).ravel()

    def element_basis(self, e: int, pts) -> tuple[np.ndarray, np.ndarray]:
        """Values ``(npts, nloc)`` and gradients ``(npts, nloc, d)`` of the local basis."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if pts.shape[1] != self.dim:
            pts = pts.reshape(-1, self.dim)
        idx = self.element_index(e)
        if self.dim == 1:
            b = self.factors[0].basis(idx[0], pts[:, 0], 1)
            return b[0], b[1][:, :, None]
        bx = self.factors[0].basis(idx[0], pts[:, 0], 1)
        by = self.factors[1].basis(idx[1], pts[:, 1], 1)
        npts, q = pts.shape[0], self.degree + 1
        val = (bx[0][:, None, :] * by[0][:, :, None]).reshape(npts, q * q)
        gx = (bx[1][:, None, :] * by[0][:, :, None]).reshape(npts, q * q)
        gy = (bx[0][:, None, :] * by[1][:, :, None]).reshape(npts, q * q)
        return val, np.stack([gx, gy], axis=-1)

    def locate(self, pts, side: str | None = None) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float)).reshape(-1, self.dim)
        idx = [f.locate(pts[:, k], side) for k, f in enumerate(self.factors)]
        if self.dim == 1:
            return idx[0]
        return idx[0] + self.factors[0].n_el * idx[1]

    @cached_property
    def greville(self) -> np.ndarray:
        """Greville points of every dof, shape ``(n_dof, d)``."""
        g = [f.greville for f in self.factors]
        if self.dim == 1:
            return g[0][:, None]
        gx, gy = np.meshgrid(g[0], g[1], indexing="xy")
        return np.stack([gx.ravel(), gy.ravel()], axis=-1)

    @cached_property
    def boundary_dofs(self) -> np.ndarray:
        """Dofs whose basis functions have a nonzero trace on the domain boundary."""
        if self.dim == 1:
            return np.array([0, self.factors[0].n - 1])
        n1, n2 = self.shape
        i1, i2 = np.meshgrid(np.arange(n1), np.arange(n2), indexing="xy")
        mask = (i1 == 0) | (i1 == n1 - 1) | (i2 == 0) | (i2 == n2 - 1)
        return np.flatnonzero(mask.ravel())

    def element_sample_points(self, e: int, n: int) -> np.ndarray:
        """Uniform ``n`` (per direction) sample points on the closed element."""
        box = self.element_box(e)
        axes = [np.linspace(b[0], b[1], n) for b in box]
        if self.dim == 1:
            return axes[0][:, None]
        X, Y = np.meshgrid(axes[0], axes[1], indexing="xy")
        return np.stack([X.ravel(), Y.ravel()], axis=-1)


def make_space(degree: int, regularity: int, n_el, domain=None) -> SplineSpace:
    """Build a uniform open B-spline space.

    Parameters
    ----------
    degree, regularity : int
        Polynomial degree ``p`` and interior regularity ``alpha``.
    n_el : int or sequence of int
        Elements per direction; a sequence of length two gives a 2D space.
    domain : sequence, optional
        ``(lo, hi)`` in 1D or ``((lo, hi), (lo, hi))`` in 2D. Defaults to the
        unit interval or the square ``(-1, 1)^2``.
    """
    if np.ndim(n_el) == 0:
        n_el = (int(n_el),)
    n_el = tuple(int(n) for n in n_el)
    d = len(n_el)
    if domain is None:
        domain = ((0.0, 1.0),) if d == 1 else ((-1.0, 1.0),) * d
    elif np.ndim(domain) == 1:
        domain = (tuple(domain),) * d
    if len(domain) != d:
        raise ValueError("domain and n_el disagree on the dimension")
    for n in n_el:
        _check_degree(degree, regularity, n)
    return SplineSpace([UnivariateSpace(degree, regularity, n, float(lo), float(hi))
                        for n, (lo, hi) in zip(n_el, domain)])


class DofFunction:
    """A member of a spline space: the space plus a coefficient vector."""

    def __init__(self, space: SplineSpace, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (space.n_dof,):
            raise ValueError(f"expected {space.n_dof} coefficients, got shape {coeffs.shape}")
        self.space = space
        self.coeffs = coeffs

    def __repr__(self):
        return f"DofFunction({self.space!r})"

    def on_element(self, e: int, pts) -> tuple[np.ndarray, np.ndarray]:
        """Value ``(npts,)`` and gradient ``(npts, d)`` of the element-``e`` polynomial."""
        val, grad = self.space.element_basis(e, pts)
        c = self.coeffs[self.space.element_dofs(e)]
        return val @ c, np.einsum("qad,a->qd", grad, c)

    def _grouped(self, pts, side):
        pts = np.atleast_2d(np.asarray(pts, dtype=float)).reshape(-1, self.space.dim)
        elems = self.space.locate(pts, side)
        return pts, elems

    def value(self, pts, side: str | None = None) -> np.ndarray:
        pts, elems = self._grouped(pts, side)
        out = np.empty(len(pts))
        for e in np.unique(elems):
            sel = elems == e
            out[sel] = self.on_element(int(e), pts[sel])[0]
        return out

    def gradient(self, pts, side: str | None = None) -> np.ndarray:
        pts, elems = self._grouped(pts, side)
        out = np.empty((len(pts), self.space.dim))
        for e in np.unique(elems):
            sel = elems == e
            out[sel] = self.on_element(int(e), pts[sel])[1]
        return out

    def __call__(self, pts, side: str | None = None) -> np.ndarray:
        return self.value(pts, side)

    # target interface, so that a space member can itself be approximated
    layer = None

    def grad(self, pts) -> np.ndarray:
        return self.gradient(pts)


def eval_basis(space: SplineSpace, point, r: int = 0, side: str | None = None) -> list:
    """Nonzero basis functions at a single point as ``(dof, value)`` pairs.

    For ``r=1`` the value is the gradient (a float in 1D, a length-d array in 2D).
    """
    if r not in (0, 1):
        raise ValueError("only derivative orders 0 and 1 are supported")
    pt = np.asarray(point, dtype=float).reshape(1, space.dim)
    e = int(space.locate(pt, side)[0])
    val, grad = space.element_basis(e, pt)
    dofs = space.element_dofs(e)
    if r == 0:
        return [(int(a), float(v)) for a, v in zip(dofs, val[0])]
    if space.dim == 1:
        return [(int(a), float(g[0])) for a, g in zip(dofs, grad[0])]
    return [(int(a), g.copy()) for a, g in zip(dofs, grad[0])]


def eval_function(fn: DofFunction, point, side: str | None = None) -> float:
    return float(fn.value(point, side)[0])


def eval_gradient(fn: DofFunction, point, side: str | None = None) -> np.ndarray:
    return fn.gradient(point, side)[0]
