"""Gibbs functionals, total variation and subdomain partitions.

For an approximation ``phi_h`` of a target ``phi`` on a subdomain ``omega``
the Gibbs functional integrates

    g = |grad phi_h| - grad phi_h . grad phi / |grad phi_h|      (0 where grad phi_h = 0)

which in 1D reads ``|D phi_h| - sgn(D phi_h) D phi``. In 1D it is evaluated
exactly: each element is cut at the roots of ``D phi_h`` and on every
monotone piece the integral collapses to endpoint values. In 2D it is
integrated with layer-aware quadrature.

The regularized functional replaces ``|r|`` by ``|r|_eps = sqrt(r^2 + eps^2)``
and ``sgn(r)`` by ``r / |r|_eps``; its derivative with respect to the
coefficients supplies the constraint Jacobian used by the solver.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C

from .quadrature import default_order, element_rule, facets, interval_rule
from .spline_space import DofFunction, SplineSpace

__all__ = [
    "SubdomainPartition",
    "GibbsEvaluation",
    "ConstraintOperator",
    "build_partition",
    "total_variation",
    "target_variation",
    "gibbs_1d",
    "gibbs_nd",
    "gibbs_directional",
    "gibbs_regularized",
    "gibbs_gradient",
    "gibbs_variation_regularized",
    "evaluate",
    "element_gibbs_1d",
    "directional_sup",
    "abs_eps",
    "sgn_eps",
]

# relative size below which a derivative counts as zero (sgn(0) = 0)
ZERO_TOL = 1e-12


def abs_eps(r, eps: float):
    """Regularized absolute value ``sqrt(r^2 + eps^2)``."""
    return np.sqrt(np.asarray(r, dtype=float) ** 2 + eps * eps)


def sgn_eps(r, eps: float):
    """Regularized sign ``r / |r|_eps``."""
    r = np.asarray(r, dtype=float)
    return r / abs_eps(r, eps)


# ---------------------------------------------------------------------------
# partitions


@dataclass
class SubdomainPartition:
    """Disjoint blocks of elements covering the mesh.

    Attributes
    ----------
    blocks : list of ndarray
        Element indices of each subdomain, in mesh order.
    mode : str
        ``"elementwise"`` or ``"grouped"``.
    shift : int
        Size of the first grouped block minus one.
    flagged : bool
        Set for elementwise constraints on smooth spaces, which are in
        general infeasible.
    """

    blocks: list
    mode: str = "elementwise"
    shift: int = 0
    flagged: bool = False

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    @property
    def owner(self) -> np.ndarray:
        n = sum(len(b) for b in self.blocks)
        out = np.empty(n, dtype=int)
        for j, b in enumerate(self.blocks):
            out[b] = j
        return out

    def as_lists(self) -> list[list[int]]:
        return [[int(e) for e in b] for b in self.blocks]


def build_partition(space: SplineSpace, mode: str = "elementwise", shift: int = 0) -> SubdomainPartition:
    """Split the mesh into constraint subdomains.

    ``elementwise`` gives one subdomain per element. ``grouped`` (1D only,
    ``alpha >= 1``) starts with a block of ``shift + 1`` elements and
    continues with blocks of ``alpha + 1`` neighbours, truncating the last.
    """
    alpha, d = space.regularity, space.dim
    if mode == "elementwise":
        flagged = (d == 1 and alpha >= 1) or (d > 1 and alpha >= 0)
        if flagged:
            warnings.warn("elementwise Gibbs constraints on this space are in general infeasible",
                          stacklevel=2)
        return SubdomainPartition([np.array([e]) for e in range(space.n_el)], "elementwise", 0, flagged)
    if mode != "grouped":
        raise ValueError(f"unknown partition mode {mode!r}")
    if alpha <= 0:
        raise ValueError("grouped subdomains need regularity alpha >= 1")
    if d != 1:
        raise ValueError("grouped subdomains are only defined in 1D")
    if not 0 <= shift <= alpha:
        raise ValueError(f"shift must lie in [0, {alpha}], got {shift}")
    n = space.n_el
    starts = [0] + list(range(shift + 1, n, alpha + 1))
    ends = starts[1:] + [n]
    blocks = [np.arange(a, b) for a, b in zip(starts, ends) if b > a]
    return SubdomainPartition(blocks, "grouped", shift, False)


def _as_elements(omega) -> np.ndarray:
    return np.atleast_1d(np.asarray(omega, dtype=int))


# ---------------------------------------------------------------------------
# exact 1D evaluation


def _element_poly(fn: DofFunction, e: int):
    """Chebyshev series of the element polynomial in local ``t in [-1, 1]``."""
    lo, hi = fn.space.element_box(e)[0]
    p = fn.space.degree
    if p == 0:
        t = np.array([0.0])
    else:
        t = -np.cos(np.pi * np.arange(p + 1) / p)
    x = lo + 0.5 * (hi - lo) * (t + 1.0)
    vals = fn.on_element(e, x[:, None])[0]
    coef = C.chebfit(t, vals, p) if p > 0 else vals.copy()
    return coef, lo, hi


def _monotone_pieces(coef, scale):
    """Breakpoints in ``[-1, 1]`` and the sign of the derivative on each piece."""
    dcoef = C.chebder(coef) if coef.size > 1 else np.zeros(1)
    tol = ZERO_TOL * max(scale, 1.0)
    if np.max(np.abs(dcoef)) <= tol:
        return np.array([-1.0, 1.0]), np.zeros(1)
    cuts = [-1.0, 1.0]
    if dcoef.size > 1:
        # trailing near-zero coefficients make the companion matrix ill-posed
        k = dcoef.size
        while k > 1 and abs(dcoef[k - 1]) <= tol:
            k -= 1
        if k > 1:
            for r in C.chebroots(dcoef[:k]):
                if abs(r.imag) < 1e-7 and -1.0 < r.real < 1.0:
                    cuts.append(float(r.real))
    cuts = np.unique(cuts)
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    dv = C.chebval(mids, dcoef)
    signs = np.where(np.abs(dv) <= tol, 0.0, np.sign(dv))
    return cuts, signs


def element_gibbs_1d(fn: DofFunction, target, e: int) -> tuple[float, float]:
    """Exact Gibbs functional and variation of ``fn`` on element ``e`` (1D).

    Returns
    -------
    G : float
        ``int_K |D fn| - sgn(D fn) D target``.
    V : float
        ``int_K |D fn|``.
    """
    coef, lo, hi = _element_poly(fn, e)
    cuts, signs = _monotone_pieces(coef, float(np.max(np.abs(coef))))
    fstar = C.chebval(cuts, coef)
    x = lo + 0.5 * (hi - lo) * (cuts + 1.0)
    fphi = np.asarray(target.value(x[:, None]), dtype=float)
    dstar = np.diff(fstar)
    dphi = np.diff(fphi)
    V = float(np.sum(signs * dstar))
    G = float(np.sum(signs * (dstar - dphi)))
    return G, V


def _interior_jumps(fn: DofFunction, elems) -> float:
    """Sum of |jumps| of ``fn`` between consecutive elements of a 1D block."""
    total = 0.0
    elems = np.sort(elems)
    for a, b in zip(elems[:-1], elems[1:]):
        if b != a + 1:
            continue
        x = fn.space.element_box(b)[0, 0]
        left = fn.on_element(int(a), np.array([[x]]))[0][0]
        right = fn.on_element(int(b), np.array([[x]]))[0][0]
        total += abs(right - left)
    return total


def gibbs_1d(target, fn: DofFunction, omega) -> float:
    """Exact 1D Gibbs functional of ``fn`` with respect to ``target`` on ``omega``.

    Jumps of ``fn`` between elements do not contribute: the integral is taken
    piecewise over the elements of ``omega``.
    """
    if fn.space.dim != 1:
        raise ValueError("gibbs_1d needs a 1D space; use gibbs_nd")
    return float(sum(element_gibbs_1d(fn, target, int(e))[0] for e in _as_elements(omega)))


def total_variation(fn, omega, space: SplineSpace | None = None, q: int | None = None) -> float:
    """Total variation on the union of elements ``omega``.

    ``fn`` is a :class:`DofFunction` (smooth pieces plus jumps between the
    elements of ``omega``) or a target, in which case ``space`` supplies the
    element geometry.
    """
    elems = _as_elements(omega)
    if isinstance(fn, DofFunction):
        space = fn.space
        if space.dim == 1:
            smooth = sum(element_gibbs_1d(fn, _ZERO, int(e))[1] for e in elems)
            return float(smooth + _interior_jumps(fn, elems))
        total = 0.0
        for e in elems:
            rule = element_rule(space, int(e), q)
            g = fn.on_element(int(e), rule.points)[1]
            total += rule.integrate(np.linalg.norm(g, axis=1))
        return float(total + _interior_jumps_nd(fn, elems, q))
    if space is None:
        raise ValueError("a space is needed to locate the elements of a target")
    return target_variation(fn, space, elems, q)


def _interior_jumps_nd(fn, elems, q):
    members = set(int(e) for e in elems)
    if len(members) < 2:
        return 0.0
    total = 0.0
    for fc in facets(fn.space, q):
        if fc.minus in members and fc.plus in members:
            um = fn.on_element(fc.minus, fc.points)[0]
            up = fn.on_element(fc.plus, fc.points)[0]
            total += float(np.dot(fc.weights, np.abs(up - um)))
    return total


class _Zero:
    layer = None

    def value(self, pts):
        return np.zeros(np.asarray(pts).shape[0])


_ZERO = _Zero()


def target_variation(target, space: SplineSpace, omega, q: int | None = None) -> float:
    """Total variation of a (continuous) target on the elements ``omega``."""
    elems = _as_elements(omega)
    layer = getattr(target, "layer", None)
    if space.dim == 1:
        if getattr(target, "monotone_along_normal", False):
            total = 0.0
            for e in elems:
                lo, hi = space.element_box(int(e))[0]
                v = target.value(np.array([[lo], [hi]]))
                total += abs(v[1] - v[0])
            return float(total)
        total = 0.0
        for e in elems:
            lo, hi = space.element_box(int(e))[0]
            bp = np.linspace(lo, hi, 17)
            for a, b in zip(bp[:-1], bp[1:]):
                x, w = interval_rule(a, b, 20, None if layer is None else layer.offset / layer.normal[0],
                                     None if layer is None else layer.width)
                total += float(np.dot(w, np.abs(target.grad(x[:, None])[:, 0])))
        return total
    total = 0.0
    for e in elems:
        rule = element_rule(space, int(e), q, layer)
        total += rule.integrate(np.linalg.norm(target.grad(rule.points), axis=1))
    return float(total)


# ---------------------------------------------------------------------------
# quadrature-based functionals


def _nd_integrand(gs, gphi):
    nrm = np.linalg.norm(gs, axis=1)
    scale = max(float(nrm.max(initial=0.0)), 1.0)
    safe = np.where(nrm > ZERO_TOL * scale, nrm, 1.0)
    g = nrm - np.einsum("qd,qd->q", gs, gphi) / safe
    return np.where(nrm > ZERO_TOL * scale, g, 0.0)


def gibbs_nd(target, fn: DofFunction, omega, q: int | None = None, route: str = "auto") -> float:
    """Gradient-aligned Gibbs functional.

    ``route="auto"`` uses the exact evaluation of :func:`gibbs_1d` in 1D and
    quadrature otherwise; ``route="quadrature"`` forces quadrature in any
    dimension, which is what the 1D/nD consistency check compares against.
    """
    if route not in ("auto", "quadrature"):
        raise ValueError(f"unknown route {route!r}")
    if fn.space.dim == 1 and route == "auto":
        return gibbs_1d(target, fn, omega)
    layer = getattr(target, "layer", None)
    total = 0.0
    for e in _as_elements(omega):
        rule = element_rule(fn.space, int(e), q, layer)
        gs = fn.on_element(int(e), rule.points)[1]
        total += rule.integrate(_nd_integrand(gs, target.grad(rule.points)))
    return float(total)


def gibbs_directional(target, fn: DofFunction, omega, direction, q: int | None = None) -> float:
    """Directional Gibbs functional ``int |e.grad fn| - sgn(e.grad fn) e.grad phi``."""
    e_vec = np.atleast_1d(np.asarray(direction, dtype=float))
    if e_vec.size != fn.space.dim:
        raise ValueError("direction has the wrong dimension")
    if abs(np.linalg.norm(e_vec) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    layer = getattr(target, "layer", None)
    total = 0.0
    for e in _as_elements(omega):
        rule = element_rule(fn.space, int(e), q, layer)
        a = fn.on_element(int(e), rule.points)[1] @ e_vec
        b = target.grad(rule.points) @ e_vec
        scale = max(float(np.abs(a).max(initial=0.0)), 1.0)
        s = np.where(np.abs(a) > ZERO_TOL * scale, np.sign(a), 0.0)
        total += rule.integrate(np.abs(a) - s * b)
    return float(total)


def directional_sup(grad_star, grad_phi) -> float:
    """Supremum over unit directions of the pointwise directional integrand.

    With ``grad_err = grad_phi - grad_star``: if ``grad_star . grad_err >= 0``
    the supremum is ``|b . grad_err|`` for ``b`` a unit vector orthogonal to
    ``grad_star``, otherwise it is ``|grad_err|``. In 2D ``b`` is unique up
    to sign.
    """
    a = np.asarray(grad_star, dtype=float)
    err = np.asarray(grad_phi, dtype=float) - a
    if a @ err < 0:
        return float(np.linalg.norm(err))
    if a.size == 1:
        return 0.0
    if a.size != 2:
        raise NotImplementedError("closed form implemented for d <= 2")
    na = np.linalg.norm(a)
    if na == 0:
        return float(np.linalg.norm(err))
    b = np.array([-a[1], a[0]]) / na
    return float(abs(b @ err))


class ConstraintOperator:
    """Regularized Gibbs functionals of all subdomains and their Jacobian.

    Quadrature data of every element is stacked once so that evaluating all
    ``J`` constraints for a coefficient vector is a handful of array ops.
    """

    def __init__(self, space: SplineSpace, target, partition: SubdomainPartition, q: int | None = None):
        self.space = space
        self.target = target
        self.partition = partition
        q = default_order(space.degree) if q is None else q
        layer = getattr(target, "layer", None)
        W, S, GP, B, D = [], [], [], [], []
        for j, block in enumerate(partition):
            for e in block:
                e = int(e)
                rule = element_rule(space, e, q, layer)
                _, grad = space.element_basis(e, rule.points)
                nq = len(rule)
                W.append(rule.weights)
                S.append(np.full(nq, j))
                GP.append(target.grad(rule.points).reshape(nq, space.dim))
                B.append(grad)
                D.append(np.broadcast_to(space.element_dofs(e), (nq, space.n_loc)))
        self.w = np.concatenate(W)
        self.sub = np.concatenate(S)
        self.gphi = np.concatenate(GP)
        self.B = np.concatenate(B)
        self.dofs = np.concatenate(D)
        self.J = len(partition)

    def grads(self, c) -> np.ndarray:
        return np.einsum("qad,qa->qd", self.B, np.asarray(c)[self.dofs])

    def values(self, c, eps: float) -> np.ndarray:
        """Regularized Gibbs functional of each subdomain."""
        gs = self.grads(c)
        nrm = np.sqrt(np.einsum("qd,qd->q", gs, gs) + eps * eps)
        g = nrm - np.einsum("qd,qd->q", gs, self.gphi) / nrm
        return np.bincount(self.sub, weights=self.w * g, minlength=self.J)

    def jacobian(self, c, eps: float) -> np.ndarray:
        """Matrix ``G`` with ``G[j, A]`` the derivative of subdomain ``j`` in direction ``N_A``."""
        return self.values_and_jacobian(c, eps)[1]

    def values_and_jacobian(self, c, eps: float):
        gs = self.grads(c)
        nrm = np.sqrt(np.einsum("qd,qd->q", gs, gs) + eps * eps)
        dot = np.einsum("qd,qd->q", gs, self.gphi)
        vals = np.bincount(self.sub, weights=self.w * (nrm - dot / nrm), minlength=self.J)
        v = (gs - self.gphi) / nrm[:, None] + (dot / nrm ** 3)[:, None] * gs
        contrib = self.w[:, None] * np.einsum("qad,qd->qa", self.B, v)
        G = np.zeros((self.J, self.space.n_dof))
        np.add.at(G, (np.broadcast_to(self.sub[:, None], self.dofs.shape), self.dofs), contrib)
        return vals, G

    def variation_values(self, c, eps: float, tv_target) -> np.ndarray:
        """Convex variant ``int |grad fn|_eps - V(phi)`` per subdomain."""
        gs = self.grads(c)
        nrm = np.sqrt(np.einsum("qd,qd->q", gs, gs) + eps * eps)
        return np.bincount(self.sub, weights=self.w * nrm, minlength=self.J) - tv_target


def _single(space, target, omega, q):
    part = SubdomainPartition([_as_elements(omega)], "custom")
    return ConstraintOperator(space, target, part, q)


def gibbs_regularized(target, fn: DofFunction, omega, eps: float, q: int | None = None) -> float:
    """Regularized Gibbs functional ``int |grad fn|_eps - sgn_eps(grad fn) . grad phi``."""
    if eps <= 0:
        raise ValueError("regularization parameter must be positive")
    return float(_single(fn.space, target, omega, q).values(fn.coeffs, eps)[0])


def gibbs_gradient(target, fn: DofFunction, omega, eps: float, w=None, q: int | None = None):
    """Gateaux derivative of the regularized Gibbs functional.

    Returns the full row over all dofs, or its action on ``w`` (a
    :class:`DofFunction` or coefficient vector) when given.
    """
    if eps <= 0:
        raise ValueError("regularization parameter must be positive")
    row = _single(fn.space, target, omega, q).jacobian(fn.coeffs, eps)[0]
    if w is None:
        return row
    wc = w.coeffs if isinstance(w, DofFunction) else np.asarray(w, dtype=float)
    return float(row @ wc)


def gibbs_variation_regularized(target, fn: DofFunction, omega, eps: float, q: int | None = None) -> float:
    """Convex surrogate ``int |grad fn|_eps - V(phi)`` on ``omega``."""
    op = _single(fn.space, target, omega, q)
    tv = target_variation(target, fn.space, omega, q)
    return float(op.variation_values(fn.coeffs, eps, np.array([tv]))[0])


# ---------------------------------------------------------------------------
# reporting


@dataclass
class GibbsEvaluation:
    """Per-subdomain Gibbs functional ``G``, variation gap ``Vgap`` and variations.

    ``Vgap = TV - TV_target``; ``eps_reg`` is 0 for exact evaluations.
    """

    G: np.ndarray
    Vgap: np.ndarray
    TV: np.ndarray
    TV_target: np.ndarray
    eps_reg: float = 0.0
    G_eps: np.ndarray | None = field(default=None)

    @property
    def max_G(self) -> float:
        return float(np.max(self.G)) if self.G.size else 0.0


def evaluate(fn: DofFunction, target, partition: SubdomainPartition, eps_reg: float | None = None,
             q: int | None = None) -> GibbsEvaluation:
    """Exact (and optionally regularized) functionals on every subdomain."""
    space = fn.space
    G, TV, TVt = [], [], []
    for block in partition:
        if space.dim == 1:
            G.append(gibbs_1d(target, fn, block))
        else:
            G.append(gibbs_nd(target, fn, block, q))
        TV.append(total_variation(fn, block, q=q))
        TVt.append(target_variation(target, space, block, q))
    G, TV, TVt = np.array(G), np.array(TV), np.array(TVt)
    G_eps = None
    if eps_reg:
        G_eps = ConstraintOperator(space, target, partition, q).values(fn.coeffs, eps_reg)
    return GibbsEvaluation(G, TV - TVt, TV, TVt, float(eps_reg or 0.0), G_eps)
