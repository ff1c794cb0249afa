"""Unconstrained best approximations in the L2, H0^1 and interior-penalty norms.

All three share the same pipeline: assemble a dense Gram matrix ``M`` and a
load vector ``b`` over every dof, fix the boundary dofs with a lift, and
solve the reduced system on the free dofs by Cholesky. The constrained solver
reuses the same :class:`GramSystem`.

The IP inner product uses only interior facets. With the lift in place its
bilinear form is

    a(u, w) = sum_K (grad u, grad w)_K - <{grad u}, [w]> - <[u], {grad w}> + eta <[u], [w]>

and the load is ``a(phi, w)``. For a continuous target ``[phi] = 0`` and
``{grad phi} = grad phi``; piecewise targets (anything with an
``on_element`` method, such as a :class:`DofFunction`) contribute their
one-sided facet traces, so members of the space are reproduced exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .quadrature import default_order, element_rule, facets
from .spline_space import DofFunction, SplineSpace

__all__ = [
    "InnerProduct",
    "ProjectionProblem",
    "GramSystem",
    "penalty_default",
    "assemble",
    "boundary_lift",
    "project",
    "project_l2",
    "project_h01",
    "project_ip",
    "ip_norm",
    "ip_norm_squared",
]

KINDS = ("L2", "H01", "IP")


def penalty_default(p: int, h: float, d: int = 1) -> float:
    """Default interior-penalty parameter for degree ``p`` and mesh size ``h``."""
    if h <= 0:
        raise ValueError(f"mesh size must be positive, got {h}")
    if d == 1:
        return 6.0 * (p + 1) ** 2 / h
    return 2.0 * (2 * p + 1) * (2 * p + 2) / h


@dataclass
class InnerProduct:
    kind: str = "L2"
    penalty: float | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in KINDS:
            raise ValueError(f"unknown inner product {self.kind!r}; expected one of {KINDS}")
        self.kind = kind
        if self.penalty is not None and self.penalty <= 0:
            raise ValueError("penalty must be positive")


@dataclass
class ProjectionProblem:
    """Space, target and inner product of a best-approximation problem.

    The target needs ``value(pts)`` and ``grad(pts)``; an optional ``layer``
    attribute switches on graded quadrature.
    """

    space: SplineSpace
    target: object
    inner: InnerProduct = field(default_factory=InnerProduct)
    quad_order: int | None = None

    def __post_init__(self):
        if isinstance(self.inner, str):
            self.inner = InnerProduct(self.inner)
        alpha = self.space.regularity
        if self.inner.kind == "H01" and alpha < 0:
            raise ValueError("the H0^1 projection needs a continuous space (alpha >= 0); "
                             "use the IP inner product for alpha = -1")
        if self.inner.kind == "IP" and alpha != -1:
            raise ValueError("the interior-penalty projection needs a discontinuous space (alpha = -1)")

    @property
    def q(self) -> int:
        return default_order(self.space.degree) if self.quad_order is None else self.quad_order

    @property
    def eta(self) -> float | None:
        if self.inner.kind != "IP":
            return None
        if self.inner.penalty is not None:
            return self.inner.penalty
        return penalty_default(self.space.degree, self.space.h, self.space.dim)

    @property
    def layer(self):
        return getattr(self.target, "layer", None)


def boundary_lift(space: SplineSpace, target) -> tuple[np.ndarray, np.ndarray]:
    """Boundary dofs and their fixed values.

    Each boundary dof takes the target value at its Greville point. Open knot
    vectors make this exact interpolation at the interval ends (and at the
    nodes of linear spaces); for higher degrees along 2D edges it is the
    variation-diminishing Schoenberg approximation, which cannot oscillate.
    """
    dofs = space.boundary_dofs
    pts = space.greville[dofs]
    if not hasattr(target, "on_element"):
        return dofs, np.asarray(target.value(pts), dtype=float)
    # piecewise targets: take the trace from an element the dof lives on
    owner = {}
    for e in range(space.n_el):
        for a in space.element_dofs(e):
            owner.setdefault(int(a), e)
    vals = [target.on_element(owner[int(a)], pt[None, :])[0][0] for a, pt in zip(dofs, pts)]
    return dofs, np.asarray(vals, dtype=float)


class GramSystem:
    """Dense Gram matrix and load vector with a boundary lift.

    Attributes
    ----------
    M, b : ndarray
        Gram matrix and load vector over all dofs.
    fixed, free : ndarray
        Dof indices held by the lift and left to the solve.
    lift : ndarray
        Full coefficient vector that is zero on free dofs.
    """

    def __init__(self, M, b, fixed, fixed_values, kind: str = "L2"):
        n = M.shape[0]
        self.M = M
        self.b = b
        self.kind = kind
        self.fixed = np.asarray(fixed, dtype=int)
        self.free = np.setdiff1d(np.arange(n), self.fixed)
        self.lift = np.zeros(n)
        self.lift[self.fixed] = fixed_values
        self.M_ff = M[np.ix_(self.free, self.free)]
        self.b_f = b[self.free] - M[np.ix_(self.free, self.fixed)] @ self.lift[self.fixed]
        self._chol = None

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def chol(self):
        if self._chol is None:
            try:
                self._chol = scipy.linalg.cho_factor(self.M_ff, lower=True)
            except np.linalg.LinAlgError as exc:
                hint = " (increase the penalty parameter eta)" if self.kind == "IP" else ""
                raise np.linalg.LinAlgError(f"Gram matrix is not positive definite{hint}") from exc
        return self._chol

    def full(self, c_free) -> np.ndarray:
        c = self.lift.copy()
        c[self.free] = c_free
        return c

    def solve(self, extra=None) -> np.ndarray:
        """Full coefficients of the minimizer of ``J(c) - extra . c``."""
        rhs = self.b_f if extra is None else self.b_f + np.asarray(extra)[self.free]
        return self.full(scipy.linalg.cho_solve(self.chol, rhs))

    def objective(self, c) -> float:
        """Reduced objective ``0.5 c.M.c - b.c``; differs from half the squared error by a constant."""
        c = np.asarray(c, dtype=float)
        return float(0.5 * c @ self.M @ c - self.b @ c)

    def gradient(self, c) -> np.ndarray:
        """Residual ``M c - b`` over all dofs (the free part is the stationarity residual)."""
        return self.M @ np.asarray(c, dtype=float) - self.b


def _scatter(A, dofs, local):
    A[np.ix_(dofs, dofs)] += local


def assemble(problem: ProjectionProblem) -> GramSystem:
    """Assemble ``M`` and ``b`` for the problem's inner product and apply the lift."""
    space, target, kind = problem.space, problem.target, problem.inner.kind
    n, q, layer = space.n_dof, problem.q, problem.layer
    M = np.zeros((n, n))
    b = np.zeros(n)
    for e in range(space.n_el):
        dofs = space.element_dofs(e)
        rule = element_rule(space, e, q)
        val, grad = space.element_basis(e, rule.points)
        lrule = element_rule(space, e, q, layer)
        lval, lgrad = space.element_basis(e, lrule.points)
        w, lw = rule.weights, lrule.weights
        if kind == "L2":
            _scatter(M, dofs, (val * w[:, None]).T @ val)
            b[dofs] += (lval * (lw * target.value(lrule.points))[:, None]).sum(axis=0)
        else:
            _scatter(M, dofs, np.einsum("qad,qbd,q->ab", grad, grad, w))
            b[dofs] += np.einsum("qad,qd,q->a", lgrad, target.grad(lrule.points), lw)
    if kind == "IP":
        eta = problem.eta
        for fc in facets(space, q, layer):
            dofs, jump, avg = _facet_traces(space, fc)
            wq = fc.weights
            JA = np.einsum("qad,qbd,q->ab", jump, avg, wq)
            JJ = np.einsum("qad,qbd,q->ab", jump, jump, wq)
            local = -(JA + JA.T) + eta * JJ
            # dofs of the two elements are disjoint for alpha = -1
            _scatter(M, dofs, local)
            jphi, aphi = _target_traces(target, fc)
            b[dofs] -= np.einsum("qad,qd,q->a", jump, aphi, wq)
            if jphi is not None:
                b[dofs] += np.einsum("qd,qad,q->a", jphi, eta * jump - avg, wq)
    fixed, values = boundary_lift(space, target)
    return GramSystem(M, b, fixed, values, kind)


def _target_traces(target, fc):
    """Jump (None if continuous) and gradient average of the target on a facet."""
    if not hasattr(target, "on_element"):
        return None, target.grad(fc.points)
    vm, gm = target.on_element(fc.minus, fc.points)
    vp, gp = target.on_element(fc.plus, fc.points)
    return (vp - vm)[:, None] * fc.normal, 0.5 * (gm + gp)


def _facet_traces(space, fc):
    """Local dofs, jump vectors and gradient averages of the basis on a facet.

    Returns arrays of shape ``(nq, nloc, d)`` for ``[N]`` and ``{grad N}``,
    with the minus-side dofs first.
    """
    vm, gm = space.element_basis(fc.minus, fc.points)
    vp, gp = space.element_basis(fc.plus, fc.points)
    n = fc.normal
    # [u] = u+ n+ + u- n-, with n- = -n+
    jump = np.concatenate([-vm[:, :, None] * n, vp[:, :, None] * n], axis=1)
    avg = 0.5 * np.concatenate([gm, gp], axis=1)
    dofs = np.concatenate([space.element_dofs(fc.minus), space.element_dofs(fc.plus)])
    return dofs, jump, avg


def project(problem: ProjectionProblem) -> DofFunction:
    """Best approximation in the problem's own inner product."""
    system = assemble(problem)
    return DofFunction(problem.space, system.solve())


def project_l2(problem: ProjectionProblem) -> DofFunction:
    if problem.inner.kind != "L2":
        problem = ProjectionProblem(problem.space, problem.target, InnerProduct("L2"), problem.quad_order)
    return project(problem)


def project_h01(problem: ProjectionProblem) -> DofFunction:
    if problem.inner.kind != "H01":
        problem = ProjectionProblem(problem.space, problem.target, InnerProduct("H01"), problem.quad_order)
    return project(problem)


def project_ip(problem: ProjectionProblem) -> DofFunction:
    if problem.inner.kind != "IP":
        problem = ProjectionProblem(problem.space, problem.target, InnerProduct("IP"), problem.quad_order)
    return project(problem)


def ip_norm_squared(fn: DofFunction, target=None, eta: float | None = None,
                    q: int | None = None) -> float:
    """Squared IP norm of ``v = target - fn`` (or of ``fn`` if no target).

    Broken H0^1 seminorm minus twice the average-jump pairing plus the
    penalized jumps. Piecewise targets contribute their own jumps.
    """
    space = fn.space
    eta = penalty_default(space.degree, space.h, space.dim) if eta is None else eta
    layer = getattr(target, "layer", None)
    sign = -1.0 if target is not None else 1.0
    total = 0.0
    for e in range(space.n_el):
        rule = element_rule(space, e, q, layer)
        g = sign * fn.on_element(e, rule.points)[1]
        if target is not None:
            g = g + target.grad(rule.points)
        total += rule.integrate(np.einsum("qd,qd->q", g, g))
    for fc in facets(space, q, layer):
        um, gm = fn.on_element(fc.minus, fc.points)
        up, gp = fn.on_element(fc.plus, fc.points)
        jump = sign * (up - um)[:, None] * fc.normal
        avg = sign * 0.5 * (gm + gp)
        if target is not None:
            jphi, aphi = _target_traces(target, fc)
            avg = avg + aphi
            if jphi is not None:
                jump = jump + jphi
        total += float(np.dot(fc.weights, -2.0 * np.einsum("qd,qd->q", avg, jump)
                              + eta * np.einsum("qd,qd->q", jump, jump)))
    return total


def ip_norm(fn: DofFunction, target=None, eta: float | None = None, q: int | None = None) -> float:
    """IP norm of ``target - fn``; see :func:`ip_norm_squared`."""
    return float(np.sqrt(max(ip_norm_squared(fn, target, eta, q), 0.0)))
