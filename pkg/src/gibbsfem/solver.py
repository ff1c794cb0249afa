"""Best approximation subject to Gibbs constraints.

The problem is

    minimize 0.5 ||phi - phi_h||_H^2   subject to   G_j(phi_h) <= 0,  j = 1..J

over the lifted spline space. It is solved on the regularized constraints
with an augmented-Lagrangian (Powell-Hestenes-Rockafellar) outer loop and a
BFGS inner minimization, warm-started along a decreasing schedule of
regularization parameters. The exact constraints are evaluated at the end.

Two reductions are applied first.

* Flat subdomains, on which the target has (numerically) zero variation,
  admit only approximations that are constant there: ``G_j(phi_h) <= 0``
  reduces to ``V(phi_h) <= 0``. These constraints are imposed exactly as
  linear equalities, which removes the degenerate constraints whose
  regularized versions can never drop below ``eps * |omega|``. A subdomain
  counts as flat when the target varies by at most
  ``max(flat_tol, eps * |omega|)`` with ``eps`` the last schedule entry.
* The remaining quadratic objective is whitened by the Cholesky factor of its
  reduced Hessian, so BFGS starts from a perfectly conditioned model.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .gibbs import (
    ConstraintOperator,
    SubdomainPartition,
    evaluate,
    target_variation,
)
from .projectors import GramSystem, ProjectionProblem, assemble
from .quadrature import gauss_legendre
from .spline_space import DofFunction, SplineSpace

__all__ = [
    "ConstrainedProblem",
    "ConstrainedSolution",
    "KKTResiduals",
    "FeasibilityReport",
    "solve_constrained",
    "monotone_interpolant",
    "kkt_residuals",
    "feasibility_probe",
    "is_monotone",
]

log = logging.getLogger(__name__)

STATUSES = ("converged", "infeasible", "max_iter")


@dataclass
class ConstrainedProblem:
    """Best-approximation problem with Gibbs constraints on a partition.

    Parameters
    ----------
    projection : ProjectionProblem
    partition : SubdomainPartition
    eps_schedule : sequence of float
        Strictly decreasing regularization parameters.
    feas_tol : float
        Feasibility tolerance on the constraints.
    max_outer : int
        Outer (multiplier) iterations per schedule entry.
    multistart : int
        Number of starting points.
    seed : int
        Seed for randomized starting points.
    flat_tol : float
        Subdomains where the target varies by at most this much are flat.
    stat_tol : float
        Tolerance on the relative stationarity residual.
    constraint : str
        ``"gibbs"`` or the convex ``"variation"`` surrogate.
    """

    projection: ProjectionProblem
    partition: SubdomainPartition
    eps_schedule: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    feas_tol: float = 1e-6
    max_outer: int = 30
    multistart: int = 3
    seed: int = 0
    flat_tol: float = 1e-10
    constraint: str = "gibbs"
    stat_tol: float = 1e-6

    def __post_init__(self):
        eps = np.asarray(self.eps_schedule, dtype=float)
        if eps.size == 0 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
            raise ValueError("eps_schedule must be positive and strictly decreasing")
        self.eps_schedule = tuple(float(e) for e in eps)
        if self.feas_tol <= 0:
            raise ValueError("feas_tol must be positive")
        if self.multistart < 1:
            raise ValueError("multistart must be at least 1")
        if self.constraint not in ("gibbs", "variation"):
            raise ValueError(f"unknown constraint variant {self.constraint!r}")

    @property
    def space(self) -> SplineSpace:
        return self.projection.space

    @property
    def target(self):
        return self.projection.target


@dataclass
class KKTResiduals:
    """KKT residuals of a candidate.

    ``stationarity`` is measured on the subspace left after the lift and the
    flat-subdomain equalities. ``primal`` and both complementarity measures
    use the exact constraints; ``primal_eps`` the regularized ones on
    non-flat subdomains. ``complementarity`` is ``max |lam_j G_j|`` and
    ``complementarity_min`` is ``max |min(lam_j, -G_j)|``, which stays
    meaningful when a multiplier is unbounded because the constraint is
    degenerate at the solution (convergence is judged on the latter).
    """

    stationarity: float
    primal: float
    primal_eps: float
    dual: float
    complementarity: float
    complementarity_min: float = 0.0

    def as_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


@dataclass
class ConstrainedSolution:
    fn: DofFunction
    lam: np.ndarray
    G: np.ndarray
    G_eps: np.ndarray
    residuals: KKTResiduals
    status: str
    method: str
    objective: float
    eps_reg: float
    flat: np.ndarray
    starts: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


# ---------------------------------------------------------------------------
# monotone interpolation


def is_monotone(values, tol: float = 1e-12) -> bool:
    d = np.diff(np.asarray(values, dtype=float))
    scale = tol * max(1.0, float(np.max(np.abs(values), initial=0.0)))
    return bool(np.all(d >= -scale) or np.all(d <= scale))


def _element_monotone(space, target, e, n=64) -> bool:
    pts = space.element_sample_points(e, n)
    if space.dim == 1:
        return is_monotone(target.value(pts))
    grid = target.value(pts).reshape(n, n)
    return all(is_monotone(r) for r in grid) and all(is_monotone(c) for c in grid.T)


def monotone_interpolant(space: SplineSpace, target) -> DofFunction:
    """Greville (Schoenberg) interpolant of a target that is monotone per element.

    With ``alpha <= 0`` every element boundary carries a dof whose Greville
    point is that boundary, so the result interpolates the target there. The
    Bernstein coefficients of each element are then samples of a monotone
    function, so every element piece is monotone and its Gibbs functional
    vanishes.
    """
    if space.regularity > 0:
        raise ValueError("monotone interpolant needs regularity alpha <= 0")
    for e in range(space.n_el):
        if not _element_monotone(space, target, e):
            raise ValueError(f"target is not monotone on element {e}")
    return DofFunction(space, np.asarray(target.value(space.greville), dtype=float))


# ---------------------------------------------------------------------------
# reduction


class _Reduction:
    """Affine parametrization ``c = c0 + Q u`` of the admissible coefficients.

    ``Q`` is whitened so that ``Q^T M Q = I``.
    """

    def __init__(self, problem: ConstrainedProblem, system: GramSystem):
        space, target = problem.space, problem.target
        self.flat = np.zeros(len(problem.partition), dtype=bool)
        eps = problem.eps_schedule[-1]
        for j, block in enumerate(problem.partition):
            # below eps |omega| even a constant cannot satisfy the regularized constraint
            floor = max(problem.flat_tol, eps * _measure(space, block))
            self.flat[j] = target_variation(target, space, block) <= floor
        n = space.n_dof
        P = np.zeros((n, system.free.size))
        P[system.free, np.arange(system.free.size)] = 1.0
        rows = {j: _constant_rows(space, block) for j, block in enumerate(problem.partition) if self.flat[j]}
        A, z0, N = self._solve(rows, P, system.lift)
        if A is None:
            # some flat blocks clash with the lift; keep the compatible ones
            kept = {}
            for j in sorted(rows):
                trial = dict(kept)
                trial[j] = rows[j]
                if self._solve(trial, P, system.lift)[0] is not None:
                    kept = trial
                else:
                    self.flat[j] = False
            A, z0, N = self._solve(kept, P, system.lift)
        self.c0 = system.lift + P @ z0
        T = P @ N
        H = T.T @ system.M @ T
        H = 0.5 * (H + H.T)
        R = scipy.linalg.cholesky(H, lower=False)
        self.T = T
        self.Q = scipy.linalg.solve_triangular(R, T.T, trans="T", lower=False).T
        self.R = R

    @staticmethod
    def _solve(rows, P, lift):
        if not rows:
            m = P.shape[1]
            return np.zeros((0, P.shape[0])), np.zeros(m), np.eye(m)
        A = np.vstack(list(rows.values()))
        AP = A @ P
        rhs = -A @ lift
        z0, *_ = np.linalg.lstsq(AP, rhs, rcond=None)
        if np.max(np.abs(AP @ z0 - rhs), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(rhs), initial=0.0)):
            return None, None, None
        return A, z0, scipy.linalg.null_space(AP)

    @property
    def dim(self) -> int:
        return self.Q.shape[1]

    def coeffs(self, u) -> np.ndarray:
        return self.c0 + self.Q @ u

    def coords(self, c) -> np.ndarray:
        """Closest admissible point to ``c`` in the Gram norm."""
        return scipy.linalg.lstsq(self.Q, np.asarray(c) - self.c0)[0] if self.dim else np.zeros(0)

    def coords_m(self, c, M) -> np.ndarray:
        return self.Q.T @ (M @ (np.asarray(c) - self.c0))


def _measure(space: SplineSpace, block) -> float:
    return float(sum(np.prod(np.diff(space.element_box(int(e)), axis=1)) for e in block))


def _constant_rows(space: SplineSpace, block) -> np.ndarray:
    """Rows whose vanishing makes a spline constant on every element of a block."""
    p = space.degree
    if p == 0:
        return np.zeros((0, space.n_dof))
    g, _ = gauss_legendre(p + 1)
    out = []
    for e in block:
        box = space.element_box(int(e))
        axes = [b[0] + 0.5 * (b[1] - b[0]) * (g + 1.0) for b in box]
        if space.dim == 1:
            pts = axes[0][:, None]
        else:
            X, Y = np.meshgrid(axes[0], axes[1], indexing="xy")
            pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        _, grad = space.element_basis(int(e), pts)
        # scale by element size so rows are O(1)
        h = float(np.max(box[:, 1] - box[:, 0]))
        rows = np.zeros((pts.shape[0] * space.dim, space.n_dof))
        dofs = space.element_dofs(int(e))
        for k in range(space.dim):
            rows[k::space.dim][:, dofs] = h * grad[:, :, k]
        out.append(rows)
    return np.vstack(out)


# ---------------------------------------------------------------------------
# constraint evaluation on the non-flat subdomains


class _Constraints:
    def __init__(self, problem: ConstrainedProblem, active: np.ndarray):
        self.active = np.flatnonzero(active)
        space, target = problem.space, problem.target
        part = SubdomainPartition([problem.partition.blocks[j] for j in self.active], "custom")
        self.op = ConstraintOperator(space, target, part, problem.projection.q) if self.active.size else None
        self.variation = problem.constraint == "variation"
        if self.variation and self.active.size:
            self.tv = np.array([target_variation(target, space, b) for b in part.blocks])
        # shift added to the regularized values during defect correction
        self.offset = np.zeros(self.active.size)

    @property
    def J(self) -> int:
        return self.active.size

    def values(self, c, eps):
        return self.raw_values(c, eps) + self.offset

    def raw_values(self, c, eps):
        if self.op is None:
            return np.zeros(0)
        if self.variation:
            return self.op.variation_values(c, eps, self.tv)
        return self.op.values(c, eps)

    def values_and_jacobian(self, c, eps):
        vals, G = self.raw_values_and_jacobian(c, eps)
        return vals + self.offset, G

    def raw_values_and_jacobian(self, c, eps):
        if self.op is None:
            return np.zeros(0), np.zeros((0, len(c)))
        if self.variation:
            gs = self.op.grads(c)
            nrm = np.sqrt(np.einsum("qd,qd->q", gs, gs) + eps * eps)
            vals = np.bincount(self.op.sub, weights=self.op.w * nrm, minlength=self.J) - self.tv
            contrib = self.op.w[:, None] * np.einsum("qad,qd->qa", self.op.B, gs / nrm[:, None])
            G = np.zeros((self.J, len(c)))
            np.add.at(G, (np.broadcast_to(self.op.sub[:, None], self.op.dofs.shape), self.op.dofs), contrib)
            return vals, G
        return self.op.values_and_jacobian(c, eps)


# ---------------------------------------------------------------------------
# augmented Lagrangian


def _augmented_lagrangian(red: _Reduction, cons: _Constraints, system: GramSystem, u0, lam0,
                          schedule, feas_tol, max_outer, stat_tol=np.inf):
    M, b = system.M, system.b
    u, lam = np.array(u0, dtype=float), np.array(lam0, dtype=float)
    if red.dim == 0:
        # the equalities leave a single admissible point
        return u, lam, schedule[-1], 0
    if cons.J == 0:
        # only the quadratic objective: its minimizer in whitened coordinates is explicit
        u = red.Q.T @ (b - M @ red.c0)
        return u, lam, schedule[-1], 0
    scale = max(1.0, float(np.max(np.abs(red.T.T @ b), initial=0.0)))

    def stationary(c, lam, eps):
        _, G = cons.values_and_jacobian(c, eps)
        return float(np.max(np.abs(red.T.T @ (M @ c - b + G.T @ lam)))) <= stat_tol * scale

    rho = None
    n_outer = 0
    for stage, eps in enumerate(schedule):
        final = stage == len(schedule) - 1
        if rho is None:
            _, G = cons.values_and_jacobian(red.coeffs(u), eps)
            gn = np.linalg.norm(G @ red.Q, axis=1)
            rho = 10.0 / max(float(np.max(gn ** 2)), 1e-12)
            # beyond this BFGS line searches fail on the penalty kink
            rho_max = 1e6 * rho
        outer_budget = max_outer if final else max(3, max_outer // 5)
        prev = np.inf
        for _ in range(outer_budget):
            n_outer += 1

            def fun(v, lam=lam, rho=rho, eps=eps):
                c = red.coeffs(v)
                Mc = M @ c
                f = 0.5 * c @ Mc - b @ c
                g, G = cons.values_and_jacobian(c, eps)
                t = np.maximum(0.0, lam + rho * g)
                f += (t @ t - lam @ lam) / (2.0 * rho)
                grad_c = Mc - b + G.T @ t
                return f, red.Q.T @ grad_c

            res = scipy.optimize.minimize(fun, u, jac=True, method="BFGS",
                                          options={"gtol": 1e-10, "maxiter": 20 * red.dim + 200})
            u = res.x
            g = cons.values(red.coeffs(u), eps)
            viol = float(np.max(np.abs(np.minimum(-g, lam / rho))))
            lam = np.maximum(0.0, lam + rho * g)
            tol = 0.5 * feas_tol if final else feas_tol
            if np.max(g) <= tol and np.max(np.abs(lam * g)) <= tol and (
                    not final or stationary(red.coeffs(u), lam, eps)):
                break
            if viol > 0.25 * prev and viol > tol:
                rho = min(rho * 10.0, rho_max)
            prev = viol
    return u, lam, schedule[-1], n_outer


# ---------------------------------------------------------------------------
# residuals


def _residuals(problem, system, red, cons, c, lam_active, eps) -> KKTResiduals:
    exact = evaluate(DofFunction(problem.space, c), problem.target, problem.partition)
    G_exact = exact.G if problem.constraint == "gibbs" else exact.Vgap
    g, G = cons.raw_values_and_jacobian(c, eps)
    grad = system.gradient(c) + G.T @ lam_active
    stat = float(np.max(np.abs(red.T.T @ grad), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(red.T.T @ system.b), initial=0.0)))
    return KKTResiduals(
        stationarity=stat / scale,
        primal=float(np.max(G_exact, initial=-np.inf)),
        primal_eps=float(np.max(g, initial=-np.inf)) if g.size else 0.0,
        dual=float(max(0.0, -np.min(lam_active, initial=0.0))),
        complementarity=float(np.max(np.abs(lam_active * G_exact[cons.active]), initial=0.0)),
        complementarity_min=float(np.max(np.abs(np.minimum(lam_active, -G_exact[cons.active])), initial=0.0)),
    ), G_exact


def kkt_residuals(problem: ConstrainedProblem, candidate, lam=None, eps: float | None = None) -> KKTResiduals:
    """KKT residuals of a candidate and multipliers.

    Parameters
    ----------
    candidate : DofFunction or ndarray
    lam : array_like, optional
        One multiplier per subdomain; entries of flat subdomains are ignored.
        Defaults to zeros.
    eps : float, optional
        Regularization for the derivative and ``primal_eps``; defaults to the
        last schedule entry.
    """
    system = assemble(problem.projection)
    red = _Reduction(problem, system)
    cons = _Constraints(problem, ~red.flat)
    c = candidate.coeffs if isinstance(candidate, DofFunction) else np.asarray(candidate, dtype=float)
    lam = np.zeros(len(problem.partition)) if lam is None else np.asarray(lam, dtype=float)
    eps = problem.eps_schedule[-1] if eps is None else eps
    return _residuals(problem, system, red, cons, c, lam[cons.active], eps)[0]


# ---------------------------------------------------------------------------
# driver


def _exact_values(problem, cons, c) -> np.ndarray:
    ev = evaluate(DofFunction(problem.space, c), problem.target, problem.partition)
    G = ev.G if problem.constraint == "gibbs" else ev.Vgap
    return G[cons.active]


def _defect_correction(problem, red, cons, system, u, lam, max_fix: int = 6):
    """Re-solve the last stage with constraints shifted onto the exact values.

    Fixed quadrature cannot resolve the eps-wide transition where the
    derivative of the approximation changes sign inside an element, so a
    point with regularized values <= 0 may still violate the exact
    constraints, or carry a multiplier on an exactly inactive one. Each pass shifts every regularized constraint by its defect
    ``G - G_eps`` at the current point and warm-starts the final stage.
    """
    eps = problem.eps_schedule[-1]
    n_fix = 0
    if cons.J == 0 or red.dim == 0:
        return u, lam, n_fix
    try:
        for _ in range(max_fix):
            c = red.coeffs(u)
            G = _exact_values(problem, cons, c)
            if np.max(G) <= problem.feas_tol and np.max(np.abs(np.minimum(lam, -G))) <= problem.feas_tol:
                break
            cons.offset = G - cons.raw_values(c, eps)
            u, lam, _, _ = _augmented_lagrangian(red, cons, system, u, lam, (eps,),
                                                 problem.feas_tol, problem.max_outer, problem.stat_tol)
            n_fix += 1
    finally:
        cons.offset = np.zeros(cons.J)
    return u, lam, n_fix


def _seeds(problem, system, red, rng):
    space, target = problem.space, problem.target
    c_unc = system.solve()
    seeds = [("unconstrained", c_unc)]
    if space.regularity <= 0:
        try:
            seeds.append(("monotone_interpolant", monotone_interpolant(space, target).coeffs))
        except ValueError:
            pass
    if space.regularity == -1:
        seeds.append(("cell_average", _cell_averages(space, target, problem.projection.q)))
    while len(seeds) < problem.multistart:
        base = seeds[0][1]
        scale = 0.1 * max(1.0, float(np.max(np.abs(base))))
        seeds.append((f"random_{len(seeds)}", base + scale * rng.standard_normal(base.size)))
    return seeds[: problem.multistart]


def _cell_averages(space, target, q):
    from .quadrature import element_rule

    c = np.zeros(space.n_dof)
    layer = getattr(target, "layer", None)
    for e in range(space.n_el):
        rule = element_rule(space, e, q, layer)
        c[space.element_dofs(e)] = rule.integrate(target.value(rule.points)) / rule.weights.sum()
    return c


def _nnls_multipliers(red, cons, system, c, eps):
    """Nonnegative multipliers minimizing the reduced stationarity residual."""
    if cons.J == 0:
        return np.zeros(0)
    _, G = cons.values_and_jacobian(c, eps)
    A = red.T.T @ G.T
    rhs = -(red.T.T @ system.gradient(c))
    lam, _ = scipy.optimize.nnls(A, rhs)
    return lam


def _kkt_score(problem, res: KKTResiduals) -> float:
    return max(res.stationarity / problem.stat_tol, res.complementarity_min / problem.feas_tol)


def _monotone_unique(problem) -> bool:
    """p = 1, alpha = 0, elementwise, 1D, globally monotone target: the interpolant is the only feasible point."""
    space = problem.space
    if not (space.dim == 1 and space.degree == 1 and space.regularity == 0):
        return False
    if problem.partition.mode != "elementwise" or problem.constraint != "gibbs":
        return False
    x = np.linspace(space.domain[0][0], space.domain[0][1], 200 * space.n_el + 1)
    return is_monotone(problem.target.value(x[:, None]))


def solve_constrained(problem: ConstrainedProblem) -> ConstrainedSolution:
    """Solve the Gibbs-constrained best-approximation problem.

    The unconstrained minimizer is returned as is when already feasible. For
    continuous piecewise linears in 1D with a monotone target the nodal
    interpolant is the unique feasible point and is returned directly.
    Otherwise every starting point is driven through the regularization
    schedule and the best feasible result wins (ties go to the smallest
    multiplier sum).
    """
    space, target = problem.space, problem.target
    system = assemble(problem.projection)
    red = _Reduction(problem, system)
    cons = _Constraints(problem, ~red.flat)
    eps = problem.eps_schedule[-1]
    J = len(problem.partition)

    def pack(c, lam_active, method, status_hint=None, starts=()):
        res, G_exact = _residuals(problem, system, red, cons, c, lam_active, eps)
        lam = np.zeros(J)
        lam[cons.active] = lam_active
        g_eps = np.zeros(J)
        if cons.J:
            g_eps[cons.active] = cons.raw_values(c, eps)
        feasible = res.primal <= problem.feas_tol
        if status_hint is not None:
            status = status_hint
        elif (feasible and res.complementarity_min <= problem.feas_tol and res.dual <= 1e-10
              and res.stationarity <= problem.stat_tol):
            status = "converged"
        elif res.primal > 100 * problem.feas_tol:
            status = "infeasible"
        else:
            status = "max_iter"
        return ConstrainedSolution(DofFunction(space, c), lam, G_exact, g_eps, res, status, method,
                                   system.objective(c), eps, red.flat.copy(), list(starts))

    c_unc = system.solve()
    ev = evaluate(DofFunction(space, c_unc), target, problem.partition)
    G_unc = ev.G if problem.constraint == "gibbs" else ev.Vgap
    if np.max(G_unc) <= problem.feas_tol:
        return pack(c_unc, np.zeros(cons.J), "unconstrained")

    if _monotone_unique(problem):
        c = monotone_interpolant(space, target).coeffs
        lam = _nnls_multipliers(red, cons, system, c, eps)
        sol = pack(c, lam, "monotone_interpolant")
        if sol.residuals.primal <= problem.feas_tol:
            sol.status = "converged"
        return sol

    rng = np.random.default_rng(problem.seed)
    results = []
    for name, c_seed in _seeds(problem, system, red, rng):
        u0 = red.coords_m(c_seed, system.M)
        u, lam, _, n_outer = _augmented_lagrangian(red, cons, system, u0, np.zeros(cons.J),
                                                   problem.eps_schedule, problem.feas_tol, problem.max_outer,
                                                   problem.stat_tol)
        u, lam, n_fix = _defect_correction(problem, red, cons, system, u, lam)
        c = red.coeffs(u)
        sol = pack(c, lam, "augmented_lagrangian")
        if sol.status != "converged" and sol.residuals.primal <= problem.feas_tol:
            # the multiplier updates lag the primal iterate; refit them
            refit = pack(c, _nnls_multipliers(red, cons, system, c, eps), "augmented_lagrangian")
            if _kkt_score(problem, refit.residuals) < _kkt_score(problem, sol.residuals):
                sol = refit
        log.info("start %s: status=%s objective=%.12g primal=%.3g outer=%d corrections=%d",
                 name, sol.status, sol.objective, sol.residuals.primal, n_outer, n_fix)
        results.append((name, sol))
    starts = [{"seed": n, "status": s.status, "objective": s.objective, "primal": s.residuals.primal}
              for n, s in results]
    feasible = [s for _, s in results if s.residuals.primal <= problem.feas_tol]
    if feasible:
        best_obj = min(s.objective for s in feasible)
        tol = 1e-9 * max(1.0, abs(best_obj))
        near = [s for s in feasible if s.objective <= best_obj + tol]
        best = min(near, key=lambda s: (float(np.sum(s.lam)), s.objective))
    else:
        best = min((s for _, s in results), key=lambda s: s.residuals.primal)
    best.starts = starts
    return best


# ---------------------------------------------------------------------------
# feasibility probe


@dataclass
class FeasibilityReport:
    candidate: str
    G: np.ndarray
    violated: np.ndarray
    feas_tol: float
    fn: DofFunction | None = None

    @property
    def feasible(self) -> bool:
        return self.violated.size == 0

    @property
    def max_G(self) -> float:
        return float(np.max(self.G))


def feasibility_probe(space: SplineSpace, target, partition: SubdomainPartition, candidate="interpolant",
                      inner: str = "L2", feas_tol: float = 1e-6) -> FeasibilityReport:
    """Gibbs functionals of a named candidate and the subdomains it violates.

    ``candidate`` is ``"interpolant"`` (Greville interpolant, the sharpest
    approximation for linears), ``"projection"`` (unconstrained best
    approximation in ``inner``) or a :class:`DofFunction`.
    """
    if isinstance(candidate, DofFunction):
        fn, name = candidate, "custom"
    elif candidate == "interpolant":
        fn, name = DofFunction(space, target.value(space.greville)), "interpolant"
    elif candidate == "projection":
        from .projectors import InnerProduct, project

        fn, name = project(ProjectionProblem(space, target, InnerProduct(inner))), f"projection_{inner}"
    else:
        raise ValueError(f"unknown candidate {candidate!r}")
    G = evaluate(fn, target, partition).G
    return FeasibilityReport(name, G, np.flatnonzero(G > feas_tol), feas_tol, fn)
