import numpy as np
import pytest
from math import comb

from gibbsfem.projectors import (
    InnerProduct,
    ProjectionProblem,
    assemble,
    ip_norm,
    ip_norm_squared,
    penalty_default,
    project,
    project_h01,
    project_ip,
    project_l2,
)
from gibbsfem.spline_space import DofFunction, make_space
from gibbsfem.targets import Constant, Polynomial1D, tanh_1d, tanh_2d


def max_overshoot(fn, n=200):
    s = fn.space
    v = np.concatenate([fn.on_element(e, s.element_sample_points(e, n))[0] for e in range(s.n_el)])
    return max(float(np.max(v - 1)), float(np.max(-1 - v)), 0.0)


@pytest.mark.parametrize("p,h,d,eta", [(1, 1 / 8, 1, 192.0), (2, 1 / 8, 2, 480.0), (0, 1.0, 1, 6.0)])
def test_penalty_default(p, h, d, eta):
    assert penalty_default(p, h, d) == pytest.approx(eta)


def test_penalty_rejects_bad_h():
    with pytest.raises(ValueError):
        penalty_default(1, 0.0)


def test_inner_product_validation():
    with pytest.raises(ValueError):
        InnerProduct("H2")
    with pytest.raises(ValueError):
        InnerProduct("IP", -1.0)
    with pytest.raises(ValueError):
        ProjectionProblem(make_space(1, -1, 4), Constant(1.0), InnerProduct("H01"))
    with pytest.raises(ValueError):
        ProjectionProblem(make_space(1, 0, 4), Constant(1.0), InnerProduct("IP"))


def test_l2_constant_and_linear():
    s = make_space(2, 1, 6)
    fn = project_l2(ProjectionProblem(s, Constant(0.7)))
    assert np.allclose(fn.coeffs, 0.7, atol=1e-12)
    lin = Polynomial1D([0.2, 1.0])
    fn = project_l2(ProjectionProblem(s, lin))
    x = np.linspace(0, 1, 101)
    assert np.max(np.abs(fn(x) - lin.value(x))) < 1e-10


def test_l2_overshoot_infinite_mesh_oracle():
    # away from the jump the coefficients solve c[i-1] + 4 c[i] + c[i+1] = 6
    # with c[0] = 0 at the jump node, so c[1] = 1 - r for r = sqrt(3) - 2
    r = np.sqrt(3.0) - 2.0
    c1 = 1.0 - r
    s = make_space(1, 0, 64)
    fn = project_l2(ProjectionProblem(s, tanh_1d(0.5, 1e-4)))
    assert fn.coeffs[33] == pytest.approx(c1, abs=1e-3)
    assert max_overshoot(fn) == pytest.approx(2.0 - np.sqrt(3.0), abs=1e-3)
    assert max_overshoot(fn) / 2 == pytest.approx(1 - np.sqrt(3) / 2, abs=0.01)


@pytest.mark.parametrize("a", [0.5, 0.58])
def test_h01_nodal_exactness(a):
    s = make_space(1, 0, 8)
    t = tanh_1d(a, 1e-4)
    fn = project_h01(ProjectionProblem(s, t))
    nodes = s.factors[0].breakpoints
    assert np.max(np.abs(fn(nodes) - t.value(nodes))) < 1e-10
    assert max_overshoot(fn) < 1e-8


@pytest.mark.parametrize("alpha", [0, 1])
def test_h01_quadratic_gibbs_present(alpha):
    fn = project_h01(ProjectionProblem(make_space(2, alpha, 8), tanh_1d(0.5, 1e-4)))
    assert max_overshoot(fn) > 0.01


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("a", [0.5, 0.58, 0.61])
def test_ip_vanishing_average_error(p, a):
    s = make_space(p, -1, 8)
    t = tanh_1d(a, 1e-4)
    fn = project_ip(ProjectionProblem(s, t))
    for x in s.factors[0].breakpoints[1:-1]:
        avg = 0.5 * (fn.value([x], "left")[0] + fn.value([x])[0])
        assert abs(avg - t.value([x])[0]) < 1e-9


def test_ip_overshoot_present():
    fn = project_ip(ProjectionProblem(make_space(1, -1, 8), tanh_1d(0.58, 1e-4)))
    assert max_overshoot(fn) > 0


@pytest.mark.parametrize("kind,p,alpha", [("L2", 2, 0), ("H01", 2, 1), ("IP", 2, -1), ("IP", 1, -1), ("L2", 1, -1)])
def test_idempotence(kind, p, alpha, rng):
    s = make_space(p, alpha, 5)
    member = DofFunction(s, rng.standard_normal(s.n_dof))
    out = project(ProjectionProblem(s, member, InnerProduct(kind)))
    assert np.max(np.abs(out.coeffs - member.coeffs)) < 1e-10


@pytest.mark.parametrize("kind,p,alpha", [("IP", 1, -1), ("IP", 2, -1), ("H01", 2, 1), ("L2", 1, 0)])
def test_idempotence_2d(kind, p, alpha, rng):
    s = make_space(p, alpha, (3, 3))
    c = rng.standard_normal(s.n_dof)
    # the 2D lift uses Greville values along edges, which reproduces linear traces
    g = s.greville[s.boundary_dofs]
    c[s.boundary_dofs] = 0.3 + 0.5 * g[:, 0] - 0.2 * g[:, 1]
    member = DofFunction(s, c)
    out = project(ProjectionProblem(s, member, InnerProduct(kind)))
    assert np.max(np.abs(out.coeffs - member.coeffs)) < 1e-10


@pytest.mark.parametrize("kind,p,alpha,dim", [
    ("L2", 1, 0, 1), ("H01", 2, 1, 1), ("IP", 2, -1, 1), ("IP", 1, -1, 2), ("H01", 1, 0, 2),
])
def test_orthogonality_and_spd(kind, p, alpha, dim):
    s = make_space(p, alpha, 8 if dim == 1 else (4, 4))
    t = tanh_1d(0.58, 1e-4) if dim == 1 else tanh_2d(1e-4)
    sys = assemble(ProjectionProblem(s, t, InnerProduct(kind)))
    assert np.max(np.abs(sys.M - sys.M.T)) < 1e-12 * np.max(np.abs(sys.M))
    c = sys.solve()
    res = sys.gradient(c)[sys.free]
    assert np.max(np.abs(res)) < 1e-9 * max(1.0, np.max(np.abs(sys.b)))
    np.linalg.cholesky(sys.M_ff)


@pytest.mark.parametrize("kind,alpha", [("L2", 0), ("H01", 0), ("IP", -1)])
def test_best_approximation_perturbation(kind, alpha):
    s = make_space(2, alpha, 6)
    t = tanh_1d(0.58, 1e-4)
    sys = assemble(ProjectionProblem(s, t, InnerProduct(kind)))
    c = sys.solve()
    J0 = sys.objective(c)
    for i in sys.free:
        for d in (1e-3, -1e-3):
            c2 = c.copy()
            c2[i] += d
            assert sys.objective(c2) > J0


def test_ip_objective_matches_norm(rng):
    # two routes to the same quantity: the assembled quadratic and the direct norm
    s = make_space(2, -1, 4)
    t = tanh_1d(0.58, 1e-3)
    prob = ProjectionProblem(s, t, InnerProduct("IP"))
    sys = assemble(prob)
    base = sys.solve()
    consts = []
    for _ in range(4):
        c = base + rng.standard_normal(s.n_dof) * 0.1
        c[sys.fixed] = base[sys.fixed]
        consts.append(ip_norm_squared(DofFunction(s, c), t, prob.eta) - 2 * sys.objective(c))
    assert np.ptp(consts) < 1e-8 * max(1.0, abs(consts[0]))


def test_small_penalty_is_detected():
    s = make_space(3, -1, 8)
    prob = ProjectionProblem(s, tanh_1d(0.5, 1e-2), InnerProduct("IP", 1e-3))
    with pytest.raises(np.linalg.LinAlgError, match="penalty"):
        project(prob)


def test_ip_norm_zero_and_continuous(rng):
    s = make_space(2, -1, 4)
    assert ip_norm(DofFunction(s, np.zeros(s.n_dof))) == 0.0
    # a globally continuous member: the IP norm reduces to the H0^1 seminorm
    cont = make_space(2, 0, 4)
    fc = DofFunction(cont, rng.standard_normal(cont.n_dof))
    x_loc = np.array([[lo + (hi - lo) * t] for e in range(4) for lo, hi in [s.factors[0].element_bounds(e)]
                      for t in (0.0, 0.5, 1.0)])
    B = np.zeros((12, s.n_dof))
    for k, (pt,) in enumerate(x_loc):
        e = k // 3
        B[k, s.element_dofs(e)] = s.element_basis(e, [[pt]])[0][0]
    c = np.linalg.solve(B, np.array([fc.on_element(k // 3, [[pt]])[0][0] for k, (pt,) in enumerate(x_loc)]))
    fd = DofFunction(s, c)
    semi = 0.0
    for e in range(4):
        x, w = np.polynomial.legendre.leggauss(6)
        lo, hi = s.factors[0].element_bounds(e)
        xs = lo + (hi - lo) * (x + 1) / 2
        semi += np.dot(w * (hi - lo) / 2, fc.on_element(e, xs[:, None])[1][:, 0] ** 2)
    assert ip_norm_squared(fd) == pytest.approx(semi, rel=1e-12)


def test_ip_norm_two_element_oracle(rng):
    p, eta = 2, 37.0
    s = make_space(p, -1, 2)
    c = rng.standard_normal(s.n_dof)
    h = 0.5
    polys = []
    for e in range(2):
        t = np.polynomial.Polynomial([-e * h / h, 1 / h])  # local coordinate (x - lo) / h
        poly = sum(c[e * (p + 1) + i] * comb(p, i) * t ** i * (1 - t) ** (p - i) for i in range(p + 1))
        polys.append(poly)
    grad2 = sum((P.deriv() ** 2).integ()(h * (e + 1)) - (P.deriv() ** 2).integ()(h * e)
                for e, P in enumerate(polys))
    um, up = polys[0](h), polys[1](h)
    gm, gp = polys[0].deriv()(h), polys[1].deriv()(h)
    jump = -(up - um)  # plus-side normal is -1
    avg = 0.5 * (gm + gp)
    oracle = grad2 - 2 * avg * jump + eta * jump ** 2
    assert ip_norm_squared(DofFunction(s, c), eta=eta) == pytest.approx(oracle, rel=1e-12)
