import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gibbsfem import experiments as ex
from gibbsfem.spline_space import DofFunction, make_space
from gibbsfem.targets import Polynomial1D, tanh_1d

from golden_tools import GOLDEN_DIR, GOLDENS, diff, golden_config


# --- config -----------------------------------------------------------------

def test_config_defaults_documented():
    cfg = ex.ExperimentConfig()
    assert (cfg.dim, cfg.degree, cfg.regularity, cfg.n_el, cfg.inner) == (1, 1, 0, 8, "L2")
    assert cfg.eps_layer == 1e-4 and cfg.a == 0.5 and not cfg.constrained
    assert cfg.eps_schedule == [1e-1, 1e-2, 1e-3, 1e-4]
    assert cfg.n_samples == 200 and ex.ExperimentConfig(dim=2).n_samples == 50
    # every field is described in the class docstring
    for name in cfg.to_dict():
        assert f"{name} :" in ex.ExperimentConfig.__doc__


@pytest.mark.parametrize("kw", [
    dict(dim=3), dict(n_el=0), dict(inner="H2"), dict(eps_layer=0.0), dict(penalty_scale=-1.0),
    dict(probe="other"), dict(probe="interpolant", constrained=True), dict(samples=1),
])
def test_config_rejects(kw):
    with pytest.raises(ValueError):
        ex.ExperimentConfig(**kw)


def test_inner_is_normalized():
    assert ex.ExperimentConfig(inner="ip", regularity=-1).inner == "IP"


@pytest.mark.parametrize("name", sorted(ex.PRESETS))
def test_toml_round_trip(name, tmp_path):
    cfg = ex.preset(name)
    path = tmp_path / "c.toml"
    path.write_text(ex.dump_config(cfg))
    assert ex.load_config(path) == cfg


def test_partial_toml_takes_defaults(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('degree = 2\nregularity = 1\neps_layer = 1e-3\n')
    cfg = ex.load_config(path)
    assert cfg == ex.ExperimentConfig(degree=2, regularity=1, eps_layer=1e-3)


def test_int_accepted_for_float_key(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("penalty_scale = 10\n")
    cfg = ex.load_config(path)
    assert cfg.penalty_scale == 10.0 and isinstance(cfg.penalty_scale, float)


@pytest.mark.parametrize("text", [
    "unknown = 1\n", "degree = 1.5\n", "constrained = 1\n", "degree = true\n",
    "inner = 3\n", "eps_schedule = 0.1\n", "[table]\ndegree = 1\n",
])
def test_bad_toml(text, tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(text)
    with pytest.raises(ValueError):
        ex.load_config(path)


def test_dump_omits_none():
    text = ex.dump_config(ex.ExperimentConfig())
    assert "quad_order" not in text and "samples" not in text
    assert 'inner = "L2"' in text and "constrained = false" in text


# --- presets ----------------------------------------------------------------

def test_unknown_preset():
    with pytest.raises(KeyError):
        ex.preset("nope")


def test_preset_returns_copy():
    cfg = ex.preset("fig_L2_p1")
    cfg.eps_schedule.append(1.0)
    assert ex.preset("fig_L2_p1").eps_schedule == [1e-1, 1e-2, 1e-3, 1e-4]


def test_presets_named_and_described():
    for name, cfg in ex.PRESETS.items():
        assert cfg.name == name and ex.DESCRIPTIONS[name]
    figs = [n for n in ex.PRESETS if n.startswith("fig_")]
    assert len(figs) == len(set(ex.DESCRIPTIONS[n] for n in figs))


@pytest.mark.parametrize("constrained,twin", sorted(ex.PAIRS.items()))
def test_pairs_differ_only_in_constrained(constrained, twin):
    a = ex.preset(constrained).to_dict()
    b = ex.preset(twin).to_dict()
    assert a.pop("constrained") and not b.pop("constrained")
    a.pop("name"), b.pop("name")
    # grouping only matters with constraints on
    a.pop("partition"), b.pop("partition"), a.pop("shift"), b.pop("shift")
    assert a == b


# --- metrics ----------------------------------------------------------------

def _const(space, c):
    return DofFunction(space, np.full(space.n_dof, c))


def test_overshoot_in_bounds_is_zero():
    space = make_space(2, 1, 4)
    m = ex.overshoot(_const(space, 0.3), (-1.0, 1.0))
    assert (m.overshoot, m.undershoot, m.value) == (0.0, 0.0, 0.0)
    assert m.samples == 200


def test_overshoot_constant_above():
    space = make_space(1, 0, 4)
    m = ex.overshoot(_const(space, 1.1), (-1.0, 1.0))
    assert m.overshoot == pytest.approx(0.1, abs=1e-15)
    assert m.undershoot == 0.0 and m.relative == pytest.approx(0.05, abs=1e-15)


def test_undershoot_2d():
    space = make_space(1, 0, (2, 2))
    m = ex.overshoot(_const(space, -1.25), (-1.0, 1.0))
    assert m.undershoot == pytest.approx(0.25) and m.samples == 50


def test_overshoot_needs_50_samples():
    with pytest.raises(ValueError):
        ex.overshoot(_const(make_space(1, 0, 2), 0.0), (-1.0, 1.0), samples=49)


@given(st.lists(st.floats(-3, 3), min_size=5, max_size=5))
def test_overshoot_nonnegative_and_matches_coeff_extremes_p1(c):
    # for linears the extremes sit at nodes, which are on the sample grid
    space = make_space(1, 0, 4)
    m = ex.overshoot(DofFunction(space, np.array(c)), (-1.0, 1.0))
    assert m.overshoot >= 0 and m.undershoot >= 0
    assert m.overshoot == pytest.approx(max(max(c) - 1, 0), abs=1e-14)
    assert m.undershoot == pytest.approx(max(-1 - min(c), 0), abs=1e-14)


def test_target_bounds():
    space = make_space(1, 0, 4)
    assert ex.target_bounds(tanh_1d(), space) == (-1.0, 1.0)
    lo, hi = ex.target_bounds(Polynomial1D([0, 0, 1]), space)
    assert lo == 0.0 and hi == pytest.approx(1.0)


def test_layer_offset():
    space = make_space(1, -1, 8)
    target = tanh_1d(0.5, 1e-3)
    shifted = DofFunction(space, np.where(space.greville[:, 0] > 0.5, 1.0, -1.0) + 0.01)
    # elements touching the layer are skipped; the rest are off by ~0.01
    assert ex.layer_offset(shifted, target) == pytest.approx(0.01, abs=1e-6)
    with pytest.raises(ValueError):
        ex.layer_offset(shifted, Polynomial1D([0, 1]))


def test_sample_solution_shapes():
    space = make_space(1, 0, (2, 3))
    pts, phi, phi_h = ex.sample_solution(_const(space, 0.5), ex.tanh_2d(), 4)
    assert pts.shape == (6 * 16, 2) and phi.shape == phi_h.shape == (96,)
    assert np.allclose(phi_h, 0.5, atol=1e-14)
    with pytest.raises(ValueError):
        ex.sample_solution(_const(space, 0.5), ex.tanh_2d(), 0)


# --- runs ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def h01_run():
    return ex.run_experiment(ex.preset("fig_H01_p1"))


@pytest.fixture(scope="module")
def constrained_run():
    return ex.run_experiment(ex.preset("fig_IP_constrained_p1"))


def test_h01_preset_nodally_exact(h01_run):
    assert h01_run.status == "converged" and h01_run.exit_code == 0
    assert h01_run.overshoot["value"] < 1e-8
    nodes = np.linspace(0, 1, 9)
    assert np.max(np.abs(h01_run.coeffs - np.tanh((nodes - 0.5) / 1e-4))) < 1e-10


def test_constrained_run_records_baseline(constrained_run):
    r = constrained_run
    assert r.status == "converged" and r.method != "unconstrained"
    assert r.baseline["overshoot"]["value"] > r.overshoot["value"]
    assert np.max(r.G) <= 1e-6 and np.all(r.lam >= 0)
    assert r.residuals["primal"] <= 1e-6
    assert len(r.G) == len(r.lam) == len(r.subdomains) == 8


def test_infeasible_is_status_not_crash():
    cfg = ex.ExperimentConfig(degree=2, regularity=1, inner="H01", a=0.58, constrained=True,
                              multistart=1, max_outer=5)
    res = ex.run_experiment(cfg)
    assert res.status != "converged" and res.exit_code == 2


def test_probe_run():
    res = ex.run_experiment(ex.preset("fig_2d_linears_sharp").replace(samples=2))
    assert res.status == "probe" and res.method == "interpolant" and res.exit_code == 0


def test_determinism_bitwise(constrained_run):
    again = ex.run_experiment(ex.preset("fig_IP_constrained_p1"))
    assert ex.format_json(again) == ex.format_json(constrained_run)


def test_seed_changes_nothing_for_convex_problem(constrained_run):
    other = ex.run_experiment(ex.preset("fig_IP_constrained_p1").replace(seed=7))
    assert other.config["seed"] == 7
    assert np.allclose(other.coeffs, constrained_run.coeffs, atol=1e-6)


def test_run_batch_matches_sequential(h01_run):
    cfgs = [ex.preset("fig_H01_p1"), ex.preset("fig_L2_p1_n8")]
    par = ex.run_batch(cfgs, workers=2)
    seq = ex.run_batch(cfgs, workers=1)
    assert [r.name for r in par] == ["fig_H01_p1", "fig_L2_p1_n8"]
    assert [ex.format_json(r) for r in par] == [ex.format_json(r) for r in seq]
    assert ex.format_json(par[0]) == ex.format_json(h01_run)


# --- serialization ------------------------------------------------------------

def test_result_round_trip(constrained_run):
    back = ex.RunResult.from_dict(json.loads(ex.format_json(constrained_run)))
    assert back.to_dict() == constrained_run.to_dict()
    assert back.points.shape == constrained_run.points.shape


def test_json_17_digits(constrained_run):
    text = ex.format_json(constrained_run)
    data = json.loads(text)
    assert list(data)[:4] == ["config", "status", "method", "objective"]
    # a float that needs all 17 digits survives exactly
    assert data["objective"] == constrained_run.objective
    assert format(constrained_run.objective, ".17g") in text


def test_emit_json_parse_emit_identical(constrained_run, tmp_path):
    paths = ex.emit(constrained_run, tmp_path / "a", "json")
    assert [p.name for p in paths] == ["fig_IP_constrained_p1.json", "fig_IP_constrained_p1_timings.json"]
    back = ex.load_result(paths[0])
    paths2 = ex.emit(back, tmp_path / "b", "json")
    assert paths[0].read_bytes() == paths2[0].read_bytes()
    timings = json.loads(paths[1].read_text())
    assert timings["total"] > 0


def test_emit_csv(constrained_run, tmp_path):
    paths = ex.emit(constrained_run, tmp_path, "csv")
    samples = paths[0].read_text().splitlines()
    assert samples[0] == "x,phi,phi_h"
    assert len(samples) == 1 + 8 * 200
    x, phi, phi_h = map(float, samples[1].split(","))
    assert (x, phi_h) == (constrained_run.points[0, 0], constrained_run.phi_h[0])
    sub = paths[1].read_text().splitlines()
    assert sub[0] == "subdomain,G,V,TV,lambda" and len(sub) == 9
    row = sub[1].split(",")
    assert float(row[1]) == constrained_run.G[0] and float(row[4]) == constrained_run.lam[0]


def test_emit_csv_2d_header(tmp_path):
    res = ex.run_experiment(ex.preset("fig_2d_linears_sharp").replace(samples=2))
    paths = ex.emit(res, tmp_path, "csv")
    assert paths[0].read_text().splitlines()[0] == "x,y,phi,phi_h"


def test_emit_guards(constrained_run, tmp_path):
    with pytest.raises(ValueError):
        ex.emit(constrained_run, tmp_path, "xml")
    empty = ex.RunResult(**{**constrained_run.__dict__, "points": np.zeros((0, 1)),
                            "phi": np.zeros(0), "phi_h": np.zeros(0)})
    with pytest.raises(ValueError):
        ex.emit(empty, tmp_path, "json")


def test_emit_unwritable(constrained_run, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        ex.emit(constrained_run, blocker / "sub", "json")


def test_non_finite_floats_formatted():
    assert ex._fmt(math.nan) == "NaN" and ex._fmt(-math.inf) == "-Infinity"
    assert json.loads("[" + ex._fmt(math.inf) + "]")[0] == math.inf


# --- goldens ------------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(GOLDENS))
def test_golden(name):
    golden = json.loads((GOLDEN_DIR / f"{name}.json").read_text())
    cfg = ex.config_from_dict(golden["config"])
    assert cfg == golden_config(name)
    fresh = json.loads(ex.format_json(ex.run_experiment(cfg)))
    problems = diff(golden, fresh)
    assert not problems, "\n".join(problems[:10])


def test_golden_diff_detects_changes():
    a = {"x": [1.0, 2.0], "s": "ok"}
    assert diff(a, {"x": [1.0, 2.0 + 1e-13], "s": "ok"}) == []
    assert diff(a, {"x": [1.0, 2.0 + 1e-9], "s": "ok"})
    assert diff(a, {"x": [1.0], "s": "ok"})
    assert diff(a, {"x": [1.0, 2.0], "s": "no"})


# --- frozen 2D regression -------------------------------------------------------

@pytest.mark.parametrize("p,before,after", [(1, 0.3848, 0.4168), (2, 0.3023, 0.2566)])
def test_2d_constrained_ip_regression(p, before, after):
    # measured on the first full run; the worst points sit in the layer-cut
    # diagonal elements, where the constraints are inactive
    res = ex.run_experiment(ex.preset(f"fig_IP_constrained_2d_p{p}"))
    assert res.status == "converged" and np.max(res.G) <= 1e-6
    assert res.baseline["overshoot"]["value"] == pytest.approx(before, abs=1e-3)
    assert res.overshoot["value"] == pytest.approx(after, abs=1e-3)
    fn = DofFunction(make_space(p, -1, (8, 8)), res.coeffs)
    space = fn.space
    worst = max(range(space.n_el), key=lambda e: np.max(np.abs(
        fn.on_element(e, space.element_sample_points(e, 50))[0])))
    i, j = space.element_index(worst)
    assert i == j and res.lam[worst] == 0.0 and res.G[worst] < -1e-3
