"""Config-driven reproductions of the best-approximation experiments.

An :class:`ExperimentConfig` describes one run: the spline space, the target
step, the inner product and, optionally, the Gibbs constraints and solver
settings. :func:`run_experiment` turns it into a :class:`RunResult` holding
the sampled solution, per-subdomain functionals, multipliers and overshoot
metrics, and :func:`emit` writes that result as CSV or JSON with a fixed
layout so that output files can serve as golden references.
"""
from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import io
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gibbs import build_partition, evaluate
from .projectors import InnerProduct, ProjectionProblem, assemble, penalty_default
from .solver import ConstrainedProblem, feasibility_probe, solve_constrained
from .spline_space import DofFunction, make_space
from .targets import TanhLayer, tanh_1d, tanh_2d

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = [
    "ExperimentConfig",
    "OvershootMetric",
    "RunResult",
    "PRESETS",
    "PAIRS",
    "preset",
    "load_config",
    "dump_config",
    "run_experiment",
    "run_batch",
    "overshoot",
    "layer_offset",
    "sample_solution",
    "emit",
    "load_result",
    "format_json",
]

FLOAT_FMT = ".17g"


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    """Parameters of one experiment.

    Parameters
    ----------
    name : str
        Label used for output file names. Default ``"custom"``.
    dim : int
        Spatial dimension, 1 or 2. Default 1.
    degree : int
        Polynomial degree ``p``. Default 1.
    regularity : int
        Interior regularity ``alpha`` (-1 for discontinuous). Default 0.
    n_el : int
        Elements per direction. Default 8.
    inner : str
        ``"L2"``, ``"H01"`` or ``"IP"``. Default ``"L2"``.
    penalty_scale : float
        Multiplier of the default interior-penalty parameter. Default 1.
    a : float
        Step location of the 1D target ``tanh((x - a) / eps_layer)``. Default 0.5.
    eps_layer : float
        Layer width of the target. Default 1e-4.
    constrained : bool
        Impose Gibbs constraints. Default False.
    partition : str
        ``"elementwise"`` or ``"grouped"``. Default ``"elementwise"``.
    shift : int
        Size of the first grouped block minus one. Default 0.
    probe : str
        If set (``"interpolant"`` or ``"projection"``), evaluate the Gibbs
        functionals of that candidate instead of solving. Default ``""``.
    constraint : str
        ``"gibbs"`` or ``"variation"``. Default ``"gibbs"``.
    eps_schedule : list of float
        Regularization continuation. Default ``[0.1, 0.01, 0.001, 0.0001]``.
    feas_tol : float
        Constraint feasibility tolerance. Default 1e-6.
    max_outer : int
        Outer iterations per schedule entry. Default 30.
    multistart : int
        Number of solver starting points. Default 3.
    seed : int
        Seed for randomized starting points. Default 0.
    flat_tol : float
        Target variation below which a subdomain is treated as flat. Default 1e-10.
    stat_tol : float
        Relative stationarity tolerance. Default 1e-6.
    quad_order : int or None
        Gauss points per direction; None picks the degree-based default.
    samples : int or None
        Output samples per element and direction; None gives 200 in 1D and
        50 in 2D. The overshoot metric uses the same grid but never fewer
        than 50 points.
    """

    name: str = "custom"
    dim: int = 1
    degree: int = 1
    regularity: int = 0
    n_el: int = 8
    inner: str = "L2"
    penalty_scale: float = 1.0
    a: float = 0.5
    eps_layer: float = 1e-4
    constrained: bool = False
    partition: str = "elementwise"
    shift: int = 0
    probe: str = ""
    constraint: str = "gibbs"
    eps_schedule: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    feas_tol: float = 1e-6
    max_outer: int = 30
    multistart: int = 3
    seed: int = 0
    flat_tol: float = 1e-10
    stat_tol: float = 1e-6
    quad_order: int | None = None
    samples: int | None = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n_el < 1:
            raise ValueError("n_el must be positive")
        if self.inner.upper() not in ("L2", "H01", "IP"):
            raise ValueError(f"unknown inner product {self.inner!r}")
        self.inner = self.inner.upper()
        if self.eps_layer <= 0 or self.penalty_scale <= 0:
            raise ValueError("eps_layer and penalty_scale must be positive")
        if self.probe not in ("", "interpolant", "projection"):
            raise ValueError(f"unknown probe candidate {self.probe!r}")
        if self.probe and self.constrained:
            raise ValueError("probe and constrained are mutually exclusive")
        if self.samples is not None and self.samples < 2:
            raise ValueError("need at least 2 samples per element")
        self.eps_schedule = [float(e) for e in self.eps_schedule]

    @property
    def n_samples(self) -> int:
        if self.samples is not None:
            return self.samples
        return 200 if self.dim == 1 else 50

    @property
    def metric_samples(self) -> int:
        return max(self.n_samples, 50)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(key, value):
    if key not in _FIELDS:
        raise ValueError(f"unknown config key {key!r}")
    kind, _, optional = _FIELDS[key].type.partition(" |")
    if value is None and optional:
        return None
    ok = {
        "bool": isinstance(value, bool),
        "int": isinstance(value, int) and not isinstance(value, bool),
        "float": isinstance(value, (int, float)) and not isinstance(value, bool),
        "str": isinstance(value, str),
        "list": isinstance(value, list),
    }[kind]
    if not ok:
        raise ValueError(f"config key {key!r} expects {kind}, got {value!r}")
    return float(value) if kind == "float" else value


def config_from_dict(data: dict) -> ExperimentConfig:
    return ExperimentConfig(**{k: _coerce(k, v) for k, v in data.items()})


def load_config(path) -> ExperimentConfig:
    """Read a flat TOML config; missing keys take their defaults."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ValueError(f"config must be flat, found tables {nested}")
    return config_from_dict(data)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot write {type(v).__name__} to TOML")


def dump_config(cfg: ExperimentConfig) -> str:
    """Flat TOML text for ``cfg``; keys set to None are omitted."""
    lines = [f"{k} = {_toml_value(v)}" for k, v in cfg.to_dict().items() if v is not None]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# presets

_IP2D = dict(dim=2, regularity=-1, inner="IP", flat_tol=1e-3)

# name -> (figure description, overrides)
_PRESET_TABLE = {
    "fig_L2_p1": ("L2 best approximation, continuous linears, 64 elements",
                  dict(degree=1, regularity=0, n_el=64, inner="L2")),
    "fig_L2_p1_n8": ("L2 best approximation, continuous linears, 8 elements",
                     dict(degree=1, regularity=0, n_el=8, inner="L2")),
    "fig_L2_p2_alpha0": ("L2 best approximation, C0 quadratics",
                         dict(degree=2, regularity=0, inner="L2")),
    "fig_L2_p2_alpha1": ("L2 best approximation, C1 quadratics",
                         dict(degree=2, regularity=1, inner="L2")),
    "fig_H01_p1": ("H01 best approximation, linears, a = 0.5",
                   dict(degree=1, regularity=0, inner="H01")),
    "fig_H01_p1_a058": ("H01 best approximation, linears, a = 0.58",
                        dict(degree=1, regularity=0, inner="H01", a=0.58)),
    "fig_H01_p2_alpha0": ("H01 best approximation, C0 quadratics",
                          dict(degree=2, regularity=0, inner="H01")),
    "fig_H01_p2_alpha1": ("H01 best approximation, C1 quadratics",
                          dict(degree=2, regularity=1, inner="H01")),
    # the layer sits on a facet at a = 0.5, where the facet terms grow like
    # 1 / eps_layer; a resolved layer keeps the picture of the figure
    "fig_IP_p1": ("interior-penalty best approximation, discontinuous linears",
                  dict(degree=1, regularity=-1, inner="IP", eps_layer=1e-2)),
    "fig_IP_p2": ("interior-penalty best approximation, discontinuous quadratics",
                  dict(degree=2, regularity=-1, inner="IP", eps_layer=1e-2)),
    "fig_H01_2d_p1_alpha0": ("2D H01 best approximation, bilinears",
                             dict(dim=2, degree=1, regularity=0, inner="H01")),
    "fig_H01_2d_p2_alpha0": ("2D H01 best approximation, C0 biquadratics",
                             dict(dim=2, degree=2, regularity=0, inner="H01")),
    "fig_H01_2d_p2_alpha1": ("2D H01 best approximation, C1 biquadratics",
                             dict(dim=2, degree=2, regularity=1, inner="H01")),
    "fig_IP_2d_p1": ("2D interior-penalty best approximation, linears", dict(degree=1, **_IP2D)),
    "fig_IP_2d_p2": ("2D interior-penalty best approximation, quadratics", dict(degree=2, **_IP2D)),
    "fig_IP_constrained_p1": ("IP best approximation with elementwise Gibbs constraints, linears",
                              dict(degree=1, regularity=-1, inner="IP", a=0.58, constrained=True)),
    "fig_IP_constrained_p2": ("IP best approximation with elementwise Gibbs constraints, quadratics",
                              dict(degree=2, regularity=-1, inner="IP", a=0.58, constrained=True)),
    "fig_H01_constrained_p1": ("H01 best approximation with elementwise Gibbs constraints, linears",
                               dict(degree=1, regularity=0, inner="H01", a=0.58, constrained=True)),
    "fig_H01_constrained_p2": ("H01 best approximation with elementwise Gibbs constraints, C0 quadratics",
                               dict(degree=2, regularity=0, inner="H01", a=0.58, constrained=True)),
    "fig_H01_constrained_p2_alpha1_sub1": (
        "H01 best approximation, C1 quadratics, grouped Gibbs constraints, first subdivision",
        dict(degree=2, regularity=1, inner="H01", a=0.58, constrained=True, partition="grouped", shift=0)),
    "fig_H01_constrained_p2_alpha1_sub2": (
        "H01 best approximation, C1 quadratics, grouped Gibbs constraints, second subdivision",
        dict(degree=2, regularity=1, inner="H01", a=0.58, constrained=True, partition="grouped", shift=1)),
    "fig_IP_constrained_2d_p1": ("2D IP best approximation with elementwise Gibbs constraints, linears",
                                 dict(degree=1, constrained=True, **_IP2D)),
    "fig_IP_constrained_2d_p2": ("2D IP best approximation with elementwise Gibbs constraints, quadratics",
                                 dict(degree=2, constrained=True, **_IP2D)),
    "fig_2d_linears_sharp": ("element Gibbs functionals of the sharpest continuous bilinear approximation",
                             dict(dim=2, degree=1, regularity=0, inner="L2", probe="interpolant")),
    # companions that are not figures of their own
    "IP_p1_a058": ("unconstrained twin of fig_IP_constrained_p1",
                   dict(degree=1, regularity=-1, inner="IP", a=0.58)),
    "IP_p2_a058": ("unconstrained twin of fig_IP_constrained_p2",
                   dict(degree=2, regularity=-1, inner="IP", a=0.58)),
    "H01_p2_a058": ("unconstrained twin of fig_H01_constrained_p2",
                    dict(degree=2, regularity=0, inner="H01", a=0.58)),
    "H01_p2_alpha1_a058": ("unconstrained twin of the grouped C1 quadratic runs",
                           dict(degree=2, regularity=1, inner="H01", a=0.58)),
    "gibbs_constant_p2": ("L2 overshoot of C1 quadratics on 64 elements",
                          dict(degree=2, regularity=1, n_el=64, inner="L2")),
    "gibbs_constant_p6": ("L2 overshoot of C5 sextics on 64 elements",
                          dict(degree=6, regularity=5, n_el=64, inner="L2")),
}

PRESETS = {name: ExperimentConfig(name=name, **kw) for name, (_, kw) in _PRESET_TABLE.items()}
DESCRIPTIONS = {name: desc for name, (desc, _) in _PRESET_TABLE.items()}

# constrained preset -> unconstrained twin
PAIRS = {
    "fig_IP_constrained_p1": "IP_p1_a058",
    "fig_IP_constrained_p2": "IP_p2_a058",
    "fig_H01_constrained_p1": "fig_H01_p1_a058",
    "fig_H01_constrained_p2": "H01_p2_a058",
    "fig_H01_constrained_p2_alpha1_sub1": "H01_p2_alpha1_a058",
    "fig_H01_constrained_p2_alpha1_sub2": "H01_p2_alpha1_a058",
    "fig_IP_constrained_2d_p1": "fig_IP_2d_p1",
    "fig_IP_constrained_2d_p2": "fig_IP_2d_p2",
}


def preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name].replace()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}") from None


# ---------------------------------------------------------------------------
# metrics


@dataclass
class OvershootMetric:
    """Largest excursion of an approximation beyond the target's range.

    ``overshoot`` is ``max (phi_h - sup phi)_+`` and ``undershoot`` is
    ``max (inf phi - phi_h)_+`` over the sample grid; ``value`` is the larger
    of the two and ``relative`` divides it by ``sup phi - inf phi``.
    """

    overshoot: float
    undershoot: float
    value: float
    relative: float
    samples: int

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def target_bounds(target, space, samples: int = 200) -> tuple[float, float]:
    """Range of the target: exact for tanh layers, sampled otherwise."""
    if isinstance(target, TanhLayer):
        return -1.0, 1.0
    v = np.concatenate([target.value(space.element_sample_points(e, samples)) for e in range(space.n_el)])
    return float(v.min()), float(v.max())


def overshoot(fn: DofFunction, bounds: tuple[float, float], samples: int | None = None) -> OvershootMetric:
    """Overshoot metric of ``fn`` on a closed uniform grid per element.

    Parameters
    ----------
    fn : DofFunction
    bounds : (float, float)
        ``(inf phi, sup phi)``.
    samples : int, optional
        Points per element and direction, at least 50. Defaults to 200 in 1D
        and 50 in 2D.
    """
    space = fn.space
    n = (200 if space.dim == 1 else 50) if samples is None else int(samples)
    if n < 50:
        raise ValueError(f"overshoot needs at least 50 samples per element, got {n}")
    lo, hi = bounds
    over = under = 0.0
    for e in range(space.n_el):
        v, _ = fn.on_element(e, space.element_sample_points(e, n))
        over = max(over, float(np.max(v - hi)))
        under = max(under, float(np.max(lo - v)))
    value = max(over, under)
    span = hi - lo
    return OvershootMetric(over, under, value, value / span if span > 0 else math.inf, n)


def layer_offset(fn: DofFunction, target, samples: int = 200) -> float:
    """Largest mean deviation ``|mean(phi_h - phi)|`` away from the layer.

    Only elements that are more than one element width from the layer count,
    which is where a constrained IP approximation is off by a piecewise
    constant.
    """
    layer = getattr(target, "layer", None)
    if layer is None:
        raise ValueError("target has no layer")
    space = fn.space
    worst = 0.0
    for e in range(space.n_el):
        pts = space.element_sample_points(e, samples)
        dist = np.abs(pts @ layer.normal - layer.offset)
        if dist.min() <= space.h:
            continue
        dev = fn.on_element(e, pts)[0] - target.value(pts)
        worst = max(worst, abs(float(np.mean(dev))))
    return worst


def sample_solution(fn: DofFunction, target, samples: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Points, target values and approximation values on a per-element grid.

    Element boundaries appear once per adjacent element, so both one-sided
    values of discontinuous functions are kept.
    """
    if samples < 2:
        raise ValueError(f"need at least 2 samples per element, got {samples}")
    space = fn.space
    pts, vals = [], []
    for e in range(space.n_el):
        x = space.element_sample_points(e, samples)
        pts.append(x)
        vals.append(fn.on_element(e, x)[0])
    pts = np.concatenate(pts)
    return pts, np.asarray(target.value(pts), dtype=float), np.concatenate(vals)


# ---------------------------------------------------------------------------
# results


@dataclass
class RunResult:
    """Everything a run produces except timings.

    Timings are kept in ``timings`` but left out of :meth:`to_dict`, so the
    JSON form is a deterministic function of config and seed.
    """

    config: dict
    status: str
    method: str
    points: np.ndarray
    phi: np.ndarray
    phi_h: np.ndarray
    coeffs: np.ndarray
    subdomains: list
    G: np.ndarray
    Vgap: np.ndarray
    TV: np.ndarray
    TV_target: np.ndarray
    lam: np.ndarray
    overshoot: dict
    objective: float
    residuals: dict = field(default_factory=dict)
    baseline: dict = field(default_factory=dict)
    flat: list = field(default_factory=list)
    starts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.config.get("name", "custom")

    @property
    def exit_code(self) -> int:
        return 0 if self.status in ("converged", "probe") else 2

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "status": self.status,
            "method": self.method,
            "objective": self.objective,
            "overshoot": self.overshoot,
            "baseline": self.baseline,
            "residuals": self.residuals,
            "subdomains": [[int(e) for e in b] for b in self.subdomains],
            "G": self.G.tolist(),
            "Vgap": self.Vgap.tolist(),
            "TV": self.TV.tolist(),
            "TV_target": self.TV_target.tolist(),
            "lambda": self.lam.tolist(),
            "flat": [bool(f) for f in self.flat],
            "starts": self.starts,
            "coeffs": self.coeffs.tolist(),
            "points": self.points.tolist(),
            "phi": self.phi.tolist(),
            "phi_h": self.phi_h.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        arr = lambda k: np.asarray(d[k], dtype=float)
        return cls(
            config=d["config"], status=d["status"], method=d["method"],
            points=np.asarray(d["points"], dtype=float).reshape(len(d["phi"]), -1),
            phi=arr("phi"), phi_h=arr("phi_h"), coeffs=arr("coeffs"),
            subdomains=d["subdomains"], G=arr("G"), Vgap=arr("Vgap"), TV=arr("TV"),
            TV_target=arr("TV_target"), lam=arr("lambda"), overshoot=d["overshoot"],
            objective=d["objective"], residuals=d["residuals"], baseline=d["baseline"],
            flat=d["flat"], starts=d["starts"],
        )


def _build(cfg: ExperimentConfig):
    if cfg.dim == 1:
        space = make_space(cfg.degree, cfg.regularity, cfg.n_el)
        target = tanh_1d(cfg.a, cfg.eps_layer)
    else:
        space = make_space(cfg.degree, cfg.regularity, (cfg.n_el, cfg.n_el))
        target = tanh_2d(cfg.eps_layer)
    penalty = None
    if cfg.inner == "IP":
        penalty = cfg.penalty_scale * penalty_default(cfg.degree, space.h, cfg.dim)
    problem = ProjectionProblem(space, target, InnerProduct(cfg.inner, penalty), cfg.quad_order)
    return space, target, problem


def _partition(space, cfg):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_partition(space, cfg.partition, cfg.shift)


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Run one experiment.

    Unconstrained runs solve the plain best-approximation problem; constrained
    runs also solve it as a baseline and report its overshoot. Solver
    failures are recorded in ``status`` rather than raised.
    """
    t_start = time.perf_counter()
    space, target, problem = _build(cfg)
    partition = _partition(space, cfg)
    bounds = target_bounds(target, space)
    timings = {}
    baseline, residuals, flat, starts = {}, {}, [], []
    lam = np.zeros(len(partition))

    system = assemble(problem)
    t0 = time.perf_counter()
    c_unc = system.solve()
    timings["unconstrained"] = time.perf_counter() - t0
    fn = DofFunction(space, c_unc)
    objective = system.objective(c_unc)
    status, method = "converged", "unconstrained"

    if cfg.probe:
        report = feasibility_probe(space, target, partition, cfg.probe, cfg.inner, cfg.feas_tol)
        fn, status, method = report.fn, "probe", report.candidate
        objective = system.objective(fn.coeffs)
    elif cfg.constrained:
        baseline = {"overshoot": overshoot(fn, bounds, cfg.metric_samples).as_dict(), "objective": objective}
        cp = ConstrainedProblem(problem, partition, tuple(cfg.eps_schedule), cfg.feas_tol, cfg.max_outer,
                                cfg.multistart, cfg.seed, cfg.flat_tol, cfg.constraint, cfg.stat_tol)
        t0 = time.perf_counter()
        sol = solve_constrained(cp)
        timings["constrained"] = time.perf_counter() - t0
        fn, lam, status, method = sol.fn, sol.lam, sol.status, sol.method
        objective, residuals = sol.objective, sol.residuals.as_dict()
        flat, starts = [bool(f) for f in sol.flat], sol.starts

    ev = evaluate(fn, target, partition, q=cfg.quad_order)
    pts, phi, phi_h = sample_solution(fn, target, cfg.n_samples)
    metric = overshoot(fn, bounds, cfg.metric_samples)
    timings["total"] = time.perf_counter() - t_start
    return RunResult(
        config=cfg.to_dict(), status=status, method=method, points=pts, phi=phi, phi_h=phi_h,
        coeffs=np.asarray(fn.coeffs, dtype=float), subdomains=partition.as_lists(), G=ev.G,
        Vgap=ev.Vgap, TV=ev.TV, TV_target=ev.TV_target, lam=np.asarray(lam, dtype=float),
        overshoot=metric.as_dict(), objective=float(objective), residuals=residuals,
        baseline=baseline, flat=flat, starts=starts, timings=timings,
    )


def run_batch(configs, workers: int | None = None) -> list[RunResult]:
    """Run independent experiments in parallel processes, keeping input order.

    ``workers=1`` runs them in this process, which is also what happens for a
    single config.
    """
    configs = list(configs)
    if workers == 1 or len(configs) <= 1:
        return [run_experiment(c) for c in configs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_experiment, configs))


# ---------------------------------------------------------------------------
# output


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, FLOAT_FMT)


def _json(obj, indent: int) -> str:
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {_json(v, indent + 2)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # numeric rows stay on one line
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_json(v, indent) for v in obj) + "]"
        return "[\n" + ",\n".join(f"{pad}  {_json(v, indent + 2)}" for v in obj) + f"\n{pad}]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def format_json(result: RunResult) -> str:
    """JSON text with fixed key order and 17 significant digits."""
    return _json(result.to_dict(), 0) + "\n"


def format_samples_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    d = result.points.shape[1]
    w.writerow(["x", "y"][:d] + ["phi", "phi_h"])
    for p, a, b in zip(result.points, result.phi, result.phi_h):
        w.writerow([_fmt(v) for v in p] + [_fmt(a), _fmt(b)])
    return buf.getvalue()


def format_subdomains_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["subdomain", "G", "V", "TV", "lambda"])
    for j in range(len(result.G)):
        w.writerow([j, _fmt(result.G[j]), _fmt(result.Vgap[j]), _fmt(result.TV[j]), _fmt(result.lam[j])])
    return buf.getvalue()


def emit(result: RunResult, out_dir, fmt: str = "json") -> list[Path]:
    """Write a result under ``out_dir`` and return the written paths.

    ``json`` writes ``<name>.json``; ``csv`` writes ``<name>_samples.csv``
    (``x[,y],phi,phi_h``) and ``<name>_subdomains.csv``
    (``subdomain,G,V,TV,lambda``). Timings always go to a separate
    ``<name>_timings.json`` so the main files stay reproducible.
    """
    if fmt not in ("json", "csv"):
        raise ValueError(f"unknown format {fmt!r}; expected 'json' or 'csv'")
    if result.points.shape[0] == 0:
        raise ValueError("result has no sample points")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / result.name
    files = {}
    if fmt == "json":
        files[stem.with_name(stem.name + ".json")] = format_json(result)
    else:
        files[stem.with_name(stem.name + "_samples.csv")] = format_samples_csv(result)
        files[stem.with_name(stem.name + "_subdomains.csv")] = format_subdomains_csv(result)
    files[stem.with_name(stem.name + "_timings.json")] = json.dumps(result.timings, indent=2) + "\n"
    for path, text in files.items():
        path.write_text(text)
    return list(files)


def load_result(path) -> RunResult:
    """Parse a JSON result written by :func:`emit`."""
    return RunResult.from_dict(json.loads(Path(path).read_text()))
