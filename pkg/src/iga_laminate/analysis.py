"""Build a plate model from a configuration, run it and write result files."""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import LoadHistory, LoadSpec, PlateModel, boundary_conditions
from .config import SCHEMA_VERSION, ProblemConfig, config_hash
from .laminate import Laminate
from .nurbs import elevate_degree, h_refine, make_circle_patch, make_rectangle_patch
from .postproc import NormalizationRule, point_displacement, point_stress
from .solvers import (IterationConfig, NewmarkConfig, NonConvergenceError, fundamental_period,
                      load_sweep, newmark_transient, solve_linear_static)

logger = logging.getLogger(__name__)

CSV_VERSION = 1
STATIC_COLUMNS = ("P_bar", "w_bar", "sigma_x_bar")
TRANSIENT_COLUMNS = ("t", "w_bar", "sigma_x_bar")


@dataclass
class Problem:
    config: ProblemConfig
    patch: object
    laminate: Laminate
    rule: NormalizationRule
    point: tuple
    z: float

    def model(self, load: LoadSpec, nonlinear: bool | None = None) -> PlateModel:
        cfg = self.config
        circ = cfg.geometry.shape == "circle"
        bcs = boundary_conditions(self.patch, cfg.boundary.preset, cfg.boundary.edges,
                                  cfg.boundary.clamp_ring, circular=circ)
        nl = cfg.nonlinear if nonlinear is None else nonlinear
        return PlateModel(self.patch, self.laminate, bcs, load, nonlinear=nl)

    def load_spec(self, q0: float = 1.0, history: LoadHistory | None = None) -> LoadSpec:
        ld, g = self.config.load, self.config.geometry
        kw = {}
        if ld.kind == "sinusoidal":
            kw = {"a": ld.a or g.Lx, "b": ld.b or g.Ly}
        return LoadSpec(kind=ld.kind, q0=q0, history=history or LoadHistory(), **kw)

    def q0_of(self, level: float) -> float:
        if self.config.load.level_units == "q0":
            return level
        return self.rule.load_inverse(level)

    def evaluate(self, q: np.ndarray, q0: float) -> tuple:
        """Normalized ``(w, sigma_x)`` at the output point."""
        x, y = self.point
        w = point_displacement(q, self.patch, x, y)[2]
        s = point_stress(q, self.patch, self.laminate, x, y, self.z)[0]
        if q0 == 0.0:
            return 0.0, 0.0
        return self.rule.deflection(w, q0), self.rule.stress(s, q0)


def default_rule(cfg: ProblemConfig) -> NormalizationRule:
    n = cfg.normalization
    laminas = cfg.laminas()
    kind = n.kind
    if kind is None:
        if cfg.geometry.shape == "circle":
            kind = "circular-table2"
        elif all(m.E1 == m.E2 for m in laminas):
            kind = "isotropic-table1"
        else:
            kind = "composite-tables"
    return NormalizationRule(kind, n.length or cfg.geometry.length, cfg.thickness,
                             n.modulus or laminas[0].E2)


def build_problem(cfg: ProblemConfig) -> Problem:
    p = cfg.mesh.degree
    ne_u, ne_v = cfg.mesh.elements
    g = cfg.geometry
    if g.shape == "rectangle":
        patch = make_rectangle_patch(g.Lx, g.Ly, p)
        point = (g.Lx / 2, g.Ly / 2)
    else:
        patch = make_circle_patch(g.R, 2)
        if p > 2:
            patch = elevate_degree(patch, p)
        point = (0.0, 0.0)
    patch = h_refine(patch, ne_u, ne_v)
    lam = Laminate.from_angles(cfg.layup.angles, cfg.laminas(), cfg.thickness, cfg.layup.fractions)
    if cfg.output.point is not None:
        point = tuple(cfg.output.point)
    z = cfg.thickness / 2 if cfg.output.z is None else cfg.output.z
    return Problem(cfg, patch, lam, default_rule(cfg), point, z)


def iteration_config(cfg: ProblemConfig) -> IterationConfig:
    s = cfg.solver
    return IterationConfig(s.method, s.tol, s.max_iter, s.n_load_steps, s.max_halvings,
                           s.relaxation)


@dataclass
class RunResult:
    columns: tuple
    rows: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    complete: bool = True
    message: str = ""
    meta: dict = field(default_factory=dict)
    states: list = field(default_factory=list)


def run_static(problem: Problem, keep_states: bool = False) -> RunResult:
    cfg = problem.config
    levels = list(cfg.load.levels) or [0.0]
    q0s = [problem.q0_of(lv) for lv in levels]
    model = problem.model(problem.load_spec(1.0))
    res = RunResult(STATIC_COLUMNS)
    if cfg.nonlinear:
        path = load_sweep(model, q0s, iteration_config(cfg))
        states = [(pt.q, pt.iterations) for pt in path.points]
        res.complete, res.message = path.complete, path.message
    else:
        F = model.external_force()
        states = [(solve_linear_static(model, F * q0), 1) for q0 in q0s]
    for (q, n), lv, q0 in zip(states, levels, q0s):
        P = problem.rule.load(q0) if cfg.load.level_units == "q0" else lv
        res.rows.append((P,) + problem.evaluate(q, q0))
        res.iterations.append(int(n))
        if keep_states:
            res.states.append(q)
    return res


def run_transient(problem: Problem, keep_states: bool = False) -> RunResult:
    cfg = problem.config
    level = cfg.load.levels[0] if cfg.load.levels else 0.0
    q0 = problem.q0_of(level)
    T1 = fundamental_period(problem.model(problem.load_spec(q0), nonlinear=False))
    h = cfg.load.history
    hist = LoadHistory(h.kind, h.t1 or T1, h.alpha or 2.0 / T1)
    model = problem.model(problem.load_spec(q0, hist))
    tc = cfg.time
    dt = tc.dt or T1 / tc.steps_per_period
    t_end = tc.t_end or tc.periods * T1
    nm = NewmarkConfig(dt, t_end, tc.beta, tc.gamma)
    it = iteration_config(cfg)
    res = RunResult(TRANSIENT_COLUMNS, meta={"T1": T1, "dt": dt, "t_end": t_end,
                                              "history": {"kind": hist.kind, "t1": hist.t1,
                                                          "alpha": hist.alpha}})
    try:
        tr = newmark_transient(model, nm, it)
    except NonConvergenceError as exc:
        tr = exc.state
        res.complete, res.message = False, str(exc)
        logger.warning("transient run stopped: %s", exc)
    for t, q, n in zip(tr.times, tr.q, tr.iterations):
        res.rows.append((float(t),) + problem.evaluate(q, q0))
        res.iterations.append(int(n))
        if keep_states:
            res.states.append(q)
    return res


def run_problem(cfg: ProblemConfig, keep_states: bool = False) -> RunResult:
    t = time.perf_counter()
    problem = build_problem(cfg)
    res = (run_transient if cfg.transient else run_static)(problem, keep_states)
    res.meta["normalization"] = {"kind": problem.rule.kind, "length": problem.rule.length,
                                 "h": problem.rule.h, "modulus": problem.rule.modulus}
    res.meta["point"] = list(problem.point)
    res.meta["z"] = problem.z
    res.meta["ndof"] = problem.patch.n_points * 5
    res.meta["elapsed_s"] = time.perf_counter() - t
    return res


# --- writers --------------------------------------------------------------

def _fmt(v) -> str:
    return "%.9g" % v if isinstance(v, float) else str(v)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(float(v)) if isinstance(v, (float, np.floating)) else _fmt(v)
                    for v in row])
    return buf.getvalue()


def write_csv(path: Path, columns, rows) -> None:
    Path(path).write_text(csv_text(columns, rows), encoding="utf-8")


def archive(cfg: ProblemConfig | None, res: RunResult, extra: dict | None = None) -> dict:
    out = {
        "csv_version": CSV_VERSION,
        "schema_version": SCHEMA_VERSION,
        "columns": list(res.columns),
        "rows": [[float(v) for v in r] for r in res.rows],
        "iterations": list(res.iterations),
        "complete": res.complete,
        "message": res.message,
        "meta": {k: v for k, v in res.meta.items() if k != "elapsed_s"},
    }
    if cfg is not None:
        out.update({
            "name": cfg.name,
            "config_hash": config_hash(cfg),
            "config": cfg.model_dump(mode="json"),
            "mesh": {"elements": list(cfg.mesh.elements), "degree": cfg.mesh.degree},
            "tolerances": cfg.solver.model_dump(mode="json"),
        })
    if extra:
        out.update(extra)
    return out


def write_json(path: Path, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_outputs(out_dir: Path, cfg: ProblemConfig | None, res: RunResult,
                  extra: dict | None = None) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "results.csv", res.columns, res.rows)
    write_json(out_dir / "results.json", archive(cfg, res, extra))
