"""Published reference scenarios with their comparison values and tolerances."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .analysis import RunResult, run_problem
from .config import ProblemConfig, parse_config

BENCHMARKS = ("table1", "table2", "table3", "table4", "fig11", "fig13")

TABLE1_P = [17.8, 38.3, 63.4, 95.0, 134.9, 184.0, 245.0, 318.0, 402.0]
TABLE1_W = [0.2367, 0.4693, 0.6910, 0.9025, 1.1061, 1.3009, 1.4928, 1.6786, 1.8555]
TABLE1_S = [2.5626, 5.3273, 8.0998, 10.8273, 13.5223, 16.1806, 18.9069, 21.6797, 24.4700]

TABLE2_P = [1, 2, 3, 6, 10, 15]
TABLE2_W = [0.1669, 0.3208, 0.4562, 0.7671, 1.0487, 1.2989]
KIRCHHOFF_LINEAR = 0.1706  # 12 (1 - nu^2) / 64 at nu = 0.3

TABLE3_P = [50, 100, 150, 200, 250]
TABLE3_W = {
    40: [0.2936, 0.4643, 0.5798, 0.6683, 0.7407],
    20: [0.3126, 0.4807, 0.5928, 0.6784, 0.7486],
    10: [0.3609, 0.5179, 0.6213, 0.7005, 0.7659],
}

TABLE4_P = [50, 100, 200, 300]
TABLE4 = {
    "0/90/90/0": {
        4: ([0.947, 1.894, 3.787, 5.681], [0.7198, 1.1214, 1.6555, 2.0447]),
        10: ([0.357, 0.715, 1.430, 2.144], [0.3474, 0.6501, 1.1148, 1.4612]),
        20: ([0.253, 0.506, 1.012, 1.518], [0.2504, 0.4872, 0.8960, 1.2255]),
        100: ([0.217, 0.434, 0.868, 1.303], [0.2159, 0.4243, 0.7993, 1.1146]),
    },
    "0/90/0": {
        4: ([0.961, 1.922, 3.844, 5.765], [0.7262, 1.1284, 1.6606, 2.0475]),
        10: ([0.356, 0.712, 1.425, 2.137], [0.3462, 0.6478, 1.1116, 1.4586]),
        20: ([0.252, 0.504, 1.008, 1.513], [0.2494, 0.4849, 0.8921, 1.2190]),
        100: ([0.217, 0.434, 0.868, 1.303], [0.2158, 0.4238, 0.7969, 1.1101]),
    },
}

FIG13_HISTORIES = ("step", "triangular", "sine", "blast")


@dataclass
class Check:
    case: str
    label: str
    computed: float
    expected: float
    tol: float | None = None   # relative tolerance; None means "computed < expected"

    @property
    def rel_error(self) -> float:
        return abs(self.computed - self.expected) / abs(self.expected)

    @property
    def passed(self) -> bool:
        if self.tol is None:
            return bool(self.computed < self.expected)
        return bool(self.rel_error <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.tol is None:
            return "%-28s %-22s %12.6g  <  %12.6g  %s" % (self.case, self.label, self.computed,
                                                          self.expected, status)
        return "%-28s %-22s %12.6g  vs %12.6g  err %6.2f%% (tol %.1f%%)  %s" % (
            self.case, self.label, self.computed, self.expected, 100 * self.rel_error,
            100 * self.tol, status)


@dataclass
class BenchResult:
    name: str
    checks: list = field(default_factory=list)
    columns: tuple = ()
    rows: list = field(default_factory=list)
    runs: dict = field(default_factory=dict)
    complete: bool = True
    message: str = ""
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return self.complete and all(c.passed for c in self.checks)

    def report(self) -> str:
        lines = ["benchmark %s" % self.name]
        lines += [c.line() for c in self.checks]
        if not self.complete:
            lines.append("incomplete: %s" % self.message)
        n_ok = sum(c.passed for c in self.checks)
        lines.append("%d/%d checks passed, %.1f s, overall %s"
                     % (n_ok, len(self.checks), self.elapsed, "PASS" if self.passed else "FAIL"))
        return "\n".join(lines) + "\n"


# --- scenario configs -----------------------------------------------------

def _cfg(mesh, **kw) -> ProblemConfig:
    if mesh is not None:
        kw["mesh"] = {"elements": [mesh, mesh], "degree": 3}
    return parse_config(kw)


def table1_config(mesh=None, levels=TABLE1_P) -> ProblemConfig:
    return _cfg(mesh, name="table1", analysis="nonlinear-static",
                geometry={"shape": "rectangle", "Lx": 1.0},
                thickness=0.01, materials={"iso": {"E": 1.0, "nu": 0.316}},
                layup={"angles": [0], "materials": "iso"}, boundary={"preset": "CCCC"},
                load={"kind": "uniform", "levels": list(levels)},
                normalization={"kind": "isotropic-table1"})


def table2_config(mesh=None, analysis="nonlinear-static") -> ProblemConfig:
    return _cfg(mesh, name="table2", analysis=analysis,
                geometry={"shape": "circle", "R": 1.0},
                thickness=0.02, materials={"iso": {"E": 1e7, "nu": 0.3}},
                layup={"angles": [0], "materials": "iso"}, boundary={"preset": "CCCC"},
                load={"kind": "uniform", "levels": TABLE2_P},
                normalization={"kind": "circular-table2"})


def table3_config(ratio, mesh=None, method="newton", tol=0.01) -> ProblemConfig:
    return _cfg(mesh, name="table3-L/h=%g" % ratio, analysis="nonlinear-static",
                geometry={"shape": "rectangle", "Lx": 1.0}, thickness=1.0 / ratio,
                layup={"angles": [0, 90, 90, 0], "materials": "III"},
                boundary={"preset": "SSSS2"},
                load={"kind": "uniform", "levels": TABLE3_P},
                solver={"method": method, "tol": tol},
                normalization={"kind": "composite-tables"})


def table4_config(layup, ratio, analysis, mesh=None) -> ProblemConfig:
    angles = [float(a) for a in layup.split("/")]
    return _cfg(mesh, name="table4-[%s]-L/h=%g" % (layup, ratio), analysis=analysis,
                geometry={"shape": "rectangle", "Lx": 1.0}, thickness=1.0 / ratio,
                layup={"angles": angles, "materials": "III"}, boundary={"preset": "SSSS"},
                load={"kind": "sinusoidal", "levels": TABLE4_P},
                normalization={"kind": "composite-tables"})


def fig11_config(analysis, mesh=None) -> ProblemConfig:
    return _cfg(mesh, name="fig11-" + analysis, analysis=analysis,
                geometry={"shape": "rectangle", "Lx": 0.25}, thickness=0.005,
                layup={"angles": [0], "materials": "V"}, boundary={"preset": "SSSS"},
                load={"kind": "uniform", "levels": [1e6], "level_units": "q0",
                      "history": {"kind": "step"}},
                solver={"method": "picard", "tol": 0.01},
                time={"periods": 1.2, "steps_per_period": 100},
                normalization={"kind": "composite-tables"})


def fig13_config(history, analysis, mesh=None) -> ProblemConfig:
    h = 0.1526
    return _cfg(mesh, name="fig13-%s-%s" % (history, analysis), analysis=analysis,
                geometry={"shape": "rectangle", "Lx": 5 * h}, thickness=h,
                layup={"angles": [0, 90, 0], "materials": "VI"}, boundary={"preset": "SSSS"},
                load={"kind": "sinusoidal", "levels": [0.689e9], "level_units": "q0",
                      "history": {"kind": history}},
                solver={"method": "picard", "tol": 0.01},
                time={"periods": 2.0, "steps_per_period": 100},
                normalization={"kind": "composite-tables"})


def first_peak(t: np.ndarray, w: np.ndarray) -> tuple:
    """Time and value of the first local maximum of ``w`` (else the global one)."""
    d = np.diff(w)
    idx = np.nonzero((d[:-1] > 0) & (d[1:] <= 0))[0]
    i = int(idx[0] + 1) if idx.size else int(np.argmax(w))
    return float(t[i]), float(w[i])


# --- runners --------------------------------------------------------------

def _merge(bench: BenchResult, key: str, res: RunResult) -> None:
    bench.runs[key] = {"iterations": res.iterations, "complete": res.complete,
                       "message": res.message, "meta": res.meta}
    if not res.complete:
        bench.complete = False
        bench.message = "%s: %s" % (key, res.message)


def _static_rows(bench, case, res, refs, col, tol):
    for row, ref in zip(res.rows, refs):
        P, val = row[0], row[col]
        label = "%s P=%g" % (STATIC_LABELS[col], P)
        chk = Check(case, label, val, ref, tol)
        bench.checks.append(chk)
        bench.rows.append((case, P, STATIC_LABELS[col], val, ref, chk.rel_error, tol,
                           int(chk.passed)))


STATIC_LABELS = {1: "w_bar", 2: "sigma_x_bar"}
TABLE_COLUMNS = ("case", "P_bar", "quantity", "computed", "published", "rel_error", "tolerance",
                 "passed")


def bench_table1(mesh=None) -> BenchResult:
    b = BenchResult("table1", columns=TABLE_COLUMNS)
    res = run_problem(table1_config(mesh))
    _merge(b, "table1", res)
    _static_rows(b, "table1", res, TABLE1_W, 1, 0.01)
    _static_rows(b, "table1", res, TABLE1_S, 2, 0.025)
    return b


def bench_table2(mesh=None) -> BenchResult:
    b = BenchResult("table2", columns=TABLE_COLUMNS)
    res = run_problem(table2_config(mesh))
    _merge(b, "table2", res)
    _static_rows(b, "table2", res, TABLE2_W, 1, 0.015)
    if res.rows:
        b.checks.append(Check("table2", "w_bar P=1 < linear", res.rows[0][1], KIRCHHOFF_LINEAR))
    return b


def bench_table3(mesh=None) -> BenchResult:
    b = BenchResult("table3", columns=TABLE_COLUMNS)
    for ratio in (10, 20, 40):
        cfg = table3_config(ratio, mesh)
        res = run_problem(cfg)
        _merge(b, cfg.name, res)
        _static_rows(b, cfg.name, res, TABLE3_W[ratio], 1, 0.02)
    return b


def bench_table4(mesh=None) -> BenchResult:
    b = BenchResult("table4", columns=TABLE_COLUMNS)
    for layup, by_ratio in TABLE4.items():
        for ratio, (lin, nonlin) in by_ratio.items():
            for analysis, refs in (("linear-static", lin), ("nonlinear-static", nonlin)):
                cfg = table4_config(layup, ratio, analysis, mesh)
                case = "%s %s" % (cfg.name, analysis.split("-")[0])
                res = run_problem(cfg)
                _merge(b, case, res)
                _static_rows(b, case, res, refs, 1, 0.02)
    return b


def _transient_pair(b, make_cfg, tag):
    runs = {}
    for analysis in ("linear-transient", "nonlinear-transient"):
        cfg = make_cfg(analysis)
        res = run_problem(cfg)
        _merge(b, cfg.name, res)
        runs[analysis] = res
    lin, nl = runs["linear-transient"], runs["nonlinear-transient"]
    T1 = lin.meta["T1"]
    t_l, w_l = np.array([r[0] for r in lin.rows]), np.array([r[1] for r in lin.rows])
    t_n, w_n = np.array([r[0] for r in nl.rows]), np.array([r[1] for r in nl.rows])
    tl, pl = first_peak(t_l, w_l)
    tn, pn = first_peak(t_n, w_n)
    b.checks.append(Check(tag, "peak nonlinear<linear", pn, pl))
    b.checks.append(Check(tag, "t_peak/T1 nonlin<lin", tn / T1, tl / T1))
    return t_l, w_l, w_n


def bench_fig11(mesh=None) -> BenchResult:
    b = BenchResult("fig11", columns=("t", "w_bar_linear", "w_bar_nonlinear"))
    t, wl, wn = _transient_pair(b, lambda a: fig11_config(a, mesh), "fig11")
    n = min(len(wl), len(wn))
    b.rows = [(float(t[i]), float(wl[i]), float(wn[i])) for i in range(n)]
    return b


def bench_fig13(mesh=None) -> BenchResult:
    cols = ["t"]
    series = []
    b = BenchResult("fig13")
    t = None
    for hist in FIG13_HISTORIES:
        tt, wl, wn = _transient_pair(b, lambda a, h=hist: fig13_config(h, a, mesh),
                                     "fig13-" + hist)
        t = tt if t is None else t
        cols += ["w_bar_%s_linear" % hist, "w_bar_%s_nonlinear" % hist]
        series += [wl, wn]
    n = min(len(s) for s in series)
    b.columns = tuple(cols)
    b.rows = [(float(t[i]),) + tuple(float(s[i]) for s in series) for i in range(n)]
    return b


RUNNERS = {"table1": bench_table1, "table2": bench_table2, "table3": bench_table3,
           "table4": bench_table4, "fig11": bench_fig11, "fig13": bench_fig13}


def run_benchmark(name: str, mesh: int | None = None) -> BenchResult:
    if name not in RUNNERS:
        raise KeyError(name)
    t = time.perf_counter()
    res = RUNNERS[name](mesh)
    res.elapsed = time.perf_counter() - t
    return res
