"""Monte Carlo size and power experiments.

Every replication draws from its own Philox stream whose key is derived from
``(root_seed, model, rho, T, delta, replication)``, so a cell's results do
not depend on the order in which replications run, on the number of worker
processes, or on which other cells share the run.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateError
from .har_tests import critical_value, dm_test, gr_test, t_test_regression
from .lrv import LrvKind, parse_kind
from .sls_sim import MODELS, DgpId, ForecastBreakdownData, LossDifferentialData, make_dgp

SCHEMA_VERSION = 1
NORMAL_DRAW = "normal_draw"  # debug estimator: statistic is a N(0, 1) draw
MAX_ERROR_SHARE = 0.01


@dataclass(frozen=True)
class Design:
    model: str
    rho: float = 0.4

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")

    @property
    def label(self) -> str:
        return f"M1(rho={self.rho:g})" if self.model == "M1" else self.model


@dataclass
class McConfig:
    models: list[Design]
    estimators: list[str]
    T_grid: list[int]
    delta_grid: list[float]
    replications: int
    root_seed: int = 0
    alpha: float = 0.05
    demean: bool = False

    def __post_init__(self) -> None:
        self.models = [m if isinstance(m, Design) else Design(**m) for m in self.models]
        self.estimators = [_estimator_name(e) for e in self.estimators]
        self.T_grid = [int(t) for t in self.T_grid]
        self.delta_grid = [float(d) for d in self.delta_grid]
        if self.replications < 100:
            raise ValueError("replications must be at least 100")
        if not (self.models and self.estimators and self.T_grid and self.delta_grid):
            raise ValueError("model, estimator, T and delta grids must be nonempty")
        if not 0.0 < self.alpha <= 0.5:
            raise ValueError("alpha must lie in (0, 0.5]")

    @classmethod
    def from_dict(cls, d: dict) -> "McConfig":
        return cls(**d)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["models"] = [asdict(m) for m in self.models]
        return out


def _estimator_name(e: str) -> str:
    return NORMAL_DRAW if e == NORMAL_DRAW else parse_kind(e).value


@dataclass
class McCell:
    model: str
    estimator: str
    T: int
    delta: float
    replications: int
    rejections: int
    errors: int

    @property
    def valid(self) -> int:
        return self.replications - self.errors

    @property
    def rate(self) -> float:
        return self.rejections / self.valid if self.valid else float("nan")

    @property
    def mc_se(self) -> float:
        r = self.rate
        return math.sqrt(r * (1.0 - r) / self.valid) if self.valid else float("nan")

    @property
    def rate_errors_as_nonrejections(self) -> float:
        """Diagnostic only: errored replications counted as non-rejections."""
        return self.rejections / self.replications

    @property
    def failed(self) -> bool:
        return self.errors > MAX_ERROR_SHARE * self.replications

    def key(self) -> tuple:
        return (self.model, self.estimator, self.T, self.delta)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "estimator": self.estimator,
            "T": self.T,
            "delta": self.delta,
            "replications": self.replications,
            "rejections": self.rejections,
            "errors": self.errors,
            "rate": self.rate,
            "mc_se": self.mc_se,
            "diag_rate_errors_as_nonrejections": self.rate_errors_as_nonrejections,
        }


@dataclass
class McReport:
    cells: list[McCell]
    config: dict
    runtime_seconds: float = 0.0
    workers: int = 1

    def cell(self, model: str, estimator: str, T: int, delta: float = 0.0) -> McCell:
        est = _estimator_name(estimator)
        for c in self.cells:
            if c.key() == (model, est, T, float(delta)):
                return c
        raise KeyError((model, est, T, delta))

    @property
    def failed_cells(self) -> list[McCell]:
        return [c for c in self.cells if c.failed]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "cells": [c.to_dict() for c in self.cells],
            "runtime": {"seconds": self.runtime_seconds, "workers": self.workers},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = [c.to_dict() for c in self.cells]
        w = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["model"], lineterminator="\r\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d: dict) -> "McReport":
        cells = [McCell(c["model"], c["estimator"], c["T"], c["delta"], c["replications"], c["rejections"], c["errors"]) for c in d["cells"]]
        rt = d.get("runtime", {})
        return cls(cells, d.get("config", {}), rt.get("seconds", 0.0), rt.get("workers", 1))


class ExperimentError(RuntimeError):
    def __init__(self, message: str, report: McReport):
        super().__init__(message)
        self.report = report


# --------------------------------------------------------------------------
# replication kernel


_MODEL_CODE = {m: i + 1 for i, m in enumerate(MODELS)}


def replication_rng(root_seed: int, design: Design, T: int, delta: float, rep: int) -> np.random.Generator:
    """Counter-based stream of one replication."""
    entropy = [root_seed, _MODEL_CODE[design.model], int(round(design.rho * 1e6)), T, int(round(delta * 1e6)), rep]
    key = np.random.SeedSequence(entropy).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def run_replication(design: Design, T: int, delta: float, estimators, alpha: float, demean: bool, root_seed: int, rep: int):
    """Simulate one data set and test it with every estimator.

    Returns an int8 array per estimator: 1 reject, 0 accept, -1 error.
    """
    rng = replication_rng(root_seed, design, T, delta, rep)
    data = make_dgp(DgpId(design.model, T, delta=delta, rho=design.rho), rng)
    out = np.zeros(len(estimators), dtype=np.int8)
    z = None
    for i, est in enumerate(estimators):
        try:
            if est == NORMAL_DRAW:
                if z is None:
                    z = rng.standard_normal()
                out[i] = abs(z) > _normal_cv(alpha)
                continue
            kind = LrvKind(est)
            if isinstance(data, LossDifferentialData):
                res = dm_test(data.d, kind, alpha, demean=demean)
            elif isinstance(data, ForecastBreakdownData):
                res = gr_test(data.in_losses, data.out_losses, kind, alpha, demean=demean)
            else:
                res = t_test_regression(data.y, data.X, data.coef_index, kind, alpha, data.null_value)
            out[i] = res.reject
        except (DegenerateError, np.linalg.LinAlgError, FloatingPointError):
            out[i] = -1
    return out


def _normal_cv(alpha: float) -> float:
    return critical_value("Normal", alpha)


def _run_chunk(args):
    design, T, delta, estimators, alpha, demean, root_seed, reps = args
    return np.stack([run_replication(design, T, delta, estimators, alpha, demean, root_seed, r) for r in reps])


def resolve_workers(threads: int | None) -> int:
    env = os.environ.get("HARLRV_THREADS")
    if env:
        threads = int(env)
    return max(1, int(threads or 1))


def run_experiment(cfg: McConfig, threads: int | None = 1, strict: bool = True, chunk_size: int = 50) -> McReport:
    """Run every (model, T, delta) cell of ``cfg`` for all estimators.

    ``threads`` is the number of worker processes (``HARLRV_THREADS``
    overrides it). With ``strict`` a cell with more than 1% errored
    replications raises :class:`ExperimentError` carrying the report.
    """
    t0 = time.perf_counter()
    workers = resolve_workers(threads)
    R = cfg.replications
    jobs = []
    for design in cfg.models:
        for T in cfg.T_grid:
            for delta in cfg.delta_grid:
                for lo in range(0, R, chunk_size):
                    reps = range(lo, min(R, lo + chunk_size))
                    jobs.append((design, T, delta, tuple(cfg.estimators), cfg.alpha, cfg.demean, cfg.root_seed, reps))
    if workers == 1:
        results = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, jobs))

    by_cell: dict[tuple, list[np.ndarray]] = {}
    for job, res in zip(jobs, results):
        by_cell.setdefault((job[0], job[1], job[2]), []).append(res)
    cells = []
    for (design, T, delta), parts in by_cell.items():
        outcomes = np.vstack(parts)
        for i, est in enumerate(cfg.estimators):
            col = outcomes[:, i]
            cells.append(McCell(design.label, est, T, delta, R, int(np.sum(col == 1)), int(np.sum(col == -1))))
    report = McReport(cells, cfg.to_dict(), time.perf_counter() - t0, workers)
    if strict and report.failed_cells:
        bad = ", ".join(f"{c.model}/{c.estimator}/T={c.T}/delta={c.delta:g} ({c.errors} errors)" for c in report.failed_cells)
        raise ExperimentError(f"cells with more than 1% errored replications: {bad}", report)
    return report


# --------------------------------------------------------------------------
# published tables

TABLE_ESTIMATORS = {
    1: ["pwDK_1", "pwDK_SLS", "pwDK_SLS_mu", "A91", "pwA91", "NW87", "pwNW87", "KVB", "EWC"],
    2: ["pwDK_SLS", "pwDK_SLS_mu", "A91", "pwA91", "NW87", "pwNW87", "KVB", "EWC"],
}
TABLE_ESTIMATORS[3] = TABLE_ESTIMATORS[1]
TABLE_ESTIMATORS[4] = TABLE_ESTIMATORS[2]

# (design, T grid, delta grid) blocks of each table
TABLE_GRIDS = {
    1: [(Design("M1", 0.4), [200, 400], [0.0]), (Design("M1", 0.9), [200, 400], [0.0]), (Design("M2"), [200, 400], [0.0])],
    2: [(Design("M3"), [400, 800], [0.0]), (Design("M4"), [400, 800], [0.0])],
    3: [(Design("M1", 0.9), [400], [0.5, 1.0, 2.0]), (Design("M2"), [400], [0.1, 0.2, 0.4])],
    4: [(Design("M3"), [400], [0.5, 2.0, 6.0]), (Design("M4"), [400], [0.5, 1.0, 2.0])],
}


def _rows(estimators, columns, values):
    out = {}
    for est, row in zip(estimators, values):
        for col, v in zip(columns, row):
            out[(col[0], est, col[1], col[2])] = v
    return out


# Published rejection rates keyed by (model label, estimator, T, delta).
PUBLISHED_VALUES: dict[int, dict[tuple, float]] = {
    1: _rows(
        TABLE_ESTIMATORS[1],
        [("M1(rho=0.4)", 200, 0.0), ("M1(rho=0.4)", 400, 0.0), ("M1(rho=0.9)", 200, 0.0), ("M1(rho=0.9)", 400, 0.0), ("M2", 200, 0.0), ("M2", 400, 0.0)],
        [
            [0.054, 0.045, 0.085, 0.065, 0.061, 0.053],
            [0.052, 0.043, 0.086, 0.051, 0.065, 0.054],
            [0.049, 0.048, 0.103, 0.092, 0.063, 0.054],
            [0.082, 0.065, 0.162, 0.118, 0.095, 0.050],
            [0.063, 0.057, 0.104, 0.083, 0.077, 0.048],
            [0.114, 0.090, 0.351, 0.272, 0.138, 0.057],
            [0.075, 0.064, 0.110, 0.077, 0.090, 0.059],
            [0.058, 0.056, 0.091, 0.066, 0.069, 0.052],
            [0.058, 0.055, 0.149, 0.113, 0.071, 0.048],
        ],
    ),
    2: _rows(
        TABLE_ESTIMATORS[2],
        [("M3", 400, 0.0), ("M3", 800, 0.0), ("M4", 400, 0.0), ("M4", 800, 0.0)],
        [
            [0.065, 0.060, 0.071, 0.066],
            [0.065, 0.061, 0.077, 0.067],
            [0.082, 0.073, 0.000, 0.000],
            [0.080, 0.074, 0.005, 0.000],
            [0.080, 0.074, 0.000, 0.000],
            [0.078, 0.073, 0.000, 0.000],
            [0.002, 0.002, 0.074, 0.061],
            [0.080, 0.074, 0.018, 0.022],
        ],
    ),
    3: _rows(
        TABLE_ESTIMATORS[3],
        [("M1(rho=0.9)", 400, 0.5), ("M1(rho=0.9)", 400, 1.0), ("M1(rho=0.9)", 400, 2.0), ("M2", 400, 0.1), ("M2", 400, 0.2), ("M2", 400, 0.4)],
        [
            [0.344, 0.807, 1.000, 0.387, 0.889, 1.000],
            [0.378, 0.787, 1.000, 0.330, 0.813, 1.000],
            [0.463, 0.849, 1.000, 0.347, 0.833, 1.000],
            [0.430, 0.864, 1.000, 0.450, 0.922, 1.000],
            [0.360, 0.812, 1.000, 0.433, 0.911, 1.000],
            [0.630, 0.958, 1.000, 0.511, 0.938, 1.000],
            [0.363, 0.811, 1.000, 0.443, 0.911, 1.000],
            [0.274, 0.655, 0.980, 0.329, 0.758, 0.990],
            [0.436, 0.886, 1.000, 0.392, 0.890, 1.000],
        ],
    ),
    4: _rows(
        TABLE_ESTIMATORS[4],
        [("M3", 400, 0.5), ("M3", 400, 2.0), ("M3", 400, 6.0), ("M4", 400, 0.5), ("M4", 400, 1.0), ("M4", 400, 2.0)],
        [
            [0.495, 0.920, 1.000, 0.613, 0.923, 1.000],
            [0.498, 0.940, 1.000, 0.663, 0.957, 1.000],
            [0.158, 0.014, 0.000, 0.000, 0.043, 0.073],
            [0.224, 0.056, 0.000, 0.351, 0.942, 0.952],
            [0.179, 0.302, 0.587, 0.019, 0.821, 1.000],
            [0.137, 0.014, 0.000, 0.003, 0.278, 0.722],
            [0.059, 0.008, 0.000, 0.000, 0.000, 0.000],
            [0.087, 0.018, 0.000, 0.062, 0.000, 0.000],
        ],
    ),
}


def tolerance(table_id: int, published_value: float) -> float:
    """Size cells +-0.02; power cells +-0.03, or +-0.01 at 0 and 1."""
    if table_id in (1, 2):
        return 0.02
    return 0.01 if published_value in (0.0, 1.0) else 0.03


@dataclass
class ComparisonRow:
    table: int
    model: str
    estimator: str
    T: int
    delta: float
    published: float
    reproduced: float
    mc_se: float
    errors: int
    tolerance: float

    @property
    def diff(self) -> float:
        return abs(self.reproduced - self.published)

    @property
    def passed(self) -> bool:
        return self.diff <= self.tolerance + 1e-12

    def to_dict(self) -> dict:
        d = asdict(self)
        d["abs_diff"] = self.diff
        d["pass"] = self.passed
        return d


@dataclass
class TableComparison:
    table: int
    rows: list[ComparisonRow]
    report: McReport = field(repr=False)

    @property
    def pass_share(self) -> float:
        return sum(r.passed for r in self.rows) / len(self.rows)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "table": self.table,
            "pass_share": self.pass_share,
            "rows": [r.to_dict() for r in self.rows],
            "report": self.report.to_dict(),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = [r.to_dict() for r in self.rows]
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\r\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()

    def format(self) -> str:
        lines = [f"{'model':<12} {'estimator':<12} {'T':>4} {'delta':>5} {'pub':>6} {'ours':>6} {'diff':>6} {'tol':>5}  ok"]
        for r in self.rows:
            lines.append(
                f"{r.model:<12} {r.estimator:<12} {r.T:>4} {r.delta:>5g} {r.published:>6.3f} {r.reproduced:>6.3f} {r.diff:>6.3f} {r.tolerance:>5.2f}  {'yes' if r.passed else 'NO'}"
            )
        lines.append(f"cells within tolerance: {self.pass_share:.1%}")
        return "\n".join(lines)


def replicate_table(table_id: int, R: int = 5000, seed: int = 0, threads: int | None = 1, strict: bool = False) -> TableComparison:
    """Rerun the grid of a published table and compare cell by cell."""
    if table_id not in TABLE_GRIDS:
        raise ValueError("table_id must be 1, 2, 3 or 4")
    estimators = TABLE_ESTIMATORS[table_id]
    cells: list[McCell] = []
    runtime = 0.0
    workers = 1
    configs = []
    for design, T_grid, delta_grid in TABLE_GRIDS[table_id]:
        cfg = McConfig([design], estimators, T_grid, delta_grid, R, root_seed=seed)
        rep = run_experiment(cfg, threads, strict=strict)
        cells += rep.cells
        runtime += rep.runtime_seconds
        workers = rep.workers
        configs.append(cfg.to_dict())
    report = McReport(cells, {"table": table_id, "blocks": configs}, runtime, workers)
    rows = []
    for (model, est, T, delta), published in PUBLISHED_VALUES[table_id].items():
        c = report.cell(model, est, T, delta)
        rows.append(ComparisonRow(table_id, model, est, T, delta, published, c.rate, c.mc_se, c.errors, tolerance(table_id, published)))
    return TableComparison(table_id, rows, report)
