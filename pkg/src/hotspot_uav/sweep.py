"""Parameter sweeps over both engines, CSV output and optimum-height search."""

import csv
import io
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from . import __version__
from .analytic import coverage_probability, spectral_efficiency
from .config import Engine, SweepAxis, format_manifest
from .errors import NumericFailure, ValidationError
from .montecarlo import estimate

COLUMNS = ("axis_value", "strategy", "engine", "coverage", "coverage_ci95",
           "se", "se_ci95", "n_trials", "seed", "wall_time_s")
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
HEIGHT_TOL_M = 2.0
# analytic values carry no sampling error; differences below this are noise
ANALYTIC_CI = 1e-6


class FlatProfileWarning(UserWarning):
    """The swept maximum is not separated from its neighbours."""


@dataclass(frozen=True)
class CellResult:
    axis_value: float
    strategy: str
    engine: str
    coverage: float
    coverage_ci95: float
    se: float
    se_ci95: float
    n_trials: int
    seed: int
    wall_time_s: float


@dataclass(frozen=True)
class OptimumResult:
    gamma_opt: float
    metric_at_opt: float
    flat: bool
    heights: tuple
    metrics: tuple


def run_cell(cfg, value, strategy, engine, with_se=True):
    """Evaluate one grid cell; errors are re-raised tagged with the cell."""
    t0 = time.perf_counter()
    cell = {"axis": cfg.axis.value, "value": cfg.display_value(value),
            "strategy": strategy.value, "engine": engine.value}
    try:
        env, radio, dep = cfg.cell(value, strategy)
        if engine is Engine.ANALYTIC:
            cov = coverage_probability(env, radio, dep, cfg.quad)
            se = spectral_efficiency(env, radio, dep, cfg.quad) if with_se else math.nan
            row = (cov, 0.0, se, 0.0, 0)
        else:
            est = estimate(strategy, env, radio, dep, cfg.n_trials, cfg.seed, workers=1, sim=cfg.sim)
            row = (est.coverage.mean, est.coverage.half_width_95,
                   est.se.mean, est.se.half_width_95, cfg.n_trials)
    except NumericFailure as e:
        raise NumericFailure(str(e), context=cell) from e
    except ValidationError as e:
        raise ValidationError(f"{e} (cell: {cell})") from e
    cov, cov_ci, se, se_ci, n = row
    return CellResult(cfg.display_value(value), strategy.value, engine.value,
                      cov, cov_ci, se, se_ci, n, cfg.seed, time.perf_counter() - t0)


def _cell_job(args):
    return run_cell(*args)


def sweep_results(cfg, workers=None, with_se=True):
    """All grid cells, ordered by axis value, then strategy, then engine.

    Cells run concurrently in ``workers`` processes (``cfg.workers`` by
    default); the order of the result never depends on completion order.
    """
    workers = cfg.workers if workers is None else workers
    jobs = [(cfg, v, s, e, with_se) for v in cfg.values for s in cfg.strategies for e in cfg.engines]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_cell_job, jobs))
    return [_cell_job(j) for j in jobs]


def _fmt(x):
    if isinstance(x, int):
        return str(x)
    return "nan" if math.isnan(x) else f"{x:.10g}"


def format_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) if not isinstance(getattr(r, c), str) else getattr(r, c)
                    for c in COLUMNS])
    return buf.getvalue()


def manifest_path(csv_path):
    root, _ = os.path.splitext(csv_path)
    return root + ".manifest.ini"


def run_sweep(cfg, workers=None, output=None):
    """Run every cell, write the CSV and its run manifest, return the rows.

    The manifest next to the CSV holds the fully resolved configuration;
    feeding it back through :func:`hotspot_uav.config.parse_config`
    reproduces the same rows.
    """
    rows = sweep_results(cfg, workers)
    path = output or cfg.output
    if path:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(format_csv(rows))
        with open(manifest_path(path), "w", encoding="utf-8") as fh:
            fh.write(format_manifest(replace(cfg, output=path), __version__))
    return rows


def _analytic_coverage(cfg, strategy, height):
    env, radio, dep = cfg.cell(height, strategy)
    return coverage_probability(env, radio, replace(dep, height_m=height), cfg.quad)


def golden_section_max(f, a, b, tol):
    """Maximiser of a unimodal ``f`` on ``[a, b]`` to within ``tol``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > 2.0 * tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def find_optimum_height(cfg, strategy=None, workers=None):
    """Coverage-maximising height over a height sweep.

    Grid argmax first; with the analytic engine available, one
    golden-section pass over the bracketing grid cells locates the optimum
    to within 2 m. Monte-Carlo-only configurations return the grid argmax.
    Emits :class:`FlatProfileWarning` when the maximum is within the
    confidence interval of a neighbouring cell.
    """
    if cfg.axis is not SweepAxis.HEIGHT:
        raise ValidationError("find_optimum_height needs a height sweep (axis = height)")
    strategy = strategy or cfg.strategies[0]
    engine = Engine.ANALYTIC if Engine.ANALYTIC in cfg.engines else Engine.MONTECARLO
    sub = replace(cfg, strategies=(strategy,), engines=(engine,))
    rows = sweep_results(sub, workers, with_se=False)
    h = tuple(r.axis_value for r in rows)
    cov = tuple(r.coverage for r in rows)
    ci = [r.coverage_ci95 if engine is Engine.MONTECARLO else ANALYTIC_CI for r in rows]
    i = max(range(len(cov)), key=cov.__getitem__)
    if len(h) == 1:
        return OptimumResult(h[0], cov[0], False, h, cov)

    nbrs = [k for k in (i - 1, i + 1) if 0 <= k < len(h)]
    flat = any(cov[i] - cov[k] <= ci[i] + ci[k] for k in nbrs)
    if flat:
        warnings.warn(f"flat coverage profile near {h[i]:g} m: maximum within CI of a neighbour",
                      FlatProfileWarning, stacklevel=2)
    if engine is Engine.MONTECARLO:
        return OptimumResult(h[i], cov[i], flat, h, cov)
    lo, hi = h[max(i - 1, 0)], h[min(i + 1, len(h) - 1)]
    x, fx = golden_section_max(lambda g: _analytic_coverage(sub, strategy, g), lo, hi, HEIGHT_TOL_M)
    if fx < cov[i]:
        x, fx = h[i], cov[i]
    return OptimumResult(x, fx, flat, h, cov)
