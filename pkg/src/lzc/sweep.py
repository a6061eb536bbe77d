"""Evaluation of single points and parameter sweeps for the command line.

CSV columns, in order (numeric columns only in numeric/validate modes):

    sweep_value    value of the swept parameter (nan without a sweep)
    p00_analytic   exact survival probability from the characteristic roots
    p00_numeric    extrapolated |b0|^2 from level-0 propagation (init level0/all)
    p10 .. pN0     analytic long-time probability to reach level 0 from band level q
    p10_avg ..     time-averaged numerical |b0|^2 from band level q (init band:q/all)
    err_estimate   largest numerical error bar of the row
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import analytic, propagator
from .errors import ConfigError, DegeneracyError, LZCError
from .model import find_roots

SIG_DIGITS = 12


class PointError(LZCError):
    """A sweep point failed; the message names the stage and the module."""


def numeric_levels(config):
    """Band levels q whose time-averaged P_q0 is computed numerically."""
    if config.mode == "analytic" or config.init == "level0":
        return ()
    if config.band_init is not None:
        return (config.band_init,)
    return tuple(range(1, config.params.n_levels + 1))


def wants_p00_numeric(config):
    return config.mode != "analytic" and config.init in ("level0", "all")


def columns(config):
    n = config.params.n_levels
    cols = ["sweep_value", "p00_analytic"]
    if wants_p00_numeric(config):
        cols.append("p00_numeric")
    cols += [f"p{q}0" for q in range(1, n + 1)]
    cols += [f"p{q}0_avg" for q in numeric_levels(config)]
    if config.mode != "analytic":
        cols.append("err_estimate")
    return cols


def _stage(name, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except LZCError as exc:
        module = getattr(func, "__module__", "lzc")
        raise PointError(f"{name} ({module}): {type(exc).__name__}: {exc}") from exc


def evaluate_point(config, value):
    """Row dict for one sweep value (``value`` ignored without a sweep)."""
    params = config.params_at(value)
    row = {"sweep_value": value if config.sweep is not None else math.nan}
    roots = _stage("find_roots", find_roots, params)
    row["p00_analytic"] = _stage("survival_probability", analytic.survival_probability,
                                 params, roots)
    for q in range(1, params.n_levels + 1):
        try:
            coeffs = analytic.band_coefficients(params, roots, q)
        except DegeneracyError:
            row[f"p{q}0"] = math.nan
            continue
        except LZCError as exc:
            raise PointError(f"band_coefficients (lzc.analytic): {exc}") from exc
        row[f"p{q}0"] = _stage("pq0_time_average", analytic.pq0_time_average, coeffs, params)

    errors = []
    if wants_p00_numeric(config):
        horizon = 4.0 * propagator.default_horizon(params)
        est = _stage("converged_p00", propagator.converged_p00, params,
                     config.integrator_config(horizon))
        row["p00_numeric"] = est.value
        errors.append(est.error)
    for q in numeric_levels(config):
        t_end = max(propagator.AVERAGE_HORIZON / params.beta,
                    propagator.t_from_tau(propagator.default_horizon(params)))
        cfg = config.integrator_config(float(propagator.tau_from_t(t_end)))
        est = _stage("time_averaged_population", propagator.time_averaged_population,
                     params, q, 0, cfg, t_end=cfg.tau_max ** 2 / 2.0)
        row[f"p{q}0_avg"] = est.value
        errors.append(est.error)
    if config.mode != "analytic":
        row["err_estimate"] = max(errors) if errors else 0.0
    return row


def _evaluate(args):
    return evaluate_point(*args)


def thread_limit():
    """Worker count: LZC_THREADS when set, else the CPU count."""
    env = os.environ.get("LZC_THREADS")
    if env:
        try:
            count = int(env)
        except ValueError:
            raise ConfigError(f"LZC_THREADS must be an integer, got {env!r}") from None
        return max(1, count)
    return os.cpu_count() or 1


def run_sweep(config, workers=None):
    """Rows in sweep order; points run in worker processes when allowed."""
    values = list(config.sweep.values()) if config.sweep is not None else [math.nan]
    workers = min(thread_limit() if workers is None else workers, len(values))
    tasks = [(config, float(v)) for v in values]
    if workers <= 1:
        return [evaluate_point(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map yields in submission order whatever the completion order
        return list(pool.map(_evaluate, tasks))


def format_value(value):
    return f"{value:.{SIG_DIGITS}g}"


def to_csv(cols, rows):
    lines = [",".join(cols)]
    lines += [",".join(format_value(row[c]) for c in cols) for row in rows]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Check:
    sweep_value: float
    quantity: str
    analytic: float
    numeric: float
    tol: float

    @property
    def delta(self):
        return abs(self.analytic - self.numeric)

    @property
    def passed(self):
        return self.delta <= self.tol


def validation_checks(config, rows):
    checks = []
    for row in rows:
        if "p00_numeric" in row:
            checks.append(Check(row["sweep_value"], "P00", row["p00_analytic"],
                                row["p00_numeric"], config.tol_p00))
        for q in numeric_levels(config):
            if not math.isnan(row[f"p{q}0"]):
                checks.append(Check(row["sweep_value"], f"P{q}0", row[f"p{q}0"],
                                    row[f"p{q}0_avg"], config.tol_pq0))
    return checks


def format_checks(checks):
    head = f"{'sweep_value':>14} {'quantity':>8} {'analytic':>14} {'numeric':>14} " \
           f"{'delta':>10} {'tol':>8}  status"
    lines = [head]
    for c in checks:
        lines.append(f"{c.sweep_value:>14.6g} {c.quantity:>8} {c.analytic:>14.8f} "
                     f"{c.numeric:>14.8f} {c.delta:>10.2e} {c.tol:>8.0e}  "
                     f"{'pass' if c.passed else 'FAIL'}")
    return "\n".join(lines)
