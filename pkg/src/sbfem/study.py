"""Convergence studies: configuration, records, rate fits and file output."""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .exceptions import ConfigError
from .problems import builtin_problem, canonical_id, default_theta_max
from .semidiscrete import WeightedNormSpec, h1tilde_error
from .solver import solve

__all__ = [
    "StudyConfig",
    "ConvergenceRecord",
    "RateFit",
    "CSV_HEADER",
    "load_config",
    "run_study",
    "pairwise_rate",
    "estimate_rates",
    "emit_csv",
    "read_csv",
    "format_csv",
    "emit_plot_data",
    "ERROR_FLOOR",
]

log = logging.getLogger(__name__)

CSV_HEADER = ("problem", "p", "n_elements", "h", "err_L2r", "err_H1tilde", "rate_L2", "rate_H1", "lambda_min", "wall_time_ms")
ERROR_FLOOR = 1e-11
MAX_ORDER = 6


def _parse_int_list(text):
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    items = [s.strip() for s in str(text).split(",") if s.strip()]
    try:
        return tuple(int(s) for s in items)
    except ValueError as exc:
        raise ConfigError(f"expected a comma separated list of integers, got {text!r}") from exc


def _parse_bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


@dataclass(frozen=True)
class StudyConfig:
    """Settings of one convergence study.

    ``levels`` are element counts of uniform meshes and must be strictly
    increasing. ``theta_max`` and ``mode`` only matter for the ``custom``
    problem. ``timings`` fills the ``wall_time_ms`` column, which makes the
    CSV output run-dependent.
    """

    problem: str = "test1"
    theta_max: Optional[float] = None
    orders: tuple = (1, 2, 4, 6)
    levels: tuple = (4, 8, 16, 32, 64)
    mode: int = 1
    quad_levels: int = 40
    quad_ratio: float = 0.5
    quad_radial_points: int = 12
    quad_angular_points: Optional[int] = None
    out: Optional[str] = None
    plot_dir: Optional[str] = None
    timings: bool = False

    def __post_init__(self):
        object.__setattr__(self, "problem", canonical_id(self.problem))
        orders = _parse_int_list(self.orders)
        levels = _parse_int_list(self.levels)
        if not orders:
            raise ConfigError("at least one order is required")
        if any(p < 1 or p > MAX_ORDER for p in orders):
            raise ConfigError(f"orders must lie in 1..{MAX_ORDER}")
        if not levels:
            raise ConfigError("at least one level is required")
        if any(n < 1 for n in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
            raise ConfigError("levels must be positive and strictly increasing")
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "levels", levels)
        theta = self.theta_max if self.theta_max is not None else default_theta_max(self.problem)
        theta = float(theta)
        if not 0.0 < theta < 2.0 * math.pi:
            raise ConfigError("theta_max must lie in (0, 2 pi)")
        object.__setattr__(self, "theta_max", theta)
        try:
            self.norm_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def norm_spec(self) -> WeightedNormSpec:
        return WeightedNormSpec(
            weight="r",
            q=float(self.quad_ratio),
            levels=int(self.quad_levels),
            radial_points=int(self.quad_radial_points),
            angular_points=None if self.quad_angular_points is None else int(self.quad_angular_points),
        )

    def updated(self, **overrides):
        """Copy with the non-``None`` overrides applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


_CONFIG_TYPES = {
    "problem": str,
    "theta_max": float,
    "orders": _parse_int_list,
    "levels": _parse_int_list,
    "mode": int,
    "quad_levels": int,
    "quad_ratio": float,
    "quad_radial_points": int,
    "quad_angular_points": int,
    "out": str,
    "plot_dir": str,
    "timings": _parse_bool,
}


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_TYPES[key](value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    return values


def load_config(path, **overrides) -> StudyConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            values = parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values.update({k: v for k, v in overrides.items() if v is not None})
    return StudyConfig(**values)


@dataclass
class ConvergenceRecord:
    problem: str
    p: int
    n_elements: int
    h: float
    err_L2r: float
    err_H1tilde: float
    rate_L2: Optional[float] = None
    rate_H1: Optional[float] = None
    lambda_min: float = float("nan")
    wall_time: Optional[float] = None  # milliseconds


@dataclass(frozen=True)
class RateFit:
    slope: float
    r2: float
    n_points: int


def pairwise_rate(e_coarse, e_fine, h_coarse, h_fine):
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


def run_study(config: StudyConfig, on_record: Callable[[ConvergenceRecord], None] | None = None):
    """Solve every ``(order, level)`` case in config order and measure the errors.

    ``on_record`` is called after each case, so callers can flush partial
    results if a later case fails.
    """
    spec = config.norm_spec()
    records = []
    for p in config.orders:
        prev = None
        for n in config.levels:
            t0 = time.perf_counter()
            problem, exact = builtin_problem(config.problem, n, p, config.theta_max, config.mode)
            sol = solve(problem)
            err_l2, err_h1 = h1tilde_error(sol, exact, spec)
            elapsed = (time.perf_counter() - t0) * 1e3
            h = config.theta_max / n
            rec = ConvergenceRecord(
                problem=config.problem,
                p=p,
                n_elements=n,
                h=h,
                err_L2r=err_l2,
                err_H1tilde=err_h1,
                lambda_min=float(sol.modal.lambdas[0]),
                wall_time=elapsed if config.timings else None,
            )
            if prev is not None:
                rec.rate_L2 = pairwise_rate(prev.err_L2r, err_l2, prev.h, h)
                rec.rate_H1 = pairwise_rate(prev.err_H1tilde, err_h1, prev.h, h)
            log.info("%s p=%d n=%d  L2r=%.3e  H1=%.3e", config.problem, p, n, err_l2, err_h1)
            records.append(rec)
            if on_record is not None:
                on_record(rec)
            prev = rec
    return records


def _fit(h, e):
    x, y = np.log(h), np.log(e)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def estimate_rates(records, floor=ERROR_FLOOR):
    """Least-squares slope of ``log err`` against ``log h`` per ``(problem, p, norm)``.

    Levels whose error is already below ``floor`` sit on the roundoff plateau
    and are left out; at least the two coarsest levels are always kept.
    Returns ``{(problem, p, "L2"|"H1"): RateFit}``.
    """
    groups = {}
    for rec in records:
        groups.setdefault((rec.problem, rec.p), []).append(rec)
    out = {}
    for (problem, p), recs in groups.items():
        recs = sorted(recs, key=lambda r: -r.h)
        if len(recs) < 2:
            raise ValueError(f"need at least two levels to fit a rate for {problem} p={p}")
        for norm, attr in (("L2", "err_L2r"), ("H1", "err_H1tilde")):
            h = np.array([r.h for r in recs])
            e = np.array([getattr(r, attr) for r in recs])
            keep = e >= floor
            if keep.sum() < 2:
                keep[:2] = True
            slope, r2 = _fit(h[keep], e[keep])
            out[(problem, p, norm)] = RateFit(slope=slope, r2=r2, n_points=int(keep.sum()))
    return out


def _fmt(x):
    if x is None:
        return ""
    return repr(float(x)) if not math.isfinite(x) else f"{x:.17g}"


def _row(rec):
    return [
        rec.problem,
        str(rec.p),
        str(rec.n_elements),
        _fmt(rec.h),
        _fmt(rec.err_L2r),
        _fmt(rec.err_H1tilde),
        _fmt(rec.rate_L2),
        _fmt(rec.rate_H1),
        _fmt(rec.lambda_min),
        _fmt(rec.wall_time),
    ]


def format_csv(records) -> str:
    lines = [",".join(CSV_HEADER)]
    lines.extend(",".join(_row(r)) for r in records)
    return "\n".join(lines) + "\n"


def emit_csv(records, path):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(format_csv(records))
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path):
    """Parse a file written by :func:`emit_csv` back into records."""
    def opt(s):
        return float(s) if s != "" else None

    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            if not row:
                continue
            records.append(
                ConvergenceRecord(
                    problem=row[0],
                    p=int(row[1]),
                    n_elements=int(row[2]),
                    h=float(row[3]),
                    err_L2r=float(row[4]),
                    err_H1tilde=float(row[5]),
                    rate_L2=opt(row[6]),
                    rate_H1=opt(row[7]),
                    lambda_min=float(row[8]),
                    wall_time=opt(row[9]),
                )
            )
    return records


def emit_plot_data(records, directory):
    """One ``h error`` file per ``(problem, p, norm)``; returns the written paths."""
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create plot directory {directory}: {exc}") from exc
    groups = {}
    for rec in records:
        groups.setdefault((rec.problem, rec.p), []).append(rec)
    paths = []
    for (problem, p), recs in groups.items():
        for norm, attr in (("L2", "err_L2r"), ("H1", "err_H1tilde")):
            path = os.path.join(directory, f"{problem}_p{p}_{norm}.dat")
            try:
                with open(path, "w", encoding="utf-8") as fh:
                    for r in recs:
                        fh.write(f"{r.h:.17g} {getattr(r, attr):.17g}\n")
            except OSError as exc:
                raise OSError(f"cannot write plot data {path}: {exc}") from exc
            paths.append(path)
    return paths
