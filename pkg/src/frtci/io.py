"""Config parsing, CSV ingestion, and the file-producing analysis runners.

The config is a flat YAML mapping naming the dataset file and its columns
plus run parameters. Ingestion is strict: named columns must exist, rows
with missing values in any named column are dropped (and the drop count
logged), negative prizes are an integrity error, and an optional
expected_rows entry audits the post-drop row count.

Runners write deterministic delimited text: same config and seed, same
bytes. Curve files carry one row per grid point, sorted by zeta, with the
smoothed p-value filled only where the smoother is defined (nan outside
its interior).
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from .assignment import Dataset, LotterySampler, fit_lottery_model, fit_null_outcome_model
from .engine import frt_p_value
from .errors import DataIntegrityError, DomainError, EmptyDatasetError, SchemaError
from .sensitivity import build_sensitivity_curve, minimal_overturn, smooth_on_grid
from .statistics import t_pos_linear
from .stats import RngStream
from .validation import run_suite

logger = logging.getLogger("frtci")

_CONFIG_KEYS = {
    "dataset", "treatment", "covariates", "outcomes", "draws", "alpha",
    "grid_points", "zeta_lo", "zeta_hi", "bandwidth", "seed", "expected_rows",
}


@dataclass(frozen=True)
class AnalysisConfig:
    dataset: str
    treatment: str
    covariates: tuple
    outcomes: tuple
    draws: int = 2000
    alpha: float = 0.05
    grid_points: int = 4000
    zeta_lo: float = -0.99
    zeta_hi: float = 0.99
    bandwidth: float | None = None
    seed: int = 0
    expected_rows: int | None = None

    def __post_init__(self):
        if self.draws < 1:
            raise DomainError("draws must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie strictly inside (0, 1)")
        if not self.covariates or not self.outcomes:
            raise SchemaError("covariates and outcomes must be nonempty lists")
        object.__setattr__(self, "covariates", tuple(self.covariates))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))


def load_config(path) -> AnalysisConfig:
    """Parse a flat YAML mapping into an AnalysisConfig; unknown keys are errors."""
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise SchemaError("config must be a YAML mapping")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise SchemaError(f"unknown config keys: {sorted(unknown)}")
    for key in ("dataset", "treatment", "covariates", "outcomes"):
        if key not in raw:
            raise SchemaError(f"config is missing required key '{key}'")
    return AnalysisConfig(**raw)


def ingest_csv(config: AnalysisConfig, base_dir=None) -> Dataset:
    """Load the configured CSV into a Dataset with listwise deletion.

    base_dir resolves a relative dataset path (defaults to the working
    directory). Raises SchemaError for absent columns, EmptyDatasetError
    when no complete rows remain, DataIntegrityError for negative prizes or
    an expected_rows mismatch.
    """
    path = Path(config.dataset)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    frame = pd.read_csv(path)
    needed = [config.treatment, *config.covariates, *config.outcomes]
    missing_cols = [c for c in needed if c not in frame.columns]
    if missing_cols:
        raise SchemaError(f"dataset is missing columns: {missing_cols}")
    frame = frame[needed].apply(pd.to_numeric, errors="coerce")
    complete = frame.dropna()
    dropped = len(frame) - len(complete)
    if dropped:
        logger.info("dropped %d rows with missing values (%d remain)", dropped, len(complete))
    if complete.empty:
        raise EmptyDatasetError("no complete rows after listwise deletion")
    if config.expected_rows is not None and len(complete) != config.expected_rows:
        raise DataIntegrityError(
            f"expected {config.expected_rows} complete rows, found {len(complete)}")
    treatment = complete[config.treatment].to_numpy(float)
    if np.any(treatment < 0.0):
        raise DataIntegrityError("treatment column contains negative prizes")
    outcomes = complete[list(config.outcomes)].to_numpy(float)
    covariates = complete[list(config.covariates)].to_numpy(float)
    logger.info("ingested %d rows, %d covariates, %d outcome years",
                len(complete), covariates.shape[1], outcomes.shape[1])
    return Dataset(outcomes, treatment, covariates)


def _write_rows(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if np.isnan(value):
            return "nan"
        return format(value, ".10g")
    return str(value)


def run_test(config: AnalysisConfig, out_dir, data: Dataset | None = None,
             threads: int = 1) -> list:
    """Fit the lottery model once, then one randomization test per outcome year.

    Writes pvalues.csv (year, p_value, observed_statistic, draws, seed) and
    returns the row tuples.
    """
    data = ingest_csv(config) if data is None else data
    base = RngStream(config.seed)
    model = fit_lottery_model(data)
    sampler = LotterySampler(model, data.covariates)
    rows = []
    for year in range(data.n_years):
        res = frt_p_value(data.outcomes[:, year], data.treatment, data.covariates,
                          t_pos_linear, sampler, draws=config.draws,
                          seed=base.child(year), threads=threads)
        rows.append((year, res.p_value, res.observed_statistic, res.draws, res.seed))
    out = Path(out_dir)
    _write_rows(out / "pvalues.csv",
                ["year", "p_value", "observed_statistic", "draws", "seed"],
                [[_fmt(v) for v in row] for row in rows])
    return rows


def run_sensitivity(config: AnalysisConfig, out_dir, data: Dataset | None = None) -> list:
    """Per-year sensitivity curves and minimal overturning strengths.

    Writes curve_year<j>.csv (zeta, indicator, smoothed_p) per year and a
    combined zeta_star.csv (year, zeta_star_abs, side, p_at_zero, flag).
    Returns the OverturnResult list.
    """
    data = ingest_csv(config) if data is None else data
    base = RngStream(config.seed)
    model = fit_lottery_model(data)
    out = Path(out_dir)
    results = []
    star_rows = []
    for year in range(data.n_years):
        outcome_model = fit_null_outcome_model(data, year)
        curve = build_sensitivity_curve(
            data, year, t_pos_linear, model, outcome_model,
            m_points=config.grid_points, zeta_range=(config.zeta_lo, config.zeta_hi),
            seed=base.child(1000 + year), bandwidth=config.bandwidth)
        smoothed = smooth_on_grid(curve)
        _write_rows(out / f"curve_year{year}.csv",
                    ["zeta", "indicator", "smoothed_p"],
                    [[_fmt(float(z)), _fmt(float(ind)), _fmt(float(sp))]
                     for z, ind, sp in zip(curve.grid, curve.indicators, smoothed)])
        overturn = minimal_overturn(curve, alpha=config.alpha)
        results.append(overturn)
        flag = "ok"
        if not overturn.significant_at_zero:
            flag = "not_significant_at_zero"
        elif overturn.zeta_star_abs is None:
            flag = "no_crossing"
        star_rows.append([year, overturn.zeta_star_abs, overturn.side,
                          overturn.p_at_zero, flag])
    _write_rows(out / "zeta_star.csv",
                ["year", "zeta_star_abs", "side", "p_at_zero", "flag"],
                [[_fmt(v) for v in row] for row in star_rows])
    return results


def run_checks(suite: str, out_dir, seed: int | None = None) -> list:
    """Run a named validation suite and write report_<suite>.csv."""
    rows = run_suite(suite, seed=seed)
    out = Path(out_dir)
    _write_rows(out / f"report_{suite}.csv",
                ["suite", "metric", "value", "threshold", "comparison", "passed"],
                [[r.suite, r.metric, _fmt(r.value), _fmt(r.threshold),
                  r.comparison, str(r.passed).lower()] for r in rows])
    return rows
