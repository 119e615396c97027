"""Synthetic data generators.

Two consumers: the validation harness draws small worlds with known truth
(null worlds for size checks, confounded worlds for the sensitivity suite),
and the bundled demonstration survey mimics a lottery follow-up study: a
two-part prize mechanism driven by observed covariates, and yearly earnings
that respond to the prize with a hump-shaped profile over follow-up years.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assignment import Dataset, LotterySampler
from .stats import RngStream


@dataclass(frozen=True)
class LotteryParams:
    """Plain-parameter stand-in for a fitted lottery model (same attributes)."""

    win_coefficients: np.ndarray
    log_prize_coefficients: np.ndarray
    log_prize_sigma: float

    def __post_init__(self):
        object.__setattr__(self, "win_coefficients", np.asarray(self.win_coefficients, float))
        object.__setattr__(self, "log_prize_coefficients",
                           np.asarray(self.log_prize_coefficients, float))


def default_lottery_params(d: int) -> LotteryParams:
    """Mild covariate effects, win rate near one half, log-prize scale 0.6."""
    win = np.concatenate([[-0.1], np.linspace(0.3, -0.2, d)])
    prize = np.concatenate([[2.0], np.linspace(0.15, -0.1, d)])
    return LotteryParams(win, prize, 0.6)


def gaussian_covariates(stream: RngStream, n: int, d: int) -> np.ndarray:
    return stream.generator().standard_normal((n, d))


def null_lottery_trial(stream: RngStream, n: int, d: int,
                       params: LotteryParams | None = None) -> Dataset:
    """Prizes from a true lottery mechanism, outcome depending on x only."""
    params = params or default_lottery_params(d)
    gen = stream.generator()
    x = gen.standard_normal((n, d))
    w = LotterySampler(params, x).sample(stream.child(1))
    gamma = np.linspace(0.8, 0.3, d)
    y = 1.0 + x @ gamma + gen.standard_normal(n)
    return Dataset(y[:, None], w, x)


def confounded_lottery_trial(stream: RngStream, n: int, d: int,
                             zeta_w: float, zeta_y: float,
                             params: LotteryParams | None = None,
                             sigma_y: float = 1.0) -> Dataset:
    """Shared latent confounder U tilts both the outcome and the assignment.

    Outcome:     y = 1 + x.gamma + sigma_y * (zeta_y U + sqrt(1-zeta_y^2) eps)
    Win latent:  a_k + x.d_k + zeta_w U + sqrt(1-zeta_w^2) xi
    Log prize:   a_w + x.d_w + sigma_w * (zeta_w U + sqrt(1-zeta_w^2) nu)

    Conditionally on (x, U) the outcome is independent of the prize, so the
    product zeta_w * zeta_y is the confounding strength the sensitivity
    sampler should need to reproduce the dependence.
    """
    params = params or default_lottery_params(d)
    gen = stream.generator()
    x = gen.standard_normal((n, d))
    u = gen.standard_normal(n)
    eps = gen.standard_normal(n)
    xi = gen.standard_normal(n)
    nu = gen.standard_normal(n)
    gamma = np.linspace(0.8, 0.3, d)
    y = 1.0 + x @ gamma + sigma_y * (zeta_y * u + math.sqrt(1.0 - zeta_y ** 2) * eps)
    xmat = np.hstack([np.ones((n, 1)), x])
    latent = xmat @ params.win_coefficients + zeta_w * u + math.sqrt(1.0 - zeta_w ** 2) * xi
    log_prize = (xmat @ params.log_prize_coefficients
                 + params.log_prize_sigma * (zeta_w * u + math.sqrt(1.0 - zeta_w ** 2) * nu))
    w = np.where(latent > 0.0, np.exp(log_prize), 0.0)
    return Dataset(y[:, None], w, x)


def effect_lottery_trial(stream: RngStream, n: int, d: int, effect: float,
                         params: LotteryParams | None = None,
                         sigma_y: float = 1.0) -> Dataset:
    """Prizes from a true lottery mechanism, outcome shifted by effect * w."""
    params = params or default_lottery_params(d)
    gen = stream.generator()
    x = gen.standard_normal((n, d))
    w = LotterySampler(params, x).sample(stream.child(1))
    gamma = np.linspace(0.8, 0.3, d)
    y = 1.0 + x @ gamma + effect * w + sigma_y * gen.standard_normal(n)
    return Dataset(y[:, None], w, x)


# ---------------------------------------------------------------------------
# Bundled lottery-survey fixture
# ---------------------------------------------------------------------------

SURVEY_COVARIATES = ["age", "male", "education", "household_size",
                     "prior_earnings", "tickets", "urban"]
SURVEY_OUTCOMES = [f"earnings_y{j}" for j in range(7)]
SURVEY_TREATMENT = "prize"

# per-year effect of one prize unit ($1k/year) on earnings ($k/year);
# magnitudes rise then fade over the follow-up window
_EFFECT_PROFILE = np.array([-0.29, -0.45, -0.60, -0.66, -0.60, -0.45, -0.235])
_OUTCOME_NOISE = 9.0


def _survey_columns(gen: np.random.Generator, n: int) -> dict:
    age = np.clip(gen.normal(50.0, 12.0, n), 21.0, 79.0)
    male = (gen.random(n) < 0.55).astype(float)
    education = np.clip(np.round(gen.normal(13.0, 2.4, n)), 8, 20)
    household = 1.0 + gen.poisson(1.6, n)
    prior = np.exp(gen.normal(2.6, 0.55, n))
    tickets = 1.0 + gen.poisson(2.0, n)
    urban = (gen.random(n) < 0.65).astype(float)
    return {
        "age": age, "male": male, "education": education,
        "household_size": household, "prior_earnings": prior,
        "tickets": tickets, "urban": urban,
    }


def _standardized(cols: dict) -> np.ndarray:
    mat = np.column_stack([cols[name] for name in SURVEY_COVARIATES])
    return (mat - mat.mean(axis=0)) / mat.std(axis=0)


def make_lottery_survey(n: int = 496, seed: int = 20260819) -> dict:
    """Generate the demonstration survey as a dict of named columns.

    The win equation loads mostly on tickets bought and prior earnings; the
    yearly prize is lognormal around a ten-thousand-dollar-scale median.
    Earnings respond to the prize with the hump-shaped profile above, so
    later analysis sees effects that strengthen and then fade across years.
    """
    stream = RngStream(seed)
    gen = stream.generator()
    cols = _survey_columns(gen, n)
    xs = _standardized(cols)

    win_coef = np.array([0.42, -0.06, 0.05, -0.04, 0.12, 0.32, 0.09])
    latent = -0.12 + xs @ win_coef + gen.standard_normal(n)
    win = latent > 0.0
    prize_coef = np.array([-0.05, 0.02, 0.04, 0.0, 0.18, 0.28, 0.05])
    log_prize = 2.25 + xs @ prize_coef + 0.55 * gen.standard_normal(n)
    prize = np.where(win, np.exp(log_prize), 0.0)
    cols[SURVEY_TREATMENT] = np.round(prize, 3)

    base_coef = np.array([-2.0, 3.5, 2.4, -0.8, 5.5, 0.3, 1.2])
    base = 16.0 + xs @ base_coef
    for j, name in enumerate(SURVEY_OUTCOMES):
        yj = base + _EFFECT_PROFILE[j] * cols[SURVEY_TREATMENT] \
            + _OUTCOME_NOISE * gen.standard_normal(n)
        cols[name] = np.round(yj, 3)
    cols["id"] = np.arange(1, n + 1)
    return cols


def write_lottery_survey_csv(path, n: int = 496, seed: int = 20260819,
                             n_incomplete: int = 10) -> int:
    """Write the fixture CSV, appending rows with missing fields at the end.

    The incomplete rows exercise listwise deletion at ingestion; the clean
    row count n is what analysis should see. Returns total rows written.
    """
    cols = make_lottery_survey(n, seed)
    gen = RngStream(seed, 1).generator()
    names = ["id"] + SURVEY_COVARIATES + [SURVEY_TREATMENT] + SURVEY_OUTCOMES
    lines = [",".join(names)]

    def fmt(v):
        if isinstance(v, float) and float(v).is_integer():
            return str(int(v))
        return f"{v:.3f}" if isinstance(v, float) else str(v)

    for i in range(n):
        lines.append(",".join(fmt(float(cols[c][i])) if c != "id" else str(cols[c][i])
                              for c in names))
    # incomplete tail rows: clone early rows, blank one analysis field each
    blankable = SURVEY_COVARIATES + [SURVEY_TREATMENT] + SURVEY_OUTCOMES
    for i in range(n_incomplete):
        row = {c: fmt(float(cols[c][i])) if c != "id" else str(n + i + 1) for c in names}
        victim = blankable[int(gen.integers(len(blankable)))]
        row[victim] = ""
        lines.append(",".join(row[c] for c in names))
    text = "\n".join(lines) + "\n"
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return n + n_incomplete
