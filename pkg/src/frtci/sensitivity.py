"""Sensitivity analysis for unobserved confounding.

One replicate is drawn at each point of a fine grid over the confounding
strength zeta, recording the binary indicator

    y_m = 1{ T(y, W_rep(zeta_m), x) >= T_obs },

and the p-value curve is recovered by Nadaraya-Watson smoothing of the
indicators: each y_m is a Bernoulli draw whose mean is the p-value at
zeta_m, and the mean function is smooth in zeta, so a local average over a
shrinking window is consistent as the grid refines.

A replicate on which the statistic is undefined records y_m = 1, which is
conservative (pushes the smoothed p-value up), and increments a diagnostics
counter. The smoother is only evaluated a bandwidth away from the grid
edges; outside that interior the window is truncated and the estimate
biased, so evaluation there raises.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import Dataset, FittedLotteryModel, NullOutcomeModel, SensitivitySampler
from .errors import DomainError, UndefinedWindowError
from .stats import RngStream

_NEG_INF = float("-inf")


def epanechnikov_kernel(u):
    """0.75 (1 - u^2) on |u| <= 1, else 0."""
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def box_kernel(u):
    """0.5 on |u| <= 1, else 0."""
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.5, 0.0)


KERNELS = {"epanechnikov": epanechnikov_kernel, "box": box_kernel}


def default_bandwidth(lo: float, hi: float, m_points: int) -> float:
    """Grid-range times M^(-1/3): shrinks slowly enough to keep windows full."""
    return (hi - lo) * m_points ** (-1.0 / 3.0)


@dataclass(frozen=True)
class SensitivityCurve:
    """Grid of confounding strengths with one exceedance indicator per point."""

    grid: np.ndarray
    indicators: np.ndarray
    bandwidth: float
    kernel: str
    year: int
    observed_statistic: float
    n_degenerate: int

    @property
    def interior(self) -> tuple:
        """Evaluation interval: a bandwidth inside each grid edge."""
        return (float(self.grid[0] + self.bandwidth), float(self.grid[-1] - self.bandwidth))


def build_sensitivity_curve(data: Dataset, year: int, statistic,
                            lottery_model: FittedLotteryModel,
                            outcome_model: NullOutcomeModel,
                            m_points: int = 4000,
                            zeta_range: tuple = (-0.99, 0.99),
                            seed=0,
                            bandwidth: float | None = None,
                            kernel: str = "epanechnikov") -> SensitivityCurve:
    """One replicate per grid point of zeta, compared against the observed statistic.

    The grid is equally spaced over zeta_range, which must straddle zero and
    stay strictly inside (-1, 1). Each grid point m uses the stream child(m)
    of the base seed.
    """
    if m_points < 100:
        raise DomainError("m_points must be at least 100")
    lo, hi = float(zeta_range[0]), float(zeta_range[1])
    if not (-1.0 < lo < 0.0 < hi < 1.0):
        raise DomainError("zeta_range must straddle 0 strictly inside (-1, 1)")
    if kernel not in KERNELS:
        raise DomainError(f"kernel must be one of {sorted(KERNELS)}")
    if outcome_model.year != year:
        raise DomainError("outcome model was fitted for a different year")
    h = float(bandwidth) if bandwidth is not None else default_bandwidth(lo, hi, m_points)
    if h <= 0.0:
        raise DomainError("bandwidth must be positive")

    base = _as_stream(seed)
    grid = np.linspace(lo, hi, m_points)
    evaluator = statistic.prepare(data.outcomes[:, year], data.covariates)
    t_obs = float(evaluator(data.treatment[None, :])[0])

    w_rep = np.empty((m_points, data.n))
    for m, zeta in enumerate(grid):
        sampler = SensitivitySampler(lottery_model, outcome_model, data, float(zeta))
        w_rep[m] = sampler.sample(base.child(m))
    vals = evaluator(w_rep)
    vals = np.where(np.isnan(vals), _NEG_INF, vals)
    degenerate = vals == _NEG_INF
    indicators = np.where(degenerate, 1.0, (vals >= t_obs).astype(float))
    return SensitivityCurve(grid, indicators, h, kernel, year, t_obs,
                            int(degenerate.sum()))


def _as_stream(seed) -> RngStream:
    return seed if isinstance(seed, RngStream) else RngStream(int(seed))


def nw_smooth(curve: SensitivityCurve, at: float) -> float:
    """Kernel-weighted average of the curve's indicators at an interior point."""
    lo_int, hi_int = curve.interior
    if not lo_int <= at <= hi_int:
        raise DomainError(
            f"evaluation point {at:.4f} outside the interior [{lo_int:.4f}, {hi_int:.4f}]")
    kern = KERNELS[curve.kernel]
    u = (at - curve.grid) / curve.bandwidth
    weights = kern(u)
    total = float(weights.sum())
    if total <= 0.0:
        raise UndefinedWindowError(f"no grid mass in the window at {at:.4f}")
    return float(weights @ curve.indicators / total)


def smooth_on_grid(curve: SensitivityCurve, points=None, block: int = 256) -> np.ndarray:
    """Vectorized nw_smooth over many points (NaN outside the interior)."""
    pts = curve.grid if points is None else np.asarray(points, dtype=float)
    lo_int, hi_int = curve.interior
    kern = KERNELS[curve.kernel]
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], block):
        chunk = pts[start:start + block]
        weights = kern((chunk[:, None] - curve.grid[None, :]) / curve.bandwidth)
        totals = weights.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = weights @ curve.indicators / totals
        inside = (chunk >= lo_int) & (chunk <= hi_int) & (totals > 0.0)
        out[start:start + block] = np.where(inside, vals, np.nan)
    return out


@dataclass(frozen=True)
class OverturnResult:
    """Smallest confounding magnitude at which significance is lost."""

    zeta_star_abs: float | None
    alpha: float
    side: str | None
    significant_at_zero: bool
    p_at_zero: float


def minimal_overturn(curve: SensitivityCurve, alpha: float = 0.05,
                     mesh_step: float = 0.005) -> OverturnResult:
    """Scan |zeta| outward from zero for the first smoothed p at or above alpha.

    Returns zeta_star_abs = 0 when the test is already insignificant at
    zeta = 0, and zeta_star_abs = None when no interior point overturns.
    `side` records which sign of zeta overturned first ("both" on a tie).
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie strictly inside (0, 1)")
    if mesh_step <= 0.0:
        raise DomainError("mesh_step must be positive")
    p_zero = nw_smooth(curve, 0.0)
    if p_zero >= alpha:
        return OverturnResult(0.0, alpha, "both", False, p_zero)
    lo_int, hi_int = curve.interior
    step = 1
    while True:
        t = step * mesh_step
        pos_ok = t <= hi_int
        neg_ok = -t >= lo_int
        if not pos_ok and not neg_ok:
            return OverturnResult(None, alpha, None, True, p_zero)
        pos_hit = pos_ok and nw_smooth(curve, t) >= alpha
        neg_hit = neg_ok and nw_smooth(curve, -t) >= alpha
        if pos_hit or neg_hit:
            side = "both" if (pos_hit and neg_hit) else ("positive" if pos_hit else "negative")
            return OverturnResult(float(t), alpha, side, True, p_zero)
        step += 1
