"""Assignment mechanisms: known designs, the fitted lottery model, and the
confounding-indexed sensitivity sampler.

The lottery model is a two-part mechanism for a prize variable W >= 0:

    win:   K_i = 1{ a_k + x_i . d_k + xi_i > 0 },    xi_i ~ N(0, 1)
    prize: log W_i = a_w + x_i . d_w + nu_i          given K_i = 1,
           W_i = 0                                   given K_i = 0,

with nu_i ~ N(0, sigma_w^2). Fitting is a probit for the win part and least
squares of log prizes on covariates among winners.

The sensitivity sampler tilts both latent shocks toward the standardized
residual r_i of the outcome regressed on covariates under the null model:
shock = zeta * r_i + sqrt(1 - zeta^2) * fresh_normal. zeta = 0 reproduces
the fitted lottery sampler draw for draw: both consume one (xi, nu) pair
per unit in unit order, and nu is drawn whether or not the unit wins.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DataIntegrityError,
    DegenerateResidualError,
    DegenerateResponseError,
    DomainError,
    InsufficientDataError,
    UnsupportedDesignError,
)
from .stats import (
    OlsFit,
    ProbitFit,
    RngStream,
    design_matrix,
    normal_cdf,
    ols_fit,
    probit_fit,
)

_MAX_ENUMERATION = 100_000


@dataclass(frozen=True)
class Dataset:
    """Aligned outcome matrix (n, years), treatment vector (n,), covariates (n, d)."""

    outcomes: np.ndarray
    treatment: np.ndarray
    covariates: np.ndarray

    def __post_init__(self):
        outcomes = np.asarray(self.outcomes, dtype=float)
        if outcomes.ndim == 1:
            outcomes = outcomes[:, None]
        treatment = np.asarray(self.treatment, dtype=float)
        covariates = np.asarray(self.covariates, dtype=float)
        if covariates.ndim == 1:
            covariates = covariates[:, None]
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "treatment", treatment)
        object.__setattr__(self, "covariates", covariates)
        n = treatment.shape[0]
        if outcomes.shape[0] != n or covariates.shape[0] != n:
            raise DomainError("outcomes, treatment and covariates must align on rows")
        for name, arr in (("outcomes", outcomes), ("treatment", treatment), ("covariates", covariates)):
            if not np.all(np.isfinite(arr)):
                raise DataIntegrityError(f"{name} contains non-finite values")
        if np.any(treatment < 0.0):
            raise DataIntegrityError("treatment must be nonnegative")
        if n < covariates.shape[1] + 2:
            raise InsufficientDataError("need n > d + 1 rows")

    @property
    def n(self) -> int:
        return self.treatment.shape[0]

    @property
    def n_years(self) -> int:
        return self.outcomes.shape[1]


class BernoulliDesign:
    """Independent Bernoulli(p_i) treatment indicators."""

    kind = "bernoulli"

    def __init__(self, probabilities):
        p = np.asarray(probabilities, dtype=float)
        if p.ndim == 0:
            raise DomainError("pass a vector of per-unit probabilities")
        if np.any(p <= 0.0) or np.any(p >= 1.0):
            raise DomainError("probabilities must lie strictly inside (0, 1)")
        self.probabilities = p
        self.n = p.shape[0]

    def sample(self, stream: RngStream) -> np.ndarray:
        u = stream.generator().random(self.n)
        return (u < self.probabilities).astype(float)

    def enumerate_all(self):
        if 2 ** self.n > _MAX_ENUMERATION:
            raise UnsupportedDesignError("2^n assignments exceed the enumeration cap")
        patterns = np.array(list(itertools.product((0.0, 1.0), repeat=self.n)))
        p = self.probabilities
        probs = np.prod(np.where(patterns == 1.0, p, 1.0 - p), axis=1)
        return patterns, probs


class CompleteRandomization:
    """Fixed number of treated units, all subsets equally likely."""

    kind = "complete_randomization"

    def __init__(self, n: int, n_treated: int):
        if not 0 < n_treated < n:
            raise DomainError("need 0 < n_treated < n")
        self.n = int(n)
        self.n_treated = int(n_treated)

    def sample(self, stream: RngStream) -> np.ndarray:
        idx = stream.generator().choice(self.n, size=self.n_treated, replace=False)
        w = np.zeros(self.n)
        w[idx] = 1.0
        return w

    def enumerate_all(self):
        count = math.comb(self.n, self.n_treated)
        if count > _MAX_ENUMERATION:
            raise UnsupportedDesignError("C(n, n_treated) exceeds the enumeration cap")
        patterns = np.zeros((count, self.n))
        for row, chosen in enumerate(itertools.combinations(range(self.n), self.n_treated)):
            patterns[row, list(chosen)] = 1.0
        probs = np.full(count, 1.0 / count)
        return patterns, probs


@dataclass(frozen=True)
class FittedLotteryModel:
    """Two-part lottery fit: probit win equation plus lognormal prize equation."""

    win_fit: ProbitFit
    log_prize_coefficients: np.ndarray
    log_prize_sigma: float
    prize_fit: OlsFit = field(repr=False, default=None)

    def __post_init__(self):
        if self.log_prize_sigma <= 0.0:
            raise DegenerateResidualError("log-prize residual scale must be positive")

    @property
    def win_coefficients(self) -> np.ndarray:
        return self.win_fit.coefficients


def fit_lottery_model(data: Dataset) -> FittedLotteryModel:
    """Fit the two-part lottery mechanism to (treatment, covariates).

    Winners are rows with positive treatment. Raises
    DegenerateResponseError when everyone wins or everyone loses, and
    InsufficientDataError when the winner count cannot support the prize
    regression.
    """
    k = (data.treatment > 0.0).astype(float)
    if k.min() == k.max():
        raise DegenerateResponseError("all units share one win status")
    xmat = design_matrix(data.covariates)
    d = xmat.shape[1] - 1
    winners = k == 1.0
    if int(winners.sum()) < d + 3:
        raise InsufficientDataError("need more than d + 2 winners for the prize fit")
    win_fit = probit_fit(xmat, k)
    prize_fit = ols_fit(xmat[winners], np.log(data.treatment[winners]))
    sigma = float(np.sqrt(prize_fit.residual_variance))
    return FittedLotteryModel(win_fit, prize_fit.coefficients, sigma, prize_fit)


class LotterySampler:
    """Draw prize vectors from a fitted lottery model at fixed covariates.

    Per draw each unit consumes one (xi, nu) pair of standard normals in
    unit order; nu is consumed even for losers so the draw count does not
    depend on realized wins.
    """

    kind = "lottery"

    def __init__(self, model: FittedLotteryModel, covariates):
        xmat = design_matrix(covariates)
        self.n = xmat.shape[0]
        self._win_index = xmat @ model.win_coefficients
        self._log_prize_mean = xmat @ model.log_prize_coefficients
        self._sigma = model.log_prize_sigma

    def sample(self, stream: RngStream) -> np.ndarray:
        z = stream.generator().standard_normal((self.n, 2))
        latent = self._win_index + z[:, 0]
        log_prize = self._log_prize_mean + self._sigma * z[:, 1]
        return np.where(latent > 0.0, np.exp(log_prize), 0.0)


@dataclass(frozen=True)
class NullOutcomeModel:
    """Least-squares fit of one outcome year on covariates, used to form residuals."""

    coefficients: np.ndarray
    sigma: float
    year: int

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise DegenerateResidualError("outcome residual scale must be positive")

    def standardized_residuals(self, data: Dataset) -> np.ndarray:
        xmat = design_matrix(data.covariates)
        return (data.outcomes[:, self.year] - xmat @ self.coefficients) / self.sigma


def fit_null_outcome_model(data: Dataset, year: int) -> NullOutcomeModel:
    """Regress outcome year `year` on covariates alone (treatment excluded)."""
    if not 0 <= year < data.n_years:
        raise DomainError(f"year must be in [0, {data.n_years - 1}]")
    fit = ols_fit(design_matrix(data.covariates), data.outcomes[:, year])
    return NullOutcomeModel(fit.coefficients, float(np.sqrt(fit.residual_variance)), year)


class SensitivitySampler:
    """Lottery sampler tilted toward the outcome residual with strength zeta.

    Both latent shocks for unit i become zeta * r_i + sqrt(1 - zeta^2) * z,
    z fresh standard normal, where r_i is the unit's standardized residual
    under the null outcome model. Negating zeta and r together leaves the
    draw unchanged, and zeta = 0 reproduces LotterySampler exactly under
    the same stream.
    """

    kind = "lottery_sensitivity"

    def __init__(self, model: FittedLotteryModel, outcome_model: NullOutcomeModel,
                 data: Dataset, zeta: float):
        if not -1.0 < zeta < 1.0:
            raise DomainError("zeta must lie strictly inside (-1, 1)")
        xmat = design_matrix(data.covariates)
        self.n = xmat.shape[0]
        self.zeta = float(zeta)
        self._win_index = xmat @ model.win_coefficients
        self._log_prize_mean = xmat @ model.log_prize_coefficients
        self._sigma = model.log_prize_sigma
        self._shift = self.zeta * outcome_model.standardized_residuals(data)
        self._noise_scale = math.sqrt(1.0 - self.zeta * self.zeta)

    def sample(self, stream: RngStream) -> np.ndarray:
        z = stream.generator().standard_normal((self.n, 2))
        latent = self._win_index + self._shift + self._noise_scale * z[:, 0]
        log_prize = self._log_prize_mean + self._sigma * (self._shift + self._noise_scale * z[:, 1])
        return np.where(latent > 0.0, np.exp(log_prize), 0.0)

    def win_probabilities(self) -> np.ndarray:
        """Per-unit win probability given the residuals: Phi of the tilted index."""
        return normal_cdf((self._win_index + self._shift) / self._noise_scale)
