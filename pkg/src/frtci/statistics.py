"""Test statistics for randomization inference.

Each statistic is a callable object: ``stat(y, w, x)`` returns a scalar, and
``stat.prepare(y, x)`` returns a vectorized evaluator over a matrix of
treatment vectors (one replicate per row). The engine routes the observed
treatment through the same prepared evaluator as the replicates, so exact
ties compare identical floating-point values.

A replicate on which the statistic is undefined maps to ``-inf`` in the
batch path; calling the statistic directly on such input raises instead.

The regression statistic summarizes the evidence against a zero treatment
coefficient in the linear model y = a + w*b + x*d + noise: it is the
negative log posterior density of b at zero (flat-prior fit, additive
constant dropped),

    T = log(se_hat) + (dof / 2) * log(1 + b_hat^2 / (dof * se_hat^2)),

with dof = n - (number of non-intercept regressors) - 1. Larger T means a
posterior concentrated away from zero. The conjugate pair below is a toy
normal-location family (known unit noise variance, standard normal prior on
the scalar effect) for which the Bayes factor is available in closed form;
the two conjugate statistics differ by a strictly increasing transform and
must produce identical randomization p-values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGroupsError,
    DomainError,
    FrtError,
    InsufficientDataError,
    SingularDesignError,
)
from .stats import design_matrix, ols_fit

_NEG_INF = float("-inf")


@dataclass(frozen=True)
class BayesSpec:
    """Tags the Bayesian reading of a statistic: model family, null, prior."""

    family: str
    null: str
    alternative: str
    prior: str


class TestStatistic:
    """Base protocol: scalar evaluation plus a vectorized replicate path."""

    name = "abstract"

    def __call__(self, y, w, x=None) -> float:
        raise NotImplementedError

    def prepare(self, y, x=None):
        """Return evaluator(w_matrix) -> values, one per row; -inf if undefined."""
        y = np.asarray(y, dtype=float)

        def evaluate(w_matrix):
            w_matrix = np.atleast_2d(np.asarray(w_matrix, dtype=float))
            out = np.empty(w_matrix.shape[0])
            for i, w in enumerate(w_matrix):
                try:
                    out[i] = self(y, w, x)
                except FrtError:
                    out[i] = _NEG_INF
            return out

        return evaluate


class LinearPosteriorDensity(TestStatistic):
    """Negative log posterior density of the treatment coefficient at zero."""

    name = "posterior_density_linear"
    spec = BayesSpec(
        family="gaussian linear regression",
        null="treatment coefficient b = 0",
        alternative="b != 0",
        prior="noninformative, flat in coefficients and log-scale in sigma",
    )

    def __call__(self, y, w, x=None) -> float:
        y = np.asarray(y, dtype=float)
        w = np.asarray(w, dtype=float)
        if x is None:
            full = np.hstack([np.ones((y.shape[0], 1)), w[:, None]])
        else:
            xmat = design_matrix(x)
            full = np.hstack([xmat[:, :1], w[:, None], xmat[:, 1:]])
        fit = ols_fit(full, y)
        dof = fit.dof  # n - k - 1 with k non-intercept regressors, intercept excluded from k
        se = float(fit.coef_standard_errors[1])
        b = float(fit.coefficients[1])
        rss = fit.residual_variance * dof
        # degeneracy is judged against the centered outcome scale so the
        # guard is invariant to intercept shifts and fires whenever the
        # covariates alone already give an exact fit
        centered = y - y.mean()
        scale = max(float(centered @ centered), 1e-300)
        if se <= 0.0 or not np.isfinite(se) or rss <= 1e-12 * scale:
            raise SingularDesignError("zero residual scale; statistic undefined")
        return float(np.log(se) + 0.5 * dof * np.log1p(b * b / (dof * se * se)))

    def prepare(self, y, x=None):
        return _FwlEvaluator(y, x)


class _FwlEvaluator:
    """Batched statistic via residualization on the covariate block.

    The intercept-and-covariate block is factored once; each replicate then
    needs one projection and a handful of inner products. Matches the
    scalar path through the full regression at floating-point noise level.
    """

    def __init__(self, y, x):
        y = np.asarray(y, dtype=float)
        base = design_matrix(x) if x is not None else np.ones((y.shape[0], 1))
        n, p0 = base.shape
        if n < p0 + 2:
            raise InsufficientDataError("need n > (regressors + 1) for a defined dof")
        q, r = np.linalg.qr(base)
        d = np.abs(np.diag(r))
        if d.min() <= d.max() * 1e-10:
            raise SingularDesignError("covariate block is rank deficient")
        self._q = q
        self._y_res = y - q @ (q.T @ y)
        self._syy = float(self._y_res @ self._y_res)
        centered = y - y.mean()
        self._scale = max(float(centered @ centered), 1e-300)  # same guard scale as the scalar path
        self._dof = n - p0 - 1  # n - k - 1, k = p0 - 1 covariates + 1 treatment

    def __call__(self, w_matrix) -> np.ndarray:
        w = np.atleast_2d(np.asarray(w_matrix, dtype=float))
        w_res = w - (w @ self._q) @ self._q.T
        sww = np.einsum("ij,ij->i", w_res, w_res)
        swy = w_res @ self._y_res
        scale = np.maximum(np.einsum("ij,ij->i", w, w), 1.0)
        ok = sww > 1e-12 * scale
        out = np.full(w.shape[0], _NEG_INF)
        if not np.any(ok):
            return out
        with np.errstate(divide="ignore", invalid="ignore"):
            b = swy[ok] / sww[ok]
            rss = self._syy - b * swy[ok]
            defined = rss > 1e-12 * self._scale
            se2 = rss / (self._dof * sww[ok])
            vals = 0.5 * np.log(se2) + 0.5 * self._dof * np.log1p(b * swy[ok] / rss)
        vals = np.where(defined, vals, _NEG_INF)
        out[ok] = vals
        return out


class ConjugateBayesFactor(TestStatistic):
    """Bayes factor in the conjugate toy family y ~ N(w b, I), b ~ N(0, 1)."""

    name = "bayes_factor_conjugate"
    spec = BayesSpec(
        family="normal location, known unit variance",
        null="b = 0",
        alternative="b ~ N(0, 1)",
        prior="standard normal on the scalar effect",
    )

    def __call__(self, y, w, x=None) -> float:
        y = np.asarray(y, dtype=float)
        w = np.asarray(w, dtype=float)
        s = float(w @ w)
        t = float(w @ y)
        return float(np.exp(t * t / (2.0 * (s + 1.0))) / np.sqrt(s + 1.0))

    def prepare(self, y, x=None):
        y = np.asarray(y, dtype=float)

        def evaluate(w_matrix):
            w = np.atleast_2d(np.asarray(w_matrix, dtype=float))
            s = np.einsum("ij,ij->i", w, w)
            t = w @ y
            return np.exp(t * t / (2.0 * (s + 1.0))) / np.sqrt(s + 1.0)

        return evaluate


class ConjugatePosteriorDensity(TestStatistic):
    """Negative log posterior density of b at zero in the same toy family.

    Equals log(BayesFactor) + log(2 pi) / 2 exactly, a strictly increasing
    transform of the Bayes factor, so randomization p-values coincide.
    """

    name = "posterior_density_conjugate"
    spec = ConjugateBayesFactor.spec

    def __call__(self, y, w, x=None) -> float:
        y = np.asarray(y, dtype=float)
        w = np.asarray(w, dtype=float)
        s = float(w @ w)
        t = float(w @ y)
        var = 1.0 / (s + 1.0)
        mean = t * var
        return float(0.5 * np.log(2.0 * np.pi * var) + mean * mean / (2.0 * var))

    def prepare(self, y, x=None):
        y = np.asarray(y, dtype=float)

        def evaluate(w_matrix):
            w = np.atleast_2d(np.asarray(w_matrix, dtype=float))
            s = np.einsum("ij,ij->i", w, w)
            t = w @ y
            var = 1.0 / (s + 1.0)
            mean = t * var
            return 0.5 * np.log(2.0 * np.pi * var) + mean * mean / (2.0 * var)

        return evaluate


class DiffInMeans(TestStatistic):
    """Absolute difference of outcome means between treated (w > 0) and control."""

    name = "diff_in_means"

    def __call__(self, y, w, x=None) -> float:
        y = np.asarray(y, dtype=float)
        w = np.asarray(w, dtype=float)
        treated = w != 0.0
        n1 = int(treated.sum())
        if n1 == 0 or n1 == treated.size:
            raise DegenerateGroupsError("both groups must be nonempty")
        return float(abs(y[treated].mean() - y[~treated].mean()))

    def prepare(self, y, x=None):
        y = np.asarray(y, dtype=float)
        total = float(y.sum())
        n = y.shape[0]

        def evaluate(w_matrix):
            w = np.atleast_2d(np.asarray(w_matrix, dtype=float))
            ind = (w != 0.0).astype(float)
            n1 = ind.sum(axis=1)
            s1 = ind @ y
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = np.abs(s1 / n1 - (total - s1) / (n - n1))
            ok = (n1 > 0) & (n1 < n)
            return np.where(ok, vals, _NEG_INF)

        return evaluate


t_pos_linear = LinearPosteriorDensity()
t_bf_conjugate = ConjugateBayesFactor()
t_pos_conjugate = ConjugatePosteriorDensity()
diff_in_means = DiffInMeans()
