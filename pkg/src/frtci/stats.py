"""Core numerics: seeded RNG streams, least squares, probit fitting, normal helpers.

Everything downstream (samplers, test statistics, the randomization engine)
builds on the functions here, so their contracts are deliberately small:
plain arrays in, small result records out, loud errors for degenerate input.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import log_ndtr, ndtr, ndtri

from .errors import (
    DegenerateResponseError,
    DomainError,
    InsufficientDataError,
    SeparationError,
    SingularDesignError,
)

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by (seed, stream_id).

    Identical keys reproduce identical draws; distinct stream_ids are
    statistically independent. ``child(k)`` derives a fresh stream from the
    parent key and an index, so replicate-level streams do not depend on how
    work is batched across threads.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _U64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _U64)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=(self.seed, self.stream_id))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RngStream":
        ss = np.random.SeedSequence(entropy=(self.seed, self.stream_id, int(index) & _U64))
        derived = int(ss.generate_state(1, np.uint64)[0])
        return RngStream(seed=derived, stream_id=0)


def normal_cdf(x):
    """Standard normal CDF, elementwise."""
    return ndtr(x)


def normal_quantile(p):
    """Standard normal quantile. Raises DomainError outside the open unit interval."""
    arr = np.asarray(p, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError("normal_quantile requires 0 < p < 1")
    out = ndtri(arr)
    return float(out) if np.isscalar(p) or arr.ndim == 0 else out


def normal_sample(stream: RngStream, size=None):
    """Standard normal draws from the given stream."""
    return stream.generator().standard_normal(size)


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    residual_variance: float
    coef_standard_errors: np.ndarray
    dof: int


def design_matrix(covariates) -> np.ndarray:
    """Prepend an intercept column to a covariate matrix.

    A 1-D input is treated as a single column.
    """
    if covariates is None:
        raise DomainError("covariates required; pass an (n, d) array")
    x = np.asarray(covariates, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DomainError("covariates must be 1-D or 2-D")
    return np.hstack([np.ones((x.shape[0], 1)), x])


def _check_design(design: np.ndarray, n_min_extra: int = 0):
    design = np.asarray(design, dtype=float)
    if design.ndim != 2:
        raise DomainError("design must be a 2-D array")
    n, p = design.shape
    if not np.all(design[:, 0] == 1.0):
        raise DomainError("first design column must be the intercept (all ones)")
    if not np.all(np.isfinite(design)):
        raise DomainError("design contains non-finite values")
    if n < p + 1 + n_min_extra:
        raise InsufficientDataError(f"need more than {p + n_min_extra} rows, got {n}")
    return design


def _qr_full_rank(design: np.ndarray):
    q, r = np.linalg.qr(design)
    d = np.abs(np.diag(r))
    if d.min() <= d.max() * 1e-10:
        raise SingularDesignError("design matrix is rank deficient")
    return q, r


def ols_fit(design, y) -> OlsFit:
    """Least squares of y on a design whose first column is the intercept.

    Returns coefficients, the unbiased residual variance RSS / (n - p), and
    classical standard errors. Raises SingularDesignError for rank-deficient
    designs and InsufficientDataError when n <= p.
    """
    design = _check_design(design)
    y = np.asarray(y, dtype=float)
    n, p = design.shape
    if y.shape != (n,):
        raise DomainError(f"y must have shape ({n},)")
    q, r = _qr_full_rank(design)
    coef = solve_triangular(r, q.T @ y)
    resid = y - design @ coef
    rss = max(float(resid @ resid), 0.0)
    dof = n - p
    residual_variance = rss / dof
    r_inv = solve_triangular(r, np.eye(p))
    xtx_inv_diag = np.einsum("ij,ij->i", r_inv, r_inv)
    se = np.sqrt(residual_variance * xtx_inv_diag)
    return OlsFit(coef, residual_variance, se, dof)


@dataclass(frozen=True)
class ProbitFit:
    coefficients: np.ndarray
    converged: bool
    log_likelihood: float
    n_iterations: int
    ll_trace: np.ndarray


def _probit_loglik(eta, k):
    return float(np.sum(np.where(k > 0, log_ndtr(eta), log_ndtr(-eta))))


def _log_phi(z):
    return -0.5 * z * z - 0.5 * np.log(2.0 * np.pi)


def _probit_score_terms(eta, k):
    return np.where(
        k > 0,
        np.exp(_log_phi(eta) - log_ndtr(eta)),
        -np.exp(_log_phi(eta) - log_ndtr(-eta)),
    )


def probit_fit(design, k, max_iter: int = 100, grad_tol: float = 1e-8) -> ProbitFit:
    """Probit MLE by damped Fisher scoring.

    The log-likelihood is non-decreasing across iterations (step halving
    enforces this). Declares separation when a coefficient runs past 1e3 in
    absolute value or the likelihood reaches one to machine precision (both
    symptoms of a maximizer at infinity). A constant response has no
    interior MLE and raises DegenerateResponseError.
    """
    design = _check_design(design)
    k = np.asarray(k, dtype=float)
    n, p = design.shape
    if k.shape != (n,):
        raise DomainError(f"k must have shape ({n},)")
    if not np.all((k == 0.0) | (k == 1.0)):
        raise DomainError("k must be binary")
    kbar = k.mean()
    if kbar == 0.0 or kbar == 1.0:
        raise DegenerateResponseError("binary response is constant")
    _qr_full_rank(design)

    beta = np.zeros(p)
    beta[0] = ndtri(kbar)
    eta = design @ beta
    ll = _probit_loglik(eta, k)
    trace = [ll]
    converged = False
    it = 0

    for it in range(1, max_iter + 1):
        grad = design.T @ _probit_score_terms(eta, k)
        if np.linalg.norm(grad) < grad_tol:
            converged = True
            break
        # expected information weights phi^2 / (Phi * (1 - Phi))
        w = np.exp(2.0 * _log_phi(eta) - log_ndtr(eta) - log_ndtr(-eta))
        h = design.T @ (design * w[:, None])
        try:
            step = np.linalg.solve(h, grad)
        except np.linalg.LinAlgError:
            raise SingularDesignError("information matrix is singular")
        scale = 1.0
        for _ in range(50):
            cand = beta + scale * step
            cand_ll = _probit_loglik(design @ cand, k)
            if cand_ll >= ll - 1e-10:
                break
            scale *= 0.5
        beta = beta + scale * step
        eta = design @ beta
        ll = _probit_loglik(eta, k)
        trace.append(ll)
        if np.abs(beta).max() > 1e3:
            raise SeparationError("coefficients diverging; response is separated")

    if ll > -1e-6:
        raise SeparationError("likelihood reaches one; response is separated")
    if not converged:
        grad = design.T @ _probit_score_terms(eta, k)
        converged = bool(np.linalg.norm(grad) < grad_tol)
    return ProbitFit(beta, converged, ll, it, np.asarray(trace))
