"""Fisher randomization test engine.

The p-value is the assignment-distribution probability that a replicate
statistic reaches the observed one,

    p = Pr( T(y, W_rep, x) >= T(y, w_obs, x) ),

with W_rep drawn from the assignment mechanism holding (y, x) fixed. Ties
count toward the p-value. The Monte Carlo estimator adds one to both
numerator and denominator, p_hat = (1 + #exceedances) / (R + 1), which keeps
the test valid at every R.

Determinism: replicate r always uses the stream child(r) of the base seed,
so results are byte-identical across runs and across thread counts; threads
only split the statistic evaluation, never the draws. The observed statistic
is computed through the same prepared evaluator as the replicates, so an
exact tie compares identical floats.

A replicate on which the statistic is undefined contributes -inf (it never
exceeds a defined observed value) and is tallied in the result's degenerate
counter. An undefined observed statistic aborts.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularDesignError, UnsupportedDesignError
from .stats import RngStream

_NEG_INF = float("-inf")


@dataclass(frozen=True)
class FrtResult:
    observed_statistic: float
    replicate_statistics: np.ndarray
    p_value: float
    draws: int
    seed: int
    n_degenerate: int


def _base_stream(seed) -> RngStream:
    return seed if isinstance(seed, RngStream) else RngStream(int(seed))


def _draw_replicates(sampler, base: RngStream, draws: int) -> np.ndarray:
    out = np.empty((draws, sampler.n))
    for r in range(draws):
        out[r] = sampler.sample(base.child(r))
    return out


def _evaluate(evaluator, w_matrix, threads: int) -> np.ndarray:
    if threads <= 1 or w_matrix.shape[0] < 2 * threads:
        vals = evaluator(w_matrix)
    else:
        chunks = np.array_split(w_matrix, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = np.concatenate(list(pool.map(evaluator, chunks)))
    return np.where(np.isnan(vals), _NEG_INF, vals)


def frt_p_value(y, w, x, statistic, sampler, draws: int = 2000, seed=0,
                threads: int = 1) -> FrtResult:
    """Monte Carlo randomization p-value for the observed treatment w.

    Parameters
    ----------
    y, w, x : observed outcome, treatment, covariates (x may be None).
    statistic : a TestStatistic.
    sampler : assignment mechanism with .sample(stream) and .n.
    draws : number of replicates R; p in [1/(R+1), 1].
    seed : integer seed or RngStream; recorded in the result.
    threads : worker threads for statistic evaluation; result is invariant
        to this setting.
    """
    if draws < 1:
        raise DomainError("draws must be at least 1")
    w = np.asarray(w, dtype=float)
    base = _base_stream(seed)
    evaluator = statistic.prepare(y, x)
    t_obs = float(_evaluate(evaluator, w[None, :], 1)[0])
    if t_obs == _NEG_INF:
        raise SingularDesignError("statistic undefined on the observed data")
    w_rep = _draw_replicates(sampler, base, draws)
    t_rep = _evaluate(evaluator, w_rep, threads)
    count = int(np.sum(t_rep >= t_obs))
    n_degenerate = int(np.sum(t_rep == _NEG_INF))
    p = (1.0 + count) / (draws + 1.0)
    return FrtResult(t_obs, t_rep, p, draws, base.seed, n_degenerate)


def _enumerate(sampler):
    enumerate_all = getattr(sampler, "enumerate_all", None)
    if enumerate_all is None:
        raise UnsupportedDesignError(f"design '{getattr(sampler, 'kind', '?')}' is not enumerable")
    return enumerate_all()


def frt_p_value_exact(y, w, x, statistic, sampler) -> float:
    """Exact randomization p-value by full enumeration of the design."""
    w = np.asarray(w, dtype=float)
    patterns, probs = _enumerate(sampler)
    evaluator = statistic.prepare(y, x)
    vals = _evaluate(evaluator, patterns, 1)
    match = np.flatnonzero((patterns == w).all(axis=1))
    if match.size:
        t_obs = float(vals[match[0]])
    else:
        t_obs = float(_evaluate(evaluator, w[None, :], 1)[0])
    if t_obs == _NEG_INF:
        raise SingularDesignError("statistic undefined on the observed data")
    return float(probs[vals >= t_obs].sum())


@dataclass(frozen=True)
class DecisionRule:
    """Randomized threshold rule with exact level alpha over the design.

    Reject outright when the realized p-value is below alpha_plus; reject
    with probability tie_probability when it equals alpha_plus.
    """

    alpha: float
    alpha_plus: float
    tie_probability: float
    atoms: np.ndarray = field(repr=False)
    atom_masses: np.ndarray = field(repr=False)
    _patterns: np.ndarray = field(repr=False)
    _pattern_p: np.ndarray = field(repr=False)

    def realized_p(self, w) -> float:
        """Exact p-value of an assignment in the design's support."""
        w = np.asarray(w, dtype=float)
        match = np.flatnonzero((self._patterns == w).all(axis=1))
        if not match.size:
            raise DomainError("assignment is not in the design's support")
        return float(self._pattern_p[match[0]])

    def decide(self, p_value: float, stream: RngStream) -> bool:
        if p_value < self.alpha_plus:
            return True
        if p_value == self.alpha_plus:
            return bool(stream.generator().random() < self.tie_probability)
        return False

    def rejection_probability(self) -> float:
        """Design probability of rejection under the null; equals alpha."""
        below = float(self.atom_masses[self.atoms < self.alpha_plus].sum())
        at = float(self.atom_masses[self.atoms == self.alpha_plus].sum())
        return below + self.tie_probability * at


def build_decision_rule(y, x, statistic, sampler, alpha: float) -> DecisionRule:
    """Construct the exact-level-alpha randomized rule for an enumerable design.

    The attainable p-values form atoms p_1 < p_2 < ... with cumulative
    masses c_1 < c_2 < ...; the rule rejects everything at atoms strictly
    below the first cumulative mass exceeding alpha, and randomizes on that
    boundary atom so the total rejection probability is exactly alpha.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie strictly inside (0, 1)")
    patterns, probs = _enumerate(sampler)
    evaluator = statistic.prepare(y, x)
    vals = _evaluate(evaluator, patterns, 1)

    # p for every assignment: total mass with statistic >= its own
    uniq, inverse = np.unique(vals, return_inverse=True)
    group_mass = np.bincount(inverse, weights=probs)
    tail_mass = np.cumsum(group_mass[::-1])[::-1]
    pattern_p = tail_mass[inverse]

    atoms, atom_inv = np.unique(pattern_p, return_inverse=True)
    atom_masses = np.bincount(atom_inv, weights=probs)
    cum = np.cumsum(atom_masses)
    j_star = min(int(np.searchsorted(cum, alpha, side="right")), atoms.size - 1)
    alpha_plus = float(atoms[j_star])
    below = float(cum[j_star - 1]) if j_star > 0 else 0.0
    tie_probability = (alpha - below) / float(atom_masses[j_star])
    return DecisionRule(alpha, alpha_plus, tie_probability, atoms, atom_masses,
                        patterns, pattern_p)
