"""Randomization test engine: p-values, exactness, and decision rules."""
import math

import numpy as np
import pytest

from frtci.assignment import BernoulliDesign, CompleteRandomization
from frtci.engine import build_decision_rule, frt_p_value, frt_p_value_exact
from frtci.errors import DomainError, SingularDesignError, UnsupportedDesignError
from frtci.statistics import TestStatistic, diff_in_means, t_pos_linear
from frtci.stats import RngStream


def _toy_data(n=24, seed=5, effect=0.0):
    gen = RngStream(seed).generator()
    x = gen.standard_normal((n, 2))
    w = np.zeros(n)
    w[: n // 2] = 1.0
    gen.shuffle(w)
    y = x @ np.array([1.0, -0.5]) + effect * w + gen.standard_normal(n)
    return y, w, x


class _Monotone(TestStatistic):
    """Strictly increasing transform of another statistic."""

    name = "monotone-wrap"

    def __init__(self, inner, fn):
        self.inner = inner
        self.fn = fn

    def __call__(self, y, w, x=None):
        return float(self.fn(self.inner(y, w, x)))

    def prepare(self, y, x=None):
        evaluate = self.inner.prepare(y, x)

        def wrapped(w_matrix):
            vals = evaluate(w_matrix)
            out = self.fn(vals)
            return np.where(np.isneginf(vals), vals, out)

        return wrapped


class _TableStatistic(TestStatistic):
    """Looks the statistic up by assignment pattern; for hand-built designs."""

    name = "table"

    def __init__(self, table):
        self.table = table

    def __call__(self, y, w, x=None):
        return float(self.table[tuple(np.asarray(w, dtype=float))])


class _FiniteDesign:
    kind = "finite"

    def __init__(self, patterns, probs):
        self.patterns = np.asarray(patterns, dtype=float)
        self.probs = np.asarray(probs, dtype=float)

    @property
    def n(self):
        return self.patterns.shape[1]

    def sample(self, stream):
        idx = stream.generator().choice(len(self.probs), p=self.probs)
        return self.patterns[idx].copy()

    def enumerate_all(self):
        return self.patterns, self.probs


def _one_hot_design(stats, probs):
    k = len(stats)
    patterns = np.eye(k)
    table = {tuple(row): s for row, s in zip(patterns, stats)}
    return _FiniteDesign(patterns, probs), _TableStatistic(table), patterns


# ---------------------------------------------------------------------------
# Monte Carlo p-value
# ---------------------------------------------------------------------------

def test_p_value_lower_bound_and_metadata():
    y, w, x = _toy_data()
    design = CompleteRandomization(len(w), int(w.sum()))
    res = frt_p_value(y, w, x, t_pos_linear, design, draws=199, seed=7)
    assert 1.0 / 200 <= res.p_value <= 1.0
    assert res.draws == 199
    assert res.seed == 7
    assert res.replicate_statistics.shape == (199,)


def test_p_value_add_one_rule_hand_check():
    y, w, x = _toy_data()
    design = CompleteRandomization(len(w), int(w.sum()))
    res = frt_p_value(y, w, x, t_pos_linear, design, draws=150, seed=9)
    exceed = int(np.sum(res.replicate_statistics >= res.observed_statistic))
    assert res.p_value == pytest.approx((1 + exceed) / 151.0)


def test_monotone_transform_invariance():
    # any strictly increasing transform of the statistic gives the identical
    # p-value because replicate draws depend only on the seed
    y, w, x = _toy_data(effect=0.8)
    design = CompleteRandomization(len(w), int(w.sum()))
    base = frt_p_value(y, w, x, diff_in_means, design, draws=240, seed=11)
    for fn in (lambda t: 3.0 * t + 2.0, np.arctan, lambda t: t ** 3):
        wrapped = _Monotone(diff_in_means, fn)
        res = frt_p_value(y, w, x, wrapped, design, draws=240, seed=11)
        assert res.p_value == base.p_value


def test_thread_count_invariance():
    y, w, x = _toy_data()
    design = BernoulliDesign(np.full(len(w), 0.5))
    results = [
        frt_p_value(y, w, x, t_pos_linear, design, draws=120, seed=13, threads=k)
        for k in (1, 2, 5)
    ]
    for res in results[1:]:
        assert res.p_value == results[0].p_value
        assert np.array_equal(res.replicate_statistics,
                              results[0].replicate_statistics)


def test_mc_agrees_with_exact_within_mc_error():
    y, w, x = _toy_data(n=12, effect=1.0)
    design = CompleteRandomization(12, int(w.sum()))
    exact = frt_p_value_exact(y, w, x, diff_in_means, design)
    big_r = 4000
    mc = frt_p_value(y, w, x, diff_in_means, design, draws=big_r, seed=15)
    se = math.sqrt(exact * (1 - exact) / big_r)
    assert abs(mc.p_value - exact) <= 3.0 * se + 2.0 / big_r


def test_exact_p_value_includes_observed_tie():
    # the observed assignment is in the enumeration, so p covers at least its
    # own design probability
    y, w, x = _toy_data(n=10)
    design = CompleteRandomization(10, int(w.sum()))
    exact = frt_p_value_exact(y, w, x, diff_in_means, design)
    patterns, probs = design.enumerate_all()
    match = np.all(patterns == w, axis=1)
    assert exact >= probs[match].sum() - 1e-15


def test_observed_undefined_statistic_aborts():
    # exact linear outcome: zero residual makes the statistic undefined on
    # the observed data, which must abort rather than return a p-value
    n = 16
    x = RngStream(17).generator().standard_normal((n, 2))
    y = x @ np.array([2.0, 1.0])
    w = np.zeros(n)
    w[:8] = 1.0
    design = CompleteRandomization(n, 8)
    with pytest.raises(SingularDesignError):
        frt_p_value(y, w, x, t_pos_linear, design, draws=19, seed=19)


def test_undefined_replicates_count_as_non_exceedances():
    # replicates where the statistic is undefined become -inf: they stay in
    # the denominator and are tallied, never silently dropped
    class Flaky(TestStatistic):
        name = "flaky"

        def __call__(self, y, w, x=None):
            return 2.0

        def prepare(self, y, x=None):
            def evaluate(w_matrix):
                out = np.full(np.atleast_2d(w_matrix).shape[0], -np.inf)
                out[::2] = 2.0
                return out

            return evaluate

    y, w, x = _toy_data(n=14)
    design = CompleteRandomization(14, int(w.sum()))
    res = frt_p_value(y, w, x, Flaky(), design, draws=100, seed=21)
    assert res.n_degenerate == 50
    assert res.p_value == pytest.approx((1 + 50) / 101.0)


def test_exact_requires_enumerable_design():
    gen = RngStream(23).generator()
    y = gen.standard_normal(60)
    w = np.zeros(60)
    w[:30] = 1.0
    design = CompleteRandomization(60, 30)
    with pytest.raises(UnsupportedDesignError):
        frt_p_value_exact(y, w, None, diff_in_means, design)


def test_draw_count_domain():
    y, w, x = _toy_data()
    design = CompleteRandomization(len(w), int(w.sum()))
    with pytest.raises(DomainError):
        frt_p_value(y, w, x, diff_in_means, design, draws=0, seed=23)


# ---------------------------------------------------------------------------
# exact-level randomized decision rules
# ---------------------------------------------------------------------------

def test_decision_rule_hand_example():
    # five equally likely assignments with distinct statistics: attainable
    # p-values are 0.2, 0.4, ..., 1.0; alpha = 0.3 splits the 0.4 atom
    design, stat, patterns = _one_hot_design([5.0, 4.0, 3.0, 2.0, 1.0],
                                             np.full(5, 0.2))
    rule = build_decision_rule(None, None, stat, design, alpha=0.3)
    assert rule.alpha == 0.3
    assert rule.alpha_plus == pytest.approx(0.4)
    assert rule.tie_probability == pytest.approx(0.5)
    assert rule.realized_p(patterns[0]) == pytest.approx(0.2)
    assert rule.realized_p(patterns[1]) == pytest.approx(0.4)
    assert rule.realized_p(patterns[4]) == pytest.approx(1.0)
    assert rule.rejection_probability() == pytest.approx(0.3, abs=1e-15)
    # below the boundary: always reject; above: never
    assert rule.decide(0.2, RngStream(1))
    assert not rule.decide(0.6, RngStream(1))
    # on the boundary the rule consults the stream's first uniform
    for seed in range(8):
        u = float(RngStream(seed).generator().random())
        assert rule.decide(0.4, RngStream(seed)) == (u < 0.5)


def test_decision_rule_boundary_frequency():
    design, stat, _ = _one_hot_design([5.0, 4.0, 3.0, 2.0, 1.0], np.full(5, 0.2))
    rule = build_decision_rule(None, None, stat, design, alpha=0.3)
    draws = 4000
    hits = sum(rule.decide(0.4, RngStream(40_000 + s)) for s in range(draws))
    assert abs(hits / draws - 0.5) < 3.0 * math.sqrt(0.25 / draws)


def test_decision_rule_exact_level_random_cases():
    gen = RngStream(25).generator()
    for trial in range(25):
        k = int(gen.integers(3, 30))
        # round to force occasional ties across assignments
        stats = np.round(gen.standard_normal(k), 1)
        raw = gen.random(k) + 0.05
        probs = raw / raw.sum()
        alpha = float(gen.uniform(0.01, 0.6))
        design, stat, _ = _one_hot_design(stats, probs)
        rule = build_decision_rule(None, None, stat, design, alpha=alpha)
        assert rule.rejection_probability() == pytest.approx(alpha, abs=1e-12)


def test_decision_rule_ties_share_one_atom():
    # tied statistics merge into a single attainable p-value; an alpha that
    # exactly covers the first atom leaves nothing to randomize
    design, stat, patterns = _one_hot_design([2.0, 2.0, 1.0, 0.0],
                                             np.full(4, 0.25))
    rule = build_decision_rule(None, None, stat, design, alpha=0.5)
    assert rule.realized_p(patterns[0]) == pytest.approx(0.5)
    assert rule.realized_p(patterns[1]) == pytest.approx(0.5)
    assert rule.alpha_plus == pytest.approx(0.75)
    assert rule.tie_probability == pytest.approx(0.0)
    assert rule.rejection_probability() == pytest.approx(0.5)


def test_decision_rule_realized_p_matches_tail_mass():
    design, stat, patterns = _one_hot_design([3.0, 1.0, -1.0],
                                             np.array([0.5, 0.3, 0.2]))
    rule = build_decision_rule(None, None, stat, design, alpha=0.1)
    assert rule.realized_p(patterns[0]) == pytest.approx(0.5)
    assert rule.realized_p(patterns[1]) == pytest.approx(0.8)
    assert rule.realized_p(patterns[2]) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        rule.realized_p(np.array([1.0, 1.0, 0.0]))


def test_decision_rule_alpha_domain():
    design, stat, _ = _one_hot_design([1.0, 0.0], np.array([0.5, 0.5]))
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(DomainError):
            build_decision_rule(None, None, stat, design, alpha=bad)


def test_decision_rule_alpha_near_one():
    design, stat, _ = _one_hot_design([1.0, 0.0], np.array([0.5, 0.5]))
    rule = build_decision_rule(None, None, stat, design, alpha=0.9999)
    assert rule.alpha_plus == pytest.approx(1.0)
    assert rule.rejection_probability() == pytest.approx(0.9999)
    assert rule.decide(0.5, RngStream(3))
