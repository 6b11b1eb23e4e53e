import itertools
import math

import numpy as np
import pytest
from scipy import integrate, special

from conftest import random_dataset
from pvsel.criteria import (
    Kind,
    ScoredModel,
    criterion_from_table,
    log_score_mpvc,
    log_score_mpvc_max,
    log_score_penalized,
    parse_criteria,
    parse_criterion,
    select,
)
from pvsel.errors import ConfigError, DegenerateFitError
from pvsel.regcore import Dataset, fit_ols


def quad_log_tail(a, b, x):
    lb = special.betaln(a, b)
    f = lambda t: math.exp((a - 1) * math.log(t) + (b - 1) * math.log1p(-t) - lb)
    val, _ = integrate.quad(f, x, 1.0, epsabs=0, epsrel=1e-12, limit=200)
    return math.log(val)


def orthogonal_design(rng, n, M, keep):
    """Orthonormal columns; response in span(columns ``keep``) plus noise orthogonal to all."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, M + 1)))
    y = Q[:, [k - 1 for k in keep]] @ rng.uniform(1, 2, len(keep)) + Q[:, M] if keep else Q[:, M]
    return Dataset(Q[:, :M], y)


class TestMinimalPValue:
    def test_empty_model_boundary(self):
        d = Dataset(np.zeros((100, 1)) + np.arange(100)[:, None], np.ones(100))
        assert log_score_mpvc(d, (), 0.0) == pytest.approx(-math.log(10), rel=1e-14)
        assert math.exp(log_score_mpvc(d, (), 0.0)) == pytest.approx(0.1)

    def test_zero_partial_determination(self):
        rng = np.random.default_rng(0)
        d = orthogonal_design(rng, 30, 3, keep=())
        assert log_score_mpvc(d, (1, 2), 0.7) == pytest.approx(2 * 0.7, abs=1e-12)

    def test_toy_against_quadrature(self, toy):
        assert log_score_mpvc(toy, (), 0.0) == pytest.approx(-0.5 * math.log(4))
        want = quad_log_tail(0.5, 1.5, 5 / 6)
        assert log_score_mpvc(toy, (1,), 0.0) == pytest.approx(want, rel=1e-10)

    def test_degenerate_response(self):
        d = Dataset(np.ones((5, 1)), np.zeros(5))
        with pytest.raises(DegenerateFitError):
            log_score_mpvc(d, (1,), 0.0)


class TestMaximalPValue:
    def test_full_model_boundary(self):
        rng = np.random.default_rng(1)
        d = random_dataset(rng, 100, 5)
        a_n = math.log(100) / 2
        assert log_score_mpvc_max(d, d.full, a_n) == pytest.approx(-5 * math.log(100) / 2)
        assert log_score_mpvc_max(d, d.full, a_n) == pytest.approx(-11.5129, abs=1e-4)

    def test_zero_partial_determination(self):
        rng = np.random.default_rng(2)
        d = orthogonal_design(rng, 40, 5, keep=(1, 2, 3))
        assert log_score_mpvc_max(d, (1, 2, 3), 0.4) == pytest.approx(-3 * 0.4, abs=1e-9)

    def test_against_quadrature(self):
        rng = np.random.default_rng(3)
        d = random_dataset(rng, 50, 4, beta=[0.3, 0, -0.2, 0.1])
        rss_f = fit_ols(d, d.full).rss
        for drop in d.full:
            j = tuple(k for k in d.full if k != drop)
            rss_j = fit_ols(d, j).rss
            x = (rss_j - rss_f) / rss_j
            want = -3 * 1.0 + quad_log_tail(0.5, (50 - 4) / 2, x)
            assert log_score_mpvc_max(d, j, 1.0) == pytest.approx(want, rel=1e-9)


class TestPenalized:
    def test_toy_values(self, toy):
        assert log_score_penalized(toy, (1,), 2.0) == pytest.approx(-4 * math.log(5 / 4) - 2)
        assert log_score_penalized(toy, (1,), 2.0) == pytest.approx(-2.89257, abs=1e-5)
        assert log_score_penalized(toy, (), 2.0) == pytest.approx(-8.05961, abs=1e-5)

    def test_equal_rss_equal_score(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(20)
        d = Dataset(np.column_stack([x, x * 1.0]), rng.standard_normal(20))
        assert log_score_penalized(d, (1,), 3.0) == log_score_penalized(d, (2,), 3.0)

    def test_perfect_fit_sentinel(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((10, 2))
        assert log_score_penalized(Dataset(X, X[:, 0]), (1,), 2.0) == math.inf


class TestSelect:
    def test_cardinality_tie(self):
        s = [ScoredModel((), -1.0), ScoredModel((1,), -1.0)]
        assert select(s, "min") == ()

    def test_single(self):
        assert select([ScoredModel((3,), 7.0)], "max") == (3,)

    def test_lexicographic_tie(self):
        s = [ScoredModel((2,), -3.0), ScoredModel((1,), -3.0)]
        assert select(s, "min") == (1,)

    def test_infinite_scores_tie_on_cardinality(self):
        s = [ScoredModel((1, 2, 3), math.inf), ScoredModel((1, 2), math.inf), ScoredModel((), 5.0)]
        assert select(s, "max") == (1, 2)
        s = [ScoredModel((1, 2, 3), -math.inf), ScoredModel((2, 3), -math.inf)]
        assert select(s, "min") == (2, 3)

    def test_empty(self):
        with pytest.raises(ConfigError):
            select([], "min")

    def test_order_invariant(self):
        rng = np.random.default_rng(6)
        s = [ScoredModel((i,), float(rng.integers(0, 3))) for i in range(1, 9)]
        first = select(s, "max")
        for _ in range(10):
            rng.shuffle(s)
            assert select(s, "max") == first


class TestParse:
    @pytest.mark.parametrize(
        "name,kind,n,value",
        [
            ("mpvc", Kind.MPV_MIN, 100, 0.0),
            ("mpvccal", Kind.MPV_MIN, 100, math.log(100) / 2),
            ("mpvc-max-cal", Kind.MPV_MAX, 400, math.log(400) / 2),
            ("aic", Kind.PENALIZED_LL, 50, 2.0),
            ("bic", Kind.PENALIZED_LL, 50, math.log(50)),
            ("mpvc:a=1.5", Kind.MPV_MIN, 10, 1.5),
            ("mpvc-max:a=3", Kind.MPV_MAX, 10, 3.0),
            ("pll:c=4", Kind.PENALIZED_LL, 10, 4.0),
        ],
    )
    def test_names(self, name, kind, n, value):
        spec = parse_criterion(name)
        assert spec.kind is kind
        assert spec.penalty(n) == pytest.approx(value)

    @pytest.mark.parametrize("name", ["cp", "mpvc:c=1", "pll:a=1", "mpvc:a=-1", "pll:c=0", "mpvc:a=x"])
    def test_rejected(self, name):
        with pytest.raises(ConfigError):
            parse_criterion(name)

    def test_list(self):
        assert [s.name for s in parse_criteria("mpvc, bic")] == ["mpvc", "bic"]

    def test_table(self):
        spec = criterion_from_table("tab", Kind.MPV_MIN, {"75": 1.0, 100: 2.0})
        assert spec.penalty(100) == 2.0
        with pytest.raises(ConfigError):
            spec.penalty(200)


class TestStratumProperties:
    @pytest.mark.parametrize("seed", range(6))
    def test_stratum_argmin_is_best_rss(self, seed):
        rng = np.random.default_rng(seed)
        M = 5
        d = random_dataset(rng, 40, M, beta=rng.standard_normal(M) * 0.4)
        rss0 = fit_ols(d, ()).rss
        for p in range(1, M + 1):
            subsets = list(itertools.combinations(range(1, M + 1), p))
            r0 = {j: (rss0 - fit_ols(d, j).rss) / rss0 for j in subsets}
            rss = {j: fit_ols(d, j).rss for j in subsets}
            mpvc = {j: log_score_mpvc(d, j, 0.3) for j in subsets}
            mpvc_max = {j: log_score_mpvc_max(d, j, 0.3) for j in subsets}
            bic = {j: log_score_penalized(d, j, math.log(40)) for j in subsets}
            best = max(subsets, key=lambda j: r0[j])
            assert min(subsets, key=mpvc.get) == best
            assert max(subsets, key=mpvc_max.get) == best
            assert max(subsets, key=bic.get) == best
            assert min(subsets, key=rss.get) == best
            # strictly decreasing in R_0j within the stratum
            ordered = sorted(subsets, key=lambda j: r0[j])
            scores = [mpvc[j] for j in ordered]
            assert all(a > b for a, b in zip(scores, scores[1:]))

    @pytest.mark.parametrize("seed", range(10))
    def test_equal_cardinality_means_equal_subset(self, seed):
        rng = np.random.default_rng(100 + seed)
        M = 5
        n = int(rng.integers(20, 80))
        d = random_dataset(rng, n, M, beta=rng.standard_normal(M) * rng.uniform(0, 0.5, M))
        subsets = [c for p in range(M + 1) for c in itertools.combinations(range(1, M + 1), p)]
        chosen = []
        for name in ["mpvc", "mpvccal", "mpvc-max-cal", "aic", "bic"]:
            spec = parse_criterion(name)
            pen = spec.penalty(n)
            if spec.kind is Kind.MPV_MIN:
                scored = [ScoredModel(j, log_score_mpvc(d, j, pen)) for j in subsets]
            elif spec.kind is Kind.MPV_MAX:
                scored = [ScoredModel(j, log_score_mpvc_max(d, j, pen)) for j in subsets]
            else:
                scored = [ScoredModel(j, log_score_penalized(d, j, pen)) for j in subsets]
            chosen.append(select(scored, spec.direction))
        for a, b in itertools.combinations(chosen, 2):
            if len(a) == len(b):
                assert a == b
