import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_dataset
from pvsel.errors import ConfigError, DegenerateFitError, DomainError, RankDeficiencyError
from pvsel.regcore import (
    Dataset,
    RSSCache,
    as_subset,
    fit_ols,
    full_model_t_stats,
    load_dataset,
    lrt_statistic,
    partial_determination,
)


class TestFit:
    def test_empty_model(self, toy):
        fit = fit_ols(toy, ())
        assert fit.rss == 30.0
        assert fit.residual_df == 4

    def test_mean_fit(self, toy):
        fit = fit_ols(toy, (1,))
        assert fit.coefficients == pytest.approx([2.5])
        assert fit.rss == pytest.approx(5.0)
        assert fit.residual_df == 3

    def test_exact_fit(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((20, 3))
        d = Dataset(X, X[:, 0] - 2 * X[:, 2])
        fit = fit_ols(d, (1, 3))
        assert fit.rss == 0.0
        assert fit.coefficients == pytest.approx([1.0, -2.0])

    def test_rank_deficient(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(30)
        d = Dataset(np.column_stack([x, rng.standard_normal(30), 2 * x]), rng.standard_normal(30))
        with pytest.raises(RankDeficiencyError) as err:
            fit_ols(d, (1, 3))
        assert err.value.subset == (1, 3)
        assert "{1,3}" in str(err.value)

    def test_subset_validation(self, toy):
        with pytest.raises(DomainError):
            fit_ols(toy, (2,))
        with pytest.raises(DomainError):
            as_subset((1, 1))
        assert as_subset([3, 1, 2]) == (1, 2, 3)

    def test_too_many_columns(self):
        d = Dataset(np.eye(3), np.ones(3))
        with pytest.raises(DomainError):
            fit_ols(d, (1, 2, 3))

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            Dataset(np.array([[1.0], [np.nan]]), np.ones(2))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(15, 80), M=st.integers(1, 8))
    def test_residuals_orthogonal(self, seed, n, M):
        rng = np.random.default_rng(seed)
        d = random_dataset(rng, n, M, beta=rng.standard_normal(M))
        fit = fit_ols(d, d.full)
        resid = d.response - d.design @ fit.coefficients
        rnorm = np.linalg.norm(resid)
        for k in range(M):
            col = d.design[:, k]
            assert abs(col @ resid) <= 1e-8 * np.linalg.norm(col) * rnorm + 1e-300

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(10, 60), M=st.integers(2, 7))
    def test_rss_monotone_nested(self, seed, n, M):
        rng = np.random.default_rng(seed)
        d = random_dataset(rng, n, M)
        k = tuple(sorted(rng.choice(np.arange(1, M + 1), size=rng.integers(1, M + 1), replace=False)))
        j = tuple(sorted(rng.choice(k, size=rng.integers(0, len(k) + 1), replace=False)))
        rj, rk = fit_ols(d, j).rss, fit_ols(d, k).rss
        assert rj >= rk * (1 - 1e-9)
        r = partial_determination(d, j, k)
        assert 0.0 <= r <= 1.0
        lrt = lrt_statistic(d, j, k)
        assert lrt.value == pytest.approx(-n * math.log1p(-r), rel=1e-10, abs=1e-12)


class TestStatistics:
    def test_partial_identity(self, toy):
        assert partial_determination(toy, (1,), (1,)) == 0.0
        assert partial_determination(toy, (), (1,)) == pytest.approx(5 / 6)

    def test_partial_perfect(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((10, 2))
        d = Dataset(X, X[:, 1])
        assert partial_determination(d, (), (2,)) == 1.0

    def test_partial_degenerate(self):
        d = Dataset(np.ones((3, 1)), np.zeros(3))
        with pytest.raises(DegenerateFitError):
            partial_determination(d, (), (1,))

    def test_partial_not_nested(self, toy):
        d = Dataset(np.column_stack([np.ones(4), [1.0, 0, 2, 5]]), toy.response)
        with pytest.raises(DomainError):
            partial_determination(d, (1,), (2,))

    def test_lrt_values(self, toy):
        assert lrt_statistic(toy, (1,), (1,)).value == 0.0
        got = lrt_statistic(toy, (), (1,))
        assert got.value == pytest.approx(-4 * math.log(1 / 6), rel=1e-12)
        assert got.value == pytest.approx(7.16703, abs=1e-5)
        assert not got.saturated

    def test_lrt_saturates(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((10, 2))
        got = lrt_statistic(Dataset(X, X[:, 0]), (), (1,))
        assert got.saturated and got.value > 1e300


class TestTStats:
    def test_signal_isolation(self):
        rng = np.random.default_rng(4)
        Q, _ = np.linalg.qr(rng.standard_normal((40, 5)))
        y = Q[:, 2] + 1e-3 * rng.standard_normal(40)
        d = Dataset(Q, y)
        ts = full_model_t_stats(d)
        assert np.argmax(np.abs(ts.t)) == 2
        assert fit_ols(d, (1, 2, 4, 5)).rss > 1e3 * fit_ols(d, d.full).rss

    def test_zero_response(self):
        rng = np.random.default_rng(5)
        ts = full_model_t_stats(Dataset(rng.standard_normal((20, 3)), np.zeros(20)))
        assert ts.degenerate
        assert np.all(ts.t == 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_drop_one_identity(self, seed):
        rng = np.random.default_rng(seed)
        d = random_dataset(rng, 50, 5, beta=rng.standard_normal(5) * 0.3)
        ts = full_model_t_stats(d)
        rss_f = fit_ols(d, d.full).rss
        for i in range(1, 6):
            drop = tuple(k for k in d.full if k != i)
            lhs = fit_ols(d, drop).rss / rss_f
            assert lhs == pytest.approx(ts.t[i - 1] ** 2 / (50 - 5) + 1, rel=1e-8)

    def test_matches_textbook_formula(self):
        rng = np.random.default_rng(6)
        d = random_dataset(rng, 60, 4, beta=[1, 0, -1, 0.5])
        X, y = d.design, d.response
        G = np.linalg.inv(X.T @ X)
        b = G @ X.T @ y
        s2 = np.sum((y - X @ b) ** 2) / (60 - 4)
        assert full_model_t_stats(d).t == pytest.approx(b / np.sqrt(s2 * np.diag(G)), rel=1e-9)


class TestCache:
    def test_compressed_matches_direct(self):
        rng = np.random.default_rng(7)
        d = random_dataset(rng, 80, 6, beta=[1, 0, 0, 0.5, 0, 0])
        cache = RSSCache(d)
        for j in [(), (1,), (2, 5), (1, 3, 4, 6), d.full]:
            assert cache.rss(j) == pytest.approx(fit_ols(d, j).rss, rel=1e-10)

    def test_nested_prefixes(self):
        rng = np.random.default_rng(8)
        d = random_dataset(rng, 50, 4, beta=[0, 1, 0, 1])
        vals = RSSCache(d).nested_rss((3, 1, 4, 2))
        want = [fit_ols(d, j).rss for j in [(), (3,), (1, 3), (1, 3, 4), (1, 2, 3, 4)]]
        assert vals == pytest.approx(want, rel=1e-10)

    def test_nested_rank_error(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal(20)
        d = Dataset(np.column_stack([x, x, rng.standard_normal(20)]), rng.standard_normal(20))
        with pytest.raises(RankDeficiencyError):
            RSSCache(d).nested_rss((1, 2, 3))


class TestLoad:
    def test_header_and_name(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,y,b\n1,2,3\n4,5,6\n7,8,10\n")
        d = load_dataset(p, "y")
        assert d.names == ("a", "b")
        assert d.response.tolist() == [2, 5, 8]
        assert d.design[:, 1].tolist() == [3, 6, 10]

    def test_headerless_index(self, tmp_path):
        p = tmp_path / "d.txt"
        p.write_text("1 2 3\n4 5 6\n")
        d = load_dataset(p, 3)
        assert d.response.tolist() == [3, 6]
        assert d.M == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="nope.csv"):
            load_dataset(tmp_path / "nope.csv", 1)

    def test_unknown_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ConfigError, match="'z'"):
            load_dataset(p, "z")

    def test_ragged(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,2\n3\n")
        with pytest.raises(ConfigError, match="row 3"):
            load_dataset(p, 1)
