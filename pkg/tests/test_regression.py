from __future__ import annotations

import numpy as np
import pytest

from dp_rezone.regression import ols_regress, repair_rank

from .oracles import ols_oracle


def fixture_20x5():
    """Canned 20-row, 5-column (intercept included) design; seeded once and frozen."""
    rng = np.random.default_rng(20260808)
    n = 20
    X = np.column_stack(
        [
            np.ones(n),
            rng.normal(2.0, 1.0, n),
            rng.uniform(-1, 1, n),
            rng.normal(0, 3.0, n),
            rng.integers(0, 2, n).astype(float),
        ]
    )
    beta_true = np.array([1.5, -0.8, 2.2, 0.05, 0.6])
    y = X @ beta_true + rng.normal(0, 0.7, n)
    return X, y


# Oracle outputs for fixture_20x5, computed by exact-rational normal equations
# plus quadrature t-tails (tests/oracles.py) and frozen here.
FROZEN = {
    "coef": [1.93826729488, -0.668706092154, 2.88313007649, 0.147250880717, 0.152352896862],
    "stderr": [0.344447682248, 0.18072554955, 0.273505917773, 0.0601249228199, 0.38879035053],
    "tvalues": [5.62717473443, -3.70011929038, 10.5413809689, 2.44908224096, 0.391863884108],
    "pvalues": [4.8158750298e-05, 0.00213856597247, 2.48629629714e-08, 0.0270901655462, 0.700669854334],
    "conf_low": [1.20409443908, -1.05391348261, 2.30016601234, 0.0190976412959, -0.676334119093],
    "conf_high": [2.67244015068, -0.283498701695, 3.46609414063, 0.275404120139, 0.981039912818],
    "r2": 0.923136074565,
    "adj_r2": 0.902639027782,
}


class TestOlsAgainstOracle:
    def test_frozen_fixture_agreement(self):
        X, y = fixture_20x5()
        fit = ols_regress(X, y)
        for key in ("coef", "stderr", "tvalues", "pvalues", "conf_low", "conf_high"):
            got = getattr(fit, {"coef": "coef", "stderr": "stderr", "tvalues": "tvalues",
                                "pvalues": "pvalues", "conf_low": "conf_low",
                                "conf_high": "conf_high"}[key])
            np.testing.assert_allclose(got, FROZEN[key], rtol=0, atol=1e-8, err_msg=key)
        assert fit.r2 == pytest.approx(FROZEN["r2"], abs=1e-8)
        assert fit.adj_r2 == pytest.approx(FROZEN["adj_r2"], abs=1e-8)
        assert fit.df_resid == 15

    def test_live_oracle_agreement(self):
        X, y = fixture_20x5()
        fit = ols_regress(X, y)
        oracle = ols_oracle(X, y)
        np.testing.assert_allclose(fit.coef, oracle["coef"], atol=1e-8)
        np.testing.assert_allclose(fit.stderr, oracle["stderr"], atol=1e-8)
        np.testing.assert_allclose(fit.tvalues, oracle["tvalues"], atol=1e-8)
        np.testing.assert_allclose(fit.pvalues, oracle["pvalues"], atol=1e-8)
        np.testing.assert_allclose(fit.conf_low, oracle["conf_low"], atol=1e-8)
        np.testing.assert_allclose(fit.conf_high, oracle["conf_high"], atol=1e-8)
        assert fit.adj_r2 == pytest.approx(oracle["adj_r2"], abs=1e-8)


class TestOlsBasics:
    def test_noiseless_fit_recovers_exactly(self):
        x = np.linspace(0, 5, 30)
        X = np.column_stack([np.ones_like(x), x])
        y = 2.0 + 3.0 * x
        fit = ols_regress(X, y)
        assert fit.coef[0] == pytest.approx(2.0, abs=1e-10)
        assert fit.coef[1] == pytest.approx(3.0, abs=1e-10)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)

    def test_duplicate_column_rank_error(self):
        x = np.linspace(0, 5, 12)
        X = np.column_stack([np.ones_like(x), x, x])
        with pytest.raises(np.linalg.LinAlgError):
            ols_regress(X, x)

    def test_needs_more_rows_than_columns(self):
        X = np.ones((3, 4))
        with pytest.raises(ValueError):
            ols_regress(X, np.zeros(3))


class TestRepairRank:
    def test_drops_constant_indicator(self):
        n = 10
        X = np.column_stack([np.ones(n), np.arange(n, dtype=float), np.zeros(n)])
        kept, names, dropped = repair_rank(X, ["intercept", "x", "never"])
        assert names == ("intercept", "x")
        assert dropped == ("never",)
        assert kept.shape == (n, 2)

    def test_drops_collinear_column(self):
        n = 10
        x = np.arange(n, dtype=float)
        X = np.column_stack([np.ones(n), x, 2 * x + 1])
        kept, names, dropped = repair_rank(X, ["intercept", "x", "affine_of_x"])
        assert names == ("intercept", "x")
        assert dropped == ("affine_of_x",)

    def test_keeps_full_rank_design(self):
        X, y = fixture_20x5()
        kept, names, dropped = repair_rank(X, [f"c{i}" for i in range(5)])
        assert dropped == ()
        assert kept.shape == X.shape
