from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wpcopula import (
    BootstrapConfig,
    CostLimitError,
    Dataset,
    SimSpec,
    bootstrap_sample,
    generate,
    knn_fit,
    lr_fit,
    p_value,
    quantile,
    run_test,
)

from conftest import make_linear


class TestQuantile:
    def test_order_statistic_examples(self):
        vals = np.arange(1, 101, dtype=float)
        assert quantile(vals, 0.05) == 95.0
        assert quantile(vals, 0.5) == 50.0
        assert quantile([10.0], 0.37) == 10.0

    def test_empty_and_bad_level(self):
        with pytest.raises(ValueError, match="empty"):
            quantile([], 0.05)
        with pytest.raises(ValueError, match="alpha"):
            quantile([1.0], 0.0)

    @given(
        values=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=400),
        num=st.integers(1, 49),
        den=st.integers(50, 50),
    )
    def test_matches_exact_rational_ceiling(self, values, num, den):
        # alpha = num/den with a small denominator: the intended order
        # statistic is unambiguous in exact arithmetic
        alpha = Fraction(num, den)
        b = len(values)
        idx = -(-((1 - alpha) * b) // 1)  # exact ceiling
        want = sorted(values)[int(idx) - 1]
        assert quantile(values, float(alpha)) == want


class TestPValue:
    def test_formula(self):
        boot = np.arange(1.0, 101.0)
        assert p_value(1000.0, boot) == pytest.approx(1 / 101)
        assert p_value(0.0, boot) == pytest.approx(1.0)  # below every replicate
        assert p_value(50.0, boot) == pytest.approx((1 + 51) / 101)

    @given(st.lists(st.floats(0, 1e3), min_size=1, max_size=50), st.floats(0, 1e3))
    def test_bounds(self, boot, stat):
        p = p_value(stat, np.array(boot))
        assert 1 / (len(boot) + 1) <= p <= 1.0


class TestBootstrapSample:
    def test_identical_covariates_single_atom(self, rng):
        x = np.ones((5, 1))
        y = np.arange(5.0)
        ds = Dataset(x, y, y)
        m1, m2 = knn_fit(ds, 1, 5), knn_fit(ds, 2, 5)
        sample = bootstrap_sample(ds, m1, m2, rng)
        assert np.all(sample.x == 1.0)
        assert set(sample.y1) <= set(y)

    def test_k_equals_n_draws_from_whole_column(self, rng):
        ds = make_linear(n=60, seed=1)
        m1, m2 = knn_fit(ds, 1, 60), knn_fit(ds, 2, 60)
        draws = np.concatenate(
            [bootstrap_sample(ds, m1, m2, rng).y1 for _ in range(200)]
        )
        # uniform over the whole response column, regardless of x
        freq = np.array([np.mean(draws == v) for v in ds.y1])
        assert np.all(np.abs(freq - 1 / 60) < 4 * np.sqrt((1 / 60) * (59 / 60) / draws.size))

    def test_product_sampling_kills_conditional_dependence(self, rng):
        # source noise covariance 0.5, but Y1*, Y2* are drawn independently
        ds = generate(SimSpec(model="linear", n=2000, d=1, a=0.5, seed=3))
        resid1 = ds.y1 - ds.x[:, 0] * np.linalg.lstsq(ds.x, ds.y1, rcond=None)[0][0]
        resid2 = ds.y2 - ds.x[:, 0] * np.linalg.lstsq(ds.x, ds.y2, rcond=None)[0][0]
        assert abs(np.corrcoef(resid1, resid2)[0, 1] - 0.5) < 0.06
        m1, m2 = knn_fit(ds, 1, 60), knn_fit(ds, 2, 60)
        m1.warm_cache(), m2.warm_cache()
        idx = np.zeros(20_000, dtype=np.int64)  # fixed covariate row
        y1 = m1.sample_rows(idx, rng)
        y2 = m2.sample_rows(idx, rng)
        assert abs(np.corrcoef(y1, y2)[0, 1]) < 0.05


class TestRunTest:
    def test_outcome_invariants(self):
        ds = make_linear(n=60, seed=4)
        out = run_test(ds, "lr", cfg=BootstrapConfig(n_boot=50, alpha=0.05, seed=4))
        assert out.reject == (out.statistic > out.quantile)
        assert out.p_value == p_value(out.statistic, out.boot_stats)
        assert out.quantile == quantile(out.boot_stats, 0.05)
        assert out.k_selected is None
        assert out.boot_stats.shape == (50,)

    def test_knn_reports_selected_k(self):
        ds = make_linear(n=80, seed=5)
        out = run_test(ds, "knn", cfg=BootstrapConfig(n_boot=20, seed=5))
        k1, k2 = out.k_selected
        assert 1 <= k1 <= 80 and 1 <= k2 <= 80

    def test_fixed_k_and_pair(self):
        ds = make_linear(n=60, seed=6)
        out_scalar = run_test(ds, "knn", k=12, cfg=BootstrapConfig(n_boot=10, seed=6))
        assert out_scalar.k_selected == (12, 12)
        out_pair = run_test(ds, "knn", k=(8, 15), cfg=BootstrapConfig(n_boot=10, seed=6))
        assert out_pair.k_selected == (8, 15)

    def test_deterministic_and_thread_invariant(self):
        ds = make_linear(n=70, seed=7)
        outs = [
            run_test(ds, "knn", k=10, cfg=BootstrapConfig(n_boot=30, seed=7), threads=t)
            for t in (1, 1, 4)
        ]
        for other in outs[1:]:
            assert other.statistic == outs[0].statistic
            assert np.array_equal(other.boot_stats, outs[0].boot_stats)
            assert other.p_value == outs[0].p_value

    def test_refit_toggle_changes_replicates(self):
        ds = make_linear(n=60, seed=8)
        refit = run_test(ds, "lr", cfg=BootstrapConfig(n_boot=25, seed=8))
        frozen = run_test(
            ds, "lr", cfg=BootstrapConfig(n_boot=25, seed=8, refit_margins=False)
        )
        assert refit.statistic == frozen.statistic
        assert not np.array_equal(refit.boot_stats, frozen.boot_stats)

    def test_cost_guard(self):
        ds = make_linear(n=60, seed=9)
        with pytest.raises(CostLimitError, match="ceiling"):
            run_test(ds, "lr", cfg=BootstrapConfig(n_boot=10, seed=9), cost_ceiling=100.0)
        out = run_test(
            ds, "lr", cfg=BootstrapConfig(n_boot=10, seed=9), cost_ceiling=100.0,
            force=True,
        )
        assert out.boot_stats.shape == (10,)

    def test_unknown_margin_kind(self):
        ds = make_linear(n=60, seed=10)
        with pytest.raises(ValueError, match="margin kind"):
            run_test(ds, "spline")

    def test_config_validation(self):
        with pytest.raises(ValueError, match="alpha"):
            BootstrapConfig(alpha=1.5)
        with pytest.raises(ValueError, match="replicate"):
            BootstrapConfig(n_boot=0)

    def test_standardize_flag_runs(self):
        ds = generate(SimSpec(model="linear", n=60, d=2, a=0.0, seed=11))
        scaled = Dataset(ds.x * np.array([100.0, 0.01]), ds.y1, ds.y2)
        out = run_test(
            scaled, "lr", cfg=BootstrapConfig(n_boot=15, seed=11), standardize=True
        )
        ref = run_test(ds, "lr", cfg=BootstrapConfig(n_boot=15, seed=11), standardize=True)
        # column scaling is invisible after z-scoring
        assert out.statistic == pytest.approx(ref.statistic, rel=1e-9)
