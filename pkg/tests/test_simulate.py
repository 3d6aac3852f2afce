import json

import numpy as np
import pytest

from hdlrt.errors import EmptyInput
from hdlrt.simulate import (SimConfig, THRESHOLDS, empirical_cdf, gof_uniformity, make_design,
                            run_simulation, separability_fraction, tail_grid, tail_table,
                            toeplitz_covariance)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(n=10, p=10, trials=1), dict(n=10, p=3, trials=0),
                                    dict(n=10, p=3, trials=1, design="t"),
                                    dict(n=10, p=3, trials=1, separation_check="never")])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SimConfig(**kw)

    def test_coords(self):
        assert SimConfig(10, 4, 1).coord_list() == [0, 1, 2, 3]
        assert SimConfig(10, 4, 1, coords=2).coord_list() == [0, 1]


class TestDesign:
    def test_deterministic(self):
        cfg = SimConfig(50, 5, 3, master_seed=9)
        a, b = make_design(cfg, 2), make_design(cfg, 2)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y_signed, b.y_signed)
        assert not np.array_equal(a.X, make_design(cfg, 1).X)

    def test_bernoulli(self):
        d = make_design(SimConfig(100, 10, 1, design="bernoulli"), 0)
        assert set(np.unique(d.X)) <= {-1.0, 1.0}

    def test_gaussian_means(self):
        n = 100_000
        d = make_design(SimConfig(n, 2, 1, master_seed=1), 0)
        assert np.all(np.abs(d.X.mean(axis=0)) < 4 / np.sqrt(n))
        assert abs(d.y_signed.mean()) < 4 / np.sqrt(n)

    def test_covariance(self):
        cfg = SimConfig(50_000, 3, 1, design="gaussian_cov", covariance=0.5)
        emp = np.cov(make_design(cfg, 0).X.T)
        np.testing.assert_allclose(emp, toeplitz_covariance(3, 0.5), atol=0.03)

    def test_not_positive_definite(self):
        cfg = SimConfig(20, 2, 1, design="gaussian_cov", covariance=np.array([[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(ValueError, match="positive definite"):
            make_design(cfg, 0)


class TestGof:
    def test_uniform_counts(self):
        pv = (np.arange(2000) + 0.5) / 2000
        stat, p = gof_uniformity(pv)
        assert stat == 0.0 and p == 1.0

    def test_single_bin(self):
        stat, _ = gof_uniformity(np.full(2000, 0.01))
        assert stat == pytest.approx(38000.0)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            gof_uniformity([])

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            gof_uniformity([0.5, 1.2])


class TestEcdf:
    def test_endpoints(self):
        pv = [0.2, 0.4, 0.9]
        out = empirical_cdf(pv, [0.1, 0.4, 1.0])
        assert out == [(0.1, 0.0), (0.4, 2 / 3), (1.0, 1.0)]

    def test_dkw(self, rng):
        u = rng.uniform(size=100_000)
        grid = np.linspace(0, 1, 1001)
        frac = np.array([f for _, f in empirical_cdf(u, grid)])
        assert np.max(np.abs(frac - grid)) < 0.01
        assert np.all(np.diff(frac) >= 0)

    def test_tail_grid(self):
        g = tail_grid(60)
        assert g[0] == pytest.approx(0.1 / 60) and g[-1] <= 12 / 60 + 1e-12
        np.testing.assert_allclose(np.diff(g), 1 / 60)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            empirical_cdf([], [0.5])


class TestTailTable:
    def test_se(self):
        tab = tail_table(np.r_[np.zeros(10), np.ones(90)])
        f, se = tab[0.05]
        assert f == 0.1 and se == pytest.approx(np.sqrt(0.1 * 0.9 / 100))
        assert set(tab) == set(THRESHOLDS)


class TestRun:
    def test_single_trial_single_coord(self, logistic_03):
        r = run_simulation(SimConfig(200, 60, 1, coords=1), logistic_03)
        assert all(len(v) == 1 for v in r.pooled_pvalues.values())
        assert r.index.tolist() == [[0, 0]]

    def test_workers_do_not_change_output(self, logistic_03):
        cfg = SimConfig(100, 30, 6, master_seed=4)
        a = run_simulation(cfg, logistic_03, workers=1)
        b = run_simulation(cfg, logistic_03, workers=3)
        for m in a.pooled_pvalues:
            np.testing.assert_array_equal(a.pooled_pvalues[m], b.pooled_pvalues[m])
        np.testing.assert_array_equal(a.index, b.index)

    def test_report_json_and_csv(self, logistic_03):
        r = run_simulation(SimConfig(100, 30, 2, coords=3), logistic_03)
        d = json.loads(json.dumps(r.to_json_dict(), allow_nan=False))
        assert {"config", "tail_table", "gof", "separable_trials", "failed_trials"} <= set(d)
        cell = d["tail_table"]["adjusted"]["0.05"]
        assert 0 <= cell["fraction"] <= 1 and cell["se"] >= 0
        rows = r.pvalues_csv().strip().split("\n")
        assert rows[0] == "trial,j,p_classical,p_bartlett,p_adjusted"
        assert len(rows) == 7

    def test_separable_trials_skipped(self):
        from hdlrt.scaling import solve_system
        # kappa = 0.45 at n = 20: separation is common
        cfg = SimConfig(20, 9, 30, master_seed=0)
        r = run_simulation(cfg, solve_system("logistic", 0.45))
        assert r.separable_trials > 0
        assert len({int(t) for t, _ in r.index}) == 30 - r.separable_trials - r.failed_trials

    def test_guard_mode_agrees(self, logistic_03):
        cfg = SimConfig(200, 60, 3, master_seed=2)
        a = run_simulation(cfg, logistic_03)
        from dataclasses import replace
        b = run_simulation(replace(cfg, separation_check="guard"), logistic_03)
        np.testing.assert_array_equal(a.pooled_pvalues["adjusted"], b.pooled_pvalues["adjusted"])


class TestSeparabilityFraction:
    def test_deterministic_small(self):
        a = separability_fraction(2, 1, 1, seed=3)
        assert a in (0.0, 1.0) and a == separability_fraction(2, 1, 1, seed=3)

    def test_regimes(self):
        assert separability_fraction(200, 130, 20, seed=0) >= 0.9
        assert separability_fraction(200, 60, 20, seed=0) <= 0.1
