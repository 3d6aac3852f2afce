import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdlrt.errors import NonConvergence
from hdlrt.links import LOGISTIC, PROBIT
from hdlrt.prox import dpsi_dz, prox, prox_eval, psi, psi_and_derivative

# 40-digit mpmath root of x + b rho'(x) = z
PROX_LOGISTIC_B1_Z0 = -0.40105813754154703565
PROX_PROBIT_B2_Z13 = -0.13181386319352074933

LINKS = [LOGISTIC, PROBIT]
b_strat = st.floats(1e-3, 100)
z_strat = st.floats(-50, 50)


class TestExamples:
    def test_identity_at_b_zero(self):
        assert prox(LOGISTIC, 0.0, 1.7) == 1.7
        assert psi(LOGISTIC, 0.0, -3.2) == 0.0
        assert dpsi_dz(PROBIT, 0.0, 0.4) == 0.0

    def test_logistic_oracle(self):
        assert prox(LOGISTIC, 1.0, 0.0) == pytest.approx(PROX_LOGISTIC_B1_Z0, abs=1e-12)
        assert psi(LOGISTIC, 1.0, 0.0) == pytest.approx(-PROX_LOGISTIC_B1_Z0, abs=1e-12)

    def test_probit_oracle(self):
        assert prox(PROBIT, 2.0, 1.3) == pytest.approx(PROX_PROBIT_B2_Z13, abs=1e-12)
        assert psi(PROBIT, 2.0, 1.3) == pytest.approx(1.3 - PROX_PROBIT_B2_Z13, abs=1e-12)

    def test_increasing_in_z(self):
        assert prox(LOGISTIC, 1.0, 2.0) > prox(LOGISTIC, 1.0, 1.0)

    def test_dpsi_grows_with_b(self):
        vals = [dpsi_dz(LOGISTIC, b, 0.0) for b in (1e2, 1e4, 1e6)]
        assert vals[0] < vals[1] < vals[2] < 1

    def test_negative_b_rejected(self):
        with pytest.raises(ValueError):
            prox(LOGISTIC, -1.0, 0.0)

    def test_vectorized_matches_scalar(self):
        z = np.linspace(-20, 20, 41)
        v = prox(PROBIT, 3.0, z)
        np.testing.assert_array_equal(v, [prox(PROBIT, 3.0, zi) for zi in z])

    def test_prox_eval_fields(self):
        e = prox_eval(LOGISTIC, 2.0, 0.7)
        assert e.psi + e.x_star == e.z
        assert e.x_star + 2.0 * LOGISTIC.rho1(e.x_star) == pytest.approx(0.7, abs=1e-12)
        assert 0 < e.dpsi_dz < 1

    def test_hard_case_converges(self):
        # large b with z in the bend once made plain Newton cycle
        x = prox(LOGISTIC, 22.0, 3.12)
        assert abs(x + 22.0 * LOGISTIC.rho1(x) - 3.12) < 1e-11

    def test_iteration_budget(self, monkeypatch):
        import hdlrt.prox as mod
        monkeypatch.setattr(mod, "MAX_ITER", 1)
        with pytest.raises(NonConvergence):
            prox(PROBIT, 40.0, np.linspace(-30, 30, 7))


@pytest.mark.parametrize("link", LINKS, ids=lambda l: l.name)
class TestProperties:
    def test_moreau_identity_bulk(self, link, rng):
        # 10^4 points: 100 scales b in (0, 100], 100 arguments z each
        err = 0.0
        for b in 100.0 - rng.uniform(0, 100, 100):
            z = rng.uniform(-50, 50, 100)
            x = prox(link, b, z)
            err = max(err, np.max(np.abs(b * link.rho1(x) + x - z)))
        assert err < 1e-10

    def test_moreau_identity_pointwise(self, link, rng):
        b = rng.uniform(1e-6, 100, 2000)
        z = rng.uniform(-50, 50, 2000)
        x = np.array([prox(link, bi, zi) for bi, zi in zip(b, z)])
        np.testing.assert_allclose(b * link.rho1(x) + x, z, atol=1e-10)

    def test_dpsi_finite_difference(self, link, rng):
        h = 1e-5
        for b, z in zip(rng.uniform(0.05, 20, 100), rng.uniform(-10, 10, 100)):
            fd = (psi(link, b, z + h) - psi(link, b, z - h)) / (2 * h)
            d = dpsi_dz(link, b, z)
            assert abs(fd - d) <= 1e-5 * d + 1e-9

    def test_prox_slope_bounds(self, link, rng):
        h = 1e-6
        for b, z in zip(rng.uniform(0.05, 20, 100), rng.uniform(-10, 10, 100)):
            slope = (prox(link, b, z + h) - prox(link, b, z - h)) / (2 * h)
            assert 1 / (1 + b * link.rho2_sup) - 1e-6 <= slope <= 1 + 1e-6

    def test_nonincreasing_in_b(self, link):
        bs = np.linspace(0.01, 50, 60)
        for z in (-5.0, 0.0, 2.5, 10.0):
            vals = np.array([prox(link, b, z) for b in bs])
            assert np.all(np.diff(vals) <= 1e-12)

    def test_shared_solve(self, link):
        z = np.linspace(-8, 8, 33)
        p, d = psi_and_derivative(link, 1.5, z)
        np.testing.assert_allclose(p, psi(link, 1.5, z), atol=0)
        np.testing.assert_allclose(d, dpsi_dz(link, 1.5, z), atol=0)


@given(b_strat, z_strat)
def test_stationarity(b, z):
    for link in LINKS:
        x = prox(link, b, z)
        assert abs(x + b * link.rho1(x) - z) <= 1e-12 * max(1.0, abs(z)) * 4
        assert x <= z


@given(b_strat, z_strat, z_strat)
def test_monotone_in_z(b, z1, z2):
    lo, hi = sorted((z1, z2))
    assert prox(LOGISTIC, b, lo) <= prox(LOGISTIC, b, hi)


@given(b_strat, z_strat)
def test_dpsi_in_unit_interval(b, z):
    for link in LINKS:
        d = dpsi_dz(link, b, z)
        assert 0 <= d < 1
