import numpy as np
import pytest

from hdlrt.amp import (amp_iterate, amp_run, amp_run_full, canonical_mle, gaussian_design,
                       stationarity_gap, trajectory_to_csv)
from hdlrt.links import LOGISTIC


@pytest.fixture(scope="module")
def full_scale(logistic_03):
    X, rng = gaussian_design(4000, 1200, 0)
    run = amp_run_full(X, logistic_03, 25, rng)
    return X, run


class TestSmall:
    def test_zero_iterations(self, logistic_03):
        X, _ = gaussian_design(100, 30, 1)
        traj = amp_run(X, logistic_03, 0, seed=5)
        assert len(traj) == 1
        assert traj[0][0] == 0 and traj[0][1] == pytest.approx(logistic_03.tau_sq, rel=1e-12)

    def test_seeded(self, logistic_03):
        X, _ = gaussian_design(100, 30, 1)
        assert amp_run(X, logistic_03, 5, seed=3) == amp_run(X, logistic_03, 5, seed=3)

    def test_eta_update(self, logistic_03):
        # eta^1 = X beta^1 + Psi(eta^0), checked by re-running one more step by hand
        X, _ = gaussian_design(200, 60, 2)
        beta0 = np.full(60, logistic_03.tau_star / np.sqrt(60))
        one = amp_iterate(X, logistic_03, 1, beta0)
        two = amp_iterate(X, logistic_03, 2, beta0)
        np.testing.assert_allclose(two.eta, X @ one.beta + one.psi, atol=1e-12)

    def test_csv(self):
        text = trajectory_to_csv([(0, 1.0), (1, 0.5)])
        assert text == "t,beta_norm_sq\n0,1\n1,0.5\n"


class TestFullScale:
    def test_norm_tracks_tau(self, full_scale, logistic_03):
        _, run = full_scale
        final = run.trajectory[-1][1]
        assert abs(final - logistic_03.tau_sq) / logistic_03.tau_sq < 0.10

    def test_close_to_newton(self, full_scale):
        X, run = full_scale
        fit = canonical_mle(X)
        assert fit.converged
        rel = np.linalg.norm(run.beta - fit.beta_hat) / np.linalg.norm(fit.beta_hat)
        assert rel < 0.10

    def test_steps_shrink(self, full_scale):
        _, run = full_scale
        # step_norms[k] = ||beta^{k+1} - beta^k||
        assert run.step_norms[24] < 0.1 * run.step_norms[1]

    def test_stationarity_identity(self, full_scale, logistic_03):
        X, run = full_scale
        lhs, rhs = stationarity_gap(X, logistic_03, run)
        assert abs(lhs - rhs) <= 1e-8 * max(1.0, rhs) + 1e-8
