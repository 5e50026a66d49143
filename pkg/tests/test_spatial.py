import numpy as np
import pytest
import scipy.linalg

from neuroeval.spatial import (
    ClassCovariance,
    class_covariance,
    csp,
    per_trial_covariance,
    refsf,
    sscsp,
)


def random_psd(rng, n, scale=1.0):
    a = rng.normal(size=(n, n))
    return a @ a.T * scale / n + 0.1 * np.eye(n)


class TestClassCovariance:
    def test_identity_sample_covariance(self):
        # rows are orthogonal with equal power: trace-normalized cov is I
        data = np.array([[1.0, -1.0, 1.0, -1.0], [1.0, 1.0, -1.0, -1.0]])
        cov = class_covariance([data]).sigma
        np.testing.assert_allclose(cov, np.eye(2), atol=1e-12)

    def test_duplicated_channel_rank_deficient(self, rng):
        row = rng.normal(size=200)
        cov = class_covariance([np.stack([row, row])]).sigma
        np.testing.assert_allclose(cov[0, 1], cov[0, 0], atol=1e-12)
        assert abs(np.linalg.det(cov)) < 1e-10

    def test_monte_carlo_known_covariance(self, rng):
        true = np.diag([4.0, 1.0])
        epochs = [
            np.sqrt(np.diag(true))[:, None] * rng.normal(size=(2, 256))
            for _ in range(100)
        ]
        cov = class_covariance(epochs).sigma
        target = np.diag([1.6, 0.4])  # trace-normalized to n_channels = 2
        np.testing.assert_allclose(cov, target, rtol=0.1, atol=0.05)

    def test_empty_errors(self):
        with pytest.raises(ValueError, match="no epochs"):
            class_covariance([])

    def test_symmetry_and_psd(self, rng):
        epochs = [rng.normal(size=(4, 64)) for _ in range(10)]
        cov = class_covariance(epochs).sigma
        assert np.abs(cov - cov.T).max() < 1e-9
        assert np.linalg.eigvalsh(cov).min() >= -1e-9


class TestCsp:
    def test_analytic_two_channel(self):
        bank = csp(np.diag([4.0, 1.0]), np.diag([1.0, 4.0]), n_per_side=1)
        np.testing.assert_allclose(sorted(bank.eigenvalues), [0.2, 0.8], atol=1e-9)
        for row in bank.W:
            direction = np.abs(row / np.linalg.norm(row))
            assert max(direction) > 1.0 - 1e-6  # aligned with an axis

    def test_equal_covariances_all_half(self, rng):
        sigma = random_psd(rng, 4)
        bank = csp(sigma, sigma, n_per_side=2)
        np.testing.assert_allclose(bank.eigenvalues, 0.5, atol=1e-9)

    def test_generalized_eigen_residual(self, rng):
        sa, sb = random_psd(rng, 4), random_psd(rng, 4)
        bank = csp(sa, sb, n_per_side=2)
        for w, lam in zip(bank.W, bank.eigenvalues):
            residual = sa @ w - lam * (sa + sb) @ w
            assert np.abs(residual).max() <= 1e-8

    def test_unit_generalized_norm(self, rng):
        sa, sb = random_psd(rng, 5), random_psd(rng, 5)
        bank = csp(sa, sb, n_per_side=2)
        for w in bank.W:
            np.testing.assert_allclose(w @ (sa + sb) @ w, 1.0, atol=1e-9)

    def test_rank_equals_filter_count(self, rng):
        sa, sb = random_psd(rng, 6), random_psd(rng, 6)
        bank = csp(sa, sb, n_per_side=3)
        assert bank.W.shape == (6, 6)
        assert np.linalg.matrix_rank(bank.W) == 6

    def test_scale_invariance_of_selected_directions(self, rng):
        # amplifying every epoch of one class must not move the filters:
        # trace normalization in the covariance step removes the scale
        epochs_a = [rng.normal(size=(4, 64)) for _ in range(20)]
        epochs_b = [np.diag([1, 1, 2, 1]) @ rng.normal(size=(4, 64)) for _ in range(20)]
        cov_b = class_covariance(epochs_b)
        b1 = csp(class_covariance(epochs_a), cov_b, n_per_side=2)
        b2 = csp(class_covariance([7.5 * e for e in epochs_a]), cov_b, n_per_side=2)
        np.testing.assert_allclose(np.abs(b1.W), np.abs(b2.W), atol=1e-9)
        np.testing.assert_allclose(b1.eigenvalues, b2.eigenvalues, atol=1e-9)

    def test_swap_symmetry(self, rng):
        sa, sb = random_psd(rng, 4), random_psd(rng, 4)
        b_ab = csp(sa, sb, n_per_side=2)
        b_ba = csp(sb, sa, n_per_side=2)
        np.testing.assert_allclose(
            sorted(b_ab.eigenvalues), sorted(1.0 - b_ba.eigenvalues), atol=1e-9
        )
        span_ab = scipy.linalg.orth(b_ab.W.T)
        span_ba = scipy.linalg.orth(b_ba.W.T)
        # same selected subspace
        proj = span_ab @ span_ab.T
        np.testing.assert_allclose(proj @ span_ba, span_ba, atol=1e-6)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError, match="shapes"):
            csp(random_psd(rng, 3), random_psd(rng, 4))

    def test_accepts_class_covariance(self, rng):
        sa, sb = random_psd(rng, 4), random_psd(rng, 4)
        b1 = csp(ClassCovariance(sa, 10), ClassCovariance(sb, 10), n_per_side=1)
        b2 = csp(sa, sb, n_per_side=1)
        np.testing.assert_array_equal(b1.W, b2.W)


class TestSscsp:
    def test_nu_zero_equals_csp(self, rng):
        sa, sb, su = random_psd(rng, 4), random_psd(rng, 4), random_psd(rng, 4)
        b_csp = csp(sa, sb, n_per_side=2)
        b_ss = sscsp(sa, sb, su, nu=0.0, n_per_side=2)
        np.testing.assert_allclose(np.abs(b_ss.W), np.abs(b_csp.W), atol=1e-9)

    def test_stationary_context_equals_csp(self, rng):
        sa, sb = random_psd(rng, 4), random_psd(rng, 4)
        su = 0.5 * (sa + sb)  # use context identical to calibration
        b_csp = csp(sa, sb, n_per_side=2)
        for nu in (0.1, 1.0, 10.0):
            b_ss = sscsp(sa, sb, su, nu=nu, n_per_side=2)
            np.testing.assert_allclose(np.abs(b_ss.W), np.abs(b_csp.W), atol=1e-9)

    def test_shifted_channel_down_weighted(self):
        # discriminative power sits on channel 2, but channel 2 shifts
        # variance between contexts; the penalty must shrink its weight
        sa = np.diag([4.0, 3.0])
        sb = np.diag([1.0, 0.5])
        su = 0.5 * (sa + sb) + np.diag([0.0, 2.0])
        w2_csp = abs(csp(sa, sb, n_per_side=1).W[0, 1])
        for nu in (1.0, 10.0):
            w2 = abs(sscsp(sa, sb, su, nu=nu, n_per_side=1).W[0, 1])
            assert w2 < w2_csp

    def test_continuity_in_nu(self, rng):
        sa, sb, su = random_psd(rng, 4), random_psd(rng, 4), random_psd(rng, 4)
        b_csp = csp(sa, sb, n_per_side=2)
        b_eps = sscsp(sa, sb, su, nu=1e-6, n_per_side=2)
        np.testing.assert_allclose(np.abs(b_eps.W), np.abs(b_csp.W), atol=1e-4)

    def test_negative_nu_rejected(self, rng):
        sa, sb, su = random_psd(rng, 3), random_psd(rng, 3), random_psd(rng, 3)
        with pytest.raises(ValueError, match="nu"):
            sscsp(sa, sb, su, nu=-0.1)


def _fisher_scatter(tgt, non):
    """Independent oracle: scatter matrices by explicit loops."""
    n_t, n_n = len(tgt), len(non)
    mu_t = sum(tgt) / n_t
    mu_n = sum(non) / n_n
    mu = (n_t * mu_t + n_n * mu_n) / (n_t + n_n)
    sb = n_t * (mu_t - mu) @ (mu_t - mu).T + n_n * (mu_n - mu) @ (mu_n - mu).T
    sw = np.zeros((tgt[0].shape[0],) * 2)
    for x in tgt:
        sw += (x - mu_t) @ (x - mu_t).T
    for x in non:
        sw += (x - mu_n) @ (x - mu_n).T
    return sb, sw


class TestRefsf:
    def test_single_channel_difference_found(self, rng):
        template = np.zeros((3, 64))
        template[0] = 5.0 * np.sin(np.linspace(0, np.pi, 64))
        tgt = [template + rng.normal(size=(3, 64)) for _ in range(40)]
        non = [rng.normal(size=(3, 64)) for _ in range(40)]
        bank = refsf(tgt, non, n_filters=1)
        w = bank.W[0]
        assert abs(w[0]) / np.linalg.norm(w) >= 0.95

    def test_identical_means_rejected(self, rng):
        shared = [rng.normal(size=(3, 32)) for _ in range(5)]
        with pytest.raises(ValueError, match="no discriminative direction"):
            refsf(shared, list(shared), n_filters=2)

    def test_eigen_residual(self, rng):
        tgt = [rng.normal(size=(4, 32)) + 1.0 for _ in range(10)]
        non = [rng.normal(size=(4, 32)) for _ in range(10)]
        gamma = 1e-3
        bank = refsf(tgt, non, n_filters=2, gamma=gamma)
        sb, sw = _fisher_scatter(tgt, non)
        reg = sw + gamma * np.trace(sw) / 4 * np.eye(4)
        m = np.linalg.solve(reg, sb)
        for w, lam in zip(bank.W, bank.eigenvalues):
            residual = m @ w - lam * w
            assert np.abs(residual).max() <= 1e-8 * max(1.0, abs(lam))

    def test_unit_norm_rows_and_rank(self, rng):
        tgt = [rng.normal(size=(6, 32)) + 0.5 for _ in range(12)]
        non = [rng.normal(size=(6, 32)) for _ in range(12)]
        bank = refsf(tgt, non, n_filters=5)
        np.testing.assert_allclose(np.linalg.norm(bank.W, axis=1), 1.0, atol=1e-9)
        assert np.linalg.matrix_rank(bank.W) == 5

    def test_too_few_epochs(self, rng):
        with pytest.raises(ValueError, match="at least 2"):
            refsf([rng.normal(size=(3, 16))], [rng.normal(size=(3, 16))] * 3)


class TestPerTrialCovariance:
    def test_trace_is_channel_count(self, rng):
        cov = per_trial_covariance(rng.normal(size=(7, 100)))
        np.testing.assert_allclose(np.trace(cov), 7.0, atol=1e-12)

    def test_too_short(self):
        with pytest.raises(ValueError, match="2 samples"):
            per_trial_covariance(np.zeros((3, 1)))
