import warnings

import numpy as np
import pytest
from scipy.linalg import cho_factor

from pmtm.auxstats import AuxStatistic, build_aux_statistic
from pmtm.dpss import generate_dpss
from pmtm.em import (EmConfig, EmIteration, complete_log_likelihood, e_step_mode,
                     estimate_eigen_spectrum, expected_complete_objective, laplace_covariance,
                     log_likelihood_gradient, log_likelihood_hessian, m_step)
from pmtm.exceptions import InfeasiblePointError, InputError
from pmtm.model import DesignMatrix, LatentPosterior, SpectralParams
from pmtm.simulate import generate_spikes


def toy(trials=1000):
    """K=3, N=2 problem whose statistics sit exactly at rates p = (0.5, 0.2, 0.6).

    Rows of A are (1, 0, -1), (1, -1, 0), (1, 0, 1), so the rates are reached
    at z = (0.15, 0.35, -0.05) from offsets (0.3, 0.4, 0.5).
    """
    offsets = np.array([0.3, 0.4, 0.5])
    p = np.array([0.5, 0.2, 0.6])
    return AuxStatistic(np.tile(p, (trials, 1)), offsets), DesignMatrix(3, 2)


def random_problem(seed, K=24, N=6, L=7):
    r = np.random.default_rng(seed)
    spikes = (r.random((L, K)) < 0.35).astype(float)
    taper = generate_dpss(K, 2, 3).tapers[seed % 3]
    aux = build_aux_statistic(spikes, taper, 0.35)
    design = DesignMatrix(K, N)
    theta = r.uniform(0.05, 1.0, 2 * N - 1)
    # a small random interior point
    z = r.normal(size=2 * N - 1)
    lim = np.minimum(aux.offsets, 1 - aux.offsets).min()
    z *= 0.5 * lim / np.abs(design @ z).max()
    return aux, design, theta, z


def test_null_likelihood_formula():
    mu = np.array([0.1, 0.4, 0.25, 0.7])
    L = 3
    aux = AuxStatistic(np.tile(mu, (L, 1)), mu)
    design = DesignMatrix(4, 2)
    theta = np.array([0.5, 2.0, 0.1])
    ref = L * np.sum(mu * np.log(mu / (1 - mu)) + np.log(1 - mu)) - 0.5 * np.log(theta).sum()
    assert complete_log_likelihood(np.zeros(3), theta, aux, design) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_gradient_and_hessian_finite_differences(seed):
    aux, design, theta, z = random_problem(seed)
    g = log_likelihood_gradient(z, theta, aux, design)
    H = log_likelihood_hessian(z, theta, aux, design)
    n = z.size
    h = 1e-6
    fd_g = np.empty(n)
    fd_H = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        fd_g[i] = (complete_log_likelihood(z + e, theta, aux, design)
                   - complete_log_likelihood(z - e, theta, aux, design)) / (2 * h)
        fd_H[:, i] = (log_likelihood_gradient(z + e, theta, aux, design)
                      - log_likelihood_gradient(z - e, theta, aux, design)) / (2 * h)
    assert np.linalg.norm(g - fd_g) <= 1e-6 * np.linalg.norm(g)
    assert np.linalg.norm(H - fd_H) <= 1e-5 * np.linalg.norm(H)
    assert np.all(np.linalg.eigvalsh(H) < 0)


def test_infeasible_point_raises():
    aux, design = toy()
    with pytest.raises(InfeasiblePointError):
        complete_log_likelihood(np.array([1.0, 0.0, 0.0]), np.ones(3), aux, design)


def test_strong_prior_null_data():
    r = np.random.default_rng(0)
    K, N = 32, 8
    mu = r.uniform(0.1, 0.9, K)
    aux = AuxStatistic(np.tile(mu, (5, 1)), mu)
    post = e_step_mode(np.full(2 * N - 1, 1e-8), aux, DesignMatrix(K, N))
    assert np.linalg.norm(post.mean) < 1e-6


def _grid_mode(f, lo, hi, steps=21, rounds=12):
    # refining grid search of a concave function over a box
    center = (lo + hi) / 2
    half = (hi - lo) / 2
    for _ in range(rounds):
        axes = [np.linspace(c - h, c + h, steps) for c, h in zip(center, half)]
        best, arg = -np.inf, center
        for pt in np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(center)):
            val = f(pt)
            if val > best:
                best, arg = val, pt
        center = arg
        half = half * 4 / (steps - 1)
    return center


def test_mode_matches_grid_search():
    aux, design = toy(trials=10)
    theta = np.array([0.05, 0.2, 0.01])

    def f(z):
        try:
            return complete_log_likelihood(z, theta, aux, design)
        except InfeasiblePointError:
            return -np.inf

    ref = _grid_mode(f, np.full(3, -0.6), np.full(3, 0.6))
    post = e_step_mode(theta, aux, design)
    np.testing.assert_allclose(post.mean, ref, atol=1e-4)


def test_covariance_is_inverse_fd_hessian():
    aux, design = toy(trials=10)
    theta = np.array([0.05, 0.2, 0.01])
    post = e_step_mode(theta, aux, design)
    z = post.mean
    n, h = 3, 1e-4

    def f(v):
        return complete_log_likelihood(v, theta, aux, design)

    H = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            ei, ej = np.eye(n)[i] * h, np.eye(n)[j] * h
            H[i, j] = (f(z + ei + ej) - f(z + ei - ej) - f(z - ei + ej) + f(z - ei - ej)) / (4 * h * h)
    ref = np.linalg.inv(-H)
    assert np.linalg.norm(post.covariance - ref) <= 1e-4 * np.linalg.norm(ref)
    np.testing.assert_allclose(post.covariance, post.covariance.T, atol=1e-10)
    cho_factor(post.covariance)


def test_m_step_examples():
    np.testing.assert_allclose(m_step(LatentPosterior(np.zeros(3), np.eye(3))).variances, 1.0)
    # two-entry arithmetic of mean^2 + diag(cov), padded to odd length with a third unit entry
    post = LatentPosterior(np.array([1.0, 2.0, 0.0]), np.diag([0.5, 0.25, 1.0]))
    np.testing.assert_allclose(m_step(post).variances, [1.5, 4.25, 1.0])


def test_m_step_maximizes_q():
    r = np.random.default_rng(4)
    a = r.normal(size=(5, 5))
    post = LatentPosterior(r.normal(size=5), a @ a.T + 0.1 * np.eye(5))
    th = m_step(post).variances
    best = expected_complete_objective(th, post)
    for m in range(5):
        for factor in (0.9, 1.1):
            pert = th.copy()
            pert[m] *= factor
            assert expected_complete_objective(pert, post) < best


def test_em_multistart_converges_to_same_estimate():
    aux, design = toy()
    cfg = EmConfig(max_em_iters=2000, em_tol=1e-10)
    results = []
    for start in (1e-3, 1e-1, 10.0):
        params, trace = estimate_eigen_spectrum(aux, design, cfg, initial_theta=np.full(3, start))
        assert trace.converged
        results.append(params.variances)
    for other in results[1:]:
        np.testing.assert_allclose(other, results[0], rtol=1e-3)
    # well-determined coefficients: theta near z^2 at the exact fit
    np.testing.assert_allclose(results[0], [0.15**2, 0.35**2, 0.05**2], rtol=0.05)


def test_newton_feasible_and_ascending():
    aux, design, theta, _ = random_problem(3, K=64, N=32, L=10)
    cfg = EmConfig()
    rec = EmIteration(np.nan, np.nan, 0, 0)
    post = e_step_mode(theta, aux, design, cfg, record=rec)
    p = aux.offsets + design @ post.mean
    assert np.all(p > 0) and np.all(p < 1)
    for run in rec.newton_runs:
        assert np.all(np.diff(run.objective) >= -1e-9 * np.abs(run.objective[0]))
    g = log_likelihood_gradient(post.mean, theta, aux, design)
    assert rec.newton_iterations > 0
    assert np.all(np.isfinite(g))
    cho_factor(post.covariance)
    np.testing.assert_allclose(post.covariance, post.covariance.T, atol=1e-10)


def test_em_trace_and_positivity():
    aux, design, _, _ = random_problem(5, K=64, N=32, L=10)
    params, trace = estimate_eigen_spectrum(aux, design, EmConfig(max_em_iters=8))
    assert 1 <= len(trace) <= 8
    assert np.all(params.variances > 0)
    d = trace.to_dict(include_newton=True)
    assert len(d["iterations"]) == len(trace)


def test_laplace_covariance_positive_definite():
    aux, design = toy(trials=10)
    cov, jitter = laplace_covariance(np.zeros(3), np.ones(3), aux, design)
    assert jitter == 0.0
    assert np.all(np.linalg.eigvalsh(cov) > 0)


def test_degenerate_offsets_are_clamped():
    aux = AuxStatistic(np.array([[0.0, 0.5, 1.0]]), np.array([0.0, 0.5, 1.0]))
    with pytest.warns(RuntimeWarning):
        params, trace = estimate_eigen_spectrum(aux, DesignMatrix(3, 2), EmConfig(max_em_iters=2))
    assert trace.offset_clamps == 2


def test_config_validation():
    with pytest.raises(InputError):
        EmConfig(max_em_iters=0)
    with pytest.raises(InputError):
        EmConfig.from_dict({"bogus": 1})
    assert EmConfig.from_dict(EmConfig().to_dict()) == EmConfig()


def test_flat_spectrum_theta_uniform():
    # white latent at mean rate 0.3, std 0.05, first taper, default EM settings
    K, L = 512, 20
    x = np.random.default_rng(0).normal(scale=0.05, size=K)
    spikes = generate_spikes(0.3 + x, L, seed=1)
    taper = generate_dpss(K, 5, 8).tapers[0]
    aux = build_aux_statistic(spikes.trials, taper, spikes.trials.mean())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        params, _ = estimate_eigen_spectrum(aux, DesignMatrix(K, K // 2))
    th = params.variances
    assert th.std() / th.mean() < 0.5
