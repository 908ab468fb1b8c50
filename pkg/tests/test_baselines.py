import warnings

import numpy as np
import pytest

from pmtm.baselines import fit_random_walk, psth_psd, smooth_random_walk, ss_psd
from pmtm.dpss import generate_dpss
from pmtm.exceptions import InputError
from pmtm.metrics import normalized_mse
from pmtm.simulate import generate_spikes
from pmtm.spectrum import PsdEstimate, mtm_psd

pytestmark = pytest.mark.filterwarnings("ignore::RuntimeWarning")


def test_psth_all_zero():
    ts = generate_dpss(64, 3, 5)
    assert np.all(psth_psd(np.zeros((4, 64)), ts).power == 0)


def test_ss_all_zero_is_tiny():
    est = ss_psd(np.zeros((4, 64)), generate_dpss(64, 3, 5))
    assert est.power.max() < 1e-10


def test_psth_single_trial_is_centered_mtm(rng):
    n = (rng.random(64) < 0.3).astype(float)
    ts = generate_dpss(64, 3, 5)
    np.testing.assert_allclose(psth_psd(n[None, :], ts).power, mtm_psd(n - n.mean(), ts).power)


def test_psth_large_ensemble_tracks_rate_spectrum():
    K = 128
    k = np.arange(K)
    lam = 0.3 + 0.1 * np.sin(2 * np.pi * 0.1 * k) + 0.05 * np.sin(2 * np.pi * 0.3 * k)
    ts = generate_dpss(K, 4, 7)
    L = 20_000
    est = psth_psd(generate_spikes(lam, L, seed=3), ts)
    ref = mtm_psd(lam - lam.mean(), ts)
    # compare only where the rate spectrum dominates the binomial noise floor
    top = ref.power > 100 * np.mean(lam * (1 - lam)) / L
    np.testing.assert_allclose(est.power[top], ref.power[top], rtol=0.1)


def test_ss_constant_rate():
    spikes = generate_spikes(np.full(300, 0.2), 20, seed=4)
    model = fit_random_walk(spikes)
    assert abs(model.smoothed_states.mean() - 0.2) < 0.02
    assert model.smoothed_states.std() < 0.02
    assert model.process_noise_var < 1e-4


def test_ss_beats_psth_on_random_walk_rate():
    r = np.random.default_rng(6)
    K, L = 400, 20
    lam = np.clip(0.3 + np.cumsum(r.normal(scale=np.sqrt(1e-4), size=K)), 0.05, 0.95)
    spikes = generate_spikes(lam, L, seed=7)
    model = fit_random_walk(spikes)
    psth = spikes.trials.mean(axis=0)
    rmse_ss = np.sqrt(np.mean((model.smoothed_states - lam) ** 2))
    rmse_psth = np.sqrt(np.mean((psth - lam) ** 2))
    assert rmse_ss < 0.5 * rmse_psth
    assert 2e-5 < model.process_noise_var < 5e-4


def test_smoother_variances_positive(rng):
    n = (rng.random((5, 50)) < 0.4).astype(float)
    sm, sv, lag1, _ = smooth_random_walk(n, 1e-3)
    assert np.all((sm > 0) & (sm < 1))
    assert np.all(sv > 0)
    # smoothing cannot be less certain than filtering at the last bin's neighbour
    assert np.all(np.abs(lag1) <= np.sqrt(sv * np.roll(sv, 1)) + 1e-15)


def test_ss_records_noise_variance():
    spikes = generate_spikes(np.full(64, 0.3), 5, seed=1)
    est = ss_psd(spikes, generate_dpss(64, 3, 5))
    assert est.metadata["process_noise_var"] > 0
    assert est.estimator == "ss"


def test_empty_input():
    with pytest.raises(InputError):
        psth_psd(np.zeros((1, 0)), generate_dpss(8, 2, 1))


def test_baseline_nmse_finite(benchmark_data):
    model, x, cif, spikes = benchmark_data
    from pmtm.simulate import ar_true_psd

    ts = generate_dpss(512, 5, 8)
    truth = ar_true_psd(model, np.arange(256) / 512)
    for est in (psth_psd(spikes, ts), ss_psd(spikes, ts)):
        assert isinstance(est, PsdEstimate)
        assert np.isfinite(normalized_mse(est, truth).value)
