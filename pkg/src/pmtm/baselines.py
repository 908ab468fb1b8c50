"""Comparison estimators: MTM of the PSTH and MTM of a state-space smoothed rate."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .auxstats import estimate_mean_rate
from .exceptions import InputError
from .spectrum import default_grid, mtm_psd

logger = logging.getLogger(__name__)

_RATE_FLOOR = 1e-6


def _trials(spikes) -> np.ndarray:
    n = np.atleast_2d(np.asarray(getattr(spikes, "trials", spikes), dtype=float))
    if n.size == 0:
        raise InputError("empty spike ensemble")
    return n


def psth_psd(spikes, taper_set, freqs=None):
    """Classic MTM estimate of the mean-centered trial-averaged spike train."""
    psth = _trials(spikes).mean(axis=0)
    freqs = default_grid(psth.size) if freqs is None else freqs
    out = mtm_psd(psth - psth.mean(), taper_set, freqs)
    out.estimator = "psth"
    return out


@dataclass
class SsModel:
    """Random-walk rate model fitted to binary data, with its smoothed states."""

    process_noise_var: float
    smoothed_states: np.ndarray
    smoothed_vars: np.ndarray
    em_iterations: int = 0
    clamp_events: int = 0

    def __post_init__(self):
        if not self.process_noise_var > 0:
            raise InputError("process_noise_var must be positive")


def _posterior_mode(count, trials, pred, pred_var):
    """Mode and curvature of count*log s + (L-count)*log(1-s) - (s-pred)^2/(2 pred_var) on (0, 1)."""
    lo, hi = _RATE_FLOOR, 1 - _RATE_FLOOR
    miss = trials - count

    def score(s):
        return count / s - miss / (1 - s) - (s - pred) / pred_var

    clamped = False
    if score(lo) <= 0:
        s, clamped = lo, True
    elif score(hi) >= 0:
        s, clamped = hi, True
    else:
        # the score is decreasing, so Newton steps are kept inside a shrinking bracket
        s = min(max(pred, lo), hi)
        for _ in range(50):
            g = score(s)
            if g > 0:
                lo = s
            else:
                hi = s
            step = g / (count / s**2 + miss / (1 - s) ** 2 + 1 / pred_var)
            s_new = s + step
            if not lo < s_new < hi:
                s_new = 0.5 * (lo + hi)
            if abs(s_new - s) < 1e-13:
                s = s_new
                break
            s = s_new
    info = count / s**2 + miss / (1 - s) ** 2 + 1 / pred_var
    return s, 1.0 / info, clamped


def smooth_random_walk(spikes, process_noise_var: float, initial_mean: float | None = None,
                       initial_var: float | None = None):
    """Gaussian-approximation filter and fixed-interval smoother for a random-walk rate.

    The state is the Bernoulli success probability of each bin, shared by all
    trials. Returns smoothed means, variances, lag-one covariances and the
    number of filter updates that hit the rate bounds.
    """
    n = _trials(spikes)
    L, K = n.shape
    counts = n.sum(axis=0)
    q = float(process_noise_var)
    m0 = estimate_mean_rate(n) if initial_mean is None else initial_mean
    v0 = max(m0 * (1 - m0), q) if initial_var is None else initial_var
    pred = np.empty(K)
    pred_var = np.empty(K)
    filt = np.empty(K)
    filt_var = np.empty(K)
    clamps = 0
    m, v = m0, v0
    for k in range(K):
        pred[k], pred_var[k] = m, v if k == 0 else v + q
        m, v, clamped = _posterior_mode(counts[k], L, pred[k], pred_var[k])
        filt[k], filt_var[k] = m, v
        clamps += clamped
    sm = filt.copy()
    sv = filt_var.copy()
    lag1 = np.zeros(K)
    for k in range(K - 2, -1, -1):
        gain = filt_var[k] / pred_var[k + 1]
        sm[k] = filt[k] + gain * (sm[k + 1] - pred[k + 1])
        sv[k] = filt_var[k] + gain**2 * (sv[k + 1] - pred_var[k + 1])
        lag1[k + 1] = gain * sv[k + 1]
    return sm, sv, lag1, clamps


def fit_random_walk(spikes, initial_noise_var: float = 1e-4, max_iters: int = 100,
                    tol: float = 1e-4) -> SsModel:
    """Estimate the random-walk variance by EM and return the smoothed rate."""
    q = float(initial_noise_var)
    for it in range(1, max_iters + 1):
        sm, sv, lag1, clamps = smooth_random_walk(spikes, q)
        d = np.diff(sm)
        q_new = float(np.mean(d**2 + sv[1:] + sv[:-1] - 2 * lag1[1:]))
        q_new = max(q_new, 1e-12)
        done = abs(q_new - q) <= tol * q
        q = q_new
        if done:
            break
    sm, sv, _, clamps = smooth_random_walk(spikes, q)
    if clamps:
        warnings.warn(f"state-space filter clamped {clamps} rate estimates to "
                      f"[{_RATE_FLOOR:g}, {1 - _RATE_FLOOR:g}]", RuntimeWarning, stacklevel=2)
    return SsModel(q, sm, sv, it, clamps)


def ss_psd(spikes, taper_set, freqs=None, model: SsModel | None = None):
    """Classic MTM estimate of the mean-centered smoothed rate."""
    model = fit_random_walk(spikes) if model is None else model
    x = model.smoothed_states
    freqs = default_grid(x.size) if freqs is None else freqs
    out = mtm_psd(x - x.mean(), taper_set, freqs)
    out.estimator = "ss"
    out.metadata = {"process_noise_var": model.process_noise_var,
                    "em_iterations": model.em_iterations, "clamp_events": model.clamp_events}
    return out
