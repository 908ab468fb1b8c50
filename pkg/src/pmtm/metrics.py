"""Log-domain normalized mean squared error between PSDs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError

POWER_FLOOR = 1e-30

FORMULA = "mean over f != 0 of ((ln S_hat(f) - ln S(f)) / ln S(f))**2"


@dataclass
class NormalizedMse:
    value: float
    per_frequency_terms: np.ndarray
    freq_mask: np.ndarray
    floored: np.ndarray

    @property
    def floored_count(self) -> int:
        return int(np.count_nonzero(self.floored))


def normalized_mse(estimate, truth, exclude_dc: bool = True) -> NormalizedMse:
    """Average of ((log est - log true) / log true)^2 over the shared grid.

    Non-positive estimate values are replaced by ``POWER_FLOOR`` and flagged.
    """
    f_est, f_true = np.asarray(estimate.freqs), np.asarray(truth.freqs)
    if f_est.shape != f_true.shape or not np.allclose(f_est, f_true, rtol=0, atol=1e-12):
        raise InputError("estimate and truth are on different frequency grids")
    mask = f_true != 0 if exclude_dc else np.ones(f_true.size, dtype=bool)
    true = np.asarray(truth.power, dtype=float)[mask]
    if np.any(true <= 0):
        raise InputError("true PSD must be positive on the evaluated frequencies")
    log_true = np.log(true)
    if np.any(log_true == 0):
        raise InputError("true PSD equals 1 at some frequency; the normalization is undefined")
    est = np.asarray(estimate.power, dtype=float)[mask]
    floored = ~(est > 0)
    est = np.where(floored, POWER_FLOOR, est)
    terms = ((np.log(est) - log_true) / log_true) ** 2
    return NormalizedMse(float(terms.mean()), terms, f_true[mask], floored)
