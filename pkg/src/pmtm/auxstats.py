"""Auxiliary spiking statistics for tapered CIFs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateTaperError, InputError


@dataclass
class AuxStatistic:
    """Real-valued sufficient statistics for one taper.

    Attributes
    ----------
    values : ndarray, shape (L, K)
        Entries in [0, 1].
    offsets : ndarray, shape (K,)
        Mean-rate part of the tapered CIF.
    taper_index : int
    taper_scale : float
        max |v_k| used to normalize the taper.
    """

    values: np.ndarray
    offsets: np.ndarray
    taper_index: int = 0
    taper_scale: float = 1.0

    @property
    def trial_count(self) -> int:
        return self.values.shape[0]

    @property
    def bin_count(self) -> int:
        return self.values.shape[1]

    @property
    def counts(self) -> np.ndarray:
        """Per-bin sums over trials."""
        return self.values.sum(axis=0)


def _trials(spikes) -> np.ndarray:
    return np.atleast_2d(np.asarray(getattr(spikes, "trials", spikes), dtype=float))


def estimate_mean_rate(spikes) -> float:
    """Grand mean of all spike indicators."""
    n = _trials(spikes)
    if n.size == 0:
        raise InputError("empty spike ensemble")
    return float(n.mean())


def build_aux_statistic(spikes, taper, mean_rate: float, taper_index: int = 0) -> AuxStatistic:
    """Map binary spikes onto statistics whose mean is the tapered CIF.

    The taper is first divided by its maximum absolute value. Where it is
    non-negative the spikes are scaled by it; where it is negative the
    complementary train 1 - n is scaled by its magnitude instead.
    """
    n = _trials(spikes)
    v = np.asarray(taper, dtype=float)
    if v.shape != (n.shape[1],):
        raise InputError(f"taper length {v.size} != bin count {n.shape[1]}")
    if not 0.0 <= mean_rate <= 1.0:
        raise InputError(f"mean_rate must lie in [0, 1], got {mean_rate}")
    scale = float(np.abs(v).max())
    if scale == 0.0:
        raise DegenerateTaperError("taper is identically zero")
    vt = v / scale
    pos = vt >= 0
    values = np.where(pos, n * vt, -(1.0 - n) * vt)
    offsets = np.where(pos, mean_rate * vt, -(1.0 - mean_rate) * vt)
    return AuxStatistic(values, offsets, taper_index, scale)
