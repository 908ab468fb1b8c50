"""PSD container and the classic (continuous-valued) multitaper estimator."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError


@dataclass
class PsdEstimate:
    """Power values on a strictly increasing grid of normalized frequencies.

    Attributes
    ----------
    freqs : ndarray
        Frequencies in cycles per bin, within [0, 1/2].
    power : ndarray
        Non-negative power at each frequency.
    estimator : str
        Label of the method that produced the estimate.
    bandwidth : float or None
        Time-bandwidth product of the tapers, when tapers were used.
    taper_count : int or None
    metadata : dict
    """

    freqs: np.ndarray
    power: np.ndarray
    estimator: str = ""
    bandwidth: float | None = None
    taper_count: int | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.power = np.asarray(self.power, dtype=float)
        if self.freqs.ndim != 1 or self.freqs.shape != self.power.shape:
            raise InputError("freqs and power must be 1-D arrays of equal length")
        if self.freqs.size > 1 and np.any(np.diff(self.freqs) <= 0):
            raise InputError("freqs must be strictly increasing")

    def scaled(self, factor: float, **changes) -> "PsdEstimate":
        out = PsdEstimate(self.freqs, self.power * factor, self.estimator, self.bandwidth,
                          self.taper_count, dict(self.metadata))
        for k, v in changes.items():
            setattr(out, k, v)
        return out


def default_grid(bin_count: int, freq_bins: int | None = None) -> np.ndarray:
    """Grid f_m = m / (2N), m = 0..N-1, with N = K // 2 by default."""
    n = bin_count // 2 if freq_bins is None else freq_bins
    if n < 1:
        raise InputError(f"need at least one frequency bin, got N={n}")
    return np.arange(n) / (2.0 * n)


def _fourier_matrix(freqs, length):
    k = np.arange(1, length + 1)
    return np.exp(-2j * np.pi * np.outer(np.asarray(freqs, dtype=float), k))


def eigen_spectrum(series, taper, freqs) -> PsdEstimate:
    """Squared modulus of the DFT of ``taper * series`` at ``freqs``.

    The transform is evaluated directly (time index k = 1..K), so any grid
    is allowed.
    """
    x = np.asarray(series, dtype=float)
    v = np.asarray(taper, dtype=float)
    if x.ndim != 1 or x.shape != v.shape:
        raise InputError(f"series and taper lengths differ: {x.shape} vs {v.shape}")
    power = np.abs(_fourier_matrix(freqs, x.size) @ (v * x)) ** 2
    return PsdEstimate(freqs, power, estimator="eigen-spectrum", taper_count=1)


def mtm_psd(series, taper_set, freqs=None) -> PsdEstimate:
    """Unweighted average of the eigen-spectra of ``series`` over a taper set."""
    x = np.asarray(series, dtype=float)
    tapers = taper_set.tapers
    if tapers.shape[1] != x.size:
        raise InputError(f"taper length {tapers.shape[1]} != series length {x.size}")
    if freqs is None:
        freqs = default_grid(x.size)
    spectra = [eigen_spectrum(x, v, freqs).power for v in tapers]
    # fixed-order reduction over the taper index
    power = np.sum(spectra, axis=0) / len(spectra)
    return PsdEstimate(freqs, power, estimator="mtm",
                       bandwidth=taper_set.half_bandwidth_product,
                       taper_count=len(spectra))
