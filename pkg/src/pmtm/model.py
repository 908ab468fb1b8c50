"""Discretized Cramer representation x = A z and the spectral readout."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import InputError
from .spectrum import PsdEstimate


class DesignMatrix:
    """K x (2N-1) matrix with rows (2/N)[1, cos(w_1 k), -sin(w_1 k), ..., cos(w_{N-1} k), -sin(w_{N-1} k)].

    Here w_m = pi m / N and k = 1..K. Instances are immutable and can be
    shared between estimators.
    """

    def __init__(self, bin_count: int, freq_bins: int):
        if bin_count < 1:
            raise InputError(f"bin_count must be >= 1, got {bin_count}")
        if freq_bins < 2:
            raise InputError(f"freq_bins must be >= 2, got {freq_bins}")
        self.bin_count = int(bin_count)
        self.freq_bins = int(freq_bins)
        K, N = self.bin_count, self.freq_bins
        k = np.arange(1, K + 1)[:, None]
        w = np.pi * np.arange(1, N) / N
        A = np.empty((K, 2 * N - 1))
        A[:, 0] = 1.0
        A[:, 1::2] = np.cos(k * w)
        A[:, 2::2] = -np.sin(k * w)
        A *= 2.0 / N
        A.setflags(write=False)
        self.entries = A

    @property
    def param_count(self) -> int:
        return 2 * self.freq_bins - 1

    @property
    def shape(self):
        return self.entries.shape

    def __matmul__(self, z):
        return self.entries @ z

    def rmatvec(self, g):
        return self.entries.T @ g

    @cached_property
    def _gram_index(self):
        N = self.freq_bins
        m = np.arange(N)
        diff = np.subtract.outer(m, m) % (2 * N)
        summ = np.add.outer(m, m) % (2 * N)
        return diff, summ

    def weighted_gram(self, weights) -> np.ndarray:
        """A' diag(weights) A in O(K log K + N^2).

        Products of cosines and sines at frequencies pi m / N reduce to sums
        of G(q) = sum_k h_k exp(i pi q k / N), which is periodic in q with
        period 2N and obtained from one FFT of the folded weights.
        """
        h = np.asarray(weights, dtype=float)
        K, N = self.bin_count, self.freq_bins
        folded = np.bincount(np.arange(1, K + 1) % (2 * N), weights=h, minlength=2 * N)
        G = np.fft.ifft(folded) * (2 * N)
        diff, summ = self._gram_index
        G *= 0.5 * (2.0 / N) ** 2
        Gd, Gs = G[diff], G[summ]
        # interleaved (cos_0, sin_0, cos_1, sin_1, ...) blocks; sin_0 is dropped below
        full = np.empty((N, 2, N, 2))
        full[:, 0, :, 0] = Gd.real + Gs.real
        full[:, 1, :, 1] = Gd.real - Gs.real
        # -sum_k h_k cos(w_m k) sin(w_n k), the minus from the sine columns of A
        cs = Gd.imag - Gs.imag
        full[:, 0, :, 1] = cs
        full[:, 1, :, 0] = cs.T
        full = full.reshape(2 * N, 2 * N)
        # row/column of cos_0 replaces sin_0 in place
        full[1, 1:] = full[0, 1:]
        full[1:, 1] = full[1:, 0]
        full[1, 1] = full[0, 0]
        return full[1:, 1:]


@dataclass
class SpectralParams:
    """Prior variances theta = (sigma_1^2, ..., sigma_{2N-1}^2) of the latent coefficients."""

    variances: np.ndarray
    truncation_bound: float | None = None

    def __post_init__(self):
        self.variances = np.asarray(self.variances, dtype=float)
        if self.variances.ndim != 1 or self.variances.size % 2 != 1:
            raise InputError("variances must be a 1-D array of odd length 2N-1")
        if not np.all(self.variances > 0):
            raise InputError("all variances must be positive")

    @property
    def freq_bins(self) -> int:
        return (self.variances.size + 1) // 2


@dataclass
class LatentPosterior:
    """Gaussian (Laplace) approximation N(mean, covariance) of z given the data."""

    mean: np.ndarray
    covariance: np.ndarray


def psd_from_params(params: SpectralParams, scale: float = 1.0) -> PsdEstimate:
    """Read the PSD off the variances: S(0) = theta_1, S(f_m) = theta_{2m} + theta_{2m+1}.

    ``scale`` multiplies every value; 1 gives the readout as is.
    """
    th = params.variances
    N = params.freq_bins
    power = np.empty(N)
    power[0] = th[0]
    power[1:] = th[1::2] + th[2::2]
    return PsdEstimate(np.arange(N) / (2.0 * N), scale * power, estimator="readout")


def readout_calibration(bin_count: int, freq_bins: int) -> float:
    """Factor mapping the variance readout onto the eigen-spectrum scale.

    For a unit-energy taper the eigen-spectrum is |sum_k y_k exp(-i 2 pi f_m k)|^2.
    Each non-DC column of A has squared norm 2K/N^2, so the least-squares
    coefficients give a_m^2 + b_m^2 = (N/K)^2 times that quantity; the
    constant (K/N)^2 undoes the gain (4 for the default N = K/2).
    """
    return (bin_count / freq_bins) ** 2
