"""Discrete prolate spheroidal sequences via the tridiagonal commuting matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, signal

from .exceptions import InputError


@dataclass(frozen=True)
class TaperSet:
    """J orthonormal Slepian tapers of length K.

    Attributes
    ----------
    tapers : ndarray, shape (J, K)
    concentrations : ndarray, shape (J,)
        Fraction of each taper's energy inside [-W, W].
    half_bandwidth_product : float
        alpha = K * W.
    scale_factors : ndarray, shape (J,)
        max |v_k| of each taper.
    """

    tapers: np.ndarray
    concentrations: np.ndarray
    half_bandwidth_product: float
    scale_factors: np.ndarray

    @property
    def taper_count(self) -> int:
        return self.tapers.shape[0]

    @property
    def length(self) -> int:
        return self.tapers.shape[1]


def sinc_kernel(length: int, half_bandwidth: float) -> np.ndarray:
    """Dense concentration matrix sin(2 pi W (k - k')) / (pi (k - k'))."""
    lag = np.subtract.outer(np.arange(length), np.arange(length))
    return 2 * half_bandwidth * np.sinc(2 * half_bandwidth * lag)


def concentration(taper, half_bandwidth: float) -> float:
    """v' M v for the sinc kernel M, computed from the taper autocorrelation."""
    v = np.asarray(taper, dtype=float)
    acf = signal.correlate(v, v, mode="full", method="direct")[v.size - 1:]
    lags = np.arange(v.size)
    weights = 2 * half_bandwidth * np.sinc(2 * half_bandwidth * lags)
    weights[1:] *= 2
    return float(weights @ acf)


def sign_changes(x) -> int:
    s = np.sign(np.asarray(x))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def generate_dpss(length: int, half_bandwidth_product: float, taper_count: int) -> TaperSet:
    """First ``taper_count`` dpss tapers for K = ``length`` and alpha = K W.

    Tapers come from the largest eigenvalues of the symmetric tridiagonal
    matrix that commutes with the sinc kernel. Even-order tapers are signed
    to have a positive sum, odd-order tapers a positive first moment.
    """
    K, alpha, J = int(length), float(half_bandwidth_product), int(taper_count)
    if K < 2:
        raise InputError(f"taper length must be >= 2, got {K}")
    if alpha < 1:
        raise InputError(f"time-bandwidth product must be >= 1, got {alpha}")
    if alpha >= K / 2:
        raise InputError(f"time-bandwidth product {alpha} exceeds Nyquist for K={K}")
    if not 1 <= J < np.floor(2 * alpha):
        raise InputError(f"taper count must satisfy 1 <= J < floor(2*alpha) = {int(np.floor(2 * alpha))}, got {J}")
    W = alpha / K
    k = np.arange(K)
    diag = ((K - 1 - 2 * k) / 2.0) ** 2 * np.cos(2 * np.pi * W)
    off = k[1:] * (K - k[1:]) / 2.0
    _, vecs = linalg.eigh_tridiagonal(diag, off, select="i", select_range=(K - J, K - 1))
    tapers = vecs[:, ::-1].T.copy()
    for j, v in enumerate(tapers):
        ref = v.sum() if j % 2 == 0 else (k * v).sum()
        if ref < 0:
            v *= -1
    tapers /= np.linalg.norm(tapers, axis=1, keepdims=True)
    conc = np.array([concentration(v, W) for v in tapers])
    # the quadratic form can round to 1.0 for the best-concentrated tapers
    conc = np.minimum(conc, np.nextafter(1.0, 0.0))
    return TaperSet(tapers, conc, alpha, np.abs(tapers).max(axis=1))
