"""Synthetic benchmark data: AR latent process, linear-link CIF, Bernoulli spikes."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .exceptions import InputError
from .spectrum import PsdEstimate

logger = logging.getLogger(__name__)

#: AR(4) benchmark process used throughout the experiments.
BENCHMARK_COEFFS = (0.4152, -0.0922, 0.4170, -0.8852)
BENCHMARK_NOISE_STD = 0.025
BENCHMARK_MEAN_RATE = 0.12

MAX_BURN_IN = 4096


@dataclass(frozen=True)
class ArModel:
    """Autoregressive model x_k = sum_i a_i x_{k-i} + noise_std * e_k.

    Stability is checked at construction. An empty coefficient list gives
    white Gaussian noise.
    """

    coeffs: tuple[float, ...]
    noise_std: float = 1.0

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if not np.isfinite(self.noise_std) or self.noise_std <= 0:
            raise InputError(f"noise_std must be positive, got {self.noise_std}")
        if not all(np.isfinite(coeffs)):
            raise InputError("AR coefficients must be finite")
        if self.order and self.max_root_modulus() >= 1.0:
            raise InputError(
                f"AR model is not stable (max root modulus {self.max_root_modulus():.6f})"
            )

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def roots(self) -> np.ndarray:
        """Roots of z^p - a_1 z^{p-1} - ... - a_p."""
        if not self.order:
            return np.empty(0, dtype=complex)
        return np.roots(np.r_[1.0, -np.asarray(self.coeffs)])

    def max_root_modulus(self) -> float:
        r = self.roots()
        return float(np.abs(r).max()) if r.size else 0.0

    def default_burn_in(self) -> int:
        if not self.order:
            return 0
        n = 10 * self.order / (1.0 - self.max_root_modulus())
        return int(min(np.ceil(n), MAX_BURN_IN))

    def pole_frequencies(self) -> np.ndarray:
        """Normalized frequencies in [0, 1/2] of the poles, sorted by modulus (largest first)."""
        r = self.roots()
        r = r[np.angle(r) >= 0]
        r = r[np.argsort(-np.abs(r), kind="stable")]
        return np.angle(r) / (2 * np.pi)

    def stationary_variance(self) -> float:
        """Analytic stationary variance, from the Yule-Walker system."""
        p = self.order
        if not p:
            return self.noise_std**2
        a = np.asarray(self.coeffs)
        # unknowns: autocovariances r_0..r_p
        M = np.zeros((p + 1, p + 1))
        rhs = np.zeros(p + 1)
        M[0, 0] = 1.0
        for i in range(1, p + 1):
            M[0, i] -= a[i - 1]
        rhs[0] = self.noise_std**2
        for lag in range(1, p + 1):
            M[lag, lag] += 1.0
            for i in range(1, p + 1):
                M[lag, abs(lag - i)] -= a[i - 1]
        return float(np.linalg.solve(M, rhs)[0])

    def to_dict(self) -> dict:
        return {"coeffs": list(self.coeffs), "noise_std": self.noise_std}


def benchmark_model() -> ArModel:
    return ArModel(BENCHMARK_COEFFS, BENCHMARK_NOISE_STD)


@dataclass
class LatentSeries:
    values: np.ndarray
    seed: int | None = None
    burn_in: int = 0

    @property
    def bin_count(self) -> int:
        return self.values.shape[0]


@dataclass
class SpikeEnsemble:
    """L x K binary matrix, one trial per row."""

    trials: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.trials)
        if t.ndim == 1:
            t = t[None, :]
        if t.ndim != 2 or t.shape[0] < 1 or t.shape[1] < 1:
            raise InputError(f"spike ensemble must be a non-empty L x K matrix, got shape {t.shape}")
        if not np.all((t == 0) | (t == 1)):
            raise InputError("spike ensemble entries must be 0 or 1")
        self.trials = t.astype(np.int8)

    @property
    def trial_count(self) -> int:
        return self.trials.shape[0]

    @property
    def bin_count(self) -> int:
        return self.trials.shape[1]

    def subset(self, trials: int) -> "SpikeEnsemble":
        return SpikeEnsemble(self.trials[:trials], dict(self.metadata, trial_count=trials))


def _seed_int(seed) -> int | None:
    return seed if isinstance(seed, (int, np.integer)) else None


def simulate_ar(model: ArModel, length: int, burn_in: int | None = None, seed=None) -> LatentSeries:
    """Draw one realization of ``model`` of ``length`` samples.

    The recursion starts from zeros and the first ``burn_in`` samples are
    discarded (``None`` selects :meth:`ArModel.default_burn_in`).
    """
    if length < 1:
        raise InputError(f"length must be >= 1, got {length}")
    if burn_in is None:
        burn_in = model.default_burn_in()
    if burn_in < 0:
        raise InputError(f"burn_in must be non-negative, got {burn_in}")
    rng = np.random.default_rng(seed)
    e = model.noise_std * rng.standard_normal(length + burn_in)
    x = signal.lfilter([1.0], np.r_[1.0, -np.asarray(model.coeffs)], e)
    return LatentSeries(x[burn_in:], seed=_seed_int(seed), burn_in=burn_in)


def ar_true_psd(model: ArModel, freqs) -> PsdEstimate:
    """Analytic PSD noise_std^2 / |1 - sum_i a_i exp(-i 2 pi f i)|^2."""
    f = np.asarray(freqs, dtype=float)
    lags = np.arange(1, model.order + 1)
    transfer = 1.0 - np.exp(-2j * np.pi * np.outer(f, lags)) @ np.asarray(model.coeffs, dtype=float)
    power = model.noise_std**2 / np.abs(transfer) ** 2
    return PsdEstimate(f, power, estimator="true", metadata={"model": model.to_dict()})


def cif_from_latent(latent, mean_rate: float) -> tuple[np.ndarray, int]:
    """Linear-link CIF ``mean_rate + x`` clamped to [0, 1].

    Returns the CIF and the number of bins that had to be clamped.
    """
    lam = mean_rate + np.asarray(latent, dtype=float)
    clamped = int(np.count_nonzero((lam < 0) | (lam > 1)))
    if clamped:
        logger.info("clamped %d of %d CIF bins to [0, 1]", clamped, lam.size)
    return np.clip(lam, 0.0, 1.0), clamped


def generate_spikes(cif, trials: int, seed=None) -> SpikeEnsemble:
    """Independent Bernoulli(cif_k) draws for each of ``trials`` trials."""
    lam = np.asarray(cif, dtype=float)
    if lam.ndim != 1 or lam.size < 1:
        raise InputError("cif must be a non-empty 1-D sequence")
    if np.any(~np.isfinite(lam)) or lam.min() < 0 or lam.max() > 1:
        raise InputError("cif values must lie in [0, 1]")
    if trials < 1:
        raise InputError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    draws = rng.random((trials, lam.size)) < lam
    return SpikeEnsemble(draws.astype(np.int8), {"seed": _seed_int(seed)})
