"""The point-process multitaper estimator: tapers, auxiliary statistics, per-taper EM, average."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .auxstats import AuxStatistic, build_aux_statistic, estimate_mean_rate
from .dpss import generate_dpss
from .em import EmConfig, EmTrace, estimate_eigen_spectrum
from .exceptions import InputError, PmtmError
from .model import DesignMatrix, psd_from_params, readout_calibration
from .spectrum import PsdEstimate

logger = logging.getLogger(__name__)

CALIBRATION_NOTE = (
    "eigen-spectrum = readout * taper_scale**2 * (K/N)**2; (K/N)**2 inverts the "
    "least-squares gain of the design-matrix columns so that, at high spike counts, "
    "each eigen-spectrum matches the classic tapered periodogram of the latent series"
)


@dataclass
class PmtmResult:
    psd: PsdEstimate
    per_taper_psds: list
    mean_rate: float
    config: dict
    traces: list = field(default_factory=list)
    aux: list | None = None


def run_pmtm(spikes, alpha: float = 5.0, tapers: int = 8, freq_bins: int | None = None,
             cfg: EmConfig | None = None, taper_order=None, keep_aux: bool = False) -> PmtmResult:
    """Estimate the PSD of the latent process driving ``spikes``.

    Parameters
    ----------
    spikes : SpikeEnsemble or array_like, shape (L, K)
    alpha : float
        Time-bandwidth product K W; requires ``tapers < floor(2 * alpha)``.
    tapers : int
        Number of dpss tapers J.
    freq_bins : int, optional
        N, the number of frequency bins of the latent model (default K // 2).
    cfg : EmConfig, optional
    taper_order : sequence of int, optional
        Order in which tapers are processed. Results do not depend on it.
    keep_aux : bool
        Keep the auxiliary statistics in the result.

    Returns
    -------
    PmtmResult
    """
    trials = np.atleast_2d(np.asarray(getattr(spikes, "trials", spikes)))
    L, K = trials.shape
    N = K // 2 if freq_bins is None else int(freq_bins)
    cfg = cfg or EmConfig()
    taper_set = generate_dpss(K, alpha, tapers)
    design = DesignMatrix(K, N)
    calibration = readout_calibration(K, N)
    mean_rate = estimate_mean_rate(trials)

    order = range(tapers) if taper_order is None else list(taper_order)
    if sorted(order) != list(range(tapers)):
        raise InputError(f"taper_order must be a permutation of 0..{tapers - 1}")

    per_taper: list[PsdEstimate | None] = [None] * tapers
    traces: list[EmTrace | None] = [None] * tapers
    auxes: list[AuxStatistic | None] = [None] * tapers
    for j in order:
        try:
            aux = build_aux_statistic(trials, taper_set.tapers[j], mean_rate, taper_index=j)
            params, trace = estimate_eigen_spectrum(aux, design, cfg)
        except PmtmError as exc:
            raise type(exc)(f"taper {j}: {exc}") from exc
        psd = psd_from_params(params, scale=aux.taper_scale**2 * calibration)
        psd.estimator = f"pmtm-taper-{j}"
        psd.metadata = {"taper_scale": aux.taper_scale, "em_iterations": len(trace),
                        "em_converged": trace.converged}
        per_taper[j] = psd
        traces[j] = trace
        if keep_aux:
            auxes[j] = aux
        logger.debug("taper %d: %d EM iterations (converged=%s)", j, len(trace), trace.converged)

    power = np.zeros(N)
    for psd in per_taper:
        power += psd.power
    power /= tapers
    config = {"alpha": alpha, "tapers": tapers, "freq_bins": N, "bin_count": K,
              "trial_count": L, "em": cfg.to_dict()}
    meta = {
        "mean_rate": mean_rate,
        "mean_rate_note": "offsets use the plug-in mean rate estimate in place of the true mean",
        "scale_calibration": calibration,
        "scale_calibration_procedure": CALIBRATION_NOTE,
        "taper_concentrations": taper_set.concentrations.tolist(),
        "em_converged": [t.converged for t in traces],
        "em_iterations": [len(t) for t in traces],
    }
    psd = PsdEstimate(per_taper[0].freqs, power, estimator="pmtm", bandwidth=alpha,
                      taper_count=tapers, metadata=meta)
    return PmtmResult(psd, per_taper, mean_rate, config, traces, auxes if keep_aux else None)
