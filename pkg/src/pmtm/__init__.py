"""Point-process multitaper spectral estimation for binary spiking data."""

from .auxstats import AuxStatistic, build_aux_statistic, estimate_mean_rate
from .baselines import psth_psd, ss_psd
from .dpss import TaperSet, generate_dpss
from .em import EmConfig, EmTrace, estimate_eigen_spectrum
from .estimator import PmtmResult, run_pmtm
from .exceptions import InputError, NumericalError, PmtmError
from .metrics import normalized_mse
from .model import DesignMatrix, SpectralParams, psd_from_params
from .simulate import ArModel, SpikeEnsemble, ar_true_psd, generate_spikes, simulate_ar
from .spectrum import PsdEstimate, eigen_spectrum, mtm_psd

__version__ = "0.1.0"

__all__ = [
    "ArModel", "AuxStatistic", "DesignMatrix", "EmConfig", "EmTrace", "InputError",
    "NumericalError", "PmtmError", "PmtmResult", "PsdEstimate", "SpectralParams",
    "SpikeEnsemble", "TaperSet", "ar_true_psd", "build_aux_statistic", "eigen_spectrum",
    "estimate_eigen_spectrum", "estimate_mean_rate", "generate_dpss", "generate_spikes",
    "mtm_psd", "normalized_mse", "psd_from_params", "psth_psd", "run_pmtm", "simulate_ar",
    "ss_psd",
]
