"""Simulation benchmark: repeated AR realizations and spike ensembles, all estimators."""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .baselines import psth_psd, ss_psd
from .dpss import generate_dpss
from .em import EmConfig
from .estimator import run_pmtm
from .exceptions import InputError, PmtmError
from .metrics import FORMULA, normalized_mse
from .simulate import (BENCHMARK_COEFFS, BENCHMARK_MEAN_RATE, BENCHMARK_NOISE_STD, ArModel,
                       ar_true_psd, cif_from_latent, generate_spikes, simulate_ar)
from .spectrum import default_grid, mtm_psd

logger = logging.getLogger(__name__)

ESTIMATORS = ("pmtm", "ss", "psth", "oracle")


@dataclass
class ExperimentConfig:
    coeffs: tuple = BENCHMARK_COEFFS
    noise_std: float = BENCHMARK_NOISE_STD
    mean_rate: float = BENCHMARK_MEAN_RATE
    bins: int = 512
    trials: int = 10
    alpha: float = 5.0
    tapers: int = 8
    freq_bins: int | None = None
    em: EmConfig = field(default_factory=EmConfig)
    n_ar: int = 10
    n_ensembles: int = 5
    seed: int = 0
    burn_in: int | None = None
    estimators: tuple = ESTIMATORS

    def __post_init__(self):
        self.coeffs = tuple(float(c) for c in self.coeffs)
        self.estimators = tuple(self.estimators)
        if isinstance(self.em, dict):
            self.em = EmConfig.from_dict(self.em)
        for name in ("bins", "trials", "tapers", "n_ar", "n_ensembles"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be >= 1")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise InputError(f"unknown estimators {sorted(unknown)}")
        if not 0 <= self.mean_rate <= 1:
            raise InputError("mean_rate must lie in [0, 1]")

    @property
    def model(self) -> ArModel:
        return ArModel(self.coeffs, self.noise_std)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown experiment config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["coeffs"] = list(self.coeffs)
        d["estimators"] = list(self.estimators)
        return d


def ar_seed(seed: int, ar_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, 0, ar_index])


def spike_seed(seed: int, ar_index: int, ensemble_index: int) -> np.random.SeedSequence:
    # independent of the trial count: rows of a larger ensemble extend a smaller one
    return np.random.SeedSequence([seed, 1, ar_index, ensemble_index])


@dataclass
class RunRecord:
    ar_index: int
    ensemble_index: int
    nmse: dict
    psds: dict
    clamp_events: int
    seconds: float
    failures: dict = field(default_factory=dict)
    pmtm_result: object = None
    latent: np.ndarray | None = None
    spikes: np.ndarray | None = None

    @property
    def run_id(self) -> str:
        return f"ar{self.ar_index}-ens{self.ensemble_index}"


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    freqs: np.ndarray
    truth: np.ndarray
    runs: list

    def values(self, estimator: str) -> np.ndarray:
        return np.array([r.nmse[estimator] for r in self.runs if estimator in r.nmse])

    def aggregate(self) -> dict:
        out = {}
        for name in self.config.estimators:
            v = self.values(name)
            failures = sum(name in r.failures for r in self.runs)
            std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
            out[name] = {"mean": float(v.mean()) if v.size else float("nan"),
                         "two_std": 2 * std, "median": float(np.median(v)) if v.size else float("nan"),
                         "runs": int(v.size), "failures": int(failures)}
        return out

    def run_rows(self) -> list[dict]:
        rows = []
        for r in self.runs:
            row = {"run_id": r.run_id, "ar_index": r.ar_index, "ensemble_index": r.ensemble_index,
                   "seed": self.config.seed, "clamp_events": r.clamp_events,
                   "seconds": round(r.seconds, 3)}
            for name in self.config.estimators:
                row[f"nmse_{name}"] = r.nmse.get(name, "")
            row["failures"] = ";".join(f"{k}: {v}" for k, v in r.failures.items())
            rows.append(row)
        return rows

    def plot_rows(self) -> list[dict]:
        """Tidy (frequency, estimator, power, run_id) rows, including the true PSD."""
        rows = [{"freq": f, "estimator": "true", "power": p, "run_id": ""}
                for f, p in zip(self.freqs, self.truth)]
        for r in self.runs:
            for name, power in r.psds.items():
                rows.extend({"freq": f, "estimator": name, "power": p, "run_id": r.run_id}
                            for f, p in zip(self.freqs, power))
        return rows

    def summary(self) -> dict:
        return {"metric": FORMULA, "config": self.config.to_dict(),
                "aggregate": self.aggregate(), "runs": len(self.runs)}


def run_single(cfg: ExperimentConfig, ar_index: int, ensemble_index: int, latent=None,
               keep_results: bool = False) -> RunRecord:
    """Simulate one (AR realization, spike ensemble) pair and evaluate every estimator."""
    start = time.perf_counter()
    model = cfg.model
    freqs = default_grid(cfg.bins, cfg.freq_bins)
    truth = ar_true_psd(model, freqs)
    if latent is None:
        latent = simulate_ar(model, cfg.bins, cfg.burn_in, seed=ar_seed(cfg.seed, ar_index)).values
    cif, clamps = cif_from_latent(latent, cfg.mean_rate)
    spikes = generate_spikes(cif, cfg.trials, seed=spike_seed(cfg.seed, ar_index, ensemble_index))
    tapers = generate_dpss(cfg.bins, cfg.alpha, cfg.tapers)
    record = RunRecord(ar_index, ensemble_index, {}, {}, clamps, 0.0)
    for name in cfg.estimators:
        try:
            if name == "pmtm":
                res = run_pmtm(spikes, cfg.alpha, cfg.tapers, cfg.freq_bins, cfg.em)
                psd = res.psd
                if keep_results:
                    record.pmtm_result = res
            elif name == "ss":
                psd = ss_psd(spikes, tapers, freqs)
            elif name == "psth":
                psd = psth_psd(spikes, tapers, freqs)
            else:
                psd = mtm_psd(latent, tapers, freqs)
            record.psds[name] = psd.power
            record.nmse[name] = normalized_mse(psd, truth).value
        except PmtmError as exc:
            logger.warning("%s failed on ar%d-ens%d: %s", name, ar_index, ensemble_index, exc)
            record.failures[name] = str(exc)
    if keep_results:
        record.latent = np.asarray(latent)
        record.spikes = spikes.trials
    record.seconds = time.perf_counter() - start
    return record


def run_experiment(cfg: ExperimentConfig, keep_results: bool = False, progress=None) -> ExperimentReport:
    """Run every (AR realization x spike ensemble) pair in a fixed order."""
    model = cfg.model
    freqs = default_grid(cfg.bins, cfg.freq_bins)
    truth = ar_true_psd(model, freqs).power
    runs = []
    for i in range(cfg.n_ar):
        latent = simulate_ar(model, cfg.bins, cfg.burn_in, seed=ar_seed(cfg.seed, i)).values
        for e in range(cfg.n_ensembles):
            rec = run_single(cfg, i, e, latent=latent, keep_results=keep_results)
            runs.append(rec)
            logger.info("%s done in %.1fs: %s", rec.run_id, rec.seconds,
                        {k: round(v, 4) for k, v in rec.nmse.items()})
            if progress is not None:
                progress(rec)
    return ExperimentReport(cfg, freqs, truth, runs)
