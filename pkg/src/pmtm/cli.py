"""Command-line driver: ``pmtm <subcommand> ...``.

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io
from .baselines import psth_psd, ss_psd
from .dpss import generate_dpss
from .em import EmConfig
from .estimator import run_pmtm
from .exceptions import InputError, NumericalError
from .experiment import ExperimentConfig, run_experiment
from .metrics import FORMULA, normalized_mse
from .simulate import (BENCHMARK_COEFFS, BENCHMARK_MEAN_RATE, BENCHMARK_NOISE_STD, ArModel,
                       ar_true_psd, cif_from_latent, generate_spikes, simulate_ar)
from .spectrum import default_grid

log = logging.getLogger("pmtm")


def _floats(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _em_config(path) -> EmConfig:
    if path is None:
        return EmConfig()
    return EmConfig.from_dict(io.read_json(path))


def cmd_simulate(args):
    model = ArModel(args.coeffs, args.noise_std)
    latent = simulate_ar(model, args.bins, args.burn_in, seed=args.seed)
    cif, clamped = cif_from_latent(latent.values, args.mu)
    spikes = generate_spikes(cif, args.trials, seed=args.seed + 1)
    io.write_spikes_csv(args.out, spikes)
    meta = {"model": model.to_dict(), "mean_rate": args.mu, "bins": args.bins,
            "trials": args.trials, "seed": args.seed, "spike_seed": args.seed + 1,
            "burn_in": latent.burn_in, "cif_clamp_events": clamped,
            "generator": "numpy PCG64 (default_rng)"}
    if args.latent_out:
        io.write_series_csv(args.latent_out, latent.values)
        meta["latent_path"] = str(args.latent_out)
    io.write_json(io.sidecar_path(args.out), meta)
    if clamped:
        log.warning("clamped %d CIF bins to [0, 1]", clamped)
    print(f"wrote {args.trials}x{args.bins} spikes to {args.out}")


def cmd_dpss(args):
    ts = generate_dpss(args.bins, args.alpha, args.tapers)
    io.write_matrix_csv(args.out, ts.tapers)
    io.write_json(io.sidecar_path(args.out), {
        "alpha": ts.half_bandwidth_product, "tapers": ts.taper_count, "bins": ts.length,
        "concentrations": ts.concentrations, "scale_factors": ts.scale_factors})
    print(f"wrote {ts.taper_count} tapers to {args.out}")


def _figure(path, psd, truth=None):
    from .plotting import plot_psd_comparison

    if truth is None:
        truth = np.full_like(psd.power, np.nan)
    plot_psd_comparison(psd.freqs, truth, {psd.estimator: psd.power}, path)


def cmd_pmtm(args):
    spikes = io.read_spikes_csv(args.spikes)
    cfg = _em_config(args.em_config)
    res = run_pmtm(spikes, args.alpha, args.tapers, args.freq_bins, cfg,
                   keep_aux=args.dump_aux is not None)
    io.write_psd_csv(args.out, res.psd)
    io.write_json(io.sidecar_path(args.out), {
        "estimator": "pmtm", "input": str(args.spikes), "config": res.config, **res.psd.metadata})
    if args.dump_traces:
        io.write_json(args.dump_traces, [t.to_dict(include_newton=True) for t in res.traces])
    if args.dump_aux:
        out = Path(args.dump_aux)
        out.mkdir(parents=True, exist_ok=True)
        for aux in res.aux:
            io.write_matrix_csv(out / f"aux_taper{aux.taper_index}.csv", aux.values)
            io.write_series_csv(out / f"offsets_taper{aux.taper_index}.csv", aux.offsets)
    if args.figure:
        _figure(args.figure, res.psd)
    print(f"wrote PMTM estimate ({len(res.psd.freqs)} bins) to {args.out}")


def cmd_baseline(args):
    spikes = io.read_spikes_csv(args.spikes)
    K = spikes.bin_count
    ts = generate_dpss(K, args.alpha, args.tapers)
    freqs = default_grid(K, args.freq_bins)
    psd = psth_psd(spikes, ts, freqs) if args.method == "psth" else ss_psd(spikes, ts, freqs)
    io.write_psd_csv(args.out, psd)
    io.write_json(io.sidecar_path(args.out), {
        "estimator": psd.estimator, "input": str(args.spikes), "alpha": args.alpha,
        "tapers": args.tapers, **psd.metadata})
    if args.figure:
        _figure(args.figure, psd)
    print(f"wrote {args.method} estimate to {args.out}")


def cmd_evaluate(args):
    est = io.read_psd_csv(args.estimate, estimator="estimate")
    if args.truth:
        truth = io.read_psd_csv(args.truth, estimator="true")
    else:
        truth = ar_true_psd(ArModel(args.coeffs, args.noise_std), est.freqs)
    res = normalized_mse(est, truth)
    out = {"metric": FORMULA, "value": res.value, "frequencies": int(res.freq_mask.size),
           "floored_terms": res.floored_count}
    if args.out:
        io.write_json(args.out, dict(out, per_frequency_terms=res.per_frequency_terms,
                                     freqs=res.freq_mask))
    if args.figure:
        from .plotting import plot_psd_comparison

        plot_psd_comparison(truth.freqs, truth.power, {"estimate": est.power}, args.figure)
    print(f"normalized MSE = {res.value:.6g}")


_OVERRIDES = ("n_ar", "n_ensembles", "trials", "seed", "bins", "alpha", "tapers",
              "freq_bins", "mean_rate", "noise_std", "coeffs")


def cmd_experiment(args):
    d = io.read_json(args.config) if args.config else {}
    for name in _OVERRIDES:
        value = getattr(args, name)
        if value is not None:
            d[name] = value
    if args.em_config:
        d["em"] = io.read_json(args.em_config)
    cfg = ExperimentConfig.from_dict(d)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(rec):
        cells = ", ".join(f"{k}={v:.4f}" for k, v in rec.nmse.items())
        print(f"{rec.run_id}: {cells} ({rec.seconds:.1f}s)", flush=True)

    report = run_experiment(cfg, keep_results=True, progress=progress)
    io.write_rows_csv(out / "runs.csv", report.run_rows())
    io.write_json(out / "aggregate.json", report.summary())
    if args.plot_data:
        io.write_rows_csv(out / "plot_data.csv", report.plot_rows(),
                          ["freq", "estimator", "power", "run_id"])
    if not args.no_figures:
        from .plotting import report_figures

        report_figures(report, out / "figures")
    print(f"# {FORMULA}")
    for name, agg in report.aggregate().items():
        print(f"{name:>7}: {agg['mean']:.4f} +/- {agg['two_std']:.4f} (2 STD, {agg['runs']} runs, "
              f"{agg['failures']} failures)")
    n_fail = sum(bool(r.failures) for r in report.runs)
    if n_fail == len(report.runs):
        raise NumericalError("every run failed")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pmtm", description="Point-process multitaper spectral estimation")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate AR-driven Bernoulli spike trains")
    s.add_argument("--coeffs", type=_floats, default=list(BENCHMARK_COEFFS))
    s.add_argument("--noise-std", type=float, default=BENCHMARK_NOISE_STD)
    s.add_argument("--mu", type=float, default=BENCHMARK_MEAN_RATE)
    s.add_argument("--bins", type=int, default=512)
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--burn-in", type=int, default=None)
    s.add_argument("--latent-out", type=Path, default=None)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("dpss", help="write dpss tapers")
    s.add_argument("--bins", type=int, default=512)
    s.add_argument("--alpha", type=float, default=5.0)
    s.add_argument("--tapers", type=int, default=8)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_dpss)

    def taper_args(s):
        s.add_argument("spikes", type=Path)
        s.add_argument("--alpha", type=float, default=5.0)
        s.add_argument("--tapers", type=int, default=8)
        s.add_argument("--freq-bins", type=int, default=None)
        s.add_argument("--out", type=Path, required=True)
        s.add_argument("--figure", type=Path, default=None, help="also render the PSD to this image")

    s = sub.add_parser("pmtm", help="PMTM estimate from a spike CSV")
    taper_args(s)
    s.add_argument("--em-config", type=Path, default=None)
    s.add_argument("--dump-traces", type=Path, default=None)
    s.add_argument("--dump-aux", type=Path, default=None)
    s.set_defaults(func=cmd_pmtm)

    s = sub.add_parser("baseline", help="PSTH-PSD or SS-PSD estimate from a spike CSV")
    taper_args(s)
    s.add_argument("--method", choices=("psth", "ss"), required=True)
    s.set_defaults(func=cmd_baseline)

    s = sub.add_parser("evaluate", help="normalized MSE of one PSD against the truth")
    s.add_argument("--estimate", type=Path, required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--truth", type=Path, default=None)
    g.add_argument("--coeffs", type=_floats, default=list(BENCHMARK_COEFFS))
    s.add_argument("--noise-std", type=float, default=BENCHMARK_NOISE_STD)
    s.add_argument("--out", type=Path, default=None)
    s.add_argument("--figure", type=Path, default=None)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("experiment", help="full simulation benchmark")
    s.add_argument("--config", type=Path, default=None)
    s.add_argument("--em-config", type=Path, default=None)
    s.add_argument("--n-ar", type=int, default=None)
    s.add_argument("--n-ensembles", type=int, default=None)
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--bins", type=int, default=None)
    s.add_argument("--alpha", type=float, default=None)
    s.add_argument("--tapers", type=int, default=None)
    s.add_argument("--freq-bins", type=int, default=None)
    s.add_argument("--mean-rate", type=float, default=None)
    s.add_argument("--noise-std", type=float, default=None)
    s.add_argument("--coeffs", type=_floats, default=None)
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--plot-data", action="store_true")
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", RuntimeWarning)
    try:
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
