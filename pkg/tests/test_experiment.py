import numpy as np
import pytest

from pmtm.em import EmConfig
from pmtm.exceptions import InputError
from pmtm.experiment import ExperimentConfig, run_experiment, run_single

pytestmark = pytest.mark.filterwarnings("ignore::RuntimeWarning")


def tiny(**kw):
    base = dict(bins=64, alpha=2.0, tapers=3, n_ar=1, n_ensembles=2, em=EmConfig(max_em_iters=5))
    base.update(kw)
    return ExperimentConfig(**base)


def test_deterministic_report():
    cfg = tiny(n_ensembles=1)
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert len(a.runs) == 1
    assert a.runs[0].nmse == b.runs[0].nmse
    for name in a.runs[0].psds:
        np.testing.assert_array_equal(a.runs[0].psds[name], b.runs[0].psds[name])


def test_aggregate_is_plain_mean():
    rep = run_experiment(tiny(n_ar=2))
    agg = rep.aggregate()
    for name in rep.config.estimators:
        vals = [r.nmse[name] for r in rep.runs]
        assert agg[name]["mean"] == pytest.approx(np.mean(vals), rel=1e-12)
        assert agg[name]["two_std"] == pytest.approx(2 * np.std(vals, ddof=1), rel=1e-12)
        assert agg[name]["runs"] == 4
    rows = rep.run_rows()
    assert [r["run_id"] for r in rows] == ["ar0-ens0", "ar0-ens1", "ar1-ens0", "ar1-ens1"]
    tidy = rep.plot_rows()
    assert len(tidy) == 32 * (1 + 4 * 4)


def test_nested_ensembles():
    small = run_single(tiny(trials=4, estimators=("psth",)), 0, 0, keep_results=True)
    big = run_single(tiny(trials=9, estimators=("psth",)), 0, 0, keep_results=True)
    np.testing.assert_array_equal(big.spikes[:4], small.spikes)
    np.testing.assert_array_equal(big.latent, small.latent)


def test_config_round_trip_and_errors():
    cfg = tiny()
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again == cfg
    with pytest.raises(InputError):
        ExperimentConfig.from_dict({"nope": 1})
    with pytest.raises(InputError):
        tiny(estimators=("pmtm", "magic"))
    with pytest.raises(InputError):
        tiny(trials=0)
