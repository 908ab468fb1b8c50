import warnings

import numpy as np
import pytest

from pmtm.simulate import benchmark_model, cif_from_latent, generate_spikes, simulate_ar


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def benchmark_data():
    """One AR(4) realization with a 10-trial ensemble at mean rate 0.12."""
    model = benchmark_model()
    x = simulate_ar(model, 512, seed=2024).values
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cif, _ = cif_from_latent(x, 0.12)
    spikes = generate_spikes(cif, 10, seed=7)
    return model, x, cif, spikes


_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_log():
    """Record one line per acceptance criterion; printed in the terminal summary."""

    def log(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return passed

    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
