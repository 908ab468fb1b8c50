import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pmtm.exceptions import InputError
from pmtm.metrics import POWER_FLOOR, normalized_mse
from pmtm.spectrum import PsdEstimate


def _psd(power, freqs=None):
    power = np.asarray(power, dtype=float)
    freqs = np.arange(power.size) / (2.0 * power.size) if freqs is None else freqs
    return PsdEstimate(freqs, power)


def test_identity_is_zero():
    t = _psd([0.5, 0.01, 3.0, 0.2])
    assert normalized_mse(t, t).value == 0.0


def test_log_doubling_gives_one():
    true = np.array([5.0, 0.1, 0.01, 4.0])
    assert normalized_mse(_psd(true**2), _psd(true)).value == pytest.approx(1.0)


def test_dc_excluded():
    true = _psd([7.0, 0.1, 0.2])
    est = _psd([1e6, 0.1, 0.2])
    assert normalized_mse(est, true).value == 0.0
    assert normalized_mse(est, true, exclude_dc=False).value > 0


def test_hand_value():
    # one bin: ln(e^-1) vs ln(e^-2): ((-1 + 2) / -2)^2 = 0.25
    true = _psd([1.0, np.exp(-2.0)])
    est = _psd([1.0, np.exp(-1.0)])
    assert normalized_mse(est, true).value == pytest.approx(0.25)


def test_errors_and_floor():
    with pytest.raises(InputError):
        normalized_mse(_psd([1.0, 2.0]), _psd([1.0, 2.0, 3.0]))
    with pytest.raises(InputError):
        normalized_mse(_psd([1.0, 2.0]), _psd([1.0, -2.0]))
    with pytest.raises(InputError):
        normalized_mse(_psd([1.0, 2.0]), _psd([2.0, 1.0]))
    res = normalized_mse(_psd([1.0, 0.0, 0.5]), _psd([1.0, 0.1, 0.5]))
    assert res.floored_count == 1
    term = ((np.log(POWER_FLOOR) - np.log(0.1)) / np.log(0.1)) ** 2
    assert res.value == pytest.approx(term / 2)


@settings(max_examples=40, deadline=None)
@given(arrays(float, 9, elements=st.floats(1e-6, 0.5)), arrays(float, 9, elements=st.floats(1e-6, 0.5)),
       st.randoms(use_true_random=False))
def test_permutation_invariant_and_nonnegative(est, true, rnd):
    a = normalized_mse(_psd(est), _psd(true)).value
    perm = [0] + rnd.sample(range(1, 9), 8)
    b = normalized_mse(_psd(est[perm]), _psd(true[perm])).value
    assert a >= 0
    assert b == pytest.approx(a, rel=1e-12, abs=1e-15)
