"""Aggregate metric tests: PD, range factor, field equivalence, noise rise."""
import math

import pytest

from mirs.errors import ConfigurationError
from mirs.metrics import (SweepResult, field_equivalent_range,
                          max_range_factor, noise_rise_curve,
                          probability_of_detection, stable_mean)


def test_probability_of_detection():
    assert probability_of_detection([True] * 10) == 1.0
    assert probability_of_detection([True, False, True, True]) == 0.75
    assert probability_of_detection([False]) == 0.0
    with pytest.raises(ConfigurationError):
        probability_of_detection([])


def test_max_range_factor_values():
    assert max_range_factor(0.0) == 1.0
    assert max_range_factor(6.5) == pytest.approx(0.688, abs=1e-3)
    assert max_range_factor(12.0) == pytest.approx(0.501, abs=1e-3)
    with pytest.raises(ConfigurationError):
        max_range_factor(-1.0)


def test_max_range_factor_composition():
    a, b = 3.7, 5.1
    assert max_range_factor(a) * max_range_factor(b) == pytest.approx(
        max_range_factor(a + b), rel=1e-12)
    # strictly decreasing
    xs = [0.0, 1.0, 2.5, 6.5, 12.0]
    fs = [max_range_factor(x) for x in xs]
    assert all(x > y for x, y in zip(fs, fs[1:]))


def test_field_equivalent_range():
    assert field_equivalent_range(55.0, 1.0, 1.0) == 55.0
    # emulating a source at 55 m with one at 5 m takes (5/55)^2 the power
    ratio = (5.0 / 55.0) ** 2
    assert field_equivalent_range(55.0, ratio, 1.0) == pytest.approx(5.0, rel=1e-12)
    # quadrupling the power doubles the equivalent range
    assert field_equivalent_range(10.0, 4.0, 1.0) == pytest.approx(20.0, rel=1e-12)
    with pytest.raises(ConfigurationError):
        field_equivalent_range(10.0, 0.0, 1.0)


def test_field_equivalent_range_round_trip():
    r = field_equivalent_range(55.0, 2.345e-3, 7.89e-2)
    back = field_equivalent_range(r, 7.89e-2, 2.345e-3)
    assert back == pytest.approx(55.0, rel=1e-12)


def test_noise_rise_curve():
    floors = {0: -120.0, 5: -117.5, 15: -115.0, 30: -112.0}
    curve = noise_rise_curve(floors)
    assert curve == [(0, 0.0), (5, 2.5), (15, 5.0), (30, 8.0)]
    with pytest.raises(ConfigurationError):
        noise_rise_curve({5: -117.0})


def test_stable_mean_order_independent():
    vals = [1e16, 1.0, -1e16, 1.0, 3.0]
    a = stable_mean(vals)
    b = stable_mean(reversed(vals))
    assert a == b == 1.0
    with pytest.raises(ConfigurationError):
        stable_mean([])


def test_sweep_result_validation():
    kw = dict(scenario_label="low", topology="front", host_radar_type="LRR",
              technique="none", penetration_rate=0.5,
              mean_noise_floor_db=-120.0, mean_target_snr_db=20.0,
              n_dwells=10, seed=0)
    SweepResult(pd=0.5, **kw)
    with pytest.raises(ConfigurationError):
        SweepResult(pd=1.5, **kw)
