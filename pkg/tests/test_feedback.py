import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from feedback_qfi.constants import SIGMA_3
from feedback_qfi.feedback import (
    FeedbackSchedule,
    beta_sweep,
    controlled_qfi,
    find_gain_interval,
    gain_interval,
    optimal_schedule,
    scaling_curve,
    total_unitary,
    uncontrolled_qfi,
)
from feedback_qfi.hamfam import HamiltonianFamily, random_trig_family, spread, universal_qfi
from feedback_qfi.spectral import c_te

DF = HamiltonianFamily.direction_field(1.0)


def saturated(m, b=1.0, t=1.0):
    return 4 * m**2 * math.sin(b * t / m) ** 2


def test_single_segment_is_plain_evolution():
    s = FeedbackSchedule.identity(2, 1, 1.0)
    np.testing.assert_allclose(total_unitary(DF, 0.4, s), DF.unitary_at(0.4, 1.0), atol=1e-15)


def test_telescoping_to_identity():
    m, T, x = 4, 1.3, 0.7
    inv = DF.unitary_at(x, T / m).conj().T
    s = FeedbackSchedule(m, T, (inv,) * m)
    np.testing.assert_allclose(total_unitary(DF, x, s), np.eye(2), atol=1e-10)


def test_two_segments_double_the_angle():
    x, dx, T = 1.0, 1e-3, 1.0
    s = optimal_schedule(DF, x, 2, T)
    a = c_te(total_unitary(DF, x, s).conj().T @ total_unitary(DF, x + dx, s)).c_te
    b = c_te(DF.unitary_at(x, T / 2).conj().T @ DF.unitary_at(x + dx, T / 2)).c_te
    assert a == pytest.approx(2 * b, abs=1e-9)


def test_optimal_schedule_shape():
    s = optimal_schedule(DF, 0.3, 1, 1.0)
    assert len(s.controls) == 1
    np.testing.assert_array_equal(s.controls[0], np.eye(2))
    s = optimal_schedule(DF, 0.3, 4, 2.0)
    np.testing.assert_array_equal(s.controls[-1], np.eye(2))
    np.testing.assert_allclose(s.controls[0], DF.unitary_at(0.3, 0.5).conj().T)


def test_baseline_and_saturation_examples():
    assert uncontrolled_qfi(DF, 1.0, 5, 1.0).value == pytest.approx(2.8322936730942847, abs=1e-5)
    assert controlled_qfi(DF, 1.0, optimal_schedule(DF, 1.0, 5, 1.0)).value == pytest.approx(3.9469503, abs=1e-6)


@pytest.mark.parametrize("m", range(1, 11))
def test_saturation(m):
    q = controlled_qfi(DF, 1.0, optimal_schedule(DF, 1.0, m, 1.0)).value
    assert q == pytest.approx(saturated(m), rel=1e-6)


def test_cap_on_random_schedules(rng):
    for k in range(60):
        d = 2 + k % 2
        fam = random_trig_family(rng, d)
        m = int(rng.integers(1, 6))
        T = float(rng.uniform(0.2, 1.5))
        x = float(rng.uniform(-1, 1))
        controls = tuple(unitary_group.rvs(d, random_state=rng) for _ in range(m))
        q = controlled_qfi(fam, x, FeedbackSchedule(m, T, controls)).value
        assert q <= universal_qfi(fam, x, T) + 1e-6


def test_random_controls_on_sigma3_capped(rng):
    fam = HamiltonianFamily.multiplicative(SIGMA_3)
    for _ in range(20):
        controls = tuple(unitary_group.rvs(2, random_state=rng) for _ in range(3))
        assert controlled_qfi(fam, 0.2, FeedbackSchedule(3, 1.0, controls)).value <= 4.0 + 1e-6


def test_commuting_immunity(rng):
    for h in (SIGMA_3, np.diag([1.0, -0.5, 2.0])):
        fam = HamiltonianFamily.multiplicative(h)
        for m in (1, 3, 7):
            a = controlled_qfi(fam, 0.6, optimal_schedule(fam, 0.6, m, 1.0)).value
            b = uncontrolled_qfi(fam, 0.6, m, 1.0).value
            assert a == pytest.approx(b, abs=1e-9)


def test_scaling_curve_monotone_and_bounded():
    ms = [1, 2, 3, 5, 10, 20, 50, 100, 200]
    curve = scaling_curve(DF, 1.0, 1.0, ms)
    vals = [q for _, q in curve]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    assert all(v <= universal_qfi(DF, 1.0, 1.0) + 1e-6 for v in vals)
    assert vals[0] == pytest.approx(2.8322936730942847, abs=1e-5)
    assert vals[-1] == pytest.approx(3.99997, abs=1e-4)


def test_scaling_curve_constant_for_commuting():
    fam = HamiltonianFamily.multiplicative(SIGMA_3)
    vals = [q for _, q in scaling_curve(fam, 0.0, 1.0, [1, 2, 5, 10])]
    np.testing.assert_allclose(vals, 4.0, atol=1e-8)


def test_beta_sweep_zero_entry_and_interval():
    res = beta_sweep(DF, 1.0, 5, 1.0, np.linspace(-3, 3, 121))
    i0 = int(np.argmin(np.abs(res.betas)))
    assert res.qfi_controlled[i0] == pytest.approx(saturated(5), rel=1e-6)
    assert res.gain_interval.lo == pytest.approx(-1.66, abs=0.02)
    assert res.gain_interval.hi == pytest.approx(1.66, abs=0.02)
    assert not res.gain_interval.is_open
    assert res.gain.shape == res.betas.shape


def test_single_segment_sweep_equals_baseline():
    res = beta_sweep(DF, 1.0, 1, 1.0, np.linspace(-2, 2, 21), interval=False)
    np.testing.assert_allclose(res.qfi_controlled, res.qfi_uncontrolled, rtol=1e-9)


def test_beta_continuity():
    coarse = np.linspace(-3, 3, 61)
    res = beta_sweep(DF, 1.0, 5, 1.0, coarse, interval=False)
    fine = beta_sweep(DF, 1.0, 5, 1.0, coarse[:-1] + 0.05, interval=False)
    slope = np.max(np.abs(np.diff(res.qfi_controlled)))
    assert np.max(np.abs(fine.qfi_controlled - res.qfi_controlled[:-1])) <= 10 * slope


def test_open_interval_signal():
    gi = gain_interval(DF, 1.0, 5, 1.0, search_range=(-0.5, 0.5), scan_points=101)
    assert gi.lo_open and gi.hi_open
    assert (gi.lo, gi.hi) == (-0.5, 0.5)


def test_find_gain_interval_asymmetric():
    gi = find_gain_interval(lambda b: (b + 1.2) * (2.5 - b), (-3, 3), scan_points=61)
    assert gi.lo == pytest.approx(-1.2, abs=1e-4)
    assert gi.hi == pytest.approx(2.5, abs=1e-4)


def test_find_gain_interval_rejects_no_gain():
    with pytest.raises(ValueError):
        find_gain_interval(lambda b: -1.0 - b * b)
    with pytest.raises(ValueError):
        find_gain_interval(lambda b: 1.0, (0.5, 1.0))


def test_parallel_matches_sequential_bitwise():
    betas = np.linspace(-2, 2, 9)
    seq = beta_sweep(DF, 1.0, 5, 1.0, betas, interval=False)
    par = beta_sweep(DF, 1.0, 5, 1.0, betas, workers=2, interval=False)
    assert np.array_equal(seq.qfi_controlled, par.qfi_controlled)


def test_schedule_validation():
    with pytest.raises(ValueError):
        FeedbackSchedule(0, 1.0, ())
    with pytest.raises(ValueError):
        FeedbackSchedule(2, 1.0, (np.eye(2),))
    with pytest.raises(ValueError):
        FeedbackSchedule(1, 1.0, (2 * np.eye(2),))
    with pytest.raises(ValueError):
        optimal_schedule(DF, 0.0, 0, 1.0)
