import csv
import io
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ffms import core
from ffms.config import RunConfig
from ffms.errors import DomainError, PreconditionError, ValidityWarning
from ffms.garment import (DEFAULT_THRESHOLDS, LimbProfile, PeristalsisSchedule, SegmentWave, schedule_peristalsis,
                          simulate_garment, single_band_schedule, withdrawal_compression, wrap_compression)
from ffms.hydraulics import FITTED_VOLUME_SLOPE

from conftest import A_FLUID, A_M, A_TUBE, E, H


def _offsets(s):
    return [seg.offset for seg in s.segments]


def test_distal_offsets():
    assert _offsets(schedule_peristalsis(3, 6.0, "distal", 1e5, 2e5)) == pytest.approx([0, 2, 4])


def test_proximal_offsets():
    assert _offsets(schedule_peristalsis(3, 6.0, "proximal", 1e5, 2e5)) == pytest.approx([0, 4, 2])


def test_schedule_preconditions():
    with pytest.raises(PreconditionError):
        schedule_peristalsis(1, 6.0)
    with pytest.raises(DomainError):
        schedule_peristalsis(3, 0.0)
    with pytest.raises(DomainError):
        schedule_peristalsis(3, 6.0, p_low=2e5, p_high=1e5)
    with pytest.raises(DomainError):
        schedule_peristalsis(3, 6.0, direction="sideways")


@pytest.mark.parametrize("shape", ["sine", "trapezoid"])
def test_segment_wave_phase(shape):
    w = SegmentWave(6.0, 2.0, 1e5, 3e5, shape)
    assert w.pressure(2.0) == pytest.approx(3e5)
    assert w.pressure(5.0) == pytest.approx(1e5)
    t = np.linspace(0, 12, 1201)
    assert w.pressure(t).min() >= 1e5 - 1e-6 and w.pressure(t).max() <= 3e5 + 1e-6


def test_waveforms_identical_up_to_shift():
    s = schedule_peristalsis(4, 8.0, "distal", 1e5, 5e5)
    t = np.linspace(0, 16, 801)
    p = s.pressures(t)
    for i in range(4):
        assert np.allclose(p[:, i], s.segments[0].pressure(t - 2.0 * i))


def test_limb_validation():
    with pytest.raises(DomainError):
        LimbProfile((0, 1), (0.05, 0.0))
    with pytest.raises(PreconditionError):
        LimbProfile((0, 0), (0.05, 0.05))
    with pytest.raises(PreconditionError):
        LimbProfile((0,), (0.05, 0.05))


# compression map

def test_zero_force_pressure_gives_no_compression(proto3):
    limb = LimbProfile.uniform(3, 0.05)
    p_max = core.max_pressure(proto3, proto3.pre_strain)
    assert np.allclose(wrap_compression(proto3, limb, [p_max] * 3), 0.0, atol=1e-9)


def test_slack_band_clamped(proto3):
    limb = LimbProfile.uniform(3, 0.05)
    out = wrap_compression(proto3, limb, [1e6, 2e6, 0.0])
    assert out[0] == 0.0 and out[1] == 0.0 and out[2] > 0


def test_band_on_cylinder(band):
    limb = LimbProfile((0.0,), (11.6e-3,))
    with pytest.warns(ValidityWarning):
        pc = wrap_compression(band, limb, [250e3])
    assert pc[0] == pytest.approx(H * 13.0 / (11.6e-3 * A_M), rel=1e-9)
    assert pc[0] == pytest.approx(44.5e3, rel=2e-3)


def test_no_warning_on_wide_limb(proto3):
    with warnings.catch_warnings():
        warnings.simplefilter("error", ValidityWarning)
        wrap_compression(proto3, LimbProfile.uniform(2, 0.05), [3e5, 3e5])


# the actuator fixture is frozen, so sharing it across examples is safe
@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(p=st.floats(0, 2e6), r1=st.floats(0.025, 0.2), dr=st.floats(1e-4, 0.05))
def test_compression_nonnegative_and_decreasing_in_radius(proto3, p, r1, dr):
    limb = LimbProfile((0.0, 0.1), (r1, r1 + dr))
    pc = wrap_compression(proto3, limb, [p, p])
    assert np.all(pc >= 0)
    if pc[0] > 0:
        assert pc[1] < pc[0]


def test_armband_withdrawal_reaches_twelve_kpa():
    cfg = RunConfig.bundled("armband")
    a = cfg.actuator()
    g = cfg["garment"]["withdrawal"]
    pc = withdrawal_compression(a, g["cylinder_radius_m"], g["volume_m3"], FITTED_VOLUME_SLOPE)
    assert pc == pytest.approx(12e3, rel=1e-3)
    # independent chain: blocked shortening becomes true strain in the tubes
    L = a.reference_length
    dL = 3e-6 / (3 * FITTED_VOLUME_SLOPE)
    F = 3 * E * np.log(L / (L - dL)) * A_TUBE
    assert pc == pytest.approx(a.effective_thickness * F / (g["cylinder_radius_m"] * a.sheet_cross_section))
    assert withdrawal_compression(a, g["cylinder_radius_m"], 0.0, FITTED_VOLUME_SLOPE) == 0.0


# garment simulation

def test_static_p_max_schedule_is_all_zero(proto3):
    p_max = core.max_pressure(proto3, proto3.pre_strain)
    s = schedule_peristalsis(3, 2.0, "distal", p_max, p_max)
    res = simulate_garment(s, proto3, LimbProfile.uniform(3, 0.05), 1.0, volume_slope=FITTED_VOLUME_SLOPE)
    assert np.allclose(res.compression, 0.0, atol=1e-6)
    assert np.all(res.duty(4e3) == 0)


def test_band_cycle_peak_and_duty(band):
    s = single_band_schedule(6.0, 250e3, 650e3)
    res = simulate_garment(s, band, LimbProfile((0.0,), (11.6e-3,)), 12.0, volume_slope=FITTED_VOLUME_SLOPE)
    assert res.peak[0] == pytest.approx(44.5e3, rel=0.01)
    assert res.duty(4e3)[0] >= 0.5
    assert res.warnings and "thin-band" in res.warnings[0]
    assert res.report()["warnings"] == res.warnings


def _argmax_sequence(res):
    seq = []
    for k in np.argmax(res.compression, axis=1):
        if not seq or seq[-1] != k:
            seq.append(int(k))
    return seq


@pytest.mark.parametrize("direction,step", [("distal", 1), ("proximal", -1)])
def test_travelling_wave_advances(proto3, direction, step):
    n = 4
    s = schedule_peristalsis(n, 4.0, direction, 2e5, 6e5)
    res = simulate_garment(s, proto3, LimbProfile.uniform(n, 0.05), 8.0, dt=1e-2, transient=False)
    seq = _argmax_sequence(res)
    assert len(seq) >= 2 * n
    assert all((b - a) % n == step % n for a, b in zip(seq, seq[1:]))


def test_relabel_and_phase_shift_invariance(proto3):
    n, period, dt = 3, 6.0, 1e-2
    s = schedule_peristalsis(n, period, "distal", 2e5, 6e5)
    limb = LimbProfile.uniform(n, 0.05)
    res = simulate_garment(s, proto3, limb, 12.0, dt=dt, transient=False)
    k = int(round(period / n / dt))
    # segment i+1 shifted back by one offset is segment i
    assert np.allclose(res.compression[k:, 1:], res.compression[:-k, :-1], rtol=1e-9, atol=1e-9)
    assert np.allclose(res.compression[k:, 0], res.compression[:-k, -1], rtol=1e-9, atol=1e-9)


def test_uniform_schedule_uniform_map(proto3):
    seg = SegmentWave(2.0, 0.0, 2e5, 6e5)
    s = PeristalsisSchedule((seg,) * 3, "distal")
    res = simulate_garment(s, proto3, LimbProfile.uniform(3, 0.05), 2.0, volume_slope=FITTED_VOLUME_SLOPE)
    assert np.allclose(res.compression, res.compression[:, :1])


def test_transient_lags_command(proto10):
    s = schedule_peristalsis(2, 5.0, "distal", 2e5, 6e5)
    limb = LimbProfile.uniform(2, 0.05)
    kw = dict(dt=1e-3, volume_slope=FITTED_VOLUME_SLOPE, conduit_length=0.187)
    lagged = simulate_garment(s, proto10, limb, 5.0, **kw)
    ideal = simulate_garment(s, proto10, limb, 5.0, transient=False, dt=1e-3)
    assert lagged.compression.shape == ideal.compression.shape
    assert not np.allclose(lagged.fluid_pressure, ideal.fluid_pressure, rtol=1e-3)
    assert np.allclose(lagged.fluid_pressure, ideal.fluid_pressure, rtol=0.1)


def test_segment_count_mismatch(proto3):
    with pytest.raises(PreconditionError):
        simulate_garment(schedule_peristalsis(3, 2.0), proto3, LimbProfile.uniform(2, 0.05), 1.0)


def test_csv_and_sampling(proto3):
    s = schedule_peristalsis(2, 2.0, "distal", 2e5, 6e5)
    res = simulate_garment(s, proto3, LimbProfile.uniform(2, 0.05), 2.0, transient=False, sample_dt=0.1)
    assert len(res.t) == 21
    rows = list(csv.reader(io.StringIO(res.to_csv())))
    assert rows[0] == ["t", "p_c_1", "p_c_2", "p_1", "p_2"]
    assert len(rows) == 22
    assert float(rows[5][1]) == res.compression[4, 0]
    rep = res.report()
    assert set(rep["duty_above"]) == {f"{x:g}" for x in DEFAULT_THRESHOLDS}
