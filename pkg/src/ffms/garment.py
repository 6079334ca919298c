"""Compression garments built from wrapped sheets.

A limb is a chain of rigid cylinders, one per band. Lowering the fluid
pressure in a pre-strained band raises its contraction force and therefore
the pressure it applies to the limb. Phase-shifted bands give a travelling
(peristaltic) compression wave.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import ActuatorSpec
from .errors import DomainError, PreconditionError, ValidityWarning
from .hydraulics import WATER, Drive, LoadModel, Waveform, build_network, simulate_transient

DIRECTIONS = ("distal", "proximal")
# clinically referenced compression levels, Pa
DEFAULT_THRESHOLDS = (4e3, 12e3)


@dataclass(frozen=True)
class LimbProfile:
    """Limb radius sampled at one position per band (proximal to distal)."""

    positions: tuple
    radii: tuple

    def __post_init__(self):
        pos = tuple(float(x) for x in self.positions)
        rad = tuple(float(r) for r in self.radii)
        if len(pos) != len(rad) or not pos:
            raise PreconditionError("positions and radii must be non-empty and of equal length")
        if any(r <= 0 for r in rad):
            raise DomainError("limb radii must be > 0")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise PreconditionError("positions must be strictly increasing")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "radii", rad)

    @property
    def segment_count(self):
        return len(self.radii)

    @classmethod
    def uniform(cls, n, radius, spacing=0.05):
        return cls(tuple(i * spacing for i in range(n)), (radius,) * n)


@dataclass(frozen=True)
class SegmentWave:
    """Pressure command of one band: oscillates between ``p_low`` and ``p_high``.

    The band is at ``p_high`` (minimum compression) at ``t = offset`` and at
    ``p_low`` (maximum compression) half a period later.
    """

    period: float
    offset: float
    p_low: float
    p_high: float
    shape: str = "sine"

    def waveform(self):
        mid = 0.5 * (self.p_low + self.p_high)
        amp = 0.5 * (self.p_high - self.p_low)
        if amp == 0:
            return Waveform("constant", mid)
        # both shapes reach their maximum a quarter period after the delay
        delay = self.offset - 0.25 * self.period
        return Waveform(self.shape, mid, amp, 1.0 / self.period, delay)

    def pressure(self, t):
        return self.waveform()(t)


@dataclass(frozen=True)
class PeristalsisSchedule:
    segments: tuple
    direction: str

    @property
    def period(self):
        return self.segments[0].period

    def pressures(self, t):
        """Commanded pressures, shape ``(len(t), n_segments)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.column_stack([s.pressure(t) for s in self.segments])


def schedule_peristalsis(n_segments, period, direction="distal", p_low=0.0, p_high=0.0, shape="sine"):
    """Equally phase-shifted pressure commands for ``n_segments`` bands.

    Segment ``i`` lags segment 0 by ``i * period / n`` for a distal wave and
    by ``((n - i) mod n) * period / n`` for a proximal wave.
    """
    if int(n_segments) != n_segments:
        raise DomainError("n_segments must be an integer")
    if n_segments < 2:
        raise PreconditionError("a travelling wave needs at least two segments")
    if not period > 0:
        raise DomainError("period must be > 0")
    if direction not in DIRECTIONS:
        raise DomainError(f"direction must be one of {DIRECTIONS}")
    if not 0 <= p_low <= p_high:
        raise DomainError("need 0 <= p_low <= p_high")
    if shape not in ("sine", "trapezoid"):
        raise DomainError("shape must be 'sine' or 'trapezoid'")
    n = int(n_segments)
    segs = []
    for i in range(n):
        k = i if direction == "distal" else (n - i) % n
        segs.append(SegmentWave(period, k * period / n, p_low, p_high, shape))
    return PeristalsisSchedule(tuple(segs), direction)


def single_band_schedule(period, p_low, p_high, shape="sine"):
    """Schedule for one band cycled on its own (no travelling wave)."""
    return PeristalsisSchedule((SegmentWave(period, 0.0, p_low, p_high, shape),), "distal")


def thin_band_segments(actuator: ActuatorSpec, limb: LimbProfile):
    """Indices of segments whose radius is below five sheet thicknesses."""
    limit = core.THIN_BAND_RATIO * actuator.effective_thickness
    return [i for i, r in enumerate(limb.radii) if r < limit]


def wrap_compression(actuator: ActuatorSpec, limb: LimbProfile, pressures):
    """Limb pressure under each band for the given fluid pressures.

    ``pressures`` has shape ``(..., n_segments)``. Bands whose external force
    would be negative go slack and apply no pressure.
    """
    p = np.asarray(pressures, dtype=float)
    if p.shape[-1] != limb.segment_count:
        raise PreconditionError("last axis of pressures must match the limb segments")
    p = np.maximum(p, 0.0)  # integration round-off
    F = core.external_force(actuator, actuator.pre_strain, p)
    F = np.maximum(F, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        out = core.compression_pressure(F, actuator, np.asarray(limb.radii))
    if thin_band_segments(actuator, limb):
        warnings.warn("band wrapped on a radius below five sheet thicknesses", ValidityWarning, stacklevel=2)
    return np.asarray(out, dtype=float)


def withdrawal_compression(actuator: ActuatorSpec, cylinder_radius, withdrawn_volume, volume_slope):
    """Limb pressure after drawing fluid out of a band that starts snug and slack.

    The band is wrapped at its reference length with zero external force.
    Withdrawing ``withdrawn_volume`` would shorten the free band by
    ``dV / (N * volume_slope)``; on the limb that shortening is blocked and
    becomes elastic strain ``ln(L / (L - dL))``, carried as tension by the
    tubes.
    """
    if withdrawn_volume < 0:
        raise DomainError("withdrawn_volume must be >= 0")
    a = actuator
    L = a.reference_length
    dL = withdrawn_volume / (a.tube_count * volume_slope)
    if dL >= L:
        raise DomainError("withdrawn volume exceeds the band length")
    d_eps = math.log(L / (L - dL))
    F = a.tube_count * a.tube.elastic_modulus * d_eps * a.tube_area
    return core.compression_pressure(F, a, cylinder_radius)


@dataclass
class GarmentResult:
    t: np.ndarray
    fluid_pressure: np.ndarray
    compression: np.ndarray
    thresholds: tuple
    warnings: list = field(default_factory=list)

    @property
    def peak(self):
        return self.compression.max(axis=0)

    def duty(self, threshold):
        """Fraction of samples per segment with compression above ``threshold``."""
        return (self.compression > threshold).mean(axis=0)

    def report(self):
        return {
            "segments": int(self.compression.shape[1]),
            "peak_compression_pa": [float(x) for x in self.peak],
            "duty_above": {f"{th:g}": [float(x) for x in self.duty(th)] for th in self.thresholds},
            "warnings": list(self.warnings),
        }

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.compression.shape[1]
        w.writerow(["t"] + [f"p_c_{i + 1}" for i in range(n)] + [f"p_{i + 1}" for i in range(n)])
        for k in range(len(self.t)):
            w.writerow([repr(float(self.t[k]))] + [repr(float(v)) for v in self.compression[k]]
                       + [repr(float(v)) for v in self.fluid_pressure[k]])
        return buf.getvalue()


def simulate_garment(schedule: PeristalsisSchedule, actuator: ActuatorSpec, limb: LimbProfile, duration,
                     dt=1e-3, fluid=WATER, thresholds=DEFAULT_THRESHOLDS, transient=True,
                     volume_slope=None, conduit_length=None, load_stiffness=300.0, sample_dt=None):
    """Compression map of a garment over ``duration``.

    With ``transient`` each band is driven through its own channel network
    by an ideal pressure source and the lagged channel pressures are used.
    Otherwise the commanded pressures are applied directly. ``sample_dt``
    thins the output grid (default: every step).
    """
    n = limb.segment_count
    if len(schedule.segments) != n:
        raise PreconditionError("schedule and limb have different segment counts")
    if not duration > 0:
        raise DomainError("duration must be > 0")
    stride = 1 if sample_dt is None else max(1, int(round(sample_dt / dt)))
    notes = []
    thin = thin_band_segments(actuator, limb)
    if thin:
        notes.append(f"thin-band assumption weak on segments {[i + 1 for i in thin]}")
    if transient:
        net = build_network(actuator, fluid, volume_slope=volume_slope, conduit_length=conduit_length)
        cols = []
        for seg in schedule.segments:
            wf = seg.waveform()
            p0 = wf(0.0)
            load = LoadModel.at_pressure(actuator, p0, load_stiffness)
            traj = simulate_transient(net, actuator, Drive("pressure", wf), dt, duration, fluid, load)
            cols.append(traj.pressure.mean(axis=1))
        t = traj.t
        p = np.column_stack(cols)
    else:
        t = np.arange(int(round(duration / dt)) + 1) * dt
        p = schedule.pressures(t)
    t, p = t[::stride], p[::stride]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        pc = wrap_compression(actuator, limb, p)
    return GarmentResult(t, p, pc, tuple(thresholds), notes)
