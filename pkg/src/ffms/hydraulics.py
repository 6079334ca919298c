"""Volume-length kinematics and transient simulation of tube networks.

Each channel (one tube in its conduit) is a lumped element. Its fluid volume
sets its length through the volume slope ``A_eff``; its pressure follows from
quasi-static force balance between the tube, the fluid and its share of an
external load. Channels are joined to the source through Poiseuille
resistances, either one after another (series) or from a common manifold
(parallel). The resulting ODE is integrated with fixed-step RK4.

In gas mode the state of each channel is its gas content, expressed as
volume at the reference (ambient) pressure, and channel volume is recovered
from the isothermal ideal-gas law at every evaluation.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import core
from .core import ActuatorSpec, TubeSpec
from .errors import DomainError, EstimationError, IntegrationError, PreconditionError

MODES = ("incompressible", "isothermal_gas")
TOPOLOGIES = ("series", "parallel")
DRIVE_KINDS = ("pressure", "displacement")
SHAPES = ("constant", "sine", "ramp", "trapezoid")

# volume-length slope fitted to the 3-channel displacement test (m^2 per channel)
FITTED_VOLUME_SLOPE = 1.765e-5
# 15 mm inner diameter syringe
DEFAULT_PISTON_AREA = math.pi * 7.5e-3 ** 2
DEFAULT_DT = 1e-3


@dataclass(frozen=True)
class FluidModel:
    """Working fluid. ``kinematic_viscosity`` times ``density`` is the dynamic viscosity."""

    kinematic_viscosity: float = 1e-6
    density: float = 1000.0
    mode: str = "incompressible"
    reference_pressure: float = 101325.0

    def __post_init__(self):
        if not self.kinematic_viscosity > 0 or not self.density > 0:
            raise DomainError("viscosity and density must be > 0")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}")
        if self.mode == "isothermal_gas" and not self.reference_pressure > 0:
            raise DomainError("gas mode requires reference_pressure > 0")

    @property
    def dynamic_viscosity(self):
        return self.kinematic_viscosity * self.density

    @property
    def is_gas(self):
        return self.mode == "isothermal_gas"


WATER = FluidModel(1e-6, 1000.0, "incompressible")
AIR = FluidModel(1.5e-5, 1.2, "isothermal_gas", 101325.0)


def poiseuille_resistance(fluid: FluidModel, inner_radius, length):
    """Laminar pipe resistance 8 * mu * L / (pi * r^4) in Pa s / m^3."""
    return 8.0 * fluid.dynamic_viscosity * length / (math.pi * inner_radius ** 4)


@dataclass(frozen=True)
class Segment:
    tube: TubeSpec
    conduit_length: float
    resistance: float = 0.0


@dataclass(frozen=True)
class ChannelNetwork:
    """Channels of one sheet and how fluid reaches them.

    ``volume_slope`` is the fluid volume per unit length change of one
    channel. ``dead_volume`` is supply volume that fills before any channel
    lengthens (in gas mode it is additional compressible volume at the
    source).
    """

    segments: tuple
    topology: str = "parallel"
    volume_slope: float = FITTED_VOLUME_SLOPE
    dead_volume: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if len(self.segments) < 1:
            raise DomainError("network needs at least one segment")
        if self.topology not in TOPOLOGIES:
            raise DomainError(f"topology must be one of {TOPOLOGIES}")
        if not self.volume_slope > 0:
            raise DomainError("volume_slope must be > 0")
        if not self.dead_volume >= 0:
            raise DomainError("dead_volume must be >= 0")
        if any(s.resistance < 0 for s in self.segments):
            raise DomainError("resistances must be >= 0")

    @property
    def channel_count(self):
        return len(self.segments)

    @property
    def resistances(self):
        return np.array([s.resistance for s in self.segments], dtype=float)

    @property
    def path_resistance(self):
        """Resistance from the port to the far end of the network.

        Series: sum of all segments. Parallel: one branch (the largest).
        """
        r = self.resistances
        return float(r.sum()) if self.topology == "series" else float(r.max())

    def with_resistances(self, values):
        values = np.broadcast_to(np.asarray(values, dtype=float), (self.channel_count,))
        segs = tuple(replace(s, resistance=float(v)) for s, v in zip(self.segments, values))
        return replace(self, segments=segs)


def volume_to_length(net: ChannelNetwork, dV):
    """Length change produced by injecting ``dV`` into the network.

    The dead volume fills first; the rest is shared by all channels.
    """
    dV = np.asarray(dV, dtype=float)
    if np.any(dV < 0):
        raise DomainError("volume change would drive the length below its reference")
    out = np.maximum(0.0, dV - net.dead_volume) / (net.channel_count * net.volume_slope)
    return float(out) if out.ndim == 0 else out


def length_to_volume(net: ChannelNetwork, dL):
    """Inverse of ``volume_to_length`` for positive length changes."""
    dL = np.asarray(dL, dtype=float)
    if np.any(dL < 0):
        raise DomainError("length change must be >= 0")
    out = net.dead_volume + net.channel_count * net.volume_slope * dL
    return float(out) if out.ndim == 0 else out


def build_network(actuator: ActuatorSpec, fluid: FluidModel, volume_slope=None,
                  dead_volume=0.0, conduit_length=None):
    """Assemble the channel network of an actuator.

    Each tube becomes one segment whose resistance is the Poiseuille
    resistance of its conduit length (the tube rest length by default).
    The topology follows ``actuator.routing``. ``volume_slope`` defaults to
    the bore area ``pi * r_i**2``.
    """
    tube = actuator.tube
    length = tube.rest_length if conduit_length is None else conduit_length
    r = poiseuille_resistance(fluid, tube.inner_radius, length)
    segs = tuple(Segment(tube, length, r) for _ in range(actuator.tube_count))
    slope = tube.fluid_area if volume_slope is None else volume_slope
    return ChannelNetwork(segs, actuator.routing, slope, dead_volume)


@dataclass(frozen=True)
class LoadModel:
    """Linear load the sheet pulls against.

    The force the load demands is ``preload - stiffness * (L - L_ref)`` where
    ``L_ref`` is the tube length at the pre-strain. A constant-force retractor
    has zero stiffness; an isometric fixture has a large stiffness.
    """

    preload: float = 0.0
    stiffness: float = 0.0

    def __post_init__(self):
        if self.stiffness < 0:
            raise DomainError("load stiffness must be >= 0")

    @classmethod
    def at_pressure(cls, actuator: ActuatorSpec, pressure, stiffness=0.0):
        """Load in equilibrium with the actuator at its pre-strain and ``pressure``."""
        return cls(core.external_force(actuator, actuator.pre_strain, pressure), stiffness)


@dataclass(frozen=True)
class Waveform:
    """Scalar drive signal.

    ``constant``: ``offset``. ``sine``: ``offset + amplitude * sin(2 pi f (t - delay))``.
    ``ramp``: rises linearly from ``offset`` by ``amplitude`` over ``1/f`` then holds.
    ``trapezoid``: periodic between ``offset - amplitude`` and ``offset + amplitude``
    with quarter-period ramps. With ``cycles`` set the value is held after
    ``cycles / f``.
    """

    shape: str = "constant"
    offset: float = 0.0
    amplitude: float = 0.0
    frequency: float = 1.0
    delay: float = 0.0
    cycles: Optional[float] = None

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise DomainError(f"shape must be one of {SHAPES}")
        if not self.frequency > 0:
            raise DomainError("frequency must be > 0")

    @property
    def period(self):
        return 1.0 / self.frequency

    def _clip(self, t):
        t = np.asarray(t, dtype=float)
        if self.cycles is None:
            return t, np.zeros_like(t, dtype=bool)
        end = self.delay + self.cycles / self.frequency
        return np.minimum(t, end), t >= end

    def _scalar(self, t, slope):
        if self.cycles is not None:
            end = self.delay + self.cycles / self.frequency
            if t >= end:
                if slope:
                    return 0.0
                t = end
        f = self.frequency
        ph = (t - self.delay) * f
        shape = self.shape
        if shape == "constant":
            return 0.0 if slope else self.offset
        if shape == "sine":
            if slope:
                return self.amplitude * 2 * math.pi * f * math.cos(2 * math.pi * ph)
            return self.offset + self.amplitude * math.sin(2 * math.pi * ph)
        if shape == "ramp":
            if slope:
                return self.amplitude * f if 0 <= ph < 1 else 0.0
            return self.offset + self.amplitude * min(max(ph, 0.0), 1.0)
        if slope:
            return self.amplitude * f * float(_trapezoid_unit_slope(ph))
        return self.offset + self.amplitude * float(_trapezoid_unit(ph))

    def __call__(self, t):
        if isinstance(t, (float, int)):
            return self._scalar(float(t), False)
        t, _ = self._clip(t)
        ph = (t - self.delay) * self.frequency
        if self.shape == "constant":
            v = np.full_like(t, self.offset, dtype=float)
        elif self.shape == "sine":
            v = self.offset + self.amplitude * np.sin(2 * np.pi * ph)
        elif self.shape == "ramp":
            v = self.offset + self.amplitude * np.clip(ph, 0.0, 1.0)
        else:
            v = self.offset + self.amplitude * _trapezoid_unit(ph)
        return float(v) if v.ndim == 0 else v

    def derivative(self, t):
        if isinstance(t, (float, int)):
            return self._scalar(float(t), True)
        tc, held = self._clip(t)
        ph = (tc - self.delay) * self.frequency
        f = self.frequency
        if self.shape == "constant":
            d = np.zeros_like(tc)
        elif self.shape == "sine":
            d = self.amplitude * 2 * np.pi * f * np.cos(2 * np.pi * ph)
        elif self.shape == "ramp":
            d = np.where((ph >= 0) & (ph < 1), self.amplitude * f, 0.0)
        else:
            d = self.amplitude * f * _trapezoid_unit_slope(ph)
        d = np.where(held, 0.0, d)
        return float(d) if d.ndim == 0 else d


def _trapezoid_unit(ph):
    # rise to +1, hold, fall to -1, hold, return to 0
    x = np.mod(ph, 1.0)
    return np.interp(x, [0.0, 0.125, 0.375, 0.625, 0.875, 1.0], [0.0, 1.0, 1.0, -1.0, -1.0, 0.0])


def _trapezoid_unit_slope(ph):
    x = np.mod(ph, 1.0)
    return np.select([x < 0.125, x < 0.375, x < 0.625, x < 0.875], [8.0, 0.0, -8.0, 0.0], 8.0)


@dataclass(frozen=True)
class Drive:
    """Fluid source at the network port.

    ``pressure``: ideal pressure source, ``waveform`` gives gauge pressure.
    ``displacement``: syringe, ``waveform`` gives the displaced volume (m^3,
    positive into the actuator). In gas mode the syringe holds
    ``syringe_volume`` of gas at t = 0.
    """

    kind: str
    waveform: Waveform
    piston_area: float = DEFAULT_PISTON_AREA
    syringe_volume: float = 10e-6

    def __post_init__(self):
        if self.kind not in DRIVE_KINDS:
            raise DomainError(f"drive kind must be one of {DRIVE_KINDS}")
        if not self.piston_area > 0 or not self.syringe_volume > 0:
            raise DomainError("piston_area and syringe_volume must be > 0")

    def piston_position(self, t):
        return np.asarray(self.waveform(t)) / self.piston_area


@dataclass
class Trajectory:
    """Uniformly sampled record of a run or of imported test data.

    Per-channel arrays have shape ``(samples, channels)``. ``volume`` is the
    change of channel fluid volume from the reference state. Optional series:
    ``drive`` (drive waveform value), ``port_pressure``, cumulative
    ``input_work`` and ``dissipated`` energy (J), cumulative ``source_volume``
    delivered through the port (m^3).
    """

    dt: float
    t: np.ndarray
    pressure: np.ndarray
    volume: np.ndarray
    length: np.ndarray
    force: np.ndarray
    drive: Optional[np.ndarray] = None
    port_pressure: Optional[np.ndarray] = None
    input_work: Optional[np.ndarray] = None
    dissipated: Optional[np.ndarray] = None
    source_volume: Optional[np.ndarray] = None
    drive_kind: str = ""

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("dt must be > 0")
        self.t = np.asarray(self.t, dtype=float)
        n = len(self.t)
        for name in ("pressure", "volume", "length", "force"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim == 1:
                a = a[:, None]
            if a.shape[0] != n:
                raise DomainError(f"{name} has {a.shape[0]} samples, expected {n}")
            setattr(self, name, a)
        shapes = {getattr(self, k).shape for k in ("pressure", "volume", "length", "force")}
        if len(shapes) != 1:
            raise DomainError("per-channel arrays must share a shape")
        for name in self._OPTIONAL:
            a = getattr(self, name)
            if a is not None:
                a = np.asarray(a, dtype=float)
                if a.shape != (n,):
                    raise DomainError(f"{name} must have shape ({n},)")
                setattr(self, name, a)

    @property
    def channel_count(self):
        return self.pressure.shape[1]

    @property
    def total_force(self):
        return self.force.sum(axis=1)

    @property
    def total_volume(self):
        return self.volume.sum(axis=1)

    @property
    def mean_length(self):
        return self.length.mean(axis=1)

    @property
    def source_pressure(self):
        """Port pressure when recorded, otherwise the mean channel pressure."""
        if self.port_pressure is not None:
            return self.port_pressure
        return self.pressure.mean(axis=1)

    def window(self, start, stop=None):
        """Sub-trajectory with ``start <= t <= stop`` (times in seconds)."""
        stop = self.t[-1] if stop is None else stop
        eps = 1e-9 * self.dt
        m = (self.t >= start - eps) & (self.t <= stop + eps)
        opt = {k: (None if getattr(self, k) is None else getattr(self, k)[m])
               for k in self._OPTIONAL}
        return Trajectory(self.dt, self.t[m], self.pressure[m], self.volume[m], self.length[m],
                          self.force[m], drive_kind=self.drive_kind, **opt)

    # CSV interface: t,p_<k>,V_<k>,L_<k>,F_<k> per channel, then optional extras
    _EXTRAS = (("drive", "drive"), ("p_port", "port_pressure"), ("V_src", "source_volume"),
               ("W_in", "input_work"), ("W_loss", "dissipated"))
    _OPTIONAL = ("drive", "port_pressure", "source_volume", "input_work", "dissipated")

    def csv_header(self):
        cols = ["t"]
        for k in range(1, self.channel_count + 1):
            cols += [f"p_{k}", f"V_{k}", f"L_{k}", f"F_{k}"]
        cols += [name for name, attr in self._EXTRAS if getattr(self, attr) is not None]
        return cols

    def to_csv(self, path_or_buf=None):
        """Write CSV (full float precision). Returns the text when no target is given."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.csv_header())
        extras = [getattr(self, attr) for _, attr in self._EXTRAS if getattr(self, attr) is not None]
        blocks = np.stack([self.pressure, self.volume, self.length, self.force], axis=2)
        blocks = blocks.reshape(len(self.t), -1)
        for i in range(len(self.t)):
            row = [self.t[i], *blocks[i], *(e[i] for e in extras)]
            w.writerow([repr(float(x)) for x in row])
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path_or_buf):
        """Read a trajectory written by ``to_csv`` or by test equipment using the same schema."""
        if hasattr(path_or_buf, "read"):
            text = path_or_buf.read()
        else:
            with open(path_or_buf) as fh:
                text = fh.read()
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise PreconditionError("empty trajectory CSV")
        header, data = rows[0], np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
        if header[0] != "t":
            raise PreconditionError("first column must be 't'")
        col = {name: i for i, name in enumerate(header)}
        n_ch = 0
        while f"p_{n_ch + 1}" in col:
            n_ch += 1
        if n_ch == 0:
            raise PreconditionError("no channel columns found")
        arrays = {}
        for q in ("p", "V", "L", "F"):
            try:
                arrays[q] = data[:, [col[f"{q}_{k}"] for k in range(1, n_ch + 1)]]
            except KeyError as exc:
                raise PreconditionError(f"missing column {exc.args[0]}") from None
        t = data[:, 0]
        if len(t) < 2:
            raise PreconditionError("need at least two samples")
        steps = np.diff(t)
        dt = float(np.mean(steps))
        if np.any(np.abs(steps - dt) > 1e-6 * max(dt, 1e-12) + 1e-12):
            raise PreconditionError("time grid is not uniform")
        extras = {attr: data[:, col[name]] for name, attr in cls._EXTRAS if name in col}
        return cls(dt, t, arrays["p"], arrays["V"], arrays["L"], arrays["F"], **extras)


class _Model:
    """Right-hand side and algebraic relations of one network + actuator + load + fluid."""

    def __init__(self, net, actuator, fluid, load, drive):
        if net.channel_count != actuator.tube_count:
            raise DomainError("network segment count must equal tube_count")
        self.net, self.act, self.fluid, self.load, self.drive = net, actuator, fluid, load, drive
        self.n = net.channel_count
        self.R = net.resistances
        self.gas = fluid.is_gas
        self.P0 = fluid.reference_pressure
        tube = actuator.tube
        self.L0 = tube.rest_length
        self.Lref = actuator.reference_length
        self.EA = tube.elastic_modulus * actuator.tube_area
        self.Af = actuator.fluid_area
        self.Aeff = net.volume_slope
        self.k_share = load.stiffness / self.n
        self.pre_share = load.preload / self.n
        self.base_volume = tube.fluid_area * self.Lref
        series = net.topology == "series"
        self.series = series and self.n > 1
        if self.series and np.any(self.R[1:] == 0):
            raise DomainError("series links between channels need positive resistance")
        if drive.kind == "pressure" and np.any(self.R[:1] == 0 if self.series else self.R == 0):
            raise DomainError("a pressure-source drive needs positive path resistance")
        if not self.series and np.any(self.R == 0) and not np.all(self.R == 0):
            raise DomainError("parallel branches must be all resistive or all ideal")
        self.ideal_split = not self.series and np.all(self.R == 0)
        with np.errstate(divide="ignore"):
            self.G = 1.0 / self.R
        self.G_sum = float(self.G.sum()) if not self.ideal_split else 0.0
        self._v_guess = np.zeros(self.n)

    # channel mechanics -------------------------------------------------
    def lengths(self, V):
        return self.Lref + V / self.Aeff

    def channel_pressure(self, V):
        L = self.lengths(V)
        load = self.pre_share - self.k_share * (L - self.Lref)
        return (self.EA * np.log(L / self.L0) - load) / self.Af

    def channel_force(self, V):
        L = self.lengths(V)
        return self.pre_share - self.k_share * (L - self.Lref)

    def dpdV(self, V):
        L = self.lengths(V)
        return (self.EA / L + self.k_share) / (self.Af * self.Aeff)

    def volume_at_pressure(self, p):
        # p(V) is strictly increasing; bracket on lengths between ~0 and far out
        lo = (1e-9 * self.L0 - self.Lref) * self.Aeff
        hi = self.Aeff * self.Lref
        while self.channel_pressure(np.array([hi]))[0] < p:
            hi *= 2.0
        return brentq(lambda v: self.channel_pressure(np.array([v]))[0] - p, lo, hi, xtol=1e-22, rtol=1e-15)

    # gas ----------------------------------------------------------------
    def gas_content(self, V):
        return (self.channel_pressure(V) + self.P0) * (self.base_volume + V) / self.P0

    def volume_from_gas(self, content):
        V = self._v_guess.copy()
        target = content * self.P0
        for _ in range(50):
            p = self.channel_pressure(V)
            g = (p + self.P0) * (self.base_volume + V) - target
            dg = self.dpdV(V) * (self.base_volume + V) + (p + self.P0)
            step = g / dg
            V = V - step
            V = np.maximum(V, (1e-6 * self.L0 - self.Lref) * self.Aeff)
            if np.all(np.abs(step) <= 1e-14 * (self.base_volume + np.abs(V))):
                break
        self._v_guess = V
        return V

    def source_gas_volume(self, t):
        return self.drive.syringe_volume + self.net.dead_volume - self.drive.waveform(t)

    # state layout: [channel states (n), source gas (1, gas displacement only), V_src, W_in, W_loss]
    def unpack(self, x, t):
        n = self.n
        if self.gas:
            V = self.volume_from_gas(x[:n])
        else:
            V = x[:n]
        p = self.channel_pressure(V)
        ps = None
        if self.drive.kind == "pressure":
            ps = float(self.drive.waveform(t))
        elif self.gas:
            ps = self.P0 * x[n] / self.source_gas_volume(t) - self.P0
        return V, p, ps

    def flows(self, t, V, p, ps):
        """Volumetric link flows q (q[0] is the port flow), port pressure, dissipated power."""
        n, R = self.n, self.R
        q_src = None
        if self.drive.kind == "displacement" and not self.gas:
            q_src = float(self.drive.waveform.derivative(t))
        if self.series:
            q = np.empty(n)
            if q_src is not None:
                q[0] = q_src
                port = p[0] + R[0] * q_src
            else:
                q[0] = (ps - p[0]) * self.G[0]
                port = ps
            q[1:] = (p[:-1] - p[1:]) * self.G[1:]
            inflow = q.copy()
            inflow[:-1] -= q[1:]
            upstream = np.empty(n)
            upstream[0] = port
            upstream[1:] = p[:-1]
            loss = float(q @ (upstream - p))
            return q, inflow, port, loss
        if q_src is not None:
            if self.ideal_split:
                q = np.full(n, q_src / n)
                port = float(p.mean())
            else:
                port = (q_src + float(p @ self.G)) / self.G_sum
                q = (port - p) * self.G
        else:
            port = ps
            q = (ps - p) * self.G
        loss = float(q @ (port - p))
        return q, q, port, loss

    def rhs(self, t, x):
        n = self.n
        V, p, ps = self.unpack(x, t)
        q, inflow, port, loss = self.flows(t, V, p, ps)
        dx = np.empty_like(x)
        if self.gas:
            if self.series:
                up = np.concatenate(([port], p[:-1]))
            else:
                up = np.full(n, port)
            # amount flux through each link, evaluated at the mean absolute link pressure
            flux = q * (0.5 * (up + p) + self.P0) / self.P0
            if self.series:
                dx[:n] = flux - np.append(flux[1:], 0.0)
                port_flux = flux[0]
            else:
                dx[:n] = flux
                port_flux = flux.sum()
            if self.drive.kind == "displacement":
                dx[n] = -port_flux
                q_port = float(self.drive.waveform.derivative(t))
                power_in = port * q_port
            else:
                q_port = port_flux * self.P0 / (port + self.P0)
                # isothermal flow exergy of gas delivered at the port
                power_in = self.P0 * port_flux * math.log((port + self.P0) / self.P0)
        else:
            dx[:n] = inflow
            q_port = q[0] if self.series else float(q.sum())
            power_in = port * q_port
        dx[-3] = q_port
        dx[-2] = power_in
        dx[-1] = loss
        return dx

    def liquid_rhs(self):
        """Allocation-light right-hand side for the incompressible case.

        Same equations as ``rhs``; used by the integrator because the
        per-call overhead of small numpy operations dominates run time.
        """
        n, G, series = self.n, self.G, self.series
        Lref, inv_aeff, inv_l0 = self.Lref, 1.0 / self.Aeff, 1.0 / self.L0
        EA, pre, k, inv_af = self.EA, self.pre_share, self.k_share, 1.0 / self.Af
        wf = self.drive.waveform
        displacement = self.drive.kind == "displacement"
        if displacement and (series or not self.ideal_split):
            R0 = self.R[0]
        log = np.log
        up = np.empty(n)
        dx = np.empty(n + 3)

        def f(t, x):
            L = Lref + x[:n] * inv_aeff
            p = (EA * log(L * inv_l0) - pre + k * (L - Lref)) * inv_af
            if series:
                if displacement:
                    q0 = wf.derivative(t)
                    port = p[0] + R0 * q0
                else:
                    port = wf(t)
                up[0] = port
                up[1:] = p[:-1]
                drop = up - p
                q = drop * G
                if displacement:
                    q[0] = q0
                dx[:n] = q
                dx[:n - 1] -= q[1:]
                q_port = q[0]
            else:
                if displacement:
                    q_port = wf.derivative(t)
                    if self.ideal_split:
                        port = p.mean()
                        q = np.full(n, q_port / n)
                    else:
                        port = (q_port + p @ G) / self.G_sum
                        q = (port - p) * G
                else:
                    port = wf(t)
                    q = (port - p) * G
                    q_port = q.sum()
                drop = port - p
                dx[:n] = q
            dx[n] = q_port
            dx[n + 1] = port * q_port
            dx[n + 2] = q @ drop
            return dx.copy()

        return f

    def port_pressures(self, t, V):
        """Port pressure along a whole trajectory (incompressible or pressure drive)."""
        if self.drive.kind == "pressure":
            return np.asarray(self.drive.waveform(t), dtype=float)
        p = self.channel_pressure(V)
        q_src = np.asarray(self.drive.waveform.derivative(t), dtype=float)
        if self.series:
            return p[:, 0] + self.R[0] * q_src
        if self.ideal_split:
            return p.mean(axis=1)
        return (q_src + p @ self.G) / self.G_sum

    def initial_state(self, t0=0.0):
        n = self.n
        if self.drive.kind == "pressure":
            v = self.volume_at_pressure(float(self.drive.waveform(t0)))
            V = np.full(n, v)
        else:
            V = np.zeros(n)
        extra = 1 if (self.gas and self.drive.kind == "displacement") else 0
        x = np.zeros(n + extra + 3)
        if self.gas:
            x[:n] = self.gas_content(V)
            self._v_guess = V.copy()
            if extra:
                p_init = self.channel_pressure(V)[0]
                x[n] = (p_init + self.P0) * self.source_gas_volume(t0) / self.P0
        else:
            x[:n] = V
        return x


def _rk4_step(f, t, x, dt):
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate_transient(net: ChannelNetwork, actuator: ActuatorSpec, drive: Drive, dt=DEFAULT_DT,
                       T=1.0, fluid: FluidModel = WATER, load: Optional[LoadModel] = None):
    """Integrate the network response to ``drive`` over ``[0, T]``.

    The run starts in quasi-static equilibrium: channels at the reference
    length for a displacement drive, at the source pressure for a pressure
    drive. ``load`` defaults to a constant load in equilibrium with the
    actuator at zero pressure.

    Raises
    ------
    IntegrationError
        When the state diverges (non-finite values or a channel length
        leaving its physical range). The message names ``dt``.
    """
    if not dt > 0 or not T > 0:
        raise DomainError("dt and T must be > 0")
    if dt > T / 100.0 * (1 + 1e-12):
        raise DomainError(f"dt={dt:g} s exceeds T/100; refine the step")
    if load is None:
        load = LoadModel.at_pressure(actuator, 0.0)
    model = _Model(net, actuator, fluid, load, drive)
    n_steps = int(round(T / dt))
    n = model.n
    x = model.initial_state(0.0)
    xs = np.empty((n_steps + 1, x.size))
    Vs = np.empty((n_steps + 1, n))
    ports = np.empty(n_steps + 1)
    xs[0] = x
    rhs = model.rhs if model.gas else model.liquid_rhs()
    # channel volumes outside these bounds mean a length <= 0 or > 1000 L_ref
    v_lo = -model.Lref * model.Aeff
    v_hi = (1e3 - 1.0) * model.Lref * model.Aeff
    for i in range(n_steps):
        t = i * dt
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            x = _rk4_step(rhs, t, x, dt)
        xs[i + 1] = x
        if not math.isfinite(x.sum()):
            raise IntegrationError(f"state became non-finite at t={t + dt:.6g} s with dt={dt:g} s", dt)
        V = model.volume_from_gas(x[:n]) if model.gas else x[:n]
        if V.min() <= v_lo or V.max() > v_hi:
            raise IntegrationError(f"state diverged at t={t + dt:.6g} s with dt={dt:g} s; reduce dt", dt)
    t_grid = np.arange(n_steps + 1) * dt
    if model.gas:
        for i in range(n_steps + 1):
            V, p, ps = model.unpack(xs[i], t_grid[i])
            _, _, port, _ = model.flows(t_grid[i], V, p, ps)
            Vs[i] = V
            ports[i] = port
    else:
        Vs[:] = xs[:, :n]
        ports[:] = model.port_pressures(t_grid, Vs)
    pressure = model.channel_pressure(Vs)
    force = model.channel_force(Vs)
    length = model.lengths(Vs)
    return Trajectory(
        dt, t_grid, pressure, Vs, length, force,
        drive=np.asarray(drive.waveform(t_grid), dtype=float),
        port_pressure=ports, input_work=xs[:, -2], dissipated=xs[:, -1],
        source_volume=xs[:, -3], drive_kind=drive.kind,
    )


def quasi_static_state(net: ChannelNetwork, actuator: ActuatorSpec, drive_value, kind="displacement",
                       fluid=WATER, load=None, syringe_volume=10e-6):
    """Equilibrium (no flow) state for a held drive value.

    Returns a dict with per-channel ``pressure``, ``volume``, ``length``,
    ``force`` (all channels are identical at rest).
    """
    if load is None:
        load = LoadModel.at_pressure(actuator, 0.0)
    drive = Drive(kind, Waveform("constant", drive_value), syringe_volume=syringe_volume)
    m = _Model(net, actuator, fluid, load, drive)
    n = m.n
    if kind == "pressure":
        v = m.volume_at_pressure(drive_value)
    elif not fluid.is_gas:
        v = drive_value / n
    else:
        # gas inventory with the piston at zero displacement, channels at rest
        p_rest = m.channel_pressure(np.zeros(1))[0]
        vs0 = syringe_volume + net.dead_volume
        total = n * m.gas_content(np.zeros(1))[0] + (p_rest + m.P0) * vs0 / m.P0
        vs = vs0 - drive_value
        if vs <= 0:
            raise DomainError("displacement exceeds the syringe gas volume")

        def excess(v):
            p = m.channel_pressure(np.array([v]))[0]
            return n * m.gas_content(np.array([v]))[0] + (p + m.P0) * vs / m.P0 - total

        # physical branch only: absolute pressure and gas volume both positive
        lo = max(m.volume_at_pressure(-m.P0 * (1 - 1e-9)), -m.base_volume * (1 - 1e-9))
        hi = m.Aeff * m.Lref
        while excess(hi) < 0:
            hi *= 2
        v = brentq(excess, lo, hi, xtol=1e-22, rtol=1e-15)
    V = np.full(n, v)
    return {
        "pressure": m.channel_pressure(V),
        "volume": V,
        "length": m.lengths(V),
        "force": m.channel_force(V),
    }


def dominant_frequency(signal, dt):
    """Frequency of the strongest non-DC spectral line (parabolic peak refinement)."""
    x = np.asarray(signal, dtype=float)
    x = x - x.mean()
    spec = np.abs(np.fft.rfft(x * np.hanning(len(x))))
    if len(spec) < 3 or not np.any(spec[1:] > 0):
        raise EstimationError("signal has no periodic content")
    k = int(np.argmax(spec[1:]) + 1)
    if 1 <= k < len(spec) - 1:
        a, b, c = spec[k - 1], spec[k], spec[k + 1]
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
    else:
        shift = 0.0
    return (k + shift) / (len(x) * dt), spec


def estimate_latency(traj: Trajectory, reference="drive", response="force", min_periods=2.0):
    """Delay of the response behind a periodic reference signal.

    The period comes from the reference spectrum; the first period is
    discarded as transient. The lag maximizing the absolute normalized
    cross-correlation is searched in ``[0, period / 2)``, so anti-phase
    responses (force falls as pressure rises) are handled, and is refined
    to sub-sample resolution by a parabolic fit.

    Parameters
    ----------
    reference : {"drive", "pressure"} or array
        ``"pressure"`` uses the port pressure.
    response : {"force", "volume", "length", "pressure"} or array
    """
    x = _pick(traj, reference)
    y = _pick(traj, response)
    dt = traj.dt
    if np.ptp(x) == 0:
        raise EstimationError("reference signal is constant")
    f0, spec = dominant_frequency(x, dt)
    power = spec[1:] ** 2
    k = int(np.argmax(power))
    if power[max(k - 2, 0):k + 3].sum() < 0.5 * power.sum():
        raise EstimationError("reference signal is not periodic")
    period = 1.0 / f0
    duration = traj.t[-1] - traj.t[0]
    if duration < min_periods * period * (1 - 1e-6):
        raise EstimationError(f"need {min_periods:g} periods, have {duration / period:.3g}")
    i0 = int(round(period / dt))
    max_lag = max(int(period / 2.0 / dt), 1)
    xs = x[i0:]
    ys = y[i0:]
    m = len(xs) - max_lag
    if m < 2:
        raise EstimationError("not enough samples after the transient period")
    a = xs[:m] - xs[:m].mean()
    na = np.linalg.norm(a)
    c = np.empty(max_lag)
    for lag in range(max_lag):
        b = ys[lag:lag + m]
        b = b - b.mean()
        nb = np.linalg.norm(b)
        c[lag] = 0.0 if nb == 0 or na == 0 else float(a @ b) / (na * nb)
    mag = np.abs(c)
    j = int(np.argmax(mag))
    shift = 0.0
    if 0 < j < max_lag - 1:
        u, v, w = mag[j - 1], mag[j], mag[j + 1]
        denom = u - 2 * v + w
        if denom != 0:
            shift = 0.5 * (u - w) / denom
    return max(0.0, (j + shift) * dt)


def _pick(traj, which):
    if not isinstance(which, str):
        return np.asarray(which, dtype=float)
    if which == "drive":
        if traj.drive is None:
            raise EstimationError("trajectory carries no drive signal")
        return traj.drive
    if which == "pressure":
        return traj.source_pressure
    if which == "force":
        return traj.total_force
    if which == "volume":
        return traj.total_volume
    if which == "length":
        return traj.mean_length
    raise DomainError(f"unknown signal {which!r}")
