"""Parameter fits and cycle energetics from test data."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ComputationError, DomainError, FitError, PreconditionError
from .hydraulics import Trajectory

G = 9.80665
KINDS = ("tensile", "volume_displacement", "work_cycle")
PLANES = ("pV", "pF", "VF")


@dataclass
class TestSeries:
    """Ordered (x, y) samples of one test.

    tensile: x = true strain, y = stress (Pa).
    volume_displacement: x = injected volume (m^3), y = length change (m).
    work_cycle: x = volume (m^3), y = pressure (Pa).
    """

    __test__ = False  # not a pytest class

    kind: str
    x: np.ndarray
    y: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"kind must be one of {KINDS}")
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise PreconditionError("x and y must be 1-d arrays of equal length")
        # an affine volume fit is determined by two points
        minimum = 2 if self.kind == "volume_displacement" else 3
        if len(self.x) < minimum:
            raise PreconditionError(f"{self.kind} series needs at least {minimum} samples")
        if self.kind != "work_cycle" and np.any(np.diff(self.x) <= 0):
            raise PreconditionError("x must be strictly increasing")

    @classmethod
    def from_csv(cls, path_or_buf, kind=None, metadata=None, x_col=None, y_col=None):
        """Read ``x,y`` samples or a trajectory CSV.

        An ``x,y`` file may carry its kind in a ``# kind=tensile`` header line.
        A trajectory file (header starting with ``t``) needs ``kind``; its
        columns default to delivered volume and port pressure for
        ``work_cycle`` and to delivered volume and the change of ``L_1``
        for ``volume_displacement``.
        """
        text = path_or_buf.read() if hasattr(path_or_buf, "read") else open(path_or_buf).read()
        lines = text.splitlines()
        if lines and lines[0].startswith("#"):
            for token in lines[0][1:].split():
                key, _, value = token.partition("=")
                if key == "kind" and kind is None:
                    kind = value
            lines = lines[1:]
        rows = [r for r in csv.reader(lines) if r]
        if not rows:
            raise PreconditionError("CSV is empty")
        header = [h.strip() for h in rows[0]]
        if kind is None:
            raise PreconditionError("series kind not given")
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        if header[:2] == ["x", "y"] and x_col is None and y_col is None:
            return cls(kind, data[:, 0], data[:, 1], dict(metadata or {}))
        if header[0] != "t":
            raise PreconditionError("CSV header must start with x,y or be a trajectory (t,...)")
        defaults = {"work_cycle": ("V_src", "p_port"), "volume_displacement": ("V_src", "L_1")}
        if kind not in defaults and (x_col is None or y_col is None):
            raise PreconditionError(f"name x_col and y_col to read a {kind} series from a trajectory")
        dx, dy = defaults.get(kind, (None, None))
        x_col, y_col = x_col or dx, y_col or dy
        for name in (x_col, y_col):
            if name not in header:
                raise PreconditionError(f"trajectory CSV has no column {name!r}")
        x = data[:, header.index(x_col)]
        y = data[:, header.index(y_col)]
        if kind == "volume_displacement":
            x, y = x - x[0], y - y[0]
        return cls(kind, x, y, dict(metadata or {}))

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# kind={self.kind}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y"])
        for a, b in zip(self.x, self.y):
            w.writerow([repr(float(a)), repr(float(b))])
        return buf.getvalue()


def tensile_series(lengths, forces, rest_length, area, metadata=None):
    """Tensile series from raw gauge lengths and forces (nominal stress, true strain)."""
    lengths = np.asarray(lengths, dtype=float)
    return TestSeries("tensile", np.log(lengths / rest_length), np.asarray(forces) / area, metadata or {})


@dataclass(frozen=True)
class ModulusFit:
    modulus: float
    intercept: float
    residual_rms: float
    n_points: int


@dataclass(frozen=True)
class VolumeFit:
    volume_slope: float
    dead_volume: float
    r_squared: float


def _affine_fit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), resid


def fit_modulus(series: TestSeries, strain_window=(0.0, 1.0)):
    """Least-squares slope of stress against true strain inside ``strain_window``."""
    if series.kind != "tensile":
        raise PreconditionError("fit_modulus needs a tensile series")
    lo, hi = strain_window
    if hi <= lo:
        raise FitError("strain window is empty")
    m = (series.x >= lo) & (series.x <= hi)
    if m.sum() < 3:
        raise FitError(f"only {int(m.sum())} samples inside the strain window, need 3")
    slope, intercept, resid = _affine_fit(series.x[m], series.y[m])
    return ModulusFit(slope, intercept, float(np.sqrt(np.mean(resid ** 2))), int(m.sum()))


def fit_volume_slope(series: TestSeries, channel_count):
    """Fit ``dV = N * A_eff * dL + dead_volume``.

    Returns the per-channel volume slope, the dead volume and R^2 of the
    regression of volume on length.
    """
    if series.kind != "volume_displacement":
        raise PreconditionError("fit_volume_slope needs a volume_displacement series")
    if channel_count < 1:
        raise DomainError("channel_count must be >= 1")
    dV, dL = series.x, series.y
    if np.any(np.diff(dL) < 0):
        raise PreconditionError("length must not decrease as volume is injected")
    if np.ptp(dL) == 0:
        raise FitError("length does not change; slope undefined")
    slope, intercept, resid = _affine_fit(dL, dV)
    if slope <= 0:
        raise FitError("volume does not increase with length")
    ss_tot = float(np.sum((dV - dV.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot
    # two-point fits leave only rounding in the intercept
    if abs(intercept) < 1e-12 * np.max(np.abs(dV)):
        intercept = 0.0
    return VolumeFit(slope / channel_count, intercept, r2)


@dataclass(frozen=True)
class CycleWork:
    W_plus: float
    W_minus: float
    W_in: float
    U_g: float


def _pv(traj):
    p = traj.source_pressure
    V = traj.source_volume if traj.source_volume is not None else traj.total_volume
    return np.asarray(p, dtype=float), np.asarray(V, dtype=float)


def _closure_gap(*signals, tol=0.01):
    gaps = {}
    for name, s in signals:
        span = np.ptp(s)
        gap = abs(s[-1] - s[0])
        if gap > tol * span + 1e-300 and span > 0:
            gaps[name] = gap / span
    return gaps


def cycle_work_pv(p, V, load_mass=0.0, lift_height=0.0, closure_tol=0.01):
    """Cycle work from sampled port pressure and delivered volume.

    ``W_plus`` integrates ``p dV`` over steps where volume rises and
    ``W_minus`` over steps where it falls (negative when the source takes
    energy back). Trapezoid rule on the sample grid.
    """
    p = np.asarray(p, dtype=float)
    V = np.asarray(V, dtype=float)
    gaps = _closure_gap(("p", p), ("V", V), tol=closure_tol)
    if gaps:
        detail = ", ".join(f"{k} off by {v:.3%} of its range" for k, v in gaps.items())
        raise PreconditionError(f"cycle is not closed: {detail}")
    dV = np.diff(V)
    pm = 0.5 * (p[1:] + p[:-1])
    w = pm * dV
    W_plus = float(np.sum(w[dV > 0]))
    W_minus = float(np.sum(w[dV < 0]))
    return CycleWork(W_plus, W_minus, W_plus + W_minus, load_mass * G * lift_height)


def cycle_work(traj: Trajectory, load_mass=0.0, lift_height=0.0, closure_tol=0.01):
    p, V = _pv(traj)
    return cycle_work_pv(p, V, load_mass, lift_height, closure_tol)


@dataclass(frozen=True)
class Efficiency:
    value: float
    formula: str
    erroneous: bool

    def __float__(self):
        return self.value


def efficiency(work: CycleWork, formula="corrected"):
    """Energy efficiency of one working cycle.

    ``corrected``: ``U_g / W_in``. ``legacy``: ``(U_g + |W_minus|) / W_plus``,
    which counts energy handed back to the source as output; it can be driven
    toward 1 without doing any useful work and is always marked erroneous.
    """
    if formula == "corrected":
        if not work.W_in > 0:
            raise ComputationError("corrected efficiency needs W_in > 0")
        return Efficiency(work.U_g / work.W_in, formula, False)
    if formula == "legacy":
        if not work.W_plus > 0:
            raise ComputationError("legacy efficiency needs W_plus > 0")
        return Efficiency((work.U_g + abs(work.W_minus)) / work.W_plus, formula, True)
    raise DomainError("formula must be 'corrected' or 'legacy'")


def loop_area(x, y):
    """Signed area ``closed-integral y dx`` of a polygon (closing edge implied).

    Positive for clockwise traversal in the (x, y) plane, so a pressure-volume
    loop that fills at high pressure and empties at low pressure is positive.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    return float(0.5 * np.sum((y + yn) * (xn - x)))


def hysteresis_area(traj: Trajectory, plane="pV", closure_tol=0.01):
    """Signed loop area of a closed trajectory in one state plane.

    pV: volume (x) against port pressure (y), in J, equal to the cycle input
    work. pF: pressure (x) against force (y), in N Pa. VF: volume against
    force, in N m^3.
    """
    p, V = _pv(traj)
    F = traj.total_force
    pairs = {"pV": (V, p), "pF": (p, F), "VF": (V, F)}
    if plane not in pairs:
        raise DomainError(f"plane must be one of {PLANES}")
    x, y = pairs[plane]
    gaps = _closure_gap(("x", x), ("y", y), tol=closure_tol)
    if gaps:
        raise PreconditionError(f"loop is not closed: {gaps}")
    return loop_area(x, y)


def displacement_drift(peaks):
    """Fractional loss of peak displacement from the first to the last cycle."""
    peaks = np.asarray(peaks, dtype=float)
    if len(peaks) < 2:
        raise PreconditionError("need at least two cycles")
    if peaks[0] == 0:
        raise DomainError("first peak displacement is zero")
    return float((peaks[0] - peaks[-1]) / peaks[0])


def reference_cycle(r_corrected, r_legacy, load_mass=0.1, lift_height=5e-3,
                    stroke_volume=1e-7, samples_per_phase=50, dt=0.01):
    """Synthetic closed cycle with prescribed corrected and legacy efficiencies.

    The cycle fills ``stroke_volume`` at constant pressure, drops pressure at
    constant volume, withdraws at the lower pressure and recovers pressure at
    zero volume. With ``U = m g h`` the fill and withdrawal pressures follow
    from ``U / (W+ - |W-|) = r_corrected`` and ``(U + |W-|) / W+ = r_legacy``.
    These cycles are constructed, not measured.
    """
    U = load_mass * G * lift_height
    if not 0 < r_corrected < r_legacy < 1 + 1 / r_corrected:
        raise DomainError("need 0 < r_corrected < r_legacy")
    w_plus = U * (1.0 / r_corrected - 1.0) / (1.0 - r_legacy)
    w_minus = r_legacy * w_plus - U
    if w_plus <= 0 or w_minus <= 0:
        raise DomainError("efficiencies give a non-physical cycle")
    p_fill = w_plus / stroke_volume
    p_draw = w_minus / stroke_volume
    n = samples_per_phase
    up = np.linspace(0.0, 1.0, n, endpoint=False)
    V = np.concatenate([up, np.ones(n), 1.0 - up, np.zeros(n), [0.0]]) * stroke_volume
    p = np.concatenate([np.full(n, p_fill), p_fill + (p_draw - p_fill) * up,
                        np.full(n, p_draw), p_draw + (p_fill - p_draw) * up, [p_fill]])
    t = np.arange(len(V)) * dt
    L = lift_height * (1.0 - V / stroke_volume)
    F = np.full(len(V), load_mass * G)
    traj = Trajectory(dt, t, p, V, L, F, port_pressure=p, source_volume=V, drive_kind="reference")
    return traj, {"load_mass": load_mass, "lift_height": lift_height, "synthetic": True}


# (corrected, legacy) efficiency pairs used to build the bundled reference cycles.
# The pneumatic legacy value is not published; it follows from reusing the
# hydraulic recovered-work fraction.
HYDRAULIC_REFERENCE = (0.46, 0.83)
_RECOVERY = (HYDRAULIC_REFERENCE[1] * (1 / HYDRAULIC_REFERENCE[0] - 1) / (1 - HYDRAULIC_REFERENCE[1])
             - 1) / ((1 / HYDRAULIC_REFERENCE[0] - 1) / (1 - HYDRAULIC_REFERENCE[1]))
PNEUMATIC_REFERENCE = (0.25, _RECOVERY + (1 - _RECOVERY) * 0.25)


def hydraulic_reference_cycle():
    return reference_cycle(*HYDRAULIC_REFERENCE)


def pneumatic_reference_cycle():
    return reference_cycle(*PNEUMATIC_REFERENCE)
