"""Quasi-static force model of a fluidic fabric muscle sheet.

A sheet holds ``N`` elastic tubes side by side. Stretching the tubes stores
elastic force; fluid pressure inside the tubes pushes back along the tube
axis. With fabric and dissipative forces neglected the external (contraction)
force is

    F_ext = N * (E * eps * A_tube - p * A_fluid)

All functions are pure and accept numpy arrays for strain and pressure.
Quantities are SI and pressures are gauge.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .design_rules import FabricAssembly
from .errors import DomainError, ValidityWarning

ROUTINGS = ("series", "parallel")

# strain range over which the tube modulus was fitted
VALID_STRAIN = (0.0, 1.0)
MIN_STRAIN = -0.2
# wrap radius below this multiple of the sheet thickness breaks the thin-band assumption
THIN_BAND_RATIO = 5.0


@dataclass(frozen=True)
class TubeSpec:
    """Geometry and material of one elastic tube."""

    inner_radius: float
    outer_radius: float
    rest_length: float
    elastic_modulus: float

    def __post_init__(self):
        if not 0 < self.inner_radius < self.outer_radius:
            raise DomainError("need 0 < inner_radius < outer_radius")
        if not self.rest_length > 0:
            raise DomainError("rest_length must be > 0")
        if not self.elastic_modulus > 0:
            raise DomainError("elastic_modulus must be > 0")

    @property
    def tube_area(self):
        """Wall cross-section, pi * (r_o**2 - r_i**2)."""
        return math.pi * (self.outer_radius ** 2 - self.inner_radius ** 2)

    @property
    def fluid_area(self):
        """Bore cross-section, pi * r_i**2."""
        return math.pi * self.inner_radius ** 2

    def scaled(self, factor):
        """Return the tube with every length multiplied by ``factor``."""
        return replace(
            self,
            inner_radius=self.inner_radius * factor,
            outer_radius=self.outer_radius * factor,
            rest_length=self.rest_length * factor,
        )


@dataclass(frozen=True)
class ActuatorSpec:
    """N tubes in a fabric assembly; the unit of simulation and design.

    ``fluid_area_override`` and ``tube_area_override`` replace the areas
    derived from the tube radii. They exist so that published parameter sets
    whose quoted areas do not match the quoted radii can be reproduced.
    """

    tube: TubeSpec
    tube_count: int = 1
    pre_strain: float = 0.0
    assembly: FabricAssembly = field(default_factory=FabricAssembly)
    routing: str = "parallel"
    effective_thickness: float = 4.7e-3
    sheet_cross_section: float = 1.184e-4
    friction_coefficient: float = 0.0
    fluid_area_override: Optional[float] = None
    tube_area_override: Optional[float] = None

    def __post_init__(self):
        if int(self.tube_count) != self.tube_count or self.tube_count < 1:
            raise DomainError("tube_count must be an integer >= 1")
        if not self.pre_strain >= 0:
            raise DomainError("pre_strain must be >= 0")
        if self.routing not in ROUTINGS:
            raise DomainError(f"routing must be one of {ROUTINGS}")
        if not self.effective_thickness > 0:
            raise DomainError("effective_thickness must be > 0")
        if not self.sheet_cross_section > 0:
            raise DomainError("sheet_cross_section must be > 0")
        if not self.friction_coefficient >= 0:
            raise DomainError("friction_coefficient must be >= 0")
        for name in ("fluid_area_override", "tube_area_override"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise DomainError(f"{name} must be > 0 when given")

    @property
    def tube_area(self):
        if self.tube_area_override is not None:
            return self.tube_area_override
        return self.tube.tube_area

    @property
    def fluid_area(self):
        if self.fluid_area_override is not None:
            return self.fluid_area_override
        return self.tube.fluid_area

    @property
    def interface_area(self):
        """Tube-fabric contact area of one tube, 2 * pi * r_o * L_0."""
        return 2.0 * math.pi * self.tube.outer_radius * self.tube.rest_length

    @property
    def reference_length(self):
        """Tube length at the pre-strain."""
        return self.tube.rest_length * math.exp(self.pre_strain)

    def scaled(self, factor):
        """Uniformly scale tube geometry; area overrides scale with factor**2."""
        def sq(a):
            return None if a is None else a * factor ** 2
        return replace(
            self,
            tube=self.tube.scaled(factor),
            fluid_area_override=sq(self.fluid_area_override),
            tube_area_override=sq(self.tube_area_override),
        )


@dataclass(frozen=True)
class OperatingPoint:
    pressure: float
    strain: float
    flow_rate: float = 0.0

    def __post_init__(self):
        if not self.pressure >= 0:
            raise DomainError("pressure must be >= 0")
        if not self.strain >= MIN_STRAIN:
            raise DomainError(f"strain must be >= {MIN_STRAIN}")


def _check_strain(eps):
    eps = np.asarray(eps, dtype=float)
    if np.any(eps < 0):
        raise DomainError("strain must be >= 0")
    if np.any(eps > VALID_STRAIN[1]):
        warnings.warn(
            f"true strain outside the validated range {VALID_STRAIN}", ValidityWarning, stacklevel=3
        )
    return eps


def _check_pressure(p):
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise DomainError("gauge pressure must be >= 0")
    return p


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def true_strain(length, rest_length):
    """ln(length / rest_length)."""
    length = np.asarray(length, dtype=float)
    rest_length = np.asarray(rest_length, dtype=float)
    if np.any(length <= 0) or np.any(rest_length <= 0):
        raise DomainError("lengths must be > 0")
    return _out(np.log(length / rest_length))


def engineering_strain(length, rest_length):
    return _out((np.asarray(length, dtype=float) - rest_length) / rest_length)


def elastic_force(actuator: ActuatorSpec, eps):
    """Axial elastic force of all tubes, N * E * eps * A_tube."""
    eps = _check_strain(eps)
    a = actuator
    return _out(a.tube_count * a.tube.elastic_modulus * eps * a.tube_area)


def fluid_force(actuator: ActuatorSpec, p):
    """Axial force of the fluid on the tube ends, N * p * A_fluid."""
    p = _check_pressure(p)
    return _out(actuator.tube_count * p * actuator.fluid_area)


def external_force(actuator: ActuatorSpec, eps, p):
    """Contraction force on the load, N * (E * eps * A_tube - p * A_fluid).

    Negative values mean the sheet pushes (hydrostat regime).
    """
    eps = _check_strain(eps)
    p = _check_pressure(p)
    a = actuator
    return _out(a.tube_count * (a.tube.elastic_modulus * eps * a.tube_area - p * a.fluid_area))


def max_pressure(actuator: ActuatorSpec, eps):
    """Pressure at which the external force reaches zero at strain ``eps``.

    Depends only on area ratio, modulus and strain, so it does not change
    when the geometry is scaled uniformly.
    """
    eps = _check_strain(eps)
    a = actuator
    return _out(a.tube.elastic_modulus * eps * a.tube_area / a.fluid_area)


def hydrostat_elongation(tube, p, area_corrected=False):
    """Unloaded elongation of a tube pressurized to ``p``.

    The default is ``L_0 * (exp(p / E) - 1)``. With ``area_corrected`` the
    exponent becomes ``p * A_fluid / (E * A_tube)``, which is the strain at
    which the external force vanishes. ``tube`` may be a ``TubeSpec`` or an
    ``ActuatorSpec`` (whose area overrides are then honoured).
    """
    p = _check_pressure(p)
    if isinstance(tube, ActuatorSpec):
        a_fluid, a_tube, tube = tube.fluid_area, tube.tube_area, tube.tube
    else:
        a_fluid, a_tube = tube.fluid_area, tube.tube_area
    exponent = p / tube.elastic_modulus
    if area_corrected:
        exponent = exponent * a_fluid / a_tube
    return _out(tube.rest_length * np.expm1(exponent))


def compression_pressure(F_ext, actuator: ActuatorSpec, cylinder_radius):
    """Pressure exerted on a rigid cylinder by a wrapped sheet, h * F / (r_c * A_M).

    Warns with ``ValidityWarning`` when the cylinder radius is less than five
    sheet thicknesses.
    """
    r_c = np.asarray(cylinder_radius, dtype=float)
    if np.any(r_c <= 0):
        raise DomainError("cylinder radius must be > 0")
    h = actuator.effective_thickness
    if np.any(r_c < THIN_BAND_RATIO * h):
        warnings.warn(
            f"cylinder radius below {THIN_BAND_RATIO:g}x sheet thickness; thin-band assumption is weak",
            ValidityWarning, stacklevel=2,
        )
    return _out(h * np.asarray(F_ext, dtype=float) / (r_c * actuator.sheet_cross_section))


def wall_shear_rate(inner_radius, Q):
    """Wall shear rate of fully developed laminar pipe flow, 4|Q| / (pi r_i^3)."""
    return 4.0 * np.abs(Q) / (math.pi * inner_radius ** 3)


def viscous_drag(tube: TubeSpec, fluid, Q):
    """Wall shear force of the fluid on one tube.

    ``mu * rho * shear_rate * 2 pi r_i L`` where ``mu`` is the kinematic
    viscosity. Odd in ``Q``: the result carries the sign of the flow.
    """
    Q = np.asarray(Q, dtype=float)
    mag = (
        fluid.kinematic_viscosity * fluid.density * wall_shear_rate(tube.inner_radius, Q)
        * 2.0 * math.pi * tube.inner_radius * tube.rest_length
    )
    return _out(np.sign(Q) * mag)


def dry_friction(actuator: ActuatorSpec, p):
    """Coulomb friction at the tube-fabric interface, N * zeta * p * 2 pi r_o L."""
    p = _check_pressure(p)
    a = actuator
    return _out(a.tube_count * a.friction_coefficient * p * a.interface_area)


def net_force(actuator: ActuatorSpec, eps, p, Q=0.0, motion_sign=0, fluid=None):
    """External force including dissipation.

    Fabric force is taken as zero. Dissipation has magnitude
    ``|viscous drag| + dry friction`` and acts against ``motion_sign``
    (+1 extending, -1 contracting, 0 at rest). ``fluid`` is required when
    ``Q`` is nonzero.
    """
    if motion_sign not in (-1, 0, 1):
        raise DomainError("motion_sign must be -1, 0 or +1")
    force = np.asarray(external_force(actuator, eps, p), dtype=float)
    if motion_sign == 0:
        return _out(force)
    hyd = 0.0
    if np.any(np.asarray(Q) != 0):
        if fluid is None:
            raise DomainError("fluid model required for nonzero flow")
        hyd = np.abs(viscous_drag(actuator.tube, fluid, Q))
    dry = np.asarray(dry_friction(actuator, p))
    return _out(force - motion_sign * (hyd + dry))
