"""Modelling, simulation and design of fluidic fabric muscle sheets.

Modules by concern:

- ``core``: quasi-static force model
- ``hydraulics``: lumped channel networks and transient simulation
- ``design_rules``: fabric/stitch compatibility and failure screening
- ``estimation``: parameter fits, cycle work and efficiency
- ``optimizer``: catalog-driven sizing
- ``garment``: wrapped bands and peristaltic compression
"""
__version__ = "0.1.0"

from .core import (ActuatorSpec, OperatingPoint, TubeSpec, compression_pressure, dry_friction,
                   external_force, hydrostat_elongation, max_pressure, net_force, true_strain, viscous_drag)
from .design_rules import FabricAssembly, check_failures, classify_assembly
from .errors import (ComputationError, ConfigError, DomainError, EstimationError, FFMSError, FitError,
                     IntegrationError, PreconditionError, ValidityWarning)
from .estimation import TestSeries, cycle_work, efficiency, fit_modulus, fit_volume_slope, hysteresis_area
from .garment import LimbProfile, schedule_peristalsis, simulate_garment, wrap_compression
from .hydraulics import (AIR, WATER, ChannelNetwork, Drive, FluidModel, LoadModel, Trajectory, Waveform,
                         build_network, estimate_latency, simulate_transient, volume_to_length)
from .optimizer import Catalog, CatalogTube, DesignRequirements, feasible, solve_design

__all__ = [
    "ActuatorSpec", "OperatingPoint", "TubeSpec", "compression_pressure", "dry_friction", "external_force",
    "hydrostat_elongation", "max_pressure", "net_force", "true_strain", "viscous_drag",
    "FabricAssembly", "check_failures", "classify_assembly",
    "ComputationError", "ConfigError", "DomainError", "EstimationError", "FFMSError", "FitError",
    "IntegrationError", "PreconditionError", "ValidityWarning",
    "TestSeries", "cycle_work", "efficiency", "fit_modulus", "fit_volume_slope", "hysteresis_area",
    "LimbProfile", "schedule_peristalsis", "simulate_garment", "wrap_compression",
    "AIR", "WATER", "ChannelNetwork", "Drive", "FluidModel", "LoadModel", "Trajectory", "Waveform",
    "build_network", "estimate_latency", "simulate_transient", "volume_to_length",
    "Catalog", "CatalogTube", "DesignRequirements", "feasible", "solve_design",
    "__version__",
]
