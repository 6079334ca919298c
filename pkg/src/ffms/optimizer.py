"""Exhaustive sizing of fabric muscle sheets against requirements.

The design space is small and discrete (tube count x catalog tube x fabric
assembly), so every candidate is scored with vectorized numpy arithmetic and
the feasible ones are sorted. ``feasible`` is the scalar reference check used
for diagnostics and verification.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import core
from .core import ActuatorSpec, TubeSpec
from .design_rules import FabricAssembly, check_failures, classify_assembly, flagged_modes
from .errors import DomainError, PreconditionError

OBJECTIVES = ("min_mass", "min_pressure", "min_width")
# objective values are compared at this many significant digits so that
# designs with mathematically equal objectives tie regardless of rounding
TIE_DIGITS = 12
DEFAULT_TUBE_DENSITY = 1100.0  # silicone rubber, kg/m^3


@dataclass(frozen=True)
class DesignRequirements:
    """Targets for a sheet design (SI units).

    ``min_force_range`` is the span of external force between zero and the
    pressure budget. ``min_stroke`` is the contraction from the upper to the
    lower end of ``strain_window``. The pre-strain of every candidate is set
    to the upper end of the window.
    """

    min_force_range: float
    min_stroke: float
    pressure_budget: float
    max_sheet_width: float = 1.0
    max_thickness: float = 0.05
    strain_window: tuple = (0.0, 1.0)

    def __post_init__(self):
        for name in ("min_force_range", "min_stroke", "pressure_budget", "max_sheet_width", "max_thickness"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0")
        lo, hi = self.strain_window
        if not 0.0 <= lo < hi <= core.VALID_STRAIN[1]:
            raise DomainError("strain_window must satisfy 0 <= lo < hi <= 1")
        object.__setattr__(self, "strain_window", (float(lo), float(hi)))


@dataclass(frozen=True)
class CatalogTube:
    tube: TubeSpec
    density: float = DEFAULT_TUBE_DENSITY
    fluid_area: Optional[float] = None
    tube_area: Optional[float] = None
    name: str = ""


@dataclass(frozen=True)
class Catalog:
    """Available tubes and fabric assemblies."""

    tubes: tuple
    assemblies: tuple
    fluid_density: float = 1000.0
    fabric_thickness: float = 0.75e-3

    def __post_init__(self):
        object.__setattr__(self, "tubes", tuple(self.tubes))
        object.__setattr__(self, "assemblies", tuple(self.assemblies))
        if not self.tubes or not self.assemblies:
            raise PreconditionError("catalog needs at least one tube and one assembly")

    @classmethod
    def from_dict(cls, d):
        tubes = []
        for t in d["tubes"]:
            spec = TubeSpec(t["inner_radius_m"], t["outer_radius_m"], t["rest_length_m"], t["elastic_modulus_pa"])
            tubes.append(CatalogTube(spec, t.get("density_kg_m3", DEFAULT_TUBE_DENSITY),
                                     t.get("fluid_area_m2"), t.get("tube_area_m2"), t.get("name", "")))
        assemblies = [FabricAssembly.from_dict(a) for a in d["assemblies"]]
        return cls(tuple(tubes), tuple(assemblies), d.get("fluid_density_kg_m3", 1000.0),
                   d.get("fabric_thickness_m", 0.75e-3))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def make_design(entry: CatalogTube, assembly: FabricAssembly, tube_count, req: DesignRequirements,
                fabric_thickness=0.75e-3):
    """Actuator built from one catalog choice.

    Sheet thickness is the tube diameter plus a fabric layer on each side; the
    sheet cross-section is ``N * conduit_width * thickness``.
    """
    h = 2.0 * entry.tube.outer_radius + 2.0 * fabric_thickness
    return ActuatorSpec(
        entry.tube, int(tube_count), req.strain_window[1], assembly, "parallel",
        effective_thickness=h,
        sheet_cross_section=tube_count * assembly.conduit_width * h,
        fluid_area_override=entry.fluid_area, tube_area_override=entry.tube_area,
    )


def design_mass(design: ActuatorSpec, tube_density=DEFAULT_TUBE_DENSITY, fluid_density=1000.0):
    """Mass of tubes and fill fluid at rest length (fabric excluded)."""
    L0 = design.tube.rest_length
    return design.tube_count * L0 * (design.tube_area * tube_density + design.fluid_area * fluid_density)


def design_stroke(design: ActuatorSpec, req: DesignRequirements):
    L0 = design.tube.rest_length
    return L0 * (math.exp(design.pre_strain) - math.exp(req.strain_window[0]))


@dataclass(frozen=True)
class Violation:
    """One failed requirement. ``amount`` is the relative shortfall (>= 0)."""

    name: str
    required: float
    actual: float
    amount: float


@dataclass(frozen=True)
class Feasibility:
    ok: bool
    violations: tuple = ()

    @property
    def total_violation(self):
        return sum(v.amount for v in self.violations)


def tie_key(value):
    """Objective value rounded for ranking."""
    return float(f"{value:.{TIE_DIGITS}g}")


def _short(need, have):
    return max(0.0, (need - have) / need)


def _over(limit, have):
    return max(0.0, (have - limit) / limit)


def feasible(design: ActuatorSpec, req: DesignRequirements, table=None):
    """Check one design against every requirement."""
    v = []
    budget = req.pressure_budget
    p_max = core.max_pressure(design, design.pre_strain)
    if p_max > budget:
        v.append(Violation("pressure_budget", budget, p_max, _over(budget, p_max)))
    force_range = design.tube_count * design.fluid_area * budget
    if force_range < req.min_force_range:
        v.append(Violation("force_range", req.min_force_range, force_range, _short(req.min_force_range, force_range)))
    stroke = design_stroke(design, req)
    if stroke < req.min_stroke:
        v.append(Violation("stroke", req.min_stroke, stroke, _short(req.min_stroke, stroke)))
    width = design.tube_count * design.assembly.conduit_width
    if width > req.max_sheet_width:
        v.append(Violation("sheet_width", req.max_sheet_width, width, _over(req.max_sheet_width, width)))
    h = design.effective_thickness
    if h > req.max_thickness:
        v.append(Violation("thickness", req.max_thickness, h, _over(req.max_thickness, h)))
    if not classify_assembly(design.assembly, table).valid:
        v.append(Violation("assembly_invalid", 1.0, 0.0, 1.0))
    flags = flagged_modes(check_failures(design, budget, table=table), include_advisory=False)
    for mode in flags:
        v.append(Violation(mode, 1.0, 0.0, 1.0))
    return Feasibility(not v, tuple(v))


@dataclass(frozen=True)
class RankedDesign:
    actuator: ActuatorSpec
    tube_index: int
    assembly_index: int
    objective: float
    mass: float
    max_pressure: float
    force_range: float
    stroke: float
    sheet_width: float

    def record(self):
        a = self.actuator
        return {
            "tube_count": a.tube_count,
            "tube_index": self.tube_index,
            "assembly_index": self.assembly_index,
            "inner_radius_m": a.tube.inner_radius,
            "outer_radius_m": a.tube.outer_radius,
            "rest_length_m": a.tube.rest_length,
            "elastic_modulus_pa": a.tube.elastic_modulus,
            "pre_strain": a.pre_strain,
            "fabric": a.assembly.fabric,
            "stitch_pattern": a.assembly.stitch_pattern,
            "objective": self.objective,
            "mass_kg": self.mass,
            "max_pressure_pa": self.max_pressure,
            "force_range_n": self.force_range,
            "stroke_m": self.stroke,
            "sheet_width_m": self.sheet_width,
            "thickness_m": a.effective_thickness,
        }


@dataclass
class DesignResult:
    objective: str
    designs: list
    nearest_miss: Optional[RankedDesign] = None
    violations: tuple = ()
    evaluated: int = 0
    metadata: dict = field(default_factory=dict)

    @property
    def feasible(self):
        return bool(self.designs)

    def to_dict(self):
        out = {
            "objective": self.objective,
            "evaluated": self.evaluated,
            "feasible": self.feasible,
            "designs": [d.record() for d in self.designs],
            "metadata": self.metadata,
        }
        if self.nearest_miss is not None:
            out["nearest_miss"] = self.nearest_miss.record()
            out["violations"] = [asdict(v) for v in self.violations]
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        rows = [d.record() for d in self.designs]
        if not rows:
            return ""
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return buf.getvalue()


def _objective_values(name, N, mass, p_max, width):
    if name == "min_mass":
        return mass
    if name == "min_pressure":
        return np.full_like(mass, p_max)
    return width


def _score_pair(args):
    """Score every tube count for one (tube, assembly) pair."""
    ti, ai, entry, asm, req, catalog, n_max, objective, table = args
    N = np.arange(1, n_max + 1, dtype=float)
    probe = make_design(entry, asm, 1, req, catalog.fabric_thickness)
    budget = req.pressure_budget
    p_max = core.max_pressure(probe, probe.pre_strain)
    h = probe.effective_thickness
    Af = probe.fluid_area
    L0 = probe.tube.rest_length
    mass = (N * L0) * (probe.tube_area * entry.density + Af * catalog.fluid_density)
    force_range = N * Af * budget
    stroke = design_stroke(probe, req)
    width = N * asm.conduit_width
    # pressure-independent per-pair terms
    invalid = not classify_assembly(asm, table).valid
    flags = flagged_modes(check_failures(probe, budget, table=table), include_advisory=False)
    scalar = (_over(budget, p_max) + _short(req.min_stroke, stroke) + _over(req.max_thickness, h)
              + float(invalid) + len(flags))
    per_n = (np.maximum(0.0, (req.min_force_range - force_range) / req.min_force_range)
             + np.maximum(0.0, (width - req.max_sheet_width) / req.max_sheet_width))
    # exact comparisons (not the relative amounts) decide feasibility
    ok_n = (force_range >= req.min_force_range) & (width <= req.max_sheet_width)
    ok_pair = (p_max <= budget and stroke >= req.min_stroke and h <= req.max_thickness
               and not invalid and not flags)
    obj = _objective_values(objective, N, mass, p_max, width)
    t = entry.tube
    rows = []
    for k in range(n_max):
        key = (tie_key(float(obj[k])), int(N[k]), t.outer_radius, t.inner_radius, t.rest_length, t.elastic_modulus, ti, ai)
        rows.append((bool(ok_pair and ok_n[k]), scalar + float(per_n[k]), key,
                     (float(mass[k]), p_max, float(force_range[k]), stroke, float(width[k]))))
    return rows


def solve_design(req: DesignRequirements, catalog: Catalog, objective="min_mass", n_max=64,
                 top_k=10, workers=1, table=None):
    """Rank every feasible design by ``objective``.

    Objective values are compared at ``TIE_DIGITS`` significant digits.
    Ties are broken by smaller tube count, then smaller
    outer radius, inner radius, rest length, modulus and catalog order. When
    nothing is feasible the result has no designs and carries the candidate
    with the smallest total relative violation.

    ``workers > 1`` scores catalog pairs on a thread pool; the merged list is
    re-sorted, so the result does not depend on the partition.
    """
    if objective not in OBJECTIVES:
        raise DomainError(f"objective must be one of {OBJECTIVES}")
    if int(n_max) < 1:
        raise DomainError("n_max must be >= 1")
    jobs = [(ti, ai, e, a, req, catalog, int(n_max), objective, table)
            for ti, e in enumerate(catalog.tubes) for ai, a in enumerate(catalog.assemblies)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(_score_pair, jobs))
    else:
        parts = [_score_pair(j) for j in jobs]
    rows = [r for part in parts for r in part]

    def build(row):
        key, extra = row[2], row[3]
        ti, ai, n = key[6], key[7], key[1]
        design = make_design(catalog.tubes[ti], catalog.assemblies[ai], n, req, catalog.fabric_thickness)
        obj = _objective_values(objective, None, np.array([extra[0]]), extra[1], np.array([extra[4]]))[0]
        return RankedDesign(design, ti, ai, float(obj), *extra)

    good = sorted((r for r in rows if r[0]), key=lambda r: r[2])
    meta = {"n_max": int(n_max), "catalog_tubes": len(catalog.tubes), "catalog_assemblies": len(catalog.assemblies),
            "mass_model": "tube material plus fill fluid at rest length; fabric excluded"}
    if good:
        kept = good if top_k is None else good[:top_k]
        return DesignResult(objective, [build(r) for r in kept], evaluated=len(rows), metadata=meta)
    miss = min(rows, key=lambda r: (r[1], r[2]))
    best = build(miss)
    return DesignResult(objective, [], best, feasible(best.actuator, req, table).violations,
                        evaluated=len(rows), metadata=meta)
