"""Fabric and stitch compatibility rules, plus failure-mode screening.

The compatibility matrix lives in ``data/stitch_rules.json`` so that it can be
audited and extended without touching code. ``classify_assembly`` is total
over the 3 fabrics x 2 stitch patterns x 2 wrinkling states.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional

from .errors import DomainError

FABRICS = ("non_stretch", "two_way", "four_way")
STITCH_PATTERNS = ("side", "cross")
STITCH_STYLES = ("straight", "zigzag")
FAILURE_MODES = ("fabric_tear", "stitch_failure", "ballooning")


@dataclass(frozen=True)
class FabricAssembly:
    """Fabric, stitching and conduit geometry of a sheet.

    ``thread_strength`` is the rated stitch line load in N/m. ``thread_count``
    is optional fabric density metadata used only for the tearing advisory.
    """

    fabric: str = "non_stretch"
    stitch_pattern: str = "side"
    stitch_style: str = "straight"
    wrinkled: bool = True
    thread_strength: float = 2000.0
    conduit_width: float = 5e-3
    stitch_spacing: float = 2e-3
    thread_count: Optional[int] = None

    def __post_init__(self):
        if self.fabric not in FABRICS:
            raise DomainError(f"fabric must be one of {FABRICS}, got {self.fabric!r}")
        if self.stitch_pattern not in STITCH_PATTERNS:
            raise DomainError(f"stitch_pattern must be one of {STITCH_PATTERNS}")
        if self.stitch_style not in STITCH_STYLES:
            raise DomainError(f"stitch_style must be one of {STITCH_STYLES}")
        for name in ("thread_strength", "conduit_width", "stitch_spacing"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0")
        if self.thread_count is not None and self.thread_count < 0:
            raise DomainError("thread_count must be >= 0")

    @classmethod
    def from_dict(cls, d):
        """Build from SI-keyed JSON (``thread_strength_n_per_m``, ``conduit_width_m``, ...)."""
        keys = {"thread_strength_n_per_m": "thread_strength", "conduit_width_m": "conduit_width",
                "stitch_spacing_m": "stitch_spacing"}
        return cls(**{keys.get(k, k): v for k, v in d.items()})


@dataclass(frozen=True)
class Classification:
    axial_stretch: str
    radial_risk: str
    valid: bool
    notes: tuple = ()


@dataclass(frozen=True)
class FailureAssessment:
    """Screening result for one failure mode.

    ``margin`` is capacity over demand: values below 1 mean the mode is
    expected. It is always positive (``inf`` when there is no demand).
    """

    mode: str
    flagged: bool
    severity: str
    margin: float
    detail: str = ""


@lru_cache(maxsize=None)
def load_rule_table():
    """Return the bundled rule table as a dict (cached)."""
    text = resources.files("ffms.data").joinpath("stitch_rules.json").read_text()
    return json.loads(text)


def rule_table_version():
    return load_rule_table()["version"]


def _lookup(table, fabric, pattern, wrinkled):
    for row in table["combinations"]:
        if (row["fabric"], row["stitch_pattern"], row["wrinkled"]) == (fabric, pattern, wrinkled):
            return row
    raise KeyError((fabric, pattern, wrinkled))


def classify_assembly(assembly: FabricAssembly, table=None) -> Classification:
    """Classify an assembly's axial stretchability and ballooning risk.

    Parameters
    ----------
    assembly : FabricAssembly
    table : dict, optional
        Rule table with the layout of the bundled JSON. Defaults to the
        bundled table.

    Returns
    -------
    Classification
        ``valid`` is False when the sheet cannot extend, when it balloons by
        construction, or when a required stitch style is not used.
    """
    table = load_rule_table() if table is None else table
    row = _lookup(table, assembly.fabric, assembly.stitch_pattern, bool(assembly.wrinkled))
    valid = bool(row["valid"])
    notes = list(row.get("notes", ()))
    for rule in table.get("style_rules", ()):
        if assembly.fabric not in rule["fabric"] or assembly.stitch_pattern != rule["stitch_pattern"]:
            continue
        required = rule.get("required_style")
        if required is not None and assembly.stitch_style != required:
            valid = False
            notes.append(rule["note"])
        recommended = rule.get("recommended_style")
        if recommended is not None and assembly.stitch_style != recommended:
            notes.append(rule["note"])
    return Classification(row["axial_stretch"], row["radial_risk"], valid, tuple(notes))


def stitch_line_load(p, r_o):
    """Force per unit stitch length holding a tube of outer radius ``r_o`` at gauge ``p``.

    Thin-wall hoop reading, ``t_s = p * r_o`` (N/m).
    """
    if p < 0:
        raise DomainError("pressure must be >= 0")
    return p * r_o


def recommended_conduit_width(r_o):
    """Conduit width that radially constrains a tube: half its outer diameter."""
    return r_o


def check_failures(actuator, p_operating, *, spacing_ratio=None, min_thread_count=None, table=None):
    """Screen an actuator for fabric tearing, stitch failure and ballooning.

    One assessment is returned per mode, in the order of ``FAILURE_MODES``.
    Flags never disappear as ``p_operating`` rises: stitch failure grows with
    pressure and the other two modes are pressure independent.
    """
    table = load_rule_table() if table is None else table
    thresholds = table["thresholds"]
    ratio = thresholds["ballooning_spacing_ratio"] if spacing_ratio is None else spacing_ratio
    min_count = thresholds["min_thread_count"] if min_thread_count is None else min_thread_count
    assembly = actuator.assembly
    r_o = actuator.tube.outer_radius

    if assembly.thread_count is None:
        tear = FailureAssessment("fabric_tear", False, "none", math.inf, "thread count unknown")
    else:
        margin = assembly.thread_count / min_count if assembly.thread_count > 0 else 1e-12
        low = assembly.thread_count < min_count
        tear = FailureAssessment(
            "fabric_tear", low, "advisory" if low else "none", margin,
            f"thread count {assembly.thread_count} vs recommended {min_count}",
        )

    load = stitch_line_load(p_operating, r_o)
    margin = assembly.thread_strength / load if load > 0 else math.inf
    broken = margin < 1.0
    stitch = FailureAssessment(
        "stitch_failure", broken, "critical" if broken else "none", margin,
        f"line load {load:.6g} N/m vs rated {assembly.thread_strength:.6g} N/m",
    )

    cls = classify_assembly(assembly, table)
    spacing_margin = ratio * r_o / assembly.stitch_spacing
    reasons = []
    if cls.radial_risk == "high":
        reasons.append("assembly has high radial expansion risk")
    if assembly.stitch_pattern == "cross" and spacing_margin < 1.0:
        reasons.append("gaps between cross stitches exceed the tube radius")
    balloon = FailureAssessment(
        "ballooning", bool(reasons), "critical" if reasons else "none", spacing_margin,
        "; ".join(reasons),
    )
    return [tear, stitch, balloon]


def flagged_modes(assessments, include_advisory=True):
    return [a.mode for a in assessments if a.flagged and (include_advisory or a.severity != "advisory")]
