"""Run configuration: JSON schema, defaults and object builders.

Keys carry their SI unit (``inner_radius_m``, ``pressure_pa``) so that a
config file cannot silently mix millimetres and metres. Unknown keys are
rejected. Missing optional keys are filled from ``DEFAULTS`` so that a dumped
config is complete and reloads to an equal ``RunConfig``.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources

import jsonschema

from .core import ActuatorSpec, TubeSpec
from .design_rules import FabricAssembly
from .errors import ConfigError
from .hydraulics import Drive, FluidModel, LoadModel, Waveform, build_network

BUNDLED = ("paper_3ch", "paper_10ch", "compression_band", "armband", "leg_garment_3seg")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_posint = {"type": "integer", "minimum": 1}
_str_list = {"type": "array", "items": {"type": "string"}}
_window = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_nullable_pos = {"oneOf": [_pos, {"type": "null"}]}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_assembly = _obj({
    "fabric": {"enum": ["non_stretch", "two_way", "four_way"]},
    "stitch_pattern": {"enum": ["side", "cross"]},
    "stitch_style": {"enum": ["straight", "zigzag"]},
    "wrinkled": {"type": "boolean"},
    "thread_strength_n_per_m": _pos,
    "conduit_width_m": _pos,
    "stitch_spacing_m": _pos,
    "thread_count": {"oneOf": [{"type": "integer", "minimum": 0}, {"type": "null"}]},
})

_tube = {
    "inner_radius_m": _pos,
    "outer_radius_m": _pos,
    "rest_length_m": _pos,
    "elastic_modulus_pa": _pos,
}

SCHEMA = _obj({
    "name": {"type": "string"},
    "provenance": _str_list,
    "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
    "actuator": _obj({
        **_tube,
        "tube_count": _posint,
        "pre_strain": _nonneg,
        "routing": {"enum": ["series", "parallel"]},
        "effective_thickness_m": _pos,
        "sheet_cross_section_m2": _pos,
        "friction_coefficient": _nonneg,
        "fluid_area_m2": _nullable_pos,
        "tube_area_m2": _nullable_pos,
        "assembly": _assembly,
    }, required=list(_tube)),
    "fluid": _obj({
        "mode": {"enum": ["incompressible", "isothermal_gas"]},
        "kinematic_viscosity_m2_s": _pos,
        "density_kg_m3": _pos,
        "reference_pressure_pa": _pos,
    }),
    "network": _obj({
        "volume_slope_m2": _nullable_pos,
        "dead_volume_m3": _nonneg,
        "conduit_length_m": _nullable_pos,
    }),
    "drive": _obj({
        "kind": {"enum": ["pressure", "displacement"]},
        "shape": {"enum": ["constant", "sine", "ramp", "trapezoid"]},
        "offset_pa": _num, "amplitude_pa": _num,
        "offset_m3": _num, "amplitude_m3": _num,
        "frequency_hz": _pos,
        "delay_s": _num,
        "cycles": {"oneOf": [_pos, {"type": "null"}]},
        "piston_area_m2": _pos,
        "syringe_volume_m3": _pos,
    }),
    "load": _obj({
        "equilibrium_pressure_pa": {"oneOf": [_nonneg, {"type": "null"}]},
        "preload_n": {"oneOf": [_num, {"type": "null"}]},
        "stiffness_n_per_m": _nonneg,
    }),
    "simulation": _obj({"dt_s": _pos, "duration_s": _pos}),
    "check": _obj({"pressure_pa": _nonneg, "spacing_ratio": _pos, "min_thread_count": _nonneg}),
    "compression": _obj({"cylinder_radius_m": _pos, "pressure_pa": _nonneg, "contact_area_m2": _nullable_pos}),
    "fit": _obj({
        "data_csv": {"type": "string"},
        "kind": {"enum": ["tensile", "volume_displacement"]},
        "channel_count": _posint,
        "strain_window": _window,
    }),
    "design": _obj({
        "objective": {"enum": ["min_mass", "min_pressure", "min_width"]},
        "n_max": _posint,
        "top_k": _posint,
        "requirements": _obj({
            "min_force_range_n": _pos,
            "min_stroke_m": _pos,
            "pressure_budget_pa": _pos,
            "max_sheet_width_m": _pos,
            "max_thickness_m": _pos,
            "strain_window": _window,
        }, required=["min_force_range_n", "min_stroke_m", "pressure_budget_pa"]),
        "catalog": {"oneOf": [{"type": "null"}, _obj({
            "tubes": {"type": "array", "minItems": 1, "items": _obj({
                **_tube,
                "density_kg_m3": _pos,
                "fluid_area_m2": _nullable_pos,
                "tube_area_m2": _nullable_pos,
                "name": {"type": "string"},
            }, required=list(_tube))},
            "assemblies": {"type": "array", "minItems": 1, "items": _assembly},
            "fluid_density_kg_m3": _pos,
            "fabric_thickness_m": _pos,
        }, required=["tubes", "assemblies"])]},
    }, required=["requirements"]),
    "garment": _obj({
        "segments": _posint,
        "period_s": _pos,
        "direction": {"enum": ["distal", "proximal"]},
        "p_low_pa": _nonneg,
        "p_high_pa": _nonneg,
        "shape": {"enum": ["sine", "trapezoid"]},
        "limb_radii_m": {"type": "array", "items": _pos, "minItems": 1},
        "segment_spacing_m": _pos,
        "duration_s": _pos,
        "dt_s": _pos,
        "sample_dt_s": _pos,
        "thresholds_pa": {"type": "array", "items": _nonneg},
        "transient": {"type": "boolean"},
        "load_stiffness_n_per_m": _nonneg,
        "withdrawal": {"oneOf": [{"type": "null"}, _obj({
            "volume_m3": _nonneg,
            "cylinder_radius_m": _pos,
        }, required=["volume_m3", "cylinder_radius_m"])]},
    }),
    "sweep": _obj({
        "parameters": {"type": "object", "additionalProperties": {"type": "array", "minItems": 1}},
        "outputs": _str_list,
        "workers": _posint,
    }),
}, required=["actuator"])

DEFAULTS = {
    "name": "",
    "provenance": [],
    "seed": 0,
    "actuator": {
        "tube_count": 1, "pre_strain": 0.0, "routing": "parallel",
        "effective_thickness_m": 4.7e-3, "sheet_cross_section_m2": 1.184e-4,
        "friction_coefficient": 0.0, "fluid_area_m2": None, "tube_area_m2": None,
        "assembly": {
            "fabric": "non_stretch", "stitch_pattern": "side", "stitch_style": "straight",
            "wrinkled": True, "thread_strength_n_per_m": 2000.0, "conduit_width_m": 5e-3,
            "stitch_spacing_m": 2e-3, "thread_count": None,
        },
    },
    "fluid": {"mode": "incompressible", "kinematic_viscosity_m2_s": 1e-6, "density_kg_m3": 1000.0,
              "reference_pressure_pa": 101325.0},
    "network": {"volume_slope_m2": None, "dead_volume_m3": 0.0, "conduit_length_m": None},
    "drive": {"kind": "pressure", "shape": "sine", "frequency_hz": 0.5, "delay_s": 0.0, "cycles": None,
              "piston_area_m2": 1.7671458676442586e-4, "syringe_volume_m3": 1e-5},
    "load": {"equilibrium_pressure_pa": None, "preload_n": None, "stiffness_n_per_m": 0.0},
    "simulation": {"dt_s": 1e-3, "duration_s": 4.0},
    "check": {"pressure_pa": 750e3, "spacing_ratio": 1.0, "min_thread_count": 300},
}

# sub-defaults only applied when the optional block is present
_BLOCK_DEFAULTS = {
    "compression": {"pressure_pa": 0.0, "contact_area_m2": None},
    "fit": {"kind": "tensile", "channel_count": 1, "strain_window": [0.0, 1.0]},
    "design": {"objective": "min_mass", "n_max": 64, "top_k": 10, "catalog": None,
               "requirements": {"max_sheet_width_m": 1.0, "max_thickness_m": 0.05, "strain_window": [0.0, 1.0]}},
    "garment": {"segments": 3, "period_s": 6.0, "direction": "distal", "p_low_pa": 0.0, "p_high_pa": 0.0,
                "shape": "sine", "segment_spacing_m": 0.1, "duration_s": 12.0, "dt_s": 1e-3,
                "sample_dt_s": 0.01, "thresholds_pa": [4e3, 12e3], "transient": True,
                "load_stiffness_n_per_m": 300.0, "withdrawal": None},
    "sweep": {"outputs": ["max_pressure_pa", "blocked_force_n"], "workers": 1},
}


def _merge(defaults, given):
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _pointer(path):
    return "/" + "/".join(str(p) for p in path)


def validate(raw):
    """Raise ``ConfigError`` (with a JSON pointer) if ``raw`` violates the schema."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(raw))
    if err is not None:
        path = list(err.absolute_path)
        if err.validator == "additionalProperties":
            extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
            if extra:
                path.append(extra[0])
        raise ConfigError(f"{_pointer(path)}: {err.message}", _pointer(path))


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with every default filled in."""

    data: dict

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("/: config must be a JSON object", "/")
        validate(raw)
        full = _merge(DEFAULTS, raw)
        for block, d in _BLOCK_DEFAULTS.items():
            if block in raw:
                full[block] = _merge(d, raw[block])
        cfg = cls(full)
        cfg._check_semantics()
        return cfg

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"/: invalid JSON ({exc})", "/") from exc
        except OSError as exc:
            raise ConfigError(f"/: cannot read {path} ({exc.strerror})", "/") from exc
        return cls.from_dict(raw)

    @classmethod
    def bundled(cls, name):
        if name not in BUNDLED:
            raise ConfigError(f"/: no bundled config {name!r}", "/")
        text = resources.files("ffms.data").joinpath("configs", f"{name}.json").read_text()
        return cls.from_dict(json.loads(text))

    def dumps(self):
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    def __getitem__(self, key):
        return self.data[key]

    def _check_semantics(self):
        a = self.data["actuator"]
        if not a["inner_radius_m"] < a["outer_radius_m"]:
            raise ConfigError("/actuator/inner_radius_m: must be smaller than outer_radius_m",
                              "/actuator/inner_radius_m")
        d = self.data["drive"]
        wrong = ("offset_m3", "amplitude_m3") if d["kind"] == "pressure" else ("offset_pa", "amplitude_pa")
        for key in wrong:
            if key in d:
                raise ConfigError(f"/drive/{key}: not valid for a {d['kind']} drive", f"/drive/{key}")
        g = self.data.get("garment")
        if g is not None and g["p_low_pa"] > g["p_high_pa"]:
            raise ConfigError("/garment/p_low_pa: must not exceed p_high_pa", "/garment/p_low_pa")

    # builders ---------------------------------------------------------------

    def assembly(self):
        return FabricAssembly.from_dict(self.data["actuator"]["assembly"])

    def actuator(self):
        a = self.data["actuator"]
        tube = TubeSpec(a["inner_radius_m"], a["outer_radius_m"], a["rest_length_m"], a["elastic_modulus_pa"])
        return ActuatorSpec(
            tube, a["tube_count"], a["pre_strain"], self.assembly(), a["routing"],
            a["effective_thickness_m"], a["sheet_cross_section_m2"], a["friction_coefficient"],
            a["fluid_area_m2"], a["tube_area_m2"],
        )

    def fluid(self):
        f = self.data["fluid"]
        return FluidModel(f["kinematic_viscosity_m2_s"], f["density_kg_m3"], f["mode"], f["reference_pressure_pa"])

    def network(self):
        n = self.data["network"]
        return build_network(self.actuator(), self.fluid(), n["volume_slope_m2"], n["dead_volume_m3"],
                             n["conduit_length_m"])

    def drive(self):
        d = self.data["drive"]
        unit = "pa" if d["kind"] == "pressure" else "m3"
        wf = Waveform(d["shape"], d.get(f"offset_{unit}", 0.0), d.get(f"amplitude_{unit}", 0.0),
                      d["frequency_hz"], d["delay_s"], d["cycles"])
        return Drive(d["kind"], wf, d["piston_area_m2"], d["syringe_volume_m3"])

    def load_model(self):
        ld = self.data["load"]
        if ld["preload_n"] is not None:
            return LoadModel(ld["preload_n"], ld["stiffness_n_per_m"])
        p = ld["equilibrium_pressure_pa"]
        if p is None:
            # equilibrium with the drive at t = 0
            drive = self.drive()
            p = drive.waveform(0.0) if drive.kind == "pressure" else 0.0
        return LoadModel.at_pressure(self.actuator(), p, ld["stiffness_n_per_m"])


def set_path(data, dotted, value):
    """Return a copy of ``data`` with ``a.b.c`` set to ``value``."""
    out = copy.deepcopy(data)
    node = out
    keys = dotted.split(".")
    for k in keys[:-1]:
        if k not in node or not isinstance(node[k], dict):
            raise ConfigError(f"/{'/'.join(keys)}: unknown parameter path", "/" + "/".join(keys))
        node = node[k]
    if keys[-1] not in node:
        raise ConfigError(f"/{'/'.join(keys)}: unknown parameter path", "/" + "/".join(keys))
    node[keys[-1]] = value
    return out
