import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ffms.core import TubeSpec
from ffms.design_rules import FABRICS, STITCH_PATTERNS, FabricAssembly
from ffms.errors import DomainError, PreconditionError
from ffms.optimizer import (Catalog, CatalogTube, DesignRequirements, feasible, make_design, solve_design,
                            tie_key)

from conftest import A_FLUID, A_TUBE, E

PROTO_REQ = DesignRequirements(12.0, 0.05, 750e3, strain_window=(0.0, 0.8))


def prototype_catalog(**kw):
    entry = CatalogTube(TubeSpec(0.8e-3, 1.6e-3, 0.1224, E), fluid_area=A_FLUID, tube_area=A_TUBE, name="prototype")
    return Catalog((entry,), (FabricAssembly(),), **kw)


def test_prototype_sheet_feasible(proto3):
    res = feasible(proto3, PROTO_REQ)
    assert res.ok and res.violations == ()


def test_prototype_sheet_low_budget(proto3):
    req = DesignRequirements(12.0, 0.05, 300e3, strain_window=(0.0, 0.8))
    res = feasible(proto3, req)
    assert not res.ok
    names = {v.name for v in res.violations}
    assert "pressure_budget" in names
    pb = next(v for v in res.violations if v.name == "pressure_budget")
    assert pb.actual == pytest.approx(E * 0.8 * A_TUBE / A_FLUID)
    assert pb.actual == pytest.approx(674e3, rel=1e-3)
    assert pb.amount == pytest.approx((pb.actual - 300e3) / 300e3)


def test_requirements_validation():
    with pytest.raises(DomainError):
        DesignRequirements(0.0, 0.05, 750e3)
    with pytest.raises(DomainError):
        DesignRequirements(1.0, 0.05, 750e3, strain_window=(0.5, 0.2))
    with pytest.raises(DomainError):
        DesignRequirements(1.0, 0.05, 750e3, strain_window=(0.0, 1.5))


def test_catalog_must_be_nonempty():
    with pytest.raises(PreconditionError):
        Catalog((), (FabricAssembly(),))


def test_prototype_tube_first_design_is_three_channels():
    res = solve_design(PROTO_REQ, prototype_catalog(), "min_mass", n_max=20)
    assert res.feasible
    assert res.designs[0].actuator.tube_count == 3
    assert [d.actuator.tube_count for d in res.designs] == list(range(3, 13))
    assert res.evaluated == 20
    for d in res.designs:
        assert feasible(d.actuator, PROTO_REQ).ok
    # force range check by hand: 2 tubes give 11.55 N < 12 N
    assert 2 * A_FLUID * 750e3 < 12 < 3 * A_FLUID * 750e3


def test_unsatisfiable_budget_gives_diagnostics():
    req = DesignRequirements(12.0, 0.05, 1.0, strain_window=(0.0, 0.8))
    res = solve_design(req, prototype_catalog(), "min_mass", n_max=20)
    assert not res.feasible and res.designs == []
    assert res.nearest_miss is not None
    names = {v.name for v in res.violations}
    assert {"pressure_budget", "force_range"} <= names
    out = res.to_dict()
    assert out["feasible"] is False and out["violations"]
    assert res.to_csv() == ""


def test_tie_break_by_count_then_outer_radius():
    # equal pressure ceiling for both tubes (same areas and modulus), so
    # min_pressure ties everywhere
    a = CatalogTube(TubeSpec(0.8e-3, 1.6e-3, 0.1, E), fluid_area=A_FLUID, tube_area=A_TUBE)
    b = CatalogTube(TubeSpec(0.8e-3, 1.5e-3, 0.1, E), fluid_area=A_FLUID, tube_area=A_TUBE)
    cat = Catalog((a, b), (FabricAssembly(),))
    req = DesignRequirements(1.0, 0.01, 750e3, strain_window=(0.0, 0.8))
    res = solve_design(req, cat, "min_pressure", n_max=3, top_k=None)
    order = [(d.actuator.tube_count, d.tube_index) for d in res.designs]
    assert order == [(1, 1), (1, 0), (2, 1), (2, 0), (3, 1), (3, 0)]


def test_tie_key_merges_rounding_noise():
    x = 0.1 + 0.2
    assert x != 0.3 and tie_key(x) == tie_key(0.3)
    assert tie_key(1.0) < tie_key(1.0 + 1e-9)


def test_bad_objective():
    with pytest.raises(DomainError):
        solve_design(PROTO_REQ, prototype_catalog(), "max_force")


# exhaustive oracle

def _oracle(req, catalog, objective, n_max):
    found, misses = [], []
    for ti, entry in enumerate(catalog.tubes):
        t = entry.tube
        for ai, asm in enumerate(catalog.assemblies):
            for n in range(1, n_max + 1):
                d = make_design(entry, asm, n, req, catalog.fabric_thickness)
                at = entry.tube_area if entry.tube_area is not None else math.pi * (t.outer_radius ** 2 - t.inner_radius ** 2)
                af = entry.fluid_area if entry.fluid_area is not None else math.pi * t.inner_radius ** 2
                if objective == "min_mass":
                    val = n * t.rest_length * (at * entry.density + af * catalog.fluid_density)
                elif objective == "min_pressure":
                    val = t.elastic_modulus * req.strain_window[1] * at / af
                else:
                    val = n * asm.conduit_width
                key = (float(f"{val:.12g}"), n, t.outer_radius, t.inner_radius, t.rest_length, t.elastic_modulus,
                       ti, ai)
                f = feasible(d, req)
                (found if f.ok else misses).append((key, f.total_violation))
    found.sort()
    return found, misses


radii = st.sampled_from([0.4e-3, 0.6e-3, 0.8e-3, 1.0e-3])
tubes = st.builds(lambda ri, k, L0, E, rho: CatalogTube(TubeSpec(ri, ri * k, L0, E), rho),
                  radii, st.sampled_from([1.15, 1.3, 1.5, 2.0]), st.sampled_from([0.08, 0.1224, 0.2]),
                  st.sampled_from([0.8e6, 1.1e6]), st.sampled_from([1100.0, 1100.0, 950.0]))
assemblies = st.builds(FabricAssembly, st.sampled_from(FABRICS), st.sampled_from(STITCH_PATTERNS),
                       st.sampled_from(["straight", "zigzag"]), st.booleans(),
                       st.sampled_from([500.0, 4000.0]), st.sampled_from([3e-3, 5e-3]),
                       st.sampled_from([0.5e-3, 2e-3]))
reqs = st.builds(lambda f, s, b, w, h, hi: DesignRequirements(f, s, b, w, h, (0.0, hi)),
                 st.floats(1, 30), st.floats(0.01, 0.1), st.floats(2e5, 2e6), st.floats(0.02, 0.2),
                 st.floats(3e-3, 8e-3), st.floats(0.2, 1.0))


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(ts=st.lists(tubes, min_size=1, max_size=4), asms=st.lists(assemblies, min_size=1, max_size=3), req=reqs,
       objective=st.sampled_from(["min_mass", "min_pressure", "min_width"]))
def test_solver_matches_exhaustive_oracle(ts, asms, req, objective):
    cat = Catalog(tuple(ts), tuple(asms))
    n_max = 16
    res = solve_design(req, cat, objective, n_max=n_max, top_k=None)
    found, misses = _oracle(req, cat, objective, n_max)
    got = [(d.actuator.tube_count, d.tube_index, d.assembly_index) for d in res.designs]
    want = [(k[1], k[6], k[7]) for k, _ in found]
    assert got == want
    for d, (k, _) in zip(res.designs, found):
        assert d.objective == pytest.approx(k[0], rel=1e-11)
    if not found:
        best = min(v for _, v in misses)
        assert res.nearest_miss is not None
        got_v = feasible(res.nearest_miss.actuator, req).total_violation
        assert got_v == pytest.approx(best, rel=1e-9, abs=1e-12)


def test_workers_do_not_change_result():
    rng = np.random.default_rng(7)
    ts = tuple(CatalogTube(TubeSpec(ri, ri * 1.3, 0.1224, 1.1e6)) for ri in (0.4e-3, 0.6e-3, 0.8e-3, 1.0e-3))
    asms = (FabricAssembly(), FabricAssembly(conduit_width=3e-3), FabricAssembly(stitch_pattern="cross"))
    req = DesignRequirements(10.0, 0.03, 1e6, 0.2, 6e-3, (0.0, float(rng.uniform(0.5, 0.9))))
    one = solve_design(req, Catalog(ts, asms), top_k=None)
    many = solve_design(req, Catalog(ts, asms), top_k=None, workers=4)
    assert one.to_json() == many.to_json()
    assert one.feasible


def test_top_k_and_outputs():
    res = solve_design(PROTO_REQ, prototype_catalog(), n_max=20, top_k=4)
    assert len(res.designs) == 4
    data = json.loads(res.to_json())
    assert data["designs"][0]["tube_count"] == 3
    assert "fabric excluded" in data["metadata"]["mass_model"]
    rows = list(csv.DictReader(io.StringIO(res.to_csv())))
    assert len(rows) == 4 and int(rows[0]["tube_count"]) == 3
    assert float(rows[0]["mass_kg"]) == res.designs[0].mass
    assert res.designs[0].mass == pytest.approx(3 * 0.1224 * (A_TUBE * 1100 + A_FLUID * 1000))


def test_catalog_from_dict():
    cat = Catalog.from_dict({
        "tubes": [{"inner_radius_m": 8e-4, "outer_radius_m": 1.6e-3, "rest_length_m": 0.1224,
                   "elastic_modulus_pa": 1.1e6, "fluid_area_m2": 7.7e-6, "tube_area_m2": 5.9e-6}],
        "assemblies": [{"fabric": "non_stretch", "stitch_pattern": "side", "conduit_width_m": 4e-3}],
    })
    assert cat.tubes[0].fluid_area == 7.7e-6 and cat.tubes[0].density == 1100.0
    assert cat.assemblies[0].conduit_width == 4e-3
