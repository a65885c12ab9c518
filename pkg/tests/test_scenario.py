"""Scenario construction, validation, JSON round trips, assumption reports."""

import json
import math

import numpy as np
import pytest

from regularflow.errors import (
    InvalidParameter,
    NotMonotone,
    ScenarioFormatError,
)
from regularflow.scenario import (
    Annulus,
    Box,
    HalfSpaceStep,
    Linear,
    OneGap,
    TwoGap,
    assumptions_report,
    build_blowup_scenario,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

import oracles
from conftest import make_scenario


#############################################################
# Force model validation
#############################################################


def test_one_gap_rejects_bad_parameters():
    with pytest.raises(InvalidParameter):
        OneGap(f1=0.0, f2=1.0, a=2.0)
    with pytest.raises(InvalidParameter):
        OneGap(f1=1.0, f2=-0.5, a=2.0)
    with pytest.raises(InvalidParameter):
        OneGap(f1=1.0, f2=1.0, a=1.0)     # step must sit beyond the labels


def test_two_gap_rejects_bad_orderings():
    with pytest.raises(InvalidParameter):
        TwoGap(f1=1.0, f2=2.0, f3=3.0, a=2.0, b=3.0)   # f2 < f1 violated
    with pytest.raises(InvalidParameter):
        TwoGap(f1=2.0, f2=1.0, f3=0.5, a=2.0, b=3.0)   # f2 < f3 violated
    with pytest.raises(InvalidParameter):
        TwoGap(f1=2.0, f2=1.0, f3=3.0, a=3.0, b=2.0)   # a < b violated


def test_halfspace_requires_push_toward_plane():
    with pytest.raises(InvalidParameter):
        HalfSpaceStep(f1=[0.0, -1.0], f2=[0.0, 1.0], a=2.0, axis=1)
    f = HalfSpaceStep(f1=[0.0, 1.0], f2=[1.0, 0.0], a=2.0, axis=-1)
    assert f.axis == 1


def test_linear_force_shapes():
    with pytest.raises(InvalidParameter):
        Linear(matrix=[[1.0, 2.0]])
    f = Linear(matrix=[[1.0, 0.0], [0.0, 2.0]])
    np.testing.assert_allclose(f([1.0, 1.0]), [1.0, 2.0])


def test_annulus_validation():
    with pytest.raises(InvalidParameter):
        Annulus(r_inner=2.0, r_outer=1.0)
    with pytest.raises(InvalidParameter):
        Annulus(r_inner=0.0, r_outer=1.0)


#############################################################
# Grids
#############################################################


def test_box_axis_nodes_respect_openness():
    closed = Box(lower=(0.0,), upper=(1.0,))
    nodes = closed.axis_nodes(0, 5)
    assert nodes[0] == 0.0 and nodes[-1] == 1.0

    half_open = Box(lower=(0.0,), upper=(1.0,), lower_open=(True,),
                    upper_open=(False,))
    nodes = half_open.axis_nodes(0, 5)
    assert nodes[0] > 0.0 and nodes[-1] == 1.0

    open_box = Box(lower=(0.0,), upper=(1.0,), lower_open=(True,),
                   upper_open=(True,))
    nodes = open_box.axis_nodes(0, 5)
    assert nodes[0] > 0.0 and nodes[-1] < 1.0


def test_grid_points_shape():
    s = make_scenario(grid=[7])
    assert s.grid_1d().shape == (7,)
    s2 = scenario_from_dict({
        "domain": {"kind": "box", "lower": [0.0, 0.0], "upper": [1.0, 1.0]},
        "force": {"kind": "constant", "vector": [0.0, 1.0]},
        "velocity": [0.0, 0.0],
        "grid": [4, 5],
    })
    assert s2.grid_points().shape == (20, 2)


def test_annulus_grid_is_interior():
    s = scenario_from_dict({
        "domain": {"kind": "annulus", "r_inner": 1.0, "r_outer": 2.0},
        "force": {"kind": "central", "u": "r"},
        "velocity": {"g": "1", "h": "0"},
        "grid": [6, 8],
    })
    pts = s.grid_points()
    assert pts.shape == (48, 2)
    radii = np.hypot(pts[:, 0], pts[:, 1])
    assert np.all(radii > 1.0) and np.all(radii < 2.0)


#############################################################
# Derivative closures and validation hooks
#############################################################


def test_velocity_derivative_defaults_to_central_difference():
    s = make_scenario(velocity="sin(x) + x*x")
    for x in (0.2, 0.5, 0.8):
        ref = oracles.central_difference(lambda t: math.sin(t) + t * t, x)
        assert s.init.velocity_deriv(x) == pytest.approx(ref, abs=1e-8)


def test_mass_derivative_default():
    s = make_scenario(force={"kind": "smooth1d", "f": "1"}, mass="1 + x*x")
    for x in (0.25, 0.75):
        assert s.init.mass_deriv(x) == pytest.approx(2.0 * x, abs=1e-6)


def test_nonpositive_mass_rejected():
    with pytest.raises(InvalidParameter):
        make_scenario(mass="x - 2")


def test_nonpositive_density_rejected():
    with pytest.raises(InvalidParameter):
        make_scenario(density="-1")


def test_velocity_is_zero_multid():
    s = scenario_from_dict({
        "domain": {"kind": "box", "lower": [0.0, 0.0], "upper": [1.0, 1.0]},
        "force": {"kind": "constant", "vector": [0.0, 1.0]},
        "velocity": [0.0, 0.0],
        "grid": [5, 5],
    })
    assert s.velocity_is_zero()
    s2 = scenario_from_dict({
        "domain": {"kind": "box", "lower": [0.0, 0.0], "upper": [1.0, 1.0]},
        "force": {"kind": "constant", "vector": [0.0, 1.0]},
        "velocity": {"matrix": [[1.0, 0.0], [0.0, 1.0]], "offset": [0.0, 0.0]},
        "grid": [5, 5],
    })
    assert not s2.velocity_is_zero()


#############################################################
# JSON round trips and format errors
#############################################################


def test_round_trip_preserves_description(tmp_path):
    data = {
        "domain": {"kind": "box", "lower": [0.0], "upper": [1.0]},
        "force": {"kind": "one_gap", "f1": 2.0, "f2": 1.0, "a": 2.0},
        "velocity": "0",
        "horizon": "inf",
    }
    s = scenario_from_dict(data)
    path = tmp_path / "case.json"
    save_scenario(s, path)
    s2 = load_scenario(path)
    assert scenario_to_dict(s2) == scenario_to_dict(s) == data


def test_round_trip_is_stable_bytes(tmp_path):
    data = {
        "domain": {"kind": "box", "lower": [-5.0], "upper": [5.0]},
        "force": {"kind": "smooth1d", "f": "0"},
        "velocity": "-atan(x)",
        "horizon": 2.0,
        "grid": [101],
    }
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_scenario(scenario_from_dict(data), p1)
    save_scenario(load_scenario(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_unknown_force_kind_names_discriminator():
    with pytest.raises(ScenarioFormatError, match="warp_drive"):
        scenario_from_dict({
            "domain": {"kind": "box", "lower": [0.0], "upper": [1.0]},
            "force": {"kind": "warp_drive"},
        })


def test_unknown_top_level_key():
    with pytest.raises(ScenarioFormatError, match="frobnicate"):
        make_scenario(frobnicate=1)


def test_missing_sections():
    with pytest.raises(ScenarioFormatError):
        scenario_from_dict({"force": {"kind": "smooth1d", "f": "0"}})
    with pytest.raises(ScenarioFormatError):
        scenario_from_dict({"domain": {"kind": "box", "lower": [0], "upper": [1]}})


def test_missing_force_key_is_reported():
    with pytest.raises(ScenarioFormatError, match="f2"):
        make_scenario(force={"kind": "one_gap", "f1": 1.0, "a": 2.0})


def test_velocity_vector_length_checked():
    with pytest.raises(ScenarioFormatError):
        scenario_from_dict({
            "domain": {"kind": "box", "lower": [0.0, 0.0], "upper": [1.0, 1.0]},
            "force": {"kind": "constant", "vector": [0.0, 1.0]},
            "velocity": [0.0, 0.0, 0.0],
        })


def test_mass_rejected_for_multid():
    with pytest.raises(ScenarioFormatError, match="one-dimensional"):
        scenario_from_dict({
            "domain": {"kind": "box", "lower": [0.0, 0.0], "upper": [1.0, 1.0]},
            "force": {"kind": "constant", "vector": [0.0, 1.0]},
            "mass": "1 + x",
        })


def test_bad_horizon_rejected():
    with pytest.raises(ScenarioFormatError):
        make_scenario(horizon="soon")


def test_horizon_inf_string():
    assert make_scenario(horizon="inf").horizon == math.inf


def test_malformed_json_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"domain": }')
    with pytest.raises(ScenarioFormatError, match="line 1"):
        load_scenario(path)


#############################################################
# Blow-up builder
#############################################################


def test_blowup_builder_exponential_curve():
    s = build_blowup_scenario(lambda t: np.exp(-t), samples=64)
    # v(x) = z'(t(x)) = -x and F(y) = z''(t(y)) = y for z = exp(-t)
    for x in (0.2, 0.5, 1.0):
        assert s.init.velocity(x) == pytest.approx(-x, abs=1e-5)
        assert s.force(x) == pytest.approx(x, abs=1e-5)
    assert s.domain.lower_open[0]      # label 0 never moves; keep it out


def test_blowup_builder_rejects_increasing_curve():
    with pytest.raises(NotMonotone):
        build_blowup_scenario(lambda t: 1.0 + t)


def test_blowup_builder_requires_unit_start():
    with pytest.raises(InvalidParameter):
        build_blowup_scenario(lambda t: 0.5 * np.exp(-t))


#############################################################
# Assumption reports
#############################################################


def test_assumptions_smooth_negative_velocity_flagged():
    s = make_scenario(force={"kind": "smooth1d", "f": "1"}, velocity="-1")
    rows = {c.criterion: c for c in assumptions_report(s)}
    assert rows["smooth-positive-velocity"].satisfied == "no"
    assert rows["smooth-general"].satisfied == "no"


def test_assumptions_unbounded_hypotheses_stay_unknown():
    # hypotheses quantified over an unbounded range are sampled to the
    # cutoff; absence of a violation cannot be promoted to "yes"
    s = make_scenario(force={"kind": "smooth1d", "f": "1"}, velocity="1 + x")
    rows = {c.criterion: c for c in assumptions_report(s)}
    assert rows["smooth-positive-velocity"].satisfied == "unknown"


def test_assumptions_gap_velocity_rows():
    s = make_scenario(force={"kind": "one_gap", "f1": 1.0, "f2": 2.0, "a": 2.0},
                      velocity="x")
    rows = {c.criterion: c for c in assumptions_report(s)}
    assert rows["one-gap-zero-velocity"].satisfied == "no"
    assert rows["one-gap-general"].satisfied == "yes"
