import json
from dataclasses import asdict

import pytest

from longctl.config import (BackbonePlantParams, ControllerParams, DisturbanceModel, LeaderProfile,
                            PhysicalPlantParams, Profile, ScenarioError, ScenarioEvent, ScenarioSpec,
                            builtin_scenario, dump_scenario, load_scenario)

TABLE = dict(h0=5, t_h=1, h_min=5, eps=0.5, v_max=30, r_max=5, a_sat=4, a_min=-10, a_com=0.5,
             k_v=0.8, k_h=1, k_i=0.08, k_u=10, c=0.5, n=2, sigma=1, T=0.02)


def test_defaults_match_nominal_table():
    assert asdict(ControllerParams()) == TABLE
    plant = BackbonePlantParams()
    assert (plant.tau, plant.alpha1) == (0.5, 1.0)
    assert plant.disturbance.kind == "constant" and plant.disturbance.value == -0.25


def test_minimal_document_gets_defaults():
    spec = load_scenario('{"duration": 100, "initial_v_H": 25}')
    assert spec.duration == 100 and spec.initial_v_H == 25 and spec.initial_a_H == 0
    assert spec.controller == ControllerParams()
    assert spec.controller.h0 == 5 and spec.controller.t_h == 1 and spec.controller.k_u == 10
    assert spec.events == ()


def test_event_order_error():
    doc = {"duration": 100, "initial": {"v_H": 25}, "events": [
        {"t": 20, "kind": "cut_in", "h": 30, "leader": {"breakpoints": [[0, 20]]}},
        {"t": 10, "kind": "cut_out"}]}
    with pytest.raises(ScenarioError, match="events not strictly increasing"):
        load_scenario(json.dumps(doc))


def test_hmin_error():
    with pytest.raises(ScenarioError, match="h_min ≤ h0 violated"):
        load_scenario('{"duration": 10, "initial_v_H": 1, "controller": {"h_min": 10, "h0": 5}}')


def test_parse_error_has_line():
    with pytest.raises(ScenarioError, match="line 2"):
        load_scenario('{"duration": 10,\n "initial_v_H": }')


@pytest.mark.parametrize("doc, msg", [
    ({"duration": 10}, "initial.v_H"),
    ({"duration": 10, "initial_v_H": 1, "controller": {"k_q": 1}}, "unknown field"),
    ({"duration": 10, "initial_v_H": 1, "controller": {"k_v": "fast"}}, "controller.k_v"),
    ({"duration": 10, "initial_v_H": 1, "controller": {"k_v": -1}}, "gains > 0"),
    ({"duration": 10, "initial_v_H": 1, "events": [{"t": 1, "kind": "cut_in", "h": -3,
                                                      "leader": {"breakpoints": [[0, 1]]}}]}, "h > 0"),
    ({"duration": 10, "initial_v_H": 1, "events": [{"t": 11, "kind": "cut_out"}]}, "outside"),
    ({"duration": 10, "initial_v_H": 1, "events": [{"t": 1, "kind": "cut_in", "h": 3,
                                                      "leader": {"breakpoints": [[0, -1]]}}]}, "v_P ≥ 0"),
    ({"duration": 10, "initial_v_H": 1, "disturbance": {"kind": "gaussian", "std": -1}}, "std ≥ 0"),
    ({"duration": 10, "initial_v_H": 1, "plant": {"model": "rocket"}}, "plant.model"),
])
def test_validation_errors(doc, msg):
    with pytest.raises(ScenarioError, match=msg):
        load_scenario(json.dumps(doc))


@pytest.mark.parametrize("name", ["highway", "local", "freedrive-comparison"])
def test_builtin_round_trip(name):
    spec = builtin_scenario(name)
    again = load_scenario(dump_scenario(spec))
    assert again == spec
    assert dump_scenario(again) == dump_scenario(spec)


def test_round_trip_physical_and_noise():
    phys = PhysicalPlantParams(m_hat=1400.0, grade_profile=Profile([(0, 0), (10, 0.02)]))
    spec = ScenarioSpec(duration=5, initial_v_H=10, plant=phys)
    assert load_scenario(dump_scenario(spec)) == spec
    spec = ScenarioSpec(duration=5, initial_v_H=10,
                        plant=BackbonePlantParams(disturbance=DisturbanceModel("gaussian", seed=3)))
    assert load_scenario(dump_scenario(spec)) == spec
    spec = ScenarioSpec(duration=5, initial_v_H=10,
                        plant=BackbonePlantParams(disturbance=DisturbanceModel("emergent")))
    assert load_scenario(dump_scenario(spec)) == spec


def test_highway_timeline():
    spec = builtin_scenario("highway")
    assert spec.initial_v_H == 25 and spec.controller.v_max == 30
    got = [(ev.t, ev.kind, ev.leader(0.0), ev.h) for ev in spec.events]
    assert got == [(20, "cut_in", 25, 60), (40, "cut_in", 20, 15),
                   (60, "cut_out", 25, 40), (80, "cut_in", 30, 10)]


def test_local_and_freedrive():
    local = builtin_scenario("local")
    assert local.initial_v_H == 15 and local.controller.v_max == 20
    assert [ev.t for ev in local.events] == [20, 40, 60, 80]
    free = builtin_scenario("freedrive-comparison")
    assert free.events == () and free.initial_v_H == 20


def test_unknown_builtin():
    with pytest.raises(ScenarioError, match="unknown builtin"):
        builtin_scenario("autobahn")


def test_profile_interpolation():
    prof = Profile([(0, 0), (10, 5), (20, 5)])
    assert prof(-1) == 0 and prof(5) == 2.5 and prof(30) == 5
    assert prof.derivative(5) == 0.5 and prof.derivative(15) == 0 and prof.derivative(25) == 0
    with pytest.raises(ScenarioError):
        Profile([(1, 0), (1, 2)])


def test_event_shapes():
    with pytest.raises(ScenarioError):
        ScenarioEvent(1.0, "cut_in", h=10.0)
    with pytest.raises(ScenarioError):
        ScenarioEvent(1.0, "cut_out", h=10.0)
    ev = ScenarioEvent(1.0, "cut_out")
    assert not ev.installs_leader
    assert ScenarioEvent(1.0, "leader_change", leader=LeaderProfile.constant(3)).leader(99) == 3
