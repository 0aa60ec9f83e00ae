import numpy as np
import pytest

from longctl.config import ControllerParams
from longctl.controller import (ControllerState, Measurement, Mode, Variant, baseline_step,
                                car_following_ades, car_following_vdes, collision_free_accel,
                                controller_step, desired_distance, free_driving_targets,
                                underlying_accel)

P = ControllerParams()
T = P.T

# reference values from mpmath at 40 digits, default parameters
FOUR_G2 = 3.2152539043816507
A_DES_299 = 0.07997369662940612
CF = {  # (v_P, v_H, h): (v_des, a_des)
    (20.0, 25.0, 15.0): (16.894443734154465, -5.101898910737757),
    (30.0, 25.0, 10.0): (25.035830042332515, 0.5322526362388529),
    (25.0, 30.0, 60.0): (30.0, -0.6864378919626836),
}


def test_desired_distance():
    assert [desired_distance(v, P) for v in (0, 20, 30)] == [5, 25, 35]


def test_free_driving_targets():
    assert free_driving_targets(30.0, P) == (30.0, 0.0)
    assert free_driving_targets(20.0, P)[1] == pytest.approx(FOUR_G2, rel=1e-13)
    assert free_driving_targets(20.0, P)[1] == pytest.approx(3.22, abs=0.01)
    assert free_driving_targets(29.9, P)[1] == pytest.approx(A_DES_299, rel=1e-12)
    for v in np.linspace(0, 60, 61):
        assert abs(free_driving_targets(v, P)[1]) < P.a_sat


def test_car_following_vdes():
    assert car_following_vdes(20.0, 25.0, P) == 20.0
    assert car_following_vdes(25.0, 60.0, P) == 30.0
    v = car_following_vdes(2.0, 5.0, P, h_des=7.0)
    assert v == pytest.approx(0.7123817764885130, rel=1e-12)
    assert 0 <= v < 2.0


def test_underlying_accel():
    assert underlying_accel(10.0, 0.0, 2.0, P) == pytest.approx(2.0)
    assert underlying_accel(P.v_max, 0.0, 1.5, P) == 0.0
    assert underlying_accel(0.0, 0.0, -0.7, P) == 0.0
    assert underlying_accel(P.v_max, 0.0, -1.5, P) == pytest.approx(-1.5)


def test_collision_free_accel():
    assert collision_free_accel(5.0, 30.0, P) == 0.0
    assert collision_free_accel(0.0, 6.0, P) == 0.0
    assert collision_free_accel(-5.0, 30.0, P) == pytest.approx(-0.5)
    assert collision_free_accel(-20.0, 7.0, P) == -10.0
    for vh in np.linspace(-30, 30, 61):
        for h in (0.1, 5, 5.3, 10, 100):
            assert P.a_min <= collision_free_accel(vh, h, P) <= 0


def test_car_following_ades():
    assert car_following_ades(Measurement(20.0, 20.0, 25.0), P) == (20.0, 0.0)
    for (v_P, v_H, h), (vd, ad) in CF.items():
        got = car_following_ades(Measurement(v_H, v_P, h), P)
        assert got[0] == pytest.approx(vd, rel=1e-12)
        assert got[1] == pytest.approx(ad, rel=1e-12)
    assert car_following_ades(Measurement(25.0, 20.0, 15.0), P)[1] < -2
    assert car_following_ades(Measurement(25.0, 30.0, 10.0), P)[1] > 0


def test_controller_step_examples():
    st = ControllerState(0.0, 0.0, Mode.FREE)
    r = controller_step(st, Measurement(30.0), T, P)
    assert r.state == st and r.u == 0.0
    # saturated regime: u_des - u = 80
    r = controller_step(ControllerState(0.0, 1000.0), Measurement(30.0), T, P)
    assert r.u == pytest.approx(P.r_max * T, rel=5e-3)
    # linear regime: u_des - u = 0.01
    e = 0.01 / P.k_i
    r = controller_step(ControllerState(0.0, e), Measurement(30.0), T, P)
    assert r.u_des == pytest.approx(0.01)
    assert r.u == pytest.approx(0.01 * P.k_u * T, rel=1e-3)


def test_stationary_at_equilibria():
    delta = -0.25
    eq = ControllerState(-delta, -delta / P.k_i, Mode.FREE)
    r = controller_step(eq, Measurement(30.0), T, P)
    assert r.u == pytest.approx(eq.u, abs=1e-15) and r.state.e == pytest.approx(eq.e, abs=1e-15)
    eq = ControllerState(-delta, -delta / P.k_i, Mode.FOLLOWING)
    r = controller_step(eq, Measurement(20.0, 20.0, 25.0), T, P)
    assert r.u == pytest.approx(eq.u, abs=1e-15) and r.state.e == pytest.approx(eq.e, abs=1e-15)
    assert r.state.mode is Mode.FOLLOWING


def test_step_bounds_random():
    rng = np.random.default_rng(3)
    for _ in range(2000):
        st = ControllerState(rng.uniform(-12, 6), rng.uniform(-50, 50))
        if rng.random() < 0.5:
            m = Measurement(rng.uniform(0, 40))
        else:
            m = Measurement(rng.uniform(0, 40), rng.uniform(0, 40), rng.uniform(0.1, 120))
        r = controller_step(st, m, T, P)
        assert abs(r.u - st.u) <= P.r_max * T + 1e-12
        assert abs(r.state.e - st.e) <= 0.75 * P.sigma * T + 1e-12
        assert r.state.mode is (Mode.FOLLOWING if m.has_leader else Mode.FREE)


def test_baseline_variants():
    st = ControllerState(0.0, 0.0)
    r = baseline_step(st, Measurement(20.0), T, P, Variant.BANG_RATE)
    assert r.u == P.r_max * T
    r = baseline_step(st, Measurement(20.0), T, P, "linear-integrator")
    assert r.state.e == pytest.approx(10 * T)
    r = baseline_step(st, Measurement(20.0), T, P, Variant.LINEAR_P_SAT)
    assert r.a_des == 4.0
    r = baseline_step(st, Measurement(20.0), T, P, Variant.LINEAR_P)
    assert r.a_des == pytest.approx(8.0)
    r = baseline_step(st, Measurement(20.0), T, P, Variant.NONLINEAR)
    assert r.state.e == pytest.approx(T * P.sigma * 0.002999100269919024, rel=1e-10)
    with pytest.raises(ValueError):
        baseline_step(st, Measurement(20.0), T, P, "pid")
