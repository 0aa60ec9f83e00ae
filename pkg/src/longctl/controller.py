"""High-level longitudinal controller.

The command acceleration ``u`` is driven towards ``u_des = a_des + k_i e``
through a smooth rate limiter, while the integrator state ``e`` accumulates a
suppressed speed error. ``a_des``/``v_des`` come from a cruise law without a
leader and from a range-policy car-following law with one. Both ODEs are
advanced with one explicit Euler step per control period.

Baseline variants swap single pieces of that pipeline so the nonlinear
design can be compared against the usual linear/bang-bang choices.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .config import ControllerParams
from .shaping import shape_g, shape_p, shape_q


class Mode(str, enum.Enum):
    FREE = "free"
    FOLLOWING = "following"


class Variant(str, enum.Enum):
    NONLINEAR = "nonlinear"
    BANG_RATE = "bang-rate"
    LINEAR_INTEGRATOR = "linear-integrator"
    LINEAR_P = "linear-p"
    LINEAR_P_SAT = "linear-p-sat"


@dataclass(frozen=True)
class ControllerState:
    u: float = 0.0
    e: float = 0.0
    mode: Mode = Mode.FREE


@dataclass(frozen=True)
class Measurement:
    v_H: float
    v_P: Optional[float] = None
    h: Optional[float] = None

    @property
    def has_leader(self) -> bool:
        return self.h is not None


class StepResult(NamedTuple):
    u: float
    state: ControllerState
    u_des: float
    a_des: float
    v_des: float


def desired_distance(v_P: float, params: ControllerParams) -> float:
    """Constant time-headway range policy, based on the leader's speed."""
    return params.h0 + v_P * params.t_h


def _prop(dv: float, params: ControllerParams, variant: Variant) -> float:
    if variant is Variant.LINEAR_P:
        return params.k_v * dv
    if variant is Variant.LINEAR_P_SAT:
        return min(max(params.k_v * dv, -params.a_sat), params.a_sat)
    return params.a_sat * shape_g(params.k_v * dv / params.a_sat)[0]


def free_driving_targets(v_H: float, params: ControllerParams,
                         variant: Variant = Variant.NONLINEAR) -> tuple[float, float]:
    v_des = params.v_max
    return v_des, _prop(v_des - v_H, params, variant)


def car_following_vdes(v_P: float, h: float, params: ControllerParams,
                       h_des: Optional[float] = None) -> float:
    h_hat = h - (desired_distance(v_P, params) if h_des is None else h_des)
    v = v_P + shape_q(params.k_h * h_hat, params.q_shape)[0]
    return max(min(v, params.v_max), 0.0)


def underlying_accel(v_des: float, h_hat: float, v_hat: float, params: ControllerParams) -> float:
    """Acceleration needed to ride exactly on ``v_des`` (leader speed held constant).

    Only the sign that does not push ``v_des`` further into saturation is kept
    when ``v_des`` sits at 0 or ``v_max``.
    """
    a = shape_q(params.k_h * h_hat, params.q_shape)[1] * params.k_h * v_hat
    if v_des <= 0.0:
        return max(a, 0.0)
    if v_des >= params.v_max:
        return min(a, 0.0)
    return a


def collision_free_accel(v_hat: float, h: float, params: ControllerParams) -> float:
    """Feedforward braking that stops the closing speed before ``h_min``.

    Heaviside convention: H(0) = 0.
    """
    if v_hat >= 0.0:
        return 0.0
    return max(-v_hat * v_hat / (2.0 * max(h - params.h_min, params.eps)), params.a_min)


def car_following_ades(meas: Measurement, params: ControllerParams,
                       variant: Variant = Variant.NONLINEAR,
                       h_des: Optional[float] = None) -> tuple[float, float]:
    """``(v_des, a_des)`` behind a leader.

    ``h_des`` overrides the range policy (used when linearizing with the
    leader speed frozen in the desired distance).
    """
    v_P, h = meas.v_P, meas.h
    if h_des is None:
        h_des = desired_distance(v_P, params)
    v_hat = v_P - meas.v_H
    h_hat = h - h_des
    v_des = car_following_vdes(v_P, h, params, h_des)
    a_des = (_prop(v_des - meas.v_H, params, variant)
             + underlying_accel(v_des, h_hat, v_hat, params)
             + collision_free_accel(v_hat, h, params))
    return v_des, a_des


def targets(meas: Measurement, params: ControllerParams,
            variant: Variant = Variant.NONLINEAR) -> tuple[float, float]:
    """``(v_des, a_des)`` for whichever mode the measurement implies."""
    if meas.has_leader:
        return car_following_ades(meas, params, variant)
    return free_driving_targets(meas.v_H, params, variant)


def command_rate(u_des: float, u: float, params: ControllerParams,
                 variant: Variant = Variant.NONLINEAR) -> float:
    if variant is Variant.BANG_RATE:
        d = u_des - u
        return params.r_max * ((d > 0) - (d < 0))
    return params.r_max * shape_g(params.k_u / params.r_max * (u_des - u))[0]


def integrator_rate(dv: float, params: ControllerParams,
                    variant: Variant = Variant.NONLINEAR) -> float:
    if variant is Variant.LINEAR_INTEGRATOR:
        return dv
    return params.sigma * shape_p(dv / params.sigma, params.p_shape)[0]


def baseline_step(state: ControllerState, meas: Measurement, dt: float,
                  params: ControllerParams, variant: Variant | str) -> StepResult:
    """One control period of the controller with ``variant``'s component swapped in."""
    variant = Variant(variant)
    mode = Mode.FOLLOWING if meas.has_leader else Mode.FREE
    v_des, a_des = targets(meas, params, variant)
    u_des = a_des + params.k_i * state.e
    u = state.u + dt * command_rate(u_des, state.u, params, variant)
    e = state.e + dt * integrator_rate(v_des - meas.v_H, params, variant)
    if not (math.isfinite(u) and math.isfinite(e)):
        raise FloatingPointError(f"controller produced non-finite state (u={u}, e={e})")
    return StepResult(u, ControllerState(u, e, mode), u_des, a_des, v_des)


def controller_step(state: ControllerState, meas: Measurement, dt: float,
                    params: ControllerParams) -> StepResult:
    """Advance the full nonlinear controller by ``dt``.

    Returns the new command (held over the next period) together with the
    next state and the intermediates ``u_des``, ``a_des`` and ``v_des``.
    ``u`` and ``e`` carry over unchanged when the mode switches.
    """
    return baseline_step(state, meas, dt, params, Variant.NONLINEAR)
