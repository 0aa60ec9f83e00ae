"""Continuous-time vehicle models.

Two plants are provided:

* the backbone model, where the host acceleration ``a_H`` is a first-order
  lag of the command ``u`` plus a lumped disturbance ``delta``;
* the physical model, where a torque ``T`` drives a rigid vehicle against
  grade, rolling resistance and drag, with ``T`` tracking the torque demanded
  by a feedback-linearizing low-level controller.

Driving the backbone model with :func:`emergent_delta` reproduces the
physical model exactly (up to integration error).
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np

from .config import BackbonePlantParams, DisturbanceModel, PhysicalPlantParams


class BackboneState(NamedTuple):
    h: float    # gap to leader [m]; ignored without a leader
    v_H: float
    a_H: float


class PhysicalState(NamedTuple):
    h: float
    v_H: float
    T: float    # actuation torque [N m]


def backbone_rhs(h, v_H, a_H, u, delta, v_P, tau, alpha1):
    """Tuple-level backbone dynamics; ``v_P=None`` freezes ``h``."""
    dh = 0.0 if v_P is None else v_P - v_H
    return dh, a_H, (-a_H + alpha1 * (u + delta)) / tau


def backbone_deriv(state: BackboneState, u: float, delta: float,
                   v_P: Optional[float], plant: BackbonePlantParams) -> BackboneState:
    """Time derivative of the backbone state (car-following when ``v_P`` is given)."""
    return BackboneState(*backbone_rhs(state.h, state.v_H, state.a_H, u, delta, v_P,
                                       plant.tau, plant.alpha1))


def low_level_torque(u: float, v_H: float, est: PhysicalPlantParams, phi_hat: float = 0.0) -> float:
    """Desired torque from the feedback-linearizing low-level law.

    Uses the nominal mass, rolling resistance and drag of ``est`` and the
    estimated grade ``phi_hat`` [rad].
    """
    m_hat = est.m_nominal
    g = est.g_const
    return (est.R / est.eta) * (
        m_hat * u
        + m_hat * g * math.sin(phi_hat)
        + est.mu_nominal * m_hat * g * math.cos(phi_hat)
        + est.rho_nominal * v_H * v_H
    )


def physical_accel(v_H: float, T: float, phi: float, v_w: float, p: PhysicalPlantParams) -> float:
    """Host acceleration from the force balance on the rigid vehicle."""
    g = p.g_const
    w = v_H + v_w
    force = p.eta * T / p.R - p.m * g * math.sin(phi) - p.mu * p.m * g * math.cos(phi) - p.rho * w * w
    return force / p.m_e


def torque_for_accel(a_H: float, v_H: float, phi: float, v_w: float, p: PhysicalPlantParams) -> float:
    """Inverse of :func:`physical_accel`: the torque that yields ``a_H``."""
    g = p.g_const
    w = v_H + v_w
    return (p.R / p.eta) * (p.m_e * a_H + p.m * g * math.sin(phi)
                            + p.mu * p.m * g * math.cos(phi) + p.rho * w * w)


def physical_deriv(state: PhysicalState, T_des: float, phi: float, v_w: float,
                   p: PhysicalPlantParams, v_P: Optional[float] = None) -> PhysicalState:
    dh = 0.0 if v_P is None else v_P - state.v_H
    return PhysicalState(dh, physical_accel(state.v_H, state.T, phi, v_w, p),
                         (T_des - state.T) / p.tau)


def emergent_delta(v_H: float, a_H: float, phi: float, phi_dot: float, v_w: float,
                   v_w_dot: float, p: PhysicalPlantParams, phi_hat: Optional[float] = None) -> float:
    """Lumped disturbance seen by the backbone model.

    Collects the grade/rolling-resistance mismatch, the grade-rate term and
    the drag/wind terms. ``phi_hat`` defaults to the true grade.
    """
    if phi_hat is None:
        phi_hat = phi
    g = p.g_const
    m_hat = p.m_nominal
    a2 = p.alpha2
    mu, rho = p.mu, p.rho
    w = v_H + v_w
    grade = (math.sin(phi_hat) + p.mu_nominal * math.cos(phi_hat)
             - a2 * (math.sin(phi) + mu * math.cos(phi))) * g
    grade_rate = a2 * g * p.tau * phi_dot * (mu * math.sin(phi) - math.cos(phi))
    drag = (p.rho_nominal * v_H * v_H - rho * w * w - 2.0 * rho * p.tau * w * (a_H + v_w_dot)) / m_hat
    return grade + grade_rate + drag


def emergent_delta_at(t: float, v_H: float, a_H: float, p: PhysicalPlantParams) -> float:
    """:func:`emergent_delta` with grade and wind read from the profiles of ``p``."""
    return emergent_delta(v_H, a_H,
                          p.grade_profile(t), p.grade_profile.derivative(t),
                          p.wind_profile(t), p.wind_profile.derivative(t), p)


def sample_disturbance(model: DisturbanceModel, t: float, rng: np.random.Generator,
                       v_H: float = 0.0, a_H: float = 0.0) -> float:
    """Disturbance value for the control period starting at ``t``.

    The simulator calls this once per period and holds the result, which makes
    the Gaussian model a zero-order-hold noise. For the emergent model the
    value depends on the current ``v_H``/``a_H``.
    """
    if model.kind == "constant":
        return model.value
    if model.kind == "gaussian":
        if model.std == 0:
            return model.mean
        return float(rng.normal(model.mean, model.std))
    return emergent_delta_at(t, v_H, a_H, model.physical)
