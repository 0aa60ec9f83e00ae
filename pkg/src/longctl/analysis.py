"""Equilibria, linearizations and Routh-Hurwitz stability of the closed loop.

The closed-loop vector fields here are the continuous-time counterparts of
the sampled controller (rate limiter and integrator as ODEs) on the backbone
plant. They serve as the nonlinear reference for the closed-form Jacobians.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .config import BackbonePlantParams, ControllerParams
from .controller import (Measurement, car_following_ades, command_rate, desired_distance,
                         integrator_rate, targets)
from .plant import backbone_rhs


@dataclass(frozen=True)
class Equilibrium:
    v_H_star: float
    a_H_star: float
    u_star: float
    e_star: float
    h_star: Optional[float] = None
    v_P_star: Optional[float] = None
    delta_star: float = 0.0

    def free_state(self) -> np.ndarray:
        return np.array([self.v_H_star, self.a_H_star, self.u_star, self.e_star])

    def cf_state(self) -> np.ndarray:
        return np.array([self.h_star, self.v_H_star, self.a_H_star, self.u_star, self.e_star])


@dataclass(frozen=True)
class LinearModel:
    A: np.ndarray
    B: np.ndarray
    states: tuple
    inputs: tuple


FREE_STATES = ("v_H", "a_H", "u", "e")
CF_STATES = ("h", "v_H", "a_H", "u", "e")


def equilibrium_free(params: ControllerParams, delta_star: float) -> Equilibrium:
    return Equilibrium(v_H_star=params.v_max, a_H_star=0.0, u_star=-delta_star,
                       e_star=-delta_star / params.k_i, delta_star=delta_star)


def equilibrium_cf(params: ControllerParams, v_P_star: float, delta_star: float) -> Equilibrium:
    if not 0.0 <= v_P_star <= params.v_max:
        raise ValueError(f"v_P* must lie in [0, v_max], got {v_P_star}")
    return Equilibrium(v_H_star=v_P_star, a_H_star=0.0, u_star=-delta_star,
                       e_star=-delta_star / params.k_i,
                       h_star=desired_distance(v_P_star, params), v_P_star=v_P_star,
                       delta_star=delta_star)


# ---------------------------------------------------------------------------
# nonlinear closed loops

def closed_loop_free(x, w, params: ControllerParams,
                     plant: BackbonePlantParams = BackbonePlantParams()) -> np.ndarray:
    """``d/dt [v_H, a_H, u, e]`` without a leader, input ``w = [delta]``."""
    v, a, u, e = x
    (delta,) = w
    v_des, a_des = targets(Measurement(v), params)
    _, dv, da = backbone_rhs(0.0, v, a, u, delta, None, plant.tau, plant.alpha1)
    du = command_rate(a_des + params.k_i * e, u, params)
    de = integrator_rate(v_des - v, params)
    return np.array([dv, da, du, de])


def closed_loop_cf(x, w, params: ControllerParams,
                   plant: BackbonePlantParams = BackbonePlantParams(),
                   policy_v_P: Optional[float] = None) -> np.ndarray:
    """``d/dt [h, v_H, a_H, u, e]`` behind a leader, input ``w = [delta, v_P]``.

    With ``policy_v_P`` set, the desired distance is evaluated at that fixed
    leader speed instead of the live ``v_P`` (the leader speed is then
    treated as constant inside the range policy).
    """
    h, v, a, u, e = x
    delta, v_P = w
    h_des = None if policy_v_P is None else desired_distance(policy_v_P, params)
    v_des, a_des = car_following_ades(Measurement(v, v_P, h), params, h_des=h_des)
    dh, dv, da = backbone_rhs(h, v, a, u, delta, v_P, plant.tau, plant.alpha1)
    du = command_rate(a_des + params.k_i * e, u, params)
    de = integrator_rate(v_des - v, params)
    return np.array([dh, dv, da, du, de])


# ---------------------------------------------------------------------------
# closed-form linearizations

def linearize_free(params: ControllerParams,
                   plant: BackbonePlantParams = BackbonePlantParams()) -> LinearModel:
    tau, a1 = plant.tau, plant.alpha1
    ku, kv, ki = params.k_u, params.k_v, params.k_i
    A = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [0.0, -1.0 / tau, a1 / tau, 0.0],
        [-ku * kv, 0.0, -ku, ku * ki],
        [-1.0, 0.0, 0.0, 0.0],
    ])
    B = np.array([[0.0], [a1 / tau], [0.0], [0.0]])
    return LinearModel(A, B, FREE_STATES, ("delta",))


def linearize_cf(params: ControllerParams,
                 plant: BackbonePlantParams = BackbonePlantParams()) -> LinearModel:
    """Car-following linearization with the leader speed frozen in the range policy.

    A full Jacobian in ``v_P`` would add ``-k_h t_h`` contributions to the
    ``v_P`` column of ``B`` via the desired distance; they are left out here.
    """
    tau, a1 = plant.tau, plant.alpha1
    ku, kv, ki, kh = params.k_u, params.k_v, params.k_i, params.k_h
    A = np.array([
        [0.0, -1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, -1.0 / tau, a1 / tau, 0.0],
        [ku * kv * kh, -ku * (kv + kh), 0.0, -ku, ku * ki],
        [kh, -1.0, 0.0, 0.0, 0.0],
    ])
    B = np.array([
        [0.0, 1.0],
        [0.0, 0.0],
        [a1 / tau, 0.0],
        [0.0, ku * (kv + kh)],
        [0.0, 1.0],
    ])
    return LinearModel(A, B, CF_STATES, ("delta", "v_P"))


def numeric_jacobian(f: Callable, x, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of ``f`` at ``x`` with per-coordinate relative steps."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(f0)):
        raise FloatingPointError("vector field is not finite at the expansion point")
    J = np.empty((f0.size, x.size))
    for i in range(x.size):
        d = step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += d
        xm[i] -= d
        fp, fm = np.asarray(f(xp), float), np.asarray(f(xm), float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise FloatingPointError(f"vector field not finite near coordinate {i}")
        J[:, i] = (fp - fm) / (2.0 * d)
    return J


# ---------------------------------------------------------------------------
# characteristic polynomial and Routh-Hurwitz

def char_poly(A) -> list[float]:
    """Monic coefficients of ``det(sI - A)``, highest power first.

    Faddeev-LeVerrier trace recursion: ``M_k = A M_{k-1} + c_{k-1} I``,
    ``c_k = -tr(A M_k) / k``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"char_poly needs a square matrix, got shape {A.shape}")
    n = A.shape[0]
    I = np.eye(n)
    coeffs = [1.0]
    M = np.zeros_like(A)
    for k in range(1, n + 1):
        M = A @ M + coeffs[-1] * I
        coeffs.append(-np.trace(A @ M) / k)
    return coeffs


def char_poly_free_closed_form(params: ControllerParams,
                               plant: BackbonePlantParams = BackbonePlantParams()) -> list[float]:
    """Expanded free-driving characteristic polynomial in terms of the gains."""
    tau, a1 = plant.tau, plant.alpha1
    ku, kv, ki = params.k_u, params.k_v, params.k_i
    return [1.0, ku + 1.0 / tau, ku / tau, a1 / tau * ku * kv, a1 / tau * ku * ki]


def char_poly_cf_closed_form(params: ControllerParams,
                             plant: BackbonePlantParams = BackbonePlantParams()) -> list[float]:
    """Expanded car-following characteristic polynomial in terms of the gains."""
    tau, a1 = plant.tau, plant.alpha1
    ku, kv, ki, kh = params.k_u, params.k_v, params.k_i, params.k_h
    return [1.0, ku + 1.0 / tau, ku / tau, a1 / tau * ku * (kh + kv),
            a1 / tau * ku * (ki + kv * kh), a1 / tau * kh * ku * ki]


class Verdict(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass
class RouthResult:
    verdict: Verdict
    array: list = field(default_factory=list)

    @property
    def first_column(self) -> list[float]:
        return [row[0] for row in self.array]


def routh_array(coeffs) -> list[list[float]]:
    """Routh array rows; stops early (short array) at a zero pivot."""
    c = [float(x) for x in coeffs]
    width = (len(c) + 1) // 2
    r0 = c[0::2] + [0.0] * (width - len(c[0::2]))
    r1 = c[1::2] + [0.0] * (width - len(c[1::2]))
    rows = [r0, r1]
    for _ in range(len(c) - 2):
        prev, cur = rows[-2], rows[-1]
        if cur[0] == 0.0:
            break
        nxt = [(cur[0] * prev[j + 1] - prev[0] * cur[j + 1]) / cur[0] for j in range(width - 1)]
        rows.append(nxt + [0.0])
    return rows[:len(c)]


def routh_hurwitz(coeffs) -> RouthResult:
    """Stability verdict of the polynomial with the given coefficients.

    Stable iff every first-column entry is positive. An exact zero in the
    first column is reported as marginal and not resolved further.
    """
    c = [float(x) for x in coeffs]
    if not c or c[0] == 0.0:
        raise ValueError("leading coefficient must be non-zero")
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    if c[0] < 0:
        c = [-x for x in c]
    if len(c) == 1:
        return RouthResult(Verdict.STABLE, [[c[0]]])
    rows = routh_array(c)
    first = [r[0] for r in rows]
    if any(x < 0 for x in first):
        return RouthResult(Verdict.UNSTABLE, rows)
    if any(x == 0 for x in first) or len(rows) < len(c):
        return RouthResult(Verdict.MARGINAL, rows)
    return RouthResult(Verdict.STABLE, rows)


def companion_eigenvalues(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    c = c / c[0]
    n = c.size - 1
    if n == 0:
        return np.array([])
    C = np.zeros((n, n))
    C[0, :] = -c[1:]
    C[1:, :-1] = np.eye(n - 1)
    return np.linalg.eigvals(C)


@dataclass
class StabilityReport:
    mode: str
    model: LinearModel
    coeffs: list
    routh: RouthResult
    eigenvalues: np.ndarray

    @property
    def verdict(self) -> Verdict:
        return self.routh.verdict

    def format(self) -> str:
        lines = [f"mode: {self.mode}",
                 "characteristic polynomial (highest power first):",
                 "  " + ", ".join(f"{c:.10g}" for c in self.coeffs),
                 "Routh array:"]
        for i, row in enumerate(self.routh.array):
            lines.append(f"  s^{len(self.coeffs) - 1 - i}: " + "  ".join(f"{x:12.6g}" for x in row))
        lines.append(f"verdict: {self.verdict.value}")
        lines.append("eigenvalues of A (cross-check):")
        for lam in sorted(self.eigenvalues, key=lambda z: (z.real, z.imag)):
            lines.append(f"  {lam.real:+.6g} {lam.imag:+.6g}j")
        return "\n".join(lines)


def stability_report(mode: str, params: ControllerParams,
                     plant: BackbonePlantParams = BackbonePlantParams()) -> StabilityReport:
    if mode == "free":
        model = linearize_free(params, plant)
    elif mode == "cf":
        model = linearize_cf(params, plant)
    else:
        raise ValueError(f"mode must be 'free' or 'cf', got {mode!r}")
    coeffs = char_poly(model.A)
    return StabilityReport(mode, model, coeffs, routh_hurwitz(coeffs), np.linalg.eigvals(model.A))
