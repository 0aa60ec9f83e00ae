"""Hybrid simulation: a sampled controller over a continuously integrated plant.

Every control period ``T`` the simulator applies due scenario events, samples
the (noise-free) measurement, advances the controller by one Euler step and
holds the resulting command while the plant is integrated over ``[t, t+T]``
with fixed-step RK4.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .config import (CUT_IN, CUT_OUT, LEADER_CHANGE, LeaderProfile, PhysicalPlantParams,
                     ScenarioEvent, ScenarioSpec)
from .controller import ControllerState, Measurement, Mode, Variant, baseline_step
from .plant import (backbone_rhs, emergent_delta_at, low_level_torque, physical_accel,
                    sample_disturbance, torque_for_accel)

CSV_COLUMNS = ("t", "h", "v_P", "v_H", "a_H", "u", "u_des", "a_des", "v_des", "e", "delta", "mode")

N_SUB = 10


class SimulationError(RuntimeError):
    """The simulation diverged or produced a non-finite value."""


def rk4_step(f: Callable, t: float, y: Sequence[float], dt: float) -> tuple:
    """One classical Runge-Kutta step of ``y' = f(t, y)`` on a tuple state."""
    half = 0.5 * dt
    k1 = f(t, y)
    k2 = f(t + half, tuple(a + half * b for a, b in zip(y, k1)))
    k3 = f(t + half, tuple(a + half * b for a, b in zip(y, k2)))
    k4 = f(t + dt, tuple(a + dt * b for a, b in zip(y, k3)))
    s = dt / 6.0
    return tuple(a + s * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
                 for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))


@dataclass
class Leader:
    profile: LeaderProfile
    origin: float   # profile time zero [s]

    def speed(self, t: float) -> float:
        return self.profile(t - self.origin)


@dataclass
class World:
    """Mutable simulation state between control ticks."""

    t: float
    plant: tuple                  # (h, v_H, a_H) backbone or (h, v_H, T) physical
    ctrl: ControllerState
    leader: Optional[Leader] = None

    @property
    def mode(self) -> Mode:
        return Mode.FREE if self.leader is None else Mode.FOLLOWING


def apply_event(world: World, event: ScenarioEvent) -> World:
    """Apply a scenario change in place; ``u`` and ``e`` are never touched."""
    if event.h is not None and not event.h > 0:
        raise ValueError(f"event at t={event.t}: h must be positive")
    origin = event.t
    _, v, x = world.plant
    if event.kind == CUT_IN or (event.kind == CUT_OUT and event.installs_leader):
        world.leader = Leader(event.leader, origin)
        world.plant = (event.h, v, x)
    elif event.kind == CUT_OUT:
        world.leader = None
        world.plant = (0.0, v, x)
    elif event.kind == LEADER_CHANGE:
        if world.leader is None:
            raise ValueError(f"leader_change at t={event.t} without a leader")
        world.leader = Leader(event.leader, origin)
    mode = world.mode
    if world.ctrl.mode is not mode:
        world.ctrl = ControllerState(world.ctrl.u, world.ctrl.e, mode)
    return world


@dataclass
class Trajectory:
    """Uniformly sampled simulation log; absent leader signals are NaN."""

    columns: dict
    T: float
    segment_starts: list = field(default_factory=lambda: [0])
    name: str = "scenario"
    seed: Optional[int] = None
    variant: str = Variant.NONLINEAR.value

    def __getattr__(self, key):
        cols = self.__dict__.get("columns", {})
        if key in cols:
            return cols[key]
        raise AttributeError(key)

    def __len__(self):
        return len(self.columns["t"])

    def segments(self) -> list[tuple[int, int]]:
        bounds = sorted(set(self.segment_starts) | {0}) + [len(self)]
        return [(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        cols = [self.columns[c] for c in CSV_COLUMNS]
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _fmt(v):
    if isinstance(v, str):
        return v
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def run_simulation(spec: ScenarioSpec, seed: Optional[int] = None,
                   variant: Variant | str = Variant.NONLINEAR, n_sub: int = N_SUB,
                   initial_state: Optional[ControllerState] = None) -> Trajectory:
    """Simulate ``spec`` and return the sampled trajectory.

    ``seed`` overrides the Gaussian disturbance seed of the scenario.
    ``initial_state`` defaults to ``u = e = 0``.
    """
    variant = Variant(variant)
    params = spec.controller
    T = params.T
    n_ticks = int(round(spec.duration / T))
    plant = spec.plant
    physical = isinstance(plant, PhysicalPlantParams)
    dist = None if physical else plant.disturbance
    if seed is None and dist is not None:
        seed = dist.seed
    rng = np.random.default_rng(seed)

    v0, a0 = spec.initial_v_H, spec.initial_a_H
    if physical:
        x0 = torque_for_accel(a0, v0, plant.grade_profile(0.0), plant.wind_profile(0.0), plant)
    else:
        x0 = a0
    ctrl = initial_state or ControllerState()
    world = World(0.0, (0.0, v0, x0), ControllerState(ctrl.u, ctrl.e, Mode.FREE))

    event_ticks: dict[int, list[ScenarioEvent]] = {}
    for ev in spec.events:
        k = min(int(math.ceil(ev.t / T - 1e-9)), n_ticks)
        event_ticks.setdefault(k, []).append(ev)

    cols = {c: np.empty(n_ticks + 1) for c in CSV_COLUMNS if c != "mode"}
    modes = []
    h_step = T / n_sub

    for k in range(n_ticks + 1):
        t = k * T
        world.t = t
        for ev in event_ticks.get(k, ()):
            apply_event(world, ev)
        h, v, x = world.plant
        leader = world.leader
        v_P = leader.speed(t) if leader is not None else None
        meas = Measurement(v, v_P, h if leader is not None else None)

        if physical:
            a = physical_accel(v, x, plant.grade_profile(t), plant.wind_profile(t), plant)
            delta = emergent_delta_at(t, v, a, plant)
        else:
            a = x
            delta = sample_disturbance(dist, t, rng, v, a)

        res = baseline_step(world.ctrl, meas, T, params, variant)
        world.ctrl = res.state
        u = res.u

        row = cols
        row["t"][k] = t
        row["h"][k] = h if leader is not None else np.nan
        row["v_P"][k] = v_P if leader is not None else np.nan
        row["v_H"][k] = v
        row["a_H"][k] = a
        row["u"][k] = u
        row["u_des"][k] = res.u_des
        row["a_des"][k] = res.a_des
        row["v_des"][k] = res.v_des
        row["e"][k] = res.state.e
        row["delta"][k] = delta
        modes.append(world.mode.value)

        if k == n_ticks:
            break
        f = _plant_field(plant, u, delta, leader)
        y = world.plant
        ti = t
        for _ in range(n_sub):
            y = rk4_step(f, ti, y, h_step)
            ti += h_step
            if y[1] < 0.0:
                y = (y[0], 0.0, y[2] if physical else max(y[2], 0.0))
        if not all(math.isfinite(c) for c in y):
            raise SimulationError(f"non-finite plant state at tick {k} (t={t:.2f} s)")
        world.plant = y

    cols["mode"] = np.array(modes)
    cols["h_des"] = params.h0 + params.t_h * cols["v_P"]
    starts = sorted({0, *event_ticks})
    return Trajectory(cols, T, starts, spec.name, seed, variant.value)


def _plant_field(plant, u, delta, leader):
    """Right-hand side over one control period with ``u`` held (zero-order hold)."""
    speed = leader.speed if leader is not None else None
    if isinstance(plant, PhysicalPlantParams):
        grade, wind = plant.grade_profile, plant.wind_profile

        def f(t, y):
            h, v, T = y
            phi = grade(t)
            T_des = low_level_torque(u, v, plant, phi)
            dv = physical_accel(v, T, phi, wind(t), plant)
            return (0.0 if speed is None else speed(t) - v), dv, (T_des - T) / plant.tau
        return f

    tau, alpha1 = plant.tau, plant.alpha1
    if plant.disturbance.kind == "emergent":
        phys = plant.disturbance.physical

        def f(t, y):
            h, v, a = y
            d = emergent_delta_at(t, v, a, phys)
            return backbone_rhs(h, v, a, u, d, None if speed is None else speed(t), tau, alpha1)
        return f

    if speed is None:
        return lambda t, y: backbone_rhs(y[0], y[1], y[2], u, delta, None, tau, alpha1)
    return lambda t, y: backbone_rhs(y[0], y[1], y[2], u, delta, speed(t), tau, alpha1)


# ---------------------------------------------------------------------------
# metrics

@dataclass
class Metrics:
    t_start: float
    t_end: float
    mode: str
    overshoot: float
    peak_accel: float
    peak_decel: float
    peak_jerk: float
    min_headway: Optional[float]
    settle_time: float
    collision: bool
    final_speed_error: float
    final_gap_error: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def compute_metrics(traj: Trajectory, tol_settle: float = 0.2,
                    start: int = 0, end: Optional[int] = None) -> Metrics:
    """Metrics over samples ``[start, end)`` of ``traj``.

    Overshoot is measured against the final ``v_des`` of the window, on the
    far side of the first crossing (above it when approaching from below and
    vice versa). ``settle_time`` is measured from the window start.
    """
    end = len(traj) if end is None else end
    if end <= start:
        raise ValueError("empty trajectory window")
    sl = slice(start, end)
    t = traj.t[sl]
    v = traj.v_H[sl]
    vd = traj.v_des[sl]
    a = traj.a_H[sl]
    h = traj.h[sl]
    v_final = vd[-1]
    sign = 1.0 if v_final >= v[0] else -1.0
    err = sign * (v - v_final)
    crossed = np.nonzero(err >= 0)[0]
    overshoot = float(max(err[crossed[0]:].max(), 0.0)) if crossed.size else 0.0

    off = np.nonzero(np.abs(v - vd) > tol_settle)[0]
    settle = float(t[off[-1]] - t[0] + traj.T) if off.size else 0.0
    jerk = float(np.max(np.abs(np.diff(a))) / traj.T) if len(a) > 1 else 0.0

    has_h = ~np.isnan(h)
    min_h = float(h[has_h].min()) if has_h.any() else None
    collision = bool(has_h.any() and (h[has_h] <= 0).any())
    gap_err = None
    if has_h[-1]:
        gap_err = float(h[-1] - traj.h_des[sl][-1])
    return Metrics(
        t_start=float(t[0]), t_end=float(t[-1]),
        mode=str(traj.mode[sl][-1]),
        overshoot=overshoot,
        peak_accel=float(a.max()), peak_decel=float(a.min()), peak_jerk=jerk,
        min_headway=min_h, settle_time=settle, collision=collision,
        final_speed_error=float(v[-1] - vd[-1]), final_gap_error=gap_err,
    )


def segment_metrics(traj: Trajectory, tol_settle: float = 0.2) -> list[Metrics]:
    """Metrics for every inter-event segment."""
    return [compute_metrics(traj, tol_settle, a, b) for a, b in traj.segments()]


def window_mean_speed_error(traj: Trajectory, t0: float, t1: float) -> float:
    """Mean of ``v_H - v_des`` over samples with ``t0 <= t < t1``."""
    m = (traj.t >= t0 - 1e-9) & (traj.t < t1 - 1e-9)
    if not m.any():
        raise ValueError(f"no samples in [{t0}, {t1})")
    return float(np.mean(traj.v_H[m] - traj.v_des[m]))


def max_command_rate(traj: Trajectory) -> float:
    return float(np.max(np.abs(np.diff(traj.u))) / traj.T) if len(traj) > 1 else 0.0


def metrics_json(traj: Trajectory, tol_settle: float = 0.2) -> str:
    doc = {
        "scenario": traj.name,
        "seed": traj.seed,
        "variant": traj.variant,
        "segments": [m.to_dict() for m in segment_metrics(traj, tol_settle)],
        "overall": compute_metrics(traj, tol_settle).to_dict(),
    }
    return json.dumps(doc, indent=2)
