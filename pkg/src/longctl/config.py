"""Parameter and scenario data model, validation and JSON ingestion.

Scenario documents are JSON with SI units throughout::

    {
      "name": "highway",
      "duration": 100,
      "initial": {"v_H": 25, "a_H": 0},
      "controller": {"v_max": 30, ...},
      "plant": {"model": "backbone", "tau": 0.5, "alpha1": 1},
      "disturbance": {"kind": "constant", "value": -0.25},
      "events": [
        {"t": 20, "kind": "cut_in", "h": 60, "leader": {"breakpoints": [[0, 25]]}},
        {"t": 60, "kind": "cut_out", "h": 40, "leader": {"breakpoints": [[0, 25]]}}
      ]
    }

Omitted controller/plant values fall back to the defaults below (the
controller defaults are the nominal tuning used throughout this package).
Leader breakpoint times are measured from the event that installs the leader.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from functools import cached_property
from typing import Optional, Union

from .shaping import PShape, QShape


class ScenarioError(ValueError):
    """Raised for malformed or invalid scenario documents."""


@dataclass(frozen=True)
class ControllerParams:
    h0: float = 5.0        # standstill distance [m]
    t_h: float = 1.0       # time headway [s]
    h_min: float = 5.0     # minimum allowed distance [m]
    eps: float = 0.5       # singularity guard [m]
    v_max: float = 30.0    # preset maximum speed [m/s]
    r_max: float = 5.0     # max command rate [m/s^3]
    a_sat: float = 4.0     # max allowed acceleration [m/s^2]
    a_min: float = -10.0   # physical minimum acceleration [m/s^2]
    a_com: float = 0.5     # comfortable acceleration [m/s^2]
    k_v: float = 0.8
    k_h: float = 1.0
    k_i: float = 0.08
    k_u: float = 10.0
    c: float = 0.5         # q slackness [m/s]
    n: int = 2             # p order
    sigma: float = 1.0     # integrator effective range [m/s]
    T: float = 0.02        # control period [s]

    def __post_init__(self):
        for name in ("h0", "t_h", "h_min", "eps", "v_max", "r_max", "a_sat",
                     "a_com", "c", "sigma", "T"):
            _positive(self, name)
        for name in ("k_v", "k_h", "k_i", "k_u"):
            _positive(self, name, "gains > 0 violated")
        if not self.a_min < 0:
            raise ScenarioError(f"a_min < 0 violated (a_min={self.a_min})")
        if not self.a_com <= self.a_sat:
            raise ScenarioError("a_com ≤ a_sat violated")
        if not self.h_min <= self.h0:
            raise ScenarioError("h_min ≤ h0 violated")
        if int(self.n) != self.n or self.n < 1:
            raise ScenarioError("n ≥ 1 violated (integer order required)")

    @cached_property
    def p_shape(self) -> PShape:
        return PShape(int(self.n))

    @cached_property
    def q_shape(self) -> QShape:
        return QShape(b=self.a_com / self.k_h, c=self.c)


def _positive(obj, name, msg=None):
    value = getattr(obj, name)
    if not (math.isfinite(value) and value > 0):
        raise ScenarioError(msg or f"{name} > 0 violated ({name}={value})")


class Profile:
    """Piecewise-linear signal with constant extrapolation at both ends."""

    def __init__(self, breakpoints):
        pts = [(float(t), float(y)) for t, y in breakpoints]
        if not pts:
            raise ScenarioError("profile needs at least one breakpoint")
        ts = [t for t, _ in pts]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ScenarioError("profile breakpoint times not strictly increasing")
        if not all(math.isfinite(v) for pt in pts for v in pt):
            raise ScenarioError("profile breakpoints must be finite")
        self._t = ts
        self._y = [y for _, y in pts]

    @classmethod
    def constant(cls, value: float) -> "Profile":
        return cls([(0.0, value)])

    @property
    def breakpoints(self) -> list[list[float]]:
        return [[t, y] for t, y in zip(self._t, self._y)]

    def __call__(self, t: float) -> float:
        ts, ys = self._t, self._y
        if t <= ts[0]:
            return ys[0]
        if t >= ts[-1]:
            return ys[-1]
        i = bisect.bisect_right(ts, t)
        t0, t1 = ts[i - 1], ts[i]
        return ys[i - 1] + (ys[i] - ys[i - 1]) * (t - t0) / (t1 - t0)

    def derivative(self, t: float) -> float:
        """Right-derivative of the profile (0 outside the breakpoint span)."""
        ts, ys = self._t, self._y
        if t < ts[0] or t >= ts[-1]:
            return 0.0
        i = bisect.bisect_right(ts, t)
        return (ys[i] - ys[i - 1]) / (ts[i] - ts[i - 1])

    def __eq__(self, other):
        return isinstance(other, Profile) and self.breakpoints == other.breakpoints

    def __repr__(self):
        return f"Profile({self.breakpoints})"


class LeaderProfile(Profile):
    """Leader speed v_P(t) [m/s]; must be non-negative everywhere."""

    def __init__(self, breakpoints):
        super().__init__(breakpoints)
        if min(self._y) < 0:
            raise ScenarioError("leader speed v_P ≥ 0 violated")

    @classmethod
    def constant(cls, value: float) -> "LeaderProfile":
        return cls([(0.0, value)])


@dataclass(frozen=True)
class PhysicalPlantParams:
    """Torque-level vehicle model parameters.

    These defaults are ordinary passenger-car magnitudes, not values taken
    from any experiment. ``m_hat=None`` means "choose m_hat = m_e", i.e. a
    mass ratio alpha1 of exactly 1.
    """

    m: float = 1500.0
    m_hat: Optional[float] = None
    J: float = 2.0
    R: float = 0.3
    eta: float = 10.0
    mu: float = 0.01
    mu_hat: Optional[float] = None
    rho: float = 0.4
    rho_hat: Optional[float] = None
    g_const: float = 9.81
    tau: float = 0.5
    grade_profile: Profile = field(default_factory=lambda: Profile.constant(0.0))
    wind_profile: Profile = field(default_factory=lambda: Profile.constant(0.0))

    def __post_init__(self):
        for name in ("m", "J", "R", "eta", "tau", "g_const"):
            _positive(self, name)
        for name in ("m_hat",):
            if getattr(self, name) is not None:
                _positive(self, name)
        for name in ("mu", "rho", "mu_hat", "rho_hat"):
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise ScenarioError(f"{name} ≥ 0 violated")

    @property
    def m_e(self) -> float:
        return self.m + self.J / self.R**2

    @property
    def m_nominal(self) -> float:
        return self.m_e if self.m_hat is None else self.m_hat

    @property
    def mu_nominal(self) -> float:
        return self.mu if self.mu_hat is None else self.mu_hat

    @property
    def rho_nominal(self) -> float:
        return self.rho if self.rho_hat is None else self.rho_hat

    @property
    def alpha1(self) -> float:
        return self.m_nominal / self.m_e

    @property
    def alpha2(self) -> float:
        return self.m / self.m_nominal


@dataclass(frozen=True)
class DisturbanceModel:
    """Lumped disturbance source.

    kind is one of ``constant`` (uses ``value``), ``gaussian`` (a fresh
    N(mean, std**2) draw held over each control period) or ``emergent``
    (evaluated from the physical parameters in ``physical``).
    """

    kind: str = "constant"
    value: float = -0.25
    mean: float = -0.25
    std: float = 0.25
    seed: int = 0
    physical: Optional[PhysicalPlantParams] = None

    def __post_init__(self):
        if self.kind not in ("constant", "gaussian", "emergent"):
            raise ScenarioError(f"unknown disturbance kind {self.kind!r}")
        if not self.std >= 0:
            raise ScenarioError("std ≥ 0 violated")
        if self.kind == "emergent" and self.physical is None:
            object.__setattr__(self, "physical", PhysicalPlantParams())


@dataclass(frozen=True)
class BackbonePlantParams:
    tau: float = 0.5
    alpha1: float = 1.0
    disturbance: DisturbanceModel = field(default_factory=DisturbanceModel)

    def __post_init__(self):
        _positive(self, "tau")
        _positive(self, "alpha1")


PlantParams = Union[BackbonePlantParams, PhysicalPlantParams]

CUT_IN, CUT_OUT, LEADER_CHANGE = "cut_in", "cut_out", "leader_change"


@dataclass(frozen=True)
class ScenarioEvent:
    """A scenario change at time ``t``.

    ``cut_in`` installs a new leader at gap ``h``; ``cut_out`` removes the
    leader, or replaces it when ``h``/``leader`` are given; ``leader_change``
    swaps the current leader's speed profile.
    """

    t: float
    kind: str
    h: Optional[float] = None
    leader: Optional[LeaderProfile] = None

    def __post_init__(self):
        if self.kind not in (CUT_IN, CUT_OUT, LEADER_CHANGE):
            raise ScenarioError(f"unknown event kind {self.kind!r}")
        if self.kind == CUT_IN and (self.h is None or self.leader is None):
            raise ScenarioError(f"cut_in at t={self.t} needs h and leader")
        if self.kind == LEADER_CHANGE and self.leader is None:
            raise ScenarioError(f"leader_change at t={self.t} needs leader")
        if self.kind == CUT_OUT and (self.h is None) != (self.leader is None):
            raise ScenarioError(f"cut_out at t={self.t}: give both h and leader, or neither")
        if self.h is not None and not self.h > 0:
            raise ScenarioError(f"h > 0 violated for {self.kind} at t={self.t}")

    @property
    def installs_leader(self) -> bool:
        return self.h is not None


@dataclass(frozen=True)
class ScenarioSpec:
    duration: float
    initial_v_H: float
    initial_a_H: float = 0.0
    controller: ControllerParams = field(default_factory=ControllerParams)
    plant: PlantParams = field(default_factory=BackbonePlantParams)
    events: tuple[ScenarioEvent, ...] = ()
    name: str = "scenario"

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        _positive(self, "duration")
        if not (math.isfinite(self.initial_v_H) and self.initial_v_H >= 0):
            raise ScenarioError("initial v_H ≥ 0 violated")
        times = [ev.t for ev in self.events]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ScenarioError("events not strictly increasing")
        if any(t < 0 or t > self.duration for t in times):
            raise ScenarioError("event time outside [0, duration]")

    @property
    def disturbance(self) -> Optional[DisturbanceModel]:
        if isinstance(self.plant, BackbonePlantParams):
            return self.plant.disturbance
        return None

    def with_overrides(self, controller: Optional[dict] = None, **plant_fields) -> "ScenarioSpec":
        ctrl = replace(self.controller, **(controller or {}))
        plant = replace(self.plant, **plant_fields) if plant_fields else self.plant
        return replace(self, controller=ctrl, plant=plant)


# ---------------------------------------------------------------------------
# JSON (de)serialization

_CONTROLLER_KEYS = {f.name for f in fields(ControllerParams)}
_PHYSICAL_KEYS = {f.name for f in fields(PhysicalPlantParams)} - {"grade_profile", "wind_profile"}


def _require_dict(obj, where):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object, got {type(obj).__name__}")
    return obj


def _unknown(keys, allowed, where):
    extra = sorted(set(keys) - set(allowed))
    if extra:
        raise ScenarioError(f"{where}: unknown field(s) {', '.join(extra)}")


def _number(obj, key, where, default=None):
    if key not in obj:
        if default is None:
            raise ScenarioError(f"{where}: missing field '{key}'")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _profile(obj, where, cls=Profile):
    obj = _require_dict(obj, where)
    bps = obj.get("breakpoints")
    if not isinstance(bps, list) or not all(isinstance(b, list) and len(b) == 2 for b in bps):
        raise ScenarioError(f"{where}.breakpoints: expected a list of [t, value] pairs")
    try:
        return cls(bps)
    except ScenarioError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _physical_from_dict(obj, where) -> PhysicalPlantParams:
    obj = _require_dict(obj, where)
    _unknown(obj, _PHYSICAL_KEYS | {"model", "grade", "wind"}, where)
    kw = {k: _number(obj, k, where) for k in _PHYSICAL_KEYS if k in obj and obj[k] is not None}
    if "grade" in obj:
        kw["grade_profile"] = _profile(obj["grade"], f"{where}.grade")
    if "wind" in obj:
        kw["wind_profile"] = _profile(obj["wind"], f"{where}.wind")
    return PhysicalPlantParams(**kw)


def _physical_to_dict(p: PhysicalPlantParams) -> dict:
    d = {k: getattr(p, k) for k in sorted(_PHYSICAL_KEYS) if getattr(p, k) is not None}
    d["grade"] = {"breakpoints": p.grade_profile.breakpoints}
    d["wind"] = {"breakpoints": p.wind_profile.breakpoints}
    return d


def _disturbance_from_dict(obj, where) -> DisturbanceModel:
    obj = _require_dict(obj, where)
    kind = obj.get("kind", "constant")
    if kind == "constant":
        _unknown(obj, {"kind", "value"}, where)
        return DisturbanceModel("constant", value=_number(obj, "value", where, -0.25))
    if kind == "gaussian":
        _unknown(obj, {"kind", "mean", "std", "seed"}, where)
        seed = obj.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ScenarioError(f"{where}.seed: expected an integer")
        return DisturbanceModel("gaussian", mean=_number(obj, "mean", where, -0.25),
                                std=_number(obj, "std", where, 0.25), seed=seed)
    if kind == "emergent":
        _unknown(obj, {"kind", "physical"}, where)
        phys = _physical_from_dict(obj.get("physical", {}), f"{where}.physical")
        return DisturbanceModel("emergent", physical=phys)
    raise ScenarioError(f"{where}.kind: unknown disturbance kind {kind!r}")


def _disturbance_to_dict(d: DisturbanceModel) -> dict:
    if d.kind == "constant":
        return {"kind": "constant", "value": d.value}
    if d.kind == "gaussian":
        return {"kind": "gaussian", "mean": d.mean, "std": d.std, "seed": d.seed}
    return {"kind": "emergent", "physical": _physical_to_dict(d.physical)}


def _event_from_dict(obj, where) -> ScenarioEvent:
    obj = _require_dict(obj, where)
    _unknown(obj, {"t", "kind", "h", "leader"}, where)
    kind = obj.get("kind")
    if not isinstance(kind, str):
        raise ScenarioError(f"{where}: missing field 'kind'")
    h = _number(obj, "h", where) if obj.get("h") is not None else None
    leader = _profile(obj["leader"], f"{where}.leader", LeaderProfile) if obj.get("leader") else None
    try:
        return ScenarioEvent(t=_number(obj, "t", where), kind=kind, h=h, leader=leader)
    except ScenarioError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def scenario_from_dict(doc: dict) -> ScenarioSpec:
    doc = _require_dict(doc, "scenario")
    _unknown(doc, {"name", "duration", "initial", "initial_v_H", "initial_a_H",
                   "controller", "plant", "disturbance", "events"}, "scenario")
    initial = _require_dict(doc.get("initial", {}), "initial")
    _unknown(initial, {"v_H", "a_H"}, "initial")
    v0 = initial.get("v_H", doc.get("initial_v_H"))
    a0 = initial.get("a_H", doc.get("initial_a_H", 0.0))
    if v0 is None:
        raise ScenarioError("scenario: missing field 'initial.v_H'")

    ctrl_doc = _require_dict(doc.get("controller", {}), "controller")
    _unknown(ctrl_doc, _CONTROLLER_KEYS, "controller")
    ctrl_kw = {k: _number(ctrl_doc, k, "controller") for k in ctrl_doc}
    if "n" in ctrl_kw:
        if int(ctrl_kw["n"]) != ctrl_kw["n"]:
            raise ScenarioError("controller.n: n ≥ 1 violated (integer order required)")
        ctrl_kw["n"] = int(ctrl_kw["n"])

    plant_doc = _require_dict(doc.get("plant", {}), "plant")
    model = plant_doc.get("model", "backbone")
    if model == "backbone":
        _unknown(plant_doc, {"model", "tau", "alpha1"}, "plant")
        dist = _disturbance_from_dict(doc.get("disturbance", {}), "disturbance")
        plant = BackbonePlantParams(tau=_number(plant_doc, "tau", "plant", 0.5),
                                    alpha1=_number(plant_doc, "alpha1", "plant", 1.0),
                                    disturbance=dist)
    elif model == "physical":
        if "disturbance" in doc:
            raise ScenarioError("disturbance: not allowed with the physical plant (it is emergent)")
        plant = _physical_from_dict(plant_doc, "plant")
    else:
        raise ScenarioError(f"plant.model: unknown plant model {model!r}")

    events_doc = doc.get("events", [])
    if not isinstance(events_doc, list):
        raise ScenarioError("events: expected a list")
    events = [_event_from_dict(e, f"events[{i}]") for i, e in enumerate(events_doc)]

    return ScenarioSpec(
        duration=_number(doc, "duration", "scenario"),
        initial_v_H=float(v0),
        initial_a_H=float(a0),
        controller=ControllerParams(**ctrl_kw),
        plant=plant,
        events=tuple(events),
        name=str(doc.get("name", "scenario")),
    )


def load_scenario(text: str) -> ScenarioSpec:
    """Parse and validate a JSON scenario document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(doc)


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    doc = {
        "name": spec.name,
        "duration": spec.duration,
        "initial": {"v_H": spec.initial_v_H, "a_H": spec.initial_a_H},
        "controller": asdict(spec.controller),
    }
    if isinstance(spec.plant, BackbonePlantParams):
        doc["plant"] = {"model": "backbone", "tau": spec.plant.tau, "alpha1": spec.plant.alpha1}
        doc["disturbance"] = _disturbance_to_dict(spec.plant.disturbance)
    else:
        doc["plant"] = {"model": "physical", **_physical_to_dict(spec.plant)}
    events = []
    for ev in spec.events:
        e = {"t": ev.t, "kind": ev.kind}
        if ev.h is not None:
            e["h"] = ev.h
        if ev.leader is not None:
            e["leader"] = {"breakpoints": ev.leader.breakpoints}
        events.append(e)
    doc["events"] = events
    return doc


def dump_scenario(spec: ScenarioSpec) -> str:
    return json.dumps(scenario_to_dict(spec), indent=2)


# ---------------------------------------------------------------------------
# built-in scenarios

def _const(v):
    return LeaderProfile.constant(v)


def _highway() -> ScenarioSpec:
    return ScenarioSpec(
        name="highway",
        duration=100.0,
        initial_v_H=25.0,
        events=(
            ScenarioEvent(20.0, CUT_IN, h=60.0, leader=_const(25.0)),
            ScenarioEvent(40.0, CUT_IN, h=15.0, leader=_const(20.0)),
            ScenarioEvent(60.0, CUT_OUT, h=40.0, leader=_const(25.0)),
            ScenarioEvent(80.0, CUT_IN, h=10.0, leader=_const(30.0)),
        ),
    )


def _local() -> ScenarioSpec:
    # exiting leaders brake towards a turn; merging leaders accelerate from 8 m/s
    exit_slow = LeaderProfile([(0.0, 22.0), (2.0, 22.0), (14.0, 10.0)])
    exit_fast = LeaderProfile([(0.0, 22.0), (2.0, 22.0), (8.0, 10.0)])
    merge_slow = LeaderProfile([(0.0, 8.0), (24.0, 20.0)])
    merge_fast = LeaderProfile([(0.0, 8.0), (12.0, 20.0)])
    return ScenarioSpec(
        name="local",
        duration=100.0,
        initial_v_H=15.0,
        controller=ControllerParams(v_max=20.0),
        events=(
            ScenarioEvent(20.0, CUT_IN, h=30.0, leader=exit_slow),
            ScenarioEvent(40.0, CUT_OUT, h=20.0, leader=merge_slow),
            ScenarioEvent(60.0, CUT_IN, h=30.0, leader=exit_fast),
            ScenarioEvent(80.0, CUT_OUT, h=20.0, leader=merge_fast),
        ),
    )


def _freedrive() -> ScenarioSpec:
    return ScenarioSpec(name="freedrive-comparison", duration=60.0, initial_v_H=20.0)


BUILTIN_SCENARIOS = {
    "highway": _highway,
    "local": _local,
    "freedrive-comparison": _freedrive,
}


def builtin_scenario(name: str) -> ScenarioSpec:
    try:
        return BUILTIN_SCENARIOS[name]()
    except KeyError:
        raise ScenarioError(
            f"unknown builtin scenario {name!r} (choose from {', '.join(BUILTIN_SCENARIOS)})"
        ) from None
