"""Command-line front end.

Subcommands::

    longctl scenarios
    longctl run SCENARIO [--out DIR] [--svg] [--seed N] [--disturbance KIND]
                         [--alpha1 X] [--variant NAME] [--param key=value ...]
    longctl compare SCENARIO VARIANT VARIANT [...]
    longctl stability [--mode free|cf] [--param key=value ...]

SCENARIO is a builtin name or a path to a JSON scenario file. Values given
on the command line take precedence over the file, which takes precedence
over the defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .analysis import stability_report
from .config import (BUILTIN_SCENARIOS, BackbonePlantParams, ControllerParams, DisturbanceModel,
                     PhysicalPlantParams, ScenarioError, ScenarioSpec, builtin_scenario,
                     load_scenario)
from .controller import Variant
from .sim import (SimulationError, Trajectory, compute_metrics, metrics_json, run_simulation,
                  segment_metrics)
from .svgplot import write_svg

log = logging.getLogger("longctl")

_CONTROLLER_FIELDS = {f.name for f in fields(ControllerParams)}
_PLANT_FIELDS = {"tau", "alpha1"}


@dataclass
class RunReport:
    scenario: str
    seed: Optional[int]
    variant: str
    segments: list
    files: dict = field(default_factory=dict)

    @property
    def collision(self) -> bool:
        return any(m.collision for m in self.segments)


def resolve_scenario(name: str) -> ScenarioSpec:
    if name in BUILTIN_SCENARIOS:
        return builtin_scenario(name)
    try:
        with open(name) as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {name!r}: {exc.strerror}") from None
    spec = load_scenario(text)
    if spec.name == "scenario":
        spec = replace(spec, name=os.path.splitext(os.path.basename(name))[0])
    return spec


def parse_params(items) -> tuple[dict, dict]:
    """Split ``key=value`` overrides into controller and plant fields."""
    ctrl, plant = {}, {}
    for item in items or ():
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep:
            raise ScenarioError(f"--param expects key=value, got {item!r}")
        try:
            num = float(value)
        except ValueError:
            raise ScenarioError(f"--param {key}: not a number: {value!r}") from None
        if key in _CONTROLLER_FIELDS:
            ctrl[key] = int(num) if key == "n" else num
        elif key in _PLANT_FIELDS:
            plant[key] = num
        else:
            raise ScenarioError(f"--param: unknown parameter {key!r}")
    return ctrl, plant


def apply_overrides(spec: ScenarioSpec, args) -> ScenarioSpec:
    ctrl, plant = parse_params(getattr(args, "param", None))
    if getattr(args, "alpha1", None) is not None:
        plant["alpha1"] = args.alpha1
    spec = replace(spec, controller=replace(spec.controller, **ctrl))
    kind = getattr(args, "disturbance", None)
    if isinstance(spec.plant, PhysicalPlantParams):
        if plant or kind:
            raise ScenarioError("plant/disturbance overrides apply to the backbone plant only")
        return spec
    p = replace(spec.plant, **plant)
    if kind:
        d = p.disturbance
        if kind == "constant":
            d = DisturbanceModel("constant", value=d.value if d.kind == "constant" else d.mean)
        elif kind == "gaussian":
            mean = d.value if d.kind == "constant" else d.mean
            d = DisturbanceModel("gaussian", mean=mean, std=d.std, seed=d.seed)
        else:
            d = DisturbanceModel("emergent")
        p = replace(p, disturbance=d)
    return replace(spec, plant=p)


def execute_run(spec: ScenarioSpec, out_dir: str, seed=None, variant="nonlinear",
                svg=False, tol_settle=0.2, tag: Optional[str] = None) -> tuple[RunReport, Trajectory]:
    traj = run_simulation(spec, seed=seed, variant=variant)
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, tag or spec.name)
    files = {"csv": stem + ".csv", "json": stem + "_metrics.json"}
    traj.to_csv(files["csv"])
    with open(files["json"], "w") as fh:
        fh.write(metrics_json(traj, tol_settle))
    if svg:
        files["svg"] = stem + ".svg"
        write_svg(traj, files["svg"], title=f"{spec.name} ({traj.variant})")
    report = RunReport(spec.name, traj.seed, traj.variant, segment_metrics(traj, tol_settle), files)
    return report, traj


def _print_segments(report: RunReport, out=None):
    out = out or sys.stdout
    print(f"{'segment':>15} {'mode':>9} {'overshoot':>9} {'a_max':>7} {'a_min':>7} "
          f"{'min h':>7} {'settle':>7}", file=out)
    for m in report.segments:
        mh = "-" if m.min_headway is None else f"{m.min_headway:.2f}"
        print(f"{m.t_start:6.1f}-{m.t_end:6.1f}s {m.mode:>9} {m.overshoot:9.3f} {m.peak_accel:7.2f} "
              f"{m.peak_decel:7.2f} {mh:>7} {m.settle_time:7.2f}", file=out)


def cmd_scenarios(args) -> int:
    for name in BUILTIN_SCENARIOS:
        spec = builtin_scenario(name)
        print(f"{name:22s} duration={spec.duration:g}s  v_H(0)={spec.initial_v_H:g}  "
              f"events={len(spec.events)}")
    return 0


def cmd_run(args) -> int:
    spec = apply_overrides(resolve_scenario(args.scenario), args)
    report, _ = execute_run(spec, args.out, args.seed, args.variant, args.svg, args.tol_settle)
    _print_segments(report)
    for kind, path in report.files.items():
        print(f"wrote {kind}: {path}")
    if report.collision:
        print("collision detected", file=sys.stderr)
        return 1
    return 0


def cmd_compare(args) -> int:
    if len(args.variants) < 2:
        raise UsageError("compare needs at least two variants")
    variants = []
    for v in args.variants:
        try:
            variants.append(Variant(v))
        except ValueError:
            raise UsageError(f"unknown variant {v!r} (choose from "
                             f"{', '.join(x.value for x in Variant)})") from None
    spec = apply_overrides(resolve_scenario(args.scenario), args)
    rows, collided = [], False
    for v in variants:
        report, traj = execute_run(spec, args.out, args.seed, v, args.svg, args.tol_settle,
                                   tag=f"{spec.name}_{v.value}")
        m = compute_metrics(traj, args.tol_settle)
        rows.append((v.value, m))
        collided |= report.collision
        for path in report.files.values():
            print(f"wrote {path}")
    print(f"{'variant':>18} {'overshoot':>9} {'peak a_H':>9} {'peak jerk':>9} {'settle':>7}")
    for name, m in rows:
        print(f"{name:>18} {m.overshoot:9.3f} {m.peak_accel:9.3f} {m.peak_jerk:9.3f} {m.settle_time:7.2f}")
    return 1 if collided else 0


def cmd_stability(args) -> int:
    ctrl, plant = parse_params(args.param)
    params = ControllerParams(**ctrl)
    report = stability_report(args.mode, params, BackbonePlantParams(**plant))
    print(report.format())
    return 0


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="longctl", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("scenarios", help="list builtin scenarios").set_defaults(func=cmd_scenarios)

    def sim_flags(p):
        p.add_argument("scenario", help="builtin name or JSON scenario path")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--svg", action="store_true", help="also write a three-panel SVG plot")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--disturbance", choices=("constant", "gaussian", "emergent"))
        p.add_argument("--alpha1", type=float)
        p.add_argument("--param", action="append", metavar="KEY=VALUE", default=[])
        p.add_argument("--tol-settle", type=float, default=0.2, help="settling band [m/s]")

    run = sub.add_parser("run", help="simulate one scenario")
    sim_flags(run)
    run.add_argument("--variant", default="nonlinear", choices=[v.value for v in Variant])
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="run one scenario with several controller variants")
    sim_flags(cmp_)
    cmp_.add_argument("variants", nargs="*")
    cmp_.set_defaults(func=cmd_compare)

    st = sub.add_parser("stability", help="Routh-Hurwitz check of the linearized closed loop")
    st.add_argument("--mode", choices=("free", "cf"), default="free")
    st.add_argument("--param", action="append", metavar="KEY=VALUE", default=[])
    st.set_defaults(func=cmd_stability)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"longctl: error: {exc}", file=sys.stderr)
        return 2
    except (ScenarioError, SimulationError, FloatingPointError) as exc:
        print(f"longctl: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
