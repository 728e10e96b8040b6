"""Command line front end.

Subcommands:

  riemdyn simulate -c config.json [--out-dir DIR]
      Integrate the configured system and write a trajectory CSV plus a
      JSON run report. Exit 0 when the run completes, 3 when the
      trajectory leaves the chart or the stepper gives up, 2 on config
      errors.

  riemdyn verify --suite NAME [--chart C] [--seed N] [--report FILE]
      Run a named verification suite and print one line per check.
      Exit 0 when every check passes, 1 otherwise, 2 for unknown
      suites or charts.

  riemdyn legendre -c config.json --direction forward|inverse
                   --state "x1,..,xn;f1,..,fn"
      Apply the Legendre map of the configured Lagrangian to one state
      (fiber part is v for forward, p for inverse) and print the result
      as JSON. Exit 4 when the inversion fails to converge or hits a
      singular or degenerate state.

Config files are JSON with "schema": 1. Reruns with the same config
write byte-identical outputs; nothing in the reports depends on wall
time or environment.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import (
    dynamics_hamilton,
    dynamics_lagrange,
    dynamics_newton,
    expression,
    manifold,
    normal_shift,
    verification,
)
from .dynamics_newton import IntegratorConfig
from .errors import (
    ChartDomainError,
    ConfigError,
    NonConvergenceError,
    ParseError,
    RiemdynError,
    SingularAError,
    SingularSetError,
)
from .extended_fields import CotangentPoint, TangentPoint

__all__ = ["main", "build_chart", "build_lagrangian", "build_force", "build_integrator"]

_EXIT_OK = 0
_EXIT_FAILED_CHECKS = 1
_EXIT_CONFIG = 2
_EXIT_INTEGRATION = 3
_EXIT_LEGENDRE = 4

_LAGRANGIAN_FAMILIES = ("kinetic", "kinetic-potential", "conformal-kinetic", "fiberwise-phi")


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", pointer="") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", pointer="") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object", pointer="")
    if cfg.get("schema") != 1:
        raise ConfigError("expected \"schema\": 1", pointer="/schema")
    return cfg


def _require(cfg: dict, key: str, pointer: str, kind=None):
    if key not in cfg:
        raise ConfigError(f"missing required key {key!r}", pointer=f"{pointer}/{key}")
    value = cfg[key]
    if kind is not None and not isinstance(value, kind):
        names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise ConfigError(
            f"expected {names}, got {type(value).__name__}", pointer=f"{pointer}/{key}"
        )
    return value


def _expression_param(cfg: dict, key: str, pointer: str) -> str:
    value = _require(cfg, key, pointer, str)
    return value


def build_chart(cfg: dict):
    chart_cfg = _require(cfg, "chart", "", dict)
    name = _require(chart_cfg, "name", "/chart", str)
    params = {k: v for k, v in chart_cfg.items() if k != "name"}
    try:
        return manifold.builtin_chart(name, **params)
    except (RiemdynError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), pointer="/chart") from exc


def build_integrator(cfg: dict) -> IntegratorConfig:
    int_cfg = cfg.get("integrator", {})
    if not isinstance(int_cfg, dict):
        raise ConfigError("integrator must be an object", pointer="/integrator")
    kwargs = {}
    for key in ("method", "dt", "record_every", "rtol", "atol", "dt_min", "dt_max"):
        if key in int_cfg:
            kwargs[key] = int_cfg[key]
    if "t_span" in int_cfg:
        span = int_cfg["t_span"]
        if not (isinstance(span, list) and len(span) == 2):
            raise ConfigError("t_span must be [t0, t1]", pointer="/integrator/t_span")
        kwargs["t_span"] = (float(span[0]), float(span[1]))
    try:
        return IntegratorConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), pointer="/integrator") from exc


def build_lagrangian(system: dict, pointer: str = "/system"):
    family = _require(system, "family", pointer, str)
    if family not in _LAGRANGIAN_FAMILIES:
        known = ", ".join(_LAGRANGIAN_FAMILIES)
        raise ConfigError(
            f"unknown family {family!r} (known: {known})", pointer=f"{pointer}/family"
        )
    try:
        if family == "kinetic":
            return dynamics_lagrange.kinetic_lagrangian()
        if family == "kinetic-potential":
            return dynamics_lagrange.kinetic_minus_potential(
                _expression_param(system, "U", pointer)
            )
        if family == "conformal-kinetic":
            return dynamics_lagrange.conformal_kinetic_lagrangian(
                _expression_param(system, "f", pointer)
            )
        return dynamics_lagrange.fiberwise_phi_lagrangian(
            _expression_param(system, "phi", pointer), system.get("C", "1")
        )
    except ParseError as exc:
        raise ConfigError(f"bad expression: {exc}", pointer=pointer) from exc


def build_force(system: dict, pointer: str = "/system"):
    """Force field plus an optional conserved-energy callback."""
    force_cfg = _require(system, "force", pointer, dict)
    kind = _require(force_cfg, "type", f"{pointer}/force", str)
    fp = f"{pointer}/force"
    try:
        if kind == "geodesic":
            return dynamics_newton.geodesic_system(), _kinetic_energy
        if kind == "potential":
            u_src = _expression_param(force_cfg, "U", fp)
            u_expr = expression.coordinate_expr(u_src)
            force = dynamics_newton.force_from_potential(u_expr)

            def energy(chart, point, u_expr=u_expr):
                return _kinetic_energy(chart, point) + expression.evaluate(u_expr, point.x)

            return force, energy
        if kind == "conformal":
            f_src = _expression_param(force_cfg, "f", fp)
            f_expr = expression.coordinate_expr(f_src)
            force = normal_shift.conformal_force_field(f_expr)

            def energy(chart, point, f_expr=f_expr):
                factor = math.exp(-2.0 * expression.evaluate(f_expr, point.x))
                return factor * _kinetic_energy(chart, point)

            return force, energy
        if kind == "spherical":
            profile = normal_shift.profile_from_expression(
                _expression_param(force_cfg, "T", fp)
            )
            wrapper = normal_shift.FiberwiseSymmetricLagrangian(profile, name=profile.name)
            force = normal_shift.spherical_force_field(wrapper)

            def energy(chart, point, profile=profile):
                w = manifold.speed(chart, point.x, point.v)
                return w * profile.d_w(point.x, w) - profile.value(point.x, w)

            return force, energy
        if kind == "normal-shift":
            profile = normal_shift.profile_from_expression(
                _expression_param(force_cfg, "W", fp)
            )
            h_fn = normal_shift.h_function(force_cfg.get("h"))
            shift = normal_shift.NormalShiftForce(profile, h_fn=h_fn, name=profile.name)
            return normal_shift.normal_shift_force_field(shift), None
    except ParseError as exc:
        raise ConfigError(f"bad expression: {exc}", pointer=fp) from exc
    except ValueError as exc:
        raise ConfigError(str(exc), pointer=fp) from exc
    known = "geodesic, potential, conformal, spherical, normal-shift"
    raise ConfigError(f"unknown force type {kind!r} (known: {known})", pointer=f"{fp}/type")


def _kinetic_energy(chart, point):
    w = manifold.speed(chart, point.x, point.v)
    return 0.5 * w * w


def _initial_arrays(cfg: dict, chart, fiber_key: str):
    dim = chart.dim
    initial = _require(cfg, "initial", "", dict)
    x = np.asarray(_require(initial, "x", "/initial", list), dtype=float)
    fiber = np.asarray(_require(initial, fiber_key, "/initial", list), dtype=float)
    if x.shape != (dim,):
        raise ConfigError(f"expected {dim} coordinates", pointer="/initial/x")
    if fiber.shape != (dim,):
        raise ConfigError(f"expected {dim} components", pointer=f"/initial/{fiber_key}")
    if not manifold.in_domain(chart, x):
        raise ConfigError(
            f"initial point {x.tolist()} is outside chart {chart.name!r}",
            pointer="/initial/x",
        )
    return x, fiber


def _json_dump(obj, path):
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    chart = build_chart(cfg)
    system = _require(cfg, "system", "", dict)
    kind = _require(system, "kind", "/system", str)
    config = build_integrator(cfg)
    out_dir = args.out_dir or cfg.get("output", {}).get("directory", ".")
    basename = cfg.get("output", {}).get("basename", "trajectory")
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{basename}.csv")
    report_path = os.path.join(out_dir, f"{basename}.json")

    if kind == "newton":
        force, energy_fn = build_force(system)
        x0, v0 = _initial_arrays(cfg, chart, "v")
        trajectory = dynamics_newton.integrate(
            chart, force, TangentPoint(x0, v0), config, energy_fn=energy_fn
        )
    elif kind == "lagrange":
        lag = build_lagrangian(system)
        x0, v0 = _initial_arrays(cfg, chart, "v")
        trajectory = dynamics_lagrange.integrate_lagrangian(
            chart,
            lag,
            TangentPoint(x0, v0),
            config,
            energy_fn=lambda c, q: dynamics_hamilton.energy_h(c, lag, q),
        )
    elif kind == "hamilton":
        lag = build_lagrangian(system)
        ctx = dynamics_hamilton.LegendreContext(lag)
        ham = dynamics_hamilton.hamiltonian_from_lagrangian(ctx)
        initial = _require(cfg, "initial", "", dict)
        if "p" in initial:
            x0, p0 = _initial_arrays(cfg, chart, "p")
            state0 = CotangentPoint(x0, p0)
        else:
            x0, v0 = _initial_arrays(cfg, chart, "v")
            state0 = dynamics_hamilton.legendre_forward(ctx, chart, TangentPoint(x0, v0))
        trajectory = dynamics_hamilton.integrate_hamiltonian(chart, ham, state0, config)
    else:
        raise ConfigError(
            f"unknown system kind {kind!r} (known: newton, lagrange, hamilton)",
            pointer="/system/kind",
        )

    if kind == "hamilton":
        dynamics_hamilton.write_cotangent_csv(trajectory, csv_path)
        drift = float(np.max(np.abs(trajectory.h_values - trajectory.h_values[0])))
        final = {
            "x": [float(val) for val in trajectory.xs[-1]],
            "p": [float(val) for val in trajectory.ps[-1]],
        }
    else:
        dynamics_newton.write_trajectory_csv(trajectory, csv_path)
        drift = None
        if trajectory.energies is not None:
            drift = float(np.max(np.abs(trajectory.energies - trajectory.energies[0])))
        final = {
            "x": [float(val) for val in trajectory.xs[-1]],
            "v": [float(val) for val in trajectory.vs[-1]],
        }
    report = {
        "schema": 1,
        "command": "simulate",
        "chart": chart.name,
        "system": kind,
        "status": trajectory.status,
        "samples": int(len(trajectory.ts)),
        "t_final": float(trajectory.ts[-1]),
        "final_state": final,
        "energy_drift": drift,
        "csv": os.path.basename(csv_path),
    }
    _json_dump(report, report_path)
    print(f"{trajectory.status}: {len(trajectory.ts)} samples -> {csv_path}")
    return _EXIT_OK if trajectory.status == "completed" else _EXIT_INTEGRATION


def cmd_verify(args) -> int:
    try:
        report = verification.run_suite(args.suite, args.chart, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    for check in report["checks"]:
        label = "PASS" if check["pass"] else "FAIL"
        target = check.get("target")
        goal = f" target={target:g}" if target is not None else ""
        print(
            f"{label} {check['name']}  value={check['value']:.6e}"
            f"  tol={check['tolerance']:.1e}{goal}"
        )
    total = len(report["checks"])
    good = sum(1 for c in report["checks"] if c["pass"])
    print(f"suite {report['suite']}: {good}/{total} checks passed")
    if args.report:
        _json_dump(report, args.report)
    return _EXIT_OK if report["passed"] else _EXIT_FAILED_CHECKS


def _parse_state(text: str, dim: int):
    parts = text.split(";")
    if len(parts) != 2:
        raise ConfigError("state must be \"x1,..,xn;f1,..,fn\"", pointer="--state")
    try:
        x = np.array([float(v) for v in parts[0].split(",")], dtype=float)
        fiber = np.array([float(v) for v in parts[1].split(",")], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"bad number in state: {exc}", pointer="--state") from exc
    if x.shape != (dim,) or fiber.shape != (dim,):
        raise ConfigError(f"state needs {dim}+{dim} components", pointer="--state")
    return x, fiber


def cmd_legendre(args) -> int:
    cfg = _load_config(args.config)
    chart = build_chart(cfg)
    system = _require(cfg, "system", "", dict)
    lag = build_lagrangian(system)
    ctx = dynamics_hamilton.LegendreContext(lag)
    x, fiber = _parse_state(args.state, chart.dim)
    if not manifold.in_domain(chart, x):
        raise ConfigError(
            f"state point {x.tolist()} is outside chart {chart.name!r}",
            pointer="--state",
        )
    try:
        if args.direction == "forward":
            q = TangentPoint(x, fiber)
            image = dynamics_hamilton.legendre_forward(ctx, chart, q)
            out = {
                "x": [float(v) for v in x],
                "v": [float(v) for v in fiber],
                "p": [float(v) for v in image.p],
                "h": dynamics_hamilton.energy_h(chart, lag, q),
                "iterations": 0,
            }
        else:
            state = CotangentPoint(x, fiber)
            back = dynamics_hamilton.legendre_inverse(ctx, chart, state)
            out = {
                "x": [float(v) for v in x],
                "p": [float(v) for v in fiber],
                "v": [float(v) for v in back.v],
                "h": dynamics_hamilton.energy_h(chart, lag, back),
                "iterations": ctx.last_iterations,
            }
    except (NonConvergenceError, SingularSetError, SingularAError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_LEGENDRE
    except ChartDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    print(json.dumps(out, sort_keys=True))
    return _EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riemdyn",
        description="Dynamics on Riemannian charts: simulate, verify, Legendre maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate a configured system")
    sim.add_argument("-c", "--config", required=True, help="JSON config path")
    sim.add_argument("--out-dir", default=None, help="output directory override")
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("--suite", required=True, help="suite name or 'all'")
    ver.add_argument("--chart", default=None, help="restrict to one chart")
    ver.add_argument("--seed", type=int, default=0, help="sampling seed")
    ver.add_argument("--report", default=None, help="write the JSON report here")
    ver.set_defaults(func=cmd_verify)

    leg = sub.add_parser("legendre", help="apply the Legendre map to one state")
    leg.add_argument("-c", "--config", required=True, help="JSON config path")
    leg.add_argument(
        "--direction", choices=("forward", "inverse"), required=True
    )
    leg.add_argument(
        "--state", required=True, help='state as "x1,..,xn;f1,..,fn"'
    )
    leg.set_defaults(func=cmd_legendre)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        where = f" at {exc.pointer}" if exc.pointer else ""
        print(f"config error{where}: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except RiemdynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
