"""Second-order Newtonian flows on a chart.

A Newtonian system pairs a chart with a force field F(x, v). In chart
coordinates the equations of motion are first order on the tangent
bundle:

    dx^k/dt = v^k
    dv^k/dt = F^k - Gamma^k_ij v^i v^j

where the Christoffel term converts the plain derivative of v into the
covariant acceleration, so F = 0 integrates geodesics. Integrators are
classic RK4 with a fixed step and an embedded Dormand-Prince 5(4) pair
with proportional step control. Both halt with status "left_chart" when
the solution exits the chart domain, and both record the metric speed
(plus an optional energy diagnostic) at every recorded sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import expression, manifold
from .errors import ChartDomainError, SingularMetricError, StepSizeUnderflowError

_LEAVE_CHART_ERRORS = (ChartDomainError, SingularMetricError)
from .extended_fields import CurveSample, TangentPoint
from .manifold import ManifoldChart

__all__ = [
    "ForceField",
    "IntegratorConfig",
    "Trajectory",
    "geodesic_system",
    "force_from_potential",
    "newtonian_rhs",
    "integrate",
    "integrate_ode",
    "max_coordinate_distance",
    "write_trajectory_csv",
    "format_float",
]


@dataclass(frozen=True)
class ForceField:
    """A force on tangent states.

    eval_fn maps (chart, TangentPoint) to the force components. With
    covariant=False the result is the vector F^k entering the equations
    of motion directly; with covariant=True it is the covector F_k and
    is raised with the inverse metric before use.
    """

    eval_fn: Callable[[ManifoldChart, TangentPoint], np.ndarray]
    covariant: bool = False
    name: str = ""


def geodesic_system() -> ForceField:
    """The zero force: trajectories are geodesics of the chart metric."""
    return ForceField(lambda chart, point: np.zeros(chart.dim), name="geodesic")


def force_from_potential(u) -> ForceField:
    """Covariant force F_k = -dU/dx^k from a potential expression."""
    u_expr = expression.coordinate_expr(u) if isinstance(u, str) else u

    def ev(chart, point):
        return -np.array(expression.gradient(u_expr, point.x))

    return ForceField(ev, covariant=True, name=f"potential({u_expr.source})")


def force_vector(chart: ManifoldChart, force: ForceField, point: TangentPoint) -> np.ndarray:
    """Force with its index raised if supplied covariantly."""
    f = np.asarray(force.eval_fn(chart, point), dtype=float)
    if force.covariant:
        f = manifold.raise_index(chart, point.x, f)
    return f


def newtonian_rhs(
    chart: ManifoldChart, force: ForceField, point: TangentPoint
) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side (dx/dt, dv/dt) at a tangent state."""
    x = manifold.check_point(chart, point.x)
    v = point.v
    gamma = manifold.christoffel_at(chart, x)
    f = force_vector(chart, force, point)
    dv = f - np.einsum("kij,i,j->k", gamma, v, v)
    return v.copy(), dv


@dataclass(frozen=True)
class IntegratorConfig:
    """Stepper selection and step control.

    method "rk4" uses the fixed step dt. method "rk45" (alias
    "rk45-adaptive") uses dt as the initial step and adapts it within
    [dt_min, dt_max] against the mixed tolerance atol + rtol * |y|.
    record_every keeps every k-th accepted step (the first and last
    samples are always kept).
    """

    method: str = "rk4"
    dt: float = 1e-3
    t_span: tuple[float, float] = (0.0, 1.0)
    record_every: int = 1
    rtol: float = 1e-8
    atol: float = 1e-10
    dt_min: float = 1e-10
    dt_max: float = 1e-1

    def __post_init__(self):
        method = {"rk45-adaptive": "rk45"}.get(self.method, self.method)
        object.__setattr__(self, "method", method)
        if method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.t_span[1] <= self.t_span[0]:
            raise ValueError("t_span must have t1 > t0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if not (0.0 < self.dt_min <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_max")
        if self.rtol <= 0.0 or self.atol <= 0.0:
            raise ValueError("rtol and atol must be positive")


@dataclass(eq=False)
class Trajectory:
    """Recorded tangent-bundle trajectory with diagnostics."""

    ts: np.ndarray
    xs: np.ndarray
    vs: np.ndarray
    speeds: np.ndarray
    energies: np.ndarray | None
    status: str
    chart_name: str = ""

    def points(self) -> list[TangentPoint]:
        return [TangentPoint(x, v) for x, v in zip(self.xs, self.vs)]

    def curve_samples(self, accels: Sequence[np.ndarray] | None = None) -> list[CurveSample]:
        out = []
        for i, (t, x, v) in enumerate(zip(self.ts, self.xs, self.vs)):
            accel = None if accels is None else np.asarray(accels[i], dtype=float)
            out.append(CurveSample(float(t), TangentPoint(x, v), accel))
        return out


# Dormand-Prince 5(4) tableau; the first error row is the 5th-order
# propagated solution, the second the embedded 4th-order estimate.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def _rk4_step(f, t, y, dt):
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _dp_step(f, t, y, dt):
    ks = []
    for i in range(7):
        yi = y if i == 0 else y + dt * sum(a * k for a, k in zip(_DP_A[i], ks))
        ks.append(f(t + _DP_C[i] * dt, yi))
    y5 = y + dt * sum(b * k for b, k in zip(_DP_B5, ks))
    y4 = y + dt * sum(b * k for b, k in zip(_DP_B4, ks))
    return y5, y5 - y4


def integrate_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    config: IntegratorConfig,
    in_domain: Callable[[np.ndarray], bool],
) -> tuple[list[float], list[np.ndarray], str]:
    """Drive either stepper over t_span; returns (times, states, status).

    Generic over the state vector: the tangent, classical Lagrangian and
    canonical cotangent systems all flatten their states through here.
    ChartDomainError or SingularMetricError from rhs (the chart stops
    being usable there), or in_domain turning false at an accepted step,
    ends the run with status "left_chart".
    """
    t0, t1 = config.t_span
    ts = [t0]
    ys = [y0.copy()]
    t, y = t0, y0.copy()
    status = "completed"
    span_eps = 1e-12 * (t1 - t0)
    accepted = 0

    def record(force_keep=False):
        if force_keep or accepted % config.record_every == 0:
            ts.append(t)
            ys.append(y.copy())

    if config.method == "rk4":
        while t < t1 - span_eps:
            dt = min(config.dt, t1 - t)
            try:
                y_new = _rk4_step(rhs, t, y, dt)
            except _LEAVE_CHART_ERRORS:
                status = "left_chart"
                break
            if not in_domain(y_new):
                status = "left_chart"
                break
            t, y = t + dt, y_new
            accepted += 1
            record(force_keep=(t >= t1 - span_eps))
    else:
        dt = min(config.dt, config.dt_max)
        while t < t1 - span_eps:
            dt = min(dt, t1 - t)
            try:
                y_new, err_vec = _dp_step(rhs, t, y, dt)
            except _LEAVE_CHART_ERRORS:
                # A trial stage overshot the domain; try a shorter step.
                dt *= 0.5
                if dt < config.dt_min:
                    status = "left_chart"
                    break
                continue
            scale = config.atol + config.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
            if err <= 1.0:
                if not in_domain(y_new):
                    status = "left_chart"
                    break
                t, y = t + dt, y_new
                accepted += 1
                record(force_keep=(t >= t1 - span_eps))
                factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err**-0.2))
                dt = min(dt * factor, config.dt_max)
            else:
                dt *= max(0.2, 0.9 * err**-0.2)
                if dt < config.dt_min:
                    raise StepSizeUnderflowError(
                        f"adaptive step fell below dt_min={config.dt_min} at t={t}"
                    )
    return ts, ys, status


def integrate(
    chart: ManifoldChart,
    force: ForceField,
    q0: TangentPoint,
    config: IntegratorConfig,
    energy_fn: Callable[[ManifoldChart, TangentPoint], float] | None = None,
) -> Trajectory:
    """Integrate the Newtonian system from q0 over config.t_span."""
    n = chart.dim
    manifold.check_point(chart, q0.x)

    def rhs(t, y):
        point = TangentPoint(y[:n], y[n:])
        dx, dv = newtonian_rhs(chart, force, point)
        return np.concatenate([dx, dv])

    def y_in_domain(y):
        if not manifold.in_domain(chart, y[:n]):
            return False
        # A point where the metric degenerates numerically is unusable even
        # when it sits inside the nominal open domain, so refuse to record it.
        try:
            manifold.metric_at(chart, y[:n])
        except SingularMetricError:
            return False
        return True

    y0 = np.concatenate([q0.x, q0.v])
    ts, ys, status = integrate_ode(rhs, y0, config, y_in_domain)

    m = len(ts)
    xs = np.array([y[:n] for y in ys])
    vs = np.array([y[n:] for y in ys])
    speeds = np.array([manifold.speed(chart, xs[i], vs[i]) for i in range(m)])
    energies = None
    if energy_fn is not None:
        energies = np.array(
            [energy_fn(chart, TangentPoint(xs[i], vs[i])) for i in range(m)]
        )
    return Trajectory(
        ts=np.array(ts),
        xs=xs,
        vs=vs,
        speeds=speeds,
        energies=energies,
        status=status,
        chart_name=chart.name,
    )


def max_coordinate_distance(a: Trajectory, b: Trajectory) -> float:
    """Sup over shared samples of the max-norm coordinate gap."""
    if len(a.ts) != len(b.ts) or not np.allclose(a.ts, b.ts, rtol=0, atol=1e-12):
        raise ValueError("trajectories are sampled at different times")
    return float(np.max(np.abs(a.xs - b.xs)))


def format_float(value: float) -> str:
    """17 significant digits, enough to round-trip a double exactly."""
    return f"{value:.17g}"


def write_trajectory_csv(trajectory: Trajectory, path) -> None:
    """Write t, coordinates, velocities, speed and optional energy column."""
    n = trajectory.xs.shape[1]
    header = (
        ["t"]
        + [f"x{k + 1}" for k in range(n)]
        + [f"v{k + 1}" for k in range(n)]
        + ["speed"]
    )
    if trajectory.energies is not None:
        header.append("h")
    lines = [",".join(header)]
    for i in range(len(trajectory.ts)):
        row = [trajectory.ts[i], *trajectory.xs[i], *trajectory.vs[i], trajectory.speeds[i]]
        if trajectory.energies is not None:
            row.append(trajectory.energies[i])
        lines.append(",".join(format_float(val) for val in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
