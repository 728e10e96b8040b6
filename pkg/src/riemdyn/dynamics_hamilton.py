"""Legendre transform and Hamiltonian flows.

The Legendre map lambda sends a tangent state (x, v) to the cotangent
state (x, p) with p_k = dL/dv^k. Its inverse is solved by a damped
Newton iteration on r(v) = dL/dv - p whose Jacobian is the fiber
Hessian A. The Hamiltonian is H(x, p) = sum_k p_k v*^k - L(x, v*) at
v* = lambda^(-1)(x, p); for every catalog family H and its partials are
also attached in closed form, derived directly from the family formula
rather than from the Newton inverse, so the identity suite checks a
genuinely independent construction:

    kinetic:            H = (1/2) g^ij p_i p_j
    kinetic-potential:  H = (1/2) g^ij p_i p_j + U(x)
    conformal-kinetic:  H = (1/2) e^(2f) g^ij p_i p_j
    fiberwise-phi:      H = z phi'(z) - phi(z) at phi'(z) = |p|/C(x)

Canonical motion integrates dx/dt = dH/dp, dp/dt = -dH/dx in plain
coordinates; the covariant form of the momentum equation differs by two
Christoffel contractions that cancel identically by the symmetry of
Gamma in its lower indexes, and covariant_momentum_residual exposes
that cancellation for testing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import expression, extended_fields, manifold, normal_shift
from .dynamics_lagrange import Lagrangian, a_matrix, momentum_field
from .dynamics_newton import IntegratorConfig, format_float, integrate_ode
from .errors import (
    DegenerateLagrangianError,
    NonConvergenceError,
    SingularAError,
    ZeroVelocityError,
)
from .extended_fields import (
    CotangentPoint,
    ExtendedField,
    TangentPoint,
)
from .manifold import ManifoldChart

__all__ = [
    "LegendreContext",
    "Hamiltonian",
    "CotangentTrajectory",
    "IdentityReport",
    "legendre_forward",
    "legendre_inverse",
    "energy_h",
    "energy_field",
    "hamiltonian_from_lagrangian",
    "b_matrix",
    "hamilton_rhs",
    "covariant_momentum_residual",
    "integrate_hamiltonian",
    "write_cotangent_csv",
    "identity_suite",
]

_EPS = float(np.finfo(float).eps)
_FD2_STEP_SCALE = _EPS ** 0.25


@dataclass
class LegendreContext:
    """Solver settings and warm-start state for the Legendre inverse."""

    lagrangian: Lagrangian
    max_iter: int = 50
    tolerance: float = 1e-12
    max_damping: int = 20
    warm_start: bool = True
    last_v: np.ndarray | None = None
    last_iterations: int = 0


def legendre_forward(ctx: LegendreContext, chart: ManifoldChart, q: TangentPoint) -> CotangentPoint:
    """Map (x, v) to (x, p) with p_k = dL/dv^k."""
    return CotangentPoint(q.x, ctx.lagrangian.dv(chart, q))


def energy_h(chart: ManifoldChart, lagrangian: Lagrangian, q: TangentPoint) -> float:
    """h(x, v) = v^k dL/dv^k - L, the energy along tangent states."""
    return float(q.v @ lagrangian.dv(chart, q) - lagrangian.value(chart, q))


def energy_field(lagrangian: Lagrangian) -> ExtendedField:
    """The energy h as a scalar extended field with analytic hooks.

    dh/dv^r = A_rk v^k and dh/dx^s = v^k M[k, s] - dL/dx^s follow from
    differentiating h = v . dL/dv - L, so the hooks inherit whatever
    analytic structure the Lagrangian carries.
    """

    def ev(chart, point):
        return np.array(energy_h(chart, lagrangian, point))

    dx_fn = None
    dfib_fn = None
    if lagrangian.mixed_partials_fn is not None:

        def dx_fn(chart, point):
            mixed = lagrangian.mixed_partials_fn(chart, point)
            return point.v @ mixed - lagrangian.dx(chart, point)

    if lagrangian.second_fiber_fn is not None:

        def dfib_fn(chart, point):
            return a_matrix(chart, lagrangian, point) @ point.v

    return ExtendedField((0, 0), "v", ev, dx_fn, dfib_fn, name=f"h[{lagrangian.name}]")


def _default_velocity_guess(
    ctx: LegendreContext, chart: ManifoldChart, x: np.ndarray, p: np.ndarray
) -> np.ndarray:
    """Raised momentum, rescaled by a coarse line search on the residual."""
    direction = manifold.raise_index(chart, x, p)
    norm = float(np.max(np.abs(direction)))
    if norm == 0.0:
        return direction
    best_v, best_r = direction, math.inf
    for scale in np.geomspace(1e-2, 1e2, 21):
        v_try = scale * direction
        try:
            r = ctx.lagrangian.dv(chart, TangentPoint(x, v_try)) - p
        except ZeroVelocityError:
            continue
        r_norm = float(np.max(np.abs(r)))
        if r_norm < best_r:
            best_v, best_r = v_try, r_norm
    return best_v


def legendre_inverse(
    ctx: LegendreContext,
    chart: ManifoldChart,
    state: CotangentPoint,
    v_guess: np.ndarray | None = None,
) -> TangentPoint:
    """Solve dL/dv = p for v by damped Newton with the fiber Hessian.

    The starting point is, in order of preference: the explicit v_guess,
    the cached solution from the previous call (when warm_start is on),
    or the raised momentum rescaled by a coarse line search. Iteration
    counts land in ctx.last_iterations.
    """
    lag = ctx.lagrangian
    x = manifold.check_point(chart, state.x)
    p = state.p
    if v_guess is not None:
        v = np.asarray(v_guess, dtype=float)
    elif ctx.warm_start and ctx.last_v is not None and ctx.last_v.shape == p.shape:
        v = ctx.last_v.copy()
    else:
        v = _default_velocity_guess(ctx, chart, x, p)

    def residual(v_try):
        return lag.dv(chart, TangentPoint(x, v_try)) - p

    tol = ctx.tolerance * max(1.0, float(np.max(np.abs(p))))
    try:
        r = residual(v)
    except ZeroVelocityError:
        v = _default_velocity_guess(ctx, chart, x, p)
        r = residual(v)
    r_norm = float(np.max(np.abs(r)))
    for iteration in range(1, ctx.max_iter + 1):
        if r_norm <= tol:
            ctx.last_iterations = iteration - 1
            ctx.last_v = v.copy()
            return TangentPoint(x, v)
        point = TangentPoint(x, v)
        a = a_matrix(chart, lag, point)
        det = float(np.linalg.det(a))
        scale = max(1.0, float(np.max(np.abs(a))))
        if abs(det) <= 1e-10 * scale ** a.shape[0]:
            raise SingularAError(
                f"fiber Hessian singular during Legendre inversion (det {det:.3e})"
            )
        step = np.linalg.solve(a, -r)
        lam = 1.0
        for _ in range(ctx.max_damping + 1):
            try:
                r_new = residual(v + lam * step)
            except ZeroVelocityError:
                lam *= 0.5
                continue
            r_new_norm = float(np.max(np.abs(r_new)))
            if r_new_norm < r_norm or r_new_norm <= tol:
                break
            lam *= 0.5
        else:
            raise NonConvergenceError(
                f"damping exhausted at residual {r_norm:.3e}",
                residual=r_norm,
                iterations=iteration,
            )
        v = v + lam * step
        r, r_norm = r_new, r_new_norm
    if r_norm <= tol:
        ctx.last_iterations = ctx.max_iter
        ctx.last_v = v.copy()
        return TangentPoint(x, v)
    raise NonConvergenceError(
        f"Legendre inversion did not converge in {ctx.max_iter} iterations "
        f"(residual {r_norm:.3e})",
        residual=r_norm,
        iterations=ctx.max_iter,
    )


# ---------------------------------------------------------------------------
# Hamiltonians


@dataclass(frozen=True)
class Hamiltonian:
    """Scalar H(x, p) with optional analytic hooks and B = d2H/dp dp."""

    field: ExtendedField
    family: str
    context: LegendreContext
    second_fiber_fn: Callable[[ManifoldChart, CotangentPoint], np.ndarray] | None = None
    name: str = ""

    def value(self, chart: ManifoldChart, state: CotangentPoint) -> float:
        return float(self.field.eval_fn(chart, state))

    def dx(self, chart: ManifoldChart, state: CotangentPoint) -> np.ndarray:
        return extended_fields.x_partials(chart, self.field, state)

    def dp(self, chart: ManifoldChart, state: CotangentPoint) -> np.ndarray:
        return extended_fields.fiber_partials(chart, self.field, state)


def _dginv_at(chart: ManifoldChart, x: np.ndarray) -> np.ndarray:
    g = manifold.metric_at(chart, x)
    dg = manifold.metric_partials_at(chart, x)
    ginv = np.linalg.inv(g)
    return -np.einsum("ia,abq,bj->ijq", ginv, dg, ginv)


def _quadratic_h_field(u_expr) -> ExtendedField:
    """H = (1/2) g^ij p_i p_j [+ U(x)] with analytic hooks."""

    def ev(chart, point):
        ginv = manifold.inverse_metric_at(chart, point.x)
        h = 0.5 * float(point.p @ ginv @ point.p)
        if u_expr is not None:
            h += expression.evaluate(u_expr, point.x)
        return np.array(h)

    def dx(chart, point):
        dginv = _dginv_at(chart, point.x)
        out = 0.5 * np.einsum("ijq,i,j->q", dginv, point.p, point.p)
        if u_expr is not None:
            out = out + np.array(expression.gradient(u_expr, point.x))
        return out

    def dfib(chart, point):
        return manifold.inverse_metric_at(chart, point.x) @ point.p

    name = "H_kinetic" if u_expr is None else f"H_kinetic+U({u_expr.source})"
    return ExtendedField((0, 0), "p", ev, dx, dfib, name=name)


def _conformal_h_field(f_expr) -> ExtendedField:
    """H = (1/2) e^(2f) g^ij p_i p_j with analytic hooks."""

    def factor(x):
        return math.exp(2.0 * expression.evaluate(f_expr, x))

    def ev(chart, point):
        ginv = manifold.inverse_metric_at(chart, point.x)
        return np.array(0.5 * factor(point.x) * point.p @ ginv @ point.p)

    def dx(chart, point):
        x, p = point.x, point.p
        ginv = manifold.inverse_metric_at(chart, x)
        dginv = _dginv_at(chart, x)
        df = np.array(expression.gradient(f_expr, x))
        quad = float(p @ ginv @ p)
        return factor(x) * (quad * df + 0.5 * np.einsum("ijq,i,j->q", dginv, p, p))

    def dfib(chart, point):
        ginv = manifold.inverse_metric_at(chart, point.x)
        return factor(point.x) * (ginv @ point.p)

    return ExtendedField((0, 0), "p", ev, dx, dfib, name=f"H_conformal({f_expr.source})")


def _invert_phi_prime(phi_expr, target: float) -> float:
    """Solve phi'(z) = target for z > 0, assuming phi' is increasing."""

    def fp(z):
        return expression.partial_env(phi_expr, {"w": z}, "w")

    def fpp(z):
        return expression.second_partial_env(phi_expr, {"w": z}, "w", "w")

    lo, hi = 0.0, max(abs(target), 1.0)
    for _ in range(200):
        if fp(hi) >= target:
            break
        hi *= 2.0
    else:
        raise NonConvergenceError(f"could not bracket phi'(z) = {target!r}")
    z = min(max(target, 1e-8), hi)
    tol = 1e-14 * max(1.0, abs(target))
    for _ in range(100):
        err = fp(z) - target
        if abs(err) <= tol:
            return z
        if err > 0.0:
            hi = z
        else:
            lo = z
        slope = fpp(z)
        z_new = z - err / slope if slope > 0.0 else 0.5 * (lo + hi)
        if not (lo < z_new < hi):
            z_new = 0.5 * (lo + hi)
        z = z_new
    raise NonConvergenceError(f"phi' inversion stalled at z={z!r} for target {target!r}")


def _fiberwise_h_field(lagrangian: Lagrangian) -> ExtendedField:
    """H for L = phi(C(x) |v|), via scalar inversion of phi'."""
    phi_expr = lagrangian.params["phi"]
    c_expr = lagrangian.params["C"]

    def pieces(chart, point):
        x, p = point.x, point.p
        ginv = manifold.inverse_metric_at(chart, x)
        pm_sq = float(p @ ginv @ p)
        pm = math.sqrt(max(pm_sq, 0.0))
        if pm <= normal_shift.zero_velocity_floor(x):
            raise ZeroVelocityError(
                f"momentum modulus {pm:.3e} is below the zero-velocity floor"
            )
        c = expression.evaluate(c_expr, x)
        if c <= 0.0:
            raise DegenerateLagrangianError(
                f"C(x) = {c!r} must be positive for the fiberwise family"
            )
        z = _invert_phi_prime(phi_expr, pm / c)
        return ginv, pm, c, z

    def ev(chart, point):
        _, pm, c, z = pieces(chart, point)
        phi_val = expression.evaluate_env(phi_expr, {"w": z})
        return np.array(z * (pm / c) - phi_val)

    def dfib(chart, point):
        ginv, pm, c, z = pieces(chart, point)
        p_up = ginv @ point.p
        return (z / c) * p_up / pm

    def dx(chart, point):
        ginv, pm, c, z = pieces(chart, point)
        x, p = point.x, point.p
        dginv = _dginv_at(chart, x)
        dpm = 0.5 * np.einsum("ijq,i,j->q", dginv, p, p) / pm
        dc = np.array(expression.gradient(c_expr, x))
        return z * (dpm / c - pm * dc / (c * c))

    return ExtendedField((0, 0), "p", ev, dx, dfib, name=f"H[{lagrangian.name}]")


def hamiltonian_from_lagrangian(ctx: LegendreContext) -> Hamiltonian:
    """Attach the Hamiltonian of ctx's Lagrangian.

    Catalog families get closed-form value and partials; anything else
    falls back to Newton inversion for values and finite differences for
    partials.
    """
    lag = ctx.lagrangian
    family = lag.family
    second_fiber = None
    if family == "kinetic":
        field = _quadratic_h_field(None)

        def second_fiber(chart, state):
            return manifold.inverse_metric_at(chart, state.x)

    elif family == "kinetic-potential":
        field = _quadratic_h_field(lag.params["U"])

        def second_fiber(chart, state):
            return manifold.inverse_metric_at(chart, state.x)

    elif family == "conformal-kinetic":
        f_expr = lag.params["f"]
        field = _conformal_h_field(f_expr)

        def second_fiber(chart, state):
            factor = math.exp(2.0 * expression.evaluate(f_expr, state.x))
            return factor * manifold.inverse_metric_at(chart, state.x)

    elif family == "fiberwise-phi":
        field = _fiberwise_h_field(lag)
        wrapper = normal_shift.FiberwiseSymmetricLagrangian(lag.profile, name=lag.name)

        def second_fiber(chart, state):
            v = field.fiber_partials_fn(chart, state)
            return normal_shift.symmetric_b_matrix(chart, wrapper, TangentPoint(state.x, v))

    else:

        def ev(chart, state):
            v_state = legendre_inverse(ctx, chart, state)
            return np.array(
                float(state.p @ v_state.v) - lag.value(chart, v_state)
            )

        field = ExtendedField((0, 0), "p", ev, name=f"H[{lag.name}]")

    return Hamiltonian(
        field=field,
        family=family,
        context=ctx,
        second_fiber_fn=second_fiber,
        name=f"H[{lag.name}]",
    )


def b_matrix(chart: ManifoldChart, hamiltonian: Hamiltonian, state: CotangentPoint) -> np.ndarray:
    """B^ij = d2H/dp_i dp_j, the inverse of A at matched states."""
    if hamiltonian.second_fiber_fn is not None:
        return np.asarray(hamiltonian.second_fiber_fn(chart, state), dtype=float)
    if hamiltonian.field.fiber_partials_fn is not None:
        return extended_fields.fiber_partials(
            chart,
            ExtendedField(
                (0, 1),
                "p",
                lambda c, s: hamiltonian.field.fiber_partials_fn(c, s),
                name="dH/dp",
            ),
            state,
        )
    n = chart.dim
    p = state.p
    steps = _FD2_STEP_SCALE * np.maximum(1.0, np.abs(p))

    def val(dp):
        return float(hamiltonian.field.eval_fn(chart, CotangentPoint(state.x, p + dp)))

    out = np.empty((n, n))
    center = val(np.zeros(n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = steps[i]
        out[i, i] = (val(ei) - 2.0 * center + val(-ei)) / (steps[i] ** 2)
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = steps[j]
            mixed = (
                val(ei + ej) - val(ei - ej) - val(-ei + ej) + val(-ei - ej)
            ) / (4.0 * steps[i] * steps[j])
            out[i, j] = mixed
            out[j, i] = mixed
    return out


def hamilton_rhs(
    chart: ManifoldChart, hamiltonian: Hamiltonian, state: CotangentPoint
) -> tuple[np.ndarray, np.ndarray]:
    """Canonical equations dx/dt = dH/dp, dp/dt = -dH/dx."""
    manifold.check_point(chart, state.x)
    return hamiltonian.dp(chart, state), -hamiltonian.dx(chart, state)


def covariant_momentum_residual(
    chart: ManifoldChart, hamiltonian: Hamiltonian, state: CotangentPoint
) -> np.ndarray:
    """The two Christoffel contractions of the covariant momentum equation.

    Gamma^b_qk p_b dH/dp_q - p_a Gamma^a_kb dH/dp_b vanishes identically
    because Gamma is symmetric in its lower indexes; the residual is
    computed as two separate contractions so nothing cancels on paper
    before it cancels in floating point.
    """
    gamma = manifold.christoffel_at(chart, state.x)
    hp = hamiltonian.dp(chart, state)
    p = state.p
    first = np.einsum("bqk,b,q->k", gamma, p, hp)
    second = np.einsum("akb,a,b->k", gamma, p, hp)
    return first - second


@dataclass(eq=False)
class CotangentTrajectory:
    """Recorded cotangent trajectory with the Hamiltonian along it."""

    ts: np.ndarray
    xs: np.ndarray
    ps: np.ndarray
    h_values: np.ndarray
    status: str
    chart_name: str = ""

    def points(self) -> list[CotangentPoint]:
        return [CotangentPoint(x, p) for x, p in zip(self.xs, self.ps)]


def integrate_hamiltonian(
    chart: ManifoldChart,
    hamiltonian: Hamiltonian,
    state0: CotangentPoint,
    config: IntegratorConfig,
) -> CotangentTrajectory:
    """Integrate the canonical equations from state0 over config.t_span."""
    n = chart.dim
    manifold.check_point(chart, state0.x)

    def rhs(t, y):
        state = CotangentPoint(y[:n], y[n:])
        dx, dp = hamilton_rhs(chart, hamiltonian, state)
        return np.concatenate([dx, dp])

    y0 = np.concatenate([state0.x, state0.p])
    ts, ys, status = integrate_ode(
        rhs, y0, config, lambda y: manifold.in_domain(chart, y[:n])
    )
    xs = np.array([y[:n] for y in ys])
    ps = np.array([y[n:] for y in ys])
    h_values = np.array(
        [hamiltonian.value(chart, CotangentPoint(x, p)) for x, p in zip(xs, ps)]
    )
    return CotangentTrajectory(
        ts=np.array(ts),
        xs=xs,
        ps=ps,
        h_values=h_values,
        status=status,
        chart_name=chart.name,
    )


def write_cotangent_csv(trajectory: CotangentTrajectory, path) -> None:
    """Write t, coordinates, momenta and H with full precision."""
    n = trajectory.xs.shape[1]
    header = (
        ["t"]
        + [f"x{k + 1}" for k in range(n)]
        + [f"p{k + 1}" for k in range(n)]
        + ["H"]
    )
    lines = [",".join(header)]
    for i in range(len(trajectory.ts)):
        row = [trajectory.ts[i], *trajectory.xs[i], *trajectory.ps[i], trajectory.h_values[i]]
        lines.append(",".join(format_float(val) for val in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Identity suite


@dataclass(frozen=True)
class IdentityReport:
    """Max residual per identity over the sampled states."""

    residuals: dict
    worst_points: dict
    points_checked: int

    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0


def identity_suite(
    ctx: LegendreContext, chart: ManifoldChart, points: Sequence[TangentPoint]
) -> IdentityReport:
    """Check the structural identities tying L, H and the duality maps.

    For each tangent state q with image (x, p) under the Legendre map:

      duality_gradient_commutation: spatial and fiber gradients of the
          momentum covector field commute with substituting v = g^(-1) p
          (checked at the metric-dual state, finite differences on the
          substituted side).
      fiber_chain_rule:   dh/dv^r = sum_k A_rk (dH/dp_k o lambda)
      spatial_chain_rule: grad_r h = (grad_r H) o lambda
                          + sum_k grad_r (dL/dv^k) (dH/dp_k o lambda)
      velocity_from_momentum_gradient: v^k = (dH/dp_k) o lambda
      dual_energy: p_k (dH/dp_k) - H recovers L o lambda^(-1) pointwise
      opposite_spatial_gradients: (grad_i H) o lambda = - grad_i L
    """
    lag = ctx.lagrangian
    ham = hamiltonian_from_lagrangian(ctx)
    p_field = momentum_field(lag)
    h_field = energy_field(lag)

    def substituted_momentum_field() -> ExtendedField:
        def ev(inner_chart, state):
            v = manifold.raise_index(inner_chart, state.x, state.p)
            return p_field.eval_fn(inner_chart, TangentPoint(state.x, v))

        return ExtendedField((0, 1), "p", ev, name="momentum_via_duality")

    y_field = substituted_momentum_field()
    names = (
        "duality_gradient_commutation",
        "fiber_chain_rule",
        "spatial_chain_rule",
        "velocity_from_momentum_gradient",
        "dual_energy",
        "opposite_spatial_gradients",
    )
    residuals = {name: 0.0 for name in names}
    worst = {name: -1 for name in names}

    def note(name, value, index):
        if value >= residuals[name]:
            residuals[name] = value
            worst[name] = index

    for index, q in enumerate(points):
        x, v = q.x, q.v
        lam = legendre_forward(ctx, chart, q)

        dual = CotangentPoint(x, manifold.lower_index(chart, x, v))
        grad_x = extended_fields.spatial_gradient(chart, p_field, q).data
        grad_y = extended_fields.spatial_gradient(chart, y_field, dual).data
        fib_x = extended_fields.velocity_gradient(chart, p_field, q).data
        fib_y = extended_fields.velocity_gradient_lowered(chart, y_field, dual).data
        note(
            "duality_gradient_commutation",
            max(
                float(np.max(np.abs(grad_y - grad_x))),
                float(np.max(np.abs(fib_y - fib_x))),
            ),
            index,
        )

        a = a_matrix(chart, lag, q)
        hp = ham.dp(chart, lam)
        dh_dv = extended_fields.fiber_partials(chart, h_field, q)
        note("fiber_chain_rule", float(np.max(np.abs(dh_dv - a @ hp))), index)

        grad_h = extended_fields.spatial_gradient(chart, h_field, q).data
        grad_h_ham = extended_fields.spatial_gradient(chart, ham.field, lam).data
        grad_p = extended_fields.spatial_gradient(chart, p_field, q).data
        rhs = grad_h_ham + grad_p.T @ hp
        note("spatial_chain_rule", float(np.max(np.abs(grad_h - rhs))), index)

        note("velocity_from_momentum_gradient", float(np.max(np.abs(v - hp))), index)

        h_val = ham.value(chart, lam)
        note(
            "dual_energy",
            abs(float(lam.p @ hp) - h_val - lag.value(chart, q)),
            index,
        )

        grad_l = extended_fields.spatial_gradient(chart, lag.field, q).data
        note(
            "opposite_spatial_gradients",
            float(np.max(np.abs(grad_h_ham + grad_l))),
            index,
        )

    return IdentityReport(residuals=residuals, worst_points=worst, points_checked=len(points))
