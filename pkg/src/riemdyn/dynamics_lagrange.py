"""Lagrangian systems on the tangent bundle of a chart.

A Lagrangian here is a scalar extended field L(x, v) together with
optional analytic hooks for its fiber Hessian A_ij = d2L/dv^i dv^j and
mixed partials d2L/dx^s dv^k. The Euler-Lagrange equations are handled
in two equivalent shapes:

  * covariant: solving A F = grad L - (grad P) . v for the force vector
    F, where P_k = dL/dv^k is the momentum covector field and grad the
    covariant spatial gradient; the motion is then the Newtonian system
    with force F.
  * classical: A vdot = dL/dx - (d2L/dxdv) v in plain coordinates.

el_residual evaluates D_t P - grad L along recorded trajectories with
covariant machinery and analytic hooks; classical_el_residual evaluates
d/dt (dL/dv) - dL/dx using finite differences only, so the two routes
stay independent down to their derivative plumbing.

The builtin catalog covers the kinetic scalar (1/2)|v|^2, kinetic minus
a potential U(x), the conformal kinetic scalar (1/2) e^(-2f(x)) |v|^2,
and the fiberwise symmetric family phi(C(x) |v|).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from . import expression, extended_fields, manifold, normal_shift
from .dynamics_newton import ForceField, IntegratorConfig, Trajectory, integrate_ode
from .errors import SingularAError, ZeroVelocityError
from .extended_fields import CurveSample, ExtendedField, TangentPoint
from .manifold import ManifoldChart
from .normal_shift import (
    FiberwiseSymmetricLagrangian,
    RadialProfile,
    conformal_kinetic_profile,
    kinetic_profile,
    phi_profile,
    zero_velocity_floor,
)

__all__ = [
    "Lagrangian",
    "RegularityReport",
    "kinetic_lagrangian",
    "kinetic_minus_potential",
    "conformal_kinetic_lagrangian",
    "fiberwise_phi_lagrangian",
    "catalog_lagrangian",
    "momentum_field",
    "a_matrix",
    "regularity",
    "force_from_lagrangian",
    "lagrangian_force_field",
    "el_residual",
    "classical_el_residual",
    "integrate_lagrangian",
]

_EPS = float(np.finfo(float).eps)
_FD2_STEP_SCALE = _EPS ** 0.25


@dataclass(frozen=True)
class Lagrangian:
    """A scalar Lagrangian with optional analytic derivative hooks.

    field is the scalar extended field L itself (v representation).
    second_fiber_fn returns A_ij with shape (n, n); mixed_partials_fn
    returns M[k, s] = d2L/dx^s dv^k (derivative axis last). family and
    params identify catalog members so the Hamiltonian side can attach
    closed forms; profile carries the fiberwise symmetric reduction when
    one exists.
    """

    field: ExtendedField
    family: str
    params: dict = dc_field(default_factory=dict)
    second_fiber_fn: Callable[[ManifoldChart, TangentPoint], np.ndarray] | None = None
    mixed_partials_fn: Callable[[ManifoldChart, TangentPoint], np.ndarray] | None = None
    profile: RadialProfile | None = None
    name: str = ""

    def value(self, chart: ManifoldChart, point: TangentPoint) -> float:
        return float(self.field.eval_fn(chart, point))

    def dx(self, chart: ManifoldChart, point: TangentPoint) -> np.ndarray:
        """Plain partials dL/dx^q at fixed velocity components."""
        return extended_fields.x_partials(chart, self.field, point)

    def dv(self, chart: ManifoldChart, point: TangentPoint) -> np.ndarray:
        """Momentum covector P_k = dL/dv^k."""
        return extended_fields.fiber_partials(chart, self.field, point)


def momentum_field(lagrangian: Lagrangian) -> ExtendedField:
    """The momentum covector P_k = dL/dv^k as a rank (0, 1) field."""
    return ExtendedField(
        rank=(0, 1),
        rep="v",
        eval_fn=lambda chart, point: lagrangian.dv(chart, point),
        x_partials_fn=lagrangian.mixed_partials_fn,
        fiber_partials_fn=lagrangian.second_fiber_fn,
        name=f"momentum[{lagrangian.name}]",
    )


def a_matrix(chart: ManifoldChart, lagrangian: Lagrangian, point: TangentPoint) -> np.ndarray:
    """Fiber Hessian A_ij = d2L/dv^i dv^j, analytic when available."""
    if lagrangian.second_fiber_fn is not None:
        return np.asarray(lagrangian.second_fiber_fn(chart, point), dtype=float)
    if lagrangian.field.fiber_partials_fn is not None:
        return extended_fields.fiber_partials(chart, momentum_field(lagrangian), point)
    return _fd2_fiber(chart, lagrangian.field, point)


def _fd2_fiber(chart: ManifoldChart, field: ExtendedField, point: TangentPoint) -> np.ndarray:
    """Second fiber differences of a scalar field, step eps^(1/4)."""
    n = chart.dim
    v = point.v
    steps = _FD2_STEP_SCALE * np.maximum(1.0, np.abs(v))

    def val(dv):
        return float(field.eval_fn(chart, TangentPoint(point.x, v + dv)))

    out = np.empty((n, n))
    center = val(np.zeros(n))
    for k in range(n):
        ek = np.zeros(n)
        ek[k] = steps[k]
        out[k, k] = (val(ek) - 2.0 * center + val(-ek)) / (steps[k] ** 2)
        for b in range(k + 1, n):
            eb = np.zeros(n)
            eb[b] = steps[b]
            mixed = (
                val(ek + eb) - val(ek - eb) - val(-ek + eb) + val(-ek - eb)
            ) / (4.0 * steps[k] * steps[b])
            out[k, b] = mixed
            out[b, k] = mixed
    return out


@dataclass(frozen=True)
class RegularityReport:
    """Determinant and spectrum summary of the fiber Hessian at a state."""

    det_a: float
    min_abs_eig: float
    is_regular: bool
    is_positive: bool
    tolerance: float


def _det_tolerance(a: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(a))))
    return 1e-10 * scale ** a.shape[0]


def regularity(chart: ManifoldChart, lagrangian: Lagrangian, point: TangentPoint) -> RegularityReport:
    """Classify the fiber Hessian at a state as regular / positive definite."""
    a = a_matrix(chart, lagrangian, point)
    det = float(np.linalg.det(a))
    eigs = np.linalg.eigvalsh(0.5 * (a + a.T))
    tol = _det_tolerance(a)
    lin_tol = 1e-10 * max(1.0, float(np.max(np.abs(a))))
    return RegularityReport(
        det_a=det,
        min_abs_eig=float(np.min(np.abs(eigs))),
        is_regular=abs(det) > tol,
        is_positive=bool(np.all(eigs > lin_tol)),
        tolerance=tol,
    )


def force_from_lagrangian(
    chart: ManifoldChart, lagrangian: Lagrangian, point: TangentPoint
) -> np.ndarray:
    """Force vector F^s solving A F = grad L - (grad P) . v.

    grad is the covariant spatial gradient, P the momentum covector
    field; the resulting Newtonian system reproduces the Euler-Lagrange
    motion of the Lagrangian.
    """
    a = a_matrix(chart, lagrangian, point)
    tol = _det_tolerance(a)
    det = float(np.linalg.det(a))
    if abs(det) <= tol:
        raise SingularAError(
            f"fiber Hessian is singular (det {det:.3e}, tolerance {tol:.3e})"
        )
    grad_l = extended_fields.spatial_gradient(chart, lagrangian.field, point).data
    grad_p = extended_fields.spatial_gradient(chart, momentum_field(lagrangian), point).data
    rhs = grad_l - grad_p @ point.v
    return np.linalg.solve(a, rhs)


def lagrangian_force_field(lagrangian: Lagrangian) -> ForceField:
    """The extracted force as a plain (upper index) force field."""
    return ForceField(
        lambda chart, point: force_from_lagrangian(chart, lagrangian, point),
        covariant=False,
        name=f"lagrangian({lagrangian.name})",
    )


def _as_samples(trajectory_or_samples) -> list[CurveSample]:
    if isinstance(trajectory_or_samples, Trajectory):
        return trajectory_or_samples.curve_samples()
    return list(trajectory_or_samples)


def el_residual(chart: ManifoldChart, lagrangian: Lagrangian, trajectory) -> np.ndarray:
    """Covariant Euler-Lagrange residual D_t P_k - grad_k L per sample.

    Zero (to discretization error) along true trajectories of the
    system. Accepts a Trajectory or a list of CurveSamples.
    """
    samples = _as_samples(trajectory)
    values = np.stack(
        [extended_fields.fiber_partials(chart, lagrangian.field, s.point) for s in samples]
    )
    dtp = extended_fields.covariant_time_derivative(chart, samples, values, ("l",))
    out = np.empty_like(dtp)
    for i, sample in enumerate(samples):
        grad_l = extended_fields.spatial_gradient(chart, lagrangian.field, sample.point).data
        out[i] = dtp[i] - grad_l
    return out


def classical_el_residual(chart: ManifoldChart, lagrangian: Lagrangian, trajectory) -> np.ndarray:
    """Textbook residual d/dt (dL/dv^k) - dL/dx^k, finite differences only.

    Both partials come from central differences of the raw Lagrangian
    value and the time derivative from second-order differences of the
    sampled momenta, so this route shares no analytic derivative code
    with el_residual.
    """
    samples = _as_samples(trajectory)
    stripped = dataclasses.replace(
        lagrangian.field, x_partials_fn=None, fiber_partials_fn=None
    )
    ts = np.array([s.t for s in samples])
    dt = float(ts[1] - ts[0])
    momenta = np.stack(
        [extended_fields.fiber_partials(chart, stripped, s.point) for s in samples]
    )
    ddt = np.gradient(momenta, dt, axis=0, edge_order=2)
    out = np.empty_like(momenta)
    for i, sample in enumerate(samples):
        dldx = extended_fields.x_partials(chart, stripped, sample.point)
        out[i] = ddt[i] - dldx
    return out


def integrate_lagrangian(
    chart: ManifoldChart,
    lagrangian: Lagrangian,
    q0: TangentPoint,
    config: IntegratorConfig,
    energy_fn: Callable[[ManifoldChart, TangentPoint], float] | None = None,
) -> Trajectory:
    """Integrate A vdot = dL/dx - (d2L/dxdv) v in plain coordinates.

    This is the classical second-order route; it never forms the
    covariant force or touches Christoffel symbols, so it serves as an
    independent leg against the Newtonian reduction.
    """
    n = chart.dim
    manifold.check_point(chart, q0.x)
    p_field = momentum_field(lagrangian)

    def rhs(t, y):
        point = TangentPoint(y[:n], y[n:])
        manifold.check_point(chart, point.x)
        a = a_matrix(chart, lagrangian, point)
        tol = _det_tolerance(a)
        det = float(np.linalg.det(a))
        if abs(det) <= tol:
            raise SingularAError(
                f"fiber Hessian is singular (det {det:.3e}) during integration"
            )
        dldx = extended_fields.x_partials(chart, lagrangian.field, point)
        mixed = extended_fields.x_partials(chart, p_field, point)
        vdot = np.linalg.solve(a, dldx - mixed @ point.v)
        return np.concatenate([point.v, vdot])

    y0 = np.concatenate([q0.x, q0.v])
    ts, ys, status = integrate_ode(
        rhs, y0, config, lambda y: manifold.in_domain(chart, y[:n])
    )
    xs = np.array([y[:n] for y in ys])
    vs = np.array([y[n:] for y in ys])
    speeds = np.array([manifold.speed(chart, x, v) for x, v in zip(xs, vs)])
    energies = None
    if energy_fn is not None:
        energies = np.array(
            [energy_fn(chart, TangentPoint(x, v)) for x, v in zip(xs, vs)]
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


# ---------------------------------------------------------------------------
# Catalog


def kinetic_lagrangian() -> Lagrangian:
    """L = (1/2) g_ij v^i v^j; its trajectories are geodesics."""
    field = extended_fields.kinetic_energy_scalar()

    def second_fiber(chart, point):
        return manifold.metric_at(chart, point.x)

    def mixed(chart, point):
        dg = manifold.metric_partials_at(chart, point.x)
        return np.einsum("kjs,j->ks", dg, point.v)

    return Lagrangian(
        field=field,
        family="kinetic",
        second_fiber_fn=second_fiber,
        mixed_partials_fn=mixed,
        profile=kinetic_profile(),
        name="kinetic",
    )


def kinetic_minus_potential(u) -> Lagrangian:
    """L = (1/2)|v|^2 - U(x)."""
    u_expr = expression.coordinate_expr(u) if isinstance(u, str) else u
    kinetic = extended_fields.kinetic_energy_scalar()

    def ev(chart, point):
        return np.array(
            float(kinetic.eval_fn(chart, point)) - expression.evaluate(u_expr, point.x)
        )

    def dx(chart, point):
        return kinetic.x_partials_fn(chart, point) - np.array(
            expression.gradient(u_expr, point.x)
        )

    def dfib(chart, point):
        return manifold.metric_at(chart, point.x) @ point.v

    field = ExtendedField((0, 0), "v", ev, dx, dfib, name=f"kinetic-U({u_expr.source})")

    def second_fiber(chart, point):
        return manifold.metric_at(chart, point.x)

    def mixed(chart, point):
        dg = manifold.metric_partials_at(chart, point.x)
        return np.einsum("kjs,j->ks", dg, point.v)

    def profile_x_partials(x, w):
        return -np.array(expression.gradient(u_expr, x))

    profile = RadialProfile(
        value=lambda x, w: 0.5 * w * w - expression.evaluate(u_expr, x),
        d_w=lambda x, w: w,
        d2_w=lambda x, w: 1.0,
        x_partials=profile_x_partials,
        x_partials_d_w=lambda x, w: np.zeros(len(x)),
        name=f"kinetic-U({u_expr.source})",
    )
    return Lagrangian(
        field=field,
        family="kinetic-potential",
        params={"U": u_expr},
        second_fiber_fn=second_fiber,
        mixed_partials_fn=mixed,
        profile=profile,
        name=f"kinetic-potential[{u_expr.source}]",
    )


def conformal_kinetic_lagrangian(f) -> Lagrangian:
    """L = (1/2) e^(-2 f(x)) g_ij v^i v^j."""
    f_expr = expression.coordinate_expr(f) if isinstance(f, str) else f

    def factor(x):
        return math.exp(-2.0 * expression.evaluate(f_expr, x))

    def df(x):
        return np.array(expression.gradient(f_expr, x))

    def ev(chart, point):
        g = manifold.metric_at(chart, point.x)
        return np.array(0.5 * factor(point.x) * point.v @ g @ point.v)

    def dx(chart, point):
        x, v = point.x, point.v
        g = manifold.metric_at(chart, x)
        dg = manifold.metric_partials_at(chart, x)
        quad = float(v @ g @ v)
        return factor(x) * (0.5 * np.einsum("ijs,i,j->s", dg, v, v) - quad * df(x))

    def dfib(chart, point):
        g = manifold.metric_at(chart, point.x)
        return factor(point.x) * (g @ point.v)

    field = ExtendedField((0, 0), "v", ev, dx, dfib, name=f"conformal({f_expr.source})")

    def second_fiber(chart, point):
        return factor(point.x) * manifold.metric_at(chart, point.x)

    def mixed(chart, point):
        x, v = point.x, point.v
        g = manifold.metric_at(chart, x)
        dg = manifold.metric_partials_at(chart, x)
        v_low = g @ v
        return factor(x) * (
            np.einsum("kjs,j->ks", dg, v) - 2.0 * np.outer(v_low, df(x))
        )

    return Lagrangian(
        field=field,
        family="conformal-kinetic",
        params={"f": f_expr},
        second_fiber_fn=second_fiber,
        mixed_partials_fn=mixed,
        profile=conformal_kinetic_profile(f_expr),
        name=f"conformal-kinetic[{f_expr.source}]",
    )


def fiberwise_phi_lagrangian(phi, c="1") -> Lagrangian:
    """L = phi(C(x) |v|), singular on the zero section.

    phi is an expression in "w", C a positive coordinate expression.
    Value evaluation is defined everywhere, but derivative hooks raise
    ZeroVelocityError below the zero-velocity floor.
    """
    phi_expr = expression.profile_expr(phi, fiber_var="w") if isinstance(phi, str) else phi
    c_expr = expression.coordinate_expr(c) if isinstance(c, str) else c
    profile = phi_profile(phi_expr, c_expr)
    wrapper = FiberwiseSymmetricLagrangian(profile, name=profile.name)

    def modulus(chart, point):
        w = manifold.speed(chart, point.x, point.v)
        if w <= zero_velocity_floor(point.x):
            raise ZeroVelocityError(
                f"Lagrangian {profile.name!r} is singular at |v|={w:.3e}"
            )
        return w

    def ev(chart, point):
        w = manifold.speed(chart, point.x, point.v)
        return np.array(profile.value(point.x, w))

    def modulus_x_partials(chart, point, w):
        dg = manifold.metric_partials_at(chart, point.x)
        return np.einsum("ijs,i,j->s", dg, point.v, point.v) / (2.0 * w)

    def dx(chart, point):
        w = modulus(chart, point)
        w_s = modulus_x_partials(chart, point, w)
        return profile.x_partials(point.x, w) + profile.d_w(point.x, w) * w_s

    def dfib(chart, point):
        w = modulus(chart, point)
        v_low = manifold.lower_index(chart, point.x, point.v)
        return profile.d_w(point.x, w) * v_low / w

    field = ExtendedField((0, 0), "v", ev, dx, dfib, name=profile.name)

    def second_fiber(chart, point):
        modulus(chart, point)
        return normal_shift.symmetric_a_matrix(chart, wrapper, point)

    def mixed(chart, point):
        w = modulus(chart, point)
        x, v = point.x, point.v
        d1 = profile.d_w(x, w)
        d2 = profile.d2_w(x, w)
        xd = profile.x_partials_d_w(x, w)
        w_s = modulus_x_partials(chart, point, w)
        g = manifold.metric_at(chart, x)
        dg = manifold.metric_partials_at(chart, x)
        v_low = g @ v
        dgv = np.einsum("kjs,j->ks", dg, v)
        radial = np.outer(v_low / w, xd + d2 * w_s)
        geometric = d1 * (dgv / w - np.outer(v_low, w_s) / (w * w))
        return radial + geometric

    return Lagrangian(
        field=field,
        family="fiberwise-phi",
        params={"phi": phi_expr, "C": c_expr},
        second_fiber_fn=second_fiber,
        mixed_partials_fn=mixed,
        profile=profile,
        name=f"fiberwise[{profile.name}]",
    )


def catalog_lagrangian(family: str, **params) -> Lagrangian:
    """Build a catalog Lagrangian by family name."""
    if family == "kinetic":
        return kinetic_lagrangian()
    if family == "kinetic-potential":
        return kinetic_minus_potential(params["U"])
    if family == "conformal-kinetic":
        return conformal_kinetic_lagrangian(params["f"])
    if family == "fiberwise-phi":
        return fiberwise_phi_lagrangian(params["phi"], params.get("C", "1"))
    raise ValueError(f"unknown Lagrangian family {family!r}")
