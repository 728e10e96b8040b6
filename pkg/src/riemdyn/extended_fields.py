"""Tensor fields that depend on position and on a fiber variable.

An extended field assigns tensor components X(x, v) or X(x, p) to every
state, where v is a tangent velocity (the "v" representation) and p a
cotangent momentum (the "p" representation). Because components depend
on the fiber coordinate, the covariant spatial derivative gains a fiber
correction alongside the usual Christoffel index terms:

    v-rep:  grad_q X = dX/dx^q - v^a Gamma^b_qa dX/dv^b
                       + Gamma-terms for upper indexes
                       - Gamma-terms for lower indexes
    p-rep:  same, with fiber correction + p_a Gamma^a_qb dX/dp_b

The fiber derivative is itself a tensor operation: in the v
representation d/dv^q adds a lower index, in the p representation
d/dp_q adds an upper index (a lowered variant contracts with the
metric). Along a curve t -> (x(t), v(t)) the covariant time derivative

    D_t X = dX/dt + Gamma index terms contracted with xdot

satisfies the chain rule D_t X = (grad X) . xdot + (fiber grad X) . D_t v,
which chain_rule_check verifies sample by sample.

Conventions: component axes are ordered upper-then-lower, every new
derivative axis is appended last, and Christoffel arrays are indexed
Gamma[k, i, j] = Gamma^k_ij.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import expression, manifold
from .errors import (
    FDStepError,
    InsufficientSamplesError,
    MissingAccelError,
    RankMismatchError,
)
from .manifold import FD_TOLERANCE, ManifoldChart

__all__ = [
    "TangentPoint",
    "CotangentPoint",
    "CurveSample",
    "ExtendedField",
    "TensorComponents",
    "x_partials",
    "fiber_partials",
    "spatial_gradient",
    "velocity_gradient",
    "velocity_gradient_lowered",
    "contract",
    "covariant_time_derivative",
    "chain_rule_check",
    "check_analytic_partials",
    "potential_scalar",
    "kinetic_energy_scalar",
    "velocity_vector_field",
    "lowered_velocity_field",
    "metric_tensor_field",
    "momentum_kinetic_scalar",
]

_EPS = float(np.finfo(float).eps)
_FD_STEP_SCALE = _EPS ** (1.0 / 3.0)


def _as_vector(value, dim: int, label: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (dim,):
        raise ValueError(f"{label} must have shape ({dim},), got {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class TangentPoint:
    """A point of the tangent bundle in chart coordinates: (x, v)."""

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))


@dataclass(frozen=True, eq=False)
class CotangentPoint:
    """A point of the cotangent bundle in chart coordinates: (x, p)."""

    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))


@dataclass(frozen=True, eq=False)
class CurveSample:
    """One sample of a curve in the tangent bundle.

    accel, when present, holds the covariant acceleration D_t v at the
    sample (an upper-index vector); checks that need it raise
    MissingAccelError when it is absent.
    """

    t: float
    point: TangentPoint
    accel: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class ExtendedField:
    """Tensor components over the tangent or cotangent bundle.

    rank is (upper, lower). rep is "v" or "p" and fixes which bundle the
    field lives on; every operation validates it against the point type
    so velocity and momentum data is never silently mixed. eval_fn maps
    (chart, point) to a component array of shape (dim,) * (upper + lower)
    with upper axes first. The two optional partials callables return
    analytic derivatives with the derivative axis appended last; when
    absent, central finite differences of eval_fn are used.
    """

    rank: tuple[int, int]
    rep: str
    eval_fn: Callable[[ManifoldChart, object], np.ndarray]
    x_partials_fn: Callable[[ManifoldChart, object], np.ndarray] | None = None
    fiber_partials_fn: Callable[[ManifoldChart, object], np.ndarray] | None = None
    name: str = ""

    def __post_init__(self):
        if self.rep not in ("v", "p"):
            raise ValueError(f"rep must be 'v' or 'p', got {self.rep!r}")
        if len(self.rank) != 2 or min(self.rank) < 0:
            raise ValueError(f"rank must be a pair of non-negative ints, got {self.rank!r}")

    @property
    def variance(self) -> tuple[str, ...]:
        return ("u",) * self.rank[0] + ("l",) * self.rank[1]


@dataclass(frozen=True, eq=False)
class TensorComponents:
    """A plain component array tagged with per-axis variance ('u' or 'l')."""

    data: np.ndarray
    variance: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=float))
        if len(self.variance) != self.data.ndim:
            raise RankMismatchError(
                f"variance {self.variance!r} does not match array of ndim {self.data.ndim}"
            )
        if any(tag not in ("u", "l") for tag in self.variance):
            raise RankMismatchError(f"variance tags must be 'u' or 'l': {self.variance!r}")


def _fiber_of(field: ExtendedField, point) -> np.ndarray:
    if field.rep == "v":
        if not isinstance(point, TangentPoint):
            raise ValueError(
                f"field {field.name!r} is velocity-represented but got {type(point).__name__}"
            )
        return point.v
    if not isinstance(point, CotangentPoint):
        raise ValueError(
            f"field {field.name!r} is momentum-represented but got {type(point).__name__}"
        )
    return point.p


def _with_fiber(point, fiber: np.ndarray):
    if isinstance(point, TangentPoint):
        return TangentPoint(point.x, fiber)
    return CotangentPoint(point.x, fiber)


def _with_base(point, x: np.ndarray):
    if isinstance(point, TangentPoint):
        return TangentPoint(x, point.v)
    return CotangentPoint(x, point.p)


def _component_shape(field: ExtendedField, dim: int) -> tuple[int, ...]:
    return (dim,) * (field.rank[0] + field.rank[1])


def _eval_components(chart: ManifoldChart, field: ExtendedField, point) -> np.ndarray:
    _fiber_of(field, point)
    out = np.asarray(field.eval_fn(chart, point), dtype=float)
    want = _component_shape(field, chart.dim)
    if out.shape != want:
        raise RankMismatchError(
            f"field {field.name!r} produced shape {out.shape}, expected {want}"
        )
    return out


def x_partials(chart: ManifoldChart, field: ExtendedField, point) -> np.ndarray:
    """dX/dx^q at fixed fiber components, derivative axis last."""
    if field.x_partials_fn is not None:
        return np.asarray(field.x_partials_fn(chart, point), dtype=float)
    x = manifold.check_point(chart, point.x)
    n = chart.dim
    out = np.empty(_component_shape(field, n) + (n,))
    for q in range(n):
        h = _FD_STEP_SCALE * max(1.0, abs(x[q]))
        hi, lo = x.copy(), x.copy()
        hi[q] += h
        lo[q] -= h
        if not (manifold.in_domain(chart, hi) and manifold.in_domain(chart, lo)):
            raise FDStepError(
                f"x-partial stencil leaves chart {chart.name!r} at {x!r}, axis {q}"
            )
        f_hi = _eval_components(chart, field, _with_base(point, hi))
        f_lo = _eval_components(chart, field, _with_base(point, lo))
        out[..., q] = (f_hi - f_lo) / (2.0 * h)
    return out


def fiber_partials(chart: ManifoldChart, field: ExtendedField, point) -> np.ndarray:
    """dX/dv^b (or dX/dp_b), derivative axis last."""
    if field.fiber_partials_fn is not None:
        return np.asarray(field.fiber_partials_fn(chart, point), dtype=float)
    fiber = _fiber_of(field, point)
    n = chart.dim
    out = np.empty(_component_shape(field, n) + (n,))
    for b in range(n):
        h = _FD_STEP_SCALE * max(1.0, abs(fiber[b]))
        hi, lo = fiber.copy(), fiber.copy()
        hi[b] += h
        lo[b] -= h
        f_hi = _eval_components(chart, field, _with_fiber(point, hi))
        f_lo = _eval_components(chart, field, _with_fiber(point, lo))
        out[..., b] = (f_hi - f_lo) / (2.0 * h)
    return out


def _fiber_correction(
    gamma: np.ndarray, fiber: np.ndarray, dfib: np.ndarray, rep: str
) -> np.ndarray:
    """The fiber term of the spatial gradient, shape like dfib.

    v-rep: - v^a Gamma^b_qa dX/dv^b.  p-rep: + p_a Gamma^a_qb dX/dp_b.
    """
    if rep == "v":
        m = np.einsum("a,bqa->bq", fiber, gamma)
        return -np.einsum("...b,bq->...q", dfib, m)
    m = np.einsum("a,aqb->bq", fiber, gamma)
    return np.einsum("...b,bq->...q", dfib, m)


def _index_terms(gamma: np.ndarray, data: np.ndarray, variance: Sequence[str]) -> np.ndarray:
    """Christoffel corrections for every component index, q axis appended."""
    n = gamma.shape[0]
    out = np.zeros(data.shape + (n,))
    for axis, tag in enumerate(variance):
        if tag == "u":
            # + Gamma^k_qa X^(...a...): contract the component axis with
            # gamma's last slot, new component index k, free index q last.
            term = np.tensordot(data, gamma, axes=([axis], [2]))
            term = np.moveaxis(term, -2, axis)
            out += term
        else:
            # - Gamma^b_qj X_(...b...): contract with gamma's first slot.
            term = np.tensordot(data, np.swapaxes(gamma, 1, 2), axes=([axis], [0]))
            term = np.moveaxis(term, -2, axis)
            out -= term
    return out


def spatial_gradient(chart: ManifoldChart, field: ExtendedField, point) -> TensorComponents:
    """Covariant spatial derivative, one new lower index appended."""
    fiber = _fiber_of(field, point)
    gamma = manifold.christoffel_at(chart, point.x)
    dx = x_partials(chart, field, point)
    dfib = fiber_partials(chart, field, point)
    data = dx + _fiber_correction(gamma, fiber, dfib, field.rep)
    if field.rank != (0, 0):
        values = _eval_components(chart, field, point)
        data = data + _index_terms(gamma, values, field.variance)
    return TensorComponents(data, field.variance + ("l",))


def velocity_gradient(chart: ManifoldChart, field: ExtendedField, point) -> TensorComponents:
    """Fiber derivative: d/dv^q adds a lower index, d/dp_q an upper one."""
    dfib = fiber_partials(chart, field, point)
    new_tag = "l" if field.rep == "v" else "u"
    return TensorComponents(dfib, field.variance + (new_tag,))


def velocity_gradient_lowered(
    chart: ManifoldChart, field: ExtendedField, point
) -> TensorComponents:
    """Momentum-representation fiber derivative with the new index lowered.

    Contracts d/dp_k with the metric: g_qk dX/dp_k. Only meaningful for
    p-rep fields; v-rep fields already produce a lower index.
    """
    if field.rep != "p":
        raise ValueError("lowered fiber gradient applies to p-rep fields only")
    dfib = fiber_partials(chart, field, point)
    g = manifold.metric_at(chart, point.x)
    return TensorComponents(
        np.einsum("...k,qk->...q", dfib, g), field.variance + ("l",)
    )


def contract(a: TensorComponents, b: TensorComponents, slot_a: int, slot_b: int) -> TensorComponents:
    """Contract one slot of a against one slot of b (one upper, one lower)."""
    if not (0 <= slot_a < len(a.variance)) or not (0 <= slot_b < len(b.variance)):
        raise RankMismatchError(
            f"slots ({slot_a}, {slot_b}) out of range for variances "
            f"{a.variance!r} and {b.variance!r}"
        )
    if a.variance[slot_a] == b.variance[slot_b]:
        raise RankMismatchError(
            f"cannot contract two {a.variance[slot_a]!r} slots; "
            "one upper and one lower index required"
        )
    if a.data.shape[slot_a] != b.data.shape[slot_b]:
        raise RankMismatchError(
            f"slot lengths differ: {a.data.shape[slot_a]} vs {b.data.shape[slot_b]}"
        )
    data = np.tensordot(a.data, b.data, axes=([slot_a], [slot_b]))
    variance = (
        tuple(t for i, t in enumerate(a.variance) if i != slot_a)
        + tuple(t for i, t in enumerate(b.variance) if i != slot_b)
    )
    return TensorComponents(data, variance)


def _check_uniform_times(samples: Sequence[CurveSample]) -> float:
    if len(samples) < 3:
        raise InsufficientSamplesError(
            f"need at least 3 samples, got {len(samples)}"
        )
    ts = np.array([s.t for s in samples])
    dts = np.diff(ts)
    dt = float(dts[0])
    if dt <= 0.0 or not np.allclose(dts, dt, rtol=1e-9, atol=1e-12):
        raise InsufficientSamplesError("samples must be uniformly spaced in t")
    return dt


def covariant_time_derivative(
    chart: ManifoldChart,
    samples: Sequence[CurveSample],
    values,
    variance: tuple[str, ...] = (),
) -> np.ndarray:
    """D_t of component values recorded along a curve.

    values has shape (len(samples),) + component shape; variance tags the
    component axes. The time derivative uses second-order differences
    (central inside, one-sided at the ends) plus Christoffel index terms
    contracted with the curve velocity.
    """
    dt = _check_uniform_times(samples)
    values = np.asarray(values, dtype=float)
    if values.shape[0] != len(samples):
        raise InsufficientSamplesError(
            f"got {values.shape[0]} value rows for {len(samples)} samples"
        )
    if values.ndim - 1 != len(variance):
        raise RankMismatchError(
            f"variance {variance!r} does not match value shape {values.shape[1:]}"
        )
    ddt = np.gradient(values, dt, axis=0, edge_order=2)
    if not variance:
        return ddt
    out = np.empty_like(ddt)
    for i, sample in enumerate(samples):
        gamma = manifold.christoffel_at(chart, sample.point.x)
        v = sample.point.v
        corr = np.zeros(values.shape[1:])
        for axis, tag in enumerate(variance):
            if tag == "u":
                m = np.einsum("kqa,q->ka", gamma, v)
                term = np.tensordot(values[i], m, axes=([axis], [1]))
            else:
                m = np.einsum("bqj,q->bj", gamma, v)
                term = -np.tensordot(values[i], m, axes=([axis], [0]))
            corr += np.moveaxis(term, -1, axis)
        out[i] = ddt[i] + corr
    return out


def chain_rule_check(
    chart: ManifoldChart, field: ExtendedField, samples: Sequence[CurveSample]
) -> np.ndarray:
    """Residual of D_t X = (grad X) . xdot + (fiber grad X) . D_t v per sample.

    Returns an array of shape (len(samples),) + component shape; a small
    residual confirms the two gradients and the curve data are mutually
    consistent. Requires a v-rep field and samples carrying accel.
    """
    if field.rep != "v":
        raise ValueError("chain rule check runs on v-rep fields")
    for sample in samples:
        if sample.accel is None:
            raise MissingAccelError(f"sample at t={sample.t} lacks covariant accel")
    values = np.stack(
        [_eval_components(chart, field, s.point) for s in samples], axis=0
    )
    lhs = covariant_time_derivative(chart, samples, values, field.variance)
    residual = np.empty_like(lhs)
    for i, sample in enumerate(samples):
        grad = spatial_gradient(chart, field, sample.point).data
        vgrad = velocity_gradient(chart, field, sample.point).data
        rhs = np.einsum("...q,q->...", grad, sample.point.v)
        rhs = rhs + np.einsum("...b,b->...", vgrad, sample.accel)
        residual[i] = lhs[i] - rhs
    return residual


def check_analytic_partials(
    chart: ManifoldChart,
    field: ExtendedField,
    points: Sequence,
    tol: float = FD_TOLERANCE,
) -> float:
    """Worst disagreement between analytic partials and FD over the points.

    Returns the max absolute difference; raises ValueError if it exceeds
    tol. Fields without analytic hooks trivially pass with 0.0.
    """
    stripped = dataclasses.replace(field, x_partials_fn=None, fiber_partials_fn=None)
    worst = 0.0
    for point in points:
        if field.x_partials_fn is not None:
            diff = np.max(np.abs(x_partials(chart, field, point) - x_partials(chart, stripped, point)))
            worst = max(worst, float(diff))
        if field.fiber_partials_fn is not None:
            diff = np.max(np.abs(fiber_partials(chart, field, point) - fiber_partials(chart, stripped, point)))
            worst = max(worst, float(diff))
    if worst > tol:
        raise ValueError(
            f"analytic partials of {field.name!r} disagree with FD by {worst:.3e}"
        )
    return worst


# ---------------------------------------------------------------------------
# Field catalog used by checks and higher layers


def potential_scalar(u) -> ExtendedField:
    """Scalar U(x) on the tangent bundle, constant along fibers."""
    u_expr = expression.coordinate_expr(u) if isinstance(u, str) else u

    def ev(chart, point):
        return np.array(expression.evaluate(u_expr, point.x))

    def dx(chart, point):
        return np.array(expression.gradient(u_expr, point.x))

    def dfib(chart, point):
        return np.zeros(chart.dim)

    return ExtendedField((0, 0), "v", ev, dx, dfib, name=f"U({u_expr.source})")


def kinetic_energy_scalar() -> ExtendedField:
    """Scalar (1/2) g_ij v^i v^j."""

    def ev(chart, point):
        g = manifold.metric_at(chart, point.x)
        return np.array(0.5 * point.v @ g @ point.v)

    def dx(chart, point):
        dg = manifold.metric_partials_at(chart, point.x)
        return 0.5 * np.einsum("ijq,i,j->q", dg, point.v, point.v)

    def dfib(chart, point):
        return manifold.metric_at(chart, point.x) @ point.v

    return ExtendedField((0, 0), "v", ev, dx, dfib, name="kinetic_energy")


def velocity_vector_field() -> ExtendedField:
    """The tautological vector field X^k = v^k."""

    def ev(chart, point):
        return point.v.copy()

    def dx(chart, point):
        return np.zeros((chart.dim, chart.dim))

    def dfib(chart, point):
        return np.eye(chart.dim)

    return ExtendedField((1, 0), "v", ev, dx, dfib, name="velocity")


def lowered_velocity_field() -> ExtendedField:
    """The covector field X_k = g_kj v^j."""

    def ev(chart, point):
        return manifold.metric_at(chart, point.x) @ point.v

    def dx(chart, point):
        dg = manifold.metric_partials_at(chart, point.x)
        return np.einsum("kjq,j->kq", dg, point.v)

    def dfib(chart, point):
        return manifold.metric_at(chart, point.x)

    return ExtendedField((0, 1), "v", ev, dx, dfib, name="lowered_velocity")


def metric_tensor_field() -> ExtendedField:
    """The metric itself as a rank (0, 2) extended field."""

    def ev(chart, point):
        return manifold.metric_at(chart, point.x)

    def dx(chart, point):
        return manifold.metric_partials_at(chart, point.x)

    def dfib(chart, point):
        return np.zeros((chart.dim, chart.dim, chart.dim))

    return ExtendedField((0, 2), "v", ev, dx, dfib, name="metric")


def momentum_kinetic_scalar() -> ExtendedField:
    """Scalar (1/2) g^ij p_i p_j on the cotangent bundle."""

    def ev(chart, point):
        ginv = manifold.inverse_metric_at(chart, point.x)
        return np.array(0.5 * point.p @ ginv @ point.p)

    def dx(chart, point):
        g = manifold.metric_at(chart, point.x)
        dg = manifold.metric_partials_at(chart, point.x)
        ginv = np.linalg.inv(g)
        dginv = -np.einsum("ia,abq,bj->ijq", ginv, dg, ginv)
        return 0.5 * np.einsum("ijq,i,j->q", dginv, point.p, point.p)

    def dfib(chart, point):
        return manifold.inverse_metric_at(chart, point.x) @ point.p

    return ExtendedField((0, 0), "p", ev, dx, dfib, name="momentum_kinetic")
