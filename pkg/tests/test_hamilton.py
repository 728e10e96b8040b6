"""Legendre maps, closed-form Hamiltonians, and the canonical equations."""

import dataclasses

import numpy as np
import pytest

from riemdyn import dynamics_hamilton as dh
from riemdyn import dynamics_lagrange as dl
from riemdyn import dynamics_newton as dn
from riemdyn import manifold, verification
from riemdyn.errors import NonConvergenceError
from riemdyn.extended_fields import CotangentPoint, TangentPoint

_FAMILIES = [
    ("kinetic", {}),
    ("kinetic-potential", {"U": "sin(x1) + x2^2/2"}),
    ("conformal-kinetic", {"f": "x1/2"}),
    ("fiberwise-phi", {"phi": "w^2/2 + w^4/10", "C": "exp(-x1/4)"}),
]


@pytest.mark.parametrize("family,params", _FAMILIES)
@pytest.mark.parametrize("chart_name", ["polar2d", "sphere2d"])
def test_identity_suite_per_family(family, params, chart_name):
    chart = manifold.builtin_chart(chart_name)
    ctx = dh.LegendreContext(dl.catalog_lagrangian(family, **params))
    rng = np.random.default_rng(23)
    points = verification.sample_tangent_states(chart, 10, rng, min_speed=0.3)
    report = dh.identity_suite(ctx, chart, points)
    assert report.points_checked == 10
    assert set(report.residuals) == {
        "duality_gradient_commutation",
        "fiber_chain_rule",
        "spatial_chain_rule",
        "velocity_from_momentum_gradient",
        "dual_energy",
        "opposite_spatial_gradients",
    }
    assert report.max_residual() < 1e-6


def test_legendre_inverse_conformal_oracle():
    # L = (1/2) exp(-2 x1) |v|^2 on the flat chart gives p = exp(-2 x1) v,
    # so the inverse map is v = exp(2 x1) p exactly.
    chart = manifold.builtin_chart("euclidean2")
    ctx = dh.LegendreContext(dl.fiberwise_phi_lagrangian("w^2/2", "exp(-x1)"))
    x = np.array([0.7, -0.2])
    p = np.array([0.4, 0.1])
    q = dh.legendre_inverse(ctx, chart, CotangentPoint(x, p))
    assert np.max(np.abs(q.v - np.exp(1.4) * p)) < 1e-12


@pytest.mark.parametrize("family,params", _FAMILIES)
def test_legendre_roundtrip(family, params):
    chart = manifold.builtin_chart("polar2d")
    ctx = dh.LegendreContext(dl.catalog_lagrangian(family, **params))
    rng = np.random.default_rng(31)
    for q in verification.sample_tangent_states(chart, 10, rng, min_speed=0.3):
        state = dh.legendre_forward(ctx, chart, q)
        back = dh.legendre_inverse(ctx, chart, state)
        assert np.max(np.abs(back.v - q.v)) < 1e-9


def test_warm_start_reuses_previous_solution():
    """Tracking a slowly moving momentum should get cheaper, not costlier."""
    chart = manifold.builtin_chart("euclidean2")
    lag = dl.fiberwise_phi_lagrangian("w^2/2 + w^4/10", "exp(-x1/4)")
    warm = dh.LegendreContext(lag, warm_start=True)
    cold = dh.LegendreContext(lag, warm_start=False)
    x = np.array([0.2, -0.1])
    warm_total = 0
    cold_total = 0
    for t in np.linspace(0.0, 1.0, 20):
        p = np.array([0.8 + 0.05 * t, 0.3 - 0.04 * t])
        state = CotangentPoint(x, p)
        dh.legendre_inverse(warm, chart, state)
        warm_total += warm.last_iterations
        dh.legendre_inverse(cold, chart, state)
        cold_total += cold.last_iterations
    assert warm_total <= cold_total


def test_modulus_lagrangian_has_zero_energy():
    # L homogeneous of degree one in v makes p.v - L vanish identically.
    chart = manifold.builtin_chart("polar2d")
    lag = dl.fiberwise_phi_lagrangian("w")
    rng = np.random.default_rng(37)
    for q in verification.sample_tangent_states(chart, 10, rng, min_speed=0.3):
        assert abs(dh.energy_h(chart, lag, q)) < 1e-14


@pytest.mark.parametrize("family,params", _FAMILIES)
def test_b_matrix_inverts_fiber_hessian(family, params):
    chart = manifold.builtin_chart("polar2d")
    lag = dl.catalog_lagrangian(family, **params)
    ctx = dh.LegendreContext(lag)
    ham = dh.hamiltonian_from_lagrangian(ctx)
    rng = np.random.default_rng(43)
    eye = np.eye(chart.dim)
    for q in verification.sample_tangent_states(chart, 6, rng, min_speed=0.3):
        state = dh.legendre_forward(ctx, chart, q)
        a = dl.a_matrix(chart, lag, q)
        b = dh.b_matrix(chart, ham, state)
        assert np.max(np.abs(a @ b - eye)) < 1e-10


def test_generic_fallback_hamiltonian_matches_closed_form():
    """An uncataloged family must still produce correct values by inversion."""
    chart = manifold.builtin_chart("polar2d")
    kinetic = dl.kinetic_lagrangian()
    disguised = dataclasses.replace(kinetic, family="bespoke")
    closed = dh.hamiltonian_from_lagrangian(dh.LegendreContext(kinetic))
    generic = dh.hamiltonian_from_lagrangian(dh.LegendreContext(disguised))
    rng = np.random.default_rng(47)
    for state in verification.sample_cotangent_states(chart, 6, rng, min_modulus=0.3):
        assert abs(generic.value(chart, state) - closed.value(chart, state)) < 1e-9


def test_hamilton_rhs_polar_oracle():
    # H = (p_r^2 + p_theta^2 / r^2) / 2 on the polar chart.  At r = 2:
    # dx/dt = (p_r, p_theta / r^2) = (0.3, 0.2) and the only nonzero
    # force term is -dH/dr = p_theta^2 / r^3 = 0.08.
    chart = manifold.builtin_chart("polar2d")
    ham = dh.hamiltonian_from_lagrangian(dh.LegendreContext(dl.kinetic_lagrangian()))
    state = CotangentPoint(np.array([2.0, 0.5]), np.array([0.3, 0.8]))
    dx, dp = dh.hamilton_rhs(chart, ham, state)
    assert np.allclose(dx, [0.3, 0.2], atol=1e-14)
    assert np.allclose(dp, [0.08, 0.0], atol=1e-14)


@pytest.mark.parametrize("chart_name", ["polar2d", "sphere2d"])
def test_momentum_residual_cancels_exactly(chart_name):
    """The symmetric Christoffel contractions must cancel in floating point,
    not merely to rounding."""
    chart = manifold.builtin_chart(chart_name)
    ham = dh.hamiltonian_from_lagrangian(dh.LegendreContext(dl.kinetic_lagrangian()))
    rng = np.random.default_rng(53)
    for state in verification.sample_cotangent_states(chart, 10, rng, min_modulus=0.3):
        residual = dh.covariant_momentum_residual(chart, ham, state)
        assert np.max(np.abs(residual)) == 0.0


def test_nonconvergence_carries_iteration_count():
    chart = manifold.builtin_chart("euclidean2")
    ctx = dh.LegendreContext(
        dl.fiberwise_phi_lagrangian("w^2/2 + w^4/10"), max_iter=1, warm_start=False
    )
    state = CotangentPoint(np.zeros(2), np.array([0.9, 0.4]))
    with pytest.raises(NonConvergenceError) as excinfo:
        dh.legendre_inverse(ctx, chart, state, v_guess=np.array([1e6, 1e6]))
    assert excinfo.value.iterations == 1
    assert excinfo.value.residual > 0.0


def test_cotangent_csv_layout(tmp_path):
    chart = manifold.builtin_chart("polar2d")
    ctx = dh.LegendreContext(dl.kinetic_lagrangian())
    ham = dh.hamiltonian_from_lagrangian(ctx)
    state = CotangentPoint(np.array([1.5, 0.2]), np.array([0.2, 0.9]))
    config = dn.IntegratorConfig(method="rk4", dt=1e-3, t_span=(0.0, 0.1), record_every=10)
    trajectory = dh.integrate_hamiltonian(chart, ham, state, config)
    assert trajectory.status == "completed"
    out = tmp_path / "run.csv"
    dh.write_cotangent_csv(trajectory, out)
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "t,x1,x2,p1,p2,H"
    assert len(lines) == len(trajectory.ts) + 1
    first = [float(tok) for tok in lines[1].split(",")]
    assert first[0] == 0.0
    h_column = [float(line.split(",")[-1]) for line in lines[1:]]
    assert max(h_column) - min(h_column) < 1e-10
