import math

import numpy as np
import pytest

from cases import G, P8, SPECS, V0, V1
from deepstokes.continuation import initial_guess, refine_bifurcation
from deepstokes.errors import MarginViolation
from deepstokes.grid import build_grid
from deepstokes.transmission import (Bump, WaveState, jacobian, margins, mode_operator, residual,
                                     residual_field, row_classes, weak_residual)
from deepstokes.vorticity import big_gamma, coefficient_a


def random_state(grid, lam, rng, size=1e-2, eps=0.0):
    W = size * rng.standard_normal(grid.shape)
    W[0] = 0.0
    return WaveState.from_field(grid, W, lam, eps)


@pytest.mark.parametrize("name", sorted(SPECS))
@pytest.mark.parametrize("lam", [2.5, 6.0, 12.0])
def test_laminar_state_has_zero_residual(small_grids, name, lam):
    spec = SPECS[name]
    st = WaveState.laminar(small_grids[name], lam)
    assert np.max(np.abs(residual(spec, st, G))) <= 1e-10


@pytest.mark.parametrize("spec", [V0, V1], ids=["V0", "V1"])
def test_discrete_kernel_leaves_quadratic_residual(spec):
    grid = build_grid(16, 16, 64, P8, spec)
    point = refine_bifurcation(spec, grid, G)
    r = [np.max(np.abs(residual(spec, initial_guess(point, s, grid), G))) for s in (1e-3, 5e-4)]
    assert r[0] / r[1] == pytest.approx(4.0, rel=1e-3)


def test_margin_violation_names_inequality_one():
    grid = build_grid(16, 16, 64, P8, V1)
    lam, delta = 4.0, 1e-4
    p = grid.p
    c = -(1 / math.sqrt(lam) - delta / 2)  # makes a^{-1} + w_p = delta/2 at the surface
    w = np.where(p >= -1.0, c * p, -c * (p + P8) / (P8 - 1.0))
    st = WaveState.from_field(grid, np.repeat(w[:, None], grid.nq + 1, axis=1), lam)
    with pytest.raises(MarginViolation) as info:
        residual(V1, st, G, delta)
    assert info.value.inequality == 1
    assert info.value.node[1] == grid.np_nodes - 1
    assert margins(V1, st, G, delta)[1][0] == pytest.approx(-delta / 2, rel=1e-6)


def test_surface_height_margin():
    grid = build_grid(16, 16, 64, P8, V0)
    W = np.zeros(grid.shape)
    W[-1, 3] = 2 * G / (4 * G)  # w = lambda / (2g) exceeds (2 lambda - delta)/(4g)
    with pytest.raises(MarginViolation) as info:
        residual(V0, WaveState.from_field(grid, W, G), G, 1e-4)
    assert info.value.inequality in (1, 3)
    assert margins(V0, WaveState.from_field(grid, W, G), G, 1e-4)[3][0] < 0


@pytest.mark.parametrize("eps", [0.0, 0.2])
def test_jacobian_matches_finite_differences(eps):
    grid = build_grid(8, 8, 16, P8, V1)
    rng = np.random.default_rng(2)
    st = random_state(grid, 9.0, rng, eps=eps)
    J, F_lam = jacobian(V1, st, G)
    h = 1e-6
    fd = np.empty((st.w.size, st.w.size))
    for k in range(st.w.size):
        e = np.zeros_like(st.w)
        e[k] = h
        fd[:, k] = (residual(V1, st.with_(w=st.w + e), G) - residual(V1, st.with_(w=st.w - e), G)) / (2 * h)
    dense = J.toarray()
    col_err = np.linalg.norm(dense - fd, axis=0) / np.linalg.norm(dense, axis=0)
    assert col_err.max() <= 1e-6
    fl = (residual(V1, st.with_(lam=st.lam + h), G) - residual(V1, st.with_(lam=st.lam - h), G)) / (2 * h)
    assert np.linalg.norm(F_lam - fl) <= 1e-6 * np.linalg.norm(F_lam)


def test_directional_derivative_error_is_first_order():
    grid = build_grid(8, 8, 16, P8, V1)
    rng = np.random.default_rng(4)
    st = random_state(grid, 9.0, rng)
    xi = rng.standard_normal(st.w.size)
    J, _ = jacobian(V1, st, G)
    R0 = residual(V1, st, G)
    ts = np.array([1e-4, 1e-5, 1e-6])
    errs = [np.linalg.norm((residual(V1, st.with_(w=st.w + t * xi), G) - R0) / t - J @ xi) for t in ts]
    slope = np.polyfit(np.log(ts), np.log(errs), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.1)


def test_kernel_direction_is_second_order():
    norms = []
    for n in (1, 2):
        grid = build_grid(16 * n, 16 * n, 64 * n, P8, V0)
        J, _ = jacobian(V0, WaveState.laminar(grid, G), G)
        # sinh profile vanishes at the bottom; tanh(P / sqrt(g)) = 1 - 2e-7
        prof = np.sinh((grid.p + P8) / math.sqrt(G)) / np.sinh(P8 / math.sqrt(G))
        mode = prof[:, None] * np.cos(grid.q)[None, :]
        norms.append(np.max(np.abs(J @ grid.to_vector(mode))))
    assert norms[0] / norms[1] == pytest.approx(4.0, rel=0.15)


def test_interface_rows_annihilate_quadratics():
    grid = build_grid(8, 8, 16, P8, V1)
    J, _ = jacobian(V1, WaveState.laminar(grid, 5.0), G)
    rows = row_classes(grid, V1) == "interface"
    assert rows.any()
    for poly in (np.ones_like(grid.p), grid.p, grid.p**2):
        F = np.repeat(poly[:, None], grid.nq + 1, axis=1)
        assert np.max(np.abs((J @ grid.to_vector(F))[rows])) < 1e-10


def test_surface_rows_reproduce_linearized_bernoulli():
    grid = build_grid(8, 8, 16, P8, V1)
    lam = 5.0
    J, _ = jacobian(V1, WaveState.laminar(grid, lam), G)
    u = np.random.default_rng(0).standard_normal(grid.shape)
    u[0] = 0
    p = grid.p
    dp0 = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * (p[-1] - p[-2]))
    expected = 2 / lam * (G * u[-1] - lam**1.5 * dp0)
    got = grid.to_field(J @ grid.to_vector(u))[-1]
    assert np.allclose(got, expected, rtol=1e-10, atol=1e-10)


def test_reflection_equivariance():
    grid = build_grid(8, 8, 16, P8, V1)
    st = random_state(grid, 9.0, np.random.default_rng(9))
    flipped = WaveState.from_field(grid, st.W[:, ::-1], st.lam)
    assert np.allclose(residual_field(V1, flipped, G), residual_field(V1, st, G)[:, ::-1],
                       rtol=1e-13, atol=1e-13)


def test_mode_operator_is_the_cosine_slice_of_the_jacobian():
    grid = build_grid(8, 8, 16, P8, V1)
    lam, eps = 9.0, 0.1
    J, _ = jacobian(V1, WaveState.laminar(grid, lam, eps), G)
    M, M_lam = mode_operator(V1, grid, lam, G, eps)
    phi = np.sin(grid.p) + 0.3
    phi[0] = 0.0
    full = grid.to_field(J @ grid.to_vector(phi[:, None] * np.cos(grid.q)[None, :]))
    assert np.allclose(full[1:], np.outer(M @ phi[1:], np.cos(grid.q)), atol=1e-9)
    h = 1e-6
    fd = (mode_operator(V1, grid, lam + h, G, eps)[0] - mode_operator(V1, grid, lam - h, G, eps)[0]) / (2 * h)
    assert abs(fd - M_lam).max() <= 1e-6 * abs(M_lam).max()


# lower spacing matches the upper one so bumps crossing p = -1 stay resolved
WEAK_GRID = dict(nq=32, np_upper=128, np_lower=3088, P_max=P8)


def test_weak_form_of_laminar_flow_vanishes():
    grid = build_grid(**WEAK_GRID, spec=V1)
    st = WaveState.laminar(grid, 4.0)
    bumps = [Bump(0.0, -1.0, 1.0, 0.5), Bump(1.5, -0.4, 0.8, 0.3), Bump(math.pi, -3.0, 1.2, 1.5)]
    assert max(abs(v) for v in weak_residual(V1, st, G, bumps)) <= 1e-6


def test_weak_form_with_offset_flux_does_not_vanish():
    # the flux Gamma + 1/h_p^2 (no factor 1/2, Gamma added) leaves 3 int Gamma phi_p
    grid = build_grid(**WEAK_GRID, spec=V1)
    bump = Bump(0.0, -1.0, 1.0, 0.5)
    Q, Pg = np.meshgrid(grid.q, grid.p)
    _, _, php = bump.eval(Q, Pg)
    flux = big_gamma(V1, grid.p)[:, None] + coefficient_a(V1, 4.0, grid.p)[:, None] ** 2
    wts = grid.pgrid.trapezoid[:, None] * grid.q_trapezoid[None, :]
    assert abs(np.sum(wts * flux * php)) > 1e-2


def test_zero_bump_gives_exact_zero():
    grid = build_grid(8, 8, 16, P8, V1)
    st = random_state(grid, 9.0, np.random.default_rng(1), size=1e-3)
    assert weak_residual(V1, st, G, [Bump(0.5, -1.0, 0.5, 0.5, scale=0.0)]) == [0.0]
