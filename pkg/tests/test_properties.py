"""Property tests over random vorticity profiles, states and configurations."""

import math

import numpy as np
from hypothesis import assume, given, settings, strategies as st

from cases import G, P8, V0, V1
from deepstokes.config import RunConfig
from deepstokes.continuation import TERMINATIONS, ContinuationConfig, run_branch
from deepstokes.diagnostics import bernoulli_inequality, check_nodal, fit_decay
from deepstokes.dispersion import bifurcation_bracket, default_grid, eigenpoint
from deepstokes.grid import build_grid
from deepstokes.io import fmt
from deepstokes.laminar import laminar_height
from deepstokes.physical import reconstruct
from deepstokes.transmission import WaveState, jacobian, residual, residual_field
from deepstokes.vorticity import (VorticitySpec, big_gamma, check_admissible, coefficient_a,
                                  gamma_extremes)

GRID_V1 = build_grid(8, 8, 16, P8, V1)
GRID_V0 = build_grid(16, 16, 64, P8, V0)

steps = st.builds(VorticitySpec.step, st.floats(-1.5, 1.5), st.floats(0.25, 3.0))
exps = st.builds(VorticitySpec.exponential, st.floats(-1.5, 1.5), st.floats(0.3, 3.0))
specs = st.one_of(steps, exps)
depths = st.floats(-30.0, 0.0)


@given(specs)
def test_head_function_vanishes_at_surface(spec):
    assert big_gamma(spec, 0.0) == 0.0


@given(specs, st.lists(depths, min_size=1, max_size=20))
def test_head_function_never_drops_below_its_infimum(spec, ps):
    gi, _ = gamma_extremes(spec)
    assert np.all(big_gamma(spec, np.array(ps)) >= gi - 1e-12)


@given(specs, depths, st.floats(0.1, 20.0), st.floats(0.01, 5.0))
def test_coefficient_grows_with_speed(spec, p, lam, dl):
    gi, _ = gamma_extremes(spec)
    lam = lam - 2 * gi
    assert coefficient_a(spec, lam + dl, p) > coefficient_a(spec, lam, p)


@given(specs, st.floats(0.1, 20.0))
def test_laminar_surface_height(spec, lam):
    lam -= 2 * gamma_extremes(spec)[0]
    assert laminar_height(spec, lam, 0.0, G) == -lam / (2 * G)


@settings(max_examples=10)
@given(st.floats(0.0, 1.0))
def test_principal_mode_has_no_interior_zero(t):
    spec = V1
    lo, hi = bifurcation_bracket(spec, G)
    pt = eigenpoint(spec, lo + t * (hi - lo), 0.0, default_grid(spec, P8, 0.05), G)
    assert np.all(pt.psi[1:] > 0)


@given(st.floats(-2.0, 20.0))
def test_laminar_residual_vanishes(lam):
    assume(lam + 2 * gamma_extremes(V1)[0] > 1e-3)
    assert np.max(np.abs(residual(V1, WaveState.laminar(GRID_V1, lam), G))) <= 1e-10


def random_state(seed, size, lam=9.0, grid=GRID_V1):
    W = size * np.random.default_rng(seed).standard_normal(grid.shape)
    W[0] = 0.0
    return WaveState.from_field(grid, W, lam)


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1))
def test_reflection_equivariance(seed):
    s = random_state(seed, 1e-2)
    flipped = WaveState.from_field(GRID_V1, s.W[:, ::-1], s.lam)
    assert np.allclose(residual_field(V1, flipped, G), residual_field(V1, s, G)[:, ::-1],
                       rtol=1e-12, atol=1e-12)


@settings(max_examples=5)
@given(st.integers(0, 2**32 - 1))
def test_jacobian_directional_derivative(seed):
    s = random_state(seed, 5e-3)
    xi = np.random.default_rng(seed + 1).standard_normal(s.w.size)
    J, F_lam = jacobian(V1, s, G)
    h = 1e-6
    fd = (residual(V1, s.with_(w=s.w + h * xi), G) - residual(V1, s.with_(w=s.w - h * xi), G)) / (2 * h)
    assert np.linalg.norm(fd - J @ xi) <= 1e-6 * np.linalg.norm(J @ xi)


modes = st.lists(st.floats(-0.3, 0.3), min_size=3, max_size=3)


@given(modes, st.floats(0.1, 2.0))
def test_nodal_check_commutes_with_half_period_reflection(coefs, amp):
    grid = GRID_V1
    prof = (np.sinh((grid.p + P8) / 2.0) / np.sinh(P8 / 2.0))[:, None]
    shape = np.cos(grid.q) + sum(c * np.cos((k + 2) * grid.q) for k, c in enumerate(coefs))
    W = amp * 1e-2 * prof * shape
    a = check_nodal(WaveState.from_field(grid, W, 9.0))
    b = check_nodal(WaveState.from_field(grid, -W[:, ::-1], 9.0))
    assert a.passed == b.passed
    assert (a.left, a.right, a.interior) == (b.right, b.left, b.interior)


@given(st.floats(0.2, 3.0), st.floats(1e-6, 1e6))
def test_decay_fit_is_scale_invariant(tau, k):
    grid = GRID_V0
    W = np.exp(tau * grid.p)[:, None] * np.cos(grid.q)
    a = fit_decay(WaveState.from_field(grid, W, G))
    b = fit_decay(WaveState.from_field(grid, k * W, G))
    assert math.isclose(a.tau, b.tau, rel_tol=1e-9)


@settings(max_examples=10)
@given(st.floats(0.05, 30.0))
def test_bernoulli_inequality_on_laminar_family(lam):
    lam -= 2 * gamma_extremes(V1)[0]
    wave = reconstruct(V1, WaveState.laminar(GRID_V1, lam), G)
    assert bernoulli_inequality(wave, V1, wave.c, G) <= 1e-12


@settings(max_examples=8)
@given(st.floats(1.0001, 1.02), st.floats(1.0001, 1.5), st.integers(2, 10))
def test_branch_termination_is_total_and_ordered(lam_factor, hp_factor, steps_):
    ref = run_branch(V0, G, ContinuationConfig(max_steps=1), GRID_V0).points[0]
    cfg = ContinuationConfig(max_steps=steps_, lam_max=ref.lam * lam_factor,
                             hp_max=ref.max_hp * hp_factor)
    br = run_branch(V0, G, cfg, GRID_V0)
    assert br.termination.reason in TERMINATIONS
    last = br.points[-1]
    if last.lam > cfg.lam_max:
        assert br.termination.reason == "SpeedUnbounded"
    elif last.max_hp > cfg.hp_max:
        assert br.termination.reason == "StagnationApproach"
    else:
        assert br.termination.reason != "SpeedUnbounded" and br.termination.reason != "StagnationApproach"
    assert all(p.lam <= cfg.lam_max and p.max_hp <= cfg.hp_max for p in br.points[:-1])
    assert all(p.amplitude > 0 for p in br.points)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_csv_floats_round_trip(x):
    assert float(fmt(x)) == x


@given(st.integers(8, 128), st.floats(1.0, 100.0), st.floats(1e-5, 1e-2))
def test_config_overrides_round_trip(nq, P_max, s0):
    cfg = RunConfig(vorticity=V1)
    new = cfg.with_overrides({"grid.nq": nq, "grid.P_max": P_max, "continuation.s0": s0})
    assert (new.grid.nq, new.grid.P_max, new.continuation.s0) == (nq, P_max, s0)
    assert RunConfig.from_dict(new.to_dict()) == new


@given(specs)
def test_admissibility_report_is_consistent(spec):
    rep = check_admissible(spec, G)
    assert rep.passed == (rep.decay_ok and rep.gamma_inf_ok)
    assert rep.gamma_inf_ok == (-rep.gamma_inf < G ** (2 / 3) / 4)
    assert math.isclose(rep.margin, G ** (2 / 3) / 4 + rep.gamma_inf)
