import math

import numpy as np
import pytest

from cases import G, P8, V0, V1
from deepstokes.diagnostics import (audit_state, bernoulli_inequality, bernoulli_lhs, check_nodal,
                                    fit_decay, fit_decay_profile, mean_drift)
from deepstokes.errors import DegenerateFit
from deepstokes.grid import build_grid
from deepstokes.physical import reconstruct
from deepstokes.transmission import WaveState
from deepstokes.vorticity import gamma_sup


@pytest.fixture(scope="module")
def grid():
    return build_grid(16, 16, 64, P8, V1)


def profile(grid):
    return (np.sinh((grid.p + P8) / 3.0) / np.sinh(P8 / 3.0))[:, None]


def test_single_crest_profile_passes(grid):
    st = WaveState.from_field(grid, 1e-2 * profile(grid) * np.cos(grid.q), 9.0)
    rep = check_nodal(st)
    assert rep.passed
    assert rep.worst_interior < 0
    assert rep.lateral_wq < 1e-2 * grid.dq**2  # one-sided estimate of w_q at crest and trough
    assert set(rep.to_dict()) >= {"interior", "crest", "trough", "passed"}


@pytest.mark.parametrize("shape", [lambda q: -np.cos(q), lambda q: np.cos(2 * q),
                                   lambda q: 0 * q])
def test_other_patterns_fail(grid, shape):
    st = WaveState.from_field(grid, 1e-2 * profile(grid) * shape(grid.q), 9.0)
    assert not check_nodal(st).passed


def test_decay_fit_recovers_exponent(grid):
    W = np.exp(2 * grid.p)[:, None] * np.cos(grid.q)
    fit = fit_decay(WaveState.from_field(grid, W, 9.0))
    assert fit.tau == pytest.approx(2.0, rel=1e-10)
    assert fit.residual < 1e-10
    assert fit.window[0] >= -0.9 * P8 and fit.window[1] <= -0.5 * P8
    assert fit_decay(WaveState.from_field(grid, 7 * W, 9.0)).tau == pytest.approx(fit.tau, rel=1e-12)


def test_decay_fit_rejects_degenerate_input(grid):
    with pytest.raises(DegenerateFit):
        fit_decay(WaveState.from_field(grid, np.zeros(grid.shape), 9.0))
    p = np.linspace(-1, 0, 10)
    with pytest.raises(DegenerateFit):
        fit_decay_profile(p, np.exp(p))


def test_bernoulli_holds_with_equality_for_laminar_flow(grid):
    for lam in (4.0, 9.0, 20.0):
        wave = reconstruct(V1, WaveState.laminar(grid, lam), G)
        assert bernoulli_inequality(wave, V1, wave.c, G) <= 1e-12


def test_bernoulli_lhs_matches_pressure(grid):
    rng = np.random.default_rng(3)
    W = 1e-3 * rng.standard_normal(grid.shape)
    W[0] = 0
    wave = reconstruct(V1, WaveState.from_field(grid, W, 9.0), G, P_atm=2.5)
    lhs = bernoulli_lhs(wave, V1, wave.c, G)
    top = max(0.0, gamma_sup(V1))
    assert np.allclose(lhs, wave.P_atm - wave.P - 0.5 * top * wave.psi, atol=1e-12)


def test_audit_of_laminar_and_perturbed_states(grid):
    lam = WaveState.laminar(grid, 9.0)
    audit = audit_state(V1, lam, G)
    assert audit.passed and audit.mean_drift == 0.0
    W = np.zeros(grid.shape)
    W[-1] = 1e-3
    bad = audit_state(V1, WaveState.from_field(grid, W, 9.0), G)
    assert not bad.passed
    assert bad.surface > 1e-8
    assert mean_drift(WaveState.from_field(grid, W, 9.0)) == pytest.approx(1e-3)


def test_mean_drift_of_cosine_is_zero(grid):
    st = WaveState.from_field(grid, profile(grid) * np.cos(grid.q), 9.0)
    assert abs(mean_drift(st)) < 1e-15
    assert math.isclose(mean_drift(st.with_(w=2 * st.w)), 0.0, abs_tol=1e-15)
