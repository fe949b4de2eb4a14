import math

import numpy as np
import pytest

from cases import G, V0, V1, V2
from deepstokes.errors import ParameterOutOfRange
from deepstokes.laminar import LaminarFlow, laminar_height, verify_laminar, wave_speed
from deepstokes.vorticity import coefficient_a


@pytest.mark.parametrize("spec, lam, p, expected", [
    (V0, 9.81, 0.0, -0.5),
    (V1, 4.0, -1.0, math.sqrt(2) - 2 - 4 / (2 * G)),
    (V1, 4.0, -2.0, math.sqrt(2) - 2 - 4 / (2 * G) - 1 / math.sqrt(2)),
    (V0, 9.81, -3.0, -3 / math.sqrt(9.81) - 0.5),
])
def test_laminar_height_closed_forms(spec, lam, p, expected):
    assert laminar_height(spec, lam, p, G) == pytest.approx(expected, abs=1e-13)


def test_step_example_values():
    assert laminar_height(V1, 4.0, -1.0, G) == pytest.approx(-0.789660, abs=1e-6)
    assert laminar_height(V1, 4.0, -2.0, G) == pytest.approx(-1.496767, abs=1e-6)


def test_exponential_closed_form():
    # a = sqrt(lam + 2 e^p - 2); H(p) = int_0^p a^{-1}
    lam, p = 5.0, -1.7
    s = np.linspace(p, 0, 200001)
    f = (lam + 2 * np.exp(s) - 2) ** -0.5
    ref = -np.sum((f[1:] + f[:-1]) / 2 * np.diff(s)) - lam / (2 * G)
    assert laminar_height(V2, lam, p, G) == pytest.approx(ref, abs=1e-10)


def test_surface_value_exact():
    for lam in (2.5, 4.0, 11.0):
        assert laminar_height(V1, lam, 0.0, G) == -lam / (2 * G)


def test_out_of_range():
    with pytest.raises(ParameterOutOfRange):
        laminar_height(V1, 1.9, -1.0, G)
    with pytest.raises(ParameterOutOfRange):
        wave_speed(2.0, -1.0)


def test_wave_speed_values():
    assert wave_speed(9.81, 0.0) == pytest.approx(3.13209, abs=1e-5)
    assert wave_speed(4.0, -1.0) == pytest.approx(1.414214, abs=1e-6)


@pytest.mark.parametrize("spec, lam, tol", [(V0, 9.81, 1e-10), (V1, 4.0, 1e-8), (V2, 3.0, 1e-8)])
def test_verify_laminar(spec, lam, tol):
    flow = LaminarFlow.build(spec, lam, G, dp=1e-3)
    assert verify_laminar(flow, G).max <= tol


def test_shifted_height_breaks_surface_condition():
    flow = LaminarFlow.build(V1, 4.0, G, dp=1e-3)
    shifted = LaminarFlow(flow.spec, flow.lam, flow.g, flow.grid, flow.H + 0.01, flow.Hp)
    res = verify_laminar(shifted, G)
    assert res.surface == pytest.approx(2 * G * 0.01 * flow.Hp[-1] ** 2, rel=1e-12)


def test_slope_is_reciprocal_of_a():
    flow = LaminarFlow.build(V1, 4.0, G, dp=1e-2)
    assert np.allclose(flow.Hp * coefficient_a(V1, 4.0, flow.p), 1.0, rtol=1e-12, atol=0)


def test_slope_blows_up_like_inverse_square_root():
    # near lambda = -2 Gamma_inf the slope at p = -1 scales as (lambda - 2)^{-1/2}
    d = np.array([1e-4, 1e-5, 1e-6])
    hp = [LaminarFlow.build(V1, 2 + x, G, dp=1e-2).Hp[0] for x in d]
    slope = np.polyfit(np.log(d), np.log(hp), 1)[0]
    assert slope == pytest.approx(-0.5, abs=1e-3)


def test_speed_property():
    assert LaminarFlow.build(V1, 4.0, G, dp=1e-2).speed == pytest.approx(math.sqrt(2))
