"""Laminar (flat-surface, parallel-streamline) solutions H(p; lambda)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterOutOfRange
from .grid import DEFAULT_P_MAX, Grid1D
from .stencils import extrapolate, piece_derivative
from .vorticity import VorticitySpec, big_gamma, gamma_extremes, piece_gamma

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_MAX_CELL = 0.05


def _check_lambda(spec: VorticitySpec, lam: float):
    gi, _ = gamma_extremes(spec)
    if not lam + 2.0 * gi > 0:
        raise ParameterOutOfRange(f"lambda = {lam} must exceed -2 Gamma_inf = {-2 * gi}")


def _gl(spec, lam, a, b):
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    s = mid[:, None] + half[:, None] * _GL_X[None, :]
    f = (lam + 2.0 * big_gamma(spec, s)) ** -0.5
    return half * (f @ _GL_W)


def _cell_integrals(spec, lam, a, b, tol=1e-15):
    """int_a^b (lambda + 2 Gamma)^(-1/2) on cells free of breakpoints."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.zeros_like(a)
    owner = np.arange(a.size)
    whole = _gl(spec, lam, a, b)
    for _ in range(60):
        if a.size == 0:
            break
        m = 0.5 * (a + b)
        left, right = _gl(spec, lam, a, m), _gl(spec, lam, m, b)
        fine = left + right
        done = np.abs(fine - whole) <= tol * np.maximum(1.0, np.abs(fine))
        np.add.at(out, owner[done], fine[done])
        keep = ~done
        a, b, m, owner = a[keep], b[keep], m[keep], owner[keep]
        left, right = left[keep], right[keep]
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        owner = np.concatenate([owner, owner])
        whole = np.concatenate([left, right])
    else:  # pragma: no cover - only for pathological integrands
        np.add.at(out, owner, whole)
    return out


def height_integral(spec: VorticitySpec, lam: float, p) -> np.ndarray:
    """int_0^p (lambda + 2 Gamma(s))^(-1/2) ds for an array of p <= 0."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.size == 0:
        return p.copy()
    lo = float(p.min())
    if lo == 0.0:
        return np.zeros_like(p)
    knots = set(p.tolist()) | {0.0}
    knots |= {float(x) for x in spec.jump_heights if lo < x < 0}
    knots = np.array(sorted(knots))
    fine = [knots[0]]
    for x0, x1 in zip(knots[:-1], knots[1:]):
        n = max(1, int(math.ceil((x1 - x0) / _MAX_CELL)))
        fine.extend(np.linspace(x0, x1, n + 1)[1:].tolist())
    fine = np.array(fine)
    fine[-1] = 0.0
    cells = _cell_integrals(spec, lam, fine[:-1], fine[1:])
    # cumulative from the surface downwards
    from_top = np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
    return -from_top[np.searchsorted(fine, p)]


def laminar_height(spec: VorticitySpec, lam: float, p, g: float):
    """H(p; lambda) = int_0^p (lambda + 2 Gamma)^(-1/2) ds - lambda/(2g)."""
    _check_lambda(spec, lam)
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr > 0):
        raise ParameterOutOfRange("laminar height is defined for p <= 0")
    out = height_integral(spec, lam, p_arr.ravel()) - lam / (2.0 * g)
    return float(out[0]) if p_arr.ndim == 0 else out.reshape(p_arr.shape)


def wave_speed(lam: float, gamma_infinity: float) -> float:
    """c = sqrt(lambda + 2 Gamma_infinity)."""
    arg = lam + 2.0 * gamma_infinity
    if not arg > 0:
        raise ParameterOutOfRange("lambda + 2 Gamma_infinity must be positive")
    return math.sqrt(arg)


@dataclass(frozen=True, eq=False)
class LaminarFlow:
    """Sampled laminar solution."""

    spec: VorticitySpec
    lam: float
    g: float
    grid: Grid1D
    H: np.ndarray
    Hp: np.ndarray

    @classmethod
    def build(cls, spec: VorticitySpec, lam: float, g: float, grid: Grid1D | None = None,
              P_max: float = DEFAULT_P_MAX, dp: float = 1e-3) -> "LaminarFlow":
        _check_lambda(spec, lam)
        if grid is None:
            grid = Grid1D.build(spec, P_max, dp)
        H = laminar_height(spec, lam, grid.p, g)
        Hp = (lam + 2.0 * big_gamma(spec, grid.p)) ** -0.5
        return cls(spec, float(lam), float(g), grid, H, Hp)

    @property
    def p(self) -> np.ndarray:
        return self.grid.p

    @property
    def speed(self) -> float:
        return wave_speed(self.lam, gamma_extremes(self.spec)[1])


@dataclass(frozen=True)
class LaminarResidual:
    ode: float
    surface: float
    consistency: float
    jump_H: tuple = field(default_factory=tuple)
    jump_Hp: tuple = field(default_factory=tuple)

    @property
    def max(self) -> float:
        return max([self.ode, self.surface, self.consistency, *self.jump_H, *self.jump_Hp])


def verify_laminar(flow: LaminarFlow, g: float) -> LaminarResidual:
    """Residuals of the laminar ODE system on the flow's grid.

    ``H_pp`` is the fourth-order derivative of the sampled ``H_p`` taken on
    each smooth piece separately; ``consistency`` compares the derivative of
    the sampled ``H`` with ``H_p``.  Jumps at interfaces use one-sided data.
    """
    p, H, Hp = flow.p, flow.H, flow.Hp
    ode = cons = 0.0
    for a, b in flow.grid.regions:
        sl = slice(a, b + 1)
        g_piece = piece_gamma(flow.spec, p[sl])
        Hpp = piece_derivative(p[sl], Hp[sl])
        ode = max(ode, float(np.max(np.abs(Hpp + g_piece * Hp[sl] ** 3))))
        cons = max(cons, float(np.max(np.abs(piece_derivative(p[sl], H[sl]) - Hp[sl]))))
    surface = abs(1.0 + 2.0 * g * H[-1] * Hp[-1] ** 2)
    jH, jHp = [], []
    for j in flow.grid.interfaces:
        below, above = slice(j - 4, j), slice(j + 1, j + 5)
        jH.append(abs(extrapolate(p[above], H[above], p[j]) - extrapolate(p[below], H[below], p[j])))
        dn = piece_derivative(p[j - 4 : j + 1], H[j - 4 : j + 1])[-1]
        up = piece_derivative(p[j : j + 5], H[j : j + 5])[0]
        jHp.append(abs(up - dn))
    return LaminarResidual(ode, float(surface), cons, tuple(jH), tuple(jHp))
