"""Map hodograph-plane states back to the physical (x, y) plane.

With x = q and y = h(q, p) the relative velocity is recovered from
c - u = 1 / h_p and v = -h_q / h_p, and the stream function is psi = -p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StagnationError
from .laminar import laminar_height, wave_speed
from .stencils import fd_weights
from .transmission import WaveState, fields, operators
from .vorticity import VorticitySpec, big_gamma, gamma_extremes


@dataclass(frozen=True, eq=False)
class PhysicalWave:
    """Physical fields sampled on the image of the hodograph grid, indexed [j, i]."""

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    P: np.ndarray
    psi: np.ndarray
    c: float
    P_atm: float

    @property
    def eta(self) -> np.ndarray:
        return self.y[-1]

    @property
    def stagnation_margin(self) -> float:
        return float(np.min(self.c - self.u))


def height_field(spec: VorticitySpec, state: WaveState, g: float) -> np.ndarray:
    H = laminar_height(spec, state.lam, state.grid.p, g)
    return H[:, None] + state.W


def reconstruct(spec: VorticitySpec, state: WaveState, g: float, P_atm: float = 0.0) -> PhysicalWave:
    """Velocity, pressure and stream function of a hodograph state.

    The pressure uses a Bernoulli head constant throughout the fluid,
    P = P_atm - ((u - c)^2 + v^2)/2 - g y + Gamma(p), which reproduces the
    hydrostatic law below a laminar flow and equals P_atm on the surface
    whenever the surface condition holds.
    """
    f = fields(spec, state)
    hp = f.A + f.Wp
    if not np.all(hp > 0):
        j, i = np.unravel_index(int(np.argmin(hp)), hp.shape)
        raise StagnationError(f"h_p = {hp[j, i]:.3e} <= 0 at node {(int(i), int(j))}")
    grid = state.grid
    c = wave_speed(state.lam, gamma_extremes(spec)[1])
    y = height_field(spec, state, g)
    rel = -1.0 / hp
    v = f.Wq * rel
    u = c + rel
    Gam = big_gamma(spec, grid.p)[:, None]
    P = P_atm - 0.5 * (rel**2 + v**2) - g * y + Gam
    X = np.broadcast_to(grid.q[None, :], y.shape).copy()
    psi = np.broadcast_to(-grid.p[:, None], y.shape).copy()
    return PhysicalWave(X, y, u, v, P, psi, c, float(P_atm))


def stagnation_margin(spec: VorticitySpec, state: WaveState) -> float:
    """1 / max h_p, the smallest relative horizontal speed c - u."""
    f = fields(spec, state)
    return float(1.0 / np.max(f.A + f.Wp))


def streamlines(spec: VorticitySpec, state: WaveState, g: float, levels) -> list:
    """Curves (x, y) of the streamlines psi = -p for each p in ``levels``."""
    grid = state.grid
    p = grid.p
    W = state.W
    out = []
    for level in levels:
        level = float(level)
        if not (-grid.pgrid.P_max < level <= 0.0):
            raise DomainError(f"streamline level {level} outside (-P_max, 0]")
        j = int(np.searchsorted(p, level))
        if p[j] == level:
            w = W[j]
        else:
            t = (level - p[j - 1]) / (p[j] - p[j - 1])
            w = (1.0 - t) * W[j - 1] + t * W[j]
        out.append((grid.q.copy(), laminar_height(spec, state.lam, level, g) + w))
    return out


# ---------------------------------------------------------------------------
# consistency checks with derivatives independent of the solver's stencils
# ---------------------------------------------------------------------------
def _cosine_derivative(f_half) -> np.ndarray:
    """d/dq of an even, 2 pi periodic function sampled on [0, pi]."""
    ext = np.concatenate([f_half, f_half[-2:0:-1]])
    n = ext.size
    k = np.fft.rfftfreq(n, d=1.0 / n)
    d = np.fft.irfft(1j * k * np.fft.rfft(ext), n)
    return d[: f_half.size]


def _surface_hp(y, p, width=5) -> np.ndarray:
    w = fd_weights(p[-1], p[-width:], 1)[1]
    return w @ y[-width:]


def surface_conditions(spec: VorticitySpec, state: WaveState, g: float) -> dict:
    """Kinematic and dynamic surface residuals from independent derivatives.

    ``kinematic`` is max |v - (u - c) eta_x| with eta_x from the cosine series
    of the surface samples; ``dynamic`` is max |(u - c)^2 + v^2 + 2 g eta|
    with h_p from a fifth-order one-sided stencil.  Both vanish for the
    continuous solution, so they measure the discretization error.
    """
    wave = reconstruct(spec, state, g)
    eta = wave.eta
    eta_x = _cosine_derivative(eta)
    kin = wave.v[-1] - (wave.u[-1] - wave.c) * eta_x
    hp = _surface_hp(wave.y, state.grid.p)
    hq = eta_x
    dyn = (1.0 + hq**2) / hp**2 + 2.0 * g * eta
    return {"kinematic": float(np.max(np.abs(kin))), "dynamic": float(np.max(np.abs(dyn))),
            "surface_pressure": float(np.max(np.abs(wave.P[-1] - wave.P_atm)))}


def divergence(spec: VorticitySpec, state: WaveState, g: float) -> np.ndarray:
    """u_x + v_y through the hodograph chain rule, on interior nodes of each region."""
    wave = reconstruct(spec, state, g)
    f = fields(spec, state)
    ops = operators(state.grid, spec)
    hp = f.A + f.Wp
    hq = f.Wq

    def dq(F):
        return F @ ops.Dq.T

    def dp(F):
        return ops.Dp @ F

    div = dq(wave.u) - hq / hp * dp(wave.u) + dp(wave.v) / hp
    mask = (ops.kind == 1) | (ops.kind == 2)
    out = np.zeros_like(div)
    out[mask, 1:-1] = div[mask, 1:-1]
    return out


def pressure_surface_error(wave: PhysicalWave) -> float:
    return float(np.max(np.abs(wave.P[-1] - wave.P_atm)))


def vorticity_residual(spec: VorticitySpec, state: WaveState, g: float) -> float:
    """max |v_x - u_y - gamma(psi)| (sign: omega = gamma(psi)).

    u and v are differentiated numerically, so the check is independent of
    the discrete field equation.  Rows next to the surface or an interface
    are skipped: their central differences would reuse one-sided h_p values
    and lose an order.
    """
    wave = reconstruct(spec, state, g)
    f = fields(spec, state)
    ops = operators(state.grid, spec)
    hp = f.A + f.Wp
    hq = f.Wq
    vx = wave.v @ ops.Dq.T - hq / hp * (ops.Dp @ wave.v)
    uy = (ops.Dp @ wave.u) / hp
    res = vx - uy - f.gamma
    inner = (ops.kind == 1) | (ops.kind == 2)
    mask = inner & np.roll(inner, 1) & np.roll(inner, -1)
    return float(np.max(np.abs(res[mask, 1:-1]))) if np.any(mask) else 0.0


__all__ = ["PhysicalWave", "reconstruct", "stagnation_margin", "streamlines",
           "surface_conditions", "divergence", "height_field", "vorticity_residual"]
