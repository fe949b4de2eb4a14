"""Runtime certificates: nodal pattern, decay rate, Bernoulli bound, residual audit."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateFit, MarginViolation
from .physical import PhysicalWave
from .stencils import fd_weights
from .transmission import WaveState, margins, operators, residual_field
from .vorticity import VorticitySpec, big_gamma, gamma_sup


@dataclass(frozen=True)
class NodalReport:
    """Sign conditions of a monotone one-crest profile on the half period.

    ``interior``: w_q < 0 for 0 < q < pi on every row above the bottom;
    ``left`` / ``right``: w_qq < 0 at q = 0 and w_qq > 0 at q = pi below the
    surface; ``crest`` / ``trough``: the corner pairs (w_qq, w_qqp) at (0, 0)
    and (pi, 0).  ``lateral_wq`` is the largest one-sided |w_q| on the
    lateral lines, which vanishes to O(dq^2) for even states.
    """

    interior: bool
    left: bool
    right: bool
    crest: bool
    trough: bool
    lateral_wq: float
    worst_interior: float

    @property
    def passed(self) -> bool:
        return self.interior and self.left and self.right and self.crest and self.trough

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def _wqq_lateral(W, dq):
    left = 2.0 * (W[:, 1] - W[:, 0]) / dq**2
    right = 2.0 * (W[:, -2] - W[:, -1]) / dq**2
    return left, right


def check_nodal(state: WaveState) -> NodalReport:
    grid = state.grid
    W = state.W
    dq = grid.dq
    p = grid.p
    Wq = (W[1:, 2:] - W[1:, :-2]) / (2.0 * dq)
    worst = float(np.max(Wq)) if Wq.size else 0.0
    interior = bool(np.all(Wq < 0))
    left, right = _wqq_lateral(W, dq)
    sides_left = bool(np.all(left[1:-1] < 0))
    sides_right = bool(np.all(right[1:-1] > 0))
    dp_top = fd_weights(p[-1], p[-3:], 1)[1]
    crest = bool(left[-1] < 0 and dp_top @ left[-3:] < 0)
    trough = bool(right[-1] > 0 and dp_top @ right[-3:] > 0)
    one_sided = fd_weights(0.0, np.array([0.0, dq, 2 * dq]), 1)[1]
    lat = max(float(np.max(np.abs(W[1:, :3] @ one_sided))),
              float(np.max(np.abs(W[1:, :-4:-1] @ one_sided))))
    return NodalReport(interior, sides_left, sides_right, crest, trough, lat, worst)


@dataclass(frozen=True)
class DecayFit:
    tau: float
    N: float
    residual: float
    window: tuple

    def to_dict(self) -> dict:
        return asdict(self)


def fit_decay_profile(p, sup_wq, window=None) -> DecayFit:
    """Least-squares fit log sup_q |w_q| = log N + tau p."""
    p = np.asarray(p, dtype=float)
    y = np.asarray(sup_wq, dtype=float)
    if window is not None:
        keep = (p >= window[0]) & (p <= window[1])
        p, y = p[keep], y[keep]
    if p.size < 20:
        raise DegenerateFit(f"only {p.size} p-levels in the fit window, need 20")
    if np.any(~(y > 0)):
        raise DegenerateFit("w_q vanishes identically on some level")
    A = np.column_stack([np.ones_like(p), p])
    coef, *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
    res = float(np.sqrt(np.mean((A @ coef - np.log(y)) ** 2)))
    return DecayFit(float(coef[1]), float(math.exp(coef[0])), res,
                    (float(p.min()), float(p.max())))


def fit_decay(state: WaveState, window=(0.9, 0.5)) -> DecayFit:
    """Exponential decay rate of sup_q |w_q| on the lower half of the strip.

    The window is -0.9 P_max <= p <= -0.5 P_max, which leaves out the tenth
    of the strip nearest the truncated bottom.
    """
    grid = state.grid
    W = state.W
    Wq = np.abs(W[:, 2:] - W[:, :-2]) / (2.0 * grid.dq)
    P = grid.pgrid.P_max
    return fit_decay_profile(grid.p, Wq.max(axis=1), (-window[0] * P, -window[1] * P))


def bernoulli_lhs(wave: PhysicalWave, spec: VorticitySpec, c: float, g: float) -> np.ndarray:
    """Pointwise 0.5((c-u)^2 + v^2) + g y - Gamma(-psi) - 0.5 max(0, sup gamma) psi."""
    psi = wave.psi
    gam = big_gamma(spec, -psi.ravel()).reshape(psi.shape)
    top = max(0.0, gamma_sup(spec))
    return 0.5 * ((c - wave.u) ** 2 + wave.v**2) + g * wave.y - gam - 0.5 * top * psi


def bernoulli_inequality(wave: PhysicalWave, spec: VorticitySpec, c: float, g: float) -> float:
    """Largest value of the Bernoulli left-hand side; should not exceed zero."""
    return float(np.max(bernoulli_lhs(wave, spec, c, g)))


@dataclass(frozen=True)
class Audit:
    surface: float
    interface: float
    interior: float
    mean_drift: float
    margins: dict
    tol: float

    @property
    def passed(self) -> bool:
        ok = max(self.surface, self.interface, self.interior) <= self.tol
        return ok and all(v > 0 for v, _ in self.margins.values())

    def to_dict(self) -> dict:
        return {"surface": self.surface, "interface": self.interface, "interior": self.interior,
                "mean_drift": self.mean_drift, "passed": self.passed,
                "margins": {str(k): v for k, (v, _) in self.margins.items()}}


def mean_drift(state: WaveState) -> float:
    """Average of w over the surface period (zero for the linear mode)."""
    grid = state.grid
    return float(grid.q_trapezoid @ state.W[-1] / math.pi)


def audit_state(spec: VorticitySpec, state: WaveState, g: float, delta: float = 1e-4,
                tol: float = 1e-8) -> Audit:
    R = np.abs(residual_field(spec, state, g))
    kind = operators(state.grid, spec).kind
    pick = (lambda m: float(R[m].max()) if np.any(m) else 0.0)
    try:
        marg = margins(spec, state, g, delta)
    except MarginViolation as err:
        marg = {err.inequality: (err.value, err.node)}
    return Audit(pick(kind == 3), pick(kind == 4), pick((kind == 1) | (kind == 2)),
                 mean_drift(state), marg, tol)
