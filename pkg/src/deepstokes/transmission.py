"""Discrete nonlinear operator for the height-function transmission problem.

The unknown is the perturbation ``w = h - H`` of the laminar height on the
half period ``0 <= q <= pi`` of the truncated strip, with ``w = 0`` on the
bottom row.  Row classes:

* interior nodes: the quasilinear field equation minus ``eps a^-3 w``,
  with centred second-order differences and reflection ghosts at q = 0, pi;
* surface nodes: the Bernoulli condition with a one-sided p-derivative;
* interface nodes: one-sided p-derivative from above equals the one from
  below (continuity of ``w`` itself is built into the single unknown).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, MarginViolation
from .grid import Grid2D
from .stencils import fd_weights
from .vorticity import VorticitySpec, big_gamma, gamma_extremes, piece_gamma

ROW_CLASSES = ("interior-upper", "interior-lower", "surface", "interface")


@dataclass(frozen=True, eq=False)
class WaveState:
    """Perturbation field ``w`` (unknown vector) with its lambda and eps."""

    grid: Grid2D
    w: np.ndarray
    lam: float
    eps: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).ravel()
        if w.size != self.grid.n_unknowns:
            raise DomainError(f"state has {w.size} entries, grid needs {self.grid.n_unknowns}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def W(self) -> np.ndarray:
        """Full field indexed [j, i] including the zero bottom row."""
        return self.grid.to_field(self.w)

    def with_(self, **kw) -> "WaveState":
        return replace(self, **kw)

    @classmethod
    def laminar(cls, grid: Grid2D, lam: float, eps: float = 0.0) -> "WaveState":
        return cls(grid, np.zeros(grid.n_unknowns), lam, eps)

    @classmethod
    def from_field(cls, grid: Grid2D, W, lam: float, eps: float = 0.0) -> "WaveState":
        return cls(grid, grid.to_vector(W), lam, eps)


# ---------------------------------------------------------------------------
# difference operators (cached per grid)
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Operators:
    Dp: sp.csr_matrix       # centred inside regions, one-sided at the ends
    Dpp: sp.csr_matrix      # centred inside regions, zero rows elsewhere
    Dmatch: sp.csr_matrix   # (above - below) one-sided derivative at interfaces
    Dq: sp.csr_matrix
    Dqq: sp.csr_matrix
    kind: np.ndarray        # row class per p-node: 0 bottom, 1 upper, 2 lower, 3 surface, 4 interface
    upper: np.ndarray       # boolean per p-node: node lies in the top region
    gamma: np.ndarray       # gamma(-p) per p-node (interface nodes: from above)


@lru_cache(maxsize=32)
def _p_operators(grid: Grid2D, spec: VorticitySpec):
    p = grid.p
    n = p.size
    N = n - 1
    ifaces = set(grid.interfaces)
    Dp = sp.lil_matrix((n, n))
    Dpp = sp.lil_matrix((n, n))
    Dm = sp.lil_matrix((n, n))
    kind = np.zeros(n, dtype=int)
    top_start = max(ifaces) if ifaces else 0
    upper = np.arange(n) >= top_start
    for j in range(n):
        if j == 0:
            idx = [0, 1, 2]
            Dp[j, idx] = fd_weights(p[0], p[idx], 1)[1]
            continue
        if j == N:
            idx = [N - 2, N - 1, N]
            Dp[j, idx] = fd_weights(p[N], p[idx], 1)[1]
            kind[j] = 3
            continue
        if j in ifaces:
            up, dn = [j, j + 1, j + 2], [j - 2, j - 1, j]
            wu = fd_weights(p[j], p[up], 1)[1]
            wd = fd_weights(p[j], p[dn], 1)[1]
            Dp[j, dn] = wd
            Dm[j, up] = wu
            for k, wk in zip(dn, wd):
                Dm[j, k] = Dm[j, k] - wk
            kind[j] = 4
            continue
        idx = [j - 1, j, j + 1]
        c = fd_weights(p[j], p[idx], 2)
        Dp[j, idx] = c[1]
        Dpp[j, idx] = c[2]
        kind[j] = 1 if upper[j] else 2
    gamma = np.zeros(n)
    for a, b in grid.pgrid.regions:
        gamma[a:b + 1] = piece_gamma(spec, p[a:b + 1])
    return Dp.tocsr(), Dpp.tocsr(), Dm.tocsr(), kind, upper, gamma


@lru_cache(maxsize=32)
def _q_operators(nq: int, k: int = 1):
    dq = math.pi / nq
    m = nq + 1
    main = np.zeros(m)
    Dq = sp.diags([np.full(m - 1, 0.5 / dq), np.full(m - 1, -0.5 / dq)], [1, -1], format="lil")
    Dq[0, :] = 0.0
    Dq[nq, :] = 0.0
    Dqq = sp.diags([np.full(m - 1, 1.0), main - 2.0, np.full(m - 1, 1.0)], [1, 0, -1], format="lil")
    Dqq[0, 1] = 2.0
    Dqq[nq, nq - 1] = 2.0
    return Dq.tocsr(), (Dqq / dq**2).tocsr()


def operators(grid: Grid2D, spec: VorticitySpec) -> Operators:
    Dp, Dpp, Dm, kind, upper, gamma = _p_operators(grid, spec)
    Dq, Dqq = _q_operators(grid.nq)
    return Operators(Dp, Dpp, Dm, Dq, Dqq, kind, upper, gamma)


@lru_cache(maxsize=32)
def _kron(grid: Grid2D, spec: VorticitySpec):
    ops = operators(grid, spec)
    Iq = sp.identity(grid.nq + 1, format="csr")
    Ip = sp.identity(grid.np_nodes, format="csr")
    return {
        "p": sp.kron(ops.Dp, Iq, format="csr"),
        "pp": sp.kron(ops.Dpp, Iq, format="csr"),
        "m": sp.kron(ops.Dmatch, Iq, format="csr"),
        "q": sp.kron(Ip, ops.Dq, format="csr"),
        "qq": sp.kron(Ip, ops.Dqq, format="csr"),
        "qp": sp.kron(ops.Dp, ops.Dq, format="csr"),
    }


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Fields:
    W: np.ndarray
    Wp: np.ndarray
    Wpp: np.ndarray
    Wq: np.ndarray
    Wqq: np.ndarray
    Wqp: np.ndarray
    A: np.ndarray       # a^{-1} per p-node, broadcast along q
    gamma: np.ndarray   # gamma(-p) per p-node
    ops: Operators


def inverse_a(spec: VorticitySpec, lam: float, p) -> np.ndarray:
    """a^{-1}(p; lambda); raises MarginViolation where lambda + 2 Gamma <= 0."""
    arg = lam + 2.0 * big_gamma(spec, np.asarray(p))
    if np.any(arg <= 0) or np.any(np.isnan(arg)):
        j = int(np.argmin(arg))
        raise MarginViolation(2 if j < len(arg) - 1 else 1, (0, j), float(arg[j]))
    return arg ** -0.5


def fields(spec: VorticitySpec, state: WaveState) -> Fields:
    grid = state.grid
    ops = operators(grid, spec)
    W = state.W
    Wp = ops.Dp @ W
    Wq = W @ ops.Dq.T
    A = inverse_a(spec, state.lam, grid.p)
    return Fields(W, Wp, ops.Dpp @ W, Wq, W @ ops.Dqq.T, ops.Dp @ Wq, A[:, None],
                  ops.gamma[:, None], ops)


def margins(spec: VorticitySpec, state: WaveState, g: float, delta: float) -> dict:
    """Signed distances to the boundary of the admissible set.

    Keys 1 and 2: min of a^{-1} + w_p - delta on the upper / lower region;
    key 3: min of (2 lambda - delta)/(4g) - w on the surface.  Each value is
    paired with the (i, j) node attaining it.
    """
    f = fields(spec, state)
    slope = f.A + f.Wp - delta
    out = {}
    for key, rows in ((1, f.ops.upper), (2, ~f.ops.upper)):
        rows = rows.copy()
        rows[0] = False  # bottom row is fixed at w = 0
        if not np.any(rows):
            out[key] = (math.inf, (0, 0))
            continue
        sub = np.where(rows[:, None], slope, np.inf)
        j, i = np.unravel_index(int(np.argmin(sub)), sub.shape)
        out[key] = (float(sub[j, i]), (int(i), int(j)))
    top = (2.0 * state.lam - delta) / (4.0 * g) - f.W[-1]
    i = int(np.argmin(top))
    out[3] = (float(top[i]), (i, state.grid.np_nodes - 1))
    return out


def check_margins(spec, state, g, delta):
    for key, (val, node) in margins(spec, state, g, delta).items():
        if not val > 0:
            raise MarginViolation(key, node, val)


def residual_field(spec: VorticitySpec, state: WaveState, g: float) -> np.ndarray:
    """Residual on the full node array (bottom row zero)."""
    f = fields(spec, state)
    A, gam = f.A, f.gamma
    S = A + f.Wp
    R = ((1.0 + f.Wq**2) * f.Wpp - 2.0 * S * f.Wq * f.Wqp + S**2 * f.Wqq
         + gam * (S**3 - A**3 * (1.0 + f.Wq**2)) - state.eps * A**3 * f.W)
    kind = f.ops.kind
    R[kind == 0] = 0.0
    lam = state.lam
    W0, Wp0, Wq0 = f.W[-1], f.Wp[-1], f.Wq[-1]
    R[-1] = 1.0 + (2.0 * g * W0 - lam) * (lam**-0.5 + Wp0) ** 2 + Wq0**2
    iface = kind == 4
    if np.any(iface):
        R[iface] = (f.ops.Dmatch @ f.W)[iface]
    return R


def residual(spec: VorticitySpec, state: WaveState, g: float, delta: float | None = None) -> np.ndarray:
    """Residual vector ordered like the unknowns.

    With ``delta`` given, the state is first checked for membership in the
    admissible set and :class:`MarginViolation` is raised outside it.
    """
    if delta is not None:
        check_margins(spec, state, g, delta)
    return state.grid.to_vector(residual_field(spec, state, g))


def row_classes(grid: Grid2D, spec: VorticitySpec) -> np.ndarray:
    """Row class name per unknown."""
    kind = operators(grid, spec).kind[1:]
    names = np.array(["bottom", "interior-upper", "interior-lower", "surface", "interface"])
    return np.repeat(names[kind], grid.nq + 1)


def jacobian(spec: VorticitySpec, state: WaveState, g: float) -> tuple:
    """(J, F_lambda): sparse Jacobian in w and the analytic lambda column."""
    grid = state.grid
    f = fields(spec, state)
    K = _kron(grid, spec)
    A, gam, eps, lam = f.A, f.gamma, state.eps, state.lam
    S = A + f.Wp
    kind = np.broadcast_to(f.ops.kind[:, None], f.W.shape)
    pde = (kind == 1) | (kind == 2)
    sur = kind == 3
    ifc = kind == 4

    c_pp = 1.0 + f.Wq**2
    c_qp = -2.0 * S * f.Wq
    c_qq = S**2
    c_p = -2.0 * f.Wq * f.Wqp + 2.0 * S * f.Wqq + 3.0 * gam * S**2
    c_q = 2.0 * f.Wq * f.Wpp - 2.0 * S * f.Wqp - 2.0 * gam * A**3 * f.Wq
    c_0 = -eps * A**3 * np.ones_like(f.W)
    dF_dA = (-2.0 * f.Wq * f.Wqp + 2.0 * S * f.Wqq + 3.0 * gam * S**2
             - 3.0 * gam * A**2 * (1.0 + f.Wq**2) - 3.0 * eps * A**2 * f.W)
    F_lam = dF_dA * (-0.5 * A**3)

    B = lam**-0.5 + f.Wp
    E = 2.0 * g * f.W - lam
    s_0 = 2.0 * g * B**2
    s_p = 2.0 * E * B
    s_q = 2.0 * f.Wq
    s_lam = -(B**2) - E * B * lam**-1.5

    def d(c, mask):
        return sp.diags(np.where(mask, c, 0.0).ravel())

    J = (d(c_pp, pde) @ K["pp"] + d(c_qp, pde) @ K["qp"] + d(c_qq, pde) @ K["qq"]
         + d(c_p, pde) @ K["p"] + d(c_q, pde) @ K["q"] + d(c_0, pde)
         + d(s_0, sur) + d(s_p, sur) @ K["p"] + d(s_q, sur) @ K["q"]
         + d(np.ones_like(f.W), ifc) @ K["m"])
    F_lam = np.where(pde, F_lam, 0.0) + np.where(sur, s_lam, 0.0)
    m = grid.nq + 1
    J = sp.csr_matrix(J)[m:, m:]
    return J.tocsr(), grid.to_vector(F_lam)


def jacobian_bandwidth(grid: Grid2D) -> int:
    return 2 * (grid.nq + 1)


# ---------------------------------------------------------------------------
# single Fourier mode of the linearization at the laminar state
# ---------------------------------------------------------------------------
def mode_operator(spec: VorticitySpec, grid: Grid2D, lam: float, g: float, eps: float = 0.0,
                  k: int = 1) -> tuple:
    """Linearization at w = 0 restricted to fields phi(p) cos(k q).

    Returns ``(M, M_lam)`` acting on phi at the p-nodes above the bottom;
    the q-differences contribute their exact discrete symbol
    -(2 - 2 cos(k dq)) / dq^2.
    """
    ops = operators(grid, spec)
    A = inverse_a(spec, lam, grid.p)
    gam = ops.gamma
    kh2 = (2.0 - 2.0 * math.cos(k * grid.dq)) / grid.dq**2
    kind = ops.kind
    pde = (kind == 1) | (kind == 2)
    sur = kind == 3
    ifc = kind == 4

    def d(c, mask):
        return sp.diags(np.where(mask, c, 0.0))

    M = (d(np.ones_like(A), pde) @ ops.Dpp + d(3 * gam * A**2, pde) @ ops.Dp
         + d(-kh2 * A**2 - eps * A**3, pde)
         + d(np.full_like(A, 2 * g / lam), sur) + d(np.full_like(A, -2 * lam**0.5), sur) @ ops.Dp
         + d(np.ones_like(A), ifc) @ ops.Dmatch)
    M_lam = (d(-3 * gam * A**4, pde) @ ops.Dp + d(kh2 * A**4 + 1.5 * eps * A**5, pde)
             + d(np.full_like(A, -2 * g / lam**2), sur)
             + d(np.full_like(A, -(lam**-0.5)), sur) @ ops.Dp)
    return sp.csr_matrix(M)[1:, 1:], sp.csr_matrix(M_lam)[1:, 1:]


# ---------------------------------------------------------------------------
# weak form
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Bump:
    """Smooth compactly supported test field scale * (1 - r^2)^4 on an ellipse.

    Centred at (q0, p0) with half-widths (rq, rp); even in q when q0 = 0.
    """

    q0: float
    p0: float
    rq: float
    rp: float
    scale: float = 1.0

    def eval(self, q, p):
        X = (q - self.q0) / self.rq
        Y = (p - self.p0) / self.rp
        r2 = X**2 + Y**2
        inside = r2 < 1.0
        base = np.where(inside, 1.0 - r2, 0.0)
        phi = self.scale * base**4
        dphi = np.where(inside, -8.0 * self.scale * base**3, 0.0)  # d phi / d(r^2)
        return phi, dphi * 2.0 * X / self.rq, dphi * 2.0 * Y / self.rp


def weak_residual(spec: VorticitySpec, state: WaveState, g: float, bumps) -> list:
    """Weak form of the field equations against each test field.

    For h = H + w the divergence form reads
    (h_q / h_p)_q - ((1 + h_q^2) / (2 h_p^2) - Gamma)_p = 0, so the returned
    value is the trapezoid approximation of
    int int (h_q/h_p) phi_q - ((1 + h_q^2)/(2 h_p^2) - Gamma) phi_p dq dp
    over the half period.
    """
    grid = state.grid
    f = fields(spec, state)
    hp = f.A + f.Wp
    hq = f.Wq
    Gam = big_gamma(spec, grid.p)[:, None]
    flux_q = hq / hp
    flux_p = (1.0 + hq**2) / (2.0 * hp**2) - Gam
    Q, P = np.meshgrid(grid.q, grid.p)
    wts = grid.pgrid.trapezoid[:, None] * grid.q_trapezoid[None, :]
    out = []
    for b in bumps:
        phi, phq, php = b.eval(Q, P)
        out.append(float(np.sum(wts * (flux_q * phq - flux_p * php))))
    return out


def even_extension(grid: Grid2D, F) -> np.ndarray:
    """Extend a half-period field [j, i] to q in [-pi, pi]."""
    F = np.asarray(F)
    return np.concatenate([F[:, :0:-1], F], axis=1)


def laminar_admissible(spec: VorticitySpec, lam: float) -> bool:
    return lam + 2.0 * gamma_extremes(spec)[0] > 0
