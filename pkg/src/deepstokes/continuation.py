"""Pseudo-arclength continuation of the bifurcating branch."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields as dc_fields

import numpy as np

from .diagnostics import audit_state, check_nodal, fit_decay
from .dispersion import DispersionPoint, find_bifurcation
from .errors import (ConfigurationError, DegenerateFit, MarginViolation, NewtonFailure,
                     NoBifurcationFound, NumericalFailure)
from .grid import Grid2D
from .laminar import wave_speed
from .numerics import bordered_solve
from .transmission import WaveState, fields, jacobian, mode_operator, residual
from .vorticity import VorticitySpec, coefficient_a, gamma_extremes

TERMINATIONS = ("SpeedUnbounded", "StagnationApproach", "NodalPatternLost", "MarginHit",
                "NewtonFailure", "MaxSteps")


@dataclass(frozen=True)
class ContinuationConfig:
    s0: float = 1e-3
    ds: float = 1e-2
    ds_min: float = 1e-4
    ds_max: float = 0.5
    newton_tol: float = 1e-10
    max_newton: int = 20
    max_steps: int = 200
    max_retries: int = 5
    delta: float = 1e-4
    lam_max: float = 1e3
    hp_max: float = 1e3
    eps: float = 0.0
    eps_schedule: tuple = (0.0,)
    mode_k: int = 1
    backend: str = "banded"

    def __post_init__(self):
        object.__setattr__(self, "eps_schedule", tuple(float(e) for e in self.eps_schedule))
        for name in ("s0", "ds", "ds_min", "ds_max", "newton_tol", "delta", "lam_max", "hp_max"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        for name in ("max_newton", "max_steps", "mode_k"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be at least 1")
        if self.max_retries < 0:
            raise ConfigurationError("max_retries must be non-negative")
        if not self.ds_min <= self.ds <= self.ds_max:
            raise ConfigurationError("need ds_min <= ds <= ds_max")
        if self.eps < 0 or any(e < 0 for e in self.eps_schedule):
            raise ConfigurationError("eps must be non-negative")
        if self.backend not in ("banded", "sparse"):
            raise ConfigurationError(f"unknown backend {self.backend!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ContinuationConfig":
        known = {f.name for f in dc_fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown continuation keys: {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eps_schedule"] = list(self.eps_schedule)
        return d


# ---------------------------------------------------------------------------
# the linear mode on the 2-D grid
# ---------------------------------------------------------------------------
def mode_norm_weights(grid: Grid2D, a) -> np.ndarray:
    """Weights of <u, v> = (2/pi) sum wq wp a u v over the unknowns."""
    wts = (2.0 / math.pi) * (grid.pgrid.trapezoid * a)[:, None] * grid.q_trapezoid[None, :]
    return grid.to_vector(wts)


def refine_bifurcation(spec: VorticitySpec, grid: Grid2D, g: float, eps: float = 0.0,
                       k: int = 1, start: DispersionPoint | None = None,
                       tol: float = 1e-13, max_iter: int = 30) -> DispersionPoint:
    """Bifurcation point of the 2-D discretization itself.

    The Sturm-Liouville solve gives lambda* for the variational scheme; the
    finite-difference Jacobian is singular at a slightly different lambda.
    Newton on (phi, lambda) for the cos(kq) slice of the Jacobian closes the
    gap, so the branch starts exactly at the discrete bifurcation.
    """
    if start is None:
        start = find_bifurcation(spec, eps, g, grid.pgrid, k, bottom="dirichlet")
    phi = np.interp(grid.p, start.p, start.psi)[1:]
    lam = start.lam
    ell = grid.pgrid.trapezoid[1:] * coefficient_a(spec, lam, grid.p[1:]) * phi
    ell /= ell @ phi
    for _ in range(max_iter):
        M, M_lam = mode_operator(spec, grid, lam, g, eps, k)
        r = M @ phi
        c = ell @ phi - 1.0
        if np.max(np.abs(r)) <= tol * max(1.0, abs(M).max()) and abs(c) <= tol:
            break
        dphi, dlam = bordered_solve(M, M_lam @ phi, ell, 0.0, -r, -c)
        phi = phi + dphi
        lam = lam + float(dlam)
    else:
        raise NumericalFailure("discrete bifurcation refinement did not converge")
    psi = np.concatenate([[0.0], phi])
    a = coefficient_a(spec, lam, grid.p)
    psi /= math.sqrt(grid.pgrid.trapezoid @ (a * psi**2))
    if psi[-1] < 0:
        psi = -psi
    return DispersionPoint(float(lam), float(eps), -float(k) ** 2, psi, grid.pgrid, float(g),
                           k, "dirichlet", 0.0)


def initial_guess(point: DispersionPoint, s0: float, grid: Grid2D | None = None,
                  nq: int = 64) -> WaveState:
    """Laminar state at lambda* plus s0 Psi(p) cos(k q)."""
    if grid is None:
        grid = Grid2D(nq, point.grid)
    psi = point.psi if point.grid is grid.pgrid else np.interp(grid.p, point.p, point.psi)
    psi = psi.copy()
    psi[0] = 0.0
    W = s0 * psi[:, None] * np.cos(point.mode_k * grid.q)[None, :]
    return WaveState.from_field(grid, W, point.lam, point.eps)


# ---------------------------------------------------------------------------
# Newton on the bordered system
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Constraint:
    """Linear scalar constraint cw . (w - w_ref) + clam (lam - lam_ref) = 0."""

    cw: np.ndarray
    clam: float
    w_ref: np.ndarray
    lam_ref: float

    def value(self, state: WaveState) -> float:
        return float(self.cw @ (state.w - self.w_ref) + self.clam * (state.lam - self.lam_ref))

    @classmethod
    def fix_lambda(cls, state: WaveState) -> "Constraint":
        z = np.zeros_like(state.w)
        return cls(z, 1.0, z, state.lam)


@dataclass(frozen=True, eq=False)
class NewtonResult:
    state: WaveState
    history: list
    iterations: int


def newton_correct(spec: VorticitySpec, state: WaveState, constraint: Constraint, g: float,
                   cfg: ContinuationConfig) -> NewtonResult:
    """Newton iteration on [F(w, lam); constraint] = 0.

    Raises MarginViolation as soon as an iterate leaves the admissible set,
    and NewtonFailure when the tolerance is not met in ``max_newton`` steps.
    """
    hist = []
    for it in range(cfg.max_newton + 1):
        R = residual(spec, state, g, cfg.delta)
        c = constraint.value(state)
        rn = float(np.max(np.abs(R)))
        hist.append(max(rn, abs(c)))
        if not math.isfinite(hist[-1]):
            raise NewtonFailure("non-finite residual", hist)
        if rn <= cfg.newton_tol and abs(c) <= cfg.newton_tol:
            return NewtonResult(state, hist, it)
        if it == cfg.max_newton:
            break
        J, F_lam = jacobian(spec, state, g)
        try:
            dw, dlam = bordered_solve(J, F_lam, constraint.cw, constraint.clam, -R, -c,
                                      backend=cfg.backend)
        except NumericalFailure as err:
            raise NewtonFailure(f"linear solve failed: {err}", hist) from err
        state = state.with_(w=state.w + dw, lam=state.lam + float(dlam))
    raise NewtonFailure(f"no convergence in {cfg.max_newton} iterations "
                        f"(residual {hist[-1]:.3e})", hist)


# ---------------------------------------------------------------------------
# branch records
# ---------------------------------------------------------------------------
CSV_COLUMNS = ("step", "s", "lambda", "c", "amplitude", "max_hp", "surface_residual",
               "interface_residual", "nodal_ok", "tau_fit", "mean_drift", "newton_iters")


@dataclass(frozen=True, eq=False)
class BranchPoint:
    step: int
    s: float
    lam: float
    c: float
    amplitude: float
    max_hp: float
    surface_residual: float
    interface_residual: float
    nodal_ok: bool
    tau_fit: float
    mean_drift: float
    newton_iters: int
    state: WaveState = field(repr=False, default=None)

    def row(self) -> tuple:
        return (self.step, self.s, self.lam, self.c, self.amplitude, self.max_hp,
                self.surface_residual, self.interface_residual, int(self.nodal_ok),
                self.tau_fit, self.mean_drift, self.newton_iters)


@dataclass(frozen=True)
class Termination:
    reason: str
    inequality: int | None = None
    detail: str = ""

    def __post_init__(self):
        if self.reason not in TERMINATIONS:
            raise ValueError(f"unknown termination reason {self.reason!r}")

    def __str__(self) -> str:
        return f"MarginHit({self.inequality})" if self.reason == "MarginHit" else self.reason


@dataclass(eq=False)
class Branch:
    points: list
    termination: Termination
    bifurcation: DispersionPoint
    config: ContinuationConfig

    def column(self, name: str) -> np.ndarray:
        attr = "lam" if name == "lambda" else name
        return np.array([getattr(pt, attr) for pt in self.points], dtype=float)

    def __len__(self) -> int:
        return len(self.points)


def make_point(spec: VorticitySpec, state: WaveState, g: float, step: int, s: float,
               iters: int, delta: float) -> BranchPoint:
    f = fields(spec, state)
    audit = audit_state(spec, state, g, delta)
    nodal = check_nodal(state)
    try:
        tau = fit_decay(state).tau
    except DegenerateFit:
        tau = float("nan")
    W = f.W
    return BranchPoint(
        step=step, s=float(s), lam=state.lam,
        c=wave_speed(state.lam, gamma_extremes(spec)[1]),
        amplitude=float(W[-1, 0] - W[-1, -1]),
        max_hp=float(np.max(f.A + f.Wp)),
        surface_residual=audit.surface, interface_residual=audit.interface,
        nodal_ok=nodal.passed, tau_fit=float(tau), mean_drift=audit.mean_drift,
        newton_iters=int(iters), state=state)


def _threshold(pt: BranchPoint, cfg: ContinuationConfig):
    if pt.lam > cfg.lam_max:
        return Termination("SpeedUnbounded", detail=f"lambda = {pt.lam:.6g} > {cfg.lam_max:.6g}")
    if pt.max_hp > cfg.hp_max:
        return Termination("StagnationApproach",
                           detail=f"max h_p = {pt.max_hp:.6g} > {cfg.hp_max:.6g}")
    return None


def _failure_termination(err) -> Termination:
    if isinstance(err, MarginViolation):
        return Termination("MarginHit", err.inequality, str(err))
    if isinstance(err, _NodalLost):
        return Termination("NodalPatternLost", detail=str(err))
    return Termination("NewtonFailure", detail=str(err))


class _NodalLost(Exception):
    pass


def run_branch(spec: VorticitySpec, g: float, cfg: ContinuationConfig, grid: Grid2D,
               point: DispersionPoint | None = None) -> Branch:
    """Trace the branch from the bifurcation point until a termination test fires.

    Step 0 is corrected with the tangent (Psi cos q, 0) fixing the modal
    amplitude at s0; later steps use the secant tangent.  A failed corrector
    (Newton failure, leaving the admissible set, or a broken nodal pattern)
    halves ds and retries; when retries run out the branch ends with the
    reason of the last failure.  Failure at step 0 is raised to the caller.
    """
    if point is None:
        point = refine_bifurcation(spec, grid, g, cfg.eps, cfg.mode_k)
    wts = mode_norm_weights(grid, coefficient_a(spec, point.lam, grid.p))
    guess = initial_guess(point, cfg.s0, grid)
    mode = guess.w / cfg.s0
    first = newton_correct(spec, guess, Constraint(wts * mode, 0.0, guess.w, point.lam), g, cfg)
    pts = [make_point(spec, first.state, g, 0, cfg.s0, first.iterations, cfg.delta)]
    branch = Branch(pts, Termination("MaxSteps"), point, cfg)
    if not pts[0].nodal_ok:
        branch.termination = Termination("NodalPatternLost", detail="first point")
        return branch
    stop = _threshold(pts[0], cfg)
    if stop:
        branch.termination = stop
        return branch

    def norm(dw, dl):
        return math.sqrt(float(dw @ (wts * dw)) + dl * dl)

    prev_w, prev_l = np.zeros_like(guess.w), point.lam
    cur = first.state
    s = cfg.s0
    ds = cfg.ds
    for step in range(1, cfg.max_steps):
        tw, tl = cur.w - prev_w, cur.lam - prev_l
        nrm = norm(tw, tl)
        tw, tl = tw / nrm, tl / nrm
        failures = 0
        while True:
            pred = cur.with_(w=cur.w + ds * tw, lam=cur.lam + ds * tl)
            con = Constraint(wts * tw, tl, pred.w, pred.lam)
            try:
                res = newton_correct(spec, pred, con, g, cfg)
                pt = make_point(spec, res.state, g, step, s, res.iterations, cfg.delta)
                if not pt.nodal_ok:
                    raise _NodalLost(f"nodal pattern fails at step {step}")
                break
            except (NewtonFailure, MarginViolation, _NodalLost) as err:
                failures += 1
                if failures > cfg.max_retries or ds / 2 < cfg.ds_min:
                    branch.termination = _failure_termination(err)
                    return branch
                ds /= 2.0
        s += norm(res.state.w - cur.w, res.state.lam - cur.lam)
        pt = BranchPoint(**{**pt.__dict__, "s": s})
        pts.append(pt)
        stop = _threshold(pt, cfg)
        if stop:
            branch.termination = stop
            return branch
        prev_w, prev_l, cur = cur.w, cur.lam, res.state
        if res.iterations <= 3:
            ds = min(ds * 1.3, cfg.ds_max)
    return branch


# ---------------------------------------------------------------------------
# epsilon homotopy
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class HomotopyRow:
    eps: float
    lam: float
    gap: float
    order: float
    ok: bool


def epsilon_homotopy(spec: VorticitySpec, g: float, cfg: ContinuationConfig, grid=None,
                     bottom: str = "tail") -> list:
    """lambda*^eps along the schedule, gaps to lambda*^0 and observed orders in eps."""
    sched = list(cfg.eps_schedule)
    if any(b > a for a, b in zip(sched[:-1], sched[1:])):
        raise ConfigurationError("eps schedule must decrease")
    lams = []
    for e in sched:
        try:
            lams.append(find_bifurcation(spec, e, g, grid, cfg.mode_k, bottom).lam)
        except (NoBifurcationFound, NumericalFailure):
            lams.append(float("nan"))
    if 0.0 in sched:
        lam0 = lams[sched.index(0.0)]
    else:
        try:
            lam0 = find_bifurcation(spec, 0.0, g, grid, cfg.mode_k, bottom).lam
        except (NoBifurcationFound, NumericalFailure):
            lam0 = float("nan")
    gaps = [abs(lam - lam0) for lam in lams]
    rows = []
    for i, (e, lam, gap) in enumerate(zip(sched, lams, gaps)):
        order = float("nan")
        if i > 0 and e > 0 and sched[i - 1] > 0 and gap > 0 and gaps[i - 1] > 0:
            order = math.log(gaps[i - 1] / gap) / math.log(sched[i - 1] / e)
        rows.append(HomotopyRow(e, lam, gap, order, math.isfinite(lam)))
    return rows
