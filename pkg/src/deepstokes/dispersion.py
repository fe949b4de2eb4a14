"""Sturm-Liouville dispersion relation of the linearized wave problem.

For fixed lambda the principal eigenvalue mu(lambda) minimizes

    (-g Psi(0)^2 + int a^3 Psi'^2 + eps int Psi^2) / int a Psi^2,

with a = sqrt(lambda + 2 Gamma).  Bifurcation from the laminar flow with
wavenumber k happens where mu(lambda) = -k^2.

The half line is truncated at p = -P_max.  By default the discrete trial
space is closed with the exact decaying exponential Psi(-P) e^{m (p + P)}
below the cut (``bottom="tail"``), which adds two scalar terms to the corner
of the pencil and keeps it symmetric and tridiagonal; ``bottom="dirichlet"``
imposes Psi(-P_max) = 0 instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoBifurcationFound
from .grid import DEFAULT_P_MAX, Grid1D
from .numerics import tridiag_eig_smallest
from .vorticity import VorticitySpec, coefficient_a, gamma_extremes, piece_gamma

BOTTOMS = ("tail", "dirichlet")


def default_grid(spec: VorticitySpec, P_max: float = DEFAULT_P_MAX, dp: float = 1e-2,
                 dp_upper: float | None = None) -> Grid1D:
    return Grid1D.build(spec, P_max, dp, dp_upper)


@dataclass(frozen=True, eq=False)
class SLPencil:
    """Symmetric tridiagonal stiffness ``A`` and diagonal mass ``B``.

    Arrays are indexed by the unknown nodes ``grid.p[first:]``.
    """

    diag: np.ndarray
    off: np.ndarray
    mass: np.ndarray
    lam: float
    eps: float
    g: float
    grid: Grid1D
    bottom: str
    tail_rate: float

    @property
    def first(self) -> int:
        return 0 if self.bottom == "tail" else 1

    def restrict(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        if phi.shape != self.grid.p.shape:
            raise DomainError("trial function must be sampled on the grid nodes")
        return phi[self.first:]

    def extend(self, v) -> np.ndarray:
        out = np.zeros(self.grid.size)
        out[self.first:] = v
        return out

    def forms(self, phi) -> tuple:
        """(phi^T A phi, phi^T B phi) for samples on all grid nodes."""
        v = self.restrict(phi)
        num = float(v @ (self.diag * v) + 2.0 * (v[:-1] @ (self.off * v[1:])))
        den = float(v @ (self.mass * v))
        return num, den

    def dense(self) -> tuple:
        A = np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)
        return A, np.diag(self.mass)


def _tail_rate(a_b: float, eps: float, k: int) -> float:
    return math.sqrt((k * k * a_b + eps) / a_b**3)


def assemble_pencil(spec: VorticitySpec, lam: float, eps: float, grid: Grid1D, g: float,
                    mode_k: int = 1, bottom: str = "tail") -> SLPencil:
    """Flux-form discretization of -(a^3 Psi')' + eps Psi = mu a Psi.

    The stiffness uses a^3 at cell midpoints, the mass and the eps term use
    trapezoid weights, and the surface term -g Psi(0)^2 sits in the last
    diagonal entry.
    """
    if eps < 0:
        raise DomainError("eps must be non-negative")
    if bottom not in BOTTOMS:
        raise DomainError(f"bottom must be one of {BOTTOMS}")
    p = grid.p
    a = coefficient_a(spec, lam, p)
    a3 = coefficient_a(spec, lam, grid.midpoints) ** 3
    h = np.diff(p)
    w = grid.trapezoid
    k = a3 / h
    diag = np.zeros_like(p)
    diag[:-1] += k
    diag[1:] += k
    diag += eps * w
    diag[-1] -= g
    off = -k
    mass = w * a
    m = _tail_rate(a[0], eps, mode_k)
    if bottom == "tail":
        diag[0] += 0.5 * a[0] ** 3 * m + 0.5 * eps / m
        mass[0] += 0.5 * a[0] / m
        return SLPencil(diag, off, mass, float(lam), float(eps), float(g), grid, bottom, m)
    return SLPencil(diag[1:], off[1:], mass[1:], float(lam), float(eps), float(g), grid, bottom, m)


def principal_eigenpair(pencil: SLPencil) -> tuple:
    """(mu, Psi) with Psi on all grid nodes, Psi(0) > 0 and Psi^T B Psi = 1."""
    mu, v = tridiag_eig_smallest(pencil.diag, pencil.off, pencil.mass)
    if v[-1] < 0:
        v = -v
    return mu, pencil.extend(v)


def rayleigh_quotient(spec: VorticitySpec, lam: float, eps: float, phi, g: float,
                      grid: Grid1D, mode_k: int = 1, bottom: str = "tail") -> float:
    """Discrete Rayleigh quotient, bit-identical to the pencil's forms."""
    pencil = assemble_pencil(spec, lam, eps, grid, g, mode_k, bottom)
    phi = np.asarray(phi, dtype=float)
    if bottom == "dirichlet" and phi[0] != 0.0:
        raise DomainError("trial function must vanish at -P_max for the Dirichlet closure")
    num, den = pencil.forms(phi)
    if den == 0.0:
        raise DomainError("trial function has zero mass")
    return num / den


@dataclass(frozen=True, eq=False)
class DispersionPoint:
    """Principal eigenpair at one lambda."""

    lam: float
    eps: float
    mu: float
    psi: np.ndarray
    grid: Grid1D
    g: float
    mode_k: int = 1
    bottom: str = "tail"
    tail_rate: float = 0.0

    @property
    def p(self) -> np.ndarray:
        return self.grid.p

    def scaled(self, factor: float) -> "DispersionPoint":
        return DispersionPoint(self.lam, self.eps, self.mu, self.psi * factor, self.grid,
                               self.g, self.mode_k, self.bottom, self.tail_rate)


def eigenpoint(spec: VorticitySpec, lam: float, eps: float, grid: Grid1D, g: float,
               mode_k: int = 1, bottom: str = "tail") -> DispersionPoint:
    pencil = assemble_pencil(spec, lam, eps, grid, g, mode_k, bottom)
    mu, psi = principal_eigenpair(pencil)
    return DispersionPoint(float(lam), float(eps), float(mu), psi, grid, float(g), mode_k,
                           bottom, pencil.tail_rate)


def principal_mu(spec, lam, eps, grid, g, mode_k=1, bottom="tail") -> float:
    return eigenpoint(spec, lam, eps, grid, g, mode_k, bottom).mu


def bifurcation_bracket(spec: VorticitySpec, g: float) -> tuple:
    """(lambda_lo, lambda_hi) with the degenerate end offset inward."""
    gi, _ = gamma_extremes(spec)
    eta = 1e-8 * (1.0 + abs(gi))
    return -2.0 * gi + eta, g - 2.0 * gi


def find_bifurcation(spec: VorticitySpec, eps: float, g: float, grid: Grid1D | None = None,
                     mode_k: int = 1, bottom: str = "tail", bracket=None,
                     xtol: float = 1e-14, max_iter: int = 200) -> DispersionPoint:
    """Locate lambda* with mu(lambda*) = -mode_k^2.

    Bisection shrinks the bracket to a relative width of 1e-4, then an
    Illinois-modified secant iteration polishes the root.
    """
    if grid is None:
        grid = default_grid(spec)
    target = -float(mode_k) ** 2

    def f(lam):
        return principal_mu(spec, lam, eps, grid, g, mode_k, bottom) - target

    lo, hi = bracket if bracket is not None else bifurcation_bracket(spec, g)
    flo = f(lo)
    if not flo < 0:
        raise NoBifurcationFound(f"mu + k^2 = {flo:.3e} >= 0 at the lower bracket end {lo}")
    fhi = f(hi)
    grow = 0
    while not fhi > 0 and grow < 8 and bracket is None:
        # the closed upper end can be an exact root; step just beyond it
        hi = hi + (hi - lo) * 10.0 ** (grow - 6)
        fhi = f(hi)
        grow += 1
    if not fhi > 0:
        raise NoBifurcationFound(f"mu + k^2 = {fhi:.3e} <= 0 at the upper bracket end {hi}")
    it = 0
    while hi - lo > 1e-4 * abs(hi) and it < max_iter:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm > 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
        it += 1
    side = 0
    while it < max_iter:
        x = hi - fhi * (hi - lo) / (fhi - flo)
        if not (lo < x < hi):
            x = 0.5 * (lo + hi)
        fx = f(x)
        it += 1
        if fx == 0.0:
            lo = hi = x
            break
        if fx > 0:
            hi, fhi = x, fx
            if side == 1:
                flo *= 0.5
            side = 1
        else:
            lo, flo = x, fx
            if side == -1:
                fhi *= 0.5
            side = -1
        if hi - lo <= xtol * abs(x) or abs(fx) <= 1e-15:
            break
    lam = hi if abs(fhi) <= abs(flo) else lo
    return eigenpoint(spec, lam, eps, grid, g, mode_k, bottom)


def _tail_terms(point: DispersionPoint, a_b: float):
    """Integrals of the exponential continuation below the cut (or zeros)."""
    if point.bottom != "tail":
        return 0.0, 0.0, 0.0, 0.0
    m, s2 = point.tail_rate, point.psi[0] ** 2
    # int a Psi'^2, int Psi^2 / a, int a Psi^2, int Psi^2
    return 0.5 * a_b * m * s2, 0.5 * s2 / (m * a_b), 0.5 * a_b * s2 / m, 0.5 * s2 / m


def _integrals(point: DispersionPoint, spec: VorticitySpec):
    grid, psi = point.grid, point.psi
    a = coefficient_a(spec, point.lam, grid.p)
    a_mid = coefficient_a(spec, point.lam, grid.midpoints)
    h = np.diff(grid.p)
    dpsi = np.diff(psi) / h
    return a, a_mid, h, dpsi


def mu_derivative(point: DispersionPoint, spec: VorticitySpec, g: float) -> float:
    """d mu / d lambda = ((3/2) int a Psi'^2 - (mu/2) int Psi^2/a) / int a Psi^2."""
    a, a_mid, h, dpsi = _integrals(point, spec)
    w = point.grid.trapezoid
    t_d, t_inv, t_m, _ = _tail_terms(point, a[0])
    i_grad = float(np.sum(a_mid * dpsi**2 * h)) + t_d
    i_inv = float(np.sum(w * point.psi**2 / a)) + t_inv
    i_mass = float(np.sum(w * a * point.psi**2)) + t_m
    return (1.5 * i_grad - 0.5 * point.mu * i_inv) / i_mass


def _cell_gamma(spec: VorticitySpec, grid: Grid1D) -> np.ndarray:
    out = np.empty(grid.size - 1)
    for a, b in grid.regions:
        out[a:b] = piece_gamma(spec, grid.midpoints[a:b])
    return out


def transversality(point: DispersionPoint, spec: VorticitySpec, g: float,
                   surface_normalized: bool = False, nq: int = 16) -> tuple:
    """(pairing, closed form) of the transversality certificate at lambda*.

    The pairing integrates u* g_1 a^3 over the period and u* g_3 over the
    surface with u* = Psi(p) cos q, using the fields

        a^3 g_1 = -a^{-1} u*_qq - 3 a_p u*_p + (3/2) eps a^{-2} u*,
        g_3     = -(3/2) sqrt(lambda) u*_p.

    The closed form is -pi int ((3a/2) Psi'^2 + Psi^2 / (2a)) dp.  Both are
    quadratic in Psi; ``surface_normalized`` rescales to Psi(0) = 1 first.
    """
    if surface_normalized:
        point = point.scaled(1.0 / point.psi[-1])
    lam, eps, psi = point.lam, point.eps, point.psi
    a, a_mid, h, dpsi = _integrals(point, spec)
    w = point.grid.trapezoid
    a_p_mid = _cell_gamma(spec, point.grid) / a_mid
    t_d, t_inv, _, t_sq = _tail_terms(point, a[0])

    q = np.linspace(-math.pi, math.pi, 2 * nq, endpoint=False)
    dq = 2 * math.pi / (2 * nq)
    c2 = float(np.sum(np.cos(q) ** 2) * dq)  # periodic trapezoid: exactly pi
    # -a^{-1} u*_qq u* = a^{-1} Psi^2 cos^2 q ; eps term alike; the a_p term
    # pairs u*_p u* = (Psi^2)'/2 cos^2 q and is integrated cell by cell
    lhs_p = (float(np.sum(w * psi**2 / a)) + t_inv
             - 3.0 * float(np.sum(a_p_mid * np.diff(psi**2) / 2.0))
             + 1.5 * eps * (float(np.sum(w * psi**2 / a**2)) + t_sq / a[0] ** 2))
    dpsi0 = g * psi[-1] / lam**1.5
    lhs = c2 * (lhs_p - 1.5 * math.sqrt(lam) * dpsi0 * psi[-1])
    rhs = -c2 * (1.5 * (float(np.sum(a_mid * dpsi**2 * h)) + t_d)
                 + 0.5 * (float(np.sum(w * psi**2 / a)) + t_inv))
    return lhs, rhs


def scan(spec: VorticitySpec, eps: float, g: float, grid: Grid1D, lams,
         mode_k: int = 1, bottom: str = "tail") -> list:
    """[(lambda, mu)] in the given lambda order."""
    return [(float(l), principal_mu(spec, float(l), eps, grid, g, mode_k, bottom)) for l in lams]
