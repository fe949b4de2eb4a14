"""Piecewise smooth vorticity functions and the head function Gamma.

A vorticity function gamma(s), s >= 0, is given by consecutive segments
``[s_lo, s_hi)``.  Each segment is either

* ``polyexp``:  (c_0 + c_1 s + ... + c_m s^m) * exp(-kappa s), or
* ``rational``: A * (1 + s)^(-beta).

The head function is Gamma(p) = int_0^p gamma(-s) ds for p <= 0, which equals
-G(-p) with G(sigma) = int_0^sigma gamma(t) dt.  Every segment integral has a
closed form in this basis, so Gamma is exact to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    AdmissibilityError,
    ConfigurationError,
    DomainError,
    SingularCoefficientError,
)

KINDS = ("polyexp", "rational")
_ENVELOPE_SPLIT = 1e4
_ENVELOPE_END = 1e8


@dataclass(frozen=True)
class VorticitySegment:
    """One smooth piece of gamma on ``[s_lo, s_hi)``."""

    s_lo: float
    s_hi: float
    kind: str = "polyexp"
    coefficients: tuple = (0.0,)
    decay_rate: float = 0.0
    amplitude: float = 0.0
    exponent: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "s_lo", float(self.s_lo))
        object.__setattr__(self, "s_hi", float(self.s_hi))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown segment kind {self.kind!r}")
        if not (0.0 <= self.s_lo < self.s_hi):
            raise ConfigurationError(f"bad segment bounds [{self.s_lo}, {self.s_hi})")
        if self.kind == "polyexp":
            if len(self.coefficients) == 0:
                raise ConfigurationError("polyexp segment needs at least one coefficient")
            if self.decay_rate < 0:
                raise ConfigurationError("decay rate must be non-negative")
            if math.isinf(self.s_hi) and self.decay_rate == 0 and any(self.coefficients):
                raise AdmissibilityError("non-integrable tail: polynomial without decay")
        else:
            if math.isinf(self.s_hi) and self.exponent <= 1:
                raise AdmissibilityError("non-integrable tail: rational exponent <= 1")
            if self.exponent == 1.0:
                raise ConfigurationError("rational exponent 1 is not supported")

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.s_hi)

    @property
    def is_zero(self) -> bool:
        if self.kind == "polyexp":
            return not any(self.coefficients)
        return self.amplitude == 0.0

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "polyexp":
            poly = np.polynomial.polynomial.polyval(s, self.coefficients)
            if self.decay_rate == 0.0:
                return poly
            return poly * np.exp(-self.decay_rate * s)
        return self.amplitude * (1.0 + s) ** (-self.exponent)

    def tail(self, x):
        """int_x^inf of this piece (the piece extended to infinity)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "rational":
            b = self.exponent
            return self.amplitude * (1.0 + x) ** (1.0 - b) / (b - 1.0)
        k = self.decay_rate
        out = np.zeros_like(x)
        for i, c in enumerate(self.coefficients):
            if c == 0.0:
                continue
            acc = np.zeros_like(x)
            for j in range(i + 1):
                acc = acc + math.factorial(i) / math.factorial(j) * x**j / k ** (i - j + 1)
            out = out + c * acc
        return out * np.exp(-k * x)

    def integral(self, a, b):
        """int_a^b of this piece, vectorized in ``b``."""
        b = np.asarray(b, dtype=float)
        if self.is_zero:
            return np.zeros_like(b)
        if self.kind == "polyexp" and self.decay_rate == 0.0:
            anti = np.polynomial.polynomial.polyint(self.coefficients)
            P = np.polynomial.polynomial.polyval
            return P(b, anti) - P(a, anti)
        fin = np.isfinite(b)
        tb = np.zeros_like(b)
        tb[fin] = self.tail(b[fin])
        return self.tail(a) - tb

    def sign_changes(self) -> list:
        """Interior points where this piece may change sign."""
        if self.kind == "rational" or self.is_zero:
            return []
        c = np.trim_zeros(np.asarray(self.coefficients), "b")
        if len(c) < 2:
            return []
        roots = np.roots(c[::-1])
        real = roots[np.abs(roots.imag) <= 1e-12 * np.maximum(1.0, np.abs(roots))].real
        return sorted(r for r in real if self.s_lo < r < self.s_hi)

    def critical_points(self) -> list:
        """Interior stationary points of this piece."""
        if self.kind == "rational" or self.is_zero:
            return []
        c = np.asarray(self.coefficients)
        deriv = np.polynomial.polynomial.polyder(c) if len(c) > 1 else np.zeros(1)
        lead = np.zeros(max(len(c), len(deriv)))
        lead[: len(deriv)] += deriv
        lead[: len(c)] -= self.decay_rate * c
        lead = np.trim_zeros(lead, "b")
        if len(lead) < 2:
            return []
        roots = np.roots(lead[::-1])
        real = roots[np.abs(roots.imag) <= 1e-12 * np.maximum(1.0, np.abs(roots))].real
        return sorted(r for r in real if self.s_lo < r < self.s_hi)

    def to_dict(self) -> dict:
        hi = "inf" if self.unbounded else self.s_hi
        if self.kind == "polyexp":
            params = {"coefficients": list(self.coefficients), "decay_rate": self.decay_rate}
        else:
            params = {"amplitude": self.amplitude, "exponent": self.exponent}
        return {"s_lo": self.s_lo, "s_hi": hi, "kind": self.kind, "params": params}

    @classmethod
    def from_dict(cls, d: dict) -> "VorticitySegment":
        _reject_unknown(d, {"s_lo", "s_hi", "kind", "params"}, "segment")
        try:
            s_hi = math.inf if d["s_hi"] in ("inf", "Infinity", None) else float(d["s_hi"])
            kind = d.get("kind", "polyexp")
            params = dict(d.get("params", {}))
            s_lo = float(d["s_lo"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed segment {d!r}: {exc}") from None
        if kind == "polyexp":
            _reject_unknown(params, {"coefficients", "decay_rate"}, "polyexp params")
            return cls(s_lo, s_hi, kind, tuple(params.get("coefficients", (0.0,))),
                       float(params.get("decay_rate", 0.0)))
        if kind == "rational":
            _reject_unknown(params, {"amplitude", "exponent"}, "rational params")
            return cls(s_lo, s_hi, kind, amplitude=float(params.get("amplitude", 0.0)),
                       exponent=float(params.get("exponent", 3.0)))
        raise ConfigurationError(f"unknown segment kind {kind!r}")


def _reject_unknown(d, allowed, what):
    if not isinstance(d, dict):
        raise ConfigurationError(f"{what} must be an object")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigurationError(f"unknown keys in {what}: {sorted(extra)}")


@dataclass(frozen=True)
class VorticitySpec:
    """Piecewise smooth vorticity with cached head-function data.

    Parameters
    ----------
    segments : tuple of VorticitySegment
        Consecutive pieces partitioning ``[0, inf)``.
    decay_exponent : float
        Declared ``r > 0`` in the tail bound ``|gamma(s)| <= C s^(-2-r)``.
    """

    segments: tuple
    decay_exponent: float = 1.0
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ConfigurationError("vorticity needs at least one segment")
        if segs[0].s_lo != 0.0:
            raise ConfigurationError("first segment must start at s = 0")
        for left, right in zip(segs[:-1], segs[1:]):
            if left.unbounded or left.s_hi != right.s_lo:
                raise ConfigurationError("segments must be contiguous with increasing breakpoints")
        if not segs[-1].unbounded:
            raise ConfigurationError("last segment must extend to infinity")
        if not self.decay_exponent > 0:
            raise ConfigurationError("decay exponent must be positive")

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls) -> "VorticitySpec":
        return cls((VorticitySegment(0.0, math.inf),))

    @classmethod
    def step(cls, value=1.0, depth=1.0) -> "VorticitySpec":
        """Constant vorticity ``value`` on ``[0, depth)``, zero below."""
        return cls((VorticitySegment(0.0, depth, coefficients=(value,)),
                    VorticitySegment(depth, math.inf)))

    @classmethod
    def exponential(cls, amplitude=1.0, rate=1.0) -> "VorticitySpec":
        return cls((VorticitySegment(0.0, math.inf, coefficients=(amplitude,), decay_rate=rate),))

    @classmethod
    def from_dict(cls, d: dict) -> "VorticitySpec":
        _reject_unknown(d, {"segments", "decay_exponent"}, "vorticity")
        if "segments" not in d or not isinstance(d["segments"], list):
            raise ConfigurationError("vorticity.segments must be a list")
        segs = tuple(VorticitySegment.from_dict(s) for s in d["segments"])
        return cls(segs, float(d.get("decay_exponent", 1.0)))

    def to_dict(self) -> dict:
        return {"segments": [s.to_dict() for s in self.segments],
                "decay_exponent": self.decay_exponent}

    # -- cached structure -----------------------------------------------
    @cached_property
    def breakpoints(self) -> np.ndarray:
        """Interior breakpoints s_1 < ... in stream coordinate."""
        return np.array([s.s_lo for s in self.segments[1:]])

    @cached_property
    def jump_heights(self) -> np.ndarray:
        """Breakpoints as heights p_j = -s_j, ordered from the surface down."""
        return -self.breakpoints

    @cached_property
    def _starts(self) -> np.ndarray:
        return np.array([s.s_lo for s in self.segments])

    @cached_property
    def _cumulative(self) -> np.ndarray:
        """G at the start of each segment."""
        out = [0.0]
        for seg in self.segments[:-1]:
            out.append(out[-1] + float(seg.integral(seg.s_lo, seg.s_hi)))
        return np.array(out)

    @cached_property
    def total_integral(self) -> float:
        last = self.segments[-1]
        return float(self._cumulative[-1] + last.integral(last.s_lo, math.inf))

    def segment_index(self, s) -> np.ndarray:
        return np.searchsorted(self._starts, s, side="right") - 1

    def G(self, sigma) -> np.ndarray:
        """int_0^sigma gamma(t) dt, sigma >= 0 (array)."""
        sigma = np.asarray(sigma, dtype=float)
        idx = self.segment_index(sigma)
        out = np.empty_like(sigma)
        for k, seg in enumerate(self.segments):
            m = idx == k
            if np.any(m):
                out[m] = self._cumulative[k] + seg.integral(seg.s_lo, sigma[m])
        return out


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


def gamma_eval(spec: VorticitySpec, s):
    """gamma(s); at a breakpoint the right-limit is returned."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(np.isnan(s_arr)):
        raise DomainError("gamma is defined for s >= 0 only")
    flat = np.atleast_1d(s_arr)
    idx = spec.segment_index(flat)
    out = np.empty_like(flat)
    for k, seg in enumerate(spec.segments):
        m = idx == k
        if np.any(m):
            out[m] = seg(flat[m])
    return _scalar_or_array(s, out.reshape(s_arr.shape))


def gamma_at_height(spec: VorticitySpec, p):
    """gamma(-p) for heights p <= 0, the form used by the field equations."""
    return gamma_eval(spec, -np.minimum(np.asarray(p, dtype=float), 0.0) + 0.0)


def piece_gamma(spec: VorticitySpec, p):
    """gamma(-p) on the heights of one smooth region, ends included.

    All nodes are evaluated with the segment that owns the region interior,
    which gives the one-sided limits at the region's end points.
    """
    p = np.asarray(p, dtype=float)
    mid = -0.5 * (p[0] + p[1]) if p.size > 1 else -float(p[0])
    seg = spec.segments[int(spec.segment_index(mid))]
    return np.asarray(seg(-p), dtype=float) * np.ones_like(p)


def big_gamma(spec: VorticitySpec, p):
    """Gamma(p) = int_0^p gamma(-s) ds for p <= 0."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr > 0) or np.any(np.isnan(p_arr)):
        raise DomainError("Gamma is defined for p <= 0 only")
    flat = np.atleast_1d(p_arr)
    out = -spec.G(-flat + 0.0)
    return _scalar_or_array(p, out.reshape(p_arr.shape))


def gamma_extremes(spec: VorticitySpec) -> tuple:
    """(Gamma_inf, Gamma_infinity): infimum and limit of Gamma on (-inf, 0]."""
    cached = spec._cache.get("extremes")
    if cached is not None:
        return cached
    cands = [0.0]
    for seg in spec.segments:
        cands.append(seg.s_lo)
        if not seg.unbounded:
            cands.append(seg.s_hi)
        cands.extend(seg.sign_changes())
    G = spec.G(np.array(cands))
    g_lim = spec.total_integral
    if not math.isfinite(g_lim):
        raise AdmissibilityError("vorticity tail is not integrable")
    gamma_inf = min(0.0, float(-np.max(G)), -g_lim)
    out = (gamma_inf, -g_lim + 0.0)
    spec._cache["extremes"] = out
    return out


def gamma_sup(spec: VorticitySpec) -> float:
    """sup of gamma over s >= 0 (limits at segment ends included)."""
    vals = []
    for seg in spec.segments:
        pts = [seg.s_lo] + seg.critical_points()
        if not seg.unbounded:
            pts.append(seg.s_hi)
        vals.extend(np.atleast_1d(seg(np.array(pts))).tolist())
        if seg.unbounded:
            vals.append(0.0)
    return float(max(vals))


@dataclass(frozen=True)
class AdmissibilityReport:
    decay_ok: bool
    gamma_inf_ok: bool
    margin: float
    gamma_inf: float
    gamma_infinity: float

    @property
    def passed(self) -> bool:
        return self.decay_ok and self.gamma_inf_ok

    def to_dict(self) -> dict:
        return {"decay_ok": bool(self.decay_ok), "gamma_inf_ok": bool(self.gamma_inf_ok),
                "margin": float(self.margin), "gamma_inf": float(self.gamma_inf),
                "gamma_infinity": float(self.gamma_infinity), "passed": bool(self.passed)}


def _decay_ok(spec: VorticitySpec) -> bool:
    last = spec.segments[-1]
    r = spec.decay_exponent
    if last.is_zero:
        return True
    if last.kind == "rational" and last.exponent < 2.0 + r:
        analytic = False
    elif last.kind == "polyexp" and last.decay_rate == 0.0:
        analytic = False
    else:
        analytic = True
    # sampled envelope: |gamma| s^(2+r) must not grow along the tail
    s0 = max(last.s_lo, 1.0)
    s = np.geomspace(s0, _ENVELOPE_END, 400)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        env = np.abs(last(s)) * s ** (2.0 + r)
    if not np.all(np.isfinite(env)):
        return False
    head = env[s < _ENVELOPE_SPLIT]
    tail = env[s >= _ENVELOPE_SPLIT]
    sampled = head.size == 0 or tail.max() <= 1.01 * head.max() + 1e-300
    return analytic and sampled


def check_admissible(spec: VorticitySpec, g: float) -> AdmissibilityReport:
    """Decay and depth hypotheses for the existence theory."""
    if not g > 0:
        raise DomainError("gravity must be positive")
    gi, ginf = gamma_extremes(spec)
    margin = g ** (2.0 / 3.0) / 4.0 - (-gi)
    return AdmissibilityReport(_decay_ok(spec), margin > 0, float(margin), gi, ginf)


def coefficient_a(spec: VorticitySpec, lam: float, p):
    """a(p; lambda) = sqrt(lambda + 2 Gamma(p))."""
    arg = lam + 2.0 * np.asarray(big_gamma(spec, p))
    if np.any(arg <= 0) or np.any(np.isnan(arg)):
        raise SingularCoefficientError(
            f"lambda + 2 Gamma(p) <= 0 (min {np.min(arg):.3e}) at lambda={lam}")
    out = np.sqrt(arg)
    return _scalar_or_array(p, out)
