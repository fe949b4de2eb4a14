"""Interface-aligned grids on the truncated strip."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError
from .vorticity import VorticitySpec

DEFAULT_P_MAX = 8.0 * math.pi
MIN_REGION_NODES = 16


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Nodes ``-P_max = p[0] < ... < p[-1] = 0``.

    ``interfaces`` are indices of nodes that separate smooth regions: every
    vorticity breakpoint, plus an optional nominal split used to refine the
    near-surface layer when the vorticity has no breakpoint.
    """

    p: np.ndarray
    interfaces: tuple = ()
    jumps: tuple = ()

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        object.__setattr__(self, "p", p)
        if p.ndim != 1 or p.size < 3 or np.any(np.diff(p) <= 0) or p[-1] != 0.0:
            raise ConfigurationError("p-nodes must increase strictly and end at 0")

    @property
    def P_max(self) -> float:
        return float(-self.p[0])

    @property
    def size(self) -> int:
        return self.p.size

    @cached_property
    def regions(self) -> tuple:
        """(first, last) node index of each smooth region, bottom to top."""
        cuts = [0] + sorted(self.interfaces) + [self.p.size - 1]
        return tuple(zip(cuts[:-1], cuts[1:]))

    @cached_property
    def trapezoid(self) -> np.ndarray:
        """Trapezoid weights on [-P_max, 0]."""
        h = np.diff(self.p)
        w = np.zeros_like(self.p)
        w[:-1] += h / 2
        w[1:] += h / 2
        return w

    @cached_property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.p[:-1] + self.p[1:])

    def region_of_cell(self) -> np.ndarray:
        out = np.empty(self.p.size - 1, dtype=int)
        for r, (a, b) in enumerate(self.regions):
            out[a:b] = r
        return out

    @classmethod
    def from_counts(cls, edges, counts, jump_edges=None) -> "Grid1D":
        """Uniform cells in each region ``[edges[k], edges[k+1]]``."""
        edges = [float(e) for e in edges]
        parts, interfaces, pos = [], [], 0
        for k, n in enumerate(counts):
            pts = np.linspace(edges[k], edges[k + 1], int(n) + 1)
            parts.append(pts if k == 0 else pts[1:])
            pos += int(n)
            if k < len(counts) - 1:
                interfaces.append(pos)
        p = np.concatenate(parts)
        p[-1] = 0.0
        jump_set = set(jump_edges or [])
        jumps = tuple(i for i, e in zip(interfaces, edges[1:-1]) if e in jump_set)
        return cls(p, tuple(interfaces), jumps)

    @classmethod
    def build(cls, spec: VorticitySpec, P_max: float = DEFAULT_P_MAX, dp: float = 1e-2,
              dp_upper: float | None = None, split: float | None = None) -> "Grid1D":
        """Grid with spacing about ``dp`` (``dp_upper`` above the top interface)."""
        edges, jumps = _edges(spec, P_max, split)
        counts = []
        for k in range(len(edges) - 1):
            step = dp_upper if (dp_upper and k == len(edges) - 2 and len(edges) > 2) else dp
            counts.append(max(MIN_REGION_NODES, int(math.ceil((edges[k + 1] - edges[k]) / step - 1e-9))))
        return cls.from_counts(edges, counts, jumps)


def _edges(spec: VorticitySpec, P_max: float, split=None):
    if not P_max > 0:
        raise ConfigurationError("P_max must be positive")
    jumps = sorted(float(p) for p in spec.jump_heights)
    for pj in jumps:
        if not (-P_max < pj < 0):
            raise ConfigurationError(f"breakpoint p = {pj} lies outside (-P_max, 0)")
    if jumps and P_max <= -jumps[0] + 1.0:
        raise ConfigurationError("P_max must exceed the deepest breakpoint depth by 1")
    inner = list(jumps)
    if split is not None and not jumps:
        if not (-P_max < split < 0):
            raise ConfigurationError("nominal split must lie inside (-P_max, 0)")
        inner = [float(split)]
    return [-float(P_max)] + inner + [0.0], jumps


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Tensor grid: uniform q on [0, pi] times an interface-aligned p grid.

    Unknowns are ``w`` at every node except the bottom row, ordered p-major:
    ``k = (j - 1) * (nq + 1) + i``.
    """

    nq: int
    pgrid: Grid1D

    @property
    def q(self) -> np.ndarray:
        return np.linspace(0.0, math.pi, self.nq + 1)

    @property
    def dq(self) -> float:
        return math.pi / self.nq

    @property
    def p(self) -> np.ndarray:
        return self.pgrid.p

    @property
    def np_nodes(self) -> int:
        return self.pgrid.size

    @property
    def shape(self) -> tuple:
        """Shape of a full field array indexed [j, i]."""
        return (self.pgrid.size, self.nq + 1)

    @property
    def n_unknowns(self) -> int:
        return (self.nq + 1) * (self.pgrid.size - 1)

    @property
    def interfaces(self) -> tuple:
        return self.pgrid.interfaces

    def index(self, i: int, j: int) -> int:
        if not (0 <= i <= self.nq and 1 <= j < self.pgrid.size):
            raise IndexError((i, j))
        return (j - 1) * (self.nq + 1) + i

    def node(self, k: int) -> tuple:
        j, i = divmod(int(k), self.nq + 1)
        return i, j + 1

    def to_field(self, u) -> np.ndarray:
        """Unknown vector -> full field with the zero bottom row."""
        W = np.zeros(self.shape)
        W[1:, :] = np.asarray(u).reshape(self.pgrid.size - 1, self.nq + 1)
        return W

    def to_vector(self, W) -> np.ndarray:
        return np.ascontiguousarray(np.asarray(W)[1:, :]).ravel()

    @cached_property
    def q_trapezoid(self) -> np.ndarray:
        w = np.full(self.nq + 1, self.dq)
        w[0] = w[-1] = self.dq / 2
        return w


def build_grid(nq: int, np_upper: int, np_lower: int, P_max: float, spec: VorticitySpec,
               split: float = -1.0) -> Grid2D:
    """Interface-aligned tensor grid.

    ``np_upper`` cells span the top region (surface to the shallowest
    breakpoint, or to the nominal ``split`` when gamma has no breakpoint);
    ``np_lower`` cells are shared by the regions below in proportion to
    their lengths.
    """
    if min(nq, np_upper, np_lower) < 8:
        raise ConfigurationError("grid counts must be at least 8")
    if split is not None and not (-P_max < split < 0):
        split = -min(1.0, P_max / 8.0)
    edges, jumps = _edges(spec, P_max, split)
    lower = np.diff(edges[:-1])
    counts = np.maximum(8, np.round(np_lower * lower / lower.sum()).astype(int))
    pgrid = Grid1D.from_counts(edges, list(counts) + [int(np_upper)], jumps)
    return Grid2D(int(nq), pgrid)
