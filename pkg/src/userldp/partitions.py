"""Interval partitions of [0, 1] and the refinement functions built on them.

Cell edges grow quadratically away from 0 and 1 so that a cell around ``p``
is about ``sqrt(p / m)`` wide, i.e. comparable to the spread of ``Z / m`` for
``Z ~ Binomial(m, p)``.  Cells are numbered from 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .core import binomial_pmf

# Constant presets: (C_I, C_R).
PRESETS = {
    "theory": (10.0, 100.0 * 10.0**2),
    "experiment": (0.6, 2.1),
}

SMALL_CASE_FACTOR = 65.0
CASE_HALF_WIDTH = 0.55


class ProtocolFailure(RuntimeError):
    """No refinement case applies to the localized interval."""


@dataclass(frozen=True)
class IntervalPartition:
    constant: float
    m: int
    r: int
    l: np.ndarray  # l_0 .. l_r straight from the quadratic formula
    edges: np.ndarray  # cell edges, mirror-symmetric ([0, 1] when degenerate)
    kind: str = "I"

    @property
    def degenerate(self) -> bool:
        return self.r == 0

    @property
    def n_cells(self) -> int:
        return self.edges.size - 1

    def cell(self, i: int) -> tuple[float, float]:
        return float(self.edges[i - 1]), float(self.edges[i])

    def midpoint(self, i: int) -> float:
        a, b = self.cell(i)
        return 0.5 * (a + b)


def build_partition(m: int, constant: float, kind: str = "I") -> IntervalPartition:
    """Quadratic partition with ``r = floor(sqrt(m / (2 constant)))`` cells per half.

    The edges are ``l_0..l_r`` and their mirror images.  When ``l_r < 1/2``
    the gap ``[l_r, 1 - l_r]`` becomes one central cell, so there are
    ``2r + 1`` cells; when ``l_r = 1/2`` there are ``2r``.
    """
    if constant <= 0 or m <= 0:
        raise ValueError("constant and m must be positive")
    r = int(np.floor(np.sqrt(m / (2.0 * constant))))
    i = np.arange(r + 1)
    l = np.minimum(constant * i**2 / m, 0.5)
    if r == 0:
        edges = np.array([0.0, 1.0])
    else:
        edges = np.unique(np.concatenate([l, 1.0 - l[::-1]]))
    return IntervalPartition(constant, m, r, l, edges, kind)


def locate(partition: IntervalPartition, x):
    """1-based cell index of ``x``; a point on an edge goes to the lower cell."""
    idx = np.searchsorted(partition.edges, x, side="left")
    idx = np.clip(idx, 1, partition.n_cells)
    return int(idx) if np.ndim(idx) == 0 else idx


def midpoint_edges(partition: IntervalPartition) -> np.ndarray:
    """Edges of the partition whose interior edges are the cell midpoints."""
    mids = 0.5 * (partition.edges[:-1] + partition.edges[1:])
    return np.concatenate([[0.0], mids, [1.0]])


class CaseTag(Enum):
    SMALL = "small"  # invert R4
    ON_BOUNDARY = "on_boundary"  # invert R2
    ON_MIDPOINT = "on_midpoint"  # invert R3


@dataclass(frozen=True)
class RefinementCase:
    tag: CaseTag
    index: int
    interval: tuple[float, float]


class RefinementGrid:
    """The L and J partitions for one ``m`` plus the functions R2, R3, R4.

    R2 is the probability that ``Z/m`` lands in an even L cell and R3 the
    same for J cells; both are exact sums of the binomial pmf.
    """

    def __init__(self, m: int, c_r: float):
        self.m = int(m)
        self.c_r = float(c_r)
        self.L = build_partition(m, c_r, kind="L")
        self.j_edges = midpoint_edges(self.L)
        z = np.arange(self.m + 1) / self.m
        self.even_L = locate(self.L, z) % 2 == 0
        self.even_J = self._locate_j(z) % 2 == 0

    def _locate_j(self, x):
        idx = np.searchsorted(self.j_edges, x, side="left")
        return np.clip(idx, 1, self.j_edges.size - 1)

    # user-side indicators
    def in_even_L(self, z) -> np.ndarray:
        return self.even_L[np.asarray(z)]

    def in_even_J(self, z) -> np.ndarray:
        return self.even_J[np.asarray(z)]

    def r2(self, p: float) -> float:
        return float(binomial_pmf(self.m, p)[self.even_L].sum())

    def r3(self, p: float) -> float:
        return float(binomial_pmf(self.m, p)[self.even_J].sum())

    def r4(self, p: float) -> float:
        return r4(self.m, p)

    def function(self, tag: CaseTag) -> Callable[[float], float]:
        return {CaseTag.SMALL: self.r4, CaseTag.ON_BOUNDARY: self.r2,
                CaseTag.ON_MIDPOINT: self.r3}[tag]

    # case bookkeeping
    def boundary_cases(self):
        """(index, anchor, containment interval) for every interior L edge."""
        n = self.L.n_cells
        out = []
        for i in range(1, n):
            w = CASE_HALF_WIDTH * self.c_r * min(i, n - i) / self.m
            a = float(self.L.edges[i])
            out.append((i, a, (max(0.0, a - w), min(1.0, a + w))))
        return out

    def midpoint_cases(self):
        """(index, anchor, containment interval) for every J midpoint."""
        n = self.L.n_cells
        out = []
        for i in range(1, n + 1):
            w = CASE_HALF_WIDTH * self.c_r * min(i, n + 1 - i) / self.m
            a = float(self.j_edges[i])
            out.append((i, a, (max(0.0, a - w), min(1.0, a + w))))
        return out

    def small_limit(self) -> float:
        return min(1.0, SMALL_CASE_FACTOR * self.c_r / self.m)


def r4(m: int, p: float) -> float:
    """``Pr[Z >= 1]`` for ``Z ~ Binomial(m, p)``."""
    return float(-np.expm1(m * np.log1p(-p))) if p < 1 else 1.0


def select_case(I_hat: tuple[float, float], grid: RefinementGrid, *,
                allow_small: bool = True, policy: str = "strict",
                center: Optional[float] = None) -> RefinementCase:
    """Pick which refinement function to invert and over which interval.

    ``strict`` follows the containment tests in their listed order (small,
    on-boundary, on-midpoint) and raises :class:`ProtocolFailure` if none
    holds.  ``nearest`` falls back, when no containment holds, to the L edge
    or J midpoint closest to ``center``.  Under ``nearest`` every R2/R3 search
    interval is trimmed to the stretch around its anchor where the function is
    monotone (the containment intervals included), since the experiment
    constants do not guarantee monotonicity on the full interval.
    """
    a, b = I_hat
    eps = 1e-12
    if allow_small and b <= grid.small_limit() + eps:
        return RefinementCase(CaseTag.SMALL, 0, (0.0, grid.small_limit()))
    if policy not in ("strict", "nearest"):
        raise ValueError(f"unknown case policy {policy!r}")
    for tag, cases in ((CaseTag.ON_BOUNDARY, grid.boundary_cases()),
                       (CaseTag.ON_MIDPOINT, grid.midpoint_cases())):
        for i, anchor, (lo, hi) in cases:
            if lo - eps <= a and b <= hi + eps:
                if policy == "nearest":
                    lo, hi = monotone_stretch(grid.function(tag), anchor, lo, hi)
                return RefinementCase(tag, i, (lo, hi))
    if policy == "strict":
        raise ProtocolFailure(f"no refinement case contains [{a:.6g}, {b:.6g}]")
    c = 0.5 * (a + b) if center is None else center
    anchors = [(x, CaseTag.ON_BOUNDARY, i) for i, x, _ in grid.boundary_cases()]
    anchors += [(x, CaseTag.ON_MIDPOINT, i) for i, x, _ in grid.midpoint_cases()]
    anchors.sort()
    pos = min(range(len(anchors)), key=lambda j: (abs(anchors[j][0] - c), j))
    lo = anchors[pos - 1][0] if pos > 0 else 0.0
    hi = anchors[pos + 1][0] if pos + 1 < len(anchors) else 1.0
    x, tag, i = anchors[pos]
    return RefinementCase(tag, i, monotone_stretch(grid.function(tag), x, lo, hi))


def monotone_stretch(f: Callable[[float], float], anchor: float, lo: float, hi: float,
                     points: int = 200) -> tuple[float, float]:
    """Largest grid interval around ``anchor`` inside [lo, hi] on which ``f`` is monotone.

    The direction is the one ``f`` has at the anchor; the stretch stops at the
    last grid point before the first change of direction on either side.
    """
    xs = np.union1d(np.linspace(lo, hi, points), [anchor])
    v = np.array([f(x) for x in xs])
    k = int(np.searchsorted(xs, anchor))
    d = np.diff(v)
    around = d[max(k - 1, 0):k + 1]
    sign = np.sign(around.sum()) or 1.0
    right = k
    while right < d.size and d[right] * sign > 0:
        right += 1
    left = k
    while left > 0 and d[left - 1] * sign > 0:
        left -= 1
    if right == left:
        return float(lo), float(hi)
    return float(xs[left]), float(xs[right])


def invert_monotone(f: Callable[[float], float], interval: tuple[float, float], y: float,
                    tol: float = 1e-10, max_iter: int = 200, check_points: int = 3) -> float:
    """Solve ``f(p) = y`` on ``interval`` by bisection, clamping ``y`` to f's range."""
    a, b = float(interval[0]), float(interval[1])
    if b < a:
        raise ValueError("empty interval")
    fa, fb = f(a), f(b)
    lo_f, hi_f = min(fa, fb), max(fa, fb)
    if check_points and b > a:
        xs = np.linspace(a, b, check_points + 2)[1:-1]
        vals = [f(x) for x in xs]
        seq = [fa, *vals, fb] if fb >= fa else [fb, *vals[::-1], fa]
        slack = 1e-9 + 1e-6 * (hi_f - lo_f)
        if any(v2 < v1 - slack for v1, v2 in zip(seq, seq[1:])):
            raise ValueError("function is not monotone on the interval")
    if y <= lo_f:
        return a if fa <= fb else b
    if y >= hi_f:
        return b if fa <= fb else a
    increasing = fb >= fa
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if abs(fm - y) <= tol * 1e-3 or mid in (a, b):
            return mid
        if (fm < y) == increasing:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)
