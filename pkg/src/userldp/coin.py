"""Two-stage estimator for a coin observed ``m`` times per user.

Stage one localizes ``p`` to a few cells of the quadratic partition using a
privatized one-hot report of each user's cell.  Stage two inverts a binomial
probability that has a steep slope on the localized interval.  ``z`` arrays
below hold each user's count of heads (the first symbol).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channels import FlipChannel, OneHotFlip, debias, flipped_bit_sum, onehot_column_sums
from .core import UserBatch, binomial_tail
from .partitions import (PRESETS, CaseTag, IntervalPartition, RefinementGrid, build_partition,
                         invert_monotone, locate, select_case)

REGULARITY_C = 50.0

INTERACTIVE = "interactive"
NONINTERACTIVE = "noninteractive"


@dataclass(frozen=True)
class CoinConfig:
    epsilon: float
    preset: str = "experiment"
    variant: str = INTERACTIVE
    case_policy: Optional[str] = None  # default: strict for theory, nearest for experiment

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.preset not in PRESETS:
            raise ValueError(f"unknown constants preset {self.preset!r}")
        if self.variant not in (INTERACTIVE, NONINTERACTIVE):
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def c_i(self) -> float:
        return PRESETS[self.preset][0]

    @property
    def c_r(self) -> float:
        return PRESETS[self.preset][1]

    @property
    def policy(self) -> str:
        if self.case_policy is not None:
            return self.case_policy
        return "strict" if self.preset == "theory" else "nearest"

    @property
    def uses_small_group(self) -> bool:
        # the experiment preset splits users in thirds and has no R4 group
        return self.preset == "theory"


@dataclass(frozen=True)
class LocalizationResult:
    i_hat: int
    I_hat: tuple[float, float]
    degenerate: bool = False


@dataclass
class CoinResult:
    p_hat: float
    localization: LocalizationResult
    case: Optional[CaseTag] = None
    threshold: Optional[float] = None
    groups: tuple = field(default_factory=tuple)


def group_sizes(n: int, cfg: CoinConfig) -> tuple[int, ...]:
    """Sizes of S1, S2, ... ; the remainder of the division goes to S1."""
    if cfg.variant == INTERACTIVE:
        if n < 2:
            raise ValueError("the interactive variant needs at least 2 users")
        rest = (n // 2,)
    elif cfg.uses_small_group:
        if n < 6:
            raise ValueError("the non-interactive variant needs at least 6 users")
        rest = (n // 6,) * 3
    else:
        if n < 3:
            raise ValueError("the non-interactive variant needs at least 3 users")
        rest = (n // 3,) * 2
    return (n - sum(rest),) + rest


def argmax_cell(column_sums) -> int:
    """1-based index of the largest column sum; ties go to the smallest index."""
    return int(np.argmax(np.asarray(column_sums))) + 1


def neighbourhood(partition: IntervalPartition, i_hat: int) -> tuple[float, float]:
    lo = max(i_hat - 2, 0)
    hi = min(i_hat + 1, partition.n_cells)
    return float(partition.edges[lo]), float(partition.edges[hi])


def localize(z, m: int, partition: IntervalPartition, epsilon: float,
             rng: np.random.Generator) -> LocalizationResult:
    z = np.asarray(z)
    if z.size == 0:
        raise ValueError("localization needs at least one user")
    if partition.degenerate:
        return LocalizationResult(1, (0.0, 1.0), degenerate=True)
    d = partition.n_cells
    cells = locate(partition, z / m)
    sums = onehot_column_sums(np.atleast_1d(cells), d, OneHotFlip(d, epsilon), rng)
    i_hat = argmax_cell(sums)
    return LocalizationResult(i_hat, neighbourhood(partition, i_hat))


def interactive_threshold(partition: IntervalPartition, loc: LocalizationResult) -> float:
    """Threshold broadcast in round two; 0 turns the tail into ``Pr[Z >= 1]``."""
    if loc.degenerate:
        return 0.0
    return partition.midpoint(loc.i_hat)


def invert_tail(y: float, m: int, t: float, interval: tuple[float, float]) -> float:
    return invert_monotone(lambda p: binomial_tail(m, p, t), interval, y)


def refine_interactive(loc: LocalizationResult, t: float, z, m: int, epsilon: float,
                       rng: np.random.Generator) -> float:
    z = np.asarray(z)
    if z.size == 0:
        raise ValueError("refinement needs at least one user")
    ch = FlipChannel(epsilon)
    mean = flipped_bit_sum(z / m > t, ch, rng) / z.size
    return invert_tail(float(debias(mean, ch)), m, t, loc.I_hat)


def noninteractive_bits(z, m: int, grid: RefinementGrid, tag: CaseTag) -> np.ndarray:
    """Pre-flip bit each user of a refinement group would send."""
    z = np.asarray(z)
    if tag is CaseTag.ON_BOUNDARY:
        return grid.in_even_L(z)
    if tag is CaseTag.ON_MIDPOINT:
        return grid.in_even_J(z)
    return z >= 1


def noninteractive_means(groups: dict, m: int, grid: RefinementGrid, epsilon: float,
                         rng: np.random.Generator) -> dict:
    """Debiased group means, computed before any localization result exists."""
    ch = FlipChannel(epsilon)
    out = {}
    for tag, z in groups.items():
        z = np.asarray(z)
        if z.size == 0:
            raise ValueError("empty refinement group")
        mean = flipped_bit_sum(noninteractive_bits(z, m, grid, tag), ch, rng) / z.size
        out[tag] = float(debias(mean, ch))
    return out


def refine_noninteractive(loc: LocalizationResult, means: dict, grid: RefinementGrid,
                          policy: str = "strict", center: Optional[float] = None):
    """Pick the refinement function for ``loc`` and invert its group mean.

    Returns ``(p_hat, case)``.
    """
    case = select_case(loc.I_hat, grid, allow_small=CaseTag.SMALL in means,
                       policy=policy, center=center)
    f = grid.function(case.tag)
    return invert_monotone(f, case.interval, means[case.tag]), case


def coin_from_counts(z, m: int, cfg: CoinConfig, rng: np.random.Generator,
                     warn: bool = True) -> CoinResult:
    """Run the full protocol on per-user head counts ``z``."""
    z = np.asarray(z)
    n = z.size
    sizes = group_sizes(n, cfg)
    if warn and sizes[0] < REGULARITY_C * math.log(max(m, 2)) / cfg.epsilon**2:
        warnings.warn("fewer localization users than the regularity condition asks for",
                      RuntimeWarning, stacklevel=2)
    cuts = np.cumsum(sizes)[:-1]
    parts = np.split(z, cuts)
    I_part = build_partition(m, cfg.c_i, "I")
    loc = localize(parts[0], m, I_part, cfg.epsilon, rng)
    if cfg.variant == INTERACTIVE:
        t = interactive_threshold(I_part, loc)
        p = refine_interactive(loc, t, parts[1], m, cfg.epsilon, rng)
        return CoinResult(float(np.clip(p, 0, 1)), loc, threshold=t, groups=sizes)
    grid = RefinementGrid(m, cfg.c_r)
    tags = [CaseTag.ON_BOUNDARY, CaseTag.ON_MIDPOINT, CaseTag.SMALL][:len(parts) - 1]
    means = noninteractive_means(dict(zip(tags, parts[1:])), m, grid, cfg.epsilon, rng)
    center = None if loc.degenerate else I_part.midpoint(loc.i_hat)
    p, case = refine_noninteractive(loc, means, grid, cfg.policy, center)
    return CoinResult(float(np.clip(p, 0, 1)), loc, case=case.tag, groups=sizes)


def estimate_coin(users, cfg: CoinConfig, rng: np.random.Generator) -> float:
    """Estimate the probability of the first symbol from binary users."""
    if not isinstance(users, UserBatch):
        users = UserBatch.from_users(list(users))
    if users.k != 2:
        raise ValueError("the coin estimator needs a binary alphabet")
    z = users.count_in(np.array([True, False]))
    return coin_from_counts(z, users.m, cfg, rng).p_hat
