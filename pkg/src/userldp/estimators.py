"""Estimators for general alphabets and the regime dispatcher.

* high privacy (eps <= 1): one coin per Hadamard row, then invert the transform
* large m (m >= k): the same with floor(eps) rows per user at budget 1 each
* small m: block distribution at budget 0.5, then the law of the first
  sample falling in each block, sent with Hadamard Response
* medium m: as small m, but each user reports on several blocks
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import hadamard

from .channels import HadamardResponse, next_pow2
from .coin import CoinConfig, coin_from_counts
from .core import UserBatch, UserData, project_to_simplex, tv_distance

EPS0 = 0.5

HIGH_PRIVACY = "high_privacy"
SMALL_M = "small_m"
MEDIUM_M = "medium_m"
LARGE_M = "large_m"
REGIMES = (HIGH_PRIVACY, SMALL_M, MEDIUM_M, LARGE_M)


@dataclass(frozen=True)
class HadamardSets:
    k: int
    K: int
    H: np.ndarray

    @property
    def masks(self) -> np.ndarray:
        """(K, k) boolean; row i marks T_i."""
        return self.H[:, :self.k] == 1

    def to_sets(self, p) -> np.ndarray:
        """``p_T(i) = p(T_i)`` written as ``(H p + 1) / 2``."""
        q = np.zeros(self.K)
        q[:self.k] = p
        return (self.H @ q + 1.0) / 2.0

    def from_sets(self, p_T) -> np.ndarray:
        q = self.H @ (2.0 * np.asarray(p_T, dtype=float) - 1.0) / self.K
        return q[:self.k]


def hadamard_sets(k: int) -> HadamardSets:
    if k < 2:
        raise ValueError("need k >= 2")
    K = next_pow2(k)
    return HadamardSets(k, K, hadamard(K))


def _round_robin(n: int, n_slots: int, per_user: int) -> list[np.ndarray]:
    """User indices for each slot when user u takes slots u*per_user + j (mod n_slots)."""
    users = np.repeat(np.arange(n), per_user)
    slots = (users * per_user + np.tile(np.arange(per_user), n)) % n_slots
    order = np.argsort(slots, kind="stable")
    bounds = np.searchsorted(slots[order], np.arange(n_slots + 1))
    return [users[order[bounds[i]:bounds[i + 1]]] for i in range(n_slots)]


def _as_batch(users) -> UserBatch:
    if isinstance(users, UserBatch):
        return users
    return UserBatch.from_users(list(users))


def _hadamard_rows(users: UserBatch, per_user: int, budget: float, rng, preset: str,
                   variant: str) -> np.ndarray:
    hs = hadamard_sets(users.k)
    masks = hs.masks
    rows = hs.K - 1  # row 0 is all ones and p(T_0) = 1 is known
    groups = _round_robin(users.n, rows, per_user)
    if min(g.size for g in groups) < 2:
        raise ValueError("too few users for the Hadamard rows")
    cfg = CoinConfig(budget, preset, variant)
    p_T = np.ones(hs.K)
    for r, g in enumerate(groups):
        z = users.subset(g).count_in(masks[r + 1])
        p_T[r + 1] = coin_from_counts(z, users.m, cfg, rng, warn=False).p_hat
    return project_to_simplex(hs.from_sets(p_T))


def estimate_high_privacy(users, epsilon: float, rng: np.random.Generator,
                          preset: str = "experiment", variant: str = "interactive") -> np.ndarray:
    users = _as_batch(users)
    if users.k == 2:
        z = users.count_in(np.array([True, False]))
        p = coin_from_counts(z, users.m, CoinConfig(epsilon, preset, variant), rng, warn=False).p_hat
        return np.array([p, 1.0 - p])
    if users.n < next_pow2(users.k):
        raise ValueError("need at least K users")
    return _hadamard_rows(users, 1, epsilon, rng, preset, variant)


def estimate_large_m(users, epsilon: float, rng: np.random.Generator,
                     preset: str = "experiment", variant: str = "interactive") -> np.ndarray:
    """floor(eps) Hadamard rows per user, each coin run at budget 1.

    When there are fewer rows than parts each user covers every row and the
    ``floor(eps)`` budget is shared evenly among them.
    """
    users = _as_batch(users)
    if epsilon < 1:
        raise ValueError("the large-m estimator needs epsilon >= 1")
    parts = int(math.floor(epsilon))
    rows = next_pow2(users.k) - 1
    per_user = min(parts, rows)
    budget = parts / per_user
    if users.k == 2:
        return estimate_high_privacy(users, budget, rng, preset, variant)
    return _hadamard_rows(users, per_user, budget, rng, preset, variant)


def block_labels(k: int, n_blocks: int) -> np.ndarray:
    """Block index of each symbol; contiguous blocks whose sizes differ by at most one."""
    if not 1 <= n_blocks <= k:
        raise ValueError("need 1 <= number of blocks <= k")
    sizes = np.full(n_blocks, k // n_blocks)
    sizes[:k % n_blocks] += 1
    return np.repeat(np.arange(n_blocks), sizes)


def first_occurrence_reduce(user: UserData, block) -> Optional[int]:
    """First sample of the user's ordered sequence that lies in ``block`` (None for the null symbol)."""
    if user.samples is None:
        raise ValueError("the first-occurrence reduction needs the ordered samples")
    block = set(int(b) for b in np.atleast_1d(block))
    for x in user.samples:
        if int(x) in block:
            return int(x)
    return None


def first_occurrence_law(p, m: int, block) -> np.ndarray:
    """Law of the first occurrence: entries for ``block`` in order, then the null symbol."""
    p = np.asarray(p, dtype=float)
    block = np.atleast_1d(block)
    mass = p[block].sum()
    none = (1.0 - mass) ** m
    cond = p[block] / mass if mass > 0 else np.zeros(block.size)
    return np.append(cond * (1.0 - none), none)


@dataclass
class BlockDiagnostics:
    p_blocks: np.ndarray
    t_hat: list = field(default_factory=list)
    fallbacks: int = 0
    per_block_budget: float = 0.0
    blocks_per_user: int = 1


def _conditional_stage(users: UserBatch, labels: np.ndarray, n_blocks: int, per_user: int,
                       budget: float, rng) -> tuple[list, list]:
    groups = _round_robin(users.n, n_blocks, per_user)
    t_hat, members = [], []
    for j in range(n_blocks):
        block = np.flatnonzero(labels == j)
        members.append(block)
        g = groups[j]
        if g.size == 0:
            raise ValueError("a block received no users")
        pos = users.subset(g).first_in_set(block, rng)
        sym = np.where(pos < 0, block.size, pos)
        ch = HadamardResponse(block.size + 1, budget)
        t_hat.append(ch.decode(ch.encode(sym, rng)))
    return t_hat, members


def recombine(p_blocks, t_hat, members, k: int) -> tuple[np.ndarray, int]:
    """``p(x) = p_B(j) * t(x) / (1 - t(null))`` with a uniform fallback inside the block."""
    out = np.zeros(k)
    fallbacks = 0
    for j, (t, block) in enumerate(zip(t_hat, members)):
        denom = 1.0 - t[-1]
        if denom > 0:
            cond = t[:-1] / denom
        else:
            cond = np.full(block.size, 1.0 / block.size)
            fallbacks += 1
        out[block] = p_blocks[j] * cond
    return out, fallbacks


def _block_estimate(users: UserBatch, n_blocks: int, stage_one, per_user: int, budget: float,
                    rng) -> tuple[np.ndarray, BlockDiagnostics]:
    labels = block_labels(users.k, n_blocks)
    if n_blocks == 1:
        p_blocks = np.ones(1)
    else:
        p_blocks = stage_one(users.merge_symbols(labels, n_blocks))
    t_hat, members = _conditional_stage(users, labels, n_blocks, per_user, budget, rng)
    raw, fallbacks = recombine(p_blocks, t_hat, members, users.k)
    diag = BlockDiagnostics(p_blocks, t_hat, fallbacks, budget, per_user)
    return project_to_simplex(raw), diag


def estimate_small_m(users, epsilon: float, rng: np.random.Generator,
                     preset: str = "experiment", variant: str = "interactive",
                     return_diagnostics: bool = False):
    users = _as_batch(users)
    if users.m > users.k:
        raise ValueError("the small-m estimator needs m <= k")
    if epsilon <= EPS0:
        raise ValueError(f"the small-m estimator needs epsilon > {EPS0}")
    stage_one = lambda b: estimate_high_privacy(b, EPS0, rng, preset, variant)
    p, diag = _block_estimate(users, users.m, stage_one, 1, epsilon - EPS0, rng)
    return (p, diag) if return_diagnostics else p


def medium_parts(k: int, m: int, epsilon: float) -> int:
    """``floor(eps / (2 ln(k/m)))``: how many ln(k/m)-sized budgets fit in eps/2."""
    return int(math.floor(epsilon / (2.0 * math.log(k / m))))


def estimate_medium_m(users, epsilon: float, rng: np.random.Generator,
                      preset: str = "experiment", variant: str = "interactive",
                      return_diagnostics: bool = False):
    users = _as_batch(users)
    k, m = users.k, users.m
    if not m < k:
        raise ValueError("the medium-m estimator needs m < k")
    t = medium_parts(k, m, epsilon)
    if t == 0:
        return estimate_small_m(users, epsilon, rng, preset, variant, return_diagnostics)
    per_user = min(m, t)
    half = epsilon / 2

    def stage_one(b):
        if half >= 1:
            return estimate_large_m(b, half, rng, preset, variant)
        return estimate_high_privacy(b, half, rng, preset, variant)

    p, diag = _block_estimate(users, m, stage_one, per_user, half / per_user, rng)
    return (p, diag) if return_diagnostics else p


def choose_regime(k: int, m: int, epsilon: float) -> str:
    if epsilon <= 1:
        return HIGH_PRIVACY
    if m >= k:
        return LARGE_M
    if m <= k / math.exp(epsilon / 2):
        return SMALL_M
    return MEDIUM_M


@dataclass
class EstimateReport:
    algo: str
    regime: str
    k: int
    m: int
    n: int
    epsilon: float
    p_hat: np.ndarray
    tv_error: Optional[float] = None
    seed: Optional[int] = None
    runtime_ms: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"algo": self.algo, "regime": self.regime, "k": self.k, "m": self.m, "n": self.n,
                "epsilon": self.epsilon, "seed": self.seed, "tv_error": self.tv_error,
                "runtime_ms": self.runtime_ms, "p_hat": [float(v) for v in self.p_hat],
                "diagnostics": self.diagnostics}


def run_regime(regime: str, users, epsilon: float, rng, preset: str = "experiment",
               variant: str = "interactive") -> tuple[np.ndarray, dict]:
    """Run one named estimator; returns the estimate and a diagnostics dict."""
    users = _as_batch(users)
    if regime == HIGH_PRIVACY:
        return estimate_high_privacy(users, epsilon, rng, preset, variant), {}
    if regime == LARGE_M:
        return estimate_large_m(users, epsilon, rng, preset, variant), {}
    if regime in (SMALL_M, MEDIUM_M):
        fn = estimate_small_m if regime == SMALL_M else estimate_medium_m
        p, d = fn(users, epsilon, rng, preset, variant, return_diagnostics=True)
        return p, {"fallbacks": d.fallbacks, "blocks_per_user": d.blocks_per_user,
                   "per_block_budget": d.per_block_budget}
    raise ValueError(f"unknown regime {regime!r}")


def estimate(users, epsilon: float, rng: np.random.Generator, truth=None,
             preset: str = "experiment", variant: str = "interactive",
             seed: Optional[int] = None) -> EstimateReport:
    """Pick the estimator for (k, m, eps) and run it."""
    users = _as_batch(users)
    regime = choose_regime(users.k, users.m, epsilon)
    t0 = time.perf_counter()
    p, diag = run_regime(regime, users, epsilon, rng, preset, variant)
    ms = (time.perf_counter() - t0) * 1e3
    tv = tv_distance(p, truth) if truth is not None else None
    return EstimateReport("auto", regime, users.k, users.m, users.n, epsilon, p, tv, seed, ms, diag)
