"""Privacy amplification by shuffling and the matching local-budget search."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimators import choose_regime


class InfeasibleBudget(ValueError):
    """No positive local budget meets the requested central target."""


def local_cap(n: int, delta: float) -> float:
    """Largest local budget for which the amplification bound applies."""
    return math.log(n / (16.0 * math.log(1.0 / delta)))


def amplified_epsilon(epsilon_local: float, n: int, delta: float) -> float:
    """Central epsilon after shuffling ``n`` messages of an ``epsilon_local``-LDP randomizer."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if n <= 0:
        raise ValueError("n must be positive")
    if epsilon_local < 0:
        raise ValueError("epsilon_local must be nonnegative")
    cap = local_cap(n, delta)
    if epsilon_local > cap + 1e-12:
        raise ValueError(f"epsilon_local={epsilon_local} exceeds the validity cap {cap:.6g}")
    e = math.exp(epsilon_local)
    inner = 8.0 * math.sqrt(e * math.log(4.0 / delta)) / math.sqrt(n) + 8.0 * e / n
    return math.log1p(math.tanh(epsilon_local / 2.0) * inner)


@dataclass(frozen=True)
class LocalBudget:
    epsilon_local: float
    amplified: float
    branch: str  # "small", "large" or "cap": which closed form seeded the search
    regime: str  # estimator the dispatcher would run at epsilon_local


def seed_guess(epsilon_target: float, delta: float, n: int, k: int, m: int) -> tuple[float, str]:
    if epsilon_target < math.sqrt(9 * math.e * math.log(4 / delta) / n):
        return epsilon_target * math.sqrt(n / (9 * math.e * math.log(4 / delta))), "small"
    if epsilon_target < math.sqrt(k * math.log(1 / delta) ** 2 / (m * n)):
        return 0.5 * math.log(n * epsilon_target**2 / math.log(1 / delta)), "large"
    return math.inf, "cap"


def choose_local_budget(epsilon_target: float, delta: float, n: int, k: int, m: int,
                        iters: int = 200) -> LocalBudget:
    """Local budget whose shuffled release is ``epsilon_target``-DP (with the given delta).

    The closed forms only seed the search; the returned value always satisfies
    ``amplified_epsilon(value, n, delta) <= epsilon_target``.
    """
    if epsilon_target <= 0:
        raise InfeasibleBudget("target must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    cap = local_cap(n, delta)
    if cap <= 0:
        raise InfeasibleBudget(f"n={n} is too small for delta={delta}")
    guess, branch = seed_guess(epsilon_target, delta, n, k, m)
    if not guess > 0:
        guess = cap
    guess = min(guess, cap)
    if amplified_epsilon(guess, n, delta) > epsilon_target:
        lo, hi = 0.0, guess
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if amplified_epsilon(mid, n, delta) <= epsilon_target:
                lo = mid
            else:
                hi = mid
        guess = lo
    if not guess > 0:
        raise InfeasibleBudget("no positive local budget meets the target")
    return LocalBudget(guess, amplified_epsilon(guess, n, delta), branch,
                       choose_regime(k, m, guess))


def shuffle_messages(messages, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random permutation of the message multiset."""
    return rng.permutation(np.asarray(messages))
