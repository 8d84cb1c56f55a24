"""Brute-force checks of closed-form quantities on tiny instances.

The perturbed-uniform family pairs symbols (2i-1, 2i) and tilts each pair by
``+-gamma`` according to a sign vector ``z``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

ENUMERATION_BUDGET = 2_000_000


class EnumerationBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class PaninskiInstance:
    k: int
    gamma: float
    z: tuple

    def __post_init__(self):
        if self.k % 2:
            raise ValueError("k must be even")
        if len(self.z) != self.k // 2 or any(s not in (-1, 1) for s in self.z):
            raise ValueError("z must hold k/2 signs")
        if not 0 <= self.gamma < 0.5:
            raise ValueError("gamma must lie in [0, 1/2)")


def paninski_dist(inst: PaninskiInstance) -> np.ndarray:
    z = np.asarray(inst.z, dtype=float)
    p = np.empty(inst.k)
    p[0::2] = (1 + inst.gamma * z) / inst.k
    p[1::2] = (1 - inst.gamma * z) / inst.k
    return p


def gamma_limit(k: int, m: int) -> float:
    return min(0.5, math.sqrt(k / (8 * m + k)))


def alpha_closed_form(k: int, m: int, gamma: float) -> float:
    return (1 + 8 * gamma**2 / (k * (1 - gamma**2))) ** m - 1


def histograms(k: int, m: int, budget: int = ENUMERATION_BUDGET) -> np.ndarray:
    """Every vector of k nonnegative integers summing to m (stars and bars)."""
    count = math.comb(m + k - 1, k - 1)
    if count > budget:
        raise EnumerationBudgetExceeded(f"{count} histograms exceed the budget of {budget}")
    out = np.empty((count, k), dtype=np.int64)
    for row, bars in enumerate(itertools.combinations(range(m + k - 1), k - 1)):
        edges = (-1,) + bars + (m + k - 1,)
        out[row] = np.diff(edges) - 1
    return out


def multinomial_logpmf(h: np.ndarray, p: np.ndarray) -> np.ndarray:
    m = h.sum(axis=1)
    with np.errstate(divide="ignore"):
        logp = np.log(p)
    terms = np.where(h > 0, h * logp, 0.0)
    return gammaln(m + 1) - gammaln(h + 1).sum(axis=1) + terms.sum(axis=1)


def _pair_laws(k, m, gamma, z, i):
    z = tuple(z)
    flipped = list(z)
    flipped[i] = -flipped[i]
    h = histograms(k, m)
    lp = multinomial_logpmf(h, paninski_dist(PaninskiInstance(k, gamma, z)))
    lq = multinomial_logpmf(h, paninski_dist(PaninskiInstance(k, gamma, tuple(flipped))))
    return np.exp(lp), np.exp(lq - lp)


def alpha_brute_force(k: int, m: int, gamma: float, z, i: int) -> float:
    """``E_z[(dP_{z with sign i flipped} / dP_z - 1)^2]`` summed over all histograms."""
    w, ratio = _pair_laws(k, m, gamma, z, i)
    return float(np.sum(w * (ratio - 1.0) ** 2))


def likelihood_ratio_mean(k: int, m: int, gamma: float, z, i: int) -> float:
    w, ratio = _pair_laws(k, m, gamma, z, i)
    return float(np.sum(w * ratio))


def sign_vectors(k: int):
    return list(itertools.product((-1, 1), repeat=k // 2))


def sequences(k: int, m: int, budget: int = ENUMERATION_BUDGET) -> np.ndarray:
    """All ordered sample sequences in [k]^m, one per row."""
    if k**m > budget:
        raise EnumerationBudgetExceeded(f"{k**m} sequences exceed the budget of {budget}")
    return np.array(list(itertools.product(range(k), repeat=m)), dtype=np.int64).reshape(-1, m)


def first_occurrence_enumerated(p, m: int, block) -> np.ndarray:
    """Law of the first sample in ``block`` (null last) by summing over all sequences."""
    p = np.asarray(p, dtype=float)
    block = list(np.atleast_1d(block))
    seqs = sequences(p.size, m)
    prob = np.prod(p[seqs], axis=1)
    out = np.zeros(len(block) + 1)
    where = {int(b): j for j, b in enumerate(block)}
    for seq, w in zip(seqs, prob):
        hit = next((where[int(x)] for x in seq if int(x) in where), len(block))
        out[hit] += w
    return out


def run_oracle_grid(ks=(2, 4), ms=(1, 2, 3), gammas=(0.05, 0.1), tol: float = 1e-10) -> list[dict]:
    """Closed form vs brute force over every (k, m, gamma, z, i) on the grid."""
    rows = []
    for k in ks:
        for m in ms:
            for g in gammas:
                closed = alpha_closed_form(k, m, g)
                for z in sign_vectors(k):
                    for i in range(k // 2):
                        brute = alpha_brute_force(k, m, g, z, i)
                        mean = likelihood_ratio_mean(k, m, g, z, i)
                        rows.append({"k": k, "m": m, "gamma": g, "z": z, "i": i,
                                     "closed": closed, "brute": brute, "lr_mean": mean,
                                     "ok": abs(brute - closed) <= tol and abs(mean - 1) <= tol})
    return rows
