"""Probability primitives shared by the estimators.

Users are held in a :class:`UserBatch`, which stores either one histogram per
user (cheap when ``k <= m``) or the raw ordered samples (cheap when ``m < k``).
Everything downstream asks the batch for per-user reductions, so the storage
choice never leaks into the protocols.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

SIMPLEX_TOL = 1e-12


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for ``(seed, stream...)``.

    Distinct stream tuples give statistically independent generators, so
    parallel callers can share a seed without sharing a stream.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(s) for s in stream))
    return np.random.default_rng(ss)


def as_distribution(p, tol: float = SIMPLEX_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValueError("a distribution needs at least two symbols")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError("probabilities must be finite and nonnegative")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    return p


def uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


@dataclass(frozen=True)
class UserData:
    """One user's samples as a histogram (and optionally the ordered sequence)."""

    counts: np.ndarray
    m: int
    samples: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.m <= 0 or int(self.counts.sum()) != self.m or np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative and sum to m")

    @property
    def k(self) -> int:
        return self.counts.size


def sample_user_data(p, m: int, rng: np.random.Generator, keep_order: bool = False) -> UserData:
    if m <= 0:
        raise ValueError("m must be a positive integer")
    p = as_distribution(p)
    if keep_order:
        seq = rng.choice(p.size, size=m, p=p)
        return UserData(np.bincount(seq, minlength=p.size), m, seq)
    return UserData(rng.multinomial(m, p), m)


class UserBatch:
    """``n`` users with ``m`` i.i.d. samples each over an alphabet of size ``k``.

    Exactly one of ``counts`` (n, k) or ``samples`` (n, m) is stored.
    """

    def __init__(self, k: int, m: int, counts: Optional[np.ndarray] = None,
                 samples: Optional[np.ndarray] = None):
        if (counts is None) == (samples is None):
            raise ValueError("provide exactly one of counts or samples")
        self.k = int(k)
        self.m = int(m)
        self.counts = counts
        self.samples = samples
        if counts is not None and counts.shape[1] != self.k:
            raise ValueError("counts must have k columns")
        if samples is not None and samples.shape[1] != self.m:
            raise ValueError("samples must have m columns")

    @property
    def n(self) -> int:
        arr = self.counts if self.counts is not None else self.samples
        return arr.shape[0]

    def __len__(self) -> int:
        return self.n

    @classmethod
    def from_users(cls, users: Sequence[UserData]) -> "UserBatch":
        if not users:
            raise ValueError("no users")
        ms = {u.m for u in users}
        if len(ms) != 1:
            raise ValueError("all users must hold the same number of samples")
        if all(u.samples is not None for u in users):
            return cls(users[0].k, ms.pop(), samples=np.stack([u.samples for u in users]))
        return cls(users[0].k, ms.pop(), counts=np.stack([u.counts for u in users]))

    def subset(self, idx) -> "UserBatch":
        if self.counts is not None:
            return UserBatch(self.k, self.m, counts=self.counts[idx])
        return UserBatch(self.k, self.m, samples=self.samples[idx])

    def user(self, i: int) -> UserData:
        if self.counts is not None:
            return UserData(np.asarray(self.counts[i], dtype=np.int64), self.m)
        seq = np.asarray(self.samples[i], dtype=np.int64)
        return UserData(np.bincount(seq, minlength=self.k), self.m, seq)

    def histograms(self) -> np.ndarray:
        if self.counts is not None:
            return self.counts
        n = self.n
        flat = (np.arange(n)[:, None] * self.k + self.samples).ravel()
        return np.bincount(flat, minlength=n * self.k).reshape(n, self.k)

    def total_counts(self) -> np.ndarray:
        """Symbol counts pooled over every sample of every user."""
        if self.counts is not None:
            return self.counts.sum(axis=0, dtype=np.int64)
        return np.bincount(self.samples.ravel(), minlength=self.k)

    def first_samples(self, rng: np.random.Generator) -> np.ndarray:
        """Each user's first sample.

        Samples are exchangeable, so with histogram storage the first sample is
        drawn from the user's empirical histogram.
        """
        if self.samples is not None:
            return np.asarray(self.samples[:, 0], dtype=np.int64)
        return _draw_from_rows(self.counts, rng)

    def count_in(self, mask: np.ndarray) -> np.ndarray:
        """Per-user number of samples falling in the symbol set ``mask``."""
        mask = np.asarray(mask, dtype=bool)
        if self.counts is not None:
            return self.counts[:, mask].sum(axis=1, dtype=np.int64)
        return mask[self.samples].sum(axis=1, dtype=np.int64)

    def merge_symbols(self, labels: np.ndarray, n_labels: int) -> "UserBatch":
        """Relabel symbols through ``labels`` (e.g. symbol -> block index)."""
        labels = np.asarray(labels)
        if self.samples is not None:
            return UserBatch(n_labels, self.m, samples=labels[self.samples])
        out = np.zeros((self.n, n_labels), dtype=self.counts.dtype)
        for j in range(n_labels):
            out[:, j] = self.counts[:, labels == j].sum(axis=1)
        return UserBatch(n_labels, self.m, counts=out)

    def first_in_set(self, members: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Position within ``members`` of each user's first sample in that set, or -1.

        With histogram storage the first occurrence is drawn proportionally to
        the user's counts inside the set, which is its exact conditional law.
        """
        members = np.asarray(members)
        pos = np.full(self.k, -1, dtype=np.int64)
        pos[members] = np.arange(members.size)
        if self.samples is not None:
            local = pos[self.samples]
            hit = local >= 0
            first = hit.argmax(axis=1)
            out = local[np.arange(self.n), first]
            out[~hit.any(axis=1)] = -1
            return out
        sub = self.counts[:, members]
        out = np.full(self.n, -1, dtype=np.int64)
        has = sub.sum(axis=1) > 0
        if np.any(has):
            out[has] = _draw_from_rows(sub[has], rng)
        return out


def _draw_from_rows(counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One index per row, chosen with probability proportional to the row's counts."""
    cum = np.cumsum(counts, axis=1, dtype=np.int64)
    total = cum[:, -1]
    u = rng.integers(0, total)
    return (cum <= u[:, None]).sum(axis=1)


def sample_users(p, m: int, n: int, rng: np.random.Generator,
                 storage: str = "auto", chunk: int = 50_000) -> UserBatch:
    """Draw ``n`` users with ``m`` samples each from ``p``."""
    if m <= 0 or n <= 0:
        raise ValueError("m and n must be positive")
    p = as_distribution(p)
    k = p.size
    if storage == "auto":
        storage = "counts" if k <= m else "samples"
    dtype = np.int16 if max(k, m) < 2**15 else np.int32
    if storage == "counts":
        out = np.empty((n, k), dtype=dtype)
        for lo in range(0, n, chunk):
            hi = min(n, lo + chunk)
            out[lo:hi] = rng.multinomial(m, p, size=hi - lo)
        return UserBatch(k, m, counts=out)
    if storage == "samples":
        cdf = np.cumsum(p)
        cdf[-1] = 1.0
        out = np.empty((n, m), dtype=dtype)
        for lo in range(0, n, chunk):
            hi = min(n, lo + chunk)
            u = rng.random((hi - lo, m))
            out[lo:hi] = np.searchsorted(cdf, u, side="right")
        return UserBatch(k, m, samples=out)
    raise ValueError(f"unknown storage {storage!r}")


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions must share an alphabet")
    return 0.5 * float(np.abs(p - q).sum())


def binomial_threshold(m: int, t: float) -> int:
    """Smallest integer z with z/m > t (may be m + 1 when none exists)."""
    if t < 0:
        return 0
    z = int(np.floor(m * t))
    while z > 0 and (z - 1) / m > t:
        z -= 1
    while z <= m and not (z / m > t):
        z += 1
    return z


def binomial_tail(m: int, p: float, t: float) -> float:
    """``Pr[Z/m > t]`` for ``Z ~ Binomial(m, p)``."""
    z = binomial_threshold(m, t)
    if z > m:
        return 0.0
    if z <= 0:
        return 1.0
    return float(stats.binom.sf(z - 1, m, p))


def binomial_pmf(m: int, p: float) -> np.ndarray:
    return stats.binom.pmf(np.arange(m + 1), m, p)


def project_to_simplex(v) -> np.ndarray:
    """Clip negatives and renormalize; uniform if nothing positive remains."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    if np.all(v >= 0) and abs(v.sum() - 1.0) <= SIMPLEX_TOL:
        return v.copy()
    w = np.clip(v, 0.0, None)
    s = w.sum()
    if s <= 0:
        return np.full(v.size, 1.0 / v.size)
    return w / s
