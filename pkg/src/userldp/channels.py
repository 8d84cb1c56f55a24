"""Local randomizers, their exact conditional tables, and budget accounting.

Every channel exposes ``conditional_matrix()`` with one row per input and one
column per output so that :func:`verify_ldp` can check the privacy claim by
enumeration instead of trusting the construction.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 <= self.delta < 1:
            raise ValueError("delta must lie in [0, 1)")


def compose(budgets: Sequence[PrivacyBudget], mode: str = "pure",
            delta_prime: Optional[float] = None) -> PrivacyBudget:
    """Sequential composition of per-message budgets."""
    budgets = list(budgets)
    if not budgets:
        raise ValueError("nothing to compose")
    if len(budgets) == 1:
        return budgets[0]
    if mode == "pure":
        if any(b.delta != 0 for b in budgets):
            raise ValueError("pure composition needs delta = 0 everywhere")
        return PrivacyBudget(sum(b.epsilon for b in budgets), 0.0)
    if mode == "advanced":
        if delta_prime is None or delta_prime <= 0:
            raise ValueError("advanced composition needs delta_prime > 0")
        eps = budgets[0].epsilon
        if any(b.epsilon != eps for b in budgets):
            raise ValueError("advanced composition is only defined for equal budgets")
        t = len(budgets)
        e2 = eps * math.sqrt(2 * t * math.log(1 / delta_prime)) + t * eps * math.expm1(eps)
        return PrivacyBudget(e2, sum(b.delta for b in budgets) + delta_prime)
    raise ValueError(f"unknown composition mode {mode!r}")


def verify_ldp(channel) -> float:
    """Largest ``ln W(y|x) / W(y|x')`` over all input pairs and outputs.

    Accepts a channel object or a raw (inputs x outputs) table.  An output that
    one input can produce and another cannot yields ``inf``.
    """
    W = channel.conditional_matrix() if hasattr(channel, "conditional_matrix") else channel
    W = np.asarray(W, dtype=float)
    hi = W.max(axis=0)
    lo = W.min(axis=0)
    used = hi > 0
    if np.any(lo[used] == 0):
        return math.inf
    if not np.any(used):
        return 0.0
    return float(np.max(np.log(hi[used]) - np.log(lo[used])))


def flip_probability(eta: float) -> float:
    """``1 / (e^eta + 1)``; zero for an infinite budget."""
    if math.isinf(eta):
        return 0.0
    return 1.0 / (math.exp(eta) + 1.0)


@dataclass(frozen=True)
class FlipChannel:
    """Binary randomized response at budget ``eta``."""

    eta: float

    @property
    def beta(self) -> float:
        return flip_probability(self.eta)

    @property
    def gamma(self) -> float:
        return 1.0 - 2.0 * self.beta

    def conditional_matrix(self) -> np.ndarray:
        b = self.beta
        return np.array([[1 - b, b], [b, 1 - b]])


def flip_bit(bits, ch: FlipChannel, rng: np.random.Generator):
    bits = np.asarray(bits, dtype=bool)
    if ch.beta == 0:
        return bits.copy()
    return bits ^ (rng.random(bits.shape) < ch.beta)


def debias(mean, ch: FlipChannel):
    """Unbiased pre-flip mean from the mean of flipped bits."""
    return (np.asarray(mean, dtype=float) - ch.beta) / ch.gamma


@dataclass(frozen=True)
class OneHotFlip:
    """Flip every coordinate of a one-hot vector of length ``d``.

    Two one-hot inputs differ in exactly two coordinates, so a per-coordinate
    budget of ``epsilon / 2`` makes the whole vector ``epsilon``-LDP.
    """

    d: int
    epsilon: float

    @property
    def coordinate(self) -> FlipChannel:
        return FlipChannel(self.epsilon / 2)

    def conditional_matrix(self) -> np.ndarray:
        if self.d > 20:
            raise ValueError("output space too large to enumerate")
        beta = self.coordinate.beta
        outs = np.array(list(itertools.product([0, 1], repeat=self.d)), dtype=bool)
        W = np.empty((self.d, outs.shape[0]))
        for i in range(self.d):
            v = np.zeros(self.d, dtype=bool)
            v[i] = True
            nflip = (outs != v).sum(axis=1)
            W[i] = beta**nflip * (1 - beta) ** (self.d - nflip)
        return W


def flip_onehot(v, ch: OneHotFlip, rng: np.random.Generator) -> np.ndarray:
    v = np.asarray(v, dtype=bool)
    if v.shape[-1] != ch.d or np.any(v.sum(axis=-1) != 1):
        raise ValueError("input must be one-hot of length d")
    return flip_bit(v, ch.coordinate, rng)


def onehot_column_sums(cells: np.ndarray, d: int, ch: OneHotFlip,
                       rng: np.random.Generator) -> np.ndarray:
    """Column sums of flipped one-hot vectors for 1-based ``cells``.

    Column ``c`` sums ``Bin(n_c, 1-beta) + Bin(n - n_c, beta)`` independent
    flips, which is drawn directly instead of flipping every coordinate.
    """
    occ = np.bincount(np.asarray(cells) - 1, minlength=d)[:d]
    n = int(occ.sum())
    beta = ch.coordinate.beta
    return rng.binomial(occ, 1 - beta) + rng.binomial(n - occ, beta)


def flipped_bit_sum(bits, ch: FlipChannel, rng: np.random.Generator) -> int:
    """Sum of ``flip_bit(bits)`` drawn in aggregate (same law)."""
    bits = np.asarray(bits, dtype=bool)
    ones = int(bits.sum())
    return int(rng.binomial(ones, 1 - ch.beta) + rng.binomial(bits.size - ones, ch.beta))


def next_pow2(x: int) -> int:
    return 1 << max(0, int(x - 1).bit_length())


def _parity(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.int64).copy()
    for shift in (32, 16, 8, 4, 2, 1):
        v ^= v >> shift
    return v & 1


def fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis (Sylvester order)."""
    a = np.array(a, dtype=float)
    n = a.shape[-1]
    h = 1
    while h < n:
        a = a.reshape(*a.shape[:-1], n // (2 * h), 2, h)
        x, y = a[..., 0, :].copy(), a[..., 1, :].copy()
        a[..., 0, :] = x + y
        a[..., 1, :] = x - y
        a = a.reshape(*a.shape[:-3], n)
        h *= 2
    return a


class HadamardResponse:
    """Hadamard Response over ``a`` symbols, optionally split into blocks.

    Outputs live in ``[K]`` with ``K = blocks * b``.  Symbol ``x`` owns a
    response set ``C_x`` of size ``s = b/2`` inside its block: the rows of
    ``H_b`` with a +1 in the symbol's column.  Column 0 of ``H_b`` is all ones
    and carries no symbol.  Given ``x`` the output is drawn with weight
    ``e^eps`` on ``C_x`` and weight 1 elsewhere, which is exactly ``eps``-LDP.
    With one block this is the classic scheme whose table puts
    ``2e^eps / (K(e^eps+1))`` on ``C_x`` and ``2 / (K(e^eps+1))`` elsewhere.

    ``blocks="auto"`` picks the power-of-two block count that minimizes the
    estimator variance at the uniform input.
    """

    def __init__(self, a: int, epsilon: float, blocks="auto"):
        if a < 1:
            raise ValueError("alphabet must be nonempty")
        if not epsilon >= 0:
            raise ValueError("epsilon must be nonnegative")
        self.a = int(a)
        self.epsilon = float(epsilon)
        if blocks == "auto":
            blocks = _best_block_count(self.a, self.epsilon)
        self.blocks = int(blocks)
        if self.blocks < 1 or self.blocks & (self.blocks - 1):
            raise ValueError("block count must be a power of two")
        self.b = next_pow2(math.ceil(self.a / self.blocks) + 1)
        if self.blocks * (self.b - 1) < self.a:
            raise ValueError("alphabet does not fit")
        self.K = self.blocks * self.b
        self.s = self.b // 2
        if math.isinf(self.epsilon):
            self.q1, self.q0 = 1.0 / self.s, 0.0
        else:
            w = math.exp(self.epsilon)
            z = self.s * w + self.K - self.s
            self.q1, self.q0 = w / z, 1.0 / z
        x = np.arange(self.a)
        self.sym_block = x // (self.b - 1)
        self.sym_col = x % (self.b - 1) + 1
        self.block_size = np.bincount(self.sym_block, minlength=self.blocks)

    def __repr__(self):
        return f"HadamardResponse(a={self.a}, epsilon={self.epsilon}, blocks={self.blocks}, K={self.K})"

    def response_mask(self) -> np.ndarray:
        """(a, K) boolean membership of each output in each ``C_x``."""
        y = np.arange(self.K)
        yb, yl = y // self.b, y % self.b
        same = self.sym_block[:, None] == yb[None, :]
        even = _parity(self.sym_col[:, None] & yl[None, :]) == 0
        return same & even

    def conditional_matrix(self) -> np.ndarray:
        return np.where(self.response_mask(), self.q1, self.q0)

    def encode(self, x, rng: np.random.Generator) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        if np.any((x < 0) | (x >= self.a)):
            raise ValueError("symbol outside the alphabet")
        n = x.size
        inside = rng.random(n) < self.s * self.q1
        y = np.empty(n, dtype=np.int64)
        # inside C_x: uniform row of H_b, parity fixed by toggling one bit of the column
        xi = x[inside]
        col = self.sym_col[xi]
        yl = rng.integers(0, self.b, xi.size)
        wrong = _parity(yl & col) == 1
        yl[wrong] ^= (col & -col)[wrong]
        y[inside] = self.sym_block[xi] * self.b + yl
        # outside C_x: uniform on the complement, by rejection
        todo = np.flatnonzero(~inside)
        while todo.size:
            cand = rng.integers(0, self.K, todo.size)
            xo = x[todo]
            hit = (cand // self.b == self.sym_block[xo]) & (_parity((cand % self.b) & self.sym_col[xo]) == 0)
            y[todo[~hit]] = cand[~hit]
            todo = todo[hit]
        return y

    def message_counts(self, symbol_counts, rng: np.random.Generator) -> np.ndarray:
        """Output counts for ``symbol_counts[x]`` independent uses on symbol ``x``.

        Same law as encoding each sample separately, without materializing them.
        """
        symbol_counts = np.asarray(symbol_counts, dtype=np.int64)
        W = self.conditional_matrix()
        out = np.zeros(self.K, dtype=np.int64)
        for x in np.flatnonzero(symbol_counts):
            out += rng.multinomial(symbol_counts[x], W[x])
        return out

    def decode_counts(self, counts) -> np.ndarray:
        """Unbiased estimate of the input distribution from output counts."""
        counts = np.asarray(counts, dtype=float)
        N = counts.sum()
        if N <= 0:
            raise ValueError("no messages to decode")
        per_block = counts.reshape(self.blocks, self.b)
        block_total = per_block.sum(axis=1)
        signed = fwht(per_block)
        in_set = 0.5 * (block_total[self.sym_block] + signed[self.sym_block, self.sym_col]) / N
        frac_block = block_total[self.sym_block] / N
        d = self.q1 - self.q0
        block_hat = (frac_block - self.b * self.q0) / (self.s * d)
        return (in_set - self.s * self.q0) / (0.5 * self.s * d) - block_hat

    def decode(self, messages) -> np.ndarray:
        messages = np.asarray(messages, dtype=np.int64)
        if messages.size == 0:
            raise ValueError("no messages to decode")
        return self.decode_counts(np.bincount(messages, minlength=self.K))

    def decode_expectation(self, p) -> np.ndarray:
        """Decoder output with the empirical output law replaced by its expectation."""
        return self.decode_counts(np.asarray(p, dtype=float) @ self.conditional_matrix())


def hr_encode(x, ch: HadamardResponse, rng: np.random.Generator) -> np.ndarray:
    return ch.encode(x, rng)


def hr_decode(messages, ch: HadamardResponse) -> np.ndarray:
    return ch.decode(messages)


def _hr_total_variance(a: int, eps: float, blocks: int) -> float:
    """Sum over symbols of the single-message estimator variance at uniform input."""
    ch = HadamardResponse(a, eps, blocks)
    if ch.q1 == ch.q0:
        return math.inf
    d = ch.q1 - ch.q0
    s, b = ch.s, ch.b
    p_x = 1.0 / a
    p_blk = ch.block_size[ch.sym_block] / a
    P_C = p_x * s * ch.q1 + (p_blk - p_x) * 0.5 * s * (ch.q1 + ch.q0) + (1 - p_blk) * s * ch.q0
    P_B = p_blk * s * d + b * ch.q0
    A, c = 2.0 / (s * d), 1.0 / (s * d)
    second = A * A * P_C + c * c * P_B - 2 * A * c * P_C
    return float(np.sum(second - (A * P_C - c * P_B) ** 2))


def _best_block_count(a: int, eps: float) -> int:
    if math.isinf(eps) or eps == 0:
        return 1
    best, best_v = 1, math.inf
    B = 1
    while B <= next_pow2(a):
        v = _hr_total_variance(a, eps, B)
        if v < best_v * (1 - 1e-12):
            best, best_v = B, v
        B *= 2
    return best
