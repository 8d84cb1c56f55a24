"""Exact per-user transcript laws for small alphabets.

Each function returns conditional tables whose rows are indexed by every
ordered sample sequence in ``[k]^m`` (see :func:`theory.sequences`) and whose
columns are the possible transcripts of one user.  Which role a user plays
(localization or refinement group, Hadamard row, block) never depends on the
data, so each role assignment is checked as its own channel.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .channels import FlipChannel, HadamardResponse, OneHotFlip, next_pow2, verify_ldp
from .coin import CoinConfig, interactive_threshold, LocalizationResult
from .estimators import EPS0, block_labels, hadamard_sets, medium_parts
from .partitions import RefinementGrid, build_partition, locate
from .theory import sequences


def product_table(*tables: np.ndarray) -> np.ndarray:
    """Joint law of independent messages given the same input (row-wise outer product)."""
    out = tables[0]
    for t in tables[1:]:
        out = (out[:, :, None] * t[:, None, :]).reshape(out.shape[0], -1)
    return out


def _bit_table(bits: np.ndarray, eps: float) -> np.ndarray:
    W = FlipChannel(eps).conditional_matrix()
    return W[np.asarray(bits, dtype=int)]


def coin_roles(m: int, eps: float, preset: str = "experiment",
               variant: str = "interactive") -> dict:
    """Tables indexed by the head count z = 0..m, one per role a user can hold."""
    cfg = CoinConfig(eps, preset, variant)
    z = np.arange(m + 1)
    part = build_partition(m, cfg.c_i, "I")
    roles = {}
    if part.degenerate:
        roles["localize"] = np.ones((m + 1, 1))
    else:
        d = part.n_cells
        roles["localize"] = OneHotFlip(d, eps).conditional_matrix()[locate(part, z / m) - 1]
    if variant == "interactive":
        n_cells = 1 if part.degenerate else part.n_cells
        for i in range(1, n_cells + 1):
            t = interactive_threshold(part, LocalizationResult(i, (0, 1), part.degenerate))
            roles[f"refine_t{i}"] = _bit_table(z / m > t, eps)
    else:
        grid = RefinementGrid(m, cfg.c_r)
        roles["r2"] = _bit_table(grid.in_even_L(z), eps)
        roles["r3"] = _bit_table(grid.in_even_J(z), eps)
        if cfg.uses_small_group:
            roles["r4"] = _bit_table(z >= 1, eps)
    return roles


def _coin_over_mask(seqs: np.ndarray, mask: np.ndarray, m: int, eps: float, preset, variant):
    z = mask[seqs].sum(axis=1)
    return {name: t[z] for name, t in coin_roles(m, eps, preset, variant).items()}


def hadamard_row_roles(seqs: np.ndarray, k: int, m: int, eps: float, preset="experiment",
                       variant="interactive") -> list[dict]:
    """Per Hadamard row (row 0 excluded), the role tables over sequences."""
    if k == 2:
        return [_coin_over_mask(seqs, np.array([True, False]), m, eps, preset, variant)]
    masks = hadamard_sets(k).masks
    return [_coin_over_mask(seqs, masks[r], m, eps, preset, variant) for r in range(1, masks.shape[0])]


def high_privacy_tables(k: int, m: int, eps: float, preset="experiment", variant="interactive"):
    seqs = sequences(k, m)
    return [t for row in hadamard_row_roles(seqs, k, m, eps, preset, variant) for t in row.values()]


def large_m_tables(k: int, m: int, eps: float, preset="experiment", variant="interactive"):
    """Composed transcript of every row assignment and role combination."""
    seqs = sequences(k, m)
    parts = int(math.floor(eps))
    rows = 1 if k == 2 else next_pow2(k) - 1
    per_user = min(parts, rows)
    budget = parts / per_user
    roles = hadamard_row_roles(seqs, k, m, budget, preset, variant)
    out = []
    for u in range(rows):
        assigned = [(u * per_user + j) % rows for j in range(per_user)]
        for combo in itertools.product(*[list(roles[r].values()) for r in assigned]):
            out.append(product_table(*combo))
    return out


def _first_occurrence_tables(seqs, k, n_blocks, blocks, budget):
    labels = block_labels(k, n_blocks)
    out = []
    for j in blocks:
        members = np.flatnonzero(labels == j)
        pos = np.full(k, -1)
        pos[members] = np.arange(members.size)
        local = pos[seqs]
        hit = local >= 0
        first = np.where(hit.any(axis=1), local[np.arange(len(seqs)), hit.argmax(axis=1)], members.size)
        out.append(HadamardResponse(members.size + 1, budget).conditional_matrix()[first])
    return out


def _block_stage_tables(seqs, k, m, stage_budget, composed: bool, preset, variant):
    if m == 1:
        return [np.ones((len(seqs), 1))]
    labels = block_labels(k, m)
    block_seqs = labels[seqs]
    if composed:
        parts = int(math.floor(stage_budget))
        rows = 1 if m == 2 else next_pow2(m) - 1
        per_user = min(parts, rows)
        roles = hadamard_row_roles(block_seqs, m, m, parts / per_user, preset, variant)
        out = []
        for u in range(rows):
            assigned = [(u * per_user + j) % rows for j in range(per_user)]
            for combo in itertools.product(*[list(roles[r].values()) for r in assigned]):
                out.append(product_table(*combo))
        return out
    return [t for row in hadamard_row_roles(block_seqs, m, m, stage_budget, preset, variant)
            for t in row.values()]


def small_m_tables(k: int, m: int, eps: float, preset="experiment", variant="interactive"):
    seqs = sequences(k, m)
    stage_one = _block_stage_tables(seqs, k, m, EPS0, False, preset, variant)
    stage_two = _first_occurrence_tables(seqs, k, m, range(m), eps - EPS0)
    return [product_table(a, b) for a in stage_one for b in stage_two]


def medium_m_tables(k: int, m: int, eps: float, preset="experiment", variant="interactive"):
    t = medium_parts(k, m, eps)
    if t == 0:
        return small_m_tables(k, m, eps, preset, variant)
    seqs = sequences(k, m)
    per_user = min(m, t)
    half = eps / 2
    stage_one = _block_stage_tables(seqs, k, m, half, half >= 1, preset, variant)
    out = []
    for u in range(m):
        blocks = [(u * per_user + j) % m for j in range(per_user)]
        stage_two = product_table(*_first_occurrence_tables(seqs, k, m, blocks, half / per_user))
        out.extend(product_table(a, stage_two) for a in stage_one)
    return out


def one_sample_hr_table(k: int, m: int, eps: float) -> np.ndarray:
    seqs = sequences(k, m)
    return HadamardResponse(k, eps).conditional_matrix()[seqs[:, 0]]


def all_sample_hr_table(k: int, m: int, eps: float) -> np.ndarray:
    seqs = sequences(k, m)
    W = HadamardResponse(k, eps).conditional_matrix()
    return product_table(*[W[seqs[:, i]] for i in range(m)])


def worst_ratio(tables) -> float:
    return max(verify_ldp(t) for t in tables)
