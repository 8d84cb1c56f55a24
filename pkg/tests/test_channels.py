import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from userldp.channels import (FlipChannel, HadamardResponse, OneHotFlip, PrivacyBudget, compose,
                              debias, flip_bit, flip_onehot, flipped_bit_sum, fwht, hr_decode,
                              hr_encode, next_pow2, onehot_column_sums, verify_ldp)
from userldp.core import make_rng
from scipy.linalg import hadamard


def test_flip_probabilities():
    assert FlipChannel(math.inf).beta == 0
    assert FlipChannel(math.log(3)).beta == pytest.approx(0.25)
    assert FlipChannel(math.log(3)).gamma == pytest.approx(0.5)


def test_flip_bit_identity_at_infinite_budget():
    bits = np.array([1, 0, 1, 1], dtype=bool)
    assert np.array_equal(flip_bit(bits, FlipChannel(math.inf), make_rng(0)), bits)


def test_flip_bit_mean():
    out = flip_bit(np.ones(10**6, dtype=bool), FlipChannel(math.log(3)), make_rng(1))
    sigma = math.sqrt(0.25 * 0.75 / 10**6)
    assert abs(out.mean() - 0.75) < 3 * sigma


def test_aggregated_bit_sum_matches_mean():
    ch = FlipChannel(0.7)
    bits = np.arange(40000) % 5 == 0
    s = flipped_bit_sum(bits, ch, make_rng(2))
    expect = bits.sum() * (1 - ch.beta) + (~bits).sum() * ch.beta
    assert abs(s - expect) < 4 * math.sqrt(bits.size * 0.25)


def test_debias_examples():
    ch = FlipChannel(math.log(3))
    assert debias(ch.beta, ch) == pytest.approx(0)
    assert debias(1 - ch.beta, ch) == pytest.approx(1)
    assert debias(0.5, ch) == pytest.approx(0.5)


def test_onehot_pair_ratio():
    eps = 2 * math.log(3)
    W = OneHotFlip(2, eps).conditional_matrix()
    assert W.shape == (2, 4)
    assert np.max(W[0] / W[1]) == pytest.approx(9.0)


@pytest.mark.parametrize("d", [2, 5, 14])
def test_onehot_exactly_eps(d):
    assert verify_ldp(OneHotFlip(d, 0.9)) == pytest.approx(0.9, abs=1e-12)


def test_onehot_rejects_bad_input():
    ch = OneHotFlip(3, 1.0)
    with pytest.raises(ValueError):
        flip_onehot([1, 1, 0], ch, make_rng(0))
    out = flip_onehot(np.eye(3, dtype=bool), OneHotFlip(3, math.inf), make_rng(0))
    assert np.array_equal(out, np.eye(3, dtype=bool))


def test_column_sums_in_expectation():
    d, ch = 6, OneHotFlip(6, 1.0)
    cells = np.repeat(np.arange(1, d + 1), [1000, 5000, 0, 2000, 1000, 1000])
    sums = np.mean([onehot_column_sums(cells, d, ch, make_rng(s)) for s in range(200)], axis=0)
    beta = ch.coordinate.beta
    occ = np.bincount(cells - 1, minlength=d)
    want = occ * (1 - beta) + (cells.size - occ) * beta
    assert np.allclose(sums, want, rtol=0.01)


def test_verify_ldp_identity_is_infinite():
    assert verify_ldp(np.eye(3)) == math.inf
    assert verify_ldp(FlipChannel(0.4)) == pytest.approx(0.4)


def test_compose():
    b = PrivacyBudget(0.5)
    assert compose([b]) == b
    assert compose([b] * 4).epsilon == pytest.approx(2.0)
    adv = compose([PrivacyBudget(0.1)] * 4, "advanced", 1e-6)
    assert adv.epsilon == pytest.approx(1.0936, abs=5e-4)
    assert adv.delta == pytest.approx(1e-6)
    with pytest.raises(ValueError):
        compose([PrivacyBudget(0.1), PrivacyBudget(0.2)], "advanced", 1e-6)
    with pytest.raises(ValueError):
        PrivacyBudget(0.0)


@pytest.mark.parametrize("n", [1, 2, 8, 64])
def test_fwht_matches_matrix(n):
    x = make_rng(n).normal(size=(3, n))
    assert np.allclose(fwht(x), x @ hadamard(n).T)


def test_next_pow2():
    assert [next_pow2(x) for x in (1, 2, 3, 4, 5, 17)] == [1, 2, 4, 4, 8, 32]


@pytest.mark.parametrize("a", [1, 2, 3, 4, 7, 15, 16])
@pytest.mark.parametrize("eps", [0.3, 1.0, 4.0])
def test_hr_exact_budget(a, eps):
    ch = HadamardResponse(a, eps)
    W = ch.conditional_matrix()
    assert np.allclose(W.sum(axis=1), 1.0)
    assert verify_ldp(ch) <= eps * (1 + 1e-9)


def test_hr_zero_budget_is_uniform():
    W = HadamardResponse(5, 0.0).conditional_matrix()
    assert np.allclose(W, 1.0 / W.shape[1])


def test_hr_two_outputs_is_randomized_response():
    ch = HadamardResponse(1, 1.0)
    assert ch.K == 2
    assert np.allclose(ch.conditional_matrix()[0], FlipChannel(1.0).conditional_matrix()[0])


@pytest.mark.parametrize("blocks", [1, 2, 4])
def test_hr_decode_expectation_unbiased(blocks):
    p = make_rng(7).dirichlet(np.ones(12))
    ch = HadamardResponse(12, 2.0, blocks=blocks)
    assert np.allclose(ch.decode_expectation(p), p, atol=1e-12)


def test_hr_encode_law_matches_table():
    ch = HadamardResponse(6, 1.5, blocks=2)
    rng = make_rng(8)
    for x in range(6):
        y = hr_encode(np.full(200000, x), ch, rng)
        freq = np.bincount(y, minlength=ch.K) / y.size
        assert np.allclose(freq, ch.conditional_matrix()[x], atol=4e-3)


def test_hr_message_counts_match_table():
    ch = HadamardResponse(5, 1.0)
    counts = ch.message_counts([100000, 0, 0, 0, 0], make_rng(9))
    assert np.allclose(counts / 100000, ch.conditional_matrix()[0], atol=5e-3)


def test_hr_noiseless_point_mass():
    ch = HadamardResponse(8, math.inf)
    est = hr_decode(hr_encode(np.full(5000, 3), ch, make_rng(10)), ch)
    assert np.allclose(est, np.eye(8)[3], atol=0.05)


def test_hr_accuracy_uniform():
    ch = HadamardResponse(4, 1.0)
    x = make_rng(11).integers(0, 4, 10**6)
    est = hr_decode(hr_encode(x, ch, make_rng(12)), ch)
    assert np.max(np.abs(est - 0.25)) <= 0.01


def test_hr_rejects_out_of_range():
    with pytest.raises(ValueError):
        HadamardResponse(3, 1.0).encode([3], make_rng(0))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 40), st.floats(0.05, 8))
def test_hr_auto_blocks_always_private(a, eps):
    ch = HadamardResponse(a, eps)
    assert verify_ldp(ch) <= eps * (1 + 1e-9)
    p = np.full(a, 1.0 / a)
    assert np.allclose(ch.decode_expectation(p), p, atol=1e-10)
