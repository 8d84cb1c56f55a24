import numpy as np
import pytest

from userldp.coin import CoinConfig, coin_from_counts
from userldp.core import UserData, make_rng, sample_user_data, sample_users, tv_distance, uniform
from userldp.estimators import (HIGH_PRIVACY, LARGE_M, MEDIUM_M, SMALL_M, block_labels,
                                choose_regime, estimate, estimate_high_privacy, estimate_large_m,
                                estimate_medium_m, estimate_small_m, first_occurrence_law,
                                first_occurrence_reduce, hadamard_sets, medium_parts, recombine)
from userldp.theory import first_occurrence_enumerated


def test_hadamard_sets_k2():
    hs = hadamard_sets(2)
    assert hs.K == 2
    assert [set(np.flatnonzero(r)) for r in hs.masks] == [{0, 1}, {0}]


def test_hadamard_sets_k4_sizes():
    assert sorted(hadamard_sets(4).masks.sum(axis=1).tolist()) == [2, 2, 2, 4]


def test_hadamard_sets_pad_to_power_of_two():
    hs = hadamard_sets(5)
    assert hs.K == 8 and hs.masks.shape == (8, 5)
    p = make_rng(0).dirichlet(np.ones(5))
    assert np.allclose(hs.from_sets(hs.to_sets(p)), p, atol=1e-12)


def test_high_privacy_k2_is_the_coin():
    users = sample_users([0.3, 0.7], 32, 3000, make_rng(1))
    p = estimate_high_privacy(users, 0.9, make_rng(2))
    z = users.count_in(np.array([True, False]))
    q = coin_from_counts(z, 32, CoinConfig(0.9), make_rng(2), warn=False).p_hat
    assert np.array_equal(p, [q, 1 - q])


def test_high_privacy_needs_k_users():
    users = sample_users(uniform(8), 4, 5, make_rng(0))
    with pytest.raises(ValueError):
        estimate_high_privacy(users, 0.5, make_rng(0))


def test_high_privacy_accuracy_and_simplex():
    p = make_rng(3).dirichlet(np.ones(8))
    users = sample_users(p, 128, 40000, make_rng(4))
    est = estimate_high_privacy(users, 0.9, make_rng(5))
    assert est.sum() == pytest.approx(1.0) and np.all(est >= 0)
    assert tv_distance(est, p) < 0.03


def test_high_privacy_error_falls_with_m():
    p = uniform(8)
    errs = []
    for m in (8, 128):
        errs.append(np.mean([tv_distance(estimate_high_privacy(
            sample_users(p, m, 16000, make_rng(s, m)), 0.9, make_rng(s, 1, m)), p) for s in range(8)]))
    assert errs[1] < errs[0]


def test_large_m_single_part_matches_high_privacy():
    users = sample_users(uniform(4), 16, 4000, make_rng(6))
    a = estimate_large_m(users, 1.7, make_rng(7))
    b = estimate_high_privacy(users, 1.0, make_rng(7))
    assert np.array_equal(a, b)


def test_large_m_shares_budget_when_few_rows():
    # k = 4 has three non-trivial rows; floor(7) = 7 parts shared among them
    users = sample_users([0.1, 0.2, 0.3, 0.4], 64, 6000, make_rng(8))
    est = estimate_large_m(users, 7.0, make_rng(9))
    assert tv_distance(est, [0.1, 0.2, 0.3, 0.4]) < 0.02


def test_large_m_needs_eps_at_least_one():
    with pytest.raises(ValueError):
        estimate_large_m(sample_users(uniform(4), 8, 100, make_rng(0)), 0.5, make_rng(0))


def test_blocks_partition_the_alphabet():
    labels = block_labels(10, 3)
    assert labels.tolist() == [0, 0, 0, 0, 1, 1, 1, 2, 2, 2]
    with pytest.raises(ValueError):
        block_labels(3, 4)


def test_first_occurrence_examples():
    u = UserData(np.array([0, 0, 2, 1]), 3, np.array([2, 3, 2]))
    assert first_occurrence_reduce(u, [0, 1]) is None
    assert first_occurrence_reduce(u, [2, 3]) == 2
    assert first_occurrence_reduce(u, [3]) == 3
    v = sample_user_data([0.0, 0.5, 0.5, 0.0], 4, make_rng(0), keep_order=True)
    assert first_occurrence_reduce(v, [1, 2]) == v.samples[0]
    with pytest.raises(ValueError):
        first_occurrence_reduce(UserData(np.array([1, 1]), 2), [0])


def test_first_occurrence_null_mass():
    law = first_occurrence_law(uniform(4), 2, [0, 1])
    assert law[-1] == pytest.approx(0.25)
    assert law.sum() == pytest.approx(1.0)


def test_first_occurrence_law_against_enumeration():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    law = first_occurrence_law(p, 3, [1, 3])
    assert np.allclose(law, first_occurrence_enumerated(p, 3, [1, 3]), atol=1e-12)


def test_recombine_exact_laws_give_back_p():
    p = make_rng(10).dirichlet(np.ones(12))
    labels = block_labels(12, 4)
    members = [np.flatnonzero(labels == j) for j in range(4)]
    p_blocks = np.array([p[b].sum() for b in members])
    laws = [first_occurrence_law(p, 4, b) for b in members]
    out, fallbacks = recombine(p_blocks, laws, members, 12)
    assert fallbacks == 0 and np.allclose(out, p, atol=1e-12)


def test_recombine_uniform_fallback():
    members = [np.array([0, 1]), np.array([2, 3])]
    laws = [np.array([0.0, 0.0, 1.0]), np.array([0.3, 0.3, 0.4])]
    out, fallbacks = recombine(np.array([0.4, 0.6]), laws, members, 4)
    assert fallbacks == 1
    assert np.allclose(out, [0.2, 0.2, 0.3, 0.3])


def test_identity_channels_give_plug_in_decomposition():
    rng = make_rng(11)
    k, m = 6, 2
    batch = sample_users(make_rng(12).dirichlet(np.ones(k)), m, 3000, rng, storage="samples")
    labels = block_labels(k, m)
    members = [np.flatnonzero(labels == j) for j in range(m)]
    p_B = np.bincount(labels[batch.samples.ravel()], minlength=m) / batch.samples.size
    laws = []
    for b in members:
        pos = batch.first_in_set(b, rng)
        laws.append(np.bincount(np.where(pos < 0, b.size, pos), minlength=b.size + 1) / batch.n)
    out, _ = recombine(p_B, laws, members, k)
    for j, b in enumerate(members):
        assert np.allclose(out[b], p_B[j] * laws[j][:-1] / (1 - laws[j][-1]), atol=1e-15)
        assert out[b].sum() == pytest.approx(p_B[j])


def test_medium_parts_examples():
    assert medium_parts(500, 128, 4.0) == 1
    assert medium_parts(500, 400, 4.0) == 8


def test_medium_m_blocks_per_user():
    users = sample_users(uniform(500), 400, 2000, make_rng(12))
    _, diag = estimate_medium_m(users, 4.0, make_rng(13), return_diagnostics=True)
    assert diag.blocks_per_user == 8
    assert diag.per_block_budget == pytest.approx(2.0 / 8)


def test_medium_m_falls_back_to_small_m():
    users = sample_users(uniform(64), 4, 3000, make_rng(14))
    assert medium_parts(64, 4, 2.0) == 0
    a = estimate_medium_m(users, 2.0, make_rng(15))
    b = estimate_small_m(users, 2.0, make_rng(15))
    assert np.array_equal(a, b)


def test_small_m_argument_checks():
    with pytest.raises(ValueError):
        estimate_small_m(sample_users(uniform(4), 8, 100, make_rng(0)), 2.0, make_rng(0))
    with pytest.raises(ValueError):
        estimate_medium_m(sample_users(uniform(4), 4, 100, make_rng(0)), 2.0, make_rng(0))


def test_small_m_single_sample_users():
    p = make_rng(16).dirichlet(np.ones(16))
    users = sample_users(p, 1, 40000, make_rng(17))
    est = estimate_small_m(users, 3.0, make_rng(18))
    assert tv_distance(est, p) < 0.06


@pytest.mark.parametrize("seed", range(5))
def test_error_decomposition_per_seed(seed):
    k, m, eps = 200, 10, 3.0
    p = make_rng(seed).dirichlet(np.ones(k))
    users = sample_users(p, m, 20000, make_rng(seed, 1))
    est, diag = estimate_small_m(users, eps, make_rng(seed, 2), return_diagnostics=True)
    labels = block_labels(k, m)
    members = [np.flatnonzero(labels == j) for j in range(m)]
    p_B = np.array([p[b].sum() for b in members])
    bound = tv_distance(diag.p_blocks, p_B)
    for j, b in enumerate(members):
        tv_j = 0.5 * np.abs(diag.t_hat[j] - first_occurrence_law(p, m, b)).sum()
        bound += p_B[j] / min(m * p_B[j], 1.0) * tv_j
    assert tv_distance(est, p) <= bound + 1e-9


def test_dispatcher_examples():
    assert choose_regime(2, 64, 0.9) == HIGH_PRIVACY
    assert choose_regime(1000, 20, 3.0) == SMALL_M
    assert choose_regime(200, 256, 2.0) == LARGE_M
    assert choose_regime(500, 128, 4.0) == MEDIUM_M


def test_estimate_report():
    p = uniform(16)
    users = sample_users(p, 4, 8000, make_rng(19))
    rep = estimate(users, 3.0, make_rng(20), truth=p, seed=3)
    assert rep.regime == choose_regime(16, 4, 3.0)
    assert 0 <= rep.tv_error <= 1
    assert rep.as_dict()["seed"] == 3 and len(rep.as_dict()["p_hat"]) == 16


def test_user_lists_are_accepted():
    rng = make_rng(21)
    users = [sample_user_data([0.5, 0.25, 0.25, 0.0], 8, rng) for _ in range(200)]
    est = estimate_high_privacy(users, 1.0, rng)
    assert est.shape == (4,) and est.sum() == pytest.approx(1.0)
