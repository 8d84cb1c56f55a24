import numpy as np
import pytest

from userldp.core import make_rng
from userldp.shuffle import (InfeasibleBudget, amplified_epsilon, choose_local_budget, local_cap,
                             shuffle_messages)


def test_spot_value():
    assert amplified_epsilon(1.0, 10_000, 1e-6) == pytest.approx(0.2140, abs=1e-4)


def test_small_local_budget_limit():
    assert amplified_epsilon(0.0, 10_000, 1e-6) == 0.0
    assert amplified_epsilon(1e-8, 10_000, 1e-6) < 1e-8


def test_monotone_in_local_budget():
    grid = np.linspace(0, local_cap(10**5, 1e-6), 50)
    vals = [amplified_epsilon(e, 10**5, 1e-6) for e in grid]
    assert np.all(np.diff(vals) > 0)


def test_input_validation():
    with pytest.raises(ValueError):
        amplified_epsilon(1.0, 10_000, 0.0)
    with pytest.raises(ValueError):
        amplified_epsilon(1.0, 0, 1e-6)
    with pytest.raises(ValueError):
        amplified_epsilon(-1.0, 10_000, 1e-6)
    with pytest.raises(ValueError):
        amplified_epsilon(50.0, 10_000, 1e-6)


def test_huge_target_returns_cap():
    b = choose_local_budget(1e6, 1e-6, 10**5, 100, 10)
    assert b.epsilon_local == pytest.approx(local_cap(10**5, 1e-6))


def test_amplification_gain():
    b = choose_local_budget(0.01, 1e-7, 10**6, 100, 10)
    assert b.epsilon_local > 0.01
    assert b.amplified <= 0.01


def test_infeasible():
    with pytest.raises(InfeasibleBudget):
        choose_local_budget(0.1, 1e-6, 100, 10, 1)
    with pytest.raises(InfeasibleBudget):
        choose_local_budget(0.0, 1e-6, 10**5, 10, 1)


def test_regime_label():
    b = choose_local_budget(0.5, 1e-6, 10**6, 1000, 20)
    assert b.regime in ("high_privacy", "small_m", "medium_m", "large_m")


def test_shuffle_is_a_permutation():
    msgs = np.arange(100) % 7
    out = shuffle_messages(msgs, make_rng(0))
    assert sorted(out.tolist()) == sorted(msgs.tolist())
    assert not np.array_equal(out, msgs)
