"""Which estimator runs where, and how it compares with the two HR baselines.

Small populations so the whole table prints in well under a minute.
"""
from userldp.baselines import all_sample_hr, one_sample_hr
from userldp.core import make_rng, sample_users, tv_distance, uniform
from userldp.estimators import choose_regime, estimate

CASES = [  # (k, m, n, epsilon)
    (16, 64, 20000, 0.8),
    (64, 4, 40000, 4.0),
    (64, 24, 40000, 4.0),
    (16, 64, 20000, 3.0),
]

print(f"{'k':>4}{'m':>5}{'n':>7}{'eps':>5}  {'regime':<13}{'auto':>9}{'1-sample':>10}{'all-sample':>12}")
for k, m, n, eps in CASES:
    p = uniform(k)
    users = sample_users(p, m, n, make_rng(1, k, m))
    rep = estimate(users, eps, make_rng(2), truth=p)
    one = tv_distance(one_sample_hr(users, eps, make_rng(3)), p)
    every = tv_distance(all_sample_hr(users, eps, make_rng(4)), p)
    assert rep.regime == choose_regime(k, m, eps)
    print(f"{k:>4}{m:>5}{n:>7}{eps:>5}  {rep.regime:<13}{rep.tv_error:>9.4f}{one:>10.4f}{every:>12.4f}")
print("all-sample HR is only private per sample, not per user")
