"""Local budgets that a shuffler turns into a target central budget."""
from userldp.shuffle import amplified_epsilon, choose_local_budget

delta = 1e-6
for n in (10**4, 10**5, 10**6):
    row = []
    for target in (0.05, 0.2, 1.0):
        b = choose_local_budget(target, delta, n, k=100, m=10)
        row.append(f"target {target:<4} -> local {b.epsilon_local:6.3f} ({b.regime})")
    print(f"n={n:>8}: " + " | ".join(row))
print(f"one spot value: local 1.0 at n=1e4 -> {amplified_epsilon(1.0, 10**4, delta):.4f}")
