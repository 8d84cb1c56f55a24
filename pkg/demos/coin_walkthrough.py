"""Step through the two-round coin estimator on one simulated population.

    python3 demos/coin_walkthrough.py [p] [m] [n] [epsilon]
"""
import sys

import numpy as np

from userldp.coin import (CoinConfig, group_sizes, interactive_threshold, localize,
                          refine_interactive)
from userldp.core import make_rng
from userldp.partitions import build_partition


def main(p=0.6, m=256, n=9000, eps=0.9):
    rng = make_rng(0)
    z = rng.binomial(m, p, size=n)
    cfg = CoinConfig(eps)
    n1, n2 = group_sizes(n, cfg)
    part = build_partition(m, cfg.c_i)
    print(f"true p = {p}, m = {m}, n = {n}, eps = {eps}")
    print(f"partition: {part.n_cells} cells, edges {np.round(part.edges, 3).tolist()}")

    loc = localize(z[:n1], m, part, eps, rng)
    print(f"round one ({n1} users): cell {loc.i_hat}, interval "
          f"[{loc.I_hat[0]:.4f}, {loc.I_hat[1]:.4f}]")

    t = interactive_threshold(part, loc)
    p_hat = refine_interactive(loc, t, z[n1:n1 + n2], m, eps, rng)
    print(f"round two ({n2} users): threshold {t:.4f}, estimate {p_hat:.5f}, "
          f"error {abs(p_hat - p):.5f}")
    print(f"reference scale 1/sqrt(m n eps^2) = {1 / np.sqrt(m * n * eps**2):.5f}")


if __name__ == "__main__":
    args = [float(a) for a in sys.argv[1:]]
    for i in (1, 2):
        if len(args) > i:
            args[i] = int(args[i])
    main(*args)
