"""Finite populations of speculators and fundamentalists.

Each of ``K`` agents buys or sells after comparing a private noisy valuation
with the price. The average decision drives the price, and for large ``K``
the path tracks the deterministic map from the same start.
"""

from mdyn import HiamConfig, MarketParams, replicate
from mdyn.hiam import compare

params = MarketParams(alpha=0.5, J=0.8, lam=0.1, V=10.0)

cmp = compare(HiamConfig(params=params, K=10_000, p0=10.5, horizon=50, seed=1))
for n in (0, 1, 5, 20, 50):
    print(f"  n={n:2d}  p_agents={cmp.stochastic.prices[n]:.5f}  p_map={cmp.p_det[n]:.5f}"
          f"  dbar={cmp.stochastic.demands[n]:+.4f}  d={cmp.d_det[n]:+.4f}")

print("median sup error over 20 replicas:")
for K in (1_000, 10_000, 100_000):
    s = replicate(HiamConfig(params=params, K=K, p0=10.5, horizon=50, seed=1000), 20)
    print(f"  K={K:>7d}  median {s.median:.5f}  IQR [{s.q1:.5f}, {s.q3:.5f}]")
