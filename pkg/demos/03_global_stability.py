"""A feedback threshold below which every orbit returns to equilibrium."""

import numpy as np

from mdyn import D_of, MarketParams, R_of, constants, verify_global_convergence

params = MarketParams(alpha=0.5, J=0.8, lam=0.15)
c = constants(params)
print(f"b = {c.b:.6f}, a = {c.a:.6f}, x_r = {c.x_r:.6f}, h = {c.h:.6f}, k = {c.k}")
print(f"lambda_c = {c.lambda_c} (bound {c.binding_constraint} of {np.round(c.bounds, 5)})")

# D(p): where the demand update at price p has its fixed point; R(p): its zero.
for p in (-2.0, -0.5, 0.0, 0.5, 2.0):
    print(f"  p={p:5.2f}  D={D_of(params, p):+.6f}  R={R_of(params, p):+.6f}")

rng = np.random.default_rng(0)
states = np.column_stack([rng.uniform(-10, 10, 100), rng.uniform(-1, 1, 100)])
rep = verify_global_convergence(params, states)
print(f"{len(states) - rep.n_failures}/{len(states)} orbits within 1e-8 of equilibrium;"
      f" slowest after {rep.first_hit.max()} steps")
