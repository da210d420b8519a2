"""Orbits of the price/excess-demand map and the (u, w) phase diagram.

Run with ``python demos/01_orbits_and_local_stability.py``.
"""

import numpy as np

from mdyn import MarketParams, State, classify_params, phase_diagram, simulate
from mdyn.stability import region_counts

# A market with few speculators and weak price feedback settles down.
calm = MarketParams(alpha=0.3, J=1.0, lam=0.2)
orbit = simulate(calm, State(1.0, 0.0), 200)
print("calm market:", classify_params(calm).region.value, classify_params(calm).verdict.value)
print("  |state| after 0, 50, 200 steps:", np.round(orbit.norms()[[0, 50, 200]], 6))

# Raising the speculative trend pushes u = 2 alpha J pdf(0) past 1.
hot = calm.replace(alpha=0.7, J=3.0)
rep = classify_params(hot)
print("speculative market:", rep.region.value, rep.verdict.value,
      "spectral radius %.3f" % rep.eigen.spectral_radius)
orbit = simulate(hot, State(0.01, 0.0), 2000)
print("  orbit stays bounded but away from V: max |p - V| = %.3f" % np.max(np.abs(orbit.p)))

# Region census of the quadrant (u, w) in (0, 3] x (0, 6].
reports = phase_diagram((0.015, 3.0), (0.03, 6.0), (200, 200))
for name, count in region_counts(reports).items():
    print(f"  {name:8s} {count:6d}")
