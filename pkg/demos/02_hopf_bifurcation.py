"""Loss of stability through a closed invariant curve.

Vary the share of speculators ``alpha`` with ``J = 1``, ``lam = 1/2`` and a
Normal law scaled so that ``pdf(0) = 1``. The equilibrium loses stability at
``alpha = 1/2`` where the eigenvalues sit at ``exp(+-i pi/3)``.
"""

import math

from mdyn import MarketParams, ParamFamily, State, coefficient_A, coefficient_A_numeric, find_eta0, hopf_scan
from mdyn.distributions import normal_zero_mean

dist = normal_zero_mean(1.0 / math.sqrt(2.0 * math.pi))
family = ParamFamily.varying(MarketParams(alpha=0.5, J=1.0, lam=0.5, dist=dist), "alpha", (0.3, 0.7))

eta0 = find_eta0(family)
rep = coefficient_A(family, eta0)
num = coefficient_A_numeric(family, eta0)
print(f"critical alpha {eta0:.12f}, eigenvalue {rep.mu0:.12f}")
print(f"cubic coefficient A = {rep.A:.7f} (closed-form partials), {num.A:.7f} (finite differences)")
print("verdict:", rep.verdict.value)

# A > 0: a small attracting curve should appear just past the threshold,
# its radius growing like sqrt(alpha - 1/2).
for eta, v in hopf_scan(family, [0.48, 0.505, 0.51, 0.52, 0.55], State(0.01, 0.01), 100_000):
    r = "" if v.radius_estimate is None else f"radius {v.radius_estimate:.4f}"
    print(f"  alpha={eta:.3f}  {v.kind.value:18s} {r}")
