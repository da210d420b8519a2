"""Global stability threshold for the price feedback ``lam``.

At a fixed price argument ``p`` the demand update is the map

    g_p(d) = alpha * [1 - 2 Phi(p - J d)] + (1 - alpha) * [1 - 2 Phi(p)],

a contraction with modulus ``b = 2 alpha J pdf(0)`` whenever ``b < 1``.  Two
curves organise the phase plane: ``D(p)``, the fixed point of ``g_p``, and
``R(p)``, its zero.  Bounds on both lead to an explicit ``lambda_c`` such
that every orbit converges to the equilibrium for ``0 < lam <= lambda_c``.

Constants
---------
    a       = b / 2
    x_l,x_r   roots of 2 alpha J pdf(x) = a, x_l < 0 < x_r
    h       = min{(alpha / (1 - alpha)) (a / b), 1} * min{|x_l|, x_r}
    k       = least k >= 1 with b**k <= J alpha (1 - b) / (2 b)
    lambda_c = min{J alpha (1 - b) / (2 b k), alpha J a / b, h}
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .dynamics import MarketParams, g, simulate_batch
from .errors import AssumptionViolatedError, NumericError

__all__ = [
    "GlobalStabilityConstants",
    "GlobalConvergenceReport",
    "constants",
    "D_of",
    "R_of",
    "verify_global_convergence",
    "constants_to_json",
]

_TAIL = 1e6


@dataclass(frozen=True)
class GlobalStabilityConstants:
    """Constants entering ``lambda_c``.

    ``binding_constraint`` is the 1-based index of the bound attaining the
    minimum: 1 for the trend bound, 2 for ``alpha J a / b``, 3 for ``h``.
    """

    b: float
    a: float
    x_ell: float
    x_r: float
    h: float
    k: int
    lambda_c: float
    binding_constraint: int
    bounds: tuple[float, float, float]


def _contraction_modulus(params: MarketParams) -> float:
    b = 2.0 * params.alpha * params.J * params.dist.peak_density
    if not b < 1.0:
        raise AssumptionViolatedError(
            f"global stability requires 2*alpha*J*pdf(0) < 1, got {b!r}"
        )
    return b


def _level_root(fn, sign: float, scale: float) -> float:
    # fn(0) > 0 and fn decreases to a negative limit along sign * x
    hi = scale
    for _ in range(200):
        if fn(sign * hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise NumericError("could not bracket the level crossing")
    root = optimize.brentq(lambda t: fn(sign * t), 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return sign * root


def constants(params: MarketParams) -> GlobalStabilityConstants:
    """Compute ``b, a, x_l, x_r, h, k`` and ``lambda_c``.

    Raises
    ------
    AssumptionViolatedError
        If ``2 alpha J pdf(0) >= 1``.
    """
    alpha, J = params.alpha, params.J
    b = _contraction_modulus(params)
    a = b / 2.0
    pdf = params.dist.pdf

    def level(x):
        return 2.0 * alpha * J * float(pdf(x)) - a

    scale = params.dist.scale
    x_r = _level_root(level, 1.0, scale)
    x_ell = _level_root(level, -1.0, scale)
    h = min(alpha / (1.0 - alpha) * (a / b), 1.0) * min(abs(x_ell), x_r)

    target = 0.5 * J * alpha * (1.0 - b) / b
    k = 1
    while b ** k > target:
        k += 1
    bounds = (target / k, alpha * J * a / b, h)
    idx = int(np.argmin(bounds))
    return GlobalStabilityConstants(
        b=b, a=a, x_ell=x_ell, x_r=x_r, h=h, k=k,
        lambda_c=bounds[idx], binding_constraint=idx + 1, bounds=bounds,
    )


def constants_to_json(c: GlobalStabilityConstants) -> str:
    """Serialise with shortest round-trip float repr."""
    obj = asdict(c)
    obj["bounds"] = list(c.bounds)
    return json.dumps(obj, indent=2) + "\n"


def D_of(params: MarketParams, p: float, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Fixed point of ``d -> g_p(d)`` by iteration from 0."""
    _contraction_modulus(params)
    d = 0.0
    for _ in range(max_iter):
        d_next = float(g(params, p, d))
        if abs(d_next - d) < tol:
            return d_next
        d = d_next
    raise NumericError(f"fixed-point iteration for D({p!r}) did not converge")


def R_of(params: MarketParams, p: float, tol: float = 1e-12) -> float:
    """Zero of ``d -> g_p(d)``; ``+inf``/``-inf`` when ``g_p`` never vanishes.

    ``g_p`` is increasing in ``d``, so its sign at ``d = +-1e6`` decides
    whether a finite zero exists.
    """
    def gp(d):
        return float(g(params, p, d))

    if gp(_TAIL) < 0.0:
        return math.inf
    if gp(-_TAIL) > 0.0:
        return -math.inf
    if gp(0.0) == 0.0:
        return 0.0
    # bracket on the side where the sign changes
    sign = 1.0 if gp(0.0) < 0.0 else -1.0
    hi = max(abs(p) / params.J, 1.0)
    while hi < _TAIL and gp(sign * hi) * gp(0.0) > 0.0:
        hi *= 2.0
    hi = min(hi, _TAIL)
    lo, hi = sorted((0.0, sign * hi))
    return optimize.brentq(gp, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)


@dataclass
class GlobalConvergenceReport:
    """Outcome of :func:`verify_global_convergence`.

    ``first_hit[i]`` is the first step at which state ``i`` was within
    ``tol`` of the equilibrium, or -1 if it never was within ``n_max`` steps.
    """

    first_hit: np.ndarray
    n_max: int
    tol: float
    lambda_c: float

    @property
    def converged(self) -> np.ndarray:
        return self.first_hit >= 0

    @property
    def n_failures(self) -> int:
        return int(np.sum(~self.converged))


def verify_global_convergence(
    params: MarketParams,
    initial_states,
    n_max: int = 1_000_000,
    tol: float = 1e-8,
    chunk: int = 1000,
) -> GlobalConvergenceReport:
    """Iterate all initial states together and record first entry into the ``tol`` ball.

    Orbits that have converged are dropped from the batch, so the cost is
    governed by the slowest one.

    Raises
    ------
    AssumptionViolatedError
        If ``b >= 1`` or ``lam > lambda_c``.
    """
    c = constants(params)
    if params.lam > c.lambda_c * (1.0 + 1e-12):
        raise AssumptionViolatedError(
            f"lambda = {params.lam!r} exceeds lambda_c = {c.lambda_c!r}"
        )
    s = np.asarray([tuple(st) for st in initial_states], dtype=float).reshape(-1, 2)
    first = np.full(len(s), -1, dtype=np.int64)
    p, d = s[:, 0].copy(), s[:, 1].copy()
    active = np.arange(len(s))
    done = 0
    while active.size and done <= n_max:
        n = min(chunk, n_max - done)
        ps, ds = simulate_batch(params, p[active], d[active], n)
        inside = np.hypot(ps - params.V, ds) < tol
        hit = inside.any(axis=0)
        first[active[hit]] = done + np.argmax(inside[:, hit], axis=0)
        p[active], d[active] = ps[-1], ds[-1]
        active = active[~hit]
        if n == 0:
            break
        done += n
    return GlobalConvergenceReport(first_hit=first, n_max=n_max, tol=tol, lambda_c=c.lambda_c)
