"""The planar price/excess-demand map and orbit tools.

One step of the map takes ``(p, d)`` to

    p' = p + lam * d
    d' = alpha * [1 - 2 Phi(p' - V - J d)] + (1 - alpha) * [1 - 2 Phi(p' - V)]

i.e. the updated price enters the demand update.  With ``V = 0`` this is the
original two-dimensional system; a nonzero fundamental value ``V`` only
shifts prices.  Orbits are integrated in price-minus-value coordinates so
that runs with different ``V`` are exact translates of each other.
"""

from __future__ import annotations

import csv
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .distributions import EvaluationDistribution, dist_from_dict, dist_to_dict, normal_zero_mean
from .errors import InsufficientDataError, InvalidParameterError

__all__ = [
    "MarketParams",
    "State",
    "Orbit",
    "OmegaKind",
    "OmegaConfig",
    "OmegaLimitVerdict",
    "step",
    "g",
    "simulate",
    "simulate_batch",
    "detect_omega_limit",
    "write_orbit_csv",
    "params_to_dict",
    "params_from_dict",
]


@dataclass(frozen=True)
class MarketParams:
    """Parameters of the map.

    ``alpha`` is the proportion of speculators, ``J`` the speculative trend,
    ``lam`` the feedback of excess demand on the price increment, ``V`` the
    market fundamental value and ``dist`` the distribution of individual
    deviations around it.
    """

    alpha: float
    J: float
    lam: float
    V: float = 0.0
    dist: EvaluationDistribution = field(default_factory=lambda: normal_zero_mean(1.0))

    def __post_init__(self):
        for name in ("alpha", "J", "lam", "V"):
            val = getattr(self, name)
            if not isinstance(val, (int, float, np.floating, np.integer)) or not math.isfinite(val):
                raise InvalidParameterError(f"{name} must be a finite real, got {val!r}")
            object.__setattr__(self, name, float(val))
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameterError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not self.J > 0.0:
            raise InvalidParameterError(f"J must be positive, got {self.J!r}")
        if not self.lam > 0.0:
            raise InvalidParameterError(f"lambda must be positive, got {self.lam!r}")

    def replace(self, **changes) -> "MarketParams":
        kw = dict(alpha=self.alpha, J=self.J, lam=self.lam, V=self.V, dist=self.dist)
        kw.update(changes)
        return MarketParams(**kw)


def params_to_dict(params: MarketParams) -> dict:
    return {
        "alpha": params.alpha, "J": params.J, "lambda": params.lam, "V": params.V,
        "dist": dist_to_dict(params.dist),
    }


def params_from_dict(obj: dict) -> MarketParams:
    """Inverse of :func:`params_to_dict`; ``dist`` defaults to the standard Normal."""
    try:
        dist = dist_from_dict(obj["dist"]) if "dist" in obj else normal_zero_mean(1.0)
        return MarketParams(
            alpha=obj["alpha"], J=obj["J"], lam=obj["lambda"], V=obj.get("V", 0.0), dist=dist,
        )
    except KeyError as exc:
        raise InvalidParameterError(f"missing parameter {exc.args[0]!r}") from None


class State(NamedTuple):
    p: float
    d: float


def g(params: MarketParams, p, d):
    """Demand update at price argument ``p`` (``V`` already subtracted).

    Vectorised over ``p`` and ``d``.  Returns values in [-1, 1].
    """
    bal = params.dist.balance
    a = params.alpha
    return a * bal(p - params.J * d) + (1.0 - a) * bal(p)


def _check_finite(*vals):
    for v in vals:
        if not np.all(np.isfinite(v)):
            raise InvalidParameterError("state must be finite")


def step(params: MarketParams, s: State) -> State:
    """Apply the map once."""
    p, d = s
    _check_finite(p, d)
    p_new = p + params.lam * d
    d_new = g(params, p_new - params.V, d)
    return State(float(p_new), float(d_new))


@dataclass
class Orbit:
    """A finite trajectory ``(p_n, d_n)``, ``n = 0..len-1``.

    ``diverged`` is set when integration stopped early because the state
    became non-finite; the arrays then hold only the finite prefix.
    """

    p: np.ndarray
    d: np.ndarray
    params: MarketParams
    diverged: bool = False

    def __len__(self):
        return len(self.p)

    def __getitem__(self, n) -> State:
        return State(float(self.p[n]), float(self.d[n]))

    @property
    def states(self) -> list[State]:
        return [State(float(a), float(b)) for a, b in zip(self.p, self.d)]

    def norms(self) -> np.ndarray:
        """Euclidean distance of each state from the equilibrium ``(V, 0)``."""
        return np.hypot(self.p - self.params.V, self.d)


def simulate(params: MarketParams, s0: State, n_steps: int) -> Orbit:
    """Iterate the map ``n_steps`` times from ``s0``."""
    n_steps = int(n_steps)
    if n_steps < 1:
        raise InvalidParameterError("n_steps must be >= 1")
    p0, d0 = float(s0[0]), float(s0[1])
    _check_finite(p0, d0)
    bal = params.dist.balance
    a, J, lam, V = params.alpha, params.J, params.lam, params.V
    xs = np.empty(n_steps + 1)
    ds = np.empty(n_steps + 1)
    x, d = p0 - V, d0
    xs[0], ds[0] = x, d
    diverged = False
    last = n_steps
    for n in range(1, n_steps + 1):
        x = x + lam * d
        d = a * float(bal(x - J * d)) + (1.0 - a) * float(bal(x))
        if not (math.isfinite(x) and math.isfinite(d)):
            diverged = True
            last = n - 1
            break
        xs[n], ds[n] = x, d
    xs, ds = xs[: last + 1], ds[: last + 1]
    return Orbit(p=xs + V, d=ds, params=params, diverged=diverged)


def simulate_batch(params: MarketParams, p0, d0, n_steps: int):
    """Iterate many initial states at once.

    Returns arrays ``(p, d)`` of shape ``(n_steps + 1, m)``.
    """
    x = np.asarray(p0, dtype=float) - params.V
    d = np.asarray(d0, dtype=float).copy()
    _check_finite(x, d)
    out_x = np.empty((n_steps + 1,) + x.shape)
    out_d = np.empty_like(out_x)
    out_x[0], out_d[0] = x, d
    for n in range(1, n_steps + 1):
        x = x + params.lam * d
        d = g(params, x, d)
        out_x[n], out_d[n] = x, d
    return out_x + params.V, out_d


class OmegaKind(str, Enum):
    CONVERGES_TO_ORIGIN = "ConvergesToOrigin"
    LIMIT_CYCLE = "LimitCycle"
    DIVERGES = "Diverges"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class OmegaConfig:
    """Thresholds for :func:`detect_omega_limit`."""

    transient_fraction: float = 0.2
    window: int = 50
    tol_origin: float = 1e-8
    tol_cycle: float = 1e-4
    cycle_rel_tol: float = 0.05
    escape_radius: float = 1e6
    min_revolutions: int = 3


@dataclass(frozen=True)
class OmegaLimitVerdict:
    kind: OmegaKind
    transient_steps: int
    radius_estimate: float | None = None
    diagnostics: dict = field(default_factory=dict)


def detect_omega_limit(orbit: Orbit, config: OmegaConfig | None = None) -> OmegaLimitVerdict:
    """Heuristic classification of where an orbit ends up.

    After discarding a transient, the tail is scanned revolution by
    revolution around the equilibrium. A stable per-revolution maximum
    radius indicates an invariant closed curve; its mean is reported as
    ``radius_estimate``.
    """
    cfg = config or OmegaConfig()
    n = len(orbit)
    transient = int(cfg.transient_fraction * n)
    if n < transient + cfg.window or n < 2:
        raise InsufficientDataError(
            f"orbit of length {n} is shorter than transient ({transient}) + window ({cfg.window})"
        )
    r = orbit.norms()
    diag = {"final_norm": float(r[-1]), "max_norm": float(np.max(r))}

    if orbit.diverged or diag["max_norm"] > cfg.escape_radius:
        return OmegaLimitVerdict(OmegaKind.DIVERGES, transient, None, diag)
    if r[-1] < cfg.tol_origin:
        return OmegaLimitVerdict(OmegaKind.CONVERGES_TO_ORIGIN, transient, None, diag)

    tail_r = r[transient:]
    mean_r = float(np.mean(tail_r))
    diag["mean_radius"] = mean_r
    if mean_r <= cfg.tol_cycle:
        return OmegaLimitVerdict(OmegaKind.UNDETERMINED, transient, None, diag)

    theta = np.unwrap(np.arctan2(orbit.d[transient:], orbit.p[transient:] - orbit.params.V))
    turns = np.floor((theta - theta[0]) / (2.0 * np.pi)).astype(np.int64)
    turns = np.abs(turns)
    n_rev = int(turns.max())
    diag["revolutions"] = float(n_rev)
    if n_rev < cfg.min_revolutions + 1:
        return OmegaLimitVerdict(OmegaKind.UNDETERMINED, transient, None, diag)
    # drop the last, incomplete revolution
    complete = turns < n_rev
    per_rev = np.zeros(n_rev)
    np.maximum.at(per_rev, turns[complete], tail_r[complete])
    rel_dev = float(np.std(per_rev) / np.mean(per_rev))
    diag["per_revolution_rel_dev"] = rel_dev
    if rel_dev < cfg.cycle_rel_tol:
        return OmegaLimitVerdict(OmegaKind.LIMIT_CYCLE, transient, float(np.mean(per_rev)), diag)
    return OmegaLimitVerdict(OmegaKind.UNDETERMINED, transient, None, diag)


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


@contextmanager
def open_output(dest):
    """Yield ``dest`` if it is already a text stream, else open it for writing."""
    if hasattr(dest, "write"):
        yield dest
    else:
        with open(dest, "w", newline="") as fh:
            yield fh


def write_orbit_csv(orbit: Orbit, dest) -> None:
    """Write ``n,p,d`` rows with 17 significant digits to a path or stream."""
    with open_output(dest) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "p", "d"])
        for i, (p, d) in enumerate(zip(orbit.p, orbit.d)):
            w.writerow([i, fmt_float(p), fmt_float(d)])
