"""Finite-population market of speculators and fundamentalists.

``K`` agents each hold a private evaluation ``V + v`` of the asset, with
``v`` drawn afresh every step from the deviation distribution. At step
``n >= 1`` the price is first moved by the previous average decision,

    p_n = p_{n-1} + lam * dbar_{n-1},

then every agent buys (+1) or sells (-1):

    speculator     +1  iff  J * dbar_{n-1} - (p_n - V - v) > 0
    fundamentalist +1  iff              -(p_n - V - v) > 0

and ``dbar_n`` is the mean decision. The first ``S = floor(alpha K + 1/2)``
agents are speculators. As ``K`` grows the pair ``(p_n, dbar_n)`` follows
the deterministic map from the same starting point.

Randomness is counter based: step ``n`` of a run with seed ``s`` draws its
``K`` uniforms from a Philox stream keyed by ``(s, n)``, and agent ``k``
always takes the ``k``-th of them, so a trajectory depends on nothing but
its configuration.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import MarketParams, fmt_float, open_output, params_from_dict, params_to_dict, simulate
from .errors import InvalidParameterError

__all__ = [
    "HiamConfig",
    "HiamTrajectory",
    "HiamComparison",
    "ReplicateStats",
    "speculator_count",
    "run_hiam",
    "compare",
    "compare_to_deterministic",
    "replicate",
    "write_comparison_csv",
    "config_to_dict",
    "config_from_dict",
]

_SEED_MAX = 2 ** 64 - 1


@dataclass(frozen=True)
class HiamConfig:
    """One agent-market run.

    ``horizon`` is the number of steps; trajectories have ``horizon + 1``
    entries. ``seed`` is an unsigned 64-bit integer.
    """

    params: MarketParams
    K: int
    p0: float
    dbar0: float = 0.0
    horizon: int = 50
    seed: int = 0

    def __post_init__(self):
        for name in ("K", "horizon", "seed"):
            val = getattr(self, name)
            if isinstance(val, bool) or not isinstance(val, (int, np.integer)):
                raise InvalidParameterError(f"{name} must be an integer, got {val!r}")
            object.__setattr__(self, name, int(val))
        if self.K < 1:
            raise InvalidParameterError(f"K must be >= 1, got {self.K}")
        if self.horizon < 0:
            raise InvalidParameterError(f"horizon must be >= 0, got {self.horizon}")
        if not 0 <= self.seed <= _SEED_MAX:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")
        p0, dbar0 = float(self.p0), float(self.dbar0)
        if not (math.isfinite(p0) and math.isfinite(dbar0)):
            raise InvalidParameterError("p0 and dbar0 must be finite")
        if abs(dbar0) > 1.0:
            raise InvalidParameterError(f"dbar0 must lie in [-1, 1], got {dbar0!r}")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "dbar0", dbar0)


@dataclass
class HiamTrajectory:
    """Prices and average decisions, ``n = 0..horizon``.

    ``offsets`` holds ``p_n - V`` as integrated; ``prices`` is
    ``offsets + V``.
    """

    prices: np.ndarray
    demands: np.ndarray
    offsets: np.ndarray
    seed: int


def speculator_count(alpha: float, K: int) -> int:
    """``alpha * K`` rounded half up (``K = 1, alpha = 0.5`` gives one speculator)."""
    return int(math.floor(alpha * K + 0.5))


def _step_generator(seed: int, n: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(n,))))


def run_hiam(cfg: HiamConfig) -> HiamTrajectory:
    """Simulate the agent market for ``cfg.horizon`` steps."""
    prm = cfg.params
    K, S = cfg.K, speculator_count(prm.alpha, cfg.K)
    ppf = prm.dist.ppf
    x = np.empty(cfg.horizon + 1)
    dbar = np.empty(cfg.horizon + 1)
    x[0], dbar[0] = cfg.p0 - prm.V, cfg.dbar0
    for n in range(1, cfg.horizon + 1):
        x[n] = x[n - 1] + prm.lam * dbar[n - 1]
        v = ppf(_step_generator(cfg.seed, n).random(K))
        # rule: buy iff the private evaluation exceeds the (trend-adjusted) price
        buys = int(np.count_nonzero(v[:S] > x[n] - prm.J * dbar[n - 1]))
        buys += int(np.count_nonzero(v[S:] > x[n]))
        dbar[n] = (2 * buys - K) / K
    return HiamTrajectory(prices=x + prm.V, demands=dbar, offsets=x, seed=cfg.seed)


@dataclass
class HiamComparison:
    """Agent run next to the deterministic orbit from the same start."""

    stochastic: HiamTrajectory
    p_det: np.ndarray
    d_det: np.ndarray

    @property
    def abs_err_p(self) -> np.ndarray:
        return np.abs(self.stochastic.prices - self.p_det)

    @property
    def abs_err_d(self) -> np.ndarray:
        return np.abs(self.stochastic.demands - self.d_det)

    @property
    def sup_error(self) -> float:
        return float(max(self.abs_err_p.max(), self.abs_err_d.max()))


def compare(cfg: HiamConfig) -> HiamComparison:
    traj = run_hiam(cfg)
    if cfg.horizon == 0:
        p_det, d_det = np.array([cfg.p0]), np.array([cfg.dbar0])
    else:
        orb = simulate(cfg.params, (cfg.p0, cfg.dbar0), cfg.horizon)
        p_det, d_det = orb.p, orb.d
    return HiamComparison(stochastic=traj, p_det=p_det, d_det=d_det)


def compare_to_deterministic(cfg: HiamConfig) -> float:
    """``max_n max(|p_st - p|, |dbar_st - d|)`` over ``n = 0..horizon``."""
    return compare(cfg).sup_error


@dataclass(frozen=True)
class ReplicateStats:
    median: float
    q1: float
    q3: float
    errors: tuple[float, ...]

    @property
    def n_replicas(self) -> int:
        return len(self.errors)


def _workers() -> int:
    cap = os.environ.get("MDYN_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise InvalidParameterError(f"MDYN_THREADS must be an integer, got {cap!r}") from None
    return n


def replicate(cfg: HiamConfig, n_replicas: int, base_seed: int | None = None) -> ReplicateStats:
    """Sup errors of ``n_replicas`` runs with seeds ``base_seed + i``.

    ``base_seed`` defaults to ``cfg.seed``. Replicas may run on several
    threads (capped by ``MDYN_THREADS``); results do not depend on it.
    """
    if n_replicas < 1:
        raise InvalidParameterError("n_replicas must be >= 1")
    base = cfg.seed if base_seed is None else int(base_seed)
    cfgs = [replace(cfg, seed=base + i) for i in range(n_replicas)]
    workers = min(_workers(), n_replicas)
    if workers == 1:
        errs = [compare_to_deterministic(c) for c in cfgs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            errs = list(pool.map(compare_to_deterministic, cfgs))
    q1, med, q3 = np.percentile(errs, [25, 50, 75])
    return ReplicateStats(median=float(med), q1=float(q1), q3=float(q3), errors=tuple(errs))


def write_comparison_csv(cmp: HiamComparison, dest) -> None:
    st = cmp.stochastic
    ep, ed = cmp.abs_err_p, cmp.abs_err_d
    with open_output(dest) as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["n", "p_st", "dbar_st", "p_det", "d_det", "abs_err_p", "abs_err_d"])
        for n in range(len(st.prices)):
            out.writerow([n] + [fmt_float(v) for v in (
                st.prices[n], st.demands[n], cmp.p_det[n], cmp.d_det[n], ep[n], ed[n])])


def config_to_dict(cfg: HiamConfig) -> dict:
    out = params_to_dict(cfg.params)
    out.update(K=cfg.K, p0=cfg.p0, dbar0=cfg.dbar0, horizon=cfg.horizon, seed=cfg.seed)
    return out


def config_from_dict(obj: dict) -> HiamConfig:
    try:
        return HiamConfig(
            params=params_from_dict(obj), K=obj["K"], p0=obj["p0"],
            dbar0=obj.get("dbar0", 0.0), horizon=obj.get("horizon", 50), seed=obj.get("seed", 0),
        )
    except KeyError as exc:
        raise InvalidParameterError(f"missing parameter {exc.args[0]!r}") from None
