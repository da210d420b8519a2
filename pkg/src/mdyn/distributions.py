"""Distribution of individual deviations around the fundamental value.

The map only ever touches the distribution through ``cdf`` and its first
three derivatives, so an :class:`EvaluationDistribution` is a bundle of four
vectorised evaluators, an inverse cdf for sampling and ``balance(x) = 1 - 2 cdf(x)``.

Two constructors are provided:

* :func:`normal_zero_mean` -- the zero-mean Normal family, fully analytic.
* :func:`custom` -- user supplied evaluators.  Missing derivatives are
  synthesised by central differences and the choice is recorded in
  ``derivative_source``.  The shape conditions (``cdf(0) = 1/2``, unimodal
  density peaked at 0) are checked on a symmetric grid at construction.
  Zero mean and finite variance cannot be checked pointwise and are the
  caller's responsibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .errors import DegenerateDistributionError, InvalidParameterError

__all__ = [
    "EvaluationDistribution",
    "normal_zero_mean",
    "custom",
    "heterogeneity",
    "dist_to_dict",
    "dist_from_dict",
    "VALIDATION_GRID_SIZE",
]

VALIDATION_GRID_SIZE = 1001
_SQRT_2PI = math.sqrt(2.0 * math.pi)

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EvaluationDistribution:
    """Distribution function and its first three derivatives.

    Attributes
    ----------
    kind : str
        ``"normal"`` or ``"custom"``.
    cdf, pdf, pdf1, pdf2 : callable
        The distribution function and its first, second and third
        derivatives. All accept scalars or arrays.
    ppf : callable
        Inverse cdf, used to turn uniforms into deviations.
    balance : callable
        ``1 - 2 cdf(x)``. Supplied separately so that families with a closed
        form keep full relative precision near 0, where the map's
        nonlinearity lives.
    sigma : float or None
        Standard deviation for the Normal family.
    scale : float
        Typical width; sets finite-difference steps and validation range.
    derivative_source : str
        ``"analytic"`` or ``"finite-difference"``.
    """

    kind: str
    cdf: Evaluator = field(repr=False)
    pdf: Evaluator = field(repr=False)
    pdf1: Evaluator = field(repr=False)
    pdf2: Evaluator = field(repr=False)
    ppf: Evaluator = field(repr=False)
    sigma: float | None = None
    scale: float = 1.0
    derivative_source: str = "analytic"
    balance: Evaluator | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.balance is None:
            cdf = self.cdf
            object.__setattr__(self, "balance", lambda x: 1.0 - 2.0 * cdf(x))

    def _key(self):
        # Normal members are determined by sigma; anything else by its evaluators
        if self.kind == "normal":
            return ("normal", self.sigma)
        return (self.kind, self.cdf, self.pdf, self.pdf1, self.pdf2, self.ppf, self.scale)

    def __eq__(self, other):
        if not isinstance(other, EvaluationDistribution):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def peak_density(self) -> float:
        """``pdf(0)``, the maximal density."""
        return float(self.pdf(0.0))

    def validate(self, n: int = VALIDATION_GRID_SIZE, width: float = 10.0) -> None:
        """Raise :class:`InvalidParameterError` unless the shape conditions hold.

        Checks ``cdf(0) = 1/2``, ``pdf(x) <= pdf(0)``, strict monotonicity of
        the density on each side of 0, and that ``cdf`` is a nondecreasing
        map into [0, 1], on ``n`` symmetric points in ``[-width*scale, width*scale]``.
        """
        x = np.linspace(-width * self.scale, width * self.scale, n)
        c = np.asarray(self.cdf(x), dtype=float)
        f = np.asarray(self.pdf(x), dtype=float)
        c0 = float(self.cdf(0.0))
        f0 = float(self.pdf(0.0))
        if not math.isclose(c0, 0.5, rel_tol=0.0, abs_tol=1e-12):
            raise InvalidParameterError(f"cdf(0) must equal 1/2, got {c0!r}")
        if not f0 > 0.0:
            raise DegenerateDistributionError("pdf(0) must be positive")
        if np.any(c < 0.0) or np.any(c > 1.0) or np.any(np.diff(c) < 0.0):
            raise InvalidParameterError("cdf must be a nondecreasing map into [0, 1]")
        if np.any(f > f0):
            raise InvalidParameterError("density must attain its supremum at 0")
        neg, pos = f[x < 0], f[x > 0]
        # underflowed tails carry no shape information
        neg, pos = neg[neg > 0], pos[pos > 0]
        if np.any(np.diff(neg) <= 0.0) or np.any(np.diff(pos) >= 0.0):
            raise InvalidParameterError(
                "density must be strictly increasing on (-inf, 0) and strictly decreasing on (0, inf)"
            )


def normal_zero_mean(sigma: float) -> EvaluationDistribution:
    """Zero-mean Normal distribution with standard deviation ``sigma``."""
    sigma = float(sigma)
    if not (math.isfinite(sigma) and sigma > 0.0):
        raise InvalidParameterError(f"sigma must be a positive real, got {sigma!r}")
    norm_const = 1.0 / (sigma * _SQRT_2PI)
    inv_var = 1.0 / (sigma * sigma)

    def cdf(x):
        return special.ndtr(np.asarray(x, dtype=float) / sigma)

    def pdf(x):
        x = np.asarray(x, dtype=float)
        return norm_const * np.exp(-0.5 * x * x * inv_var)

    def pdf1(x):
        x = np.asarray(x, dtype=float)
        return -x * inv_var * pdf(x)

    def pdf2(x):
        x = np.asarray(x, dtype=float)
        return (x * x * inv_var - 1.0) * inv_var * pdf(x)

    def ppf(q):
        return sigma * special.ndtri(np.asarray(q, dtype=float))

    inv_scale = 1.0 / (sigma * math.sqrt(2.0))

    def balance(x):
        # 0 - erf keeps +0 at the origin
        return 0.0 - special.erf(np.asarray(x, dtype=float) * inv_scale)

    return EvaluationDistribution(
        kind="normal", cdf=cdf, pdf=pdf, pdf1=pdf1, pdf2=pdf2, ppf=ppf,
        sigma=sigma, scale=sigma, derivative_source="analytic", balance=balance,
    )


def _central_diff(fn: Evaluator, step: float) -> Evaluator:
    def deriv(x):
        x = np.asarray(x, dtype=float)
        return (np.asarray(fn(x + step)) - np.asarray(fn(x - step))) / (2.0 * step)
    return deriv


def _bisect_ppf(cdf: Evaluator, scale: float) -> Evaluator:
    # bracket by doubling, then bisect well past float resolution
    def ppf(q):
        q = np.asarray(q, dtype=float)
        lo = np.full(q.shape, -scale)
        hi = np.full(q.shape, scale)
        for _ in range(64):
            mask = np.asarray(cdf(lo)) > q
            if not mask.any():
                break
            lo = np.where(mask, 2.0 * lo, lo)
        for _ in range(64):
            mask = np.asarray(cdf(hi)) < q
            if not mask.any():
                break
            hi = np.where(mask, 2.0 * hi, hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = np.asarray(cdf(mid)) < q
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = 0.5 * (lo + hi)
        out = np.where(q <= 0.0, -np.inf, out)
        out = np.where(q >= 1.0, np.inf, out)
        return out if out.ndim else float(out)
    return ppf


def custom(
    cdf: Evaluator,
    pdf: Evaluator,
    pdf1: Evaluator | None = None,
    pdf2: Evaluator | None = None,
    ppf: Evaluator | None = None,
    scale: float = 1.0,
) -> EvaluationDistribution:
    """Wrap user supplied evaluators and validate the shape conditions.

    ``pdf1``/``pdf2`` default to central differences of ``pdf``/``pdf1``
    with step ``1e-6 * scale``; ``ppf`` defaults to numerical inversion of
    ``cdf``.
    """
    if not (math.isfinite(scale) and scale > 0.0):
        raise InvalidParameterError("scale must be a positive real")
    source = "analytic"
    step = 1e-6 * scale
    if pdf1 is None:
        pdf1 = _central_diff(pdf, step)
        source = "finite-difference"
    if pdf2 is None:
        # second difference of pdf is better conditioned than differencing a synthesised pdf1
        if source == "finite-difference":
            h = 1e-4 * scale

            def pdf2(x, _pdf=pdf, _h=h):
                x = np.asarray(x, dtype=float)
                return (np.asarray(_pdf(x + _h)) - 2.0 * np.asarray(_pdf(x)) + np.asarray(_pdf(x - _h))) / (_h * _h)
        else:
            pdf2 = _central_diff(pdf1, step)
        source = "finite-difference"
    if ppf is None:
        ppf = _bisect_ppf(cdf, scale)
    dist = EvaluationDistribution(
        kind="custom", cdf=cdf, pdf=pdf, pdf1=pdf1, pdf2=pdf2, ppf=ppf,
        sigma=None, scale=float(scale), derivative_source=source,
    )
    dist.validate()
    return dist


def heterogeneity(dist: EvaluationDistribution) -> float:
    """Dispersion of individual evaluations, ``1 / pdf(0)``."""
    f0 = dist.peak_density
    if not f0 > 0.0:
        raise DegenerateDistributionError("pdf(0) = 0: heterogeneity is undefined")
    return 1.0 / f0


def dist_to_dict(dist: EvaluationDistribution) -> dict:
    if dist.kind != "normal":
        raise InvalidParameterError("only the Normal family has a JSON representation")
    return {"kind": "normal", "sigma": dist.sigma}


def dist_from_dict(obj: dict) -> EvaluationDistribution:
    """Inverse of :func:`dist_to_dict`; accepts ``{"kind": "normal", "sigma": s}``."""
    if "dist" in obj and isinstance(obj["dist"], dict):
        obj = obj["dist"]
    kind = obj.get("kind")
    if kind != "normal":
        raise InvalidParameterError(f"unsupported distribution kind {kind!r}")
    return normal_zero_mean(obj["sigma"])
