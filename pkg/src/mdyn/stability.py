"""Local stability of the equilibrium from the linearisation.

Everything here depends on the parameters only through

    u = 2 * alpha * J * pdf(0),    w = 2 * lam * pdf(0),

the Jacobian at the origin having trace ``1 + u - w`` and determinant ``u``.
The (u, w) quadrant splits into the regions

    R1a/R1b   complex pair (discriminant <= 0), stable iff u < 1
    R2, R3    real roots, u < 1, stable
    R4, R5    real roots, u > 1, unstable
    R6        w > 2 + 2u, a root below -1

Points within ``boundary_margin`` of a separating curve are reported as
``Boundary`` with an indeterminate verdict.
"""

from __future__ import annotations

import cmath
import csv
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import MarketParams, fmt_float, open_output

__all__ = [
    "UWCoordinates",
    "EigenData",
    "Region",
    "Verdict",
    "StabilityReport",
    "uw_of",
    "jacobian_at_origin",
    "eigen_from_uw",
    "eigen_at_origin",
    "classify",
    "classify_params",
    "phase_diagram",
    "region_counts",
    "write_phase_diagram_csv",
]


@dataclass(frozen=True)
class UWCoordinates:
    u: float
    w: float


@dataclass(frozen=True)
class EigenData:
    delta: float
    mu1: complex
    mu2: complex
    spectral_radius: float


class Region(str, Enum):
    R1a = "R1a"
    R1b = "R1b"
    R2 = "R2"
    R3 = "R3"
    R4 = "R4"
    R5 = "R5"
    R6 = "R6"
    BOUNDARY = "Boundary"


class Verdict(str, Enum):
    STABLE = "LocallyAsymptoticallyStable"
    UNSTABLE = "Unstable"
    INDETERMINATE = "Indeterminate"


_STABLE = {Region.R1a, Region.R2, Region.R3}
_UNSTABLE = {Region.R1b, Region.R4, Region.R5, Region.R6}


@dataclass(frozen=True)
class StabilityReport:
    uw: UWCoordinates
    eigen: EigenData
    region: Region
    verdict: Verdict


def uw_of(params: MarketParams) -> UWCoordinates:
    f0 = params.dist.peak_density
    return UWCoordinates(u=2.0 * params.alpha * params.J * f0, w=2.0 * params.lam * f0)


def jacobian_at_origin(params: MarketParams) -> np.ndarray:
    f0 = params.dist.peak_density
    return np.array([
        [1.0, params.lam],
        [-2.0 * f0, 2.0 * (params.alpha * params.J - params.lam) * f0],
    ])


def eigen_from_uw(u: float, w: float) -> EigenData:
    """Discriminant and roots of ``mu^2 - (1 + u - w) mu + u``.

    ``mu1`` carries the ``+sqrt`` branch, so for a complex pair it is the
    root with positive imaginary part.
    """
    tr = 1.0 + u - w
    delta = tr * tr - 4.0 * u
    if delta >= 0.0:
        sq = math.sqrt(delta)
        mu1 = complex(0.5 * (tr + sq))
        mu2 = complex(0.5 * (tr - sq))
    else:
        sq = cmath.sqrt(delta)
        mu1 = 0.5 * (tr + sq)
        mu2 = 0.5 * (tr - sq)
    return EigenData(delta=delta, mu1=mu1, mu2=mu2, spectral_radius=max(abs(mu1), abs(mu2)))


def eigen_at_origin(params: MarketParams) -> EigenData:
    uw = uw_of(params)
    return eigen_from_uw(uw.u, uw.w)


def _near_boundary(u: float, w: float, delta: float, margin: float) -> bool:
    if abs(u - 1.0) <= margin:
        return True
    su = math.sqrt(u)
    if abs(w - (1.0 - su) ** 2) <= margin or abs(w - (1.0 + su) ** 2) <= margin:
        return True
    if abs(delta) <= margin:
        return True
    if delta > 0.0 and abs(w - (1.0 + u)) <= margin:
        return True
    # for u > 1 the line w = 2 + 2u separates two unstable regions; ties go to R5
    return u < 1.0 and abs(w - (2.0 + 2.0 * u)) <= margin


def _region(u: float, w: float, delta: float) -> Region:
    if delta <= 0.0:
        return Region.R1a if u < 1.0 else Region.R1b
    if u < 1.0:
        if w < 1.0 + u:
            return Region.R2
        if w < 2.0 + 2.0 * u:
            return Region.R3
        if w > 2.0 + 2.0 * u:
            return Region.R6
        return Region.BOUNDARY
    if u > 1.0:
        if w < u - 1.0:
            return Region.R4
        if 1.0 + u < w <= 2.0 + 2.0 * u:
            return Region.R5
        if w > 2.0 + 2.0 * u:
            return Region.R6
    return Region.BOUNDARY


def classify(uw: UWCoordinates, boundary_margin: float = 1e-9) -> StabilityReport:
    """Assign a region of the (u, w) phase diagram and a stability verdict."""
    u, w = float(uw.u), float(uw.w)
    if not (u > 0.0 and w > 0.0):
        raise ValueError("u and w must be positive")
    eig = eigen_from_uw(u, w)
    if _near_boundary(u, w, eig.delta, boundary_margin):
        region = Region.BOUNDARY
    else:
        region = _region(u, w, eig.delta)
    if region in _STABLE:
        verdict = Verdict.STABLE
    elif region in _UNSTABLE:
        verdict = Verdict.UNSTABLE
    else:
        verdict = Verdict.INDETERMINATE
    return StabilityReport(uw=UWCoordinates(u, w), eigen=eig, region=region, verdict=verdict)


def classify_params(params: MarketParams, boundary_margin: float = 1e-9) -> StabilityReport:
    return classify(uw_of(params), boundary_margin)


def phase_diagram(u_range, w_range, grid, boundary_margin: float = 1e-9):
    """Classify a regular grid of (u, w) points.

    ``u_range``/``w_range`` are ``(lo, hi)`` pairs and ``grid`` is
    ``(n_u, n_w)``.  Rows vary ``w`` slowest, so the returned list is in
    row-major order with index ``i_w * n_u + i_u``.
    """
    n_u, n_w = grid
    us = np.linspace(u_range[0], u_range[1], n_u)
    ws = np.linspace(w_range[0], w_range[1], n_w)
    return [classify(UWCoordinates(float(u), float(w)), boundary_margin) for w in ws for u in us]


def region_counts(reports) -> dict[str, int]:
    counts = Counter(r.region.value for r in reports)
    return {reg.value: counts.get(reg.value, 0) for reg in Region}


def write_phase_diagram_csv(reports, dest) -> None:
    with open_output(dest) as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["u", "w", "delta", "region", "verdict", "spectral_radius"])
        for r in reports:
            out.writerow([
                fmt_float(r.uw.u), fmt_float(r.uw.w), fmt_float(r.eigen.delta),
                r.region.value, r.verdict.value, fmt_float(r.eigen.spectral_radius),
            ])
