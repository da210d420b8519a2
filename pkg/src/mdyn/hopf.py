"""Neimark-Sacker (discrete Hopf) bifurcation of the equilibrium.

A one-parameter family ``eta -> MarketParams`` crosses the unit circle when
``u(eta) = 2 alpha J pdf(0)`` passes through 1 with complex eigenvalues.
At that point the Jacobian is conjugated to a rotation block by

    P = [[1, 0], [-pdf(0), sqrt(1 - eps^2) / lam]],   eps = 1 - lam * pdf(0),

and the cubic coefficient ``A`` of the polar normal form
``r -> |mu| r - A r^3`` is assembled from the second and third partial
derivatives of the nonlinear remainder ``(G1, G2)`` at the origin.
``A > 0`` means the bifurcation is supercritical: a small attracting closed
curve appears on the unstable side.

The eigenvalue entering the coefficient formula is read off the rotation
block ``[[a, -b], [b, a]]`` as ``a + i b``.  For the block produced by ``P``
this is the root with *negative* imaginary part; using its conjugate flips
the sign of the cubic term.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable

import numpy as np

from .distributions import normal_zero_mean
from .dynamics import (
    MarketParams,
    OmegaConfig,
    OmegaLimitVerdict,
    State,
    detect_omega_limit,
    fmt_float,
    g,
    open_output,
    simulate,
)
from .errors import AssumptionViolatedError, NumericError
from .stability import eigen_at_origin, jacobian_at_origin, uw_of

__all__ = [
    "ParamFamily",
    "HopfConditions",
    "HopfVerdict",
    "HopfReport",
    "find_eta0",
    "check_conditions",
    "coefficient_A",
    "coefficient_A_numeric",
    "closed_form_A",
    "coefficient_from_xi",
    "xi_coefficients",
    "hopf_scan",
    "write_hopf_scan_csv",
    "normal_family_grid",
]


@dataclass(frozen=True)
class ParamFamily:
    """Smooth one-parameter family of market parameters."""

    at: Callable[[float], MarketParams]
    eta_range: tuple[float, float]

    @classmethod
    def varying(cls, base: MarketParams, name: str, eta_range) -> "ParamFamily":
        """Family in which parameter ``name`` ("alpha", "J" or "lam") equals eta."""
        if name not in ("alpha", "J", "lam"):
            raise ValueError(f"cannot vary {name!r}")
        return cls(at=lambda eta: base.replace(**{name: eta}), eta_range=tuple(eta_range))

    def u(self, eta: float) -> float:
        return uw_of(self.at(eta)).u

    def w(self, eta: float) -> float:
        return uw_of(self.at(eta)).w

    def assumption_check(self, n: int = 101) -> dict:
        """Monotonicity of alpha, J, pdf(0) and negativity of the discriminant on a grid."""
        etas = np.linspace(*self.eta_range, n)
        ps = [self.at(float(e)) for e in etas]
        alpha = np.array([p.alpha for p in ps])
        J = np.array([p.J for p in ps])
        f0 = np.array([p.dist.peak_density for p in ps])
        deltas = np.array([eigen_at_origin(p).delta for p in ps])
        return {
            "nondecreasing": bool(
                np.all(np.diff(alpha) >= 0) and np.all(np.diff(J) >= 0) and np.all(np.diff(f0) >= 0)
            ),
            "delta_negative": bool(np.all(deltas < 0)),
            "max_delta": float(deltas.max()),
        }


def find_eta0(family: ParamFamily, tol: float = 1e-12, max_iter: int = 400) -> float:
    """Locate the parameter where ``u(eta) = 1`` by bisection."""
    lo, hi = map(float, family.eta_range)
    f_lo, f_hi = family.u(lo) - 1.0, family.u(hi) - 1.0
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise AssumptionViolatedError(
            f"u(eta) - 1 does not change sign on [{lo}, {hi}] (values {f_lo:.3g}, {f_hi:.3g})"
        )
    best, best_f = (lo, abs(f_lo)) if abs(f_lo) < abs(f_hi) else (hi, abs(f_hi))
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = family.u(mid) - 1.0
        if abs(f_mid) < best_f:
            best, best_f = mid, abs(f_mid)
        if f_mid == 0.0 or (abs(f_mid) <= tol and hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(mid))):
            return mid
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo <= np.finfo(float).eps * max(1.0, abs(mid)):
            break
    if best_f > tol:
        raise NumericError(f"bisection stalled with |u - 1| = {best_f:.3g}")
    return best


@dataclass(frozen=True)
class HopfConditions:
    fixed_point: bool
    complex_pair: bool
    transversal: bool
    nonresonant: bool

    @property
    def all(self) -> bool:
        return self.fixed_point and self.complex_pair and self.transversal and self.nonresonant


def check_conditions(family: ParamFamily, eta0: float, n_neighbourhood: int = 21) -> HopfConditions:
    """Evaluate the four non-degeneracy hypotheses of the bifurcation at ``eta0``."""
    lo, hi = family.eta_range
    width = hi - lo
    if not lo < eta0 < hi:
        raise AssumptionViolatedError("eta0 must be interior to the family range")
    rad = 0.1 * width
    etas = np.linspace(max(lo, eta0 - rad), min(hi, eta0 + rad), n_neighbourhood)
    complex_nb = all(eigen_at_origin(family.at(float(e))).delta < 0.0 for e in etas)
    eig0 = eigen_at_origin(family.at(eta0))
    on_circle = abs(abs(eig0.mu1) - 1.0) <= 1e-10
    h = 1e-6 * width
    # |mu| = sqrt(u) whenever the pair is complex
    dmod = (math.sqrt(family.u(eta0 + h)) - math.sqrt(family.u(eta0 - h))) / (2.0 * h)
    mu0 = eig0.mu1
    nonres = min(abs(mu0 ** k - 1.0) for k in range(1, 5)) > 1e-8
    fixed = all(abs(float(g(family.at(float(e)), 0.0, 0.0))) <= 1e-12 for e in etas)
    return HopfConditions(
        fixed_point=bool(fixed),
        complex_pair=bool(complex_nb and eig0.delta < 0.0 and on_circle),
        transversal=bool(dmod > 0.0),
        nonresonant=bool(nonres),
    )


class HopfVerdict(str, Enum):
    SUPERCRITICAL = "Supercritical"
    SUBCRITICAL = "Subcritical"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class HopfReport:
    eta0: float
    mu0: complex
    mu_normal_form: complex
    epsilon: float
    k_coeffs: tuple[float, float, float, float]
    xi20: complex
    xi11: complex
    xi02: complex
    xi21: complex
    A: float
    conditions: HopfConditions
    verdict: HopfVerdict
    partials: dict = field(default_factory=dict, repr=False)


def _transform(params: MarketParams):
    f0 = params.dist.peak_density
    lam = params.lam
    eps = 1.0 - lam * f0
    if eps * eps >= 1.0:
        raise AssumptionViolatedError(f"1 - eps^2 must be positive (eps = {eps!r})")
    s = math.sqrt(1.0 - eps * eps)
    P = np.array([[1.0, 0.0], [-f0, s / lam]])
    Pinv = np.array([[1.0, 0.0], [lam * f0 / s, lam / s]])
    return eps, s, P, Pinv


def _k_coeffs(params: MarketParams, eps: float, s: float):
    f0 = params.dist.peak_density
    lam, J = params.lam, params.J
    return (1.0 - (lam - J) * f0, s * (lam - J) / lam, 1.0 - lam * f0, s)


_ORDERS = [(2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)]


def xi_coefficients(G1: dict, G2: dict):
    """Complex coefficients from the partials of the remainder.

    ``G1``/``G2`` map ``(i, j)`` to the derivative of order ``i`` in ``x1``
    and ``j`` in ``x2`` at the origin.
    """
    xi20 = ((G1[2, 0] - G1[0, 2] + 2 * G2[1, 1]) + 1j * (G2[2, 0] - G2[0, 2] - 2 * G1[1, 1])) / 8
    xi11 = ((G1[2, 0] + G1[0, 2]) + 1j * (G2[2, 0] + G2[0, 2])) / 4
    xi02 = ((G1[2, 0] - G1[0, 2] - 2 * G2[1, 1]) + 1j * (G2[2, 0] - G2[0, 2] - 2 * G1[1, 1])) / 8
    xi21 = (
        (G1[3, 0] + G1[1, 2] + G2[2, 1] + G2[0, 3])
        + 1j * (G2[3, 0] + G2[1, 2] - G1[2, 1] - G1[0, 3])
    ) / 16
    return xi20, xi11, xi02, xi21


def coefficient_from_xi(mu: complex, xi20: complex, xi11: complex, xi02: complex, xi21: complex) -> float:
    """Cubic normal-form coefficient ``A`` for eigenvalue ``mu`` on the unit circle."""
    mub = mu.conjugate()
    first = ((1 - 2 * mu) * mub ** 2 / (1 - mu) * xi11 * xi20).real
    return float(first + 0.5 * abs(xi11) ** 2 + abs(xi02) ** 2 - (mub * xi21).real)


def _analytic_partials(params: MarketParams, s: float, K):
    K1, K2, K3, K4 = K
    a = params.alpha
    f2 = float(params.dist.pdf1(0.0))
    f3 = float(params.dist.pdf2(0.0))
    G1 = {o: 0.0 for o in _ORDERS}
    G2 = {}
    for (i, j) in _ORDERS:
        c = -2.0 * params.lam / s * (f2 if i + j == 2 else f3)
        G2[i, j] = c * (a * K1 ** i * K2 ** j + (1.0 - a) * K3 ** i * K4 ** j)
    return G1, G2


def _remainder(params: MarketParams, P, Pinv, B):
    lam, J, a = params.lam, params.J, params.alpha
    bal = params.dist.balance

    def G(x1, x2):
        p = P[0, 0] * x1 + P[0, 1] * x2
        d = P[1, 0] * x1 + P[1, 1] * x2
        pn = p + lam * d
        dn = a * bal(pn - J * d) + (1.0 - a) * bal(pn)
        y = Pinv @ np.array([pn, float(dn)])
        return y - B @ np.array([x1, x2])

    return G


def _fd_partials(G, h: float):
    e = (np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    def second(i, j, h):
        tot = 0.0
        for si in (1, -1):
            for sj in (1, -1):
                tot = tot + si * sj * G(*(si * h * e[i] + sj * h * e[j]))
        return tot / (4 * h * h)

    def third(i, j, k, h):
        tot = 0.0
        for si in (1, -1):
            for sj in (1, -1):
                for sk in (1, -1):
                    tot = tot + si * sj * sk * G(*(si * h * e[i] + sj * h * e[j] + sk * h * e[k]))
        return tot / (8 * h ** 3)

    def richardson(fn, *idx):
        return (4.0 * fn(*idx, h / 2) - fn(*idx, h)) / 3.0

    out = {}
    for (i, j) in _ORDERS:
        dirs = [0] * i + [1] * j
        out[i, j] = richardson(second, *dirs) if i + j == 2 else richardson(third, *dirs)
    G1 = {k: float(v[0]) for k, v in out.items()}
    G2 = {k: float(v[1]) for k, v in out.items()}
    return G1, G2


def _report(family, eta0, pipeline) -> HopfReport:
    params = family.at(eta0).replace(V=0.0)
    conds = check_conditions(family, eta0)
    eps, s, P, Pinv = _transform(params)
    M = jacobian_at_origin(params)
    B = Pinv @ M @ P
    mu_nf = complex(B[0, 0], B[1, 0])
    K = _k_coeffs(params, eps, s)
    if pipeline == "analytic":
        G1, G2 = _analytic_partials(params, s, K)
    else:
        G1, G2 = _fd_partials(_remainder(params, P, Pinv, B), pipeline)
    xi20, xi11, xi02, xi21 = xi_coefficients(G1, G2)
    A = coefficient_from_xi(mu_nf, xi20, xi11, xi02, xi21)
    if conds.all and A > 0:
        verdict = HopfVerdict.SUPERCRITICAL
    elif conds.all and A < 0:
        verdict = HopfVerdict.SUBCRITICAL
    else:
        verdict = HopfVerdict.INCONCLUSIVE
    return HopfReport(
        eta0=eta0, mu0=eigen_at_origin(params).mu1, mu_normal_form=mu_nf, epsilon=eps,
        k_coeffs=K, xi20=xi20, xi11=xi11, xi02=xi02, xi21=xi21, A=A,
        conditions=conds, verdict=verdict, partials={"G1": G1, "G2": G2},
    )


def coefficient_A(family: ParamFamily, eta0: float) -> HopfReport:
    """Cubic coefficient from closed-form partials of the remainder.

    Second partials are multiples of ``pdf1(0)``, third partials of
    ``pdf2(0)``; see :func:`_analytic_partials`.
    """
    return _report(family, eta0, "analytic")


def coefficient_A_numeric(family: ParamFamily, eta0: float, fd_step: float = 1e-4) -> HopfReport:
    """Same as :func:`coefficient_A` but differentiating the remainder numerically.

    The remainder is evaluated through the distribution function only, so
    this checks the analytic derivative bookkeeping end to end.  Third
    derivatives use a central stencil with one Richardson step.
    """
    return _report(family, eta0, float(fd_step))


def closed_form_A(J: float, phi3: float) -> float:
    """``A`` when ``lam = 1/2``, ``pdf(0) = 1`` and ``pdf1(0) = 0`` at the critical point.

    There ``alpha = 1/(2J)`` and the coefficient reduces to
    ``-pdf2(0) * (4 J^2 - 2 J + 1) / 16``, positive for every ``J`` whenever
    ``pdf2(0) < 0``.
    """
    return -phi3 * (4.0 * J * J - 2.0 * J + 1.0) / 16.0


def hopf_scan(
    family: ParamFamily,
    etas: Iterable[float],
    s0: State,
    n_steps: int,
    config: OmegaConfig | None = None,
) -> list[tuple[float, OmegaLimitVerdict]]:
    """Simulate at each eta and classify the orbit's long-run behaviour."""
    lo, hi = family.eta_range
    out = []
    for eta in etas:
        eta = float(eta)
        if not lo <= eta <= hi:
            raise ValueError(f"eta={eta} outside family range {family.eta_range}")
        orbit = simulate(family.at(eta), State(*s0), n_steps)
        out.append((eta, detect_omega_limit(orbit, config)))
    return out


def write_hopf_scan_csv(family: ParamFamily, scan, report: HopfReport | None, dest) -> None:
    with open_output(dest) as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["eta", "u", "w", "A", "verdict", "omega_kind", "radius"])
        for eta, v in scan:
            out.writerow([
                fmt_float(eta), fmt_float(family.u(eta)), fmt_float(family.w(eta)),
                "" if report is None else fmt_float(report.A),
                "" if report is None else report.verdict.value,
                v.kind.value,
                "" if v.radius_estimate is None else fmt_float(v.radius_estimate),
            ])


def normal_family_grid(alphas, ws, sigma: float = 1.0, fd_step: float = 1e-4) -> list[dict]:
    """Cubic coefficient across Normal-distribution families.

    For each ``alpha`` and target ``w`` the feedback is fixed so that
    ``2 lam pdf(0) = w`` and the family varies ``J`` through the critical
    value ``1 / (2 alpha pdf(0))``.  Each row carries the analytic and
    finite-difference coefficients and the hypothesis flags.
    """
    dist = normal_zero_mean(sigma)
    f0 = dist.peak_density
    rows = []
    for alpha in alphas:
        J0 = 1.0 / (2.0 * alpha * f0)
        for w in ws:
            base = MarketParams(alpha=alpha, J=J0, lam=w / (2.0 * f0), dist=dist)
            fam = ParamFamily.varying(base, "J", (0.9 * J0, 1.1 * J0))
            eta0 = find_eta0(fam)
            rep = coefficient_A(fam, eta0)
            num = coefficient_A_numeric(fam, eta0, fd_step)
            rows.append({
                "alpha": float(alpha), "w": float(w), "J0": eta0, "lam": base.lam,
                "A": rep.A, "A_numeric": num.A,
                "conditions_hold": rep.conditions.all,
                "nonresonant": rep.conditions.nonresonant,
                "verdict": rep.verdict.value,
            })
    return rows
