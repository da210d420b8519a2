"""Command-line entry point.

Subcommands::

    simulate       orbit of the map, CSV ``n,p,d``
    classify       local stability of the equilibrium
    phase-diagram  regions over a (u, w) grid; region counts on stdout
    lambda-c       global-stability constants
    hopf-scan      orbit behaviour along a one-parameter family
    hiam-compare   agent market against the deterministic map

Every subcommand accepts ``--config FILE`` (JSON, same keys as the flags with
dashes replaced by underscores; explicit flags win) and ``--dump-config``,
which prints the resolved configuration and exits.  Exit status is 0 on
success, 2 for invalid input and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager

import numpy as np

from . import global_stability, hiam, hopf, stability
from .distributions import dist_from_dict, normal_zero_mean
from .dynamics import (
    MarketParams, State, detect_omega_limit, fmt_float, params_to_dict, simulate, write_orbit_csv,
)
from .errors import InsufficientDataError, MdynError, NumericError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

# keys never written by --dump-config
_META = {"command", "config", "dump_config", "out", "func"}


class _InputError(Exception):
    pass


def _add_params(p: argparse.ArgumentParser, lam_required=True):
    g = p.add_argument_group("model parameters")
    g.add_argument("--alpha", type=float, help="proportion of speculators, in (0, 1)")
    g.add_argument("--J", type=float, help="speculative trend, > 0")
    g.add_argument("--lambda", type=float,
                   help="price feedback, > 0" + ("" if lam_required else " (optional)"))
    g.add_argument("--V", type=float, help="fundamental value (default 0)")
    d = g.add_mutually_exclusive_group()
    d.add_argument("--sigma", type=float, help="std of Normal deviations (default 1)")
    d.add_argument("--dist-json", help='JSON file such as {"kind": "normal", "sigma": 1}')


def _add_common(p: argparse.ArgumentParser, out_required=False, formats=("csv", "json"), default_format="csv"):
    p.add_argument("--out", required=out_required, help="output file (default: stdout)")
    p.add_argument("--format", choices=formats, help=f"output format (default {default_format})")
    p.add_argument("--config", help="JSON file of defaults for any flag")
    p.add_argument("--dump-config", action="store_true", help="print the resolved configuration and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdyn", description="Asset-market dynamics toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="iterate the map and write the orbit")
    _add_params(p)
    p.add_argument("--p0", type=float, help="initial price (default V)")
    p.add_argument("--d0", type=float, help="initial excess demand (default 0)")
    p.add_argument("--steps", type=int, help="number of steps (default 1000)")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="local stability of the equilibrium")
    _add_params(p)
    p.add_argument("--margin", type=float, help="boundary margin (default 1e-9)")
    _add_common(p, default_format="json")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("phase-diagram", help="classify a regular (u, w) grid")
    p.add_argument("--u-min", type=float, help="default 0.015")
    p.add_argument("--u-max", type=float, help="default 3")
    p.add_argument("--w-min", type=float, help="default 0.03")
    p.add_argument("--w-max", type=float, help="default 6")
    p.add_argument("--nu", type=int, help="grid points in u (default 200)")
    p.add_argument("--nw", type=int, help="grid points in w (default 200)")
    p.add_argument("--margin", type=float, help="boundary margin (default 1e-9)")
    _add_common(p, out_required=True, formats=("csv",))
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("lambda-c", help="global-stability constants")
    _add_params(p, lam_required=False)
    _add_common(p, formats=("json",), default_format="json")
    p.set_defaults(func=cmd_lambda_c)

    p = sub.add_parser("hopf-scan", help="orbit behaviour across a one-parameter family")
    _add_params(p)
    p.add_argument("--vary", choices=("alpha", "J", "lambda"), help="parameter to vary (default alpha)")
    p.add_argument("--eta-min", type=float, help="family range, lower end")
    p.add_argument("--eta-max", type=float, help="family range, upper end")
    p.add_argument("--etas", help="comma separated parameter values to simulate")
    p.add_argument("--p0", type=float, help="initial price offset from V (default 0.01)")
    p.add_argument("--d0", type=float, help="initial excess demand (default 0.01)")
    p.add_argument("--steps", type=int, help="steps per orbit (default 100000)")
    _add_common(p)
    p.set_defaults(func=cmd_hopf_scan)

    p = sub.add_parser("hiam-compare", help="agent market against the deterministic map")
    _add_params(p)
    p.add_argument("--K", type=int, help="number of agents")
    p.add_argument("--p0", type=float, help="initial price (default V)")
    p.add_argument("--dbar0", type=float, help="initial average decision (default 0)")
    p.add_argument("--horizon", type=int, help="number of steps (default 50)")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed (default 0)")
    p.add_argument("--replicas", type=int, help="replicas with seeds seed+i (default 1)")
    _add_common(p)
    p.set_defaults(func=cmd_hiam_compare)
    return parser


DEFAULTS = {
    "simulate": {"V": 0.0, "d0": 0.0, "steps": 1000, "format": "csv"},
    "classify": {"V": 0.0, "margin": 1e-9, "format": "json"},
    "phase-diagram": {
        "u_min": 0.015, "u_max": 3.0, "w_min": 0.03, "w_max": 6.0,
        "nu": 200, "nw": 200, "margin": 1e-9, "format": "csv",
    },
    "lambda-c": {"V": 0.0, "format": "json"},
    "hopf-scan": {"V": 0.0, "vary": "alpha", "p0": 0.01, "d0": 0.01, "steps": 100_000, "format": "csv"},
    "hiam-compare": {"V": 0.0, "dbar0": 0.0, "horizon": 50, "seed": 0, "replicas": 1, "format": "csv"},
}


def _resolve(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    """Parse flags, filling unset ones from ``--config`` and then from DEFAULTS."""
    ns = parser.parse_args(argv)
    keys = [k for k in vars(ns) if k not in _META and not k.startswith("_")]
    cfg = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _InputError(f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise _InputError("config must be a JSON object")
        unknown = sorted(set(cfg) - set(keys))
        if unknown:
            raise _InputError(f"unknown config keys for {ns.command}: {', '.join(unknown)}")
    defaults = DEFAULTS[ns.command]
    for k in keys:
        if getattr(ns, k) is None:
            setattr(ns, k, cfg.get(k, defaults.get(k)))
    if getattr(ns, "sigma", None) is not None and getattr(ns, "dist_json", None) is not None:
        raise _InputError("give either sigma or dist_json, not both")
    return ns


def _config_of(ns) -> dict:
    return {k: v for k, v in vars(ns).items() if k not in _META and not k.startswith("_")}


def _need(ns, *names):
    missing = [n for n in names if getattr(ns, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise _InputError(f"missing required parameter(s): {flags}")


def _dist(ns):
    if ns.dist_json is not None:
        try:
            with open(ns.dist_json) as fh:
                return dist_from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise _InputError(f"cannot read distribution {ns.dist_json}: {exc}") from None
    return normal_zero_mean(1.0 if ns.sigma is None else ns.sigma)


def _lam(ns):
    return getattr(ns, "lambda")


def _params(ns, lam=None) -> MarketParams:
    _need(ns, "alpha", "J", *(("lambda",) if lam is None else ()))
    if lam is None:
        lam = _lam(ns)
    return MarketParams(alpha=ns.alpha, J=ns.J, lam=lam, V=ns.V, dist=_dist(ns))


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_json(path, obj):
    with _output(path) as fh:
        fh.write(json.dumps(obj, indent=2, allow_nan=False) + "\n")


def _jsonable(x):
    # JSON has no infinities or complex numbers
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def cmd_simulate(ns) -> int:
    params = _params(ns)
    p0 = params.V if ns.p0 is None else ns.p0
    orbit = simulate(params, State(p0, ns.d0), ns.steps)
    if ns.format == "csv":
        with _output(ns.out) as fh:
            write_orbit_csv(orbit, fh)
    else:
        _write_json(ns.out, {
            "params": params_to_dict(params), "diverged": orbit.diverged,
            "p": orbit.p.tolist(), "d": orbit.d.tolist(),
        })
    return EXIT_OK


def cmd_classify(ns) -> int:
    params = _params(ns)
    rep = stability.classify_params(params, ns.margin)
    if ns.format == "csv":
        with _output(ns.out) as fh:
            stability.write_phase_diagram_csv([rep], fh)
    else:
        e = rep.eigen
        _write_json(ns.out, {
            "u": rep.uw.u, "w": rep.uw.w, "delta": e.delta,
            "mu1": _jsonable(e.mu1), "mu2": _jsonable(e.mu2),
            "spectral_radius": e.spectral_radius,
            "region": rep.region.value, "verdict": rep.verdict.value,
        })
    return EXIT_OK


def cmd_phase_diagram(ns) -> int:
    if ns.nu < 1 or ns.nw < 1:
        raise _InputError("--nu and --nw must be positive")
    reports = stability.phase_diagram((ns.u_min, ns.u_max), (ns.w_min, ns.w_max), (ns.nu, ns.nw), ns.margin)
    stability.write_phase_diagram_csv(reports, ns.out)
    sys.stdout.write(json.dumps(stability.region_counts(reports), indent=2) + "\n")
    return EXIT_OK


def cmd_lambda_c(ns) -> int:
    # the constants do not involve lambda; any positive value will do
    lam = _lam(ns)
    params = _params(ns, lam=1.0 if lam is None else None)
    c = global_stability.constants(params)
    obj = json.loads(global_stability.constants_to_json(c))
    if lam is not None:
        obj["lambda"] = lam
        obj["lambda_within_threshold"] = lam <= c.lambda_c
    _write_json(ns.out, obj)
    return EXIT_OK


def cmd_hopf_scan(ns) -> int:
    name = ns.vary
    _need(ns, "eta_min", "eta_max")
    lo, hi = ns.eta_min, ns.eta_max
    if not lo < hi:
        raise _InputError("--eta-min must be below --eta-max")
    # the varied parameter need not be given; any admissible value seeds the base
    if getattr(ns, name) is None:
        setattr(ns, name, 0.5 * (lo + hi))
    base = _params(ns)
    family = hopf.ParamFamily.varying(base, "lam" if name == "lambda" else name, (lo, hi))
    if ns.etas is None:
        etas = np.linspace(lo, hi, 11)
    else:
        try:
            etas = sorted(float(t) for t in str(ns.etas).split(",") if t.strip())
        except ValueError:
            raise _InputError(f"--etas must be comma separated numbers, got {ns.etas!r}") from None
    s0 = State(base.V + ns.p0, ns.d0)
    try:
        eta0 = hopf.find_eta0(family)
        report = hopf.coefficient_A(family, eta0)
    except MdynError:
        eta0, report = None, None
    scan = [(eta, detect_omega_limit(simulate(family.at(eta), s0, ns.steps))) for eta in etas]
    if ns.format == "csv":
        with _output(ns.out) as fh:
            hopf.write_hopf_scan_csv(family, scan, report, fh)
    else:
        _write_json(ns.out, {
            "eta0": eta0,
            "mu0": None if report is None else _jsonable(report.mu0),
            "A": None if report is None else report.A,
            "verdict": None if report is None else report.verdict.value,
            "rows": [{
                "eta": eta, "u": family.u(eta), "w": family.w(eta),
                "omega_kind": v.kind.value, "radius": v.radius_estimate,
            } for eta, v in scan],
        })
    return EXIT_OK


def cmd_hiam_compare(ns) -> int:
    _need(ns, "K")
    params = _params(ns)
    cfg = hiam.HiamConfig(
        params=params, K=ns.K, p0=params.V if ns.p0 is None else ns.p0,
        dbar0=ns.dbar0, horizon=ns.horizon, seed=ns.seed,
    )
    if ns.replicas < 1:
        raise _InputError("--replicas must be >= 1")
    if ns.replicas == 1:
        cmp = hiam.compare(cfg)
        if ns.format == "csv":
            with _output(ns.out) as fh:
                hiam.write_comparison_csv(cmp, fh)
        else:
            _write_json(ns.out, {"config": hiam.config_to_dict(cfg), "sup_error": cmp.sup_error})
        return EXIT_OK
    stats = hiam.replicate(cfg, ns.replicas)
    if ns.format == "csv":
        with _output(ns.out) as fh:
            fh.write("replica,seed,sup_error\n")
            for i, e in enumerate(stats.errors):
                fh.write(f"{i},{cfg.seed + i},{fmt_float(e)}\n")
    else:
        _write_json(ns.out, {
            "config": hiam.config_to_dict(cfg), "replicas": ns.replicas,
            "median": stats.median, "q1": stats.q1, "q3": stats.q3, "errors": list(stats.errors),
        })
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = _resolve(parser, argv)
        if ns.dump_config:
            sys.stdout.write(json.dumps(_config_of(ns), indent=2) + "\n")
            return EXIT_OK
        return ns.func(ns)
    except (NumericError, InsufficientDataError, FloatingPointError, OverflowError) as exc:
        print(f"mdyn: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (_InputError, MdynError, ValueError, TypeError, OSError) as exc:
        print(f"mdyn: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
