"""Command-line front end.

Exit codes: 0 success, 1 a check or design failed, 2 usage or config
error, 3 numerical divergence.
"""
from __future__ import annotations

import argparse
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import config as cfgmod
from .analysis import NotCheckable, audit_trajectory, check_dissipativity, performance_metrics
from .core import ConfigurationError, DissipativityTriple
from .sector import (
    CertificateSearchFailed,
    NotSectorDesignable,
    admissible_interval,
    design_sector,
    synthesize_certificate_search,
    verify_certificate,
)
from .sim import simulate, sliding_fraction
from .trajio import write_trajectory_csv

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3


def _print(*args):
    print(*args, file=sys.stdout)


def _err(message: str):
    print(f"pbckit: {message}", file=sys.stderr)


def cmd_design_sector(args) -> int:
    triple = DissipativityTriple(args.q, args.s, args.r)
    try:
        case, lower, upper = admissible_interval(triple)
        _print(f"case: {case}")
        _print(f"admissible interval: ({lower!r}, {upper!r})")
        if args.method == "grid":
            cert = synthesize_certificate_search(triple)
        else:
            cert = design_sector(triple, margin=args.margin)
    except (NotSectorDesignable, CertificateSearchFailed) as exc:
        _err(f"sector design failed: {exc}")
        return EXIT_FAILED
    m1, m2 = cert.minors
    _print(f"k1: {cert.bounds.k1!r}")
    _print(f"k2: {cert.bounds.k2!r}")
    _print(f"lambda: {cert.lam!r}")
    _print(f"minors: {m1!r} {m2!r}")
    ok = verify_certificate(cert)
    _print(f"verified: {'yes' if ok else 'no'}")
    return EXIT_OK if ok else EXIT_FAILED


def _run(ref: str):
    cfg = cfgmod.load_config(ref)
    scenario = cfgmod.build_scenario(cfg)
    opts = cfgmod.analysis_options(cfg)
    return cfg, scenario, opts, simulate(scenario)


def cmd_simulate(args) -> int:
    cfg, scenario, opts, traj = _run(args.config)
    if args.output:
        write_trajectory_csv(traj, args.output)
    if traj.diverged:
        _err(f"{scenario.name}: diverged at t={traj.blowup_time:.6g}")
        return EXIT_DIVERGED
    audit = audit_trajectory(traj, scenario.bounds, drift_budget=scenario.integrator.drift_budget)
    metrics = performance_metrics(traj, **opts)
    verdict = {True: "non-increasing", False: "INCREASING", None: "n/a"}[audit.storage_monotone]
    _print(f"scenario: {scenario.name}")
    _print(f"samples: {len(traj)}  final |xi|: {np.linalg.norm(traj.xi[-1]):.3e}")
    _print(f"max sector residual: {audit.max_residual:.3e}")
    _print(f"storage: {verdict} (max increment {audit.max_storage_increment:.3e})")
    _print(f"sliding fraction: {sliding_fraction(traj):.3f}")
    _print(
        f"settling {metrics.settling_time:.4g} s  overshoot {metrics.overshoot:.4g}  "
        f"zero crossings {metrics.zero_crossings}  converged {'yes' if metrics.converged else 'no'}"
    )
    _print(f"audit: {'pass' if audit.passed else 'FAIL'}")
    return EXIT_OK if audit.passed else EXIT_FAILED


def _shared_setup(cfg) -> tuple:
    plant = tuple(sorted((k, v) for k, v in cfg.items() if k.startswith("plant.")))
    return plant, tuple(cfgmod._vector(cfg, "initial.x", []))


def cmd_compare(args) -> int:
    cfgs = [cfgmod.load_config(ref) for ref in args.configs]
    setups = {_shared_setup(c) for c in cfgs}
    if len(setups) > 1:
        _err("compare needs configs with the same plant and initial plant state")
        return EXIT_USAGE
    rows = []
    for ref, cfg in zip(args.configs, cfgs):
        scenario = cfgmod.build_scenario(cfg)
        traj = simulate(scenario)
        if traj.diverged:
            rows.append((scenario.name, None, traj.blowup_time))
        else:
            rows.append((scenario.name, performance_metrics(traj, **cfgmod.analysis_options(cfg)), None))
    ranked = sorted(
        (i for i, r in enumerate(rows) if r[1] is not None),
        key=lambda i: (rows[i][1].settling_time, rows[i][1].overshoot, rows[i][1].zero_crossings),
    )
    rank = {i: pos + 1 for pos, i in enumerate(ranked)}
    width = max(8, *(len(r[0]) for r in rows))
    _print(f"{'scenario':<{width}}  {'rank':>4}  {'settling_s':>10}  {'overshoot':>10}  {'crossings':>9}  converged")
    for i, (name, m, blowup) in enumerate(rows):
        if m is None:
            _print(f"{name:<{width}}  {'-':>4}  diverged at t={blowup:.6g}")
            continue
        _print(
            f"{name:<{width}}  {rank[i]:>4}  {m.settling_time:>10.4f}  {m.overshoot:>10.4g}  "
            f"{m.zero_crossings:>9d}  {'yes' if m.converged else 'no'}"
        )
    return EXIT_OK


def cmd_check_dissipativity(args) -> int:
    cfg = cfgmod.load_config(args.config)
    plant = cfgmod.build_plant(cfg)
    triple, box, n, tol = cfgmod.build_dissipativity(cfg)
    try:
        report = check_dissipativity(plant, triple, box, n=n, tol=tol)
    except NotCheckable as exc:
        _err(str(exc))
        return EXIT_USAGE
    x, u = report.worst_point
    _print(f"plant: {plant.name}  supply (q, s, r) = ({triple.q}, {triple.s}, {triple.r})")
    _print(f"samples: {report.n_samples}")
    _print(f"max scaled residual: {report.max_residual:.3e}  (tol {report.tol:g})")
    _print(f"worst point: x = {np.array2string(x, precision=4)}, u = {u:.4g}, raw residual {report.worst_raw_residual:.3e}")
    _print(f"result: {'pass' if report.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_list(args) -> int:
    for name in cfgmod.bundled_scenarios():
        _print(name)
    return EXIT_OK


def _finite(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"{text!r} is not finite")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pbckit", description="Projection-based controller toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design-sector", help="design and certify a sector for a supply rate")
    p.add_argument("--q", type=_finite, required=True)
    p.add_argument("--s", type=_finite, required=True)
    p.add_argument("--r", type=_finite, required=True)
    p.add_argument("--margin", type=_finite, default=0.25)
    p.add_argument("--method", choices=("closed-form", "grid"), default="closed-form")
    p.set_defaults(func=cmd_design_sector)

    p = sub.add_parser("simulate", help="run one scenario, audit it and optionally write CSV")
    p.add_argument("config", help="config file or bundled scenario name")
    p.add_argument("-o", "--output", help="CSV destination")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="run several scenarios on the same plant and tabulate metrics")
    p.add_argument("configs", nargs="+")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("check-dissipativity", help="sample the dissipation inequality of a config's plant")
    p.add_argument("config")
    p.set_defaults(func=cmd_check_dissipativity)

    sub.add_parser("list", help="list bundled scenarios").set_defaults(func=cmd_list)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "compare" and len(args.configs) < 2:
        parser.error("compare needs at least two configs")
    if args.command == "design-sector" and not 0.0 < args.margin < 1.0:
        parser.error("--margin must lie in (0, 1)")
    try:
        return args.func(args)
    except (ConfigurationError, FileNotFoundError) as exc:
        _err(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
