"""The eight acceptance criteria, each at its stated tolerance.

Every criterion prints a PASS/FAIL line (also collected into the terminal
summary by conftest). A criterion that does not hold is reported as FAIL;
the only expected failure is marked xfail(strict) so it cannot silently
turn into a pass or be hidden.
"""
import dataclasses
import time

import numpy as np
import pytest

from conftest import record
from pbckit import (
    BoundaryMode,
    ClosedLoopState,
    ControllerModel,
    DissipativityTriple,
    IntegratorConfig,
    Scenario,
    SamplingBox,
    SectorBounds,
    SectorCertificate,
    audit_trajectory,
    check_dissipativity,
    classify_mode,
    design_sector,
    msd_model,
    oracle_grid_step,
    partial_project,
    performance_metrics,
    project_oracle,
    simulate,
    tora_mechanical_energy,
    tora_model,
    verify_certificate,
)
from pbckit.cli import main
from pbckit.controllers import MSD_C1_A, MSD_C1_B, _no_rate, _no_substate
from pbckit.plants import MSD_A, MSD_B, MSD_OUTPUT
from pbckit.sector import best_multiplier

PROJECTED = ("msd_c1", "tora_c1", "tora_c2")
STEP_HALVING_C = 1e-3  # fitted once on MSD C1 over 2 s (max observed 9.2e-5), frozen


def _oracle_case(rng, mode, sign):
    k1 = rng.uniform(-3.0, 3.0)
    k2 = k1 + rng.uniform(0.1, 4.0)
    bounds = SectorBounds(k1, k2)
    n = 2
    x = rng.normal(size=n)
    row = np.array([0.0, 1.0])
    if mode == "apex":
        x[1] = 0.0
        z1 = 0.0
    else:
        x[1] = sign * rng.uniform(0.05, 5.0)
        v = x[1]
        if mode == "lower":
            z1 = k1 * v
        elif mode == "upper":
            z1 = k2 * v
        else:
            z1 = v * (k1 + rng.uniform(0.05, 0.95) * (k2 - k1))
    xi = ClosedLoopState(x, z1, rng.normal(size=1))
    f = rng.normal(scale=3.0, size=n + 2)
    v_dot = float(row @ f[:n])
    return bounds, xi, f, v_dot, row


def test_criterion_1_projection_matches_oracle():
    rng = np.random.default_rng(1)
    cases = [("interior", 1.0), ("lower", 1.0), ("lower", -1.0), ("upper", 1.0), ("upper", -1.0), ("apex", 0.0)]
    expected = {"interior": BoundaryMode.INTERIOR, "lower": BoundaryMode.LOWER_ACTIVE,
                "upper": BoundaryMode.UPPER_ACTIVE, "apex": BoundaryMode.APEX}
    started = time.perf_counter()
    worst_ratio = 0.0
    others_identical = True
    modes_ok = True
    for mode, sign in cases:
        for _ in range(1000):
            bounds, xi, f, v_dot, row = _oracle_case(rng, mode, sign)
            v = float(row @ xi.x)
            modes_ok &= classify_mode(bounds, v, xi.z1) == expected[mode]
            got = partial_project(bounds, xi, f, v_dot, output_row=row)
            ref = project_oracle(bounds, xi, f, v_dot, output_row=row)
            step = oracle_grid_step(bounds, f[2], v_dot)
            worst_ratio = max(worst_ratio, abs(got[2] - ref[2]) / step)
            mask = np.ones(f.size, dtype=bool)
            mask[2] = False
            others_identical &= np.array_equal(got[mask], f[mask])
    elapsed = time.perf_counter() - started
    ok = modes_ok and others_identical and worst_ratio <= 2.0 and elapsed < 10.0
    record(1, "oracle", ok, f"6x1000 cases, max |diff|/grid step {worst_ratio:.3f}, {elapsed:.2f} s")
    assert modes_ok and others_identical
    assert worst_ratio <= 2.0
    assert elapsed < 10.0


@pytest.mark.parametrize("name", PROJECTED)
def test_criterion_2_sector_invariance(runs, name):
    traj = runs[name]
    audit = audit_trajectory(traj, runs.scenario(name).bounds)
    elapsed = traj.meta["elapsed_s"]
    ok = not traj.diverged and audit.max_residual <= 1e-7 and elapsed < 30.0
    record(2, name, ok, f"max residual {audit.max_residual:.2e}, run {elapsed:.1f} s")
    assert not traj.diverged
    assert traj.meta["h"] == 1e-4 and traj.times[-1] == pytest.approx(traj.meta["horizon"])
    assert audit.max_residual <= 1e-7
    assert elapsed < 30.0


@pytest.mark.parametrize("name", PROJECTED)
def test_criterion_3_storage_decrease(runs, name):
    traj = runs[name]
    inc = np.diff(traj.storage)
    total = float(inc[inc > 0].sum())
    ok = inc.max() <= 1e-6 and total <= 1e-4 * traj.storage[0]
    record(3, name, ok, f"max increment {inc.max():.2e}, cumulative increase {total:.2e}")
    assert inc.max() <= 1e-6
    assert total <= 1e-4 * traj.storage[0]


def _msd_c1_closed_loop_matrix():
    # state (x1, x2, z1, z2), u = -z1, controller input v = G x
    a = np.zeros((4, 4))
    a[:2, :2] = MSD_A
    a[:2, 2] = -MSD_B
    a[2:, 2:] = MSD_C1_A
    a[2:, :2] = np.outer(MSD_C1_B, MSD_OUTPUT)
    return a


def test_criterion_4_msd_stabilized_only_by_projection(runs):
    abscissa = np.linalg.eigvals(_msd_c1_closed_loop_matrix()).real.max()
    unprojected = runs["msd_c1_unprojected"]
    code = main(["simulate", "msd_c1_unprojected"])
    projected = runs["msd_c1"]
    ratio = np.linalg.norm(projected.xi[-1]) / np.linalg.norm(projected.xi[0])
    ok = abscissa > 0 and unprojected.diverged and unprojected.blowup_time < 20 and code == 3 and ratio <= 1e-2
    record(4, "msd", ok, f"abscissa {abscissa:.3f}, blow-up t={unprojected.blowup_time:.3f}, exit {code}, "
                         f"|xi(20)|/|xi(0)| {ratio:.1e}")
    assert abscissa > 0
    assert unprojected.diverged and unprojected.blowup_time < 20.0
    assert code == 3
    assert ratio <= 1e-2


@pytest.mark.parametrize("ctrl", ["c1", "c2"])
def test_criterion_4_tora_stabilized_only_by_projection(runs, ctrl):
    projected = runs[f"tora_{ctrl}"]
    unprojected = runs[f"tora_{ctrl}_unprojected"]
    x0 = np.linalg.norm(projected.x[0])
    ratio = np.linalg.norm(projected.x[-1]) / x0
    peak = np.abs(unprojected.x).max(axis=0)
    escaped = unprojected.diverged or np.linalg.norm(unprojected.x, axis=1).max() > 10 * x0
    detail = f"|state(100)|/|state(0)| {ratio:.1e}; unprojected "
    detail += f"diverged at t={unprojected.blowup_time:.2f}" if unprojected.diverged else f"peak {peak}"
    record(4, f"tora_{ctrl}", ratio <= 5e-2 and escaped, detail)
    assert ratio <= 5e-2
    assert escaped


def test_criterion_5_msd_faster_and_lower_overshoot(runs):
    c0 = performance_metrics(runs["msd_c0"], state_index=0)
    c1 = performance_metrics(runs["msd_c1"], state_index=0)
    ok = c1.settling_time < c0.settling_time and c1.overshoot < c0.overshoot
    record(5, "msd", ok, f"settling {c1.settling_time:.3f} vs {c0.settling_time:.3f} s, "
                         f"overshoot {c1.overshoot:.4f} vs {c0.overshoot:.4f}")
    assert c1.settling_time < c0.settling_time
    assert c1.overshoot < c0.overshoot


@pytest.mark.xfail(strict=True, reason="theta crossings do not separate C1/C2 from C0; see decisions ledger")
def test_criterion_5_tora_fewer_theta_crossings(runs):
    counts = {c: performance_metrics(runs[f"tora_{c}"], state_index=0).zero_crossings for c in ("c0", "c1", "c2")}
    ok = counts["c1"] < counts["c0"] and counts["c2"] < counts["c0"]
    record(5, "tora", ok, f"theta zero crossings C0 {counts['c0']}, C1 {counts['c1']}, C2 {counts['c2']}")
    assert counts["c1"] < counts["c0"]
    assert counts["c2"] < counts["c0"]


def _random_triple(rng, case):
    s = rng.uniform(0.05, 3.0)
    if case == "passive":
        return DissipativityTriple(0.0, s, 0.0)
    if case == "output_strictly_passive":
        return DissipativityTriple(0.0, s, -rng.uniform(1e-3, 5.0))
    q = rng.uniform(0.05, 3.0)
    r = rng.uniform(-5.0, 0.99 * s * s / q)
    return DissipativityTriple(q, s, r)


def _supply_on_sector(cert, rng, n=1000):
    k1, k2 = cert.bounds.k1, cert.bounds.k2
    v = rng.uniform(0.01, 10.0, n) * rng.choice([-1.0, 1.0], n)
    u_minus = v * (k1 + rng.uniform(0.0, 1.0, n) * (k2 - k1))
    return cert.triple.supply(-u_minus, v)


def test_criterion_6_sector_design_soundness():
    rng = np.random.default_rng(6)
    failures = 0
    worst = -np.inf
    for case in ("passive", "output_strictly_passive", "general"):
        for _ in range(100):
            cert = design_sector(_random_triple(rng, case))
            supply = _supply_on_sector(cert, rng)
            worst = max(worst, supply.max())
            failures += (not verify_certificate(cert)) or supply.max() >= 0
    bench_msd = verify_certificate(
        SectorCertificate(SectorBounds(3.5, 6.0), 1.0, DissipativityTriple(0.0, 0.5, -0.01))
    )
    passive = DissipativityTriple(0.0, 0.5, 0.0)
    tora_bounds = SectorBounds(0.45, 0.6)
    lam = best_multiplier(passive, tora_bounds)
    bench_tora = verify_certificate(SectorCertificate(tora_bounds, lam, passive))
    ok = failures == 0 and bench_msd and bench_tora
    record(6, "design", ok, f"300 triples, {failures} failures, max sampled supply {worst:.2e}; "
                            f"(3.5, 6) lam=1 {bench_msd}, (0.45, 0.6) lam={lam:.3f} {bench_tora}")
    assert failures == 0
    assert bench_msd and bench_tora


def test_criterion_7_dissipativity_checker():
    started = time.perf_counter()
    msd = msd_model()
    box = SamplingBox.symmetric([10.0, 10.0], 10.0)
    good = check_dissipativity(msd, DissipativityTriple(0.0, 0.5, -0.01), box)
    bad = check_dissipativity(msd, DissipativityTriple(0.0, 0.5, -0.02), box)
    tora_box = SamplingBox(((-np.pi, np.pi), (-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)), (-1.0, 1.0))
    tora = check_dissipativity(tora_model(), DissipativityTriple(0.0, 0.5, 0.0), tora_box)
    elapsed = time.perf_counter() - started
    x_bad, _ = bad.worst_point
    counterexample = bad.worst_raw_residual == pytest.approx(0.01 * x_bad[1] ** 2, rel=1e-9)
    ok = (good.passed and good.max_residual <= 1e-12 and not bad.passed and counterexample
          and tora.passed and elapsed < 5.0)
    record(7, "checker", ok, f"msd {good.max_residual:.1e}, false claim {bad.max_residual:.2f} at "
                             f"x={np.round(x_bad, 3)}, tora {tora.max_residual:.1e}, {elapsed:.2f} s")
    assert good.passed and good.max_residual <= 1e-12
    assert not bad.passed and counterexample
    assert tora.passed
    assert elapsed < 5.0


def test_criterion_8_numerical_integrity():
    plant = tora_model(0.1, 0.0, 0.0)
    inert = ControllerModel(1, _no_rate, _no_substate, name="zero_input")
    xi0 = ClosedLoopState([np.pi / 6, 0.0, 0.5, 0.0], 0.0)
    scenario = Scenario(plant, inert, None, xi0, IntegratorConfig(horizon=10.0, h=1e-4), projection_enabled=False)
    traj = simulate(scenario)
    energy = np.array([tora_mechanical_energy(x) for x in traj.x])
    drift = float(np.abs(energy - energy[0]).max())

    from pbckit.config import build_scenario, load_config

    base = build_scenario(load_config("msd_c1"))
    finals = {}
    for h in (2e-4, 1e-4, 5e-5):
        run = simulate(dataclasses.replace(base, integrator=IntegratorConfig(horizon=2.0, h=h, record_stride=1000)))
        finals[h] = run.xi[-1]
        riding = run
    ratios = [np.linalg.norm(finals[h] - finals[h / 2]) / h for h in (2e-4, 1e-4)]
    ok = drift <= 1e-6 and max(ratios) <= STEP_HALVING_C
    record(8, "integrity", ok, f"energy drift {drift:.1e}; step-halving |diff|/h {max(ratios):.1e} "
                               f"<= C={STEP_HALVING_C:g}")
    assert drift <= 1e-6
    assert riding.modes[-1] in (BoundaryMode.LOWER_ACTIVE, BoundaryMode.UPPER_ACTIVE, BoundaryMode.APEX)
    assert max(ratios) <= STEP_HALVING_C
