import dataclasses

import numpy as np
import pytest

from pbckit import (
    BoundaryMode,
    ClosedLoopState,
    ConfigurationError,
    IntegratorConfig,
    NumericalBlowup,
    PlantModel,
    Scenario,
    SectorBounds,
    msd_c1_controller,
    msd_model,
    sector_residual,
    simulate,
    sliding_fraction,
    static_gain_controller,
    step,
)
from pbckit.core import Trajectory, unprojected_field
from pbckit.plants import MSD_A, MSD_B, MSD_OUTPUT

B = SectorBounds(3.5, 6.0)


def msd_scenario(x, z1, z2=0.0, horizon=0.1, h=1e-4, projection=True, stride=10):
    return Scenario(
        msd_model(), msd_c1_controller(), B, ClosedLoopState(x, z1, [z2]),
        IntegratorConfig(horizon=horizon, h=h, record_stride=stride), projection_enabled=projection,
    )


@pytest.mark.parametrize("kwargs", [dict(h=0.0), dict(h=-1e-3), dict(horizon=1e-5, h=1e-4),
                                    dict(mode_tol=0.0), dict(drift_budget=-1.0), dict(record_stride=0)])
def test_integrator_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        IntegratorConfig(**kwargs)


def test_scenario_rejects_state_outside_sector():
    with pytest.raises(ConfigurationError, match="outside"):
        msd_scenario([0.0, 1.0], 7.0)
    msd_scenario([0.0, 1.0], 7.0, projection=False)


def test_scenario_rejects_projected_static_gain_and_missing_bounds():
    xi0 = ClosedLoopState([1.0, 0.0], 0.0)
    with pytest.raises(ConfigurationError):
        Scenario(msd_model(), static_gain_controller(4.8), B, xi0)
    with pytest.raises(ConfigurationError):
        Scenario(msd_model(), msd_c1_controller(), None, ClosedLoopState([1.0, 0.0], 0.0, [0.0]))


def test_zero_state_stays_at_apex():
    traj = simulate(msd_scenario([0.0, 0.0], 0.0))
    assert np.all(traj.xi == 0.0)
    assert np.all(traj.modes == BoundaryMode.APEX)
    assert sliding_fraction(traj) == 1.0
    out = step(msd_scenario([0.0, 0.0], 0.0), ClosedLoopState.zeros(2, 2))
    np.testing.assert_array_equal(out.as_vector(), np.zeros(4))


def test_sliding_fraction_edge_cases():
    empty = Trajectory([], np.empty((0, 3)), 2, [], [], [], [])
    assert sliding_fraction(empty) == 0.0
    interior = Trajectory([0.0, 1.0], np.zeros((2, 3)), 2, [0, 0], [0, 0], [0, 0], [-1, -1])
    assert sliding_fraction(interior) == 0.0


def _rk4_reference(scenario, xi, h, substeps):
    s = xi.as_vector()
    n = scenario.plant.dim
    field = lambda q: unprojected_field(scenario.plant, scenario.controller, ClosedLoopState.from_vector(q, n))
    dt = h / substeps
    for _ in range(substeps):
        a = field(s)
        b = field(s + 0.5 * dt * a)
        c = field(s + 0.5 * dt * b)
        d = field(s + dt * c)
        s = s + dt / 6 * (a + 2 * b + 2 * c + d)
    return s


def test_interior_step_matches_unprojected_reference():
    sc = msd_scenario([0.0, 1.0], 4.75, h=1e-3)
    out = step(sc, sc.xi0)
    np.testing.assert_allclose(out.as_vector(), _rk4_reference(sc, sc.xi0, 1e-3, 10), rtol=0, atol=1e-12)


def test_boundary_step_stays_in_sector():
    # on the lower ray with the unprojected z1-rate pointing outward
    sc = msd_scenario([0.0, 1.0], 3.5, z2=5.0)
    f = unprojected_field(sc.plant, sc.controller, sc.xi0)
    assert f[2] < 3.5 * f[1]
    out = step(sc, sc.xi0)
    assert sector_residual(B, out.x[1], out.z1) <= sc.integrator.drift_budget


def test_step_raises_on_blowup():
    sc = msd_scenario([0.0, 1.0], 4.75, projection=False)
    with pytest.raises(NumericalBlowup) as info:
        step(sc, ClosedLoopState([0.0, 1e12], 0.0, [0.0]))
    assert info.value.t == pytest.approx(1e-4)


def test_projection_off_equivalence_away_from_boundary():
    on = simulate(msd_scenario([0.0, 1.0], 4.75, horizon=0.01))
    off = simulate(msd_scenario([0.0, 1.0], 4.75, horizon=0.01, projection=False))
    assert np.all(on.modes == BoundaryMode.INTERIOR)
    np.testing.assert_allclose(on.xi, off.xi, rtol=0, atol=1e-9)


def test_determinism():
    a = simulate(msd_scenario([1.0, 0.0], 0.0, horizon=1.0))
    b = simulate(msd_scenario([1.0, 0.0], 0.0, horizon=1.0))
    np.testing.assert_array_equal(a.xi, b.xi)
    np.testing.assert_array_equal(a.modes, b.modes)


def test_recording_grid_includes_final_step():
    traj = simulate(msd_scenario([1.0, 0.0], 0.0, horizon=0.0105, stride=10))
    assert traj.times[-1] == pytest.approx(0.0105)
    assert len(traj) == 1 + 10 + 1


def test_python_path_agrees_with_compiled_path():
    def field(x, u):
        return MSD_A @ x + MSD_B * u

    python_plant = PlantModel(2, field, MSD_OUTPUT, name="msd_python")
    compiled = msd_scenario([1.0, 0.0], 0.0, horizon=0.3)
    slow = dataclasses.replace(compiled, plant=python_plant)
    a, b = simulate(compiled), simulate(slow)
    assert a.meta["compiled"] and not b.meta["compiled"]
    assert np.any(a.modes != BoundaryMode.INTERIOR)
    np.testing.assert_allclose(a.xi, b.xi, rtol=1e-10, atol=1e-12)
    np.testing.assert_array_equal(a.modes, b.modes)


def test_static_gain_keeps_algebraic_output():
    sc = Scenario(msd_model(), static_gain_controller(4.8), None, ClosedLoopState([1.0, 0.0], 0.0),
                  IntegratorConfig(horizon=1.0), projection_enabled=False)
    traj = simulate(sc)
    np.testing.assert_allclose(traj.z1, 4.8 * traj.y, rtol=0, atol=1e-15)
    assert np.all(np.isnan(traj.residual))


def test_benchmark_run_diagnostics(runs):
    traj = runs["msd_c1"]
    assert 0.0 < sliding_fraction(traj) < 1.0
    assert traj.meta["max_pre_repair_residual"] >= 0.0
    inc = np.diff(traj.storage)
    assert inc.max() <= 1e-6 + 10 * traj.meta["h"]


def test_unprojected_run_is_marked_diverged(runs):
    traj = runs["msd_c1_unprojected"]
    assert traj.diverged and 0 < traj.blowup_time < 20.0
    assert np.abs(traj.meta["blowup_state"]).max() > 1e9
    assert np.all(np.abs(traj.xi) <= 1e9)
