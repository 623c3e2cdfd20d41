"""Bringing your own plant.

A first-order lag x' = -x + u with storage x^2/2 is (0, 1/2, -1)
dissipative. The sampled checker confirms that, the sector is designed
from the same triple, and an unstable integrator-like controller is then
projected onto it.

    python demos/custom_plant.py
"""
import numpy as np

from pbckit import (
    ClosedLoopState,
    DissipativityTriple,
    IntegratorConfig,
    SamplingBox,
    Scenario,
    check_dissipativity,
    design_sector,
    linear_controller,
    lti_model,
    simulate,
)

plant = lti_model([[-1.0]], [1.0], [1.0], P=[[1.0]], name="lag")
triple = DissipativityTriple(0.0, 0.5, -1.0)

report = check_dissipativity(plant, triple, SamplingBox(((-5.0, 5.0),), (-5.0, 5.0)), n=5000)
print(f"dissipativity check: {'pass' if report.passed else 'FAIL'} (max scaled residual {report.max_residual:.1e})")

cert = design_sector(triple)
print(f"sector ({cert.bounds.k1:.3f}, {cert.bounds.k2:.3f}) certified with lambda = {cert.lam:.3f}")

# z1' = 2 z1 + v, z2' = -z2 + v; closing the loop without projection gives a saddle
controller = linear_controller([[2.0, 0.0], [0.0, -1.0]], [1.0, 1.0], name="unstable")
xi0 = ClosedLoopState([2.0], 1.0, [0.0])  # z1 = 0.5 v lies inside the sector
config = IntegratorConfig(horizon=15.0, h=1e-3)

for projected in (False, True):
    traj = simulate(Scenario(plant, controller, cert.bounds, xi0, config, projection_enabled=projected))
    label = "projected  " if projected else "unprojected"
    if traj.diverged:
        print(f"{label}: diverged at t = {traj.blowup_time:.2f} s")
    else:
        print(f"{label}: |xi(15)| = {np.linalg.norm(traj.xi[-1]):.2e}, "
              f"compiled path: {traj.meta['compiled']}")
