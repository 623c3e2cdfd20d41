"""Two projected controllers on the passivated TORA.

Both base controllers destabilize the passivated TORA on their own; inside
the sector (0.45, 0.6) they converge. Oscillation is compared against the
static gain w = -0.5 theta' by counting sign changes of theta and by the
amplitude left over in the second half of the run.

    python demos/tora_comparison.py
"""
import numpy as np

from pbckit import performance_metrics, simulate
from pbckit.config import build_scenario, load_config

print(f"{'scenario':<22} {'result':<28} {'theta crossings':>15} {'late |theta| peak':>18}")
for name in ("tora_c0", "tora_c1", "tora_c2", "tora_c1_unprojected", "tora_c2_unprojected"):
    traj = simulate(build_scenario(load_config(name)))
    if traj.diverged:
        print(f"{name:<22} diverged at t = {traj.blowup_time:.2f} s")
        continue
    m = performance_metrics(traj, state_index=0)
    late = np.abs(traj.x[traj.times > 50.0, 0]).max()
    result = f"|state(100)| = {np.linalg.norm(traj.x[-1]):.1e}"
    print(f"{name:<22} {result:<28} {m.zero_crossings:>15d} {late:>18.2e}")
