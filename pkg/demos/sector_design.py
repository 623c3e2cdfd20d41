"""Designing sectors from supply rates.

Each plant class comes with a (q, s, r) supply rate. The closed-form rule
picks a sector inside the admissible slope interval and finds a multiplier
that certifies it; the grid search reaches a certificate without knowing
which case applies.

    python demos/sector_design.py
"""
from pbckit import (
    DissipativityTriple,
    NotSectorDesignable,
    SectorBounds,
    SectorCertificate,
    admissible_interval,
    design_sector,
    synthesize_certificate_search,
    verify_certificate,
)
from pbckit.sector import best_multiplier

TRIPLES = {
    "passive": DissipativityTriple(0.0, 0.5, 0.0),
    "mass-spring-damper": DissipativityTriple(0.0, 0.5, -0.01),
    "q > 0": DissipativityTriple(1.0, 0.0, -4.0),
    "negative definite": DissipativityTriple(-1.0, 0.0, -1.0),
}

print(f"{'supply':<20} {'interval':<22} {'closed form':<22} {'grid search':<22}")
for label, triple in TRIPLES.items():
    case, lo, hi = admissible_interval(triple)
    cf = design_sector(triple)
    grid = synthesize_certificate_search(triple)
    print(
        f"{label:<20} ({lo:7.3g}, {hi:7.3g})      "
        f"({cf.bounds.k1:6.3f}, {cf.bounds.k2:6.3f})       "
        f"({grid.bounds.k1:6.3f}, {grid.bounds.k2:6.3f})"
    )

# The benchmark sectors, checked directly.
msd = SectorCertificate(SectorBounds(3.5, 6.0), 1.0, TRIPLES["mass-spring-damper"])
print("\n(3.5, 6.0) with lambda = 1 certifies the mass-spring-damper:", verify_certificate(msd))
tora = SectorBounds(0.45, 0.6)
lam = best_multiplier(TRIPLES["passive"], tora)
print(f"(0.45, 0.6) certifies a passive plant with lambda = {lam:.4f}:",
      verify_certificate(SectorCertificate(tora, lam, TRIPLES["passive"])))

# A supply rate that is positive semidefinite admits no sector at all.
try:
    design_sector(DissipativityTriple(1.0, 1.0, 1.0))
except NotSectorDesignable as exc:
    print("\n(1, 1, 1):", exc)
