"""Caps, regions, thickness, and verified covers on the 2-sphere.

Walks through the geometric layer: build a region from caps and boolean
combinators, estimate how thick it is at a given cap scale, cover the
sphere with caps of that scale, and check that the global measure fraction
dominates thickness/multiplicity.
"""

import numpy as np

from caplight import geometry as geo
from caplight import quadrature as quad

ctx = geo.SphereContext(3, 1.0)
rule = quad.sphere_rule(ctx, 48)
north = np.array([0.0, 0.0, 1.0])

print("== a region: everything except a polar hole, minus a small extra cap")
region = geo.Intersection(
    [
        geo.Complement(geo.Cap(north, 0.2)),
        geo.Complement(geo.Cap(np.array([1.0, 0.0, 0.0]), 0.1)),
    ]
)
fraction = geo.region_measure(region, rule) / ctx.sphere_measure()
print(f"measure fraction |S| / |sphere| = {fraction:.4f}")

print("\n== thickness at several cap scales (grid minimum of |S∩K|/|K|)")
for a in (0.3, 0.4, 0.6):
    rep = geo.thickness(region, a, grid_n=256, rule=rule)
    print(f"scale a={a:.2f}: gamma ~ {rep.gamma_estimate:.4f} "
          f"(worst cap center {np.round(rep.worst_cap.center, 3)})")

print("\n== covers by caps of radius a, with multiplicity control")
for a in (0.1, 0.2):
    cover = geo.build_cap_cover(ctx, a)
    print(f"a={a}: {len(cover.caps)} caps, observed multiplicity "
          f"{cover.multiplicity_kappa} (bound {geo.cover_multiplicity_bound(3):.0f})")

print("\n== covering comparison: fraction >= gamma0 / kappa")
comp = geo.covering_comparison(region, 0.4, rule)
print(f"gamma0={comp.gamma0:.4f} kappa={comp.kappa} "
      f"fraction={comp.measure_fraction:.4f} "
      f">= {comp.gamma0 / comp.kappa:.4f} -> {comp.satisfied}")

print("\n== picking a good direction out of a peak point")
cap = geo.Cap(north, 0.45)
band = geo.Band(-0.08, 0.08)
try:
    search = geo.select_direction(north, band, cap, ctx, n_dirs=64, rule=rule)
    print(f"best of 64 directions: arc ratio {search.ratio:.4f}, "
          f"implied comparability constant {search.c4_implied:.3f}")
except geo.NoDirectionFoundError as exc:
    print("no direction found:", exc)
