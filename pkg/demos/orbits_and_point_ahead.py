"""Satellite passes over a ground station and the point-ahead angle.

A 400-km LEO terminal is propagated for a day over a rotating Earth; every
pass above 5 degrees is listed.  Then the point-ahead angle of a LEO-to-GEO
relay link is sampled over one orbit.
"""

from __future__ import annotations

import math

from lasercom_twin import geometry as g

site = g.PlatformSpec.ground(35.7101, 139.4884)
leo = g.PlatformSpec.leo(400e3, inclination_deg=51.6)
mask = math.radians(5.0)

passes = g.predict_passes(leo, site, mask, (0.0, 86400.0), rotating_earth=True)
print(f"{len(passes)} passes above 5 deg in one day (orbital period {leo.period:.1f} s)")
for p in passes:
    print(f"  rise {p.rise:8.1f} s  duration {p.duration:6.1f} s  max elevation {math.degrees(p.max_elevation):5.1f} deg")
print(f"longest pass {max(p.duration for p in passes):.1f} s")

geo = g.PlatformSpec.geo(139.4884)
series = g.point_ahead_series(leo, geo, (0.0, leo.period), 60.0)
print("\nLEO-to-GEO point-ahead over one orbit")
print(f"  min {series.point_ahead.min() * 1e6:.2f} urad, max {series.point_ahead.max() * 1e6:.2f} urad")

# first-order 2 v / c against explicit light-time iteration
alpha = g.point_ahead_light_time([4.2e7, 0.0, 0.0], [0.0, 7500.0, 0.0])
print(f"\n7.5 km/s transverse: light-time iteration {alpha * 1e6:.4f} urad, 2v/c {2 * 7500 / 299792458 * 1e6:.4f} urad")
